import warnings

import numpy as np
import pytest

import saddlenewton as sn

warnings.filterwarnings("ignore", message="kappa_m=.*exceeds")


@pytest.fixture(scope="session")
def cubic50():
    """The n=50 benchmark instance with its analytic saddle."""
    n = 50
    rho = 1.0 / (20.0 * n)
    inst = sn.make_cubic_bilinear(n, rho, seed=0)
    z0 = np.zeros(2 * n)
    zs = inst.saddle()
    return {"problem": inst, "rho": rho, "z0": z0, "saddle": zs,
            "dist": np.linalg.norm(z0 - zs)}


@pytest.fixture(scope="session")
def newton50(cubic50):
    cfg = sn.SolverConfig(rho=cubic50["rho"], T=100, seed=0)
    return sn.newton_minmax(cubic50["problem"], cubic50["z0"], cfg)


@pytest.fixture(scope="session")
def inexact50(cubic50):
    cfg = sn.SolverConfig(rho=cubic50["rho"], T=100, seed=0, kappa_m=0.1)
    return sn.inexact_newton_minmax(cubic50["problem"], cubic50["z0"], cfg)


@pytest.fixture(scope="session")
def auc500():
    from saddlenewton.problems import make_auc_problem, synthetic_binary_dataset

    ds = synthetic_binary_dataset(500, seed=0)
    return make_auc_problem(ds, 1.0 / 500.0)
