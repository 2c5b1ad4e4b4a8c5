"""Session fixtures: the big Monte Carlo trace stores shared by the
experiment tests and the acceptance suite.  Everything is seeded, so the
stores (and every test that uses them) are deterministic."""

import numpy as np
import pytest

from wignerlab.ensemble import EnsembleConfig, build_matrix
from wignerlab.experiments import RunPlan, collect_traces
from wignerlab.heavytail import calibrate
from wignerlab.spectral import resolvent_diag
from wignerlab.semicircle import g_sc

MASTER_SEED = 20260810
SCALING_ALPHAS = (2.5, 3.0, 3.5)
SCALING_N = (128, 256, 512, 1024)
SCALING_REPS = 400
Z_FIT = 1 + 1j
Z_AUX = 2j
COV_N = (256, 1024)
COV_REPS = 2000


def scaling_plan(alpha, mode="raw"):
    return RunPlan(alpha=alpha, N_list=SCALING_N, replicates_per_N=SCALING_REPS,
                   z_grid=(Z_FIT, Z_AUX), master_seed=MASTER_SEED, mode=mode,
                   threads=2)


@pytest.fixture(scope="session")
def scaling_store():
    """{alpha: {N: (400, 2) complex array}} for the raw ensemble at (1+i, 2i)."""
    return {alpha: collect_traces(scaling_plan(alpha)) for alpha in SCALING_ALPHAS}


@pytest.fixture(scope="session")
def truncated_store():
    """Same sweep at alpha=3 with the cut entries, for raw/cut slope agreement."""
    return collect_traces(scaling_plan(3.0, mode="truncated"))


@pytest.fixture(scope="session")
def covariance_store():
    """alpha=3, N in {256, 1024}, 2000 replicates at (2i, 1+i)."""
    plan = RunPlan(alpha=3.0, N_list=COV_N, replicates_per_N=COV_REPS,
                   z_grid=(Z_AUX, Z_FIT), master_seed=MASTER_SEED + 1, threads=2)
    return collect_traces(plan)


@pytest.fixture(scope="session")
def diag_dev_means():
    """Mean max_j |G_jj - g_sc(2i)| per N for the cut ensemble at alpha=3."""
    dist = calibrate(3.0)
    z = 2j
    ref = g_sc(z)
    reps = 384
    out = {}
    for N in SCALING_N:
        cfg = EnsembleConfig(N=N, dist=dist, mode="truncated", epsilon=0.01,
                             seed=MASTER_SEED + 2)
        total = 0.0
        for rep in range(reps):
            sample = build_matrix(cfg, rep)
            total += float(np.abs(resolvent_diag(sample, z) - ref).max())
        out[N] = total / reps
    return out
