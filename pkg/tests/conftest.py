import os

# single-threaded BLAS keeps fits reproducible and avoids oversubscription
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest

from rarecast.model import ClassWeights, LagConfig, ModelParams, design_from_arrays


def random_instance(rng, n=50, d=3, q=2, pos_rate=0.3):
    x = rng.normal(size=(n, d))
    y = (rng.random(n) < 0.2).astype(np.int8)
    target = (rng.random(n) < pos_rate).astype(np.int8)
    design = design_from_arrays(x, y, target, LagConfig(q))
    lag = LagConfig(q)
    params = ModelParams(
        rng.normal(scale=0.5, size=(lag.width, d)),
        rng.normal(scale=0.5, size=lag.width),
        float(rng.normal()),
        lag,
        x_mean=rng.normal(size=d),
        x_scale=rng.uniform(0.5, 2.0, size=d),
    )
    weights = ClassWeights(*rng.uniform(0.1, 5.0, size=2))
    return design, params, weights


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
