import time

import numpy as np
import pytest

from localmap import BlobSpec, LocalMapConfig, fit, generate_blobs, silhouette

BENCH_SEEDS = range(5)
VARIANTS = {
    "localmap": dict(enable_nn_weighting=True, enable_local_fp=True),
    "pacmap": dict(enable_nn_weighting=False, enable_local_fp=False),
    "weighting_only": dict(enable_nn_weighting=True, enable_local_fp=False),
    "local_fp_only": dict(enable_nn_weighting=False, enable_local_fp=True),
}


def bench_spec(seed):
    return BlobSpec(n_clusters=10, points_per_cluster=500, dim=50, center_spread=50.0,
                    cluster_std=1.0, bridge_fraction=0.02, seed=seed)


class BlobRuns:
    """Lazily computed fits on the 10-blob benchmark, shared across test modules."""

    def __init__(self):
        self._cache = {}

    def get(self, variant, seed):
        key = (variant, seed)
        if key not in self._cache:
            X = generate_blobs(bench_spec(seed))
            cfg = LocalMapConfig(seed=seed, **VARIANTS[variant])
            t0 = time.perf_counter()
            state, runlog = fit(X, cfg)
            self._cache[key] = dict(X=X, state=state, log=runlog, seconds=time.perf_counter() - t0,
                                    silhouette=silhouette(state.coords, X.labels))
        return self._cache[key]


@pytest.fixture(scope="session")
def blob_runs():
    return BlobRuns()


_ACCEPTANCE = {}


class AcceptanceRecorder:
    def record(self, number, passed, detail):
        """``passed=None`` marks a skipped criterion."""
        _ACCEPTANCE[number] = (passed, detail)
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"criterion {number}: {status}  {detail}")
