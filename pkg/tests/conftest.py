from datetime import date

import numpy as np
import pytest

from epfbench.features import FeatureMatrix
from epfbench.ingest import SyntheticRecipe, generate_synthetic

# criterion key -> ("PASS" | "FAIL" | "SKIP", detail)
ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def small_dataset():
    """Ten weeks of synthetic data."""
    return generate_synthetic(SyntheticRecipe(start=date(2020, 1, 1), end=date(2020, 3, 10)), seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_matrix(rng, n=60, p=3, noise=0.1, coef=None):
    X = rng.normal(size=(n, p))
    coef = np.arange(1, p + 1, dtype=float) if coef is None else np.asarray(coef, dtype=float)
    y = X @ coef + 2.0 + noise * rng.normal(size=n)
    return FeatureMatrix.from_arrays(X, y)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{status}  {key}: {detail}")
