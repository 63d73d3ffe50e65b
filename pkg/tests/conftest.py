import sys

import numpy as np
import pytest

from finq import qgroup
from finq.cli import default_manifest_path, load_manifest, run_suite


@pytest.fixture(scope="session")
def corpus():
    return load_manifest(default_manifest_path())


@pytest.fixture(scope="session")
def all_report(corpus):
    """One run of every suite on the bundled corpus, shared by the acceptance tests."""
    return run_suite(corpus, "all")


@pytest.fixture(scope="session")
def catalog():
    z2, z3, s3 = qgroup.cyclic_table(2), qgroup.cyclic_table(3), qgroup.symmetric3_table()
    return {
        "trivial": qgroup.trivial(),
        "CZ2": qgroup.group_algebra(z2, "CZ2"),
        "CZ3": qgroup.group_algebra(z3, "CZ3"),
        "CS3": qgroup.group_algebra(s3, "CS3"),
        "FZ2": qgroup.function_algebra(z2, "FZ2"),
        "FZ3": qgroup.function_algebra(z3, "FZ3"),
        "FS3": qgroup.function_algebra(s3, "FS3"),
        "KP": qgroup.kac_paljutkin(),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, d, spread=1.0):
    """Positive definite d x d matrix with eigenvalues in [1, 1 + spread]."""
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    u, _ = np.linalg.qr(x)
    w = 1.0 + spread * rng.random(d)
    return (u * w) @ u.conj().T


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
