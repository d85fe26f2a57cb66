import numpy as np
import pytest

from veinguard.flowsim import SimConfig, run_many


def make_blobs(n_per_class=500, separation=6.0, d=5, seed=0):
    """Three isotropic unit-variance Gaussians whose centres sit ``separation`` apart."""
    rng = np.random.default_rng(seed)
    centres = np.zeros((3, d))
    centres[1, 0] = separation
    centres[2, 0] = separation / 2
    centres[2, 1] = separation * np.sqrt(3) / 2
    X = np.vstack([rng.normal(c, 1.0, size=(n_per_class, d)) for c in centres])
    y = np.repeat(np.arange(3), n_per_class)
    return X, y


@pytest.fixture(scope="session")
def blobs():
    return make_blobs()


@pytest.fixture(scope="session")
def small_blobs():
    return make_blobs(n_per_class=60, seed=3)


@pytest.fixture(scope="session")
def sim_records():
    return run_many(SimConfig(), 20)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
