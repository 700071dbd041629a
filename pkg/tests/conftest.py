import numpy as np
import pytest

from fluxda.grid import Grid
from fluxda.observations import ObservationSet


def random_obs(grid, rng, fraction=0.5, sigma=(0.5, 3.0), epoch=0.0):
    """Observations at a random subset of pixels with random values and noise."""
    n = max(1, int(round(fraction * grid.size)))
    flat = np.sort(rng.choice(grid.size, size=n, replace=False))
    return ObservationSet(epoch, flat // grid.n_lon, flat % grid.n_lon,
                          rng.normal(0.0, 5.0, n), rng.uniform(*sigma, n), grid)


def kalman_oracle(ens, obs, rho=1.0):
    """State-space Kalman update with the sampled covariance of the inflated ensemble.

    Returns the analysis mean and covariance (flattened pixels). Independent of
    the weight-space code: builds P_f and H explicitly and inverts in
    observation space.
    """
    k = ens.shape[0]
    x = ens.reshape(k, -1).T.astype(float)
    mean = x.mean(axis=1)
    x = mean[:, None] + rho * (x - mean[:, None])
    anomalies = x - mean[:, None]
    P = anomalies @ anomalies.T / (k - 1)
    H = np.zeros((len(obs), x.shape[0]))
    H[np.arange(len(obs)), obs.flat_index()] = 1.0
    R = np.diag(obs.sigma ** 2)
    S = H @ P @ H.T + R
    K = P @ H.T @ np.linalg.inv(S)
    mean_a = mean + K @ (obs.values - H @ mean)
    P_a = (np.eye(len(mean)) - K @ H) @ P
    return mean_a, P_a


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid_8x16():
    return Grid(8, 16)


# one PASS/FAIL line per acceptance criterion, printed after the run
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (report.when != "call" and not report.failed):
        return
    number, title = mark.args
    ok = report.passed and _criteria.get(number, (True,))[0]
    _criteria[number] = (ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, title = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
