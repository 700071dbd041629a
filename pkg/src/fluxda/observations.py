"""Observation sets: Earth-side visibility, limb-weighted noise, synthesis, files.

Observations sit on grid pixel centers and carry their own noise standard
deviation; the observation error covariance is diagonal.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .grid import Grid


class ObservationFormatError(ValueError):
    pass


@dataclass
class ObservationSet:
    epoch: float
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    sigma: np.ndarray
    grid: Grid = field(default_factory=Grid)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=int).ravel()
        self.cols = np.asarray(self.cols, dtype=int).ravel()
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.sigma = np.asarray(self.sigma, dtype=float).ravel()
        n = len(self.rows)
        if not len(self.cols) == len(self.values) == len(self.sigma) == n:
            raise ValueError("rows, cols, values and sigma must have equal length")
        if n:
            if (self.rows.min() < 0 or self.rows.max() >= self.grid.n_lat
                    or self.cols.min() < 0 or self.cols.max() >= self.grid.n_lon):
                raise ValueError("observation pixel outside the grid")
            if len(np.unique(self.flat_index())) != n:
                raise ValueError("duplicate observation pixels")
            # zero sigma is allowed for noiseless diagnostics; analyses reject it
            if not np.all(self.sigma >= 0):
                raise ValueError("observation sigma must be non-negative")

    def __len__(self):
        return len(self.rows)

    def flat_index(self, n_lon=None):
        return self.rows * (self.grid.n_lon if n_lon is None else n_lon) + self.cols

    def mask(self):
        """Boolean grid that is True at observed pixels."""
        m = np.zeros(self.grid.shape, dtype=bool)
        m[self.rows, self.cols] = True
        return m

    def with_values(self, values):
        return ObservationSet(self.epoch, self.rows, self.cols, values, self.sigma, self.grid)

    def subset(self, keep):
        return ObservationSet(self.epoch, self.rows[keep], self.cols[keep], self.values[keep],
                              self.sigma[keep], self.grid)

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return (self.epoch == other.epoch and self.grid == other.grid
                and all(np.array_equal(getattr(self, a), getattr(other, a))
                        for a in ("rows", "cols", "values", "sigma")))


@dataclass(frozen=True)
class ObserverGeometry:
    sub_earth_longitude: float = 0.0
    sub_earth_latitude: float = 0.0
    limb_cutoff_mu: float = 0.1

    def __post_init__(self):
        if not 0 < self.limb_cutoff_mu < 1:
            raise ValueError(f"limb_cutoff_mu must lie in (0, 1), got {self.limb_cutoff_mu}")


@dataclass(frozen=True)
class NoiseModel:
    relative_error: float = 0.03
    sigma_floor: float = 0.2  # gauss
    limb_exponent: float = 2.0


def heliocentric_mu(geom, theta, phi):
    """Cosine of the angle between a surface point and the sub-Earth point."""
    lat0 = geom.sub_earth_latitude
    return (np.sin(theta) * np.sin(lat0)
            + np.cos(theta) * np.cos(lat0) * np.cos(np.asarray(phi) - geom.sub_earth_longitude))


def mu_map(grid, geom):
    return heliocentric_mu(geom, grid.theta[:, None], grid.phi[None, :])


def visible_pixels(grid, geom):
    """``(rows, cols)`` of pixels whose center lies inside the limb cutoff."""
    return np.nonzero(mu_map(grid, geom) > geom.limb_cutoff_mu)


def noise_sigma(b_obs, mu, noise=NoiseModel()):
    """Observation noise: a relative error with a floor, growing toward the limb."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("noise is undefined for mu <= 0 (point not visible)")
    base = np.maximum(noise.sigma_floor, noise.relative_error * np.abs(b_obs))
    return base * mu ** (-noise.limb_exponent)


def synthesize_observations(truth, geom, noise, rng, epoch=0.0, perturb=True):
    """Noisy observations of ``truth`` at every visible pixel.

    With ``perturb=False`` the values equal the truth exactly but the noise
    model still sets the recorded sigma.
    """
    truth = np.asarray(truth, dtype=float)
    grid = Grid.from_shape(truth.shape)
    mu = mu_map(grid, geom)
    z = rng.standard_normal(grid.shape)
    rows, cols = np.nonzero(mu > geom.limb_cutoff_mu)
    b = truth[rows, cols]
    sigma = noise_sigma(b, mu[rows, cols], noise)
    values = b + sigma * z[rows, cols] if perturb else b.copy()
    return ObservationSet(epoch, rows, cols, values, sigma, grid)


HEADER = "OBS v1"


def write_observation_file(obs, path):
    lines = [f"{HEADER} {obs.grid.n_lat} {obs.grid.n_lon} {obs.epoch!r} {len(obs)}"]
    lines += [f"{r} {c} {v:.17g} {s:.17g}"
              for r, c, v, s in zip(obs.rows.tolist(), obs.cols.tolist(),
                                    obs.values.tolist(), obs.sigma.tolist())]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _number(text, lineno, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ObservationFormatError(f"line {lineno}: cannot parse {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise ObservationFormatError(f"line {lineno}: non-finite value {text!r}")
    return value


def read_observation_file(path):
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ObservationFormatError("line 1: missing header")
    head = lines[0].split()
    if len(head) != 6 or " ".join(head[:2]) != HEADER:
        raise ObservationFormatError(f"line 1: bad header {lines[0]!r}")
    n_lat, n_lon = _number(head[2], 1, int), _number(head[3], 1, int)
    epoch = _number(head[4], 1)
    n_records = _number(head[5], 1, int)
    if n_lat < 1 or n_lon < 1 or n_records < 0:
        raise ObservationFormatError(f"line 1: bad dimensions in {lines[0]!r}")
    grid = Grid(n_lat, n_lon)
    body = [(n, line) for n, line in enumerate(lines[1:], start=2) if line.strip()]
    if len(body) != n_records:
        raise ObservationFormatError(
            f"line {len(lines) + 1}: header declares {n_records} records, found {len(body)}")

    rows = np.empty(n_records, dtype=int)
    cols = np.empty(n_records, dtype=int)
    values = np.empty(n_records)
    sigma = np.empty(n_records)
    seen = set()
    for idx, (lineno, line) in enumerate(body):
        parts = line.split()
        if len(parts) != 4:
            raise ObservationFormatError(f"line {lineno}: expected 'row col value sigma'")
        r, c = _number(parts[0], lineno, int), _number(parts[1], lineno, int)
        if not (0 <= r < n_lat and 0 <= c < n_lon):
            raise ObservationFormatError(f"line {lineno}: pixel ({r}, {c}) outside the grid")
        if (r, c) in seen:
            raise ObservationFormatError(f"line {lineno}: duplicate pixel ({r}, {c})")
        seen.add((r, c))
        s = _number(parts[3], lineno)
        if s <= 0:
            raise ObservationFormatError(f"line {lineno}: sigma must be positive")
        rows[idx], cols[idx], values[idx], sigma[idx] = r, c, _number(parts[2], lineno), s
    return ObservationSet(epoch, rows, cols, values, sigma, grid)
