"""Scores and diagnostics for assimilation runs."""

from dataclasses import dataclass, field
import csv

import numpy as np

from .ensemble import ensemble_std
from .grid import Grid


def forecast_rmse(forecast_mean, obs):
    """RMSE of the forecast mean against the observations, unweighted per pixel."""
    if len(obs) == 0:
        raise ValueError("forecast RMSE needs at least one observation")
    forecast_mean = np.asarray(forecast_mean, dtype=float)
    diff = forecast_mean[obs.rows, obs.cols] - obs.values
    return float(np.sqrt(np.mean(diff * diff)))


def std_map(ens):
    return ensemble_std(ens)


def _region_mask(grid, region, observed):
    if region == "all":
        return np.ones(grid.shape, dtype=bool)
    if observed is None:
        raise ValueError(f"region {region!r} needs the observed-pixel mask")
    observed = np.asarray(observed, dtype=bool)
    if region == "observed":
        return observed
    if region == "unobserved":
        return ~observed
    raise ValueError(f"region must be 'all', 'observed' or 'unobserved', got {region!r}")


def truth_rmse(analysis_mean, truth, region="all", observed=None):
    """Area-weighted RMSE against the truth over ``region``.

    ``observed`` is a boolean grid marking observed pixels; it is required
    for the ``observed`` and ``unobserved`` regions.
    """
    analysis_mean = np.asarray(analysis_mean, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if analysis_mean.shape != truth.shape:
        raise ValueError("analysis and truth grids differ")
    grid = Grid.from_shape(truth.shape)
    mask = _region_mask(grid, region, observed)
    if not mask.any():
        raise ValueError(f"region {region!r} is empty")
    w = grid.area[mask]
    diff = (analysis_mean - truth)[mask]
    return float(np.sqrt(np.sum(w * diff * diff) / np.sum(w)))


def flux_balance(bmap):
    """Signed and unsigned area-weighted flux in gauss steradian."""
    bmap = np.asarray(bmap, dtype=float)
    area = Grid.from_shape(bmap.shape).area
    return float(np.sum(area * bmap)), float(np.sum(area * np.abs(bmap)))


@dataclass
class RmseSeries:
    method: str
    epochs: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def append(self, epoch, value):
        if self.epochs and epoch <= self.epochs[-1]:
            raise ValueError("epochs must be strictly increasing")
        if not value >= 0:
            raise ValueError(f"RMSE must be non-negative, got {value}")
        self.epochs.append(float(epoch))
        self.values.append(float(value))

    def __len__(self):
        return len(self.epochs)


CSV_HEADER = ["epoch_seconds", "rmse_gauss", "method"]


def write_rmse_csv(series, path):
    """Write one or more series in long format, one row per epoch and method."""
    if isinstance(series, RmseSeries):
        series = [series]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for s in series:
            for epoch, value in zip(s.epochs, s.values):
                writer.writerow([f"{epoch:.17g}", f"{value:.17g}", s.method])


def read_rmse_csv(path):
    """Read a long-format RMSE file back into a ``{method: RmseSeries}`` dict."""
    out = {}
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected RMSE header {header}")
        for epoch, value, method in reader:
            out.setdefault(method, RmseSeries(method)).append(float(epoch), float(value))
    return out
