"""Ensemble analysis kernels: global ETKF, localized LETKF and pixel-wise ENLS.

ETKF and LETKF solve the Kalman update in the k-dimensional weight space
spanned by the forecast anomalies and rebuild members with the symmetric
square root of the weight-space analysis covariance. ENLS blends each
observed pixel of each member with its observation using only the pixel's
ensemble variance.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .ensemble import anomaly_matrix, check_ensemble, inflate
from .grid import Grid, LOC_BASE, LOC_GROWTH, LOC_THETA_MAX, R_THETA, region_offsets

METHODS = ("enls", "etkf", "letkf")


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class AssimConfig:
    method: str = "letkf"
    rho: float = 1.5
    r_theta: float = R_THETA
    loc_base: float = LOC_BASE
    loc_growth: float = LOC_GROWTH
    loc_theta_max: float = LOC_THETA_MAX
    inflate_unobserved: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.r_theta > 0:
            raise ValueError(f"r_theta must be positive, got {self.r_theta}")


@dataclass
class AnalysisSolution:
    w_bar: np.ndarray    # weight-space analysis mean, (..., k)
    P_tilde: np.ndarray  # weight-space analysis covariance, (..., k, k)
    Omega: np.ndarray    # symmetric square root of (k - 1) * P_tilde


def _symmetrize(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def symmetric_sqrt(m, tol=1e-10):
    """Symmetric positive semidefinite square root of ``m`` (stackable).

    Eigenvalues slightly below zero (within ``tol`` times the matrix norm) are
    clamped to zero; anything more negative, or an asymmetric input, raises
    :class:`NumericError`.
    """
    m = np.asarray(m, dtype=float)
    scale = np.linalg.norm(m, ord=2, axis=(-2, -1)) if m.size else np.zeros(m.shape[:-2])
    scale = np.maximum(scale, np.finfo(float).tiny)
    asym = np.linalg.norm(m - np.swapaxes(m, -1, -2), axis=(-2, -1)) / scale
    if np.any(asym > tol):
        raise NumericError(f"matrix is not symmetric (relative asymmetry {np.max(asym):.3g})")
    lam, vec = np.linalg.eigh(_symmetrize(m))
    worst = np.min(lam / scale[..., None]) if lam.size else 0.0
    if worst < -tol:
        raise NumericError(f"matrix is indefinite (smallest relative eigenvalue {worst:.3g})")
    root = np.sqrt(np.clip(lam, 0.0, None))
    return _symmetrize((vec * root[..., None, :]) @ np.swapaxes(vec, -1, -2))


def _solve_weights(C, b, k):
    """Weight-space update from ``C = Y^T R^-1 Y`` and ``b = Y^T R^-1 d``.

    A single eigendecomposition of ``(k-1) I + C`` gives the analysis
    covariance, the mean weights and the symmetric square root together.
    """
    A = (k - 1) * np.eye(k) + _symmetrize(C)
    lam, vec = np.linalg.eigh(A)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise NumericError("weight-space precision matrix is not positive definite")
    vt = np.swapaxes(vec, -1, -2)
    P = _symmetrize((vec / lam[..., None, :]) @ vt)
    w_bar = (P @ b[..., None])[..., 0]
    Omega = _symmetrize((vec * np.sqrt((k - 1) / lam)[..., None, :]) @ vt)
    return AnalysisSolution(w_bar, P, Omega)


def _check_noise(r_diag):
    r_diag = np.asarray(r_diag, dtype=float)
    if np.any(~(r_diag > 0)):
        raise ValueError("observation noise variances must be positive")
    return r_diag


def w_space_analysis(Y_f, R_diag, innovation, k):
    """Kalman update in ensemble weight space.

    ``Y_f`` holds the (inflated) observation anomalies, one row per
    observation; ``R_diag`` the noise variances; ``innovation`` the
    observation minus the ensemble-mean simulated observation.
    """
    Y_f = np.asarray(Y_f, dtype=float).reshape(-1, k)
    r_inv = 1.0 / _check_noise(R_diag).reshape(-1)
    innovation = np.asarray(innovation, dtype=float).reshape(-1)
    Yw = Y_f * r_inv[:, None]
    return _solve_weights(Yw.T @ Y_f, Yw.T @ innovation, k)


def reconstruct_members(x_mean, X_f, sol):
    """Analysis members ``x_mean + X_f (w_bar + Omega[:, i])`` as an ``(n, k)`` array."""
    W = sol.w_bar[..., :, None] + sol.Omega
    return np.asarray(x_mean, dtype=float)[..., None] + X_f @ W


def _observation_arrays(ens, obs):
    """Flat pixel index, observation anomalies, inverse variances and innovations."""
    flat = ens.reshape(ens.shape[0], -1)
    index = obs.flat_index(ens.shape[-1])
    y_ens = flat[:, index].T
    y_mean = y_ens.mean(axis=1)
    r_inv = 1.0 / _check_noise(obs.sigma ** 2)
    return index, y_ens - y_mean[:, None], r_inv, obs.values - y_mean


def etkf_assimilate(ens, obs, cfg=AssimConfig("etkf")):
    """Global ETKF: one weight-space solve using every observation."""
    ens = inflate(check_ensemble(ens), cfg.rho)
    if len(obs) == 0:
        return ens
    k = ens.shape[0]
    _, Y, r_inv, d = _observation_arrays(ens, obs)
    Yw = Y * r_inv[:, None]
    sol = _solve_weights(Yw.T @ Y, Yw.T @ d, k)
    X = anomaly_matrix(ens)
    x_mean = ens.reshape(k, -1).mean(axis=0)
    return reconstruct_members(x_mean, X, sol).T.reshape(ens.shape)


def letkf_assimilate(ens, obs, cfg=AssimConfig("letkf")):
    """Localized ETKF: an independent weight-space solve for every pixel.

    Pixel ``p`` uses only observations whose pixel lies in its local ellipse.
    Pixels without any local observation keep their forecast values
    (inflated only when ``cfg.inflate_unobserved`` is set).
    """
    forecast = check_ensemble(ens)
    k = forecast.shape[0]
    grid = Grid.from_shape(forecast.shape)
    ens = inflate(forecast, cfg.rho)
    out = (ens if cfg.inflate_unobserved else forecast).copy()
    if len(obs) == 0:
        return out

    index, Y, r_inv, d = _observation_arrays(ens, obs)
    n_obs = len(index)
    # slot n_obs is a blank observation with zero weight for unobserved pixels
    slot = np.full(grid.size, n_obs)
    slot[index] = np.arange(n_obs)
    Yw_ext = np.vstack([Y * r_inv[:, None], np.zeros((1, k))])
    Y_ext = np.vstack([Y, np.zeros((1, k))])
    d_ext = np.append(d, 0.0)

    flat = ens.reshape(k, -1)
    x_mean = flat.mean(axis=0)
    X = (flat - x_mean).T
    out_flat = out.reshape(k, -1)
    cols = np.arange(grid.n_lon)
    for i in range(grid.n_lat):
        dr, dc = region_offsets(grid, i, cfg.r_theta, cfg.loc_base, cfg.loc_growth, cfg.loc_theta_max)
        pix = (i + dr)[None, :] * grid.n_lon + np.mod(cols[:, None] + dc[None, :], grid.n_lon)
        local = slot[pix]
        active = np.nonzero((local < n_obs).any(axis=1))[0]
        if active.size == 0:
            continue
        local = local[active]
        Yl = Y_ext[local]
        Ywl = Yw_ext[local]
        C = np.swapaxes(Ywl, -1, -2) @ Yl
        b = (np.swapaxes(Ywl, -1, -2) @ d_ext[local][..., None])[..., 0]
        sol = _solve_weights(C, b, k)
        p = i * grid.n_lon + active
        W = sol.w_bar[:, :, None] + sol.Omega
        out_flat[:, p] = (x_mean[p][:, None] + (X[p][:, None, :] @ W)[:, 0, :]).T
    return out


def local_observation_count(obs, cfg, grid=None):
    """Number of observations inside each pixel's local ellipse, as a grid."""
    grid = grid or obs.grid
    observed = obs.mask().ravel().astype(np.int64)
    counts = np.zeros(grid.shape, dtype=np.int64)
    cols = np.arange(grid.n_lon)
    for i in range(grid.n_lat):
        dr, dc = region_offsets(grid, i, cfg.r_theta, cfg.loc_base, cfg.loc_growth, cfg.loc_theta_max)
        pix = (i + dr)[None, :] * grid.n_lon + np.mod(cols[:, None] + dc[None, :], grid.n_lon)
        counts[i] = observed[pix].sum(axis=1)
    return counts


def enls_assimilate(ens, obs, cfg=AssimConfig("enls")):
    """Pixel-by-pixel least-squares blend of each member with the observation.

    Only observed pixels change. The gain uses the pixel's ensemble sample
    variance; no inflation is applied.
    """
    ens = check_ensemble(ens)
    out = ens.copy()
    if len(obs) == 0:
        return out
    k = ens.shape[0]
    flat = out.reshape(k, -1)
    index = obs.flat_index(ens.shape[-1])
    x_f = flat[:, index]
    var_f = x_f.var(axis=0, ddof=1)
    var_o = obs.sigma ** 2
    total = var_f + var_o
    degenerate = total == 0
    if degenerate.any():
        warnings.warn(f"{int(degenerate.sum())} pixels have zero forecast and observation "
                      "variance; their gain is set to 0", RuntimeWarning, stacklevel=2)
    gain = np.divide(var_f, total, out=np.zeros_like(var_f), where=~degenerate)
    flat[:, index] = x_f + gain * (obs.values - x_f)
    return out


_KERNELS = {"enls": enls_assimilate, "etkf": etkf_assimilate, "letkf": letkf_assimilate}


def assimilate(ens, obs, cfg):
    return _KERNELS[cfg.method](ens, obs, cfg)
