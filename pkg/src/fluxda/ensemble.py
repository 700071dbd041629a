"""Ensemble statistics, anomalies and multiplicative inflation.

An ensemble is an array of shape ``(k, n_lat, n_lon)``; member ``m`` is
``ens[m]``. Observation ensembles are ``(n_obs, k)`` arrays, one row per
observed pixel, matching the anomaly-matrix layout.
"""

import numpy as np


def check_ensemble(ens, min_members=2):
    ens = np.asarray(ens, dtype=float)
    if ens.ndim != 3:
        raise ValueError(f"ensemble must have shape (k, n_lat, n_lon), got {ens.shape}")
    if ens.shape[0] < min_members:
        raise ValueError(f"ensemble needs at least {min_members} members, got {ens.shape[0]}")
    return ens


def ensemble_mean(ens):
    return check_ensemble(ens, 1).mean(axis=0)


def ensemble_std(ens):
    """Pixel-wise sample standard deviation (divisor k - 1)."""
    return check_ensemble(ens).std(axis=0, ddof=1)


def anomaly_matrix(ens, pixels=None):
    """Member deviations from the mean as an ``(n_pixels, k)`` matrix.

    ``pixels`` is a flat row-major index array; ``None`` means every pixel.
    """
    ens = check_ensemble(ens, 1)
    flat = ens.reshape(ens.shape[0], -1).T
    if pixels is not None:
        flat = flat[np.asarray(pixels, dtype=int)]
    return flat - flat.mean(axis=1, keepdims=True)


def inflate(ens, rho):
    """Spread every member away from the ensemble mean by a factor ``rho``."""
    return _inflate(check_ensemble(ens, 1), rho, axis=0)


def inflate_observations(obs_ens, rho):
    return _inflate(np.asarray(obs_ens, dtype=float), rho, axis=-1)


def _inflate(values, rho, axis):
    if not rho > 0:
        raise ValueError(f"inflation factor must be positive, got {rho}")
    if rho == 1:
        return values.copy()
    mean = values.mean(axis=axis, keepdims=True)
    return mean + rho * (values - mean)


def simulate_observations(ens, obs):
    """Apply the pixel-selection observation operator to every member.

    Returns an ``(n_obs, k)`` array of member values at ``obs`` pixels.
    """
    ens = check_ensemble(ens, 1)
    flat = ens.reshape(ens.shape[0], -1)
    return flat[:, obs.flat_index(ens.shape[-1])].T
