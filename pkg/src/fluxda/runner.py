"""Free runs and twin experiments (OSSE) driven by a :class:`RunConfig`.

A twin experiment evolves a hidden truth alongside one ensemble per method.
At every observation epoch the truth is observed on the Earth-facing disk,
the forecast mean is scored against the observations, the ensemble is
updated, and spread and truth errors are recorded.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import csv
import logging
import os

import numpy as np
from scipy.ndimage import gaussian_filter

from . import rng as streams
from .assimilation import assimilate, local_observation_count
from .ensemble import ensemble_mean, ensemble_std
from .evaluation import RmseSeries, forecast_rmse, truth_rmse, write_rmse_csv
from .grid import DEG, Grid
from .mapio import write_checkpoint, write_map
from .observations import ObserverGeometry, synthesize_observations, write_observation_file
from .transport import step

log = logging.getLogger(__name__)

COMPARE_METHODS = ("none", "enls", "etkf", "letkf")


def smooth_random_field(grid, corr_deg, amplitude, rng):
    """White noise smoothed to ``corr_deg`` and scaled to an area-weighted RMS."""
    noise = rng.standard_normal(grid.shape)
    sigma = (corr_deg * DEG / grid.dtheta, corr_deg * DEG / grid.dphi)
    field_ = gaussian_filter(noise, sigma, mode=("nearest", "wrap"))
    rms = np.sqrt(np.sum(grid.area * field_ ** 2) / np.sum(grid.area))
    return field_ * (amplitude / rms) if rms > 0 else field_


def initial_truth(cfg):
    grid = Grid(cfg.n_lat, cfg.n_lon)
    return smooth_random_field(grid, cfg.init_corr_deg, cfg.init_amp,
                               streams.stream(cfg.seed, streams.TRUTH, 0, streams.INIT))


def initial_ensemble(cfg):
    grid = Grid(cfg.n_lat, cfg.n_lon)
    return np.stack([
        smooth_random_field(grid, cfg.init_corr_deg, cfg.init_amp,
                            streams.stream(cfg.seed, m, 0, streams.INIT))
        for m in range(cfg.k)])


def advance_member(bmap, params, seed, member, first_step, n_steps):
    for s in range(first_step, first_step + n_steps):
        bmap = step(bmap, params, streams.stream(seed, member, s, streams.TRANSPORT))
    return bmap


def advance_ensemble(ens, params, seed, first_step, n_steps, workers=1):
    """Step every member; member ``m`` at step ``s`` draws from stream ``(seed, m, s)``."""
    if n_steps == 0:
        return np.array(ens, dtype=float, copy=True)
    jobs = range(len(ens))
    run = lambda m: advance_member(ens[m], params, seed, m, first_step, n_steps)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.stack(list(pool.map(run, jobs)))
    return np.stack([run(m) for m in jobs])


def sub_earth_longitude(cfg, t):
    """Carrington longitude of disk center at time ``t``; it drifts backwards at the synodic rate."""
    return np.mod(cfg.sub_earth_lon0_deg * DEG - 2.0 * np.pi * t / cfg.synodic_period, 2.0 * np.pi)


def geometry_at(cfg, t):
    return ObserverGeometry(float(sub_earth_longitude(cfg, t)), cfg.sub_earth_lat_deg * DEG,
                            cfg.limb_cutoff_mu)


def _ensure_out(out):
    os.makedirs(out, exist_ok=True)
    return out


def write_resolved_config(cfg, out):
    with open(os.path.join(out, "resolved-config"), "w", encoding="ascii", newline="\n") as fh:
        fh.write(cfg.resolved_text())


def run_simulate(cfg, out=None):
    """Free-running ensemble; writes mean and std maps at the output cadence.

    Ends with a checkpoint in ``<out>/checkpoint``. Returns the final ensemble.
    """
    out = _ensure_out(out or cfg.out)
    write_resolved_config(cfg, out)
    params = cfg.transport
    ens = initial_ensemble(cfg)
    every = int(round(cfg.output_cadence / cfg.dt))

    def emit(s):
        t = s * cfg.dt
        write_map(ensemble_mean(ens), t, os.path.join(out, f"mean_{s:06d}.map"))
        write_map(ensemble_std(ens), t, os.path.join(out, f"std_{s:06d}.map"))

    emit(0)
    done = 0
    while done < cfg.n_steps:
        n = min(every, cfg.n_steps - done)
        ens = advance_ensemble(ens, params, cfg.seed, done, n, cfg.workers)
        done += n
        if done % every == 0 or done == cfg.n_steps:
            emit(done)
    write_checkpoint(ens, done * cfg.dt, {"seed": cfg.seed, "next_step": done},
                     os.path.join(out, "checkpoint"))
    return ens


@dataclass
class OsseResult:
    rmse: dict = field(default_factory=dict)          # method -> RmseSeries
    diagnostics: list = field(default_factory=list)   # one dict per (epoch, method)
    initial_std: np.ndarray = None
    truth: np.ndarray = None
    ensembles: dict = field(default_factory=dict)     # method -> final analysis ensemble


DIAG_FIELDS = ["epoch_seconds", "method", "forecast_rmse", "truth_rmse_all", "truth_rmse_observed",
               "truth_rmse_unobserved", "median_std_observed", "median_std_unobserved", "n_obs"]


def run_osse(cfg, methods=None, out=None, on_analysis=None):
    """Twin experiment for each method in ``methods`` (``"none"`` is the free-running control).

    Every method starts from the same ensemble, uses the same transport draws
    and sees the same observation sequence. ``on_analysis`` is called as
    ``on_analysis(method, epoch, forecast, analysis, obs)`` after each update.
    """
    methods = tuple(methods or (cfg.method,))
    out = _ensure_out(out or cfg.out)
    write_resolved_config(cfg, out)
    params = cfg.transport
    grid = Grid(cfg.n_lat, cfg.n_lon)

    truth = initial_truth(cfg)
    start = initial_ensemble(cfg)
    ens = {m: start.copy() for m in methods}
    result = OsseResult(rmse={m: RmseSeries(m) for m in methods}, initial_std=ensemble_std(start))

    every = cfg.steps_per_obs
    n_epochs = cfg.n_steps // every
    done = 0
    for epoch in range(1, n_epochs + 1):
        truth = advance_member(truth, params, cfg.seed, streams.TRUTH, done, every)
        for m in methods:
            ens[m] = advance_ensemble(ens[m], params, cfg.seed, done, every, cfg.workers)
        done += every
        t = done * cfg.dt

        obs = synthesize_observations(truth, geometry_at(cfg, t), cfg.noise,
                                      streams.stream(cfg.seed, streams.OBSERVER, epoch, streams.NOISE),
                                      epoch=t, perturb=cfg.perturb_observations)
        if cfg.write_observations:
            os.makedirs(os.path.join(out, "obs"), exist_ok=True)
            write_observation_file(obs, os.path.join(out, "obs", f"epoch_{epoch:04d}.obs"))
        observed = obs.mask()

        for m in methods:
            forecast = ens[m]
            score = forecast_rmse(ensemble_mean(forecast), obs)
            result.rmse[m].append(t, score)
            analysis = forecast if m == "none" else assimilate(forecast, obs, cfg.assim(m))
            if on_analysis is not None:
                on_analysis(m, epoch, forecast, analysis, obs)
            ens[m] = analysis
            mean, spread = ensemble_mean(analysis), ensemble_std(analysis)
            row = {"epoch_seconds": t, "method": m, "forecast_rmse": score, "n_obs": len(obs),
                   "median_std_observed": float(np.median(spread[observed])),
                   "median_std_unobserved": float(np.median(spread[~observed]))}
            for region in ("all", "observed", "unobserved"):
                row[f"truth_rmse_{region}"] = truth_rmse(mean, truth, region, observed)
            result.diagnostics.append(row)
            if cfg.map_every and epoch % cfg.map_every == 0:
                _write_maps(out, m, f"{epoch:04d}", t, mean, spread, truth)
        log.info("epoch %d/%d done", epoch, n_epochs)

    result.truth = truth
    result.ensembles = ens
    t_end = done * cfg.dt
    write_map(truth, t_end, os.path.join(out, "truth_final.map"))
    for m in methods:
        _write_maps(out, m, "final", t_end, ensemble_mean(ens[m]), ensemble_std(ens[m]), truth)
        write_rmse_csv(result.rmse[m], os.path.join(out, f"rmse_{m}.csv"))
    write_rmse_csv([result.rmse[m] for m in methods], os.path.join(out, "rmse.csv"))
    _write_diagnostics(result.diagnostics, os.path.join(out, "diagnostics.csv"))
    return result


def run_compare(cfg, out=None, on_analysis=None):
    """Control plus every method from identical initial ensembles and observations."""
    return run_osse(cfg, COMPARE_METHODS, out, on_analysis)


def _write_maps(out, method, tag, t, mean, spread, truth):
    maps = os.path.join(out, "maps")
    os.makedirs(maps, exist_ok=True)
    write_map(mean, t, os.path.join(maps, f"{method}_mean_{tag}.map"))
    write_map(spread, t, os.path.join(maps, f"{method}_std_{tag}.map"))
    write_map(mean - truth, t, os.path.join(maps, f"{method}_truth_error_{tag}.map"))


def _write_diagnostics(rows, path):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DIAG_FIELDS)
        for row in rows:
            writer.writerow([row[k] if isinstance(row[k], str) else format(row[k], ".17g")
                             for k in DIAG_FIELDS])
