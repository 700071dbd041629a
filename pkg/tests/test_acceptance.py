"""Acceptance criteria, one test (or small group) per criterion.

Run with ``pytest tests/test_acceptance.py``; a summary line per criterion is
printed at the end of the session. The twin-experiment criteria share one
full-scale default comparison run (180x360, k=16, 60 days).
"""

import hashlib
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import kalman_oracle, random_obs
from fluxda.assimilation import (AssimConfig, enls_assimilate, etkf_assimilate, letkf_assimilate,
                                 local_observation_count)
from fluxda.ensemble import ensemble_mean, ensemble_std, inflate
from fluxda.evaluation import read_rmse_csv
from fluxda.grid import Grid
from fluxda.config import parse_config
from fluxda.observations import ObservationSet
from fluxda.runner import run_compare
from fluxda.transport import DAY, TransportParams, advect_rotation, random_emergence, supergranular_step

GLOBAL_RADII = dict(r_theta=2 * np.pi, loc_base=2 * np.pi, loc_growth=0.0)


def rel_close(a, b, rtol, scale=None):
    """max |a - b| within rtol of the larger magnitude (or of ``scale``)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    ref = np.maximum(np.abs(a).max(), np.abs(b).max()) if scale is None else scale
    return np.abs(a - b).max() <= rtol * ref


# 1 -------------------------------------------------------------------------

@pytest.mark.acceptance(1, "scalar Kalman oracle (ETKF and LETKF, single pixel)")
def test_scalar_kalman_oracle():
    gen = np.random.default_rng(1)
    g = Grid(1, 1)
    t0 = time.perf_counter()
    worst = 0.0
    for k in (2, 8, 16):
        for _ in range(200):
            ens = gen.normal(gen.normal(0, 10), gen.uniform(0.1, 10), (k, 1, 1))
            y, sigma = gen.normal(0, 10), gen.uniform(0.1, 10)
            obs = ObservationSet(0.0, [0], [0], [y], [sigma], g)
            x = ens[:, 0, 0]
            x_mean, var_f = x.mean(), x.var(ddof=1)
            expected = x_mean + var_f / (var_f + sigma ** 2) * (y - x_mean)
            # the natural size of the quantities being blended
            scale = max(abs(expected), abs(x_mean), abs(y))
            for analysis in (etkf_assimilate(ens, obs, AssimConfig("etkf", rho=1.0)),
                             letkf_assimilate(ens, obs, AssimConfig("letkf", rho=1.0))):
                err = abs(analysis[:, 0, 0].mean() - expected) / scale
                worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    print(f"worst relative error {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------

@pytest.mark.acceptance(2, "LETKF equals ETKF in the global limit")
def test_global_limit_equivalence():
    gen = np.random.default_rng(2)
    g = Grid(8, 16)
    t0 = time.perf_counter()
    for _ in range(50):
        ens = gen.normal(0, gen.uniform(1, 20), (8,) + g.shape)
        obs = random_obs(g, gen, fraction=gen.uniform(0.05, 1.0))
        rho = gen.uniform(1.0, 2.0)
        a = etkf_assimilate(ens, obs, AssimConfig("etkf", rho=rho))
        b = letkf_assimilate(ens, obs, AssimConfig("letkf", rho=rho, **GLOBAL_RADII))
        for m in range(8):
            assert rel_close(a[m], b[m], 1e-8), m
    assert time.perf_counter() - t0 < 10.0


# 3 -------------------------------------------------------------------------

@pytest.mark.acceptance(3, "ETKF matches a brute-force state-space Kalman update")
def test_brute_force_kalman():
    gen = np.random.default_rng(3)
    t0 = time.perf_counter()
    for shape in ((1, 1), (1, 2), (2, 2), (2, 3), (1, 8), (2, 4)):
        g = Grid(*shape)
        for k in (9, 12, 20):
            for _ in range(10):
                ens = gen.normal(0, 5, (k,) + g.shape)
                obs = random_obs(g, gen, fraction=gen.uniform(0.1, 1.0))
                rho = float(gen.choice([1.0, 1.3]))
                out = etkf_assimilate(ens, obs, AssimConfig("etkf", rho=rho))
                mean_a, P_a = kalman_oracle(ens, obs, rho)
                flat = out.reshape(k, -1)
                dev = flat - flat.mean(axis=0)
                assert rel_close(flat.mean(axis=0), mean_a, 1e-8)
                assert rel_close(dev.T @ dev / (k - 1), P_a, 1e-8)
    assert time.perf_counter() - t0 < 10.0


# 5 -------------------------------------------------------------------------

@pytest.mark.acceptance(5, "ENLS locality, exhaustive on 8x16")
def test_enls_locality():
    gen = np.random.default_rng(5)
    g = Grid(8, 16)
    ens = gen.normal(0, 5, (8,) + g.shape)
    obs = random_obs(g, gen, fraction=0.5)
    observed = obs.mask()
    base = enls_assimilate(ens, obs)
    t0 = time.perf_counter()
    for i, j in zip(*np.nonzero(~observed)):
        other = ens.copy()
        other[:, i, j] += gen.normal(0, 3, 8)
        changed = np.any(enls_assimilate(other, obs) != base, axis=0)
        changed[i, j] = False
        assert not changed.any(), (i, j)
    for o in range(len(obs)):
        values = obs.values.copy()
        values[o] += 1.0
        changed = np.any(enls_assimilate(ens, obs.with_values(values)) != base, axis=0)
        assert np.count_nonzero(changed) == 1
        assert changed[obs.rows[o], obs.cols[o]]
    assert time.perf_counter() - t0 < 10.0


# 6 -------------------------------------------------------------------------

@pytest.mark.acceptance(6, "LETKF locality over 100 (pixel, observation) pairs")
def test_letkf_locality():
    gen = np.random.default_rng(6)
    g = Grid(90, 180)  # 2 deg pixels so regions hold several observations
    cfg = AssimConfig("letkf", rho=1.5)
    ens = gen.normal(0, 5, (8,) + g.shape)
    obs = random_obs(g, gen, fraction=0.3)
    base = letkf_assimilate(ens, obs, cfg)
    t0 = time.perf_counter()
    pairs = 0
    for o in gen.choice(len(obs), 10, replace=False):
        single = ObservationSet(0.0, obs.rows[o:o + 1], obs.cols[o:o + 1], [0.0], [1.0], g)
        # pixels whose local region contains observation o
        reach = local_observation_count(single, cfg, g) > 0
        values = obs.values.copy()
        values[o] += gen.normal(0, 10)
        moved = letkf_assimilate(ens, obs.with_values(values), cfg)
        assert not np.array_equal(moved[:, obs.rows[o], obs.cols[o]], base[:, obs.rows[o], obs.cols[o]])
        # half the pixels just outside the region, half anywhere outside it
        near = np.zeros(g.shape, dtype=bool)
        r0 = obs.rows[o]
        near[max(r0 - 4, 0):r0 + 5] = True
        near_out = np.flatnonzero(near & ~reach)
        far_out = np.flatnonzero(~reach)
        picks = np.concatenate([gen.choice(near_out, 5, replace=False),
                                gen.choice(far_out, 5, replace=False)])
        for p in picks:
            i, j = divmod(int(p), g.n_lon)
            assert np.array_equal(moved[:, i, j], base[:, i, j]), (o, i, j)
            pairs += 1
    assert pairs == 100
    assert time.perf_counter() - t0 < 30.0


# 7 -------------------------------------------------------------------------

@pytest.mark.acceptance(7, "inflation contract")
def test_inflation_contract():
    gen = np.random.default_rng(7)
    for _ in range(50):
        k = int(gen.integers(2, 33))
        ens = gen.normal(gen.normal(0, 50), gen.uniform(0.1, 30), (k, 6, 9))
        rho = gen.uniform(0.2, 4.0)
        out = inflate(ens, rho)
        mean = ensemble_mean(ens)
        assert rel_close(ensemble_mean(out), mean, 1e-12, scale=np.abs(ens).max())
        assert rel_close(ensemble_std(out), rho * ensemble_std(ens), 1e-12)
        assert inflate(ens, 1.0).tobytes() == ens.tobytes()


# 8 -------------------------------------------------------------------------

@pytest.mark.acceptance(8, "transport conservation on 100 random maps")
def test_transport_conservation():
    gen = np.random.default_rng(8)
    g = Grid()
    t0 = time.perf_counter()
    for _ in range(100):
        b = gen.normal(0, gen.uniform(1, 80), g.shape)
        p = TransportParams(dt=gen.uniform(0.1, 5) * DAY)
        rows = advect_rotation(b, p)
        assert np.all(np.abs(rows.sum(axis=1) - b.sum(axis=1)) <= 1e-12 * np.abs(b).sum(axis=1))
        moved = supergranular_step(b, p, gen)
        total = np.sum(g.area * np.abs(b))
        assert abs(np.sum(g.area * moved) - np.sum(g.area * b)) <= 1e-10 * total
    assert time.perf_counter() - t0 < 30.0


# 9 -------------------------------------------------------------------------

@pytest.mark.acceptance(9, "emergence calibration")
def test_emergence_calibration():
    t0 = time.perf_counter()
    inc = random_emergence(np.zeros((180, 360)), TransportParams(dt=DAY), np.random.default_rng(9))
    mean_abs = np.abs(inc).mean()
    print(f"mean |B| after one day: {mean_abs:.4f} G")
    assert abs(mean_abs - 2.1) <= 0.02 * 2.1
    assert time.perf_counter() - t0 < 5.0


# twin experiment shared by 4, 10 and 11 ------------------------------------

class Recorder:
    def __init__(self, cfg):
        self.letkf_cfg = cfg.assim("letkf")
        self.letkf_checked = 0
        self.letkf_violations = []
        self.obs_digest = {}
        self.etkf_epoch20 = None

    def __call__(self, method, epoch, forecast, analysis, obs):
        digest = hashlib.sha256(obs.values.tobytes() + obs.sigma.tobytes()
                                + obs.flat_index().tobytes()).hexdigest()
        self.obs_digest.setdefault(epoch, set()).add(digest)
        if method == "letkf":
            untouched = local_observation_count(obs, self.letkf_cfg) == 0
            if not np.array_equal(analysis[:, untouched], forecast[:, untouched]):
                self.letkf_violations.append(epoch)
            self.letkf_checked += int(untouched.sum())
        if method == "etkf" and epoch == 20:
            self.etkf_epoch20 = (ensemble_std(analysis), ~obs.mask())


@pytest.fixture(scope="session")
def default_compare(tmp_path_factory):
    cfg = parse_config(None)
    out = tmp_path_factory.mktemp("compare_default")
    rec = Recorder(cfg)
    t0 = time.perf_counter()
    result = run_compare(cfg, out=str(out), on_analysis=rec)
    elapsed = time.perf_counter() - t0
    print(f"default compare: {elapsed:.1f} s")
    return cfg, out, result, rec, elapsed


@pytest.mark.slow
@pytest.mark.acceptance(4, "ETKF collapse and LETKF leaves unobserved pixels untouched")
def test_ensemble_collapse(default_compare):
    cfg, _, result, rec, elapsed = default_compare
    assert (cfg.n_lat, cfg.n_lon, cfg.k, cfg.n_steps, cfg.rho) == (180, 360, 16, 60, 1.5)
    assert not cfg.inflate_unobserved
    spread, unobserved = rec.etkf_epoch20
    now = np.median(spread[unobserved])
    before = np.median(result.initial_std[unobserved])
    print(f"ETKF median unobserved std: {before:.3f} -> {now:.4f} after 20 epochs")
    assert now < 0.5 * before
    assert rec.letkf_checked > 0
    assert rec.letkf_violations == []
    assert elapsed < 600


@pytest.mark.slow
@pytest.mark.acceptance(11, "RMSE harness: control dominates every method")
def test_rmse_harness(default_compare):
    _, out, result, rec, elapsed = default_compare
    series = read_rmse_csv(out / "rmse.csv")
    assert sorted(series) == ["enls", "etkf", "letkf", "none"]
    epochs = series["none"].epochs
    assert len(epochs) == 60
    for s in series.values():
        assert s.epochs == epochs
        assert all(v >= 0 for v in s.values)
    # every method saw the same observations at every epoch
    assert all(len(d) == 1 for d in rec.obs_digest.values())
    tail = {m: float(np.mean(s.values[-30:])) for m, s in series.items()}
    print("final-30-epoch mean RMSE: " + ", ".join(f"{m} {v:.3f}" for m, v in tail.items()))
    for m in ("enls", "etkf", "letkf"):
        assert tail["none"] > tail[m], m
    assert elapsed < 900


def artifact_files(root):
    found = []
    for dirpath, _, files in os.walk(root):
        for name in files:
            if name.endswith((".csv", ".map")):
                found.append(os.path.relpath(os.path.join(dirpath, name), root))
    return sorted(found)


@pytest.mark.slow
@pytest.mark.acceptance(10, "determinism across runs and thread counts")
def test_determinism(default_compare, tmp_path):
    _, out, _, _, first = default_compare
    cfg_path = tmp_path / "threads.cfg"
    cfg_path.write_text("workers = 4\n")
    env = dict(os.environ, OMP_NUM_THREADS="3", OPENBLAS_NUM_THREADS="3", MKL_NUM_THREADS="3")
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "fluxda", "compare", "--config", str(cfg_path),
                           "--out", str(tmp_path / "again")], env=env, capture_output=True, text=True)
    second = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    names = artifact_files(out)
    assert names == artifact_files(tmp_path / "again")
    assert "rmse.csv" in names and any(n.endswith(".map") for n in names)
    for name in names:
        assert (out / name).read_bytes() == (tmp_path / "again" / name).read_bytes(), name
    assert first + second < 600
