"""Run configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored; unknown keys are rejected. Angles
given in degrees carry a ``_deg`` suffix; times are in seconds.
"""

from dataclasses import dataclass, field
import math

from .assimilation import AssimConfig
from .grid import DEG
from .observations import NoiseModel
from .transport import CARRINGTON_RATE, DAY, TransportParams


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = "".join([f"line {line}: " if line else "", f"{key}: " if key else ""])
        super().__init__(where + message)
        self.key, self.line = key, line


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not finite: {text!r}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


def _method(text):
    text = text.strip().lower()
    if text not in ("none", "enls", "etkf", "letkf"):
        raise ValueError("method must be one of none, enls, etkf, letkf")
    return text


# key -> (parser, default)
KEYS = {
    "n_lat": (int, 180),
    "n_lon": (int, 360),
    "k": (int, 16),
    "seed": (_seed, 0),
    "duration": (_float, 60 * DAY),
    "dt": (_float, DAY),
    "obs_cadence": (_float, DAY),
    "output_cadence": (_float, 10 * DAY),
    "map_every": (int, 0),
    "write_observations": (_bool, False),
    "workers": (int, 1),
    "out": (str, "out"),
    # assimilation
    "method": (_method, "none"),
    "rho": (_float, 1.5),
    "r_theta_deg": (_float, 3.0),
    "loc_base_deg": (_float, 3.0),
    "loc_growth_deg": (_float, 12.0),
    "loc_theta_max_deg": (_float, 85.0),
    "inflate_unobserved": (_bool, False),
    # flux transport
    "rot_a": (_float, 2.913),
    "rot_b": (_float, -0.405),
    "rot_c": (_float, -0.422),
    "frame_rate": (_float, CARRINGTON_RATE),
    "flow_amp": (_float, 8.0),
    "flow_exp_sin": (_float, 0.3),
    "flow_exp_cos": (_float, 0.1),
    "solar_radius": (_float, 6.957e8),
    "diffusion_coeff": (_float, 300.0),
    "shutoff_gauss": (_float, 50.0),
    "emergence_abs_mean": (_float, 2.1),
    # observer and noise
    "sub_earth_lon0_deg": (_float, 0.0),
    "sub_earth_lat_deg": (_float, 0.0),
    "synodic_period": (_float, 27.2753 * DAY),
    "limb_cutoff_mu": (_float, 0.1),
    "relative_error": (_float, 0.03),
    "sigma_floor": (_float, 0.2),
    "limb_exponent": (_float, 2.0),
    "perturb_observations": (_bool, True),
    # initial ensemble and truth
    "init_corr_deg": (_float, 10.0),
    "init_amp": (_float, 5.0),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in KEYS.items()})
    lines: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def replace(self, **changes):
        values = dict(self.values)
        for key, value in changes.items():
            if key not in KEYS:
                raise ConfigError("unknown key", key)
            values[key] = value
        cfg = RunConfig(values, dict(self.lines))
        cfg.validate()
        return cfg

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def steps_per_obs(self):
        return int(round(self.obs_cadence / self.dt))

    @property
    def transport(self):
        v = self.values
        return TransportParams(
            A=v["rot_a"], B=v["rot_b"], C=v["rot_c"], frame_rate=v["frame_rate"],
            flow_amp=v["flow_amp"], flow_exp_sin=v["flow_exp_sin"], flow_exp_cos=v["flow_exp_cos"],
            solar_radius=v["solar_radius"], diffusion_coeff=v["diffusion_coeff"],
            shutoff_gauss=v["shutoff_gauss"], emergence_abs_mean=v["emergence_abs_mean"], dt=v["dt"])

    def assim(self, method=None):
        v = self.values
        return AssimConfig(
            method=method or v["method"], rho=v["rho"], r_theta=v["r_theta_deg"] * DEG,
            loc_base=v["loc_base_deg"] * DEG, loc_growth=v["loc_growth_deg"] * DEG,
            loc_theta_max=v["loc_theta_max_deg"] * DEG, inflate_unobserved=v["inflate_unobserved"])

    @property
    def noise(self):
        return NoiseModel(self.relative_error, self.sigma_floor, self.limb_exponent)

    def validate(self):
        def fail(key, message):
            raise ConfigError(message, key, self.lines.get(key))

        v = self.values
        for key in ("n_lat", "n_lon"):
            if v[key] < 1:
                fail(key, "must be positive")
        if v["k"] < 2:
            fail("k", "ensemble needs at least 2 members")
        if v["workers"] < 1:
            fail("workers", "must be at least 1")
        if v["map_every"] < 0:
            fail("map_every", "must be >= 0")
        if v["duration"] < 0:
            fail("duration", "must be >= 0")
        for key in ("dt", "obs_cadence", "output_cadence", "synodic_period", "solar_radius",
                    "shutoff_gauss", "init_corr_deg"):
            if not v[key] > 0:
                fail(key, "must be positive")
        for key in ("diffusion_coeff", "emergence_abs_mean", "relative_error", "sigma_floor",
                    "limb_exponent", "init_amp", "loc_growth_deg"):
            if v[key] < 0:
                fail(key, "must be >= 0")
        if not v["rho"] > 0:
            fail("rho", "inflation factor must be > 0")
        if not v["r_theta_deg"] > 0:
            fail("r_theta_deg", "must be positive")
        if not v["loc_base_deg"] > 0:
            fail("loc_base_deg", "must be positive")
        if not 0 < v["loc_theta_max_deg"] <= 90:
            fail("loc_theta_max_deg", "must lie in (0, 90]")
        if not 0 < v["limb_cutoff_mu"] < 1:
            fail("limb_cutoff_mu", "must lie in (0, 1)")
        if v["relative_error"] == 0 and v["sigma_floor"] == 0:
            fail("sigma_floor", "observation noise must be positive somewhere "
                                "(relative_error and sigma_floor are both 0)")
        for key in ("duration", "obs_cadence", "output_cadence"):
            if not math.isclose(v[key] / v["dt"], round(v[key] / v["dt"]), abs_tol=1e-9):
                fail(key, "must be a whole number of dt steps")
        if round(v["obs_cadence"] / v["dt"]) < 1:
            fail("obs_cadence", "must be at least one step")
        return self

    def resolved_text(self):
        """Every key with its effective value, one per line, in a parseable form."""
        def show(value):
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, float):
                return repr(value)
            return str(value)
        return "".join(f"{key} = {show(self.values[key])}\n" for key in KEYS)


def parse_config_text(text):
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or not key:
            raise ConfigError("expected 'key = value'", line=lineno)
        if key not in KEYS:
            raise ConfigError("unknown key", key, lineno)
        if key in cfg.lines:
            raise ConfigError(f"duplicate key (first set on line {cfg.lines[key]})", key, lineno)
        parser = KEYS[key][0]
        try:
            cfg.values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {value!r} ({exc})", key, lineno) from None
        cfg.lines[key] = lineno
    return cfg.validate()


def parse_config(path=None):
    """Read a config file; ``None`` gives all defaults."""
    if path is None:
        return RunConfig().validate()
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())
