"""Surface flux transport of the photospheric radial field.

A map is advanced one step by operator splitting, in this order: differential
rotation, meridional flow, stochastic supergranular diffusion, and random
background flux emergence. Maps are ``(n_lat, n_lon)`` arrays in gauss.
"""

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid

DAY = 86400.0

# Carrington sidereal period, 25.38 days, as a rate in microradians/second.
CARRINGTON_RATE = 2.0 * np.pi / (25.38 * DAY) * 1e6


@dataclass(frozen=True)
class TransportParams:
    # differential rotation, microradians/second
    A: float = 2.913
    B: float = -0.405
    C: float = -0.422
    frame_rate: float = CARRINGTON_RATE
    # meridional flow
    flow_amp: float = 8.0  # m/s
    flow_exp_sin: float = 0.3
    flow_exp_cos: float = 0.1
    solar_radius: float = 6.957e8  # m
    diffusion_coeff: float = 300.0  # km^2/s
    shutoff_gauss: float = 50.0
    emergence_abs_mean: float = 2.1  # gauss per day
    dt: float = DAY

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.shutoff_gauss <= 0:
            raise ValueError(f"shutoff_gauss must be positive, got {self.shutoff_gauss}")
        if self.emergence_abs_mean < 0:
            raise ValueError(f"emergence_abs_mean must be >= 0, got {self.emergence_abs_mean}")
        if self.diffusion_coeff < 0:
            raise ValueError(f"diffusion_coeff must be >= 0, got {self.diffusion_coeff}")
        if self.solar_radius <= 0:
            raise ValueError(f"solar_radius must be positive, got {self.solar_radius}")

    def replace(self, **changes):
        return replace(self, **changes)


# an alternative published coefficient set with a slower polar rate
ALT_ROTATION = TransportParams(A=2.902, B=-0.464, C=-0.328)


def rotation_rate(theta, p=TransportParams()):
    """Sidereal rotation rate at latitude ``theta``, microradians/second."""
    s2 = np.sin(theta) ** 2
    return p.A + p.B * s2 + p.C * s2 * s2


def meridional_rate(theta, p=TransportParams()):
    """Signed meridional speed in m/s, positive northward (poleward in the north)."""
    theta = np.asarray(theta, dtype=float)
    # cos(pi/2) rounds to 6e-17, which a 0.1 power would lift to 0.02
    cos = np.where(np.abs(theta) >= 0.5 * np.pi, 0.0, np.abs(np.cos(theta)))
    speed = p.flow_amp * np.abs(np.sin(theta)) ** p.flow_exp_sin * cos ** p.flow_exp_cos
    return np.sign(theta) * speed


def advect_rotation(bmap, p=TransportParams()):
    """Shift each latitude row in longitude by its rotation relative to the frame.

    Periodic linear interpolation between the two bracketing cyclic shifts;
    each row keeps its signed sum.
    """
    bmap = np.asarray(bmap, dtype=float)
    grid = Grid.from_shape(bmap.shape)
    shift = (rotation_rate(grid.theta, p) - p.frame_rate) * 1e-6 * p.dt / grid.dphi
    out = np.empty_like(bmap)
    for i, s in enumerate(shift):
        n0 = int(np.floor(s))
        f = s - n0
        row = bmap[..., i, :]
        out[..., i, :] = (1.0 - f) * np.roll(row, n0, axis=-1) + f * np.roll(row, n0 + 1, axis=-1)
    return out


def advect_meridional(bmap, p=TransportParams()):
    """Semi-Lagrangian latitude transport by the meridional flow.

    Values are interpolated linearly from the departure latitude, which is
    clamped to the outermost row centers. Flux is not exactly conserved.
    """
    bmap = np.asarray(bmap, dtype=float)
    grid = Grid.from_shape(bmap.shape)
    n = grid.n_lat
    disp = meridional_rate(grid.theta, p) * p.dt / p.solar_radius / grid.dtheta
    src = np.clip(np.arange(n) - disp, 0.0, n - 1.0)
    lo = np.minimum(np.floor(src).astype(int), max(n - 2, 0))
    f = (src - lo)[:, None]
    hi = np.minimum(lo + 1, n - 1)
    return (1.0 - f) * bmap[..., lo, :] + f * bmap[..., hi, :]


def diffusion_step_size(p):
    """Per-axis angular standard deviation of one random-walk step, radians."""
    return np.sqrt(2.0 * p.diffusion_coeff * 1e6 * p.dt) / p.solar_radius


def supergranular_step(bmap, p, rng):
    """Random-walk dispersal of weak flux.

    Every pixel below ``shutoff_gauss`` in magnitude moves its flux by an
    isotropic Gaussian displacement on the sphere and deposits it bilinearly
    on the four cells around the landing point (longitude periodic, latitude
    clamped). Stronger pixels keep their flux. Total area-weighted signed
    flux is conserved.
    """
    bmap = np.asarray(bmap, dtype=float)
    grid = Grid.from_shape(bmap.shape)
    # draw for every pixel so the stream layout does not depend on the field
    step_north, step_east = rng.standard_normal((2,) + grid.shape)
    sigma = diffusion_step_size(p)
    mobile = np.abs(bmap) < p.shutoff_gauss
    if sigma == 0.0 or not mobile.any():
        return bmap.copy()

    rows, cols = np.nonzero(mobile)
    theta = grid.theta[rows]
    y = rows + sigma * step_north[rows, cols] / grid.dtheta
    x = cols + sigma * step_east[rows, cols] / np.cos(theta) / grid.dphi
    y0 = np.floor(y)
    x0 = np.floor(x)
    fy = y - y0
    fx = x - x0
    y0 = y0.astype(int)
    x0 = x0.astype(int)
    flux = bmap[rows, cols] * grid.area[rows, cols]

    targets = []
    weights = []
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        r = np.clip(y0 + dy, 0, grid.n_lat - 1)
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            c = np.mod(x0 + dx, grid.n_lon)
            targets.append(r * grid.n_lon + c)
            weights.append(flux * wy * wx)
    deposited = np.bincount(np.concatenate(targets), weights=np.concatenate(weights),
                            minlength=grid.size).reshape(grid.shape)
    out = np.where(mobile, 0.0, bmap)
    return out + deposited / grid.area


def emergence_sigma(p):
    """Per-step Gaussian standard deviation of the background flux increment."""
    # E|X| = sigma * sqrt(2/pi) for a centred Gaussian
    return p.emergence_abs_mean * np.sqrt(0.5 * np.pi) * np.sqrt(p.dt / DAY)


def random_emergence(bmap, p, rng):
    bmap = np.asarray(bmap, dtype=float)
    noise = rng.standard_normal(bmap.shape)
    if p.emergence_abs_mean == 0:
        return bmap.copy()
    return bmap + emergence_sigma(p) * noise


def step(bmap, p, rng):
    bmap = advect_rotation(bmap, p)
    bmap = advect_meridional(bmap, p)
    bmap = supergranular_step(bmap, p, rng)
    return random_emergence(bmap, p, rng)
