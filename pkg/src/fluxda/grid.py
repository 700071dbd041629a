"""Equal-angle latitude-longitude grid and elliptical localization regions.

Latitude rows run south to north: row 0 is the southernmost band. Longitude
columns start at 0 and increase eastward. All angles are radians.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEG = np.pi / 180.0

# Localization defaults: 3 deg latitudinal radius, longitudinal radius growing
# from 3 deg at the Equator to 15 deg at 85 deg latitude.
R_THETA = 3.0 * DEG
LOC_BASE = 3.0 * DEG
LOC_GROWTH = 12.0 * DEG
LOC_THETA_MAX = 85.0 * DEG

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    n_lat: int = 180
    n_lon: int = 360

    def __post_init__(self):
        if int(self.n_lat) < 1 or int(self.n_lon) < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.n_lat}x{self.n_lon}")

    @classmethod
    def from_shape(cls, shape):
        return cls(int(shape[-2]), int(shape[-1]))

    @property
    def shape(self):
        return (self.n_lat, self.n_lon)

    @property
    def size(self):
        return self.n_lat * self.n_lon

    @property
    def dtheta(self):
        return np.pi / self.n_lat

    @property
    def dphi(self):
        return 2.0 * np.pi / self.n_lon

    @cached_property
    def theta(self):
        """Latitude of each row center."""
        # offset form keeps the middle row of an odd grid exactly on the Equator
        return (np.arange(self.n_lat) + 0.5 - 0.5 * self.n_lat) * self.dtheta

    @cached_property
    def phi(self):
        """Longitude of each column center."""
        return (np.arange(self.n_lon) + 0.5) * self.dphi

    @cached_property
    def area(self):
        """Exact solid angle of each pixel, shape (n_lat, n_lon).

        Equals ``cos(theta) * dtheta * dphi`` up to a constant factor
        ``sinc(dtheta / 2)``, and sums to 4 pi.
        """
        w = np.cos(self.theta) * 2.0 * np.sin(0.5 * self.dtheta) * self.dphi
        return np.repeat(w[:, None], self.n_lon, axis=1)

    def check(self, field):
        """Raise if ``field`` does not end in this grid's shape."""
        field = np.asarray(field)
        if field.shape[-2:] != self.shape:
            raise ValueError(f"array shape {field.shape} does not match grid {self.shape}")
        return field


def pixel_coords(grid, i, j):
    if not (0 <= i < grid.n_lat and 0 <= j < grid.n_lon):
        raise IndexError(f"pixel ({i}, {j}) outside {grid.n_lat}x{grid.n_lon} grid")
    return float(grid.theta[i]), float(grid.phi[j])


def wrap_angle(dphi):
    """Map longitude differences into (-pi, pi]."""
    out = np.mod(dphi + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def longitudinal_radius(theta, base=LOC_BASE, growth=LOC_GROWTH, theta_max=LOC_THETA_MAX):
    """Longitudinal localization radius at latitude ``theta``.

    Grows linearly with ``|theta|`` and is held at ``base + growth`` poleward
    of ``theta_max``.
    """
    if base <= 0 or growth < 0 or not 0 < theta_max <= 0.5 * np.pi:
        raise ValueError("need base > 0, growth >= 0 and 0 < theta_max <= pi/2")
    return base + growth * np.minimum(np.abs(theta), theta_max) / theta_max


@dataclass(frozen=True)
class LocalRegion:
    center: tuple
    r_theta: float
    r_phi: float

    def __post_init__(self):
        if self.r_theta <= 0 or self.r_phi < self.r_theta:
            raise ValueError(f"need 0 < r_theta <= r_phi, got {self.r_theta}, {self.r_phi}")

    def contains(self, theta, phi):
        theta_c, phi_c = self.center
        d_theta = np.asarray(theta) - theta_c
        d_phi = wrap_angle(np.asarray(phi) - phi_c)
        q = (d_theta / self.r_theta) ** 2 + (d_phi / self.r_phi) ** 2
        # strict boundary; points within roundoff of the rim count as on it
        return q < 1.0 - BOUNDARY_TOL


def local_region(grid, i, j, r_theta=R_THETA, base=LOC_BASE, growth=LOC_GROWTH,
                 theta_max=LOC_THETA_MAX):
    theta, phi = pixel_coords(grid, i, j)
    return LocalRegion((theta, phi), r_theta, float(longitudinal_radius(theta, base, growth, theta_max)))


def region_members(grid, region):
    """Pixel indices ``(rows, cols)`` strictly inside ``region``."""
    inside = region.contains(grid.theta[:, None], grid.phi[None, :])
    return np.nonzero(inside)


def region_offsets(grid, i, r_theta=R_THETA, base=LOC_BASE, growth=LOC_GROWTH,
                   theta_max=LOC_THETA_MAX):
    """Row and column offsets of the local region around any pixel of row ``i``.

    Every pixel on a row has the same region shape, so the offsets are shared;
    column offsets are taken modulo ``n_lon``. Rows beyond the poles are
    dropped rather than wrapped.
    """
    region = local_region(grid, i, 0, r_theta, base, growth, theta_max)
    rows, cols = region_members(grid, region)
    return rows - i, cols
