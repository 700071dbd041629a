# %% [markdown]
"""
Grid and localization regions
=============================

Maps live on an equal-angle latitude-longitude grid. Row 0 is the
southernmost row and pixel areas are exact solid angles, so they sum to 4 pi.
"""

# %%
import numpy as np

from fluxda import DEG, Grid, local_region, region_members

grid = Grid(180, 360)
print("shape", grid.shape, "total area / 4pi =", grid.area.sum() / (4 * np.pi))
print("first and last row centers (deg):", grid.theta[0] / DEG, grid.theta[-1] / DEG)

# %% [markdown]
"""
The local analysis region of a pixel is an ellipse. Its latitudinal radius is
fixed at 3 degrees while the longitudinal one widens toward the poles, so the
region covers a similar surface distance at every latitude.
"""

# %%
for row in (90, 135, 170, 179):
    region = local_region(grid, row, 0)
    rows, cols = region_members(grid, region)
    print(f"latitude {grid.theta[row] / DEG:6.1f}  r_phi {region.r_phi / DEG:5.2f} deg  "
          f"{len(rows):3d} pixels")

# %% [markdown]
"""
Regions wrap around in longitude: a pixel next to the 0/360 seam pulls in
neighbours from the far end of the row.
"""

# %%
rows, cols = region_members(grid, local_region(grid, 90, 0))
print(sorted(set(cols.tolist())))
