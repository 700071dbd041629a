# %% [markdown]
"""
A small twin experiment
=======================

A hidden truth and four copies of one ensemble are evolved with the same
transport draws. Every day the Earth-facing half of the truth is observed
and each copy is updated by a different method (``none`` is the free
running control). The full-size version is ``fluxda compare`` with the
default configuration.
"""

# %%
import tempfile

import numpy as np

from fluxda import parse_config_text, run_compare

cfg = parse_config_text("""
n_lat = 60
n_lon = 120
k = 16
duration = 2592000   # 30 days
""")

with tempfile.TemporaryDirectory() as out:
    result = run_compare(cfg, out=out)

# %%
for method, series in result.rmse.items():
    print(f"{method:5s} forecast RMSE, mean of last 10 days: {np.mean(series.values[-10:]):6.3f} G")

# %% [markdown]
"""
The diagnostics keep the median ensemble spread over unobserved pixels. The
global ETKF drives it toward zero (ensemble collapse) while the LETKF keeps
the far side as spread out as the forecast left it.
"""

# %%
last = {row["method"]: row for row in result.diagnostics[-4:]}
print(f"initial median std {np.median(result.initial_std):.2f}")
for method, row in last.items():
    print(f"{method:5s} median unobserved std {row['median_std_unobserved']:6.3f}   "
          f"truth RMSE {row['truth_rmse_all']:6.3f}")
