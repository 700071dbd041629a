"""Photospheric flux transport with ensemble data assimilation (ENLS, ETKF, LETKF)."""

from .assimilation import (AnalysisSolution, AssimConfig, assimilate, enls_assimilate,
                           etkf_assimilate, letkf_assimilate, reconstruct_members,
                           symmetric_sqrt, w_space_analysis)
from .ensemble import (anomaly_matrix, ensemble_mean, ensemble_std, inflate,
                       simulate_observations)
from .config import ConfigError, RunConfig, parse_config, parse_config_text
from .evaluation import RmseSeries, flux_balance, forecast_rmse, std_map, truth_rmse
from .grid import DEG, Grid, LocalRegion, local_region, longitudinal_radius, region_members
from .mapio import read_checkpoint, read_map, write_checkpoint, write_map
from .observations import (NoiseModel, ObservationSet, ObserverGeometry, noise_sigma,
                           read_observation_file, synthesize_observations, visible_pixels,
                           write_observation_file)
from .runner import run_compare, run_osse, run_simulate
from .transport import DAY, TransportParams, step

__version__ = "0.1.0"
