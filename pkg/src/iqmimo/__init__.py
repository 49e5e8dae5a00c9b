"""Uplink massive MIMO with transceiver I/Q imbalance: simulation and large-system analysis."""
from .model import (BsIqi, ChannelRealization, CovarianceProfile, Topology, UtIqi, augment,
                    build_bs_iqi, build_ut_iqi, covariance_profile, draw_channel, hex_topology,
                    iid_profile, permutation_matrix, ula_covariance)
from .scenario import Scenario, draw_iqi, substream

__version__ = "0.1.0"
from .detection import ergodic_sum_rate, sinr_components
from .asymptotics import closed_form_sinr, theorem1_sinr, theorem2_sinr
from .montecarlo import ResultRow, ScenarioConfig, run_point, run_sweep
