"""Linear time-varying impulse responses of the mobile-to-mobile shallow-water acoustic channel."""

from .analysis import delay_report, doppler_frequency, los_delay, time_shift, verify_grid
from .geometry import Eigenpath, Position, Trajectory, Waveguide, enumerate_eigenpaths, position_at
from .ltv_core import (CirKind, DynamicScenario, GreensFunction, LtvCirGrid, SignalBuffer, cir_grid,
                       convert_type1_to_type2, convert_type2_to_type1, filter_type1, filter_type2,
                       green_from_scenario, type1_cir, type2_cir)
from .scenarios import CaseKind, CaseSpec, build, dynamic_lti_response
from .static_channel import (FrequencyGrid, absorption_db_per_km, bottom_reflection, path_gain,
                             sparse_cir, static_cfr, static_cir)

__version__ = "0.1.0"
