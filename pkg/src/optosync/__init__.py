"""Mean-field simulation of chaos synchronization in optomechanical cavity networks."""

from .dynamics import build_model, make_state, subsystem_channels
from .integrate import IntegrationPlan, Method, Trajectory, integrate, integrate_adaptive
from .lyapunov import LleEstimate, LleMethod, LleOptions, estimate_lle, lle_benettin, lle_wolf
from .model import ModelParams, RateInput, Setup, to_angular, validate_regime
from .scenarios import ScenarioConfig, ScenarioReport, preset, run_scenario, sweep

__version__ = "0.1.0"
