"""Joint energy beamforming and time allocation for harvest-then-transmit networks."""
from .model import (
    ChannelSet,
    EnergyCovariance,
    NumericalError,
    Solution,
    SystemParams,
    TimeAllocation,
    ValidationError,
    sum_rate,
    validate,
)
from .fast_solver import solve
from .reference_solver import solve_bca, solve_deterministic
from .channel_sim import ScenarioConfig, run_monte_carlo

__version__ = "0.1.0"
