"""Link-level Monte-Carlo simulator for 2-Tx space-time block codes with
an iterative MMSE/PIC receiver and soft-in/soft-out convolutional decoding."""

from .stcodes import Scheme, DispersionSet, dispersion_set, encode
from .harness import Scenario, StopRule, resolve_scenario, run_point, sweep, required_ebn0

__all__ = [
    "Scheme", "DispersionSet", "dispersion_set", "encode",
    "Scenario", "StopRule", "resolve_scenario", "run_point", "sweep",
    "required_ebn0",
]

__version__ = "0.1.0"
