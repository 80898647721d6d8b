"""Coordinated and adaptive regenerating codes for distributed storage."""

from .cost_model import (
    CodeParams,
    CostPoint,
    RecoveryScenario,
    arc,
    check_correct,
    classic_costs,
    enumerate_scenarios,
    mbcr,
    mscr,
)
from .errors import CRCError
from .tradeoff import min_gamma_for_alpha, trace_curve

__version__ = "0.1.0"

__all__ = [
    "CodeParams", "CostPoint", "RecoveryScenario", "arc", "check_correct", "classic_costs",
    "enumerate_scenarios", "mbcr", "mscr", "CRCError", "min_gamma_for_alpha", "trace_curve",
]
