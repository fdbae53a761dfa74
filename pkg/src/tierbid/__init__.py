"""Two-stage auction model for tiered (cold/hot) cloud storage.

Stage one accepts files for storage and decides hot replicas; stage two
accepts access bids per scenario and schedules requests across tiers under
M/G/1 latency constraints.
"""
from .core_model import (FileSpec, ProfitBreakdown, Scenario, StageOneDecision, StageTwoDecision,
                         SystemConfig, check_stage_one_feasible, check_stage_two_feasible, profit)
from .errors import (DimensionError, InfeasibleInstanceError, InstabilityError,
                     InstanceTooLargeError, InvalidInputError, TierbidError,
                     UndefinedMomentsError)

__version__ = "0.1.0"

__all__ = [
    "FileSpec", "ProfitBreakdown", "Scenario", "StageOneDecision", "StageTwoDecision",
    "SystemConfig", "check_stage_one_feasible", "check_stage_two_feasible", "profit",
    "DimensionError", "InfeasibleInstanceError", "InstabilityError", "InstanceTooLargeError",
    "InvalidInputError", "TierbidError", "UndefinedMomentsError",
]
