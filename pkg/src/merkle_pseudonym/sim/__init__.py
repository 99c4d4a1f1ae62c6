from .registry import (
    ABOVE,
    ACCEPTED,
    AT_OR_BELOW,
    REFUSED,
    REJECTED,
    OrgRegistry,
    Outcome,
    UserAgent,
    cross_prove,
    register,
    threshold_query,
)
from .scenario import BUNDLED, ScenarioResult, audit, common_pseudonyms, load_scenario, run_scenario

__all__ = [
    "ABOVE", "ACCEPTED", "AT_OR_BELOW", "REFUSED", "REJECTED", "BUNDLED",
    "OrgRegistry", "Outcome", "UserAgent", "ScenarioResult",
    "register", "cross_prove", "threshold_query",
    "run_scenario", "load_scenario", "audit", "common_pseudonyms",
]
