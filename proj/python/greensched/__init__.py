"""Carbon-aware serverless scheduling simulator."""

from ._core import (
    compare_campaign,
    convert_lbs_per_mwh_to_g_per_kwh,
    energy_estimate_kwh,
    functional_units_per_day,
    haversine_km,
    normalize_scores,
    run_campaign,
    run_experiment,
    sci,
    synthetic_constant_arrivals,
    validate_config,
    weighted_moer,
)

__all__ = [
    "compare_campaign",
    "convert_lbs_per_mwh_to_g_per_kwh",
    "energy_estimate_kwh",
    "functional_units_per_day",
    "haversine_km",
    "normalize_scores",
    "run_campaign",
    "run_experiment",
    "sci",
    "synthetic_constant_arrivals",
    "validate_config",
    "weighted_moer",
]
