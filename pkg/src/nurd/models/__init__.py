from .gbt import GbtHyperparams, LatencyModel, Tree, fit_gbt, predict_latency
from .logistic import PS_FLOOR, PropensityModel, estimate_ps, fit_logistic

__all__ = [
    "GbtHyperparams",
    "LatencyModel",
    "PS_FLOOR",
    "PropensityModel",
    "Tree",
    "estimate_ps",
    "fit_gbt",
    "fit_logistic",
    "predict_latency",
]
