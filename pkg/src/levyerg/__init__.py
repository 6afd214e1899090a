"""Lyapunov ergodicity analysis and Monte Carlo simulation for Levy-type processes."""

from .asymptotics import ConstantsReport, RadialGrid, analyze, estimate_constants, fit_power_lower_bound
from .growth import eval_generator_V, growth_at, growth_profile, lemma1_rhs
from .model import (
    BoundedSymmetric1D,
    Cone,
    CustomDrift,
    CustomKernel,
    LinearDrift,
    LyapunovParams,
    ModelError,
    ModelSpec,
    NoJumps,
    PowerLawStable,
    PowerRadialDrift,
    ScaledKernel,
    StateIndependentStable,
    ZeroDrift,
    eval_V,
    grad_V,
    hessian_V,
)
from .modelfile import dump_model, dumps_model, load_model, loads_model
from .simulator import SimConfig, empirical_rate_report, estimate_tv, simulate_ensemble
from .verdict import RateFunction, Verdict, check_symbol_condition, check_theorem2, eval_symbol, psi, run_verdict

__version__ = "0.1.0"

__all__ = [
    "ConstantsReport",
    "RadialGrid",
    "analyze",
    "estimate_constants",
    "fit_power_lower_bound",
    "eval_generator_V",
    "growth_at",
    "growth_profile",
    "lemma1_rhs",
    "BoundedSymmetric1D",
    "Cone",
    "CustomDrift",
    "CustomKernel",
    "LinearDrift",
    "LyapunovParams",
    "ModelError",
    "ModelSpec",
    "NoJumps",
    "PowerLawStable",
    "PowerRadialDrift",
    "ScaledKernel",
    "StateIndependentStable",
    "ZeroDrift",
    "eval_V",
    "grad_V",
    "hessian_V",
    "dump_model",
    "dumps_model",
    "load_model",
    "loads_model",
    "SimConfig",
    "empirical_rate_report",
    "estimate_tv",
    "simulate_ensemble",
    "RateFunction",
    "Verdict",
    "check_symbol_condition",
    "check_theorem2",
    "eval_symbol",
    "psi",
    "run_verdict",
]
