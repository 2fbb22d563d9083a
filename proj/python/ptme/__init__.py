"""Measurement framework for surrogate-assisted traffic light optimization."""

from ._core import (
    ConfigError,
    DesignSpace,
    DimensionError,
    DomainError,
    MlpModel,
    Objective,
    ProtocolError,
    SyntheticObjective,
    TrafficInstance,
    TrafficObjective,
    average_entropy,
    derive_seed,
    fit_lognormal,
    kendall_tau_a,
    kendall_tau_b,
    latin_hypercube_sample,
    load_instance,
    make_preset,
    mann_whitney_u,
    mape,
    measure,
    precision_metrics,
    preset_names,
    pso_run,
    quantize,
    rmse,
    run_study,
    sample_design,
    sapso_run,
    simulate,
    traffic_objective,
    train,
    uniform_random_sample,
)

__all__ = [name for name in dir() if not name.startswith("_")]
