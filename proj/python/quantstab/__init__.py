"""Data-driven stabilization of linear systems with logarithmically quantized feedback."""

from ._quantstab import (
    DimensionError,
    HinfUndefined,
    InputError,
    LogQuantizer,
    check_data,
    coarsest,
    delta_from_rho,
    frequency_response_norm,
    hinf_norm_bisection,
    mahler_measure,
    rho_from_delta,
    simulate_quantized_closed_loop,
    stabilize,
    verify,
)

__all__ = [
    "DimensionError",
    "HinfUndefined",
    "InputError",
    "LogQuantizer",
    "check_data",
    "coarsest",
    "delta_from_rho",
    "frequency_response_norm",
    "hinf_norm_bisection",
    "mahler_measure",
    "rho_from_delta",
    "simulate_quantized_closed_loop",
    "stabilize",
    "verify",
]
