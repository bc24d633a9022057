"""Radial scalar-flat Kähler metrics on line bundles.

Thin wrapper over the C++ core. Profiles are ``MomentumProfile`` objects;
the remaining functions take plain floats and sequences.
"""

import json

from ._kahler import (
    DomainError,
    InvariantViolation,
    MomentumProfile,
    SingularMatrixError,
    ball_volume_proxy,
    barrier_check,
    block_inverse,
    check_boundary_extension,
    decay_experiment,
    exponential_profile,
    fiber_distance,
    fit_power_law,
    norm_to_tau,
    profile_from_json,
    scalar_curvature,
    scalar_flat_profile,
    schur_det,
    solve_prescribed_scalar,
)
from . import _kahler


def solve(b=2, s_hat=3.0, n=512, amplitude=None):
    """Fixed-point solve from a bump-perturbed scalar-flat background; returns the trace as a dict."""
    return json.loads(_kahler.solve(b, s_hat, n, amplitude))


def verify_all(seed=20240601):
    """Runs the acceptance suite; returns the parsed verdicts."""
    return json.loads(_kahler.verify_all(seed))


__all__ = [
    "DomainError",
    "InvariantViolation",
    "MomentumProfile",
    "SingularMatrixError",
    "ball_volume_proxy",
    "barrier_check",
    "block_inverse",
    "check_boundary_extension",
    "decay_experiment",
    "exponential_profile",
    "fiber_distance",
    "fit_power_law",
    "norm_to_tau",
    "profile_from_json",
    "scalar_curvature",
    "scalar_flat_profile",
    "schur_det",
    "solve",
    "solve_prescribed_scalar",
    "verify_all",
]
