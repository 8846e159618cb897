"""Observable statistics along trajectories.

Means, variances, the symmetrized covariance, and the variance growth
rate assembled from tr(rho_dot DeltaA^2) + 2 Cov(A, partial_t A).  The
state derivative comes from the model's generator when one is attached
to the trajectory and from central finite differences otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import LindbladModel, Trajectory, lindblad_rhs
from .linalg import require_hermitian
from .observables import TimeDependentObservable

EPS_SIGMA = 1e-6         # below this spread, bound ratios are not evaluated
VARIANCE_FLOOR = -1e-12  # round-off negatives above this are reported as 0

RHO_DOT_MODES = ("auto", "analytic", "finite_difference")


def expectation(rho: np.ndarray, m: np.ndarray) -> float:
    """tr(rho m) for Hermitian m; the imaginary part must be round-off."""
    m = require_hermitian(m, "observable matrix")
    if rho.shape != m.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {m.shape}")
    value = complex(np.trace(rho @ m))
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ValueError(f"expectation has non-negligible imaginary part {value.imag:.3e}")
    return value.real


def variance(rho: np.ndarray, m: np.ndarray) -> float:
    """tr(rho m^2) - tr(rho m)^2, clamped to 0 over round-off negatives."""
    m = require_hermitian(m, "observable matrix")
    mean = expectation(rho, m)
    second = float(np.trace(rho @ m @ m).real)
    var = second - mean * mean
    if var < VARIANCE_FLOOR * max(1.0, second):
        raise ValueError(f"variance {var:.3e} below the round-off floor; state is invalid")
    return max(var, 0.0)


def covariance_sym(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Symmetrized covariance (1/2)<{a, b}> - <a><b>."""
    a = require_hermitian(a, "first observable")
    b = require_hermitian(b, "second observable")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    half_anti = float(np.trace(rho @ (a @ b + b @ a)).real) / 2.0
    return half_anti - expectation(rho, a) * expectation(rho, b)


def covariance_real_part(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Re <a b> - <a><b>; coincides with covariance_sym for Hermitian input."""
    return float(np.trace(rho @ a @ b).real) - expectation(rho, a) * expectation(rho, b)


def rho_dot_delta_sq(rho_dot: np.ndarray, rho: np.ndarray, a: np.ndarray) -> float:
    """tr(rho_dot DeltaA^2) = tr(rho_dot a^2) - 2<a> tr(rho_dot a).

    Requires a traceless rho_dot; the <a>^2 tr(rho_dot) term is dropped
    on that ground.
    """
    a = require_hermitian(a, "observable matrix")
    tr = complex(np.trace(rho_dot))
    if abs(tr) > 1e-10 * max(1.0, float(np.max(np.abs(rho_dot)))):
        raise ValueError(f"rho_dot must be traceless, got trace {tr:.3e}")
    mean = expectation(rho, a)
    term_sq = float(np.trace(rho_dot @ a @ a).real)
    term_lin = float(np.trace(rho_dot @ a).real)
    return term_sq - 2.0 * mean * term_lin


@dataclass(frozen=True)
class StatPoint:
    """Statistics of A at one grid time."""

    t: float
    mean: float
    variance: float
    sigma: float
    cov: float           # Cov(A, partial_t A)
    rho_dot_term: float  # tr(rho_dot DeltaA^2)
    var_rate: float      # d(sigma^2)/dt = rho_dot_term + 2 cov


def state_derivative(
    traj: Trajectory, k: int, t: float, mode: str = "auto"
) -> np.ndarray:
    """rho_dot at grid index k, analytic or central finite difference."""
    if mode not in RHO_DOT_MODES:
        raise ValueError(f"rho_dot mode must be one of {RHO_DOT_MODES}, got {mode!r}")
    model_known = isinstance(traj.model, LindbladModel)
    if mode == "auto":
        mode = "analytic" if model_known else "finite_difference"
    if mode == "analytic":
        if not model_known:
            raise ValueError("analytic rho_dot requested but the trajectory has no model")
        return lindblad_rhs(traj.model, traj.states[k], t)
    if not 0 < k < len(traj) - 1:
        raise ValueError(f"grid index {k} has no two-sided neighbors for finite differences")
    return (traj.states[k + 1] - traj.states[k - 1]) / (2.0 * traj.dt)


def variance_rate(
    traj: Trajectory,
    a: TimeDependentObservable,
    t: float,
    rho_dot_mode: str = "auto",
) -> StatPoint:
    """Assemble the StatPoint at time t on the trajectory grid."""
    k = traj.index_of(t)
    rho = traj.states[k]
    a_t = a.evaluate(t)
    da_t = a.partial_time(t)
    mean = expectation(rho, a_t)
    var = variance(rho, a_t)
    cov = covariance_sym(rho, a_t, da_t)
    rho_dot = state_derivative(traj, k, t, rho_dot_mode)
    rd_term = rho_dot_delta_sq(rho_dot, rho, a_t)
    return StatPoint(
        t=t,
        mean=mean,
        variance=var,
        sigma=float(np.sqrt(var)),
        cov=cov,
        rho_dot_term=rd_term,
        var_rate=rd_term + 2.0 * cov,
    )
