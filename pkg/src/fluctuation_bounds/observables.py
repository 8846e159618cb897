"""Time-dependent Hermitian observables A(t) = sum_k c_k(t) B_k.

Coefficients come from a closed family of scalar functions with exact
calculus derivatives, so the partial time derivative of an observable is
computed analytically rather than by finite differences.  This keeps
derivative error out of any quantity built on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    as_density_matrix,
    as_matrix,
    matrix_from_dict,
    matrix_to_dict,
    require_hermitian,
)

MAX_POLY_DEGREE = 8

_KINDS = ("constant", "cosine", "sine", "exponential-decay", "polynomial")


@dataclass(frozen=True)
class CoefficientFunction:
    """One real scalar coefficient c(t) from the closed function family.

    kind/params pairs:
      constant            (c,)                 c
      cosine              (a, omega, phi)      a*cos(omega*t + phi)
      sine                (a, omega, phi)      a*sin(omega*t + phi)
      exponential-decay   (a, lam)             a*exp(-lam*t)
      polynomial          (c0, ..., cn) n<=8   sum_k c_k t^k
    """

    kind: str
    params: tuple

    def value(self, t: float) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "cosine":
            a, omega, phi = self.params
            return a * math.cos(omega * t + phi)
        if self.kind == "sine":
            a, omega, phi = self.params
            return a * math.sin(omega * t + phi)
        if self.kind == "exponential-decay":
            a, lam = self.params
            return a * math.exp(-lam * t)
        return float(np.polynomial.polynomial.polyval(t, self.params))

    def derivative(self, t: float) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "cosine":
            a, omega, phi = self.params
            return -a * omega * math.sin(omega * t + phi)
        if self.kind == "sine":
            a, omega, phi = self.params
            return a * omega * math.cos(omega * t + phi)
        if self.kind == "exponential-decay":
            a, lam = self.params
            return -a * lam * math.exp(-lam * t)
        dcoef = np.polynomial.polynomial.polyder(np.asarray(self.params, dtype=float))
        return float(np.polynomial.polynomial.polyval(t, dcoef))


def _finite_params(params, kind: str) -> tuple:
    out = tuple(float(p) for p in params)
    if not all(math.isfinite(p) for p in out):
        raise ValueError(f"{kind} coefficient has non-finite parameters")
    return out


def constant(c: float) -> CoefficientFunction:
    return CoefficientFunction("constant", _finite_params((c,), "constant"))


def cosine(amplitude: float, omega: float, phase: float = 0.0) -> CoefficientFunction:
    return CoefficientFunction("cosine", _finite_params((amplitude, omega, phase), "cosine"))


def sine(amplitude: float, omega: float, phase: float = 0.0) -> CoefficientFunction:
    return CoefficientFunction("sine", _finite_params((amplitude, omega, phase), "sine"))


def exponential_decay(amplitude: float, rate: float) -> CoefficientFunction:
    return CoefficientFunction(
        "exponential-decay", _finite_params((amplitude, rate), "exponential-decay")
    )


def polynomial(coefficients) -> CoefficientFunction:
    params = _finite_params(tuple(coefficients), "polynomial")
    if len(params) == 0:
        raise ValueError("polynomial needs at least one coefficient")
    if len(params) - 1 > MAX_POLY_DEGREE:
        raise ValueError(f"polynomial degree capped at {MAX_POLY_DEGREE}")
    return CoefficientFunction("polynomial", params)


def coefficient_to_dict(c: CoefficientFunction) -> dict:
    if c.kind == "constant":
        return {"kind": "constant", "value": c.params[0]}
    if c.kind in ("cosine", "sine"):
        a, omega, phi = c.params
        return {"kind": c.kind, "amplitude": a, "omega": omega, "phase": phi}
    if c.kind == "exponential-decay":
        a, lam = c.params
        return {"kind": c.kind, "amplitude": a, "rate": lam}
    return {"kind": "polynomial", "coefficients": list(c.params)}


def coefficient_from_dict(d: dict) -> CoefficientFunction:
    kind = d.get("kind")
    if kind == "constant":
        return constant(d["value"])
    if kind == "cosine":
        return cosine(d["amplitude"], d["omega"], d.get("phase", 0.0))
    if kind == "sine":
        return sine(d["amplitude"], d["omega"], d.get("phase", 0.0))
    if kind == "exponential-decay":
        return exponential_decay(d["amplitude"], d["rate"])
    if kind == "polynomial":
        return polynomial(d["coefficients"])
    raise ValueError(f"unknown coefficient kind {kind!r}, expected one of {_KINDS}")


@dataclass(frozen=True)
class TimeDependentObservable:
    """Hermitian observable as real coefficients times fixed Hermitian matrices."""

    terms: tuple  # ((CoefficientFunction, ndarray), ...)

    @property
    def dim(self) -> int:
        return self.terms[0][1].shape[0]

    def evaluate(self, t: float) -> np.ndarray:
        """A(t); Hermitian because coefficients are real."""
        _require_finite_time(t)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, basis in self.terms:
            out = out + coeff.value(t) * basis
        return out

    def partial_time(self, t: float) -> np.ndarray:
        """Exact partial derivative of the explicit time dependence only."""
        _require_finite_time(t)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for coeff, basis in self.terms:
            out = out + coeff.derivative(t) * basis
        return out

    @property
    def is_static(self) -> bool:
        return all(coeff.kind == "constant" for coeff, _ in self.terms)


def _require_finite_time(t: float) -> None:
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t!r}")


def observable(terms) -> TimeDependentObservable:
    """Build an observable from (coefficient, Hermitian matrix) pairs."""
    if not terms:
        raise ValueError("observable needs at least one term")
    checked = []
    for coeff, basis in terms:
        checked.append((coeff, require_hermitian(as_matrix(basis), "observable basis matrix")))
    dim = checked[0][1].shape[0]
    for _, basis in checked[1:]:
        if basis.shape[0] != dim:
            raise ValueError(f"dimension mismatch: {basis.shape[0]} vs {dim}")
    return TimeDependentObservable(terms=tuple(checked))


def static_observable(matrix: np.ndarray) -> TimeDependentObservable:
    return observable([(constant(1.0), matrix)])


def squared_partial_expectation(a: TimeDependentObservable, t: float, rho: np.ndarray) -> float:
    """tr(rho * (partial_t A)^2), real and nonnegative."""
    rho = as_density_matrix(rho)
    da = a.partial_time(t)
    if da.shape != rho.shape:
        raise ValueError(f"dimension mismatch: {da.shape} vs {rho.shape}")
    return float(np.trace(rho @ da @ da).real)


def observable_to_dict(a: TimeDependentObservable) -> dict:
    terms = []
    for coeff, basis in a.terms:
        d = coefficient_to_dict(coeff)
        d["matrix"] = matrix_to_dict(basis)
        terms.append(d)
    return {"terms": terms}


def observable_from_dict(d: dict) -> TimeDependentObservable:
    terms = []
    for term in d["terms"]:
        coeff = coefficient_from_dict(term)
        terms.append((coeff, matrix_from_dict(term["matrix"])))
    return observable(terms)
