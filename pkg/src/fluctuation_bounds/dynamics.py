"""Continuous-time evolution of density matrices.

Covers the Lindblad right-hand side, fixed-step RK4 integration, the
closed-form amplitude-damping solution, short-time Taylor and Dyson
propagators, and extraction of the Hermitian generator that drives the
eigenvector flow of a trajectory.

Integration never repairs its state: trace and positivity are measured
every step and a violation aborts with the failing time in the message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    as_density_matrix,
    as_matrix,
    hermitian_eigendecomposition,
    matrix_exponential_antihermitian,
    symmetrize,
)
from .observables import TimeDependentObservable

TAU_PSD_RUN = 1e-8   # positivity floor while integrating
TAU_TRACE_RUN = 1e-8
G_MIN = 1e-6         # smallest admissible eigenvalue gap for eigenvector pairing
EXTERNAL_MODEL = "externally supplied"


class IntegrationError(RuntimeError):
    """State invariant broke mid-run; carries the failing time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class LindbladModel:
    """Markovian generator: Hamiltonian part plus jump operators.

    Jump operators carry their rates, e.g. L = sqrt(Gamma) sigma_minus.
    ``jump_dagger`` and ``jump_norm`` (L^dagger L) are cached products.
    """

    hamiltonian: TimeDependentObservable | None
    jump_operators: tuple
    jump_dagger: tuple
    jump_norm: tuple
    dim: int

    @property
    def is_closed(self) -> bool:
        return len(self.jump_operators) == 0


def lindblad_model(hamiltonian=None, jump_operators=()) -> LindbladModel:
    jumps = tuple(as_matrix(L) for L in jump_operators)
    dims = [L.shape[0] for L in jumps]
    if hamiltonian is not None:
        dims.append(hamiltonian.dim)
    if not dims:
        raise ValueError("model needs a Hamiltonian or at least one jump operator")
    dim = dims[0]
    if any(d != dim for d in dims):
        raise ValueError(f"dimension mismatch across model operators: {dims}")
    daggers = tuple(L.conj().T for L in jumps)
    norms = tuple(Ld @ L for L, Ld in zip(jumps, daggers))
    return LindbladModel(
        hamiltonian=hamiltonian,
        jump_operators=jumps,
        jump_dagger=daggers,
        jump_norm=norms,
        dim=dim,
    )


def lindblad_rhs(model: LindbladModel, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """-i[H(t), rho] + sum_k (L rho L^dag - (1/2){L^dag L, rho}).

    No state validation here: RK4 stage inputs are not density matrices.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"dimension mismatch: state {rho.shape} vs model dim {model.dim}")
    out = np.zeros_like(rho)
    if model.hamiltonian is not None:
        h = model.hamiltonian.evaluate(t)
        out = -1j * (h @ rho - rho @ h)
    for L, Ld, LdL in zip(model.jump_operators, model.jump_dagger, model.jump_norm):
        out = out + L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform time grid."""

    times: np.ndarray  # (n,)
    states: np.ndarray  # (n, d, d)
    model: object  # LindbladModel or EXTERNAL_MODEL

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]

    def index_of(self, t: float) -> int:
        k = int(round((t - self.times[0]) / self.dt))
        if k < 0 or k >= len(self) or abs(self.times[k] - t) > 1e-6 * self.dt:
            raise ValueError(f"t = {t} is not on the trajectory grid")
        return k


def trajectory_from_states(times, states, model=EXTERNAL_MODEL) -> Trajectory:
    """Wrap externally produced states, enforcing grid and state invariants."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.shape[0] < 2:
        raise ValueError("trajectory needs at least two grid points")
    steps = np.diff(times)
    dt = steps[0]
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValueError("trajectory grid must be uniform and increasing")
    checked = np.stack([as_density_matrix(s, tau_psd=TAU_PSD_RUN) for s in states])
    if checked.shape[0] != times.shape[0]:
        raise ValueError("times and states lengths differ")
    return Trajectory(times=times, states=checked, model=model)


def integrate(model: LindbladModel, rho0, t_max: float, dt: float) -> Trajectory:
    """Classical fixed-step RK4 from t = 0 to t_max.

    States are re-symmetrized every step; trace drift and negative
    eigenvalues are measured, never corrected, and abort the run past
    TAU_TRACE_RUN / TAU_PSD_RUN.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_max < dt:
        raise ValueError(f"t_max = {t_max} shorter than one step dt = {dt}")
    n_steps = int(round(t_max / dt))
    rho = as_density_matrix(rho0)
    if rho.shape[0] != model.dim:
        raise ValueError(f"dimension mismatch: state {rho.shape[0]} vs model {model.dim}")

    times = np.arange(n_steps + 1) * dt
    states = np.empty((n_steps + 1, model.dim, model.dim), dtype=complex)
    states[0] = rho
    for k in range(n_steps):
        t = times[k]
        k1 = lindblad_rhs(model, rho, t)
        k2 = lindblad_rhs(model, rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = lindblad_rhs(model, rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = lindblad_rhs(model, rho + dt * k3, t + dt)
        rho = symmetrize(rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        t_next = float(times[k + 1])
        drift = abs(np.trace(rho).real - 1.0)
        if drift > TAU_TRACE_RUN:
            raise IntegrationError(f"trace drift {drift:.3e} at t = {t_next:.6g}", t_next)
        lo = float(np.min(np.linalg.eigvalsh(rho)))
        if lo < -TAU_PSD_RUN:
            raise IntegrationError(
                f"positivity lost (min eigenvalue {lo:.3e}) at t = {t_next:.6g}", t_next
            )
        states[k + 1] = rho
    return Trajectory(times=times, states=states, model=model)


def analytic_amplitude_damping(rho0, gamma_rate: float, omega: float, t: float) -> np.ndarray:
    """Closed-form qubit state under decay rate Gamma and splitting omega.

    Populations relax as e^{-Gamma t}; the coherence shrinks by
    e^{-Gamma t/2} and rotates by e^{-i omega t}.
    """
    rho0 = as_density_matrix(rho0)
    if rho0.shape[0] != 2:
        raise ValueError("closed-form solution is for dimension 2 only")
    if gamma_rate < 0:
        raise ValueError(f"decay rate must be nonnegative, got {gamma_rate}")
    decay = math.exp(-gamma_rate * t)
    off = rho0[0, 1] * math.sqrt(decay) * np.exp(-1j * omega * t)
    out = np.array(
        [
            [rho0[0, 0] + (1.0 - decay) * rho0[1, 1], off],
            [np.conj(off), decay * rho0[1, 1]],
        ],
        dtype=complex,
    )
    return out


@dataclass(frozen=True)
class PropagatorStep:
    matrix: np.ndarray
    scheme: str  # exact | taylor1 | taylor2 | dyson1 | dyson2
    interval: tuple  # (t0, t1)


def exact_propagator(h: TimeDependentObservable, t0: float, dt: float) -> PropagatorStep:
    """exp(-i H dt); only defined for time-independent H."""
    if not h.is_static:
        raise ValueError("exact propagator requires a time-independent Hamiltonian")
    u = matrix_exponential_antihermitian(h.evaluate(t0), dt)
    return PropagatorStep(matrix=u, scheme="exact", interval=(t0, t0 + dt))


def taylor_propagator(h: TimeDependentObservable, t0: float, dt: float, order: int) -> PropagatorStep:
    """Short-time expansion about t0 from H(t0) and its exact derivative."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    h0 = h.evaluate(t0)
    dim = h0.shape[0]
    u = np.eye(dim, dtype=complex) - 1j * dt * h0
    if order == 2:
        hdot0 = h.partial_time(t0)
        u = u + (-1j * hdot0 - h0 @ h0) * (dt * dt / 2.0)
    return PropagatorStep(matrix=u, scheme=f"taylor{order}", interval=(t0, t0 + dt))


def _gauss_legendre(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return mid + half * x, half * w


def dyson_propagator(
    h: TimeDependentObservable, t0: float, dt: float, order: int, quad_points: int = 16
) -> PropagatorStep:
    """Time-ordered expansion to first or second order.

    The second-order term integrates H(t1) H(t2) over the triangle
    t0 <= t2 <= t1 <= t0+dt; the inner integral is rescaled onto [t0, t1]
    so Gauss-Legendre nodes stay inside the ordering constraint.
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if quad_points < 2:
        raise ValueError(f"quad_points must be at least 2, got {quad_points}")
    dim = h.dim
    t1_nodes, t1_weights = _gauss_legendre(t0, t0 + dt, quad_points)
    first = np.zeros((dim, dim), dtype=complex)
    second = np.zeros((dim, dim), dtype=complex)
    for t1, w1 in zip(t1_nodes, t1_weights):
        h1 = h.evaluate(t1)
        first = first + w1 * h1
        if order == 2:
            inner = np.zeros((dim, dim), dtype=complex)
            t2_nodes, t2_weights = _gauss_legendre(t0, t1, quad_points)
            for t2, w2 in zip(t2_nodes, t2_weights):
                inner = inner + w2 * h.evaluate(t2)
            second = second + w1 * (h1 @ inner)
    u = np.eye(dim, dtype=complex) - 1j * first
    if order == 2:
        u = u - second
    return PropagatorStep(matrix=u, scheme=f"dyson{order}", interval=(t0, t0 + dt))


# ---------------------------------------------------------------------------
# eigenvector-flow generator

def _nondegenerate_decomposition(rho, what: str):
    dec = hermitian_eigendecomposition(as_density_matrix(rho, tau_psd=TAU_PSD_RUN))
    gaps = -np.diff(dec.eigenvalues)
    if dec.dim > 1 and float(np.min(gaps)) < G_MIN:
        raise ValueError(
            f"{what} spectrum is degenerate (min gap {float(np.min(gaps)):.3e} < {G_MIN})"
        )
    return dec


def _match_columns(ref: np.ndarray, other: np.ndarray) -> list:
    """For each column of ref, the index of the other column with the
    largest overlap.  Errors when the two best overlaps are within 10%
    of each other or when the assignment is not one-to-one."""
    n = ref.shape[1]
    overlap = np.abs(other.conj().T @ ref)  # overlap[k, j] = |<other_k|ref_j>|
    picks = []
    for j in range(n):
        col = overlap[:, j]
        order = np.argsort(-col)
        best = int(order[0])
        if n > 1:
            runner = int(order[1])
            if col[runner] >= 0.9 * col[best]:
                raise ValueError(
                    f"eigenvector pairing ambiguous: overlaps {col[best]:.6f} and "
                    f"{col[runner]:.6f} within 10%"
                )
        picks.append(best)
    if len(set(picks)) != n:
        raise ValueError("eigenvector pairing is not one-to-one")
    return picks


def _paired_eigensystem(rho_a, rho_b):
    """Eigenvectors of both states, columns of b reordered onto a's and
    phase-fixed so <psi_j(a)|psi_j(b)> is real positive."""
    dec_a = _nondegenerate_decomposition(rho_a, "first state")
    dec_b = _nondegenerate_decomposition(rho_b, "second state")
    picks = _match_columns(dec_a.eigenvectors, dec_b.eigenvectors)
    vb = np.empty_like(dec_b.eigenvectors)
    pb = np.empty_like(dec_b.eigenvalues)
    for j, k in enumerate(picks):
        col = dec_b.eigenvectors[:, k]
        ov = np.vdot(dec_a.eigenvectors[:, j], col)
        if abs(ov) > 0:
            col = col * (ov.conjugate() / abs(ov))
        vb[:, j] = col
        pb[j] = dec_b.eigenvalues[k]
    return dec_a, vb, pb


def extract_pseudo_hamiltonian(rho_a, rho_b, dt: float) -> np.ndarray:
    """Hermitian generator moving the eigenvectors of rho_a onto rho_b.

    Builds the transfer map T = sum_j |psi_j(b)><psi_j(a)| from
    overlap-paired, phase-fixed eigenvectors and returns the Hermitian
    part of i(T - I)/dt.  The generator is gauge-dependent; only
    commutator expectations against the state are physical.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    dec_a, vb, _ = _paired_eigensystem(rho_a, rho_b)
    transfer = vb @ dec_a.eigenvectors.conj().T
    dim = transfer.shape[0]
    return symmetrize(1j * (transfer - np.eye(dim)) / dt)


def pseudo_hamiltonian_residuals(rho_a, rho_b, dt: float) -> np.ndarray:
    """Per-eigenvector norms ||(I - i Omega dt) psi_j(a) - psi_j(b)||."""
    omega = extract_pseudo_hamiltonian(rho_a, rho_b, dt)
    dec_a, vb, _ = _paired_eigensystem(rho_a, rho_b)
    step = np.eye(omega.shape[0], dtype=complex) - 1j * dt * omega
    return np.linalg.norm(step @ dec_a.eigenvectors - vb, axis=0)


def eigenflow_rate_terms(traj: Trajectory, a: TimeDependentObservable, k: int):
    """Decompose d<A>/dt at interior grid index k into the eigenvalue-drift,
    explicit-time and eigenvector-flow contributions.

    Eigenvalue rates use central differences with overlap pairing against
    the middle point; the flow generator is extracted over the forward
    step, so the decomposition carries O(dt) error overall.
    """
    if not 0 < k < len(traj) - 1:
        raise ValueError(f"index {k} has no two-sided neighbors")
    dt = traj.dt
    rho_k = traj.states[k]
    t_k = float(traj.times[k])
    dec_k, _, p_next = _paired_eigensystem(rho_k, traj.states[k + 1])
    _, _, p_prev = _paired_eigensystem(rho_k, traj.states[k - 1])
    p_dot = (p_next - p_prev) / (2.0 * dt)

    a_k = a.evaluate(t_k)
    vecs = dec_k.eigenvectors
    diag_a = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), a_k, vecs))
    pdot_term = float(np.dot(p_dot, diag_a))
    partial_term = float(np.trace(rho_k @ a.partial_time(t_k)).real)
    omega = extract_pseudo_hamiltonian(rho_k, traj.states[k + 1], dt)
    omega_term = float((1j * np.trace(rho_k @ (omega @ a_k - a_k @ omega))).real)
    return pdot_term, partial_term, omega_term
