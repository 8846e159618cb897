"""Shared random-model builders and the acceptance verdict summary."""

import numpy as np

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from fluctuation_bounds.linalg import matrix_exponential_antihermitian
from fluctuation_bounds.dynamics import lindblad_model
from fluctuation_bounds.observables import (
    cosine,
    observable,
    polynomial,
    sine,
    static_observable,
)


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (m + m.conj().T) / 2


def random_state(rng, dim, full_rank=True):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    if full_rank:
        rho = rho + 0.1 * np.eye(dim)
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    return matrix_exponential_antihermitian(random_hermitian(rng, dim), 1.0)


def random_jump(rng, dim, scale=0.7):
    return scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))


def random_model(rng, dim, n_jumps=None, jump_scale=0.7, h_scale=1.0):
    if n_jumps is None:
        n_jumps = int(rng.integers(1, 3))
    jumps = [random_jump(rng, dim, jump_scale) for _ in range(n_jumps)]
    return lindblad_model(static_observable(h_scale * random_hermitian(rng, dim)), jumps)


def random_observable(rng, dim, time_dependent=False, scale=1.0):
    if not time_dependent:
        return static_observable(scale * random_hermitian(rng, dim))
    return observable(
        [
            (cosine(rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0)), scale * random_hermitian(rng, dim)),
            (sine(rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0)), scale * random_hermitian(rng, dim)),
            (polynomial([rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)]), scale * random_hermitian(rng, dim)),
        ]
    )
