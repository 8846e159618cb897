"""Scenario files, batch execution, and CSV emission.

A scenario is a JSON description of one model + observable pair together
with a time grid and the set of checks to evaluate.  Execution produces
one row per interior grid point with a fixed column order, formatted for
byte-stable regression files.

Validation is all-at-once: every violated invariant is collected and
reported in a single structured error, so a bad file shows all of its
problems on the first run.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass

import numpy as np

from .bounds import (
    BoundReport,
    cauchy_schwarz_margin,
    closed_bound,
    open_bound,
    var_rate_residual,
)
from .dynamics import (
    LindbladModel,
    Trajectory,
    analytic_amplitude_damping,
    integrate,
    lindblad_model,
    trajectory_from_states,
)
from .linalg import as_density_matrix, matrix_from_dict, matrix_to_dict, sigma_z
from .observables import (
    TimeDependentObservable,
    observable_from_dict,
    observable_to_dict,
)
from .stats import EPS_SIGMA, variance, variance_rate

BOUND_NAMES = ("open", "closed", "var_rate_residual", "cauchy_schwarz")
BUILTIN_NAMES = ("example1", "example2", "crossover", "figure1")

RESULT_COLUMNS = (
    "t",
    "mean",
    "sigma",
    "sigma_sq",
    "var_rate",
    "lhs_open",
    "rhs_open",
    "margin_open",
    "lhs_closed",
    "rhs_closed",
    "margin_closed",
    "var_rate_residual",
    "skipped_flags",
)

FIGURE_COLUMNS = ("t", "mu_A", "sigma_A", "v_A", "margin_closed")

_NAN = float("nan")


class ScenarioError(ValueError):
    """Carries every violated invariant of a scenario file."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("invalid scenario: " + "; ".join(self.violations))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    dimension: int
    initial_state: np.ndarray
    hamiltonian: TimeDependentObservable | None
    jump_terms: tuple  # ((matrix, rate-or-None), ...)
    observable: TimeDependentObservable
    t_max: float
    dt: float
    bounds: tuple
    rho_dot_mode: str


@dataclass(frozen=True)
class ResultRow:
    t: float
    mean: float
    sigma: float
    sigma_sq: float
    var_rate: float
    lhs_open: float
    rhs_open: float
    margin_open: float
    lhs_closed: float
    rhs_closed: float
    margin_closed: float
    var_rate_residual: float
    skipped_flags: str


@dataclass(frozen=True)
class PointRecord:
    """One grid point's full evaluation, including checks with no CSV column."""

    row: ResultRow
    open_report: BoundReport | None
    closed_report: BoundReport | None
    cs_margin: float | None


# ---------------------------------------------------------------------------
# parsing and serialization

def parse_scenario(data: dict, default_name: str = "unnamed") -> ScenarioSpec:
    violations = []

    name = data.get("name", default_name)
    if not isinstance(name, str) or not name:
        violations.append("name: must be a nonempty string")
        name = default_name

    dimension = data.get("dimension")
    if not isinstance(dimension, int) or dimension < 1:
        violations.append("dimension: must be a positive integer")
        dimension = 0

    initial_state = None
    try:
        initial_state = matrix_from_dict(data["initial_state"])
        as_density_matrix(initial_state)
    except KeyError:
        violations.append("initial_state: missing")
    except (ValueError, TypeError) as err:
        violations.append(f"initial_state: {err}")
    if initial_state is not None and dimension and initial_state.shape[0] != dimension:
        violations.append(
            f"initial_state: dimension {initial_state.shape[0]} does not match {dimension}"
        )

    hamiltonian = None
    if data.get("hamiltonian") is not None:
        try:
            hamiltonian = observable_from_dict(data["hamiltonian"])
            if dimension and hamiltonian.dim != dimension:
                violations.append(
                    f"hamiltonian: dimension {hamiltonian.dim} does not match {dimension}"
                )
        except (ValueError, TypeError, KeyError) as err:
            violations.append(f"hamiltonian: {err}")

    jump_terms = []
    for i, entry in enumerate(data.get("jump_operators", [])):
        try:
            m = matrix_from_dict(entry["matrix"])
            rate = entry.get("rate")
            if rate is not None:
                rate = float(rate)
                if not (rate >= 0.0 and math.isfinite(rate)):
                    violations.append(f"jump_operators[{i}]: rate must be nonnegative, got {rate}")
            if dimension and m.shape[0] != dimension:
                violations.append(
                    f"jump_operators[{i}]: dimension {m.shape[0]} does not match {dimension}"
                )
            jump_terms.append((m, rate))
        except (ValueError, TypeError, KeyError) as err:
            violations.append(f"jump_operators[{i}]: {err}")

    obs = None
    try:
        obs = observable_from_dict(data["observable"])
        if dimension and obs.dim != dimension:
            violations.append(f"observable: dimension {obs.dim} does not match {dimension}")
    except KeyError:
        violations.append("observable: missing")
    except (ValueError, TypeError) as err:
        violations.append(f"observable: {err}")

    dt = data.get("dt", 0.0)
    t_max = data.get("t_max", 0.0)
    if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt > 0):
        violations.append(f"dt: must be positive, got {dt!r}")
    if not (isinstance(t_max, (int, float)) and math.isfinite(t_max) and t_max >= 10 * dt):
        violations.append(f"t_max: must be at least 10*dt, got {t_max!r}")

    bounds = tuple(data.get("bounds", ("open",)))
    for b in bounds:
        if b not in BOUND_NAMES:
            violations.append(f"bounds: unknown check {b!r}, expected subset of {BOUND_NAMES}")

    rho_dot_mode = data.get("rho_dot_mode", "analytic")
    if rho_dot_mode not in ("analytic", "finite_difference"):
        violations.append(
            f"rho_dot_mode: must be 'analytic' or 'finite_difference', got {rho_dot_mode!r}"
        )

    if data.get("hamiltonian") is None and not data.get("jump_operators"):
        violations.append("model: scenario needs a hamiltonian or at least one jump operator")

    if violations:
        raise ScenarioError(violations)

    return ScenarioSpec(
        name=name,
        dimension=dimension,
        initial_state=initial_state,
        hamiltonian=hamiltonian,
        jump_terms=tuple(jump_terms),
        observable=obs,
        t_max=float(t_max),
        dt=float(dt),
        bounds=bounds,
        rho_dot_mode=rho_dot_mode,
    )


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    out = {
        "name": spec.name,
        "dimension": spec.dimension,
        "initial_state": matrix_to_dict(spec.initial_state),
        "observable": observable_to_dict(spec.observable),
        "t_max": spec.t_max,
        "dt": spec.dt,
        "bounds": list(spec.bounds),
        "rho_dot_mode": spec.rho_dot_mode,
    }
    if spec.hamiltonian is not None:
        out["hamiltonian"] = observable_to_dict(spec.hamiltonian)
    if spec.jump_terms:
        entries = []
        for m, rate in spec.jump_terms:
            entry = {"matrix": matrix_to_dict(m)}
            if rate is not None:
                entry["rate"] = rate
            entries.append(entry)
        out["jump_operators"] = entries
    return out


def load_scenario(path) -> ScenarioSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise ScenarioError([f"read: {err}"]) from err
    except json.JSONDecodeError as err:
        raise ScenarioError([f"parse: {err}"]) from err
    if not isinstance(data, dict):
        raise ScenarioError(["parse: top-level value must be an object"])
    return parse_scenario(data, default_name=str(path))


def builtin_scenario_dict(name: str) -> dict:
    if name not in BUILTIN_NAMES or name == "figure1":
        raise ValueError(f"no builtin scenario file named {name!r}")
    ref = importlib.resources.files("fluctuation_bounds") / "builtin_scenarios" / f"{name}.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def load_builtin(name: str) -> ScenarioSpec:
    return parse_scenario(builtin_scenario_dict(name), default_name=name)


# ---------------------------------------------------------------------------
# execution

def build_model(spec: ScenarioSpec) -> LindbladModel:
    jumps = []
    for m, rate in spec.jump_terms:
        jumps.append(m if rate is None else math.sqrt(rate) * m)
    return lindblad_model(spec.hamiltonian, jumps)


def _damping_params(spec: ScenarioSpec):
    """(effective decay rate, splitting) when the model is exactly a qubit
    amplitude damping, else None."""
    if spec.dimension != 2 or len(spec.jump_terms) != 1:
        return None
    m, rate = spec.jump_terms[0]
    if m[0, 0] != 0 or m[1, 0] != 0 or m[1, 1] != 0 or m[0, 1] == 0:
        return None
    gamma_eff = (1.0 if rate is None else rate) * abs(m[0, 1]) ** 2
    if spec.hamiltonian is None:
        return gamma_eff, 0.0
    if not spec.hamiltonian.is_static:
        return None
    h = spec.hamiltonian.evaluate(0.0)
    if abs(h[0, 1]) > 0 or abs(h[0, 0] + h[1, 1]) > 1e-14 * max(1.0, abs(h[0, 0])):
        return None
    return gamma_eff, 2.0 * float(h[0, 0].real)


def build_trajectory(spec: ScenarioSpec) -> Trajectory:
    """Closed-form states when the model is exact amplitude damping,
    otherwise RK4."""
    model = build_model(spec)
    params = _damping_params(spec)
    if params is not None:
        gamma_eff, omega = params
        n = int(round(spec.t_max / spec.dt))
        times = np.arange(n + 1) * spec.dt
        states = [
            analytic_amplitude_damping(spec.initial_state, gamma_eff, omega, float(t))
            for t in times
        ]
        return trajectory_from_states(times, states, model)
    return integrate(model, spec.initial_state, spec.t_max, spec.dt)


def evaluate_scenario(spec: ScenarioSpec) -> list:
    """Full per-point records for every interior grid point."""
    traj = build_trajectory(spec)
    model = traj.model
    records = []
    for k in range(1, len(traj) - 1):
        t = float(traj.times[k])
        try:
            records.append(_evaluate_point(spec, traj, model, t))
        except ValueError as err:
            raise RuntimeError(f"scenario {spec.name!r} failed at t = {t:.6g}: {err}") from err
    return records


def _evaluate_point(spec, traj, model, t) -> PointRecord:
    sp = variance_rate(traj, spec.observable, t, spec.rho_dot_mode)
    flags = []

    open_report = None
    lhs_o = rhs_o = margin_o = _NAN
    if "open" in spec.bounds:
        open_report = open_bound(traj, spec.observable, t, stat=sp)
        if open_report.skipped:
            flags.append(f"open:{open_report.reason}")
        else:
            lhs_o, rhs_o, margin_o = open_report.lhs, open_report.rhs, open_report.margin

    closed_report = None
    lhs_c = rhs_c = margin_c = _NAN
    if "closed" in spec.bounds:
        closed_report = closed_bound(traj, model, spec.observable, t, stat=sp)
        if closed_report.skipped:
            flags.append(f"closed:{closed_report.reason}")
        else:
            lhs_c, rhs_c, margin_c = closed_report.lhs, closed_report.rhs, closed_report.margin

    residual = _NAN
    if "var_rate_residual" in spec.bounds:
        residual = var_rate_residual(traj, spec.observable, t, stat=sp)

    cs_margin = None
    if "cauchy_schwarz" in spec.bounds:
        cs_margin = cauchy_schwarz_margin(traj, spec.observable, t)

    row = ResultRow(
        t=t,
        mean=sp.mean,
        sigma=sp.sigma,
        sigma_sq=sp.variance,
        var_rate=sp.var_rate,
        lhs_open=lhs_o,
        rhs_open=rhs_o,
        margin_open=margin_o,
        lhs_closed=lhs_c,
        rhs_closed=rhs_c,
        margin_closed=margin_c,
        var_rate_residual=residual,
        skipped_flags=";".join(flags),
    )
    return PointRecord(row=row, open_report=open_report, closed_report=closed_report, cs_margin=cs_margin)


def run_scenario(spec: ScenarioSpec) -> list:
    """ResultRows for every interior grid point."""
    return [rec.row for rec in evaluate_scenario(spec)]


# ---------------------------------------------------------------------------
# closed-form curve family

def figure1_curves(gamma_rate: float, t_max: float, dt: float) -> list:
    """Sampled decay curves (t, mean, spread, speed, closed-bound margin).

    mu = 1 - 2e^{-Gt}, sigma = 2e^{-Gt/2} sqrt(1-e^{-Gt}), v = 2G e^{-Gt/2};
    the margin column is v^2 - (dmu/dt)^2 - (dsigma/dt)^2, undefined (nan)
    where sigma vanishes.
    """
    if gamma_rate <= 0:
        raise ValueError(f"decay rate must be positive, got {gamma_rate}")
    if dt <= 0 or t_max < dt:
        raise ValueError("need dt > 0 and t_max >= dt")
    n = int(round(t_max / dt))
    out = []
    for k in range(n + 1):
        t = k * dt
        u = math.exp(-gamma_rate * t)
        mu = 1.0 - 2.0 * u
        sigma = 2.0 * math.sqrt(u) * math.sqrt(max(1.0 - u, 0.0))
        v = 2.0 * gamma_rate * math.sqrt(u)
        if sigma < EPS_SIGMA:
            margin = _NAN
        else:
            mu_dot_sq = (2.0 * gamma_rate * u) ** 2
            sigma_dot_sq = gamma_rate**2 * u * (2.0 * u - 1.0) ** 2 / (1.0 - u)
            margin = v * v - mu_dot_sq - sigma_dot_sq
        out.append((t, mu, sigma, v, margin))
    return out


def sanity_check_figure_sigma(gamma_rate: float, t: float) -> float:
    """Spread of the population-difference observable from the statistics
    pipeline on the closed-form state; cross-checks the curve formula."""
    rho0 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    rho = analytic_amplitude_damping(rho0, gamma_rate, 0.0, t)
    return float(math.sqrt(variance(rho, sigma_z)))


# ---------------------------------------------------------------------------
# CSV emission

def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.11e}"


def rows_to_csv_text(rows, columns=RESULT_COLUMNS) -> str:
    lines = [",".join(columns)]
    for row in rows:
        if isinstance(row, ResultRow):
            values = [getattr(row, c) for c in columns]
        else:
            values = list(row)
        lines.append(",".join(_fmt(v) for v in values))
    return "\n".join(lines) + "\n"


def write_csv(rows, path, columns=RESULT_COLUMNS) -> None:
    text = rows_to_csv_text(rows, columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
