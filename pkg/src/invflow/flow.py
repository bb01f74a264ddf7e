"""Extended alpha-flow integration and a Newton minimizer of the potential.

The flow is ``du/dt = s_alpha r^alpha - K~(r)`` with ``r = exp(u)``.  It is
the negative gradient flow of the extended potential, so the potential column
of a trace must be non-increasing and ``sum(u)`` is conserved (the field sums
to zero by Gauss-Bonnet).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import geometry as geo
from . import variational as var
from .errors import (
    InsufficientTail,
    LineSearchFailure,
    MaxIterations,
    NonFiniteState,
    StepFailure,
    ValidationError,
    VelocityBoundViolation,
)
from .surface import TriangulatedSurface

log = logging.getLogger(__name__)

TWO_PI = geo.TWO_PI
MAX_HALVINGS = 20

Status = Literal["Converged", "MaxTimeReached", "StepFailure"]


@dataclass
class FlowConfig:
    alpha: float = 0.0
    step_size: float = 0.05
    max_time: float = 500.0
    residual_tolerance: float = 1e-10
    max_step_change: float = 0.5
    normalize_every_step: bool = True
    method: Literal["rk4", "euler", "newton"] = "rk4"
    track_potential: bool = True
    keep_snapshots: bool = False
    sample_every: int = 1
    stop_at_convergence: bool = True

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValidationError("step_size must be positive")
        if not self.residual_tolerance > 0:
            raise ValidationError("residual_tolerance must be positive")
        if self.method not in ("rk4", "euler", "newton"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.sample_every < 1:
            raise ValidationError("sample_every must be >= 1")


@dataclass
class FlowTrace:
    """Sampled history of one run.

    ``drift`` is ``|sum u(t) - sum u(0)|`` measured before re-projection.
    ``potential`` is F~ relative to the initial point (None when untracked).
    """

    times: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    potentials: list[float] = field(default_factory=list)
    min_slacks: list[float] = field(default_factory=list)
    drifts: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    crossings: list[tuple[float, int, str]] = field(default_factory=list)
    status: str = "Running"
    steps: int = 0
    halvings: int = 0
    max_speed: float = 0.0
    speed_bound: float = math.inf

    def __len__(self) -> int:
        return len(self.times)

    def rows(self):
        for k in range(len(self)):
            pot = self.potentials[k] if self.potentials else float("nan")
            yield (self.times[k], self.residuals[k], pot,
                   self.min_slacks[k], self.drifts[k])


@dataclass
class FlowResult:
    trace: FlowTrace
    u: np.ndarray

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.u)

    @property
    def status(self) -> str:
        return self.trace.status


def speed_bound(surface: TriangulatedSurface) -> float:
    """A-priori bound on |du_i/dt| (padded by 2 pi)."""
    chi = abs(surface.euler_characteristic)
    d = surface.max_degree
    return TWO_PI * chi + max(d * math.pi - TWO_PI, TWO_PI) + TWO_PI


def _velocity(surface, I, u, alpha, bound):
    v = -var.potential_gradient(surface, I, u, alpha)
    if not np.all(np.isfinite(v)):
        return None
    speed = float(np.max(np.abs(v)))
    if speed > bound:
        raise VelocityBoundViolation(f"|du/dt| = {speed:g} exceeds bound {bound:g}")
    return v


def run_flow(
    surface: TriangulatedSurface, inv_dist, u0, config: FlowConfig | None = None
) -> FlowResult:
    """Integrate the extended alpha-flow from ``u0`` (any point of R^N)."""
    config = config or FlowConfig()
    if config.method == "newton":
        raise ValidationError("use newton_minimize for method='newton'")
    I = geo.as_inversive_distance(surface, inv_dist)
    u = np.array(u0, dtype=float)
    if u.shape != (surface.vertex_count,):
        raise ValidationError(f"expected {surface.vertex_count} log-radii")
    if not np.all(np.isfinite(u)):
        raise NonFiniteState("initial log-radii are not finite")
    alpha = config.alpha
    n = surface.vertex_count
    bound = speed_bound(surface)
    total0 = float(u.sum())

    trace = FlowTrace(speed_bound=bound)
    v = _velocity(surface, I, u, alpha, bound)
    if v is None:
        raise NonFiniteState("flow field is not finite at the initial point")
    admissible = _admissible(surface, I, u)
    potential = 0.0
    t = 0.0

    def record(drift):
        trace.times.append(t)
        trace.residuals.append(float(np.max(np.abs(v))))
        if config.track_potential:
            trace.potentials.append(potential)
        lengths = geo.edge_lengths(surface, I, np.exp(u))
        trace.min_slacks.append(float(geo.relative_face_slack(surface, lengths).min()))
        trace.drifts.append(drift)
        if config.keep_snapshots:
            trace.snapshots.append(u.copy())

    record(0.0)
    trace.max_speed = trace.residuals[-1]

    while True:
        converged = float(np.max(np.abs(v))) < config.residual_tolerance
        if converged and config.stop_at_convergence:
            trace.status = "Converged"
            break
        # tolerate accumulated rounding in t so no sliver step is taken
        done = t >= config.max_time - 1e-9 * config.step_size
        if done:
            trace.status = "Converged" if converged else "MaxTimeReached"
            break
        h = min(config.step_size, config.max_time - t)
        if config.max_time - t - h < 1e-9 * config.step_size:
            h = config.max_time - t
        for attempt in range(MAX_HALVINGS + 1):
            du = _increment(surface, I, u, v, h, alpha, bound, config.method)
            if du is not None and np.max(np.abs(du)) <= config.max_step_change:
                break
            trace.halvings += 1
            h *= 0.5
        else:
            trace.status = "StepFailure"
            err = StepFailure(f"step halving exhausted at t={t:g}")
            err.result = FlowResult(trace=trace, u=u)
            raise err

        u_prev = u
        u = u + du
        drift = abs(float(u.sum()) - total0)
        if config.normalize_every_step:
            u = u - (float(u.sum()) - total0) / n
        t += h
        trace.steps += 1
        v_new = _velocity(surface, I, u, alpha, bound)
        if v_new is None:
            raise NonFiniteState(f"flow field not finite at t={t:g}")
        v = v_new
        trace.max_speed = max(trace.max_speed, float(np.max(np.abs(v))))
        if config.track_potential:
            potential += var.potential(surface, I, u, alpha, base_point=u_prev).value

        now = _admissible(surface, I, u)
        for f in np.flatnonzero(now != admissible):
            trace.crossings.append((t, int(f), "enter" if now[f] else "leave"))
        admissible = now

        last = t >= config.max_time - 1e-9 * config.step_size or (
            config.stop_at_convergence
            and float(np.max(np.abs(v))) < config.residual_tolerance
        )
        if last or trace.steps % config.sample_every == 0:
            record(drift)

    log.debug("flow finished: %s after %d steps, t=%g", trace.status, trace.steps, t)
    return FlowResult(trace=trace, u=u)


def _admissible(surface, I, u):
    lengths = geo.edge_lengths(surface, I, np.exp(u))
    return np.all(geo.face_slacks(surface, lengths) > 0, axis=-1)


def _increment(surface, I, u, v, h, alpha, bound, method):
    if method == "euler":
        return h * v
    k1 = v
    k2 = _velocity(surface, I, u + 0.5 * h * k1, alpha, bound)
    if k2 is None:
        return None
    k3 = _velocity(surface, I, u + 0.5 * h * k2, alpha, bound)
    if k3 is None:
        return None
    k4 = _velocity(surface, I, u + h * k3, alpha, bound)
    if k4 is None:
        return None
    return h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def verify_conservation(trace: FlowTrace) -> float:
    """Largest recorded ``|sum u(t) - sum u(0)|`` before re-projection."""
    if not trace.drifts:
        raise ValidationError("empty trace")
    return float(max(trace.drifts))


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    samples: int

    @property
    def exponential(self) -> bool:
        return self.rate > 1e-8 and self.r_squared > 0.9


def fit_decay_rate(trace: FlowTrace, tail_fraction: float = 0.5) -> DecayFit:
    """Least-squares slope of ln(residual) against time over the tail.

    A positive rate means decay.  Raises :class:`InsufficientTail` when fewer
    than 20 tail samples have residual above 1e-13.
    """
    t = np.asarray(trace.times)
    res = np.asarray(trace.residuals)
    start = int(math.floor(len(t) * (1.0 - tail_fraction)))
    t, res = t[start:], res[start:]
    keep = res > 1e-13
    t, res = t[keep], res[keep]
    if len(t) < 20:
        raise InsufficientTail(f"only {len(t)} usable tail samples")
    y = np.log(res)
    slope, intercept = np.polyfit(t, y, 1)
    ss_res = float(np.sum((y - (slope * t + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(rate=float(-slope), r_squared=r2, samples=len(t))


@dataclass
class NewtonResult:
    u: np.ndarray
    status: str
    iterations: int
    gradient_norms: list[float]
    step_kinds: list[str]
    step_lengths: list[float]
    convexity_guaranteed: bool
    notes: list[str]

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.u)


def newton_minimize(
    surface: TriangulatedSurface,
    inv_dist,
    u0,
    alpha: float,
    tolerance: float = 1e-12,
    max_iterations: int = 100,
    armijo: float = 1e-4,
    max_backtracks: int = 60,
) -> NewtonResult:
    """Damped Newton descent of F~ on the hyperplane ``sum u = sum u0``.

    Newton directions solve the Hessian system bordered by the constraint
    ``sum(d) = 0``.  Whenever the iterate is outside ln(Omega) (or the Newton
    direction is not a descent direction) a steepest-descent step is taken.
    Step lengths are backtracked until the Armijo condition holds, with the
    potential decrease evaluated by quadrature along the step.
    """
    I = geo.as_inversive_distance(surface, inv_dist)
    u = np.array(u0, dtype=float)
    n = surface.vertex_count
    if u.shape != (n,):
        raise ValidationError(f"expected {n} log-radii")
    guaranteed = var.convexity_guaranteed(surface, alpha)
    notes = []
    if not guaranteed:
        notes.append("uniqueness/convexity not guaranteed (alpha*chi > 0)")
    norms: list[float] = []
    kinds: list[str] = []
    lengths: list[float] = []
    ones = np.ones(n)

    for it in range(max_iterations + 1):
        g = var.potential_gradient(surface, I, u, alpha)
        gnorm = float(np.max(np.abs(g)))
        norms.append(gnorm)
        if gnorm < tolerance:
            return NewtonResult(u, "Converged", it, norms, kinds, lengths,
                                guaranteed, notes)
        if it == max_iterations:
            break

        direction, kind = -g, "gradient"
        if _admissible(surface, I, u).all():
            H = var.hessian(surface, I, u, alpha)
            kkt = np.block([[H, ones[:, None]], [ones[None, :], np.zeros((1, 1))]])
            try:
                sol = np.linalg.solve(kkt, np.concatenate([-g, [0.0]]))
                d = sol[:n]
                if np.all(np.isfinite(d)) and float(g @ d) < 0:
                    direction, kind = d, "newton"
            except np.linalg.LinAlgError:
                pass
        direction = direction - direction.mean()
        slope = float(g @ direction)

        step = 1.0
        for _ in range(max_backtracks):
            trial = u + step * direction
            decrease = var.potential(surface, I, trial, alpha, base_point=u).value
            noise = 64 * np.finfo(float).eps * (TWO_PI * n + np.abs(g).sum()) * float(
                np.max(np.abs(step * direction))
            )
            if decrease <= armijo * step * slope + noise:
                break
            step *= 0.5
        else:
            raise LineSearchFailure(f"no Armijo step at iteration {it}")
        u = trial
        kinds.append(kind)
        lengths.append(step)

    raise MaxIterations(f"gradient norm {norms[-1]:g} after {max_iterations} iterations")
