"""Adaptive Dormand-Prince 5(4) integration of the mode system.

The coefficients are smooth except in windows of width ~1/eta around the
critical times 1/k.  Integration is split at every critical time (so no step
can jump over a peak) and steps are capped inside a refinement zone
|tau - 1/k| < delta_res.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core_model import (
    ModeVector,
    ModelParams,
    NormWeight,
    TransferMatrix,
    VariableKind,
    norm,
    tau_field,
)

__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "EvolveReport",
    "LargeTimeReport",
    "ODEResult",
    "integrate",
    "evolve",
    "interval_operator",
    "evolve_large_time",
    "large_time_tail_bound",
]

log = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

# PI controller (Gustafsson), exponents as in Hairer-Wanner's DOPRI5
_SAFETY = 0.9
_EXPO = 0.2 - 0.04 * 0.75
_BETA = 0.04
_FAC_MIN = 0.2
_FAC_MAX = 10.0


class IntegrationError(RuntimeError):
    """Step-size underflow, step budget exhaustion or non-finite state."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and step policy.

    ``delta_res`` None means 10/eta.  Inside |tau - 1/k| < delta_res the
    step is capped at max_step * resonance_refinement.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_step: float = 0.05
    resonance_refinement: float = 0.1
    delta_res: float | None = None
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.resonance_refinement <= 1:
            raise ValueError("resonance_refinement must lie in (0, 1]")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.delta_res is not None and not self.delta_res >= 0:
            raise ValueError("delta_res must be non-negative")

    def zone_halfwidth(self, eta: float) -> float:
        return 10.0 / eta if self.delta_res is None else self.delta_res

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Same policy with both tolerances multiplied by factor."""
        return IntegratorConfig(self.rel_tol * factor, self.abs_tol * factor, self.max_step,
                                self.resonance_refinement, self.delta_res, self.max_steps)


@dataclass
class ODEResult:
    y: np.ndarray
    steps_taken: int = 0
    steps_rejected: int = 0
    max_local_error: float = 0.0
    sum_local_error: float = 0.0
    trace_t: list = field(default_factory=list)
    trace_norm: list = field(default_factory=list)


@dataclass(frozen=True)
class EvolveReport:
    final: ModeVector
    steps_taken: int
    steps_rejected: int
    max_local_error_estimate: float
    norm_trace: tuple[tuple[float, float], ...]
    accumulated_error_estimate: float = 0.0


@dataclass(frozen=True)
class LargeTimeReport:
    report: EvolveReport
    limit: ModeVector
    tail_bound: float
    tau_end: float


def _err_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * max(np.max(np.abs(y0)), np.max(np.abs(y1)))
    return math.sqrt(float(np.mean(np.abs(err) ** 2))) / scale


def _initial_step(f, t0, y0, f0, direction, rtol, atol, cap):
    # Hairer-Norsett-Wanner starting-step heuristic, 5th order
    scale = atol + rtol * np.max(np.abs(y0))
    d0 = math.sqrt(float(np.mean(np.abs(y0) ** 2))) / scale
    d1 = math.sqrt(float(np.mean(np.abs(f0) ** 2))) / scale
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, cap)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = math.sqrt(float(np.mean(np.abs(f1 - f0) ** 2))) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, cap)


def _segment(f, t0, t1, y, cap, rtol, atol, res: ODEResult, norm_fn, max_steps):
    """Integrate t0 -> t1 (t1 > t0) with step cap ``cap``."""
    t = t0
    f0 = f(t, y)
    h = _initial_step(f, t, y, f0, 1.0, rtol, atol, min(cap, t1 - t0))
    err_prev = 1e-4
    k = [None] * 7
    while t < t1:
        if res.steps_taken + res.steps_rejected >= max_steps:
            raise IntegrationError(f"step budget {max_steps} exhausted at t = {t}")
        h = min(h, cap)
        # a remainder at roundoff level is absorbed into the current step
        tiny = 64 * np.finfo(float).eps * max(abs(t1), 1.0)
        if t1 - t <= tiny:
            break
        last = t + h >= t1 or (t1 - (t + h)) < max(1e-12 * h, tiny)
        if last:
            h = t1 - t
        if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError(f"step-size underflow at t = {t} (h = {h:.3e}); stiff or singular")
        k[0] = f0
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    acc += (h * a) * k[j]
            k[i] = f(t + _C[i] * h, acc)
        y_new = acc  # stage 7 argument is the 5th-order solution (FSAL)
        err = h * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        en = _err_norm(err, y, y_new, rtol, atol)
        if not math.isfinite(en) or not np.all(np.isfinite(y_new)):
            if not np.all(np.isfinite(y)):
                raise IntegrationError(f"non-finite state at t = {t}")
            res.steps_rejected += 1
            h *= 0.1
            continue
        if en <= 1.0:
            t = t1 if last else t + h
            y = y_new
            f0 = k[6]
            res.steps_taken += 1
            e_abs = float(np.max(np.abs(err)))
            res.max_local_error = max(res.max_local_error, e_abs)
            res.sum_local_error += e_abs
            if norm_fn is not None:
                res.trace_t.append(t)
                res.trace_norm.append(norm_fn(y))
            fac = _SAFETY * max(en, 1e-10) ** -_EXPO * err_prev ** _BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            err_prev = max(en, 1e-4)
            h *= fac
        else:
            res.steps_rejected += 1
            fac = max(_FAC_MIN, _SAFETY * en ** -_EXPO)
            h *= fac
    return y


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0: np.ndarray,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-14,
    max_step: float = np.inf,
    critical_times: Sequence[float] = (),
    zone_halfwidth: float = 0.0,
    zone_step: float | None = None,
    norm_fn: Callable[[np.ndarray], float] | None = None,
    max_steps: int = 5_000_000,
) -> ODEResult:
    """Integrate y' = f(t, y) from t0 to t1 (either direction).

    Every critical time in (t0, t1) and the edges of its refinement zone
    become segment boundaries.  Inside a zone the step is capped at
    ``zone_step``.  Backward runs integrate s = -t with the negated field.
    """
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float)
    res = ODEResult(y=y)
    if norm_fn is not None:
        res.trace_t.append(t0)
        res.trace_norm.append(norm_fn(y))
    if t1 == t0:
        return res
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite initial state")
    sgn = 1.0 if t1 > t0 else -1.0
    g = f if sgn > 0 else (lambda s, w: -f(-s, w))
    s0, s1 = sgn * t0, sgn * t1
    crit = np.array([sgn * tc for tc in critical_times], dtype=float)
    zone_cap = max_step if zone_step is None else min(max_step, zone_step)

    cuts = {s0, s1}
    for sc in crit:
        for edge in (sc - zone_halfwidth, sc, sc + zone_halfwidth):
            if s0 < edge < s1:
                cuts.add(float(edge))
    cuts = sorted(cuts)

    for a, b in zip(cuts[:-1], cuts[1:]):
        # zone edges can land within roundoff of an endpoint; such slivers
        # carry no dynamics
        if b - a <= 64 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
            continue
        mid = 0.5 * (a + b)
        in_zone = crit.size > 0 and np.min(np.abs(crit - mid)) < zone_halfwidth
        cap = zone_cap if in_zone else max_step
        n0 = len(res.trace_t)
        y = _segment(g, a, b, y, cap, rel_tol, abs_tol, res, norm_fn, max_steps)
        if sgn < 0:
            for i in range(n0, len(res.trace_t)):
                res.trace_t[i] = -res.trace_t[i]
    if norm_fn is not None and res.trace_t:
        res.trace_t[-1] = t1
    res.y = y
    return res


def _l2(y):
    return math.sqrt(float(np.sum(np.abs(y) ** 2)))


def evolve(state: ModeVector, tau_end: float, p: ModelParams,
           cfg: IntegratorConfig | None = None) -> EvolveReport:
    """Integrate the tau-form mode system from state.time to tau_end."""
    cfg = cfg or IntegratorConfig()
    if state.kind is not VariableKind.TAU:
        raise ValueError("evolve needs a tau-kind state")
    if state.k_min != p.k_min or state.k_max != p.k_max:
        raise ValueError("state window does not match params window")
    if not math.isfinite(tau_end):
        raise ValueError("tau_end must be finite")
    res = integrate(
        tau_field(p), state.time, tau_end, np.asarray(state.amplitudes, dtype=complex),
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_step=cfg.max_step,
        critical_times=p.critical_taus(), zone_halfwidth=cfg.zone_halfwidth(p.eta),
        zone_step=cfg.max_step * cfg.resonance_refinement, norm_fn=_l2,
        max_steps=cfg.max_steps,
    )
    final = ModeVector(tau_end, res.y, p.k_min, VariableKind.TAU, p.eta)
    return EvolveReport(final, res.steps_taken, res.steps_rejected, res.max_local_error,
                        tuple(zip(res.trace_t, res.trace_norm)), res.sum_local_error)


def interval_operator(k_window: tuple[int, int] | range, tau0: float, tau1: float,
                      p: ModelParams, cfg: IntegratorConfig | None = None,
                      max_columns: int = 64) -> TransferMatrix:
    """Dense solution operator on a mode window; column j evolves e_j.

    All columns are integrated together as one matrix ODE.
    """
    cfg = cfg or IntegratorConfig()
    if isinstance(k_window, range):
        lo, hi = k_window.start, k_window.stop - 1
    else:
        lo, hi = k_window
    n = hi - lo + 1
    if n > max_columns:
        raise ValueError(f"window of {n} modes exceeds dense-assembly limit {max_columns}")
    q = ModelParams(p.c, p.eta, lo, hi)
    res = integrate(
        tau_field(q), tau0, tau1, np.eye(n),
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_step=cfg.max_step,
        critical_times=q.critical_taus(), zone_halfwidth=cfg.zone_halfwidth(p.eta),
        zone_step=cfg.max_step * cfg.resonance_refinement, max_steps=cfg.max_steps,
    )
    return TransferMatrix(res.y, (tau0, tau1), f"window[{lo},{hi}] tau {tau0:g}->{tau1:g}")


def large_time_tail_bound(norm_at_end: float, c: float, tau_end: float, C1: float = 1.0) -> float:
    """Bound on |w(inf) - w(tau_end)| from a(tau) <= c/(1+(tau-2)^2), tau >= 2."""
    mass = math.pi / 2 - math.atan(tau_end - 2.0)
    return norm_at_end * math.expm1(2.0 * c * C1 * mass)


def evolve_large_time(state: ModeVector, p: ModelParams, cfg: IntegratorConfig | None = None,
                      tau_end: float = 50.0, weight: NormWeight | None = None) -> LargeTimeReport:
    """Integrate from tau >= 2 to tau_end and extrapolate the limit.

    The tail decays like 1/tau, so limit = 2 w(T) - w(T/2) (Richardson);
    the rigorous bound is on |w(inf) - w(T)|.
    """
    if state.kind is not VariableKind.TAU or state.time < 2.0:
        raise ValueError("evolve_large_time needs a tau-kind state at tau >= 2")
    if tau_end < 2 * state.time:
        raise ValueError("tau_end must be at least twice the start time")
    weight = weight or NormWeight.l2()
    half = evolve(state, tau_end / 2.0, p, cfg)
    full = evolve(half.final, tau_end, p, cfg)
    limit = full.final.replace(amplitudes=2.0 * full.final.amplitudes - half.final.amplitudes)
    bound = large_time_tail_bound(norm(full.final, weight), p.c, tau_end, weight.shift_ratio_bound)
    merged = EvolveReport(
        full.final,
        half.steps_taken + full.steps_taken,
        half.steps_rejected + full.steps_rejected,
        max(half.max_local_error_estimate, full.max_local_error_estimate),
        half.norm_trace + full.norm_trace[1:],
        half.accumulated_error_estimate + full.accumulated_error_estimate,
    )
    return LargeTimeReport(merged, limit, bound, tau_end)
