"""End-to-end numerical experiments: echo chains, exponent fits, norm-inflation
scans, the modified-scattering construction and large-time damping checks.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core_model import (
    ModeVector,
    ModelParams,
    NormWeight,
    ResonanceTrace,
    default_window,
    norm,
    velocity_norm,
)
from .integrator import IntegratorConfig, evolve
from .scattering_models import (
    GrowthVariant,
    log_chain_growth_prediction,
    optimal_k,
)

__all__ = [
    "ChainRunResult",
    "ExponentFit",
    "ScanRow",
    "ScatteringDemoResult",
    "DampingCheck",
    "chain_start_time",
    "resonance_window",
    "run_echo_chain",
    "resonance_gain",
    "resonance_chain_bracket",
    "fit_exponent",
    "candidate_distances",
    "norm_inflation_scan",
    "log_grid_cell_weights",
    "modified_scattering_demo",
    "damping_check",
]

log = logging.getLogger(__name__)

HANDOFF_FACTOR = 0.5


def _late(cfg: IntegratorConfig) -> IntegratorConfig:
    # no critical times beyond tau = 1, so the step cap only costs time
    return dataclasses.replace(cfg, max_step=math.inf)


def chain_start_time(k0: int) -> float:
    """Midpoint between the resonances of k0+1 and k0."""
    return 0.5 * (1.0 / (k0 + 1) + 1.0 / k0)


def resonance_window(k: int) -> tuple[float, float]:
    """Window around tau = 1/k between neighbouring midpoints; k = 1 ends at 1.5."""
    if k < 1:
        raise ValueError("resonance windows are defined for k >= 1")
    right = 1.5 if k == 1 else 0.5 * (1.0 / k + 1.0 / (k - 1))
    return chain_start_time(k), right


@dataclass(frozen=True)
class ChainRunResult:
    params: ModelParams
    trace: tuple[ResonanceTrace, ...]
    final_state: ModeVector
    total_gain: float
    wall_time: float
    log_total_gain: float = 0.0
    handoff_failures: tuple[int, ...] = ()
    exit_states: tuple[ModeVector, ...] = field(default=(), repr=False)

    @property
    def log_gains(self) -> list[float]:
        return [math.log(r.gain) for r in self.trace]


def run_echo_chain(c: float, eta: float, k0: int, cfg: IntegratorConfig | None = None,
                   norms: Sequence[NormWeight] = (NormWeight.l2(),),
                   window: tuple[int, int] | None = None, tol_tail: float = 1e-12,
                   n_resonances: int | None = None) -> ChainRunResult:
    """Start from w = delta_{k,k0} at the chain start time and cross the
    resonances k0, k0-1, ..., 1 (or the first n_resonances of them).

    Each record's gain is max|w| after / max|w| before its window.  A
    dominance handoff failure (|w(k-1)| < max/2 after crossing k) is recorded,
    not raised.
    """
    if k0 < 1:
        raise ValueError("k0 >= 1 required")
    if eta / k0 ** 2 < 1:
        raise ValueError(f"need eta/k0^2 >= 1, got {eta / k0 ** 2:g}")
    cfg = cfg or IntegratorConfig()
    lo, hi = window if window is not None else default_window(k0, c, tol_tail)
    p = ModelParams(c, eta, lo, hi)
    tic = time.perf_counter()
    state = ModeVector.unit(p, k0, chain_start_time(k0))
    records, fails, exits = [], [], []
    log_total = 0.0
    last = 1 if n_resonances is None else max(1, k0 - n_resonances + 1)
    for k in range(k0, last - 1, -1):
        t_in, t_out = resonance_window(k)
        before = float(np.max(np.abs(state.amplitudes)))
        dom_before = state.dominant_mode()
        state = evolve(state, t_out, p, cfg).final
        amps = np.abs(state.amplitudes)
        after = float(np.max(amps))
        ok = state[k - 1] != 0 and abs(state[k - 1]) >= HANDOFF_FACTOR * after
        if not ok:
            fails.append(k)
            log.info("dominance handoff failed at k=%d (eta=%g)", k, eta)
        gain = after / before
        log_total += math.log(gain)
        records.append(ResonanceTrace(
            resonance_index=k, xi=eta / k ** 2, interval=(t_in, t_out), gain=gain,
            norms={w.label: norm(state, w) for w in norms},
            dominant_before=dom_before, dominant_after=state.dominant_mode(), handoff_ok=ok,
        ))
        exits.append(state)
    return ChainRunResult(p, tuple(records), state, math.exp(log_total) if log_total < 709 else math.inf,
                          time.perf_counter() - tic, log_total, tuple(fails), tuple(exits))


def resonance_gain(c: float, xi: float, k0: int = 5, cfg: IntegratorConfig | None = None) -> float:
    """Full-model gain across the single resonance of mode k0 at xi = eta/k0^2."""
    run = run_echo_chain(c, xi * k0 * k0, k0, cfg, n_resonances=1)
    return run.trace[0].gain


def resonance_chain_bracket(c: float, eta: float, l: int) -> tuple[float, float, float]:
    """(low, central, high) = (1 -+ c/(1-c))^l times c^l eta^l/(l!)^2."""
    central = math.exp(l * math.log(c * eta) - 2.0 * math.lgamma(l + 1.0))
    r = c / (1.0 - c)
    return central * (1.0 - r) ** l, central, central * (1.0 + r) ** l


@dataclass(frozen=True)
class ExponentFit:
    variant: str
    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    residual_rms: float

    def __post_init__(self):
        if len(self.points) < 3:
            raise ValueError("a fit needs at least 3 points")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be non-negative")


def fit_exponent(points: Iterable[tuple[float, float]], variant: str = "measured") -> ExponentFit:
    """Ordinary least squares of log(gain) on log(xi)."""
    pts = [(float(x), float(g)) for x, g in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    if any(not (x > 0 and g > 0) or not (math.isfinite(x) and math.isfinite(g)) for x, g in pts):
        raise ValueError("xi and gain must be positive and finite")
    lx = np.log([x for x, _ in pts])
    lg = np.log([g for _, g in pts])
    if np.ptp(lx) == 0:
        raise ValueError("degenerate abscissae: all xi equal")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, lg, rcond=None)
    resid = lg - (slope * lx + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return ExponentFit(variant, tuple(zip(lx.tolist(), lg.tolist())), float(slope), float(intercept), rms)


def candidate_distances(slope: float, c: float) -> dict[str, float]:
    """Distance of a fitted slope to sqrt(1-8c^2) and sqrt(1-4c^2)."""
    out = {}
    if 8 * c * c < 1:
        out["sqrt(1-8c^2)"] = abs(slope - math.sqrt(1 - 8 * c * c))
    if 4 * c * c < 1:
        out["sqrt(1-4c^2)"] = abs(slope - math.sqrt(1 - 4 * c * c))
    return out


@dataclass(frozen=True)
class ScanRow:
    eta: float
    k: int
    log_total_gain: float
    log_predicted: float
    ratio_sqrt_eta: float
    handoff_failures: int
    final_norms: dict


def _scan_one(args):
    c, eta, variant, cfg, norms = args
    k = optimal_k(c, eta, variant)
    k = min(k, max(1, int(math.sqrt(eta))))  # keep eta/k^2 >= 1
    run = run_echo_chain(c, eta, k, cfg, norms=norms)
    return ScanRow(eta, k, run.log_total_gain, log_chain_growth_prediction(c, eta, k, variant),
                   run.log_total_gain / math.sqrt(eta), len(run.handoff_failures),
                   {w.label: norm(run.final_state, w) for w in norms})


def _pool_map(fn, items, jobs):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(a) for a in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def norm_inflation_scan(c: float, eta_list: Sequence[float],
                        norms: Sequence[NormWeight] = (NormWeight.l2(),),
                        variant: GrowthVariant | str = GrowthVariant.TWO_MODE,
                        cfg: IntegratorConfig | None = None, jobs: int = 1) -> list[ScanRow]:
    """Chains at the predicted optimal k for each eta; rows sorted by eta.

    total gain = final max|w| for unit initial data.
    """
    cfg = cfg or IntegratorConfig()
    etas = sorted(float(e) for e in eta_list)
    return _pool_map(_scan_one, [(c, e, variant, cfg, tuple(norms)) for e in etas], jobs)


def log_grid_cell_weights(eta_grid: Sequence[float]) -> np.ndarray:
    """Cell widths around each grid point with geometric-midpoint cell edges."""
    e = np.asarray(sorted(eta_grid), dtype=float)
    if len(e) == 0:
        return np.zeros(0)
    if len(e) == 1:
        return np.array([e[0]])
    mids = np.sqrt(e[:-1] * e[1:])
    lo = np.concatenate(([e[0] ** 2 / mids[0]], mids))
    hi = np.concatenate((mids, [e[-1] ** 2 / mids[-1]]))
    return hi - lo


@dataclass(frozen=True)
class ScatteringDemoResult:
    eta_grid: tuple[float, ...]
    weights: tuple[float, ...]
    norm_histories: dict
    velocity_history: tuple[tuple[float, float], ...]
    g_values: tuple[complex, ...] = ()
    k_values: tuple[int, ...] = ()
    final_mode1: tuple[complex, ...] = ()
    psi_values: tuple[float, ...] = ()
    cell_weights: tuple[float, ...] = ()
    cutoff_norms: dict = field(default_factory=dict)
    velocity_tau_check: float = 0.0

    def __post_init__(self):
        if any(not w > 0 for w in self.weights if w is not None):
            raise ValueError("weights must be positive")


def _demo_one(args):
    c, eta, k, taus, t_phys, cfg = args
    run = run_echo_chain(c, eta, k, cfg)
    late = _late(cfg)
    p = run.params
    st = run.final_state
    samples = {}
    for tau in sorted(set(taus) | {t / eta for t in t_phys}):
        if tau < st.time:
            continue
        st = evolve(st, tau, p, late).final
        samples[tau] = st
    return run.final_state, samples


def modified_scattering_demo(c: float, sigma0: float, eta_grid: Sequence[float],
                             psi_profile: Callable[[float], float] | None = None,
                             cfg: IntegratorConfig | None = None, tau_final: float = 10.0,
                             history_taus: Sequence[float] = (1.5, 2.0, 4.0, 10.0),
                             n_velocity: int = 6, eps: float = 0.25,
                             jobs: int = 1) -> ScatteringDemoResult:
    """Finite-eta-grid version of the construction w0 = sum (1/g) psi w0^(eta, k_eta).

    For each eta, a unit chain from k_eta = optimal_k(c, eta) gives the
    measured g(eta) = w(tau_final, 1).  Scaling the initial datum by
    psi(eta)/g(eta) makes the final mode-1 amplitude exactly psi(eta).
    Norms are taken over (k, eta) with geometric cell weights in eta.
    Velocity histories use physical times t_j = 2 eta_max 2^j.
    """
    cfg = cfg or IntegratorConfig()
    etas = tuple(sorted(float(e) for e in eta_grid))
    if psi_profile is None:
        def psi_profile(e):
            return (1.0 + e * e) ** (-(sigma0 + 0.5) / 2.0)
    taus = sorted(set(history_taus) | {2.0, tau_final})
    if not etas:
        return ScatteringDemoResult((), (), {}, ())
    t_phys = [2.0 * etas[-1] * 2.0 ** j for j in range(n_velocity)]
    ks = [max(1, min(optimal_k(c, e), int(math.sqrt(e)))) for e in etas]
    outs = _pool_map(_demo_one, [(c, e, k, taus, t_phys, cfg) for e, k in zip(etas, ks)], jobs)

    cell = log_grid_cell_weights(etas)
    psi = [float(psi_profile(e)) for e in etas]
    g_vals, scales, weights = [], [], []
    for (chain_end, samples) in outs:
        g = samples[tau_final][1]
        if g == 0:
            raise ArithmeticError("measured g(eta) vanished; chain did not reach mode 1")
        g_vals.append(g)
        weights.append(1.0 / abs(g))
    for ps, g in zip(psi, g_vals):
        scales.append(ps / g)

    def scaled(i, tau):
        st = outs[i][1][tau]
        return st.replace(amplitudes=st.amplitudes * scales[i])

    labels = {f"H^{sigma0 + 1:g}": NormWeight.sobolev(sigma0 + 1.0),
              f"H^{sigma0 - eps:g}": NormWeight.sobolev(sigma0 - eps),
              "L2": NormWeight.l2()}
    histories = {}
    for lab, w in labels.items():
        histories[lab] = tuple((tau, norm([scaled(i, tau) for i in range(len(etas))], w, cell))
                               for tau in taus)
    cutoffs = {}
    for lab, w in labels.items():
        cutoffs[lab] = tuple(norm([scaled(i, tau_final) for i in range(j)], w, cell[:j])
                             for j in range(1, len(etas) + 1))
    vel = []
    for t in t_phys:
        vel.append((t, velocity_norm([scaled(i, t / e) for i, e in enumerate(etas)], cell)))
    v2 = velocity_norm([scaled(i, 2.0) for i in range(len(etas))], cell)
    v10 = velocity_norm([scaled(i, tau_final) for i in range(len(etas))], cell)
    vcheck = abs(v10 - v2) / v10 if v10 > 0 else 0.0
    if all(ps == 0 for ps in psi):
        weights = [1.0 / abs(g) for g in g_vals]
    return ScatteringDemoResult(
        eta_grid=etas, weights=tuple(weights), norm_histories=histories,
        velocity_history=tuple(vel), g_values=tuple(g_vals), k_values=tuple(ks),
        final_mode1=tuple(scaled(i, tau_final)[1] for i in range(len(etas))),
        psi_values=tuple(psi), cell_weights=tuple(cell.tolist()), cutoff_norms=cutoffs,
        velocity_tau_check=vcheck,
    )


@dataclass(frozen=True)
class DampingCheck:
    velocity_tail: tuple[tuple[float, float], ...]
    vorticity_norm_series: dict
    max_ratio: dict
    bound: dict
    vorticity_tail: tuple[tuple[float, float], ...] = ()

    @property
    def within_bound(self) -> bool:
        return all(self.max_ratio[k] <= self.bound[k] for k in self.max_ratio)


def damping_check(run: ChainRunResult, horizon_tau: float = 100.0,
                  norms: Sequence[NormWeight] = (NormWeight.l2(),),
                  cfg: IntegratorConfig | None = None, n_samples: int = 48) -> DampingCheck:
    """Continue a chain run to ``horizon_tau`` and test large-time behaviour.

    Vorticity norms after tau = 2 must stay within exp(2 c C1 pi) of their
    value at tau = 2.  velocity_tail lists (T, sup_{T<=tau<=horizon}
    |V(tau) - V(T)|) and vorticity_tail (T, |w(2T) - w(T)|) for T = 2^j * 2.5.
    """
    cfg = _late(cfg or IntegratorConfig())
    p = run.params
    st = run.final_state
    if st.time < 2.0:
        st = evolve(st, 2.0, p, cfg).final
    if horizon_tau <= st.time:
        raise ValueError("horizon must lie beyond the state's time")
    grid = np.unique(np.concatenate([
        np.geomspace(st.time, horizon_tau, n_samples),
        [2.5 * 2 ** j for j in range(12) if st.time <= 2.5 * 2 ** j <= horizon_tau],
    ]))
    states = {}
    cur = st
    for tau in grid:
        cur = evolve(cur, float(tau), p, cfg).final if tau > cur.time else cur
        states[float(tau)] = cur
    series = {w.label: tuple((tau, norm(s, w)) for tau, s in states.items()) for w in norms}
    start = states[float(grid[0])]
    max_ratio, bound = {}, {}
    for w in norms:
        n0 = norm(start, w)
        vals = [v for _, v in series[w.label]]
        max_ratio[w.label] = max(vals) / n0 if n0 > 0 else 0.0
        bound[w.label] = math.exp(2 * p.c * w.shift_ratio_bound * math.pi)
    vel = {tau: velocity_norm(s) for tau, s in states.items()}
    taus = sorted(vel)
    tails = []
    for T in [2.5 * 2 ** j for j in range(12)]:
        if T < taus[0] or T >= horizon_tau:
            continue
        later = [abs(vel[t] - vel[T]) for t in taus if t >= T]
        tails.append((T, max(later)))
    vtail = []
    for T in [2.5 * 2 ** j for j in range(12)]:
        if T in states and 2 * T in states:
            d = states[2 * T].amplitudes - states[T].amplitudes
            vtail.append((T, float(np.sqrt(np.sum(np.abs(d) ** 2)))))
    return DampingCheck(tuple(tails), series, max_ratio, bound, tuple(vtail))
