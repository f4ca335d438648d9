"""Mode system of the linearized shear-flow echo model.

For a fixed frequency eta the vorticity coefficients w(k) obey, in the
rescaled time tau = t / eta,

    dw(k)/dtau = -A(k-1, tau) w(k-1) + A(k+1, tau) w(k+1),
    A(l, tau)  = c / (l^2 (eta^-2 + (1/l - tau)^2)),   A(0, .) = 0.

Mode l is resonant at tau = 1/l, where A peaks at c eta^2 / l^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "C_MAX",
    "VariableKind",
    "NormKind",
    "ModelParams",
    "ModeVector",
    "NormWeight",
    "ResonanceTrace",
    "TransferMatrix",
    "default_window",
    "coefficient_a_t",
    "coefficient_a_tau",
    "coefficients_tau",
    "coefficients_t",
    "rhs_tau",
    "rhs_t",
    "tau_field",
    "resonant_time",
    "norm",
    "velocity_seminorm_factor",
    "velocity_norm",
    "canonicalize_eta",
    "to_t",
    "to_tau",
]

C_MAX = 0.2


class VariableKind(str, Enum):
    TAU = "tau"
    T = "t"


class NormKind(str, Enum):
    L2 = "L2"
    SOBOLEV = "Sobolev"
    GEVREY = "Gevrey"


def default_window(k0: int, c: float, tol_tail: float = 1e-12) -> tuple[int, int]:
    """Mode window [-2, k0 + m] for a chain started at k0.

    Off-chain amplitudes decay like (4c)^distance, so m is the distance at
    which that falls below tol_tail, plus two guard modes.
    """
    if not 0.0 < c < 0.25:
        raise ValueError(f"window policy needs 0 < c < 1/4, got {c}")
    if not 0.0 < tol_tail < 1.0:
        raise ValueError("tol_tail must lie in (0, 1)")
    m = math.ceil(math.log(tol_tail) / math.log(4.0 * c)) + 2
    return -2, int(k0) + m


@dataclass(frozen=True)
class ModelParams:
    """Coupling c, frequency eta > 0 and the mode window [k_min, k_max]."""

    c: float
    eta: float
    k_min: int
    k_max: int

    def __post_init__(self):
        if not (0.0 < self.c < C_MAX):
            raise ValueError(f"coupling must satisfy 0 < c < {C_MAX}, got {self.c}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(
                f"eta must be finite and positive (use canonicalize_eta for eta < 0), got {self.eta}"
            )
        if int(self.k_min) != self.k_min or int(self.k_max) != self.k_max:
            raise ValueError("window bounds must be integers")
        if self.k_min > self.k_max:
            raise ValueError(f"empty window [{self.k_min}, {self.k_max}]")
        object.__setattr__(self, "k_min", int(self.k_min))
        object.__setattr__(self, "k_max", int(self.k_max))

    @classmethod
    def for_chain(cls, c: float, eta: float, k0: int, tol_tail: float = 1e-12) -> "ModelParams":
        lo, hi = default_window(k0, c, tol_tail)
        return cls(c=c, eta=eta, k_min=lo, k_max=hi)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def size(self) -> int:
        return self.k_max - self.k_min + 1

    def critical_taus(self) -> np.ndarray:
        """Resonant times 1/k of all nonzero in-window modes, sorted."""
        ks = self.ks[self.ks != 0]
        return np.sort(1.0 / ks)


@dataclass(frozen=True)
class ModeVector:
    """Amplitudes w(k) for k = k_min..k_min+len-1 at one time and one eta.

    Modes outside the window are zero.  ``eta`` is only needed for weighted
    norms and velocity diagnostics.
    """

    time: float
    amplitudes: np.ndarray
    k_min: int
    kind: VariableKind = VariableKind.TAU
    eta: float | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(amps)):
            raise ValueError("ModeVector amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "k_min", int(self.k_min))
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "kind", VariableKind(self.kind))

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.amplitudes) - 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def __getitem__(self, k: int) -> complex:
        i = int(k) - self.k_min
        if 0 <= i < len(self.amplitudes):
            return complex(self.amplitudes[i])
        return 0j

    def replace(self, **changes) -> "ModeVector":
        fields = dict(time=self.time, amplitudes=self.amplitudes, k_min=self.k_min,
                      kind=self.kind, eta=self.eta)
        fields.update(changes)
        return ModeVector(**fields)

    def on_window(self, k_min: int, k_max: int) -> "ModeVector":
        """Embed into (or truncate to) another window."""
        out = np.zeros(k_max - k_min + 1, dtype=complex)
        lo, hi = max(k_min, self.k_min), min(k_max, self.k_max)
        if lo <= hi:
            out[lo - k_min:hi - k_min + 1] = self.amplitudes[lo - self.k_min:hi - self.k_min + 1]
        return self.replace(amplitudes=out, k_min=k_min)

    def dominant_mode(self) -> int:
        return int(self.k_min + np.argmax(np.abs(self.amplitudes)))

    @classmethod
    def zeros(cls, p: ModelParams, time: float, kind=VariableKind.TAU) -> "ModeVector":
        return cls(time, np.zeros(p.size, dtype=complex), p.k_min, kind, p.eta)

    @classmethod
    def unit(cls, p: ModelParams, k: int, time: float, kind=VariableKind.TAU) -> "ModeVector":
        if not p.k_min <= k <= p.k_max:
            raise ValueError(f"mode {k} outside window [{p.k_min}, {p.k_max}]")
        amps = np.zeros(p.size, dtype=complex)
        amps[k - p.k_min] = 1.0
        return cls(time, amps, p.k_min, kind, p.eta)

    def csv_rows(self) -> list[tuple[int, float, float]]:
        return [(int(k), float(a.real), float(a.imag)) for k, a in zip(self.ks, self.amplitudes)]


def _gevrey_label(C, s):
    return f"G(C={C:g},s={s:g})"


@dataclass(frozen=True)
class NormWeight:
    """Weight rho(k, eta) of a weighted l2 norm.

    Sobolev: (1 + k^2 + eta^2)^(s/2).  Gevrey: exp(C |eta|^s), no k
    dependence.  L2: 1.  ``shift_ratio_bound`` is sup rho(k+-1)/rho(k).
    """

    kind: NormKind = NormKind.L2
    s: float = 0.0
    C: float = 0.0
    shift_ratio_bound: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not (math.isfinite(self.s) and math.isfinite(self.C)):
            raise ValueError("weight parameters must be finite")
        if self.kind is NormKind.GEVREY and (self.C < 0 or not 0 < self.s <= 1):
            raise ValueError("Gevrey weight needs C >= 0 and 0 < s <= 1")
        if self.kind is NormKind.SOBOLEV:
            # max over integers of (1+(k+1)^2)/(1+k^2) is 5/2, attained at k = 1
            bound = 2.5 ** (abs(self.s) / 2.0)
        else:
            bound = 1.0
        object.__setattr__(self, "shift_ratio_bound", bound)

    @classmethod
    def l2(cls) -> "NormWeight":
        return cls(NormKind.L2)

    @classmethod
    def sobolev(cls, s: float) -> "NormWeight":
        return cls(NormKind.SOBOLEV, s=s)

    @classmethod
    def gevrey(cls, C: float, s: float = 0.5) -> "NormWeight":
        return cls(NormKind.GEVREY, s=s, C=C)

    @property
    def label(self) -> str:
        if self.kind is NormKind.L2:
            return "L2"
        if self.kind is NormKind.SOBOLEV:
            return f"H^{self.s:g}"
        return _gevrey_label(self.C, self.s)

    def rho(self, k, eta) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.kind is NormKind.L2:
            return np.ones(np.broadcast(k, eta).shape)
        if self.kind is NormKind.SOBOLEV:
            return (1.0 + k * k + eta * eta) ** (self.s / 2.0)
        return np.broadcast_to(np.exp(self.C * np.abs(eta) ** self.s), np.broadcast(k, eta).shape)


@dataclass(frozen=True)
class ResonanceTrace:
    """One resonance of an echo chain: mode k at xi = eta/k^2 over an interval."""

    resonance_index: int
    xi: float
    interval: tuple[float, float]
    gain: float
    norms: Mapping[str, float]
    dominant_before: int = 0
    dominant_after: int = 0
    handoff_ok: bool = True

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")
        if not self.interval[0] <= self.interval[1]:
            raise ValueError("interval must be ordered")


@dataclass(frozen=True)
class TransferMatrix:
    """Dense map of boundary data from interval[0] to interval[1]."""

    entries: np.ndarray
    interval: tuple[float, float]
    description: str = ""

    def __post_init__(self):
        m = np.array(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("transfer matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("transfer matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def det(self) -> float:
        return float(np.real_if_close(np.linalg.det(self.entries)))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        # (self @ other) applies other first
        return TransferMatrix(self.entries @ other.entries,
                              (other.interval[0], self.interval[1]),
                              f"{self.description}*{other.description}")

    def apply(self, v) -> np.ndarray:
        return self.entries @ np.asarray(v)


def _check_k(k):
    if int(k) != k:
        raise ValueError(f"mode index must be an integer, got {k}")
    if k == 0:
        raise ValueError("mode k = 0 has no resonance and zero coupling coefficient")


def coefficient_a_t(k: int, t: float, p: ModelParams) -> float:
    """c eta / (k^2 + (eta - k t)^2), the coupling in original time t."""
    _check_k(k)
    d = p.eta - k * t
    return p.c * p.eta / (k * k + d * d)


def coefficient_a_tau(l: int, tau: float, p: ModelParams) -> float:
    """c / (l^2 (eta^-2 + (1/l - tau)^2)), the coupling in tau = t/eta."""
    _check_k(l)
    d = 1.0 / l - tau
    return p.c / (l * l * (p.eta ** -2 + d * d))


def coefficients_tau(ks: np.ndarray, tau: float, c: float, eta: float) -> np.ndarray:
    """Vectorized A(k, tau) with A(0) = 0."""
    ks = np.asarray(ks, dtype=float)
    out = np.zeros(ks.shape)
    nz = ks != 0
    k = ks[nz]
    d = 1.0 / k - tau
    out[nz] = c / (k * k * (eta ** -2 + d * d))
    return out


def coefficients_t(ks: np.ndarray, t: float, c: float, eta: float) -> np.ndarray:
    """Vectorized a(k, t) with a(0) = 0."""
    ks = np.asarray(ks, dtype=float)
    out = np.zeros(ks.shape)
    nz = ks != 0
    k = ks[nz]
    d = eta - k * t
    out[nz] = c * eta / (k * k + d * d)
    return out


def _couple(coef: np.ndarray, w: np.ndarray) -> np.ndarray:
    # dw(k) = -coef(k-1) w(k-1) + coef(k+1) w(k+1); exterior modes are zero
    aw = coef * w
    d = np.zeros_like(aw)
    d[1:] -= aw[:-1]
    d[:-1] += aw[1:]
    return d


def _check_window(state: ModeVector, p: ModelParams):
    if state.k_min != p.k_min or state.k_max != p.k_max:
        raise ValueError(
            f"state window [{state.k_min}, {state.k_max}] differs from params "
            f"window [{p.k_min}, {p.k_max}]"
        )


def rhs_tau(state: ModeVector, tau: float, p: ModelParams) -> ModeVector:
    """dw/dtau at time tau."""
    if state.kind is not VariableKind.TAU:
        raise ValueError("rhs_tau needs a tau-kind state")
    _check_window(state, p)
    d = _couple(coefficients_tau(p.ks, tau, p.c, p.eta), state.amplitudes)
    return ModeVector(tau, d, p.k_min, VariableKind.TAU, p.eta)


def rhs_t(state: ModeVector, t: float, p: ModelParams) -> ModeVector:
    """dw/dt at original time t."""
    if state.kind is not VariableKind.T:
        raise ValueError("rhs_t needs a t-kind state")
    _check_window(state, p)
    d = _couple(coefficients_t(p.ks, t, p.c, p.eta), state.amplitudes)
    return ModeVector(t, d, p.k_min, VariableKind.T, p.eta)


def tau_field(p: ModelParams):
    """Plain f(tau, w) on raw arrays, for the integrator.

    Works for w of shape (n,) or (n, m) (several columns at once).
    """
    ks = p.ks.astype(float)
    nz = ks != 0
    inv_k = np.zeros_like(ks)
    inv_k[nz] = 1.0 / ks[nz]
    k2 = ks * ks
    c, e2 = p.c, p.eta ** -2

    def f(tau, w):
        d = inv_k - tau
        coef = np.where(nz, c / (k2 * (e2 + d * d) + (~nz)), 0.0)
        aw = coef[:, None] * w if w.ndim == 2 else coef * w
        out = np.zeros_like(aw)
        out[1:] -= aw[:-1]
        out[:-1] += aw[1:]
        return out

    return f


def resonant_time(k: int, kind: VariableKind | str = VariableKind.TAU, eta: float | None = None) -> float:
    """1/k in tau, eta/k in t."""
    _check_k(k)
    kind = VariableKind(kind)
    if kind is VariableKind.TAU:
        return 1.0 / k
    if eta is None:
        raise ValueError("t-kind resonant time needs eta")
    return eta / k


def to_t(state: ModeVector) -> ModeVector:
    if state.kind is VariableKind.T:
        return state
    if state.eta is None:
        raise ValueError("conversion needs the state's eta")
    return state.replace(time=state.time * state.eta, kind=VariableKind.T)


def to_tau(state: ModeVector) -> ModeVector:
    if state.kind is VariableKind.TAU:
        return state
    if state.eta is None:
        raise ValueError("conversion needs the state's eta")
    return state.replace(time=state.time / state.eta, kind=VariableKind.TAU)


def canonicalize_eta(c: float, eta: float, state: ModeVector) -> tuple[ModelParams, ModeVector]:
    """Map data at negative eta to eta > 0 with w(k, -eta) = conj(w(-k, eta)).

    The tau clock flips sign along with eta.
    """
    amps = np.conj(state.amplitudes[::-1])
    lo = -state.k_max
    if eta > 0:
        return ModelParams(c, eta, state.k_min, state.k_max), state
    tau = -state.time if state.kind is VariableKind.TAU else state.time
    flipped = ModeVector(tau, amps, lo, state.kind, -eta)
    return ModelParams(c, -eta, lo, lo + len(amps) - 1), flipped


def _as_states(states) -> list[ModeVector]:
    if isinstance(states, ModeVector):
        return [states]
    if isinstance(states, Mapping):
        return [states[key] for key in sorted(states)]
    return list(states)


def norm(states: ModeVector | Sequence[ModeVector] | Mapping[float, ModeVector],
         w: NormWeight, eta_weights: Iterable[float] | None = None) -> float:
    """sqrt(sum_eta q_eta sum_k |w(k,eta)|^2 rho(k,eta)^2) over an eta grid.

    ``eta_weights`` are optional quadrature weights q_eta (default 1).
    """
    items = _as_states(states)
    q = [1.0] * len(items) if eta_weights is None else list(eta_weights)
    if len(q) != len(items):
        raise ValueError("one weight per eta required")
    total = []
    for st, qe in zip(items, q):
        if w.kind is not NormKind.L2 and st.eta is None:
            raise ValueError("weighted norms need the state's eta")
        r = w.rho(st.ks, 0.0 if st.eta is None else st.eta)
        total.append(qe * float(np.sum(np.abs(st.amplitudes) ** 2 * r * r)))
    return math.sqrt(math.fsum(total))


def velocity_seminorm_factor(k: int, eta: float, t: float) -> float:
    """|v|/|w| for mode (k, eta) at time t: 1/sqrt(k^2 + (eta - k t)^2)."""
    if k == 0 and eta == 0:
        raise ValueError("velocity factor undefined at (k, eta) = (0, 0)")
    d = eta - k * t
    return 1.0 / math.sqrt(k * k + d * d)


def velocity_norm(states, eta_weights=None) -> float:
    """Velocity l2 norm over an eta grid; each state's time is used as t or tau."""
    items = _as_states(states)
    q = [1.0] * len(items) if eta_weights is None else list(eta_weights)
    total = []
    for st, qe in zip(items, q):
        if st.eta is None:
            raise ValueError("velocity norm needs the state's eta")
        t = st.time * st.eta if st.kind is VariableKind.TAU else st.time
        ks = st.ks.astype(float)
        d = st.eta - ks * t
        fac2 = 1.0 / (ks * ks + d * d)
        total.append(qe * float(np.sum(np.abs(st.amplitudes) ** 2 * fac2)))
    return math.sqrt(math.fsum(total))
