"""Path-sum (iterated Duhamel) oracle for the mode system.

Writing the tau-form system as w' = L(tau) w, the order-j Duhamel term is a
sum over nearest-neighbour paths g_1 -> ... -> g_{j+1}.  A step out of mode m
carries the coefficient A(m, s) and the sign -sgn(step): mode k gains
+A(k+1) w(k+1) and -A(k-1) w(k-1).  The path integral is the time-ordered
simplex integral

    I[g](tau1) = int_{tau0 <= s_1 <= ... <= s_j <= tau1}
                 prod_i  -sgn(g_{i+1}-g_i) A(g_i, s_i) ds.

It is evaluated as nested cumulative integrals F_i(s) = int A(g_i) F_{i-1}
on a Chebyshev-Lobatto panel mesh graded towards the peaks at 1/l, at two
resolutions; their difference is the quadrature error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .core_model import ModeVector, ModelParams, VariableKind

__all__ = [
    "OracleRefusal",
    "InteractionPath",
    "PathIntegralResult",
    "DuhamelResult",
    "PanelMesh",
    "count_paths",
    "enumerate_paths",
    "path_integral",
    "coefficient_masses",
    "majorant_ratio",
    "duhamel_solve",
]

DEFAULT_PATH_CAP = 1_000_000
_N_COARSE = 12
_N_FINE = 24


class OracleRefusal(ValueError):
    """The request is outside the regime where the oracle is valid."""


@dataclass(frozen=True)
class InteractionPath:
    nodes: tuple[int, ...]

    def __post_init__(self):
        nodes = tuple(int(g) for g in self.nodes)
        if len(nodes) == 0:
            raise ValueError("a path needs at least one node")
        for a, b in zip(nodes[:-1], nodes[1:]):
            if abs(b - a) != 1:
                raise ValueError(f"path steps must be +-1, got {a} -> {b}")
        object.__setattr__(self, "nodes", nodes)

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.nodes[:-1], self.nodes[1:]))

    @property
    def sign(self) -> int:
        # each step contributes -sgn(step)
        s = 1
        for d in self.steps:
            s *= -d
        return s

    def __str__(self) -> str:
        return "-".join(str(g) for g in self.nodes)


@dataclass(frozen=True)
class PathIntegralResult:
    value: float
    abs_error_estimate: float
    resonant_count: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("error estimate must be non-negative")


@dataclass(frozen=True)
class DuhamelResult:
    state: ModeVector
    remainder_bound: float
    majorant_ratio: float
    quadrature_error: float
    paths_evaluated: int
    contributions: tuple = field(default=(), repr=False)

    @property
    def total_bound(self) -> float:
        return self.remainder_bound + self.quadrature_error


def count_paths(k0: int, k: int, length: int) -> int:
    """Number of nearest-neighbour paths of exactly ``length`` steps from k0 to k."""
    d = k - k0
    if length < abs(d) or (length + d) % 2:
        return 0
    return math.comb(length, (length + d) // 2)


def enumerate_paths(k0: int, k: int, max_len: int, cap: int = DEFAULT_PATH_CAP) -> list[InteractionPath]:
    """All paths k0 -> k with 1 <= length <= max_len.

    Ordered by length, then lexicographically on step signs with +1 first.
    """
    shortest = abs(k - k0) if k != k0 else 2
    if max_len < shortest:
        raise ValueError(f"max_len {max_len} is below the shortest path length {shortest}")
    total = sum(count_paths(k0, k, j) for j in range(1, max_len + 1))
    if total > cap:
        raise OracleRefusal(f"{total} paths exceed the cap of {cap}")
    out = []
    for j in range(1, max_len + 1):
        if count_paths(k0, k, j) == 0:
            continue
        ups = (j + k - k0) // 2
        # choose positions of the +1 steps; +1 < -1 lexicographically
        for pos in _combinations_lex(j, ups):
            nodes = [k0]
            for i in range(j):
                nodes.append(nodes[-1] + (1 if i in pos else -1))
            out.append(InteractionPath(tuple(nodes)))
    return out


def _combinations_lex(n, r):
    # subsets of positions for the +1 steps, so that the step sequence is
    # lexicographic with +1 ordered before -1
    from itertools import combinations

    return [set(c) for c in combinations(range(n), r)]


@lru_cache(maxsize=None)
def _lobatto(n: int):
    """Ascending Chebyshev-Lobatto nodes on [-1, 1] and the cumulative integration matrix."""
    x = -np.cos(np.pi * np.arange(n) / (n - 1))
    V = cheb.chebvander(x, n - 1)
    Vinv = np.linalg.inv(V)
    S = np.empty((n, n))
    for j in range(n):
        coef = np.zeros(n)
        coef[j] = 1.0
        S[:, j] = cheb.chebval(x, cheb.chebint(coef, lbnd=-1.0))
    mat = S @ Vinv
    return x, mat


@dataclass(frozen=True)
class PanelMesh:
    """Panels [edges[i], edges[i+1]] with n Lobatto nodes each."""

    edges: np.ndarray
    n: int

    @property
    def nodes(self) -> np.ndarray:
        x, _ = _lobatto(self.n)
        a, b = self.edges[:-1, None], self.edges[1:, None]
        return 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * np.diff(self.edges)

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Running integral from edges[0] of a function sampled at ``nodes``."""
        _, mat = _lobatto(self.n)
        local = (values @ mat.T) * self.half_widths[:, None]
        offsets = np.concatenate(([0.0], np.cumsum(local[:-1, -1])))
        return local + offsets[:, None]


def _graded_edges(tau0, tau1, centers, width):
    edges = {tau0, tau1}
    span = tau1 - tau0
    for xc in centers:
        h = width
        while h < 2 * span + abs(xc - tau0) + abs(xc - tau1):
            for e in (xc - h, xc + h):
                if tau0 < e < tau1:
                    edges.add(float(e))
            h *= 2.0
        if tau0 < xc < tau1:
            edges.add(float(xc))
    e = np.array(sorted(edges))
    # at least 8 panels over the whole interval
    fine = np.linspace(tau0, tau1, 9)
    return np.unique(np.concatenate([e, fine]))


def _build_mesh(tau0, tau1, p: ModelParams, quad_tol: float, max_rounds: int = 40):
    ks = p.ks[p.ks != 0]
    edges = _graded_edges(tau0, tau1, 1.0 / ks, 1.0 / p.eta)
    for _ in range(max_rounds):
        coarse = PanelMesh(edges, _N_COARSE)
        fine = PanelMesh(edges, _N_FINE)
        bad = np.zeros(len(edges) - 1, dtype=bool)
        for l in ks:
            ic = _panel_integrals(coarse, l, p)
            jf = _panel_integrals(fine, l, p)
            scale = max(1.0, float(np.sum(jf)))
            bad |= np.abs(ic - jf) > quad_tol * scale * 1e-2
        if not bad.any():
            return coarse, fine
        mids = 0.5 * (edges[:-1] + edges[1:])[bad]
        edges = np.unique(np.concatenate([edges, mids]))
        if len(edges) > 200_000:
            break
    raise OracleRefusal("quadrature mesh did not converge (coefficient peaks unresolved)")


def _panel_integrals(mesh: PanelMesh, l, p):
    x, mat = _lobatto(mesh.n)
    vals = _coef(mesh.nodes, l, p)
    return (vals @ mat[-1]) * mesh.half_widths


def _coef(nodes, l, p):
    d = 1.0 / l - nodes
    return p.c / (l * l * (p.eta ** -2 + d * d))


def coefficient_masses(tau0: float, tau1: float, p: ModelParams) -> dict[int, float]:
    """Exact L1 masses of A(l, .) over [tau0, tau1] for the nonzero window modes."""
    out = {}
    for l in p.ks:
        if l == 0:
            continue
        # int c/(l^2 (e^-2 + (1/l - s)^2)) ds = (c eta / l^2) [atan(eta (s - 1/l))]
        f = p.c * p.eta / (l * l)
        out[int(l)] = f * (math.atan(p.eta * (tau1 - 1.0 / l)) - math.atan(p.eta * (tau0 - 1.0 / l)))
    return out


def majorant_ratio(tau0: float, tau1: float, p: ModelParams) -> float:
    """q = 2 max_l mass_l: every order adds at most two choices of weight <= max mass."""
    masses = coefficient_masses(tau0, tau1, p)
    return 2.0 * max(masses.values()) if masses else 0.0


def _resonant_modes(tau0, tau1, p):
    return {int(l) for l in p.ks if l != 0 and tau0 <= 1.0 / l <= tau1}


def path_integral(path: InteractionPath | Sequence[int], tau0: float, tau1: float, p: ModelParams,
                  quad_tol: float = 1e-10, _meshes=None) -> PathIntegralResult:
    """Signed simplex integral of the path's coefficient product on [tau0, tau1]."""
    path = path if isinstance(path, InteractionPath) else InteractionPath(tuple(path))
    if tau1 < tau0:
        raise ValueError("path_integral needs tau0 <= tau1")
    res_modes = _resonant_modes(tau0, tau1, p)
    rc = sum(1 for g in path.nodes[:-1] if g in res_modes)
    if tau1 == tau0:
        return PathIntegralResult(1.0 if path.length == 0 else 0.0, 0.0, rc)
    if path.length == 0:
        return PathIntegralResult(1.0, 0.0, rc)
    if any(g == 0 for g in path.nodes[:-1]):
        return PathIntegralResult(0.0, 0.0, rc)
    coarse, fine = _meshes or _build_mesh(tau0, tau1, p, quad_tol)
    vals = []
    for mesh in (coarse, fine):
        nodes = mesh.nodes
        F = np.ones_like(nodes)
        for g, d in zip(path.nodes[:-1], path.steps):
            F = -d * mesh.cumulative(_coef(nodes, g, p) * F)
        vals.append(F[-1, -1])
    err = abs(vals[1] - vals[0]) + 64 * np.finfo(float).eps * abs(vals[1]) * path.length
    return PathIntegralResult(float(vals[1]), float(err), rc)


def duhamel_solve(initial: ModeVector, tau1: float, p: ModelParams, max_order: int,
                  quad_tol: float = 1e-10, path_cap: int = DEFAULT_PATH_CAP,
                  strict: bool = True, record_paths: bool = False) -> DuhamelResult:
    """Duhamel series up to max_order on the window of ``p``.

    The remainder bound is |w0|_1 q^(N+1)/(1-q) with q = majorant_ratio; it
    bounds the l1 (hence l2 and per-mode) distance to the window solution.
    With strict=True a ratio q >= 1 is refused; strict=False still sums the
    series but reports an infinite remainder.
    """
    if initial.kind is not VariableKind.TAU:
        raise ValueError("duhamel_solve needs a tau-kind state")
    if initial.k_min != p.k_min or initial.k_max != p.k_max:
        raise ValueError("initial window does not match params window")
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    tau0 = initial.time
    if tau1 < tau0:
        raise ValueError("duhamel_solve integrates forward only (tau1 >= initial.time)")
    q = majorant_ratio(tau0, tau1, p)
    if q >= 1.0 and strict:
        raise OracleRefusal(
            f"majorant divergent: ratio q = {q:.4g} >= 1 on [{tau0:g}, {tau1:g}]; "
            "shorten the interval or move it away from critical times"
        )
    amps0 = np.asarray(initial.amplitudes)
    starts = [int(k) for k, a in zip(p.ks, amps0) if a != 0]
    budget = len(starts) * (2 ** (max_order + 1) - 1)
    if budget > path_cap:
        raise OracleRefusal(f"up to {budget} paths exceed the cap of {path_cap}")

    l1 = float(np.sum(np.abs(amps0)))
    remainder = l1 * q ** (max_order + 1) / (1.0 - q) if q < 1.0 else math.inf
    out_re = {int(k): [] for k in p.ks}
    out_im = {int(k): [] for k in p.ks}
    records = []
    quad_err = []
    n_paths = 0
    if tau1 > tau0 and max_order > 0 and starts:
        coarse, fine = _build_mesh(tau0, tau1, p, quad_tol)
        nc, nf = coarse.nodes, fine.nodes
        coef_c = {int(l): _coef(nc, l, p) for l in p.ks if l != 0}
        coef_f = {int(l): _coef(nf, l, p) for l in p.ks if l != 0}
    for k0 in starts:
        a0 = complex(amps0[k0 - p.k_min])
        out_re[k0].append(a0.real)
        out_im[k0].append(a0.imag)
        if tau1 == tau0 or max_order == 0:
            continue
        # depth-first over paths sharing prefixes; +1 explored before -1
        stack = [((k0,), np.ones_like(nc), np.ones_like(nf))]
        while stack:
            nodes, Fc, Ff = stack.pop()
            m = nodes[-1]
            if len(nodes) - 1 >= max_order or m == 0:
                continue
            children = []
            for d in (1, -1):
                nxt = m + d
                if not p.k_min <= nxt <= p.k_max:
                    continue
                Gc = -d * coarse.cumulative(coef_c[m] * Fc)
                Gf = -d * fine.cumulative(coef_f[m] * Ff)
                vf, vc = Gf[-1, -1], Gc[-1, -1]
                n_paths += 1
                path = nodes + (nxt,)
                contrib = vf * a0
                out_re[nxt].append(contrib.real)
                out_im[nxt].append(contrib.imag)
                e = (abs(vf - vc) + 64 * np.finfo(float).eps * abs(vf) * len(path)) * abs(a0)
                quad_err.append(e)
                if record_paths:
                    records.append((str(InteractionPath(path)), complex(contrib), e))
                children.append((path, Gc, Gf))
            stack.extend(reversed(children))
    amps = np.array([complex(math.fsum(out_re[int(k)]), math.fsum(out_im[int(k)])) for k in p.ks])
    state = ModeVector(tau1, amps, p.k_min, VariableKind.TAU, p.eta)
    return DuhamelResult(state, remainder, q, math.fsum(quad_err), n_paths, tuple(records))
