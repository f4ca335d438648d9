"""Single-resonance solution operators and chain-growth predictions.

Rescaled time t in (-1, 1) around one resonance, xi = eta / k^2.  The
second-order reduction is u'' + c^2/(xi^-2 + t^2) u = 0.  Its pieces:

* outer intervals |t| in (1/xi, 1): u'' + c^2/t^2 u = 0, power laws |t|^g,
* inner interval |t| < 1/xi: u'' + c^2 xi^2 u = 0, a rotation by 2c,
* the exact solution through 2F1 (see special_functions).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core_model import TransferMatrix
from .integrator import IntegratorConfig, integrate
from .special_functions import hypergeom_u_solution

__all__ = [
    "Variant",
    "Side",
    "GrowthVariant",
    "Exponents",
    "PredictedGain",
    "TransferMatrix",
    "exponents",
    "rotation_solution",
    "inner_matrix",
    "outer_matrix",
    "composed_scattering",
    "hypergeom_scattering",
    "schroedinger_reference",
    "three_mode_interval",
    "three_mode_generator",
    "three_mode_operator",
    "predicted_gain",
    "chain_growth_prediction",
    "log_chain_growth_prediction",
    "optimal_k",
    "exponent_slope",
]


class Variant(str, Enum):
    TWO_MODE = "two_mode"
    THREE_MODE = "three_mode"


class GrowthVariant(str, Enum):
    TWO_MODE = "two_mode"
    THREE_MODE = "three_mode"
    UNMODIFIED = "unmodified"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Exponents:
    gamma1: float
    gamma2: float
    gamma: float
    variant: Variant


def exponents(c: float, variant: Variant | str = Variant.THREE_MODE) -> Exponents:
    """Roots of g(g-1) + q = 0 with q = c^2 (two-mode) or 2c^2 (three-mode)."""
    variant = Variant(variant)
    q = c * c if variant is Variant.TWO_MODE else 2.0 * c * c
    disc = 0.25 - q
    if disc <= 0:
        limit = 0.5 if variant is Variant.TWO_MODE else math.sqrt(1 / 8)
        raise ValueError(
            f"c = {c} is at or above the {variant.value} threshold {limit:.6f}; "
            "the exponents are complex (oscillatory regime)"
        )
    r = math.sqrt(disc)
    g2 = 0.5 - r
    return Exponents(gamma1=0.5 + r, gamma2=g2, gamma=2.0 * r, variant=variant)


def rotation_solution(c: float, eta: float, l: int, tau: float) -> TransferMatrix:
    """Exact flow of the constant-coefficient two-mode system: rotation by c eta tau / l^2."""
    th = c * eta * tau / (l * l)
    cs, sn = math.cos(th), math.sin(th)
    return TransferMatrix(np.array([[cs, sn], [-sn, cs]]), (0.0, tau), "rotation")


def inner_matrix(c: float, xi: float) -> TransferMatrix:
    """Flow of u'' + c^2 xi^2 u = 0 on (-1/xi, 1/xi), acting on (u, u')."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    if c == 0:
        raise ValueError("c must be nonzero")
    cs, sn = math.cos(2 * c), math.sin(2 * c)
    m = np.array([[cs, sn / (c * xi)], [-c * xi * sn, cs]])
    return TransferMatrix(m, (-1.0 / xi, 1.0 / xi), "inner")


def outer_matrix(c: float, xi: float, side: Side | str, variant: Variant | str = Variant.TWO_MODE) -> TransferMatrix:
    """Flow of u'' + q/t^2 u = 0 between |t| = 1 and |t| = 1/xi on (u, u').

    Left maps t = -1 to t = -1/xi; Right maps t = 1/xi to t = 1.  The basis
    |t|^g1, |t|^g2 has derivative sgn(t) g |t|^(g-1).
    """
    side = Side(side)
    if xi <= 0:
        raise ValueError("xi must be positive")
    e = exponents(c, variant)
    g1, g2 = e.gamma1, e.gamma2
    if g1 == g2:
        raise ValueError("degenerate power-law basis (gamma1 = gamma2)")
    s = -1.0 if side is Side.LEFT else 1.0
    near = np.array([[xi ** -g1, xi ** -g2], [s * g1 * xi ** (1 - g1), s * g2 * xi ** (1 - g2)]])
    far = np.array([[1.0, 1.0], [s * g1, s * g2]])
    if side is Side.LEFT:
        m = near @ np.linalg.inv(far)
        iv = (-1.0, -1.0 / xi)
    else:
        m = far @ np.linalg.inv(near)
        iv = (1.0 / xi, 1.0)
    return TransferMatrix(m, iv, f"outer-{side.value}-{e.variant.value}")


def composed_scattering(c: float, xi: float, variant: Variant | str = Variant.TWO_MODE) -> TransferMatrix:
    """Right-outer * inner * Left-outer: (u, u')(-1) -> (u, u')(1)."""
    if xi <= 1:
        raise ValueError("composed scattering needs xi > 1")
    m = outer_matrix(c, xi, Side.RIGHT, variant).entries @ inner_matrix(c, xi).entries \
        @ outer_matrix(c, xi, Side.LEFT, variant).entries
    return TransferMatrix(m, (-1.0, 1.0), f"composed-{Variant(variant).value}")


def hypergeom_scattering(c: float, xi: float) -> TransferMatrix:
    """Exact (u, u')(-1) -> (u, u')(1) for u'' + c^2/(xi^-2 + t^2) u = 0.

    Phi(t) = [[u_e, u_o], [u_e', u_o']] with unit Wronskian, so
    M = Phi(1) Phi(-1)^-1 and Phi(-1) follows from parity.
    """
    if not 0 <= c < 0.5:
        raise ValueError("hypergeometric solution needs 0 <= c < 1/2")
    fp = hypergeom_u_solution(c, xi, 1.0)
    ue, uo = fp.u
    due, duo = fp.u_prime
    phi_p = np.array([[ue, uo], [due, duo]])
    phi_m = np.array([[ue, -uo], [-due, duo]])
    w = ue * duo - uo * due
    phi_m_inv = np.array([[phi_m[1, 1], -phi_m[0, 1]], [-phi_m[1, 0], phi_m[0, 0]]]) / w
    return TransferMatrix(phi_p @ phi_m_inv, (-1.0, 1.0), "hypergeometric")


def schroedinger_reference(c: float, xi: float, t0: float = -1.0, t1: float = 1.0,
                           rel_tol: float = 1e-12) -> TransferMatrix:
    """Direct integration of the 2x2 first-order system, for cross-checks."""
    c2 = c * c
    x2 = xi ** -2

    def f(t, y):
        pot = c2 / (x2 + t * t)
        return np.array([y[1], -pot * y[0]])

    res = integrate(f, t0, t1, np.eye(2), rel_tol=rel_tol, abs_tol=rel_tol * 1e-4,
                    critical_times=[0.0], zone_halfwidth=10.0 / xi, zone_step=1.0 / xi)
    return TransferMatrix(res.y, (t0, t1), "ode-reference")


def three_mode_interval(k0: int | None) -> tuple[float, float]:
    """(t0, t1) = (-k0/(2(k0+1)), k0/(2(k0-1))); (-1/2, 1/2) in the k0 -> inf limit."""
    if k0 is None:
        return -0.5, 0.5
    if k0 < 2:
        raise ValueError("three-mode model needs k0 >= 2 (mode k0-1 must be nonzero)")
    return -k0 / (2.0 * (k0 + 1)), k0 / (2.0 * (k0 - 1))


def three_mode_generator(c: float, xi: float, k0: int | None = None):
    """G(t) for (u1, u2, u3)' = G(t) (u1, u2, u3).

    From w(k)' = -a(k-1) w(k-1) + a(k+1) w(k+1) on modes k0-1, k0, k0+1:
    u1' = -a0 u2, u2' = (a+ + a-) u1 + (a+ - a-) u3, u3' = 0.
    """
    x2 = xi ** -2
    r_p = 1.0 if k0 is None else (k0 + 1.0) / k0
    r_m = 1.0 if k0 is None else (k0 - 1.0) / k0

    def coeffs(t):
        a0 = c / (x2 + t * t)
        ap = c / (x2 * r_p * r_p + (1.0 + r_p * t) ** 2)
        am = c / (x2 * r_m * r_m + (1.0 - r_m * t) ** 2)
        return a0, ap, am

    def gen(t):
        a0, ap, am = coeffs(t)
        return np.array([[0.0, -a0, 0.0], [ap + am, 0.0, ap - am], [0.0, 0.0, 0.0]])

    return gen, coeffs


def three_mode_operator(c: float, xi: float, interval: tuple[float, float] | None = None,
                        cfg: IntegratorConfig | None = None, k0: int | None = None) -> TransferMatrix:
    """Solution operator of the three-mode model in (u1, u2, u3).

    u1 = (w(k0+1) - w(k0-1))/2, u2 = w(k0), u3 = (w(k0+1) + w(k0-1))/2.
    The generator's third row vanishes, so row 3 of the operator is
    (0, 0, 1) exactly.
    """
    cfg = cfg or IntegratorConfig(rel_tol=1e-12, abs_tol=1e-16)
    t0, t1 = interval if interval is not None else three_mode_interval(k0)
    gen, _ = three_mode_generator(c, xi, k0)

    def f(t, y):
        return gen(t) @ y

    zone = cfg.delta_res if cfg.delta_res is not None else 10.0 / xi
    res = integrate(f, t0, t1, np.eye(3), rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                    max_step=cfg.max_step, critical_times=[0.0], zone_halfwidth=zone,
                    zone_step=cfg.max_step * cfg.resonance_refinement, max_steps=cfg.max_steps)
    m = np.array(res.y)
    m[2] = (0.0, 0.0, 1.0)  # exact: u3' = 0 identically
    return TransferMatrix(m, (t0, t1), "three-mode")


@dataclass(frozen=True)
class PredictedGain:
    u1_gain: float
    u2_gain: float


def predicted_gain(c: float, xi: float, variant: Variant | str = Variant.THREE_MODE) -> PredictedGain:
    """Closed-form asymptotic gains c^(2-2g2) xi^g and c^(4-2g2) xi^g."""
    if xi < 10.0 / c:
        warnings.warn(f"xi = {xi} < 10/c: outside the asymptotic regime", RuntimeWarning, stacklevel=2)
    e = exponents(c, variant)
    base = xi ** e.gamma
    return PredictedGain(c ** (2 - 2 * e.gamma2) * base, c ** (4 - 2 * e.gamma2) * base)


def log_chain_growth_prediction(c: float, eta: float, k0: int,
                                variant: GrowthVariant | str = GrowthVariant.TWO_MODE) -> float:
    """log of the predicted chain factor, via lgamma.

    two_mode:   c^k (eta^k/(k!)^2)^g,           g = sqrt(1-4c^2)
    three_mode: (c^(2-2g2))^k (eta^k/(k!)^2)^g, g = sqrt(1-8c^2)
    unmodified: eta^k/(k!)^2
    """
    variant = GrowthVariant(variant)
    if k0 < 1:
        raise ValueError("k0 >= 1 required")
    if eta <= 0:
        raise ValueError("eta must be positive")
    core = k0 * math.log(eta) - 2.0 * math.lgamma(k0 + 1.0)
    if variant is GrowthVariant.UNMODIFIED:
        return core
    if variant is GrowthVariant.TWO_MODE:
        e = exponents(c, Variant.TWO_MODE)
        return k0 * math.log(c) + e.gamma * core
    e = exponents(c, Variant.THREE_MODE)
    return k0 * (2 - 2 * e.gamma2) * math.log(c) + e.gamma * core


def chain_growth_prediction(c: float, eta: float, k0: int,
                            variant: GrowthVariant | str = GrowthVariant.TWO_MODE) -> float:
    """Predicted chain growth factor (may overflow to inf; use the log form)."""
    lg = log_chain_growth_prediction(c, eta, k0, variant)
    return math.exp(lg) if lg < 709.0 else math.inf


def optimal_k(c: float, eta: float, variant: GrowthVariant | str = GrowthVariant.TWO_MODE) -> int:
    """Integer argmax of the predicted chain factor over k in [1, 2 sqrt(eta)].

    Starts from the continuous guess sqrt(c^(1/g) eta) and climbs; the log
    factor is concave in k, so the local maximum is global.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    variant = GrowthVariant(variant)
    kmax = max(1, int(math.floor(2.0 * math.sqrt(eta))))
    if variant is GrowthVariant.UNMODIFIED:
        g = 1.0
    else:
        g = exponents(c, Variant(variant.value)).gamma
    k = int(round(math.sqrt(c ** (1.0 / g) * eta)))
    k = min(max(k, 1), kmax)

    def val(j):
        return log_chain_growth_prediction(c, eta, j, variant)

    while k < kmax and val(k + 1) > val(k):
        k += 1
    while k > 1 and val(k - 1) > val(k):
        k -= 1
    return k


def exponent_slope(xis, values) -> float:
    """Least-squares slope of log(values) against log(xis)."""
    x = np.log(np.asarray(xis, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
