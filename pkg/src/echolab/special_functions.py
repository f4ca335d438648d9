"""Gamma function and Gauss hypergeometric function on the real line.

Only what the exact single-resonance solutions need: real parameters, real
arguments z <= 1, principal branch.  Everything is double precision.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpecialFunctionError",
    "Hyp2F1Params",
    "FundamentalPair",
    "gamma_fn",
    "rgamma",
    "gauss_2f1",
    "hyp2f1",
    "hyp2f1_series",
    "hyp2f1_pfaff",
    "hyp2f1_large_z",
    "hyp2f1_near_one",
    "schroedinger_parameters",
    "hypergeom_u_solution",
]

_EPS = np.finfo(float).eps
_MAX_TERMS = 100_000
_DEGENERATE_GAP = 1e-6
_DEGENERATE_SHIFT = 1e-4

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


class SpecialFunctionError(ArithmeticError):
    """Raised on poles, non-convergence or unsupported parameter regions."""


_TINY_X = 1e-8
_EULER_GAMMA = 0.5772156649015329


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _sinpi(x: float) -> float:
    """sin(pi x) with exact argument reduction."""
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def _lanczos_gamma(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power so t**(x+0.5) does not overflow near x = 170
    half = t ** (0.5 * (x + 0.5))
    return math.sqrt(2.0 * math.pi) * half * math.exp(-t) * half * acc


def gamma_fn(x: float) -> float:
    """Gamma function via Lanczos (g=7) with the reflection formula for x < 1/2."""
    x = float(x)
    if not math.isfinite(x):
        raise SpecialFunctionError(f"gamma_fn: non-finite argument {x}")
    if _is_nonpositive_int(x):
        raise SpecialFunctionError(f"gamma_fn: pole at x = {x}")
    if abs(x) < _TINY_X:
        # Gamma(x) = 1/x - Euler gamma + O(x); relative error ~ x^2
        inv = 1.0 / x
        if not math.isfinite(inv):
            raise SpecialFunctionError(f"gamma_fn overflows at x = {x}")
        return inv - _EULER_GAMMA
    if x < 0.0:
        # Gamma(1-x) = (-x) Gamma(-x) avoids rounding 1-x for large |x|
        return math.pi / (_sinpi(x) * ((-x) * gamma_fn(-x)))
    if x < 0.5:
        return math.pi / (_sinpi(x) * _lanczos_gamma(1.0 - x))
    if x <= 11.0:
        return _lanczos_gamma(x)
    # Lanczos loses ~x ulp through t**x e**-t; the upward product stays near
    # sqrt(n) ulp.  Shifts x - j are exact in binary floating point here.
    n = int(x - 10.0)
    base = x - n
    prod = 1.0
    for j in range(n):
        prod *= base + j
    return _lanczos_gamma(base) * prod


def rgamma(x: float) -> float:
    """Reciprocal Gamma, 0 at the poles."""
    x = float(x)
    if _is_nonpositive_int(x):
        return 0.0
    if abs(x) < _TINY_X:
        return x / (1.0 - _EULER_GAMMA * x)
    return 1.0 / gamma_fn(x)


@dataclass(frozen=True)
class Hyp2F1Params:
    """Arguments of 2F1(a, b; c; z)."""

    a: float
    b: float
    c_param: float
    z: float

    def __post_init__(self):
        for name in ("a", "b", "c_param", "z"):
            if not math.isfinite(getattr(self, name)):
                raise SpecialFunctionError(f"Hyp2F1Params.{name} must be finite")
        if _is_nonpositive_int(self.c_param):
            raise SpecialFunctionError(
                f"c_param = {self.c_param} is a non-positive integer"
            )


def hyp2f1_series(a: float, b: float, c: float, z: float) -> float:
    """Direct Gauss series.  Stops after three consecutive negligible terms."""
    if abs(z) >= 1.0:
        raise SpecialFunctionError(f"series diverges or is too slow at z = {z}")
    total = 1.0
    term = 1.0
    small = 0
    # pairwise-free but compensated summation keeps ~1 ulp per term
    comp = 0.0
    for n in range(_MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) <= _EPS * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise SpecialFunctionError(
        f"2F1 series did not converge in {_MAX_TERMS} terms (a={a}, b={b}, c={c}, z={z})"
    )


def hyp2f1_pfaff(a: float, b: float, c: float, z: float) -> float:
    """Pfaff transformation (1-z)^(-a) F(a, c-b; c; z/(z-1)), for z < 1."""
    if z >= 1.0:
        raise SpecialFunctionError("Pfaff transformation needs z < 1")
    w = z / (z - 1.0)
    inner = hyp2f1_series(a, c - b, c, w) if abs(w) < 0.95 else _dispatch(a, c - b, c, w)
    return (1.0 - z) ** (-a) * inner


def _near_integer(x: float) -> bool:
    return abs(x - round(x)) < _DEGENERATE_GAP


def _degenerate_average(fn, a, b, c, z, what):
    # Symmetric shift in a breaks the a-b (or c-a-b) degeneracy; averaging the
    # two sides cancels the first-order error.
    warnings.warn(
        f"2F1 {what} is within {_DEGENERATE_GAP} of an integer; "
        f"using symmetric parameter shift of {_DEGENERATE_SHIFT}",
        RuntimeWarning,
        stacklevel=3,
    )
    h = _DEGENERATE_SHIFT
    return 0.5 * (fn(a + h, b, c, z) + fn(a - h, b, c, z))


def _large_z_raw(a: float, b: float, c: float, z: float) -> float:
    w = 1.0 / z
    mz = -z
    gc = gamma_fn(c)
    t1 = gc * gamma_fn(b - a) * rgamma(b) * rgamma(c - a)
    t2 = gc * gamma_fn(a - b) * rgamma(a) * rgamma(c - b)
    out = 0.0
    if t1 != 0.0:
        out += t1 * mz ** (-a) * _dispatch(a, a - c + 1.0, a - b + 1.0, w)
    if t2 != 0.0:
        out += t2 * mz ** (-b) * _dispatch(b, b - c + 1.0, b - a + 1.0, w)
    return out


def hyp2f1_large_z(a: float, b: float, c: float, z: float) -> float:
    """Connection formula z -> 1/z, valid for z < -1 on the principal branch."""
    if z >= -1.0:
        raise SpecialFunctionError("large-|z| connection formula needs z < -1")
    if _near_integer(a - b):
        return _degenerate_average(_large_z_raw, a, b, c, z, "a - b")
    return _large_z_raw(a, b, c, z)


def _near_one_raw(a: float, b: float, c: float, z: float) -> float:
    s = c - a - b
    gc = gamma_fn(c)
    w = 1.0 - z
    out = 0.0
    t1 = gc * gamma_fn(s) * rgamma(c - a) * rgamma(c - b) if not _is_nonpositive_int(s) else 0.0
    if t1 != 0.0:
        out += t1 * (_dispatch(a, b, a + b - c + 1.0, w) if w > 0 else 1.0)
    if w > 0:
        t2 = gc * gamma_fn(-s) * rgamma(a) * rgamma(b) if not _is_nonpositive_int(-s) else 0.0
        if t2 != 0.0:
            out += t2 * w ** s * _dispatch(c - a, c - b, s + 1.0, w)
    return out


def hyp2f1_near_one(a: float, b: float, c: float, z: float) -> float:
    """Connection formula z -> 1-z for 1/2 < z <= 1 (Gauss's sum at z = 1)."""
    if not 0.0 < z <= 1.0:
        raise SpecialFunctionError("1-z connection formula needs 0 < z <= 1")
    s = c - a - b
    if z == 1.0 and s <= 0:
        raise SpecialFunctionError(f"2F1 diverges at z = 1 when c-a-b = {s} <= 0")
    if _near_integer(s) and z != 1.0:
        return _degenerate_average(_near_one_raw, a, b, c, z, "c - a - b")
    return _near_one_raw(a, b, c, z)


def _dispatch(a: float, b: float, c: float, z: float) -> float:
    if _is_nonpositive_int(c):
        raise SpecialFunctionError(f"c = {c} is a non-positive integer")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    if abs(z) <= 0.5:
        return hyp2f1_series(a, b, c, z)
    if -2.0 <= z < -0.5:
        return hyp2f1_pfaff(a, b, c, z)
    if z < -2.0:
        return hyp2f1_large_z(a, b, c, z)
    if 0.5 < z <= 1.0:
        return hyp2f1_near_one(a, b, c, z)
    raise SpecialFunctionError(f"z = {z} > 1 is outside the implemented domain")


def gauss_2f1(p: Hyp2F1Params) -> float:
    """Evaluate 2F1(a, b; c; z) for real parameters and real z <= 1."""
    value = _dispatch(float(p.a), float(p.b), float(p.c_param), float(p.z))
    if not math.isfinite(value):
        raise SpecialFunctionError(f"2F1 evaluation produced {value} for {p}")
    return value


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Positional shorthand for :func:`gauss_2f1`."""
    return gauss_2f1(Hyp2F1Params(a, b, c, z))


def schroedinger_parameters(c: float) -> tuple[float, float]:
    """(alpha, beta) with alpha*beta = c^2/4 and alpha + beta = -1/2.

    These make F(alpha, beta; 1/2; -s^2) the even solution of
    u'' + c^2/(1 + s^2) u = 0.
    """
    if not 0.0 <= c < 0.5:
        raise SpecialFunctionError(f"need 0 <= c < 1/2, got c = {c}")
    root = math.sqrt(1.0 - 4.0 * c * c)
    return -0.25 - 0.25 * root, -0.25 + 0.25 * root


@dataclass(frozen=True)
class FundamentalPair:
    """Even and odd solutions of u'' + c^2/(xi^-2 + t^2) u = 0 at one time t.

    ``u`` and ``u_prime`` hold (even, odd) values.  The even solution has
    u(0)=1, u'(0)=0 and the odd one u(0)=0, u'(0)=1.
    """

    t: float
    u: np.ndarray
    u_prime: np.ndarray

    @property
    def wronskian(self) -> float:
        return float(self.u[0] * self.u_prime[1] - self.u[1] * self.u_prime[0])

    def matrix(self) -> np.ndarray:
        """Fundamental matrix [[u_e, u_o], [u_e', u_o']]."""
        return np.array([[self.u[0], self.u[1]], [self.u_prime[0], self.u_prime[1]]])


def hypergeom_u_solution(c: float, xi: float, t: float) -> FundamentalPair:
    """Fundamental pair through 2F1 at argument z = -xi^2 t^2.

    Derivatives use d/dz F(a,b;c;z) = (ab/c) F(a+1,b+1;c+1;z).
    """
    if abs(t) > 1.0:
        raise SpecialFunctionError(f"|t| <= 1 required, got t = {t}")
    if xi <= 0:
        raise SpecialFunctionError(f"xi must be positive, got {xi}")
    al, be = schroedinger_parameters(c)
    z = -(xi * t) ** 2
    x2 = xi * xi

    fe = hyp2f1(al, be, 0.5, z)
    fe1 = hyp2f1(al + 1.0, be + 1.0, 1.5, z)
    ue = fe
    due = -2.0 * x2 * t * (al * be / 0.5) * fe1

    ah, bh = al + 0.5, be + 0.5
    fo = hyp2f1(ah, bh, 1.5, z)
    fo1 = hyp2f1(ah + 1.0, bh + 1.0, 2.5, z)
    uo = t * fo
    duo = fo - 2.0 * x2 * t * t * (ah * bh / 1.5) * fo1

    return FundamentalPair(t=float(t), u=np.array([ue, uo]), u_prime=np.array([due, duo]))
