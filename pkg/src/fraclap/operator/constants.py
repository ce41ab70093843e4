"""Kernel normalisation, symmetric-stencil constant kappa and tail masses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate, special

_SHAPES = {1: "interval", 2: "square"}


def _check_s(s):
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s} outside (0, 1)")


def _check_shape(n, shape):
    if n not in _SHAPES:
        raise ValueError(f"dimension must be 1 or 2, got {n}")
    if shape is None:
        return _SHAPES[n]
    if shape != _SHAPES[n]:
        raise ValueError(f"shape {shape!r} not available in {n}D (use {_SHAPES[n]!r})")
    return shape


def c_ns(n: int, s: float) -> float:
    """Normalisation constant C_{n,s} of the integral fractional Laplacian."""
    _check_s(s)
    return 4.0 ** s * s * math.gamma(s + 0.5 * n) / (math.pi ** (0.5 * n) * math.gamma(1.0 - s))


def _kappa_square_quad(s: float) -> float:
    val, _ = integrate.quad(lambda t: (math.sqrt(2.0) * math.cos(t)) ** (2.0 * s - 2.0),
                            0.0, math.pi / 4, epsabs=1e-14, epsrel=1e-14, limit=200)
    return val / (1.0 - s)


def _kappa_square_closed(s: float) -> float:
    if s == 0.5:
        return math.atanh(math.tan(math.pi / 8)) / ((1.0 - s) * 2.0 ** (-s))
    a = s - 0.5
    # incomplete beta B_{1/2}(a, 1/2), continued to a < 0 through 2F1
    inc_beta = 0.5 ** a / a * special.hyp2f1(a, 0.5, a + 1.0, 0.5)
    full = math.sqrt(math.pi) * special.gamma(a) / special.gamma(s)
    return (full - inc_beta) / ((1.0 - s) * 2.0 ** (2.0 - s))


def kappa_constant(n: int, s: float, shape: str | None = None, method: str = "closed") -> float:
    """Constant kappa_{n,s} multiplying the centred second difference.

    ``method`` selects the incomplete-beta closed form ("closed") or adaptive
    quadrature of the angular integral ("quad") for the 2D square.
    """
    _check_s(s)
    shape = _check_shape(n, shape)
    if n == 1:
        return 1.0 / (2.0 * (1.0 - s))
    if method == "quad":
        return _kappa_square_quad(s)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    # both Gamma(s - 1/2) and the incomplete beta blow up at s = 1/2
    if s != 0.5 and abs(s - 0.5) < 1e-4:
        return _kappa_square_quad(s)
    return _kappa_square_closed(s)


@lru_cache(maxsize=256)
def _square_tail_unit(s: float) -> float:
    val, _ = integrate.quad(lambda t: (math.sqrt(2.0) * math.cos(t)) ** (2.0 * s),
                            0.0, math.pi / 4, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 4.0 / s * val


def tail_kernel_mass(n: int, s: float, H: float, shape: str | None = None) -> float:
    """Integral of |z|^{-n-2s} over the complement of the singular region.

    The region is the interval (-H, H) in 1D and the square of half-side
    H/sqrt(2) in 2D. The result scales exactly as H**(-2s).
    """
    _check_s(s)
    shape = _check_shape(n, shape)
    if not H > 0:
        raise ValueError(f"scale H must be positive, got {H}")
    unit = 1.0 / s if n == 1 else _square_tail_unit(s)
    return unit * H ** (-2.0 * s)


@dataclass(frozen=True)
class KernelConstants:
    n: int
    s: float
    c_ns: float
    kappa: float
    tail_unit_mass: float

    @classmethod
    def build(cls, n: int, s: float) -> "KernelConstants":
        return cls(n, s, c_ns(n, s), kappa_constant(n, s), tail_kernel_mass(n, s, 1.0))
