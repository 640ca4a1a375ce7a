"""Modified spherical Bessel functions of the first and second kind.

Conventions (x > 0, integer l >= 0):

    i_l(x) = sqrt(pi/(2x)) I_{l+1/2}(x),   i_0(x) = sinh(x)/x
    k_l(x) = sqrt(2/(pi x)) K_{l+1/2}(x),  k_0(x) = exp(-x)/x

Both satisfy the three-term recurrence f_{l-1}(x) - f_{l+1}(x) =
+-((2l+1)/x) f_l(x) (plus sign for i, minus for k).  Upward recurrence is
stable for k and unstable for i, so i is evaluated by downward (Miller)
recurrence normalized against i_0.  Logarithmic derivatives are built from
neighbor ratios directly, which keeps them finite even where the function
values themselves would overflow or underflow.

Values that would exceed the double range raise OverflowError instead of
returning infinities; ``scaled=True`` strips the exponential factor
(e^-x for i, e^x for k) and stays representable for all practical x.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "bessel_i",
    "bessel_k",
    "bessel_i_all",
    "bessel_k_all",
    "bessel_k_table",
    "bessel_i_ratio",
    "bessel_k_ratio",
    "log_deriv_i",
    "log_deriv_k",
]

_RESCALE = 1e280


def _check_args(ell: int, x: float) -> float:
    if ell < 0:
        raise ValueError(f"order must be >= 0, got {ell}")
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"argument must be > 0, got {x}")
    return x


def _i0_scaled(x: float) -> float:
    # e^-x sinh(x)/x = (1 - e^-2x)/(2x), accurate for all x > 0
    return -math.expm1(-2.0 * x) / (2.0 * x)


def _miller_start(lmax: int, x: float) -> int:
    # Downward recurrence suppresses the contaminating k-type solution by
    # (x/2j)^2 per step once 2j > x; pad until total suppression ~ e^45.
    j = max(lmax, int(0.5 * x))
    s = 0.0
    while s < 45.0:
        j += 1
        r = 2.0 * j / x
        if r > 1.0:
            s += 2.0 * math.log(r)
    return j


def bessel_i_all(lmax: int, x: float, scaled: bool = False) -> np.ndarray:
    """i_0(x)..i_lmax(x) by downward Miller recurrence normalized by i_0.

    With ``scaled=True`` returns e^-x i_l(x).
    """
    x = _check_args(lmax, x)
    vals = np.empty(lmax + 1)
    f_hi = 0.0  # unnormalized i_{j+2}
    f_lo = 1e-30  # unnormalized i_{j+1}
    for j in range(_miller_start(lmax, x), -1, -1):
        f_hi, f_lo = f_lo, f_hi + (2 * j + 3) / x * f_lo
        if j <= lmax:
            vals[j] = f_lo
        if f_lo > _RESCALE:
            f_hi /= _RESCALE
            f_lo /= _RESCALE
            if j <= lmax:
                vals[j:] /= _RESCALE
    i0 = _i0_scaled(x) if scaled else math.sinh(x) / x
    if not math.isfinite(i0):
        raise OverflowError(f"i_0({x}) exceeds double range; use scaled=True")
    vals *= i0 / vals[0]
    if not np.all(np.isfinite(vals)):
        raise OverflowError(f"i_l({x}) exceeds double range for some l <= {lmax}")
    if np.any(vals == 0.0):
        raise OverflowError(f"i_l({x}) underflows for some l <= {lmax}")
    return vals


def bessel_i(ell: int, x: float, scaled: bool = False) -> float:
    """Modified spherical Bessel function of the first kind, i_l(x) > 0."""
    return float(bessel_i_all(ell, x, scaled=scaled)[ell])


def bessel_k_all(lmax: int, x: float, scaled: bool = False) -> np.ndarray:
    """k_0(x)..k_lmax(x) by stable upward recurrence.

    With ``scaled=True`` returns e^x k_l(x).
    """
    x = _check_args(lmax, x)
    vals = np.empty(lmax + 1)
    e = 1.0 if scaled else math.exp(-x)
    if e == 0.0:
        raise OverflowError(f"k_l({x}) underflows; use scaled=True")
    vals[0] = e / x
    if lmax >= 1:
        vals[1] = e * (1.0 / x + 1.0 / (x * x))
    with np.errstate(over="ignore"):
        for ell in range(1, lmax):
            vals[ell + 1] = vals[ell - 1] + (2 * ell + 1) / x * vals[ell]
            if not math.isfinite(vals[ell + 1]):
                raise OverflowError(f"k_{ell + 1}({x}) exceeds double range")
    return vals


def bessel_k(ell: int, x: float, scaled: bool = False) -> float:
    """Modified spherical Bessel function of the second kind, k_l(x) > 0."""
    return float(bessel_k_all(ell, x, scaled=scaled)[ell])


def bessel_k_table(lmax: int, x, scaled: bool = False) -> np.ndarray:
    """Vectorized k_l over an argument array, shape (len(x), lmax+1)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("arguments must be > 0")
    out = np.empty((x.size, lmax + 1))
    e = np.ones_like(x) if scaled else np.exp(-x)
    out[:, 0] = e / x
    if lmax >= 1:
        out[:, 1] = e * (1.0 / x + 1.0 / (x * x))
    for ell in range(1, lmax):
        out[:, ell + 1] = out[:, ell - 1] + (2 * ell + 1) / x * out[:, ell]
    if not np.all(np.isfinite(out)):
        raise OverflowError("k_l exceeds double range for some argument")
    return out


def bessel_i_ratio(ell: int, x: float) -> float:
    """Ratio i_l(x)/i_{l-1}(x) for l >= 1, by modified Lentz continued fraction.

    Always in (0, 1); free of overflow for any l, x.
    """
    if ell < 1:
        raise ValueError(f"ratio needs l >= 1, got {ell}")
    x = _check_args(ell, x)
    # 1/t = B_0 + 1/(B_1 + 1/(B_2 + ...)), B_k = (2(l+k)+1)/x
    tiny = 1e-300
    f = (2 * ell + 1) / x
    if f == 0.0:
        f = tiny
    c, d = f, 0.0
    for k in range(1, 100000):
        b = (2 * (ell + k) + 1) / x
        d = b + d
        if d == 0.0:
            d = tiny
        c = b + 1.0 / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            return 1.0 / f
    raise RuntimeError(f"continued fraction for i_{ell}/{ell - 1}({x}) did not converge")


def bessel_k_ratio(ell: int, x: float) -> float:
    """Ratio k_{l-1}(x)/k_l(x), with k_{-1} = k_0; free of overflow."""
    x = _check_args(ell, x)
    r = 1.0  # k_{-1}/k_0
    for j in range(ell):
        r = 1.0 / (r + (2 * j + 1) / x)
    return r


def log_deriv_i(ell: int, x: float) -> float:
    """Logarithmic derivative i_l'(x)/i_l(x) = i_{l+1}/i_l + l/x > 0."""
    x = _check_args(ell, x)
    return bessel_i_ratio(ell + 1, x) + ell / x


def log_deriv_k(ell: int, x: float) -> float:
    """Negated logarithmic derivative -k_l'(x)/k_l(x) >= (l+1)/x.

    Equals k_{l-1}(x)/k_l(x) + (l+1)/x.
    """
    x = _check_args(ell, x)
    return bessel_k_ratio(ell, x) + (ell + 1) / x
