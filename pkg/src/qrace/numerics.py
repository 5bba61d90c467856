"""Special functions and quadrature used by the race model.

Provides a principal-branch Lambert W (Halley iteration, branch-point
series near z = -1/e) and an adaptive Simpson integrator with explicit
tolerance control. Everything here is pure and reentrant.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable

_INV_E = math.exp(-1.0)
_EPS = sys.float_info.epsilon

# Switch to the branch-point expansion inside this distance of -1/e, where
# the Halley denominator (w + 1) degenerates. The truncated series error is
# O((z + 1/e)^2), far below the residual target over this range.
_BRANCH_CUTOFF = 1e-7


class QuadratureError(ArithmeticError):
    """Adaptive integration exhausted max_depth before reaching tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Error targets for adaptive integration.

    abs_tol and rel_tol combine as max(abs_tol, rel_tol * |estimate|);
    max_depth caps the interval bisection depth.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 60

    def __post_init__(self) -> None:
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be > 0")
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be > 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def _branch_series(z: float) -> float:
    # Square-root expansion about the branch point z = -1/e.
    p2 = 2.0 * (math.e * z + 1.0)
    p = math.sqrt(p2) if p2 > 0.0 else 0.0
    return -1.0 + p - p2 / 3.0 + (11.0 / 72.0) * p * p2


def lambert_w0(z: float) -> float:
    """Principal branch of the Lambert W function for real z >= -1/e.

    Returns w >= -1 with w * exp(w) = z. Raises ValueError below -1/e,
    where no real principal-branch value exists.
    """
    z = float(z)
    if math.isnan(z):
        raise ValueError("lambert_w0 is undefined for NaN")
    if z < -_INV_E:
        raise ValueError(f"lambert_w0 domain is z >= -1/e; got z = {z}")
    if z == 0.0:
        return 0.0
    if z + _INV_E <= _BRANCH_CUTOFF:
        return _branch_series(z)

    # Initial guess: branch-point series near -1/e, w ~= z for small z,
    # log(z) - log(log(z)) asymptotically.
    if z < -0.25:
        w = _branch_series(z)
    elif z < math.e:
        w = z / (1.0 + z) if z > 0.0 else z * math.exp(-z)
    else:
        lz = math.log(z)
        w = lz - math.log(lz)

    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - z
        w1 = w + 1.0
        # Halley step for f(w) = w e^w - z.
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) < 1e-14 * max(1.0, abs(w)):
            return w
    # The step criterion can chatter at the last ulp near the branch point;
    # accept on residual instead of failing spuriously.
    if abs(w * math.exp(w) - z) <= 1e-13 * max(1.0, abs(z)):
        return w
    raise ArithmeticError(f"lambert_w0 failed to converge for z = {z}")


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Integrate f on [a, b] by adaptive Simpson bisection.

    The result is within max(abs_tol, rel_tol * |integral|) for smooth
    integrands and is deterministic for fixed inputs. Accepted panels use
    Richardson extrapolation of the two Simpson estimates.

    Raises QuadratureError if the bisection depth is exhausted before the
    local tolerance is met anywhere.
    """
    if spec is None:
        spec = QuadratureSpec()
    a = float(a)
    b = float(b)
    if a > b:
        raise ValueError("integrate requires a <= b")
    if a == b:
        return 0.0

    fa = f(a)
    fb = f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = _simpson(fa, fm, fb, b - a)
    tol = max(spec.abs_tol, spec.rel_tol * abs(whole))

    def recurse(lo, hi, flo, fmid, fhi, s, tol, depth):
        m = 0.5 * (lo + hi)
        lm = 0.5 * (lo + m)
        rm = 0.5 * (m + hi)
        flm = f(lm)
        frm = f(rm)
        s_left = _simpson(flo, flm, fmid, m - lo)
        s_right = _simpson(fmid, frm, fhi, hi - m)
        s2 = s_left + s_right
        err = (s2 - s) / 15.0
        # Tolerance halving bottoms out at float granularity: once the error
        # estimate sits at the roundoff of the panel value, or the panel is a
        # few ulps wide, further splitting only shuffles last bits.
        floor = 4.0 * _EPS * abs(s2)
        if abs(err) <= max(tol, floor) or hi - lo <= 16.0 * _EPS * max(
            1.0, abs(lo), abs(hi)
        ):
            return s2 + err
        if depth >= spec.max_depth:
            raise QuadratureError(
                f"integration did not converge on [{lo}, {hi}] "
                f"(residual {abs(err):.3e} > tolerance {tol:.3e} at depth {depth})"
            )
        half_tol = 0.5 * tol
        return recurse(lo, m, flo, flm, fmid, s_left, half_tol, depth + 1) + recurse(
            m, hi, fmid, frm, fhi, s_right, half_tol, depth + 1
        )

    return recurse(a, b, fa, fm, fb, whole, tol, 0)
