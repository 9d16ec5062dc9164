"""Coordinate changes between the radial, logarithmic, planar, disc and
slope-ratio descriptions of a solution.

Branches: ``w = cot f`` only determines ``f`` modulo ``pi``. Callers carry
an integer ``branch`` ``m`` with ``f`` in ``(m pi, (m+1) pi)``.
"""

from __future__ import annotations

import math

from ._validation import check_finite
from .exceptions import BranchBoundaryError, InvalidInputError, OutOfChartError, TurningPointError
from .model import Direction, LogState, PlanarState, PoincareState, RadialPoint, SlopeRatioState

TWO_PI = 2.0 * math.pi

__all__ = [
    "Direction",
    "radial_to_log",
    "log_to_radial",
    "log_to_planar",
    "planar_to_log",
    "planar_to_poincare",
    "poincare_to_planar",
    "planar_to_slope_ratio",
    "branch_of",
    "normalize_angle",
]


def normalize_angle(phi: float) -> float:
    out = math.fmod(phi, TWO_PI)
    if out < 0:
        out += TWO_PI
    return 0.0 if out >= TWO_PI else out


def radial_to_log(pt: RadialPoint, direction=Direction.TOWARD_ORIGIN) -> LogState:
    r, h, dh = pt
    check_finite(r=r, h=h, dh=dh)
    if not r > 0:
        raise InvalidInputError(f"r must be positive, got {r!r}")
    d = Direction(direction)
    return LogState(d.sign * math.log(r), h, d.sign * r * dh, d)


def log_to_radial(s: LogState) -> RadialPoint:
    t, f, df, direction = s
    d = Direction(direction)
    r = math.exp(d.sign * t)
    return RadialPoint(r, f, d.sign * df / r)


def branch_of(f: float) -> int:
    """Index ``m`` with ``f`` in ``[m pi, (m+1) pi)``."""
    return math.floor(f / math.pi)


def log_to_planar(s: LogState, branch: int = 0) -> PlanarState:
    _, f, df, _ = s
    check_finite(f=f, df=df)
    local = f - branch * math.pi
    if not 0.0 < local < math.pi:
        raise BranchBoundaryError(f"f - {branch}*pi = {local!r} is not inside (0, pi)")
    sn = math.sin(f)
    if sn == 0.0:
        raise BranchBoundaryError(f"sin f vanishes at f={f!r}")
    return PlanarState(math.cos(f) / sn, -df / (sn * sn))


def planar_to_log(s: PlanarState, branch: int = 0, t: float = 0.0,
                  direction=Direction.TOWARD_ORIGIN) -> LogState:
    w, k = s
    check_finite(w=w, k=k)
    f = math.atan2(1.0, w) + branch * math.pi
    return LogState(t, f, -k / (1.0 + w * w), Direction(direction))


def planar_to_poincare(s: PlanarState) -> PoincareState:
    w, k = s
    check_finite(w=w, k=k)
    R = math.hypot(w, k)
    if R == 0.0:
        return PoincareState(0.0, 0.0)
    return PoincareState(R / (1.0 + R), normalize_angle(math.atan2(k, w)))


def poincare_to_planar(s: PoincareState) -> PlanarState:
    rho, phi = s
    check_finite(rho=rho, phi=phi)
    if not rho < 1.0:
        raise OutOfChartError(f"rho must be < 1, got {rho!r}")
    if rho < 0:
        raise InvalidInputError(f"rho must be >= 0, got {rho!r}")
    R = rho / (1.0 - rho)
    return PlanarState(R * math.cos(phi), R * math.sin(phi))


def planar_to_slope_ratio(s: PlanarState) -> SlopeRatioState:
    w, k = s
    check_finite(w=w, k=k)
    if k == 0.0:
        raise TurningPointError("k = 0: turning point of w, slope-ratio chart undefined")
    return SlopeRatioState(w, w / k)
