"""Domain types and pure evaluations of the steady-state equations.

Everything here is a side-effect-free function of its arguments. The
integration layer calls the underscore-prefixed scalar kernels directly
(they take plain floats and use :mod:`math`); the public functions wrap
them with validation and the typed state containers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_boundary_value, check_exponent, check_finite
from .exceptions import InvalidInputError, OutOfChartError, SingularDenominatorError

#: Absolute threshold on ``(p-1) h'^2 + sin^2 h / r^2`` below which the
#: radial equation is treated as singular.
DENOMINATOR_GUARD = 1e-14

#: Threshold on ``(p-1) f'^2 + sin^2 f`` for the logarithmic form. That
#: form is homogeneous near ``f = k pi``, so only exact degeneracy is fatal.
LOG_DENOMINATOR_GUARD = 1e-280

SYSTEMS = ("forward", "reversed")


@dataclass(frozen=True)
class Params:
    """Exponent ``p > 1`` and optional boundary value ``l`` in ``(0, pi/2]``."""

    p: float
    l: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        if self.l is not None:
            object.__setattr__(self, "l", check_boundary_value(self.l))


def as_params(params) -> Params:
    if isinstance(params, Params):
        return params
    return Params(float(params))


class Direction(str, enum.Enum):
    """Orientation of logarithmic time relative to the radius."""

    TOWARD_ORIGIN = "toward-origin"  # t = -ln r
    TOWARD_INFINITY = "toward-infinity"  # t = +ln r

    @property
    def sign(self) -> float:
        return -1.0 if self is Direction.TOWARD_ORIGIN else 1.0


class RadialPoint(NamedTuple):
    r: float
    h: float
    dh: float


class LogState(NamedTuple):
    t: float
    f: float
    df: float
    direction: Direction = Direction.TOWARD_ORIGIN


class PlanarState(NamedTuple):
    w: float
    k: float


class PoincareState(NamedTuple):
    rho: float
    phi: float


class SlopeRatioState(NamedTuple):
    """``(w, g)``; for the ``j`` variant the second slot holds ``j = w'/w``."""

    w: float
    g: float


class EnergyDiag(NamedTuple):
    E: float
    dEdt: float
    Gsign: float


def check_system(direction: str) -> str:
    if direction not in SYSTEMS:
        raise InvalidInputError(f"system must be one of {SYSTEMS}, got {direction!r}")
    return direction


# ---------------------------------------------------------------------------
# radial equation in r

def _radial_split(p, r, h, dh):
    """Return ``(A, B)`` with the equation reading ``A * h'' + B = 0``."""
    s = math.sin(h)
    c = math.cos(h)
    s2 = s * s
    r2 = r * r
    A = (p - 1.0) * dh * dh + s2 / r2
    B = ((p - 3.0) * (dh * dh * s * c / r2 - dh * s2 / (r2 * r))
         + dh ** 3 / r - s2 * s * c / (r2 * r2))
    return A, B


def residual_ode(params, pt: RadialPoint, ddh: float) -> float:
    """Left-hand side of the radial Euler-Lagrange equation at ``pt``."""
    p = as_params(params).p
    r, h, dh = pt
    check_finite(r=r, h=h, dh=dh, ddh=ddh)
    if not r > 0:
        raise InvalidInputError(f"r must be positive, got {r!r}")
    s = math.sin(h)
    c = math.cos(h)
    return ((p - 1) * dh ** 2 * ddh
            + (p - 3) * (dh ** 2 * s * c / r ** 2 - dh * s ** 2 / r ** 3)
            + dh ** 3 / r
            + ddh * s ** 2 / r ** 2
            - s ** 3 * c / r ** 4)


def _radial_ddh(p, r, h, dh):
    A, B = _radial_split(p, r, h, dh)
    if not A > DENOMINATOR_GUARD:
        raise SingularDenominatorError(
            f"(p-1)h'^2 + sin^2h/r^2 = {A:.3e} at r={r:.6g}", value=A)
    return -B / A


def explicit_second_derivative(params, pt: RadialPoint) -> float:
    """Solve the radial equation for ``h''``.

    Raises :class:`SingularDenominatorError` when
    ``(p-1) h'^2 + sin^2 h / r^2`` falls to ``DENOMINATOR_GUARD`` or below.
    """
    p = as_params(params).p
    r, h, dh = pt
    check_finite(r=r, h=h, dh=dh)
    if not r > 0:
        raise InvalidInputError(f"r must be positive, got {r!r}")
    return _radial_ddh(p, r, h, dh)


def radial_denominator(params, pt: RadialPoint) -> float:
    p = as_params(params).p
    return (p - 1) * pt.dh ** 2 + math.sin(pt.h) ** 2 / pt.r ** 2


# ---------------------------------------------------------------------------
# logarithmic forms

def _log_ddf(p, f, df):
    """``f''`` for the outward logarithmic form (``t = ln r``)."""
    s = math.sin(f)
    c = math.cos(f)
    s2 = s * s
    A = (p - 1.0) * df * df + s2
    if not A > LOG_DENOMINATOR_GUARD:
        raise SingularDenominatorError(f"(p-1)f'^2 + sin^2 f = {A:.3e}", value=A)
    return (s * c * ((3.0 - p) * df * df + s2) - (2.0 - p) * df * (df * df + s2)) / A


def residual_log(params, state: LogState, ddf: float) -> float:
    """Residual of the autonomous equation for ``f`` in either time direction."""
    p = as_params(params).p
    _, f, df, direction = state
    check_finite(f=f, df=df, ddf=ddf)
    s = math.sin(f)
    c = math.cos(f)
    if Direction(direction) is Direction.TOWARD_ORIGIN:
        return ((p - 1) * df ** 2 * (ddf + df)
                + (p - 3) * (df ** 2 * s * c + df * s ** 2)
                - df ** 3
                + (ddf + df) * s ** 2
                - s ** 3 * c)
    return (ddf * ((p - 1) * df ** 2 + s ** 2)
            + (2 - p) * df * (df ** 2 + s ** 2)
            - s * c * ((3 - p) * df ** 2 + s ** 2))


# ---------------------------------------------------------------------------
# planar (w, k) systems; arithmetic only, so floats and arrays both work

def _dk_forward(p, w, k):
    one_w2 = 1.0 + w * w
    return ((one_w2 + k * k) * (2.0 * (p - 1.0) * k * w + (2.0 - p) * one_w2) * k
            / (one_w2 * (one_w2 + (p - 1.0) * k * k)) - w)


def _dk_reversed(p, w, k):
    one_w2 = 1.0 + w * w
    return (-(one_w2 + k * k) * ((2.0 - p) * one_w2 - 2.0 * (p - 1.0) * w * k) * k
            / (one_w2 * (one_w2 + (p - 1.0) * k * k)) - w)


def rhs_planar(params, s: PlanarState, direction: str = "forward"):
    """``(w', k')`` for the forward (``t = -ln r``) or reversed system."""
    p = as_params(params).p
    w, k = s
    check_finite(w=w, k=k)
    dk = _dk_forward(p, w, k) if check_system(direction) == "forward" else _dk_reversed(p, w, k)
    return (k, dk)


# ---------------------------------------------------------------------------
# Poincare disc (rho, phi)

def _poincare_forward(p, rho, phi):
    c = math.cos(phi)
    s = math.sin(phi)
    q = 1.0 - rho
    a = q * q + rho * rho
    d1 = q * q + rho * rho * c * c
    d2 = d1 + (p - 1.0) * rho * rho * s * s
    b = 2.0 * (p - 1.0) * rho * rho * c * s + (2.0 - p) * d1
    den = d1 * d2
    return rho * q * a * b * s * s / den, a * b * s * c / den - 1.0


def _poincare_reversed(p, rho, phi):
    c = math.cos(phi)
    s = math.sin(phi)
    q = 1.0 - rho
    a = q * q + rho * rho
    d1 = q * q + rho * rho * c * c
    d2 = d1 + (p - 1.0) * rho * rho * s * s
    b = 2.0 * (p - 1.0) * rho * rho * c * s - (2.0 - p) * d1
    den = d1 * d2
    return rho * q * a * b * s * s / den, a * b * s * c / den - 1.0


def poincare_field(p, rho, phi, direction):
    """Unchecked Poincare right-hand side; also valid slightly past ``rho = 1``."""
    if direction == "forward":
        return _poincare_forward(p, rho, phi)
    return _poincare_reversed(p, rho, phi)


def rhs_poincare(params, s: PoincareState, direction: str = "forward"):
    """``(rho', phi')`` of the compactified flow; same time as the planar one."""
    p = as_params(params).p
    rho, phi = s
    check_finite(rho=rho, phi=phi)
    check_system(direction)
    if not rho < 1.0:
        raise OutOfChartError(f"rho must be < 1, got {rho!r}")
    if rho < 0:
        raise InvalidInputError(f"rho must be >= 0, got {rho!r}")
    return poincare_field(p, rho, phi, direction)


def poincare_jacobian(p, rho, phi, direction, step=1e-6):
    """Central-difference Jacobian of the Poincare field at ``(rho, phi)``."""
    x = np.array([rho, phi], dtype=float)
    J = np.empty((2, 2))
    for j in range(2):
        h = step * max(1.0, abs(x[j]))
        e = np.zeros(2)
        e[j] = h
        hi = poincare_field(p, *(x + e), direction)
        lo = poincare_field(p, *(x - e), direction)
        J[:, j] = (np.asarray(hi) - np.asarray(lo)) / (2 * h)
    return J


# ---------------------------------------------------------------------------
# slope-ratio charts

def _F(p, w, g):
    w2 = w * w
    return (w2 * g * (2 * (p - 1) * (1 + w2) * g * g + (2 - p) ** 2 * (1 + w2) * g + 2 * (p - 1) * w2)
            / ((1 + w2) * (g * g * (1 + w2) + (p - 1) * w2)))


def _Fbar(p, w, g):
    w2 = w * w
    return (w2 * g * (-2 * (p - 1) * (1 + w2) * g * g + (2 - p) ** 2 * (1 + w2) * g - 2 * (p - 1) * w2)
            / ((1 + w2) * ((1 + w2) * g * g + (p - 1) * w2)))


def slope_ratio_F(params, w, g):
    """Nonlinearity of the ``g``-equation (inward time)."""
    return _F(as_params(params).p, w, g)


def slope_ratio_Fbar(params, w, g):
    """Nonlinearity of the ``g``-equation in outward time."""
    return _Fbar(as_params(params).p, w, g)


def g_bracket(params, w, g):
    """``g^3 - (2-p) g^2 + g - F(w, g)``, i.e. ``w * g'(w)``."""
    p = as_params(params).p
    return g ** 3 - (2 - p) * g ** 2 + g - _F(p, w, g)


def rhs_slope_ratio(params, s: SlopeRatioState, variant: str = "g"):
    """Derivative in the slope-ratio charts.

    ``g`` and ``gbar`` return ``dg/dw`` (independent variable ``w``);
    ``j`` returns ``dj/dt`` with ``w`` held as a frozen parameter.
    """
    p = as_params(params).p
    w, g = s
    check_finite(w=w, g=g)
    if variant == "g":
        if w == 0:
            raise InvalidInputError("w = 0 is outside the g-chart")
        return (g ** 3 - (2 - p) * g ** 2 + g - _F(p, w, g)) / w
    if variant == "gbar":
        if w == 0:
            raise InvalidInputError("w = 0 is outside the g-chart")
        # + Fbar: the sign that makes this the reversed flow written in g = w / w'
        return (g ** 3 + (2 - p) * g ** 2 + g + _Fbar(p, w, g)) / w
    if variant == "j":
        j = g
        w2 = w * w
        return (-1 - j * j
                - (1 + w2 + w2 * j * j) * ((2 - p) * (1 + w2) - 2 * (p - 1) * w2 * j) * j
                / ((1 + w2) * (1 + w2 + (p - 1) * w2 * j * j)))
    raise InvalidInputError(f"variant must be 'g', 'gbar' or 'j', got {variant!r}")


# ---------------------------------------------------------------------------
# energies

def lagrangian(params, pt: RadialPoint) -> float:
    """Energy density ``(r^{2/p} h'^2 + r^{(2-2p)/p} sin^2 h)^{p/2}``."""
    p = as_params(params).p
    r, h, dh = pt
    if not r > 0:
        raise InvalidInputError(f"r must be positive, got {r!r}")
    return (r ** (2 / p) * dh ** 2 + r ** ((2 - 2 * p) / p) * math.sin(h) ** 2) ** (p / 2)


def lagrangian_array(p, r, h, dh):
    """Vectorised ``r (h'^2 + sin^2 h / r^2)^{p/2}``; equal to :func:`lagrangian`."""
    r = np.asarray(r, dtype=float)
    return r * (np.asarray(dh) ** 2 + np.sin(h) ** 2 / r ** 2) ** (p / 2)


def energy_diag(params, s: PlanarState) -> EnergyDiag:
    """Energy ``w^2 + k^2`` of the reversed system, its rate, and the sign quantity.

    Arithmetic only, so ``s`` may hold arrays.
    """
    p = as_params(params).p
    w, k = s
    one_w2 = 1 + w * w
    E = w * w + k * k
    dEdt = (2 * (1 + w * w + k * k) * k * k * (-(2 - p) * one_w2 + 2 * (p - 1) * w * k)
            / (one_w2 * (one_w2 + (p - 1) * k * k)))
    G = (2 - p) * one_w2 - 2 * (p - 1) * w * k
    return EnergyDiag(E, dEdt, G)
