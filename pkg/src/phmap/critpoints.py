"""Critical points of the planar flows, at the origin and on the disc boundary.

The six boundary points come from closed forms and are checked against the
degree-five angular equation. At the hyperbolic ones the closed-form
linearisation is compared with a finite-difference Jacobian of the disc
field before anything is returned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ConsistencyError, InvalidInputError
from .model import PlanarState, PoincareState, as_params, check_system, poincare_jacobian

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-10
JACOBIAN_TOL = 1e-6

INFINITY_LABELS = ("P1", "P1*", "P2", "P2*", "P3", "P3*")


@dataclass(frozen=True)
class CriticalPointReport:
    """Linearisation and type of one critical point.

    ``location`` is a :class:`PlanarState` for the origin and a
    :class:`PoincareState` with ``rho = 1`` on the boundary. ``numeric_matrix``
    is the finite-difference Jacobian used to validate ``matrix`` (boundary
    saddles only).
    """

    system: str
    label: str
    location: Union[PlanarState, PoincareState]
    matrix: Optional[np.ndarray]
    eigenvalues: tuple
    classification: str
    provenance: str
    numeric_matrix: Optional[np.ndarray] = None

    def to_dict(self):
        if isinstance(self.location, PoincareState):
            where = {"rho": 1.0, "phi": self.location.phi}
        else:
            where = "origin"
        return {
            "system": self.system,
            "label": self.label,
            "angle_or_origin": where,
            "matrix": None if self.matrix is None else self.matrix.tolist(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "class": self.classification,
            "provenance": self.provenance,
        }


def _x(p):
    return (p - 1.0) / math.sqrt(p * p - 2.0 * p + 2.0)


def _angle_table(p, system):
    x = _x(p)
    a = math.acos(x)
    if system == "forward":
        return {
            "P3*": math.pi / 2, "P3": 3 * math.pi / 2,
            "P1": math.pi / 4, "P1*": 5 * math.pi / 4,
            "P2": TWO_PI - a, "P2*": math.acos(-x),
        }
    return {
        "P3*": math.pi / 2, "P3": 3 * math.pi / 2,
        "P1": 7 * math.pi / 4, "P1*": 3 * math.pi / 4,
        "P2": a, "P2*": math.pi + a,
    }


def _q5(p, system, w, k):
    sign = 1.0 if system == "forward" else -1.0
    return (k * (w * w + k * k) * (2 * (p - 1) * w * k + sign * (2 - p) * w * w)
            - w ** 3 * (w * w + (p - 1) * k * k))


def _p5(p, w, k):
    return k * w * w * (w * w + (p - 1) * k * k)


def infinity_residual(params, theta, system="forward"):
    """``cos(theta) Q5 - sin(theta) P5`` at the unit vector of angle ``theta``.

    Zeros are the directions of critical points on the disc boundary.
    Vectorised over ``theta``.
    """
    p = as_params(params).p
    check_system(system)
    c = np.cos(theta)
    s = np.sin(theta)
    return c * _q5(p, system, c, s) - s * _p5(p, c, s)


def infinity_angle(params, system, which):
    """Polar angle of the boundary point ``which`` in ``[0, 2 pi)``."""
    p = as_params(params).p
    check_system(system)
    if which not in INFINITY_LABELS:
        raise InvalidInputError(f"unknown boundary point {which!r}; expected one of {INFINITY_LABELS}")
    return _angle_table(p, system)[which]


def infinity_angles(params, system="forward"):
    """The six boundary critical angles, sorted, each verified as a residual zero."""
    p = as_params(params).p
    check_system(system)
    angles = sorted(_angle_table(p, system).values())
    for th in angles:
        res = float(infinity_residual(p, th, system))
        if abs(res) > ANGLE_TOL:
            raise ConsistencyError(f"angle {th!r} leaves residual {res:.3e}")
    return angles


def is_interesting(theta):
    """Boundary directions with ``sin(theta) cos(theta) >= 0``."""
    return math.sin(theta) * math.cos(theta) >= -1e-15


def _classify(eig):
    l1, l2 = eig
    if abs(l1.imag) > 1e-12:
        if abs(l1.real) < 1e-12:
            return "center"
        return "stable-focus" if l1.real < 0 else "unstable-focus"
    a, b = sorted((l1.real, l2.real))
    if a < 0 < b:
        return "saddle"
    if b < 0:
        return "stable-node"
    if a > 0:
        return "unstable-node"
    return "nonhyperbolic"


def _eigs(M):
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    root = cmath.sqrt(tr * tr / 4 - det)
    return (tr / 2 + root, tr / 2 - root)


def linearize_finite(params, system="forward"):
    """Linearisation at the origin: ``[[0, 1], [-1, +-(2 - p)]]``."""
    p = as_params(params).p
    check_system(system)
    trace = (2 - p) if system == "forward" else -(2 - p)
    M = np.array([[0.0, 1.0], [-1.0, trace]])
    eig = _eigs(M)
    return CriticalPointReport(system, "O", PlanarState(0.0, 0.0), M, eig, _classify(eig), "closed-form")


def _analytic_infinity_matrix(p, system, which):
    base = which.rstrip("*")
    if base == "P1":
        d = (-1.0, 2.0)
    else:
        d = (1 / (p - 1), -(p * p - 2 * p + 2) / (p - 1))
    if system == "reversed":
        d = (-d[0], -d[1])
    return np.diag(d)


def linearize_infinity(params, system, which):
    """Linearisation of the disc field at the boundary saddle ``which``.

    ``which`` is one of ``P1, P1*, P2, P2*``. The closed-form matrix is
    returned after checking it entrywise against the numerical Jacobian, to
    ``1e-6`` times the largest entry (at least ``1e-6``; entries grow like
    ``1 / (p - 1)`` as ``p -> 1``).
    """
    p = as_params(params).p
    check_system(system)
    if which not in ("P1", "P1*", "P2", "P2*"):
        raise InvalidInputError(f"{which!r} is not a hyperbolic boundary point")
    phi = _angle_table(p, system)[which]
    M = _analytic_infinity_matrix(p, system, which)
    J = poincare_jacobian(p, 1.0, phi, system)
    diff = float(np.max(np.abs(J - M)))
    if not diff < JACOBIAN_TOL * max(1.0, float(np.max(np.abs(M)))):
        raise ConsistencyError(
            f"{which} ({system}, p={p}): analytic and numerical Jacobians differ by {diff:.3e}")
    eig = _eigs(M)
    return CriticalPointReport(system, which, PoincareState(1.0, phi), M, eig, _classify(eig),
                               "closed-form, checked numerically", J)


def classify_nonhyperbolic(params, system, which):
    """Boundary points ``P3`` / ``P3*``: elliptic, from the blow-up analysis.

    These points have a singular linearisation, so nothing is computed; the
    label is recorded with provenance ``"analytic"``.
    """
    p = as_params(params).p
    check_system(system)
    if which not in ("P3", "P3*"):
        raise InvalidInputError(f"{which!r} is not a nonhyperbolic boundary point")
    phi = _angle_table(p, system)[which]
    return CriticalPointReport(system, which, PoincareState(1.0, phi), None,
                               (complex(0.0), complex(0.0)), "nonhyperbolic-elliptic", "analytic")


def saddle_eigenvector(params, system, which, transverse=True):
    """Unit eigenvector of a boundary saddle; ``transverse`` picks the ``rho`` direction."""
    rep = linearize_infinity(params, system, which)
    v = np.array([1.0, 0.0]) if transverse else np.array([0.0, 1.0])
    # matrices are diagonal, so coordinate axes are eigenvectors
    return v, float(rep.matrix[0, 0] if transverse else rep.matrix[1, 1])


def critical_points(params, system="forward"):
    """Reports for the origin and all six boundary points."""
    reports = [linearize_finite(params, system)]
    for which in ("P1", "P1*", "P2", "P2*"):
        reports.append(linearize_infinity(params, system, which))
    for which in ("P3", "P3*"):
        reports.append(classify_nonhyperbolic(params, system, which))
    return reports


def auxiliary_field(params, rho, theta):
    """Compactified homogeneous blow-up chart near ``P3`` (``+`` orientation)."""
    p = as_params(params).p
    return ((p - 1) * rho * (1 - rho) * math.cos(theta), (p - 1) * math.sin(theta))


def auxiliary_matrices(params, step=1e-6):
    """Jacobians of :func:`auxiliary_field` at ``(1, 0)`` and ``(1, pi)``.

    Both are saddles; exposed for tests of the ellipticity argument only.
    """
    p = as_params(params).p
    out = {}
    for theta in (0.0, math.pi):
        J = np.empty((2, 2))
        for j, e in enumerate(((step, 0.0), (0.0, step))):
            hi = auxiliary_field(p, 1.0 + e[0], theta + e[1])
            lo = auxiliary_field(p, 1.0 - e[0], theta - e[1])
            J[:, j] = (np.asarray(hi) - np.asarray(lo)) / (2 * step)
        out[theta] = J
    return out
