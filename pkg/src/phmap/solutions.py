"""Constructors and analyzers for solutions of the radial equation.

The canonical solution starts at ``h ~ C r`` near the origin; every
minimizer is a rescaling ``h(r* r)`` of it. :func:`variational_minimizer`
builds the same minimizer independently, by direct minimisation of the
discretised energy, and is used as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import LinAlgError, solveh_banded
from scipy.optimize import isotonic_regression
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive
from .critpoints import infinity_angle
from .exceptions import (
    ConsistencyError,
    ConvergenceError,
    EventNotFoundError,
    HorizonExceededError,
    InsufficientDataError,
    InvalidInputError,
    SingularDenominatorError,
    StiffnessError,
)
from .integrate import EventSpec, IntegratorConfig, Trajectory, integrate, integrate_backward_from_saddle
from .model import (
    LogState,
    Direction,
    Params,
    PlanarState,
    PoincareState,
    RadialPoint,
    _F,
    _log_ddf,
    as_params,
    energy_diag,
    g_bracket,
    lagrangian_array,
    residual_ode,
)

HALF_PI = 0.5 * math.pi
DEFAULT_R0 = 1e-6


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Sampled solution ``h(r)`` with an optional dense evaluator.

    ``evaluator(r)`` returns ``(h, h')`` at arbitrary radii inside the
    computed range; without one, a cubic Hermite spline through the samples
    is used.
    """

    r: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    p: float
    kind: str
    metadata: dict = field(default_factory=dict)
    evaluator: Optional[Callable] = field(default=None, repr=False)
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("r", "h", "dh"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.r)

    def evaluate(self, r):
        r = np.asarray(r, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(r)
        if "_spline" not in self.__dict__:
            spline = CubicHermiteSpline(self.r, self.h, self.dh)
            object.__setattr__(self, "_spline", (spline, spline.derivative()))
        spline, deriv = self.__dict__["_spline"]
        return spline(r), deriv(r)

    def __call__(self, r):
        return self.evaluate(r)[0]

    @property
    def points(self):
        return [RadialPoint(float(a), float(b), float(c)) for a, b, c in zip(self.r, self.h, self.dh)]

    def energy(self, a=None, b=None):
        """``int_a^b r (h'^2 + sin^2 h / r^2)^{p/2} dr`` by adaptive quadrature."""
        a = float(self.r[0]) if a is None else a
        b = float(self.r[-1]) if b is None else b

        def integrand(x):
            hh, dd = self.evaluate(np.array([x]))
            return float(lagrangian_array(self.p, x, hh[0], dd[0]))

        val, _ = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
        return val


def _log_evaluator(traj: Trajectory, slope: float, r0: float, scale: float = 1.0):
    """Dense ``(h, h')`` of ``rho -> h(scale * rho)`` from a log-form trajectory."""
    s_lo, s_hi = sorted((traj.t_start, traj.t_end))

    def evaluate(rho):
        rho = np.asarray(rho, dtype=float)
        r = scale * rho
        h = np.empty_like(r)
        dh = np.empty_like(r)
        small = r < r0
        h[small] = slope * r[small]
        dh[small] = slope * scale
        big = ~small
        if np.any(big):
            s = np.clip(np.log(r[big]), s_lo, s_hi)
            y = traj(s)
            h[big] = y[..., 0]
            dh[big] = y[..., 1] / r[big] * scale
        return h, dh

    return evaluate


def _canonical_trajectory(p, r_max, slope, r0, config, events):
    start = LogState(math.log(r0), slope * r0, slope * r0, Direction.TOWARD_INFINITY)
    cfg = config or IntegratorConfig(rtol=1e-11, atol=1e-12 * slope * r0)
    from dataclasses import replace
    cfg = replace(cfg, t_max=math.log(r_max))
    return integrate(p, "log", start, cfg, events)


def canonical_global(params, r_max: float = 1e3, slope: float = 1.0, r0: float = DEFAULT_R0,
                     config: Optional[IntegratorConfig] = None, refine: bool = True) -> RadialProfile:
    """Global solution with ``h(r) ~ slope * r`` at the origin, out to ``r_max``.

    The integration runs in ``s = ln r`` from ``r0``. With ``refine`` the run
    is repeated from ``r0 / 2`` and the sup difference between the two is
    stored as ``metadata["refinement_delta"]``.
    """
    p = as_params(params).p
    r_max = check_positive("r_max", r_max)
    slope = check_positive("slope", slope)
    r0 = check_positive("r0", r0)
    if not r_max > max(1.0, r0):
        raise InvalidInputError("r_max must exceed 1 and r0")
    events = (EventSpec("k-zero"), EventSpec("w-zero"))
    traj = _canonical_trajectory(p, r_max, slope, r0, config, events)
    r = np.exp(traj.t)
    h = traj.y[:, 0]
    dh = traj.y[:, 1] / r
    meta = {
        "r0": r0,
        "slope": slope,
        "r_max": r_max,
        "termination": traj.termination,
        "critical_radii": [math.exp(e.t) for e in traj.events_of("k-zero")],
        "half_pi_crossings": [math.exp(e.t) for e in traj.events_of("w-zero")],
    }
    if refine:
        fine = _canonical_trajectory(p, r_max, slope, r0 / 2, config, ())
        grid = np.log(np.geomspace(2 * r0, r_max, 2000))
        grid[-1] = min(grid[-1], traj.t_end, fine.t_end)
        meta["refinement_delta"] = float(np.max(np.abs(traj(grid)[:, 0] - fine(grid)[:, 0])))
    return RadialProfile(r, h, dh, p, "canonical", meta, _log_evaluator(traj, slope, r0), traj)


def profile_residuals(profile: RadialProfile, where: str = "nodes"):
    """``residual_ode`` along a log-form trajectory.

    ``where="nodes"`` uses the step nodes, where the interpolant's derivative
    is the log-form field itself, so this checks the log form against the
    radial equation. ``where="midpoints"`` differentiates the interpolant
    between nodes and so also includes interpolation error.
    """
    traj = profile.trajectory
    if traj is None or traj.system != "log":
        raise InvalidInputError("profile has no log-form trajectory")
    t = traj.t
    if where == "nodes":
        s = t
    elif where == "midpoints":
        s = 0.5 * (t[1:] + t[:-1])
    else:
        raise InvalidInputError(f"where must be 'nodes' or 'midpoints', got {where!r}")
    y = traj(s)
    dy = traj.derivative(s)
    r = np.exp(s)
    f, df, ddf = y[:, 0], y[:, 1], dy[:, 1]
    dh = df / r
    ddh = (ddf - df) / (r * r)
    res = np.array([residual_ode(profile.p, RadialPoint(a, b, c), d) for a, b, c, d in zip(r, f, dh, ddh)])
    return r, res


# ---------------------------------------------------------------------------
# minimizers

def _as_lparams(params, l=None):
    if isinstance(params, Params):
        prm = params if l is None else Params(params.p, l)
    else:
        prm = Params(float(params), l)
    if prm.l is None:
        raise InvalidInputError("boundary value l is required")
    return prm


def minimizer(params, l: Optional[float] = None, n_samples: int = 1000,
              r0: float = DEFAULT_R0, r_search: float = 1e8,
              config: Optional[IntegratorConfig] = None) -> RadialProfile:
    """Minimizer ``h_l`` on ``(0, 1]`` obtained by rescaling the canonical solution.

    ``r*`` is the first radius with ``h(r*) = l``; the profile is
    ``h_l(r) = h(r* r)``. For ``l = pi/2`` the increasing branch is returned
    and the reflection ``pi - h_l`` is recorded in the metadata.
    """
    prm = _as_lparams(params, l)
    p, l = prm.p, prm.l
    if int(n_samples) < 2:
        raise InvalidInputError("n_samples must be at least 2")
    events = (EventSpec("h-crosses", l, "rising", terminal=True),
              EventSpec("k-zero", terminal=True))
    traj = _canonical_trajectory(p, r_search, 1.0, r0, config, events)
    if traj.termination == "event:k-zero":
        raise ConsistencyError(f"profile turned before reaching h = {l}")
    if traj.termination != "event:h-crosses":
        raise EventNotFoundError(f"h = {l} not reached before r = {r_search:g}")
    r_star = math.exp(traj.t_end)
    evaluate = _log_evaluator(traj, 1.0, r0, scale=r_star)
    rho = np.arange(1, int(n_samples) + 1) / int(n_samples)
    h, dh = evaluate(rho)
    # r* h'(r*) is scale invariant: it is also h_l'(1)
    meta = {"r_star": r_star, "l": l, "r0": r0, "crossing_slope": float(dh[-1])}
    if abs(l - HALF_PI) < 1e-15:
        meta["reflection"] = "pi - h(r) is the reflected minimizer with the same boundary value"
    prof = RadialProfile(rho, h, dh, p, "minimizer", meta, evaluate, traj)
    prof.metadata["energy"] = prof.energy(0.0, 1.0)
    return prof


def _energy_terms(h, dr, rm, p, eps):
    d = np.diff(h) / dr
    hb = 0.5 * (h[1:] + h[:-1])
    sn = np.sin(hb)
    u = d * d + sn * sn / (rm * rm) + eps
    return d, hb, u


def _discrete_energy(h, dr, rm, p, eps):
    _, _, u = _energy_terms(h, dr, rm, p, eps)
    return float(np.sum(dr * rm * u ** (p / 2)))


def variational_minimizer(params, l: Optional[float] = None, grid_n: int = 2000, reg_eps: float = 1e-10,
                          tol: float = 1e-8, max_iter: int = 200) -> RadialProfile:
    """Direct minimisation of the discretised energy over monotone grid functions.

    ``h`` is piecewise linear on a uniform grid of ``grid_n`` cells with
    ``h(0) = 0``, ``h(1) = l``; cell integrals use the midpoint rule. Each
    iteration takes a damped Newton step (tridiagonal Hessian), backtracks
    on the energy and projects onto nondecreasing sequences. Iteration stops
    when the sup norm of ``grad / dr`` drops below ``tol``.
    """
    prm = _as_lparams(params, l)
    p, l = prm.p, prm.l
    n = int(grid_n)
    if n < 100:
        raise InvalidInputError("grid_n must be at least 100")
    if not reg_eps >= 0:
        raise InvalidInputError("reg_eps must be nonnegative")
    r = np.linspace(0.0, 1.0, n + 1)
    dr = 1.0 / n
    rm = 0.5 * (r[1:] + r[:-1])
    h = l * r
    E = _discrete_energy(h, dr, rm, p, reg_eps)
    history = []
    gnorm = math.inf
    for it in range(max_iter):
        d, hb, u = _energy_terms(h, dr, rm, p, reg_eps)
        w = dr * rm
        phi1 = w * (p / 2) * u ** (p / 2 - 1)
        phi2 = w * (p / 2) * (p / 2 - 1) * u ** (p / 2 - 2)
        a = np.sin(2 * hb) / (2 * rm * rm)
        gl = -2 * d / dr + a  # du/dh_left
        gr = 2 * d / dr + a
        grad = np.zeros(n + 1)
        grad[:-1] += phi1 * gl
        grad[1:] += phi1 * gr
        g = grad[1:-1]
        # nodal Euler-Lagrange residual; the raw gradient carries a factor dr
        gnorm = float(np.max(np.abs(g))) / dr
        history.append((E, gnorm))
        if gnorm < tol:
            break
        c = np.cos(2 * hb) / (2 * rm * rm)
        hll = phi2 * gl * gl + phi1 * (2 / dr ** 2 + c)
        hrr = phi2 * gr * gr + phi1 * (2 / dr ** 2 + c)
        hlr = phi2 * gl * gr + phi1 * (-2 / dr ** 2 + c)
        diag = np.zeros(n + 1)
        diag[:-1] += hll
        diag[1:] += hrr
        main = diag[1:-1]
        off = hlr[1:-1]
        mu = 0.0
        step = None
        for _ in range(30):
            ab = np.zeros((2, n - 1))
            ab[0, 1:] = off
            ab[1] = main + mu
            try:
                step = -solveh_banded(ab, g, lower=False)
                break
            except LinAlgError:
                mu = max(2 * mu, 1e-8 * float(np.max(np.abs(main))))
        if step is None or not np.dot(step, g) < 0:
            step = -g / max(float(np.max(np.abs(main))), 1e-300)
        t = 1.0
        accepted = False
        while t > 1e-12:
            trial = h.copy()
            trial[1:-1] = h[1:-1] + t * step
            trial[1:-1] = np.clip(isotonic_regression(trial[1:-1]).x, 0.0, l)
            Et = _discrete_energy(trial, dr, rm, p, reg_eps)
            if Et <= E + 1e-4 * float(np.dot(g, trial[1:-1] - h[1:-1])):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # energy can no longer decrease in floating point
            if gnorm < 1e3 * tol:
                break
            raise ConvergenceError("line search failed", {"iterations": it, "grad_norm": gnorm,
                                                           "energy": E, "history": history})
        h, E = trial, Et
    else:
        raise ConvergenceError(f"no convergence in {max_iter} iterations",
                               {"iterations": max_iter, "grad_norm": gnorm, "energy": E,
                                "history": history})
    dh = np.gradient(h, r, edge_order=2)
    meta = {"l": l, "grid_n": n, "reg_eps": reg_eps, "iterations": len(history),
            "grad_norm": gnorm, "discrete_energy": E}
    return RadialProfile(r, h, dh, p, "variational", meta)


def minimizer_energy(profile: RadialProfile):
    """Energy of a minimizer profile on ``[0, 1]``."""
    return profile.energy(0.0, 1.0)


class HarmonicMapMinimizer(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`minimizer` / :func:`variational_minimizer`.

    ``fit`` builds the profile for ``(p, l)``; ``predict`` evaluates it at
    radii in ``[0, 1]``.

    Parameters
    ----------
    p : float
        Exponent, ``p > 1``.
    l : float
        Boundary value ``h(1)``, in ``(0, pi/2]``.
    method : {"shooting", "variational"}
    n_samples, grid_n, reg_eps
        Passed to the underlying constructor.
    """

    def __init__(self, p=2.0, l=HALF_PI, method="shooting", n_samples=1000, grid_n=2000, reg_eps=1e-10):
        self.p = p
        self.l = l
        self.method = method
        self.n_samples = n_samples
        self.grid_n = grid_n
        self.reg_eps = reg_eps

    def fit(self, X=None, y=None):
        prm = Params(self.p, self.l)
        if self.method == "shooting":
            self.profile_ = minimizer(prm, n_samples=self.n_samples)
        elif self.method == "variational":
            self.profile_ = variational_minimizer(prm, grid_n=self.grid_n, reg_eps=self.reg_eps)
        else:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if self.method == "variational":
            # quad over a spline with one kink per grid cell only adds roundoff
            self.energy_ = self.profile_.metadata["discrete_energy"]
        else:
            self.energy_ = self.profile_.energy(0.0, 1.0)
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        r = check_array(X, ensure_2d=False, dtype=float).reshape(-1)
        if np.any((r < 0) | (r > 1)):
            raise InvalidInputError("radii must lie in [0, 1]")
        return self.profile_(r)


class CanonicalSolution(BaseEstimator):
    """Estimator wrapper around :func:`canonical_global`; ``predict`` returns ``h(r)``."""

    def __init__(self, p=2.0, r_max=1e3, slope=1.0, r0=DEFAULT_R0):
        self.p = p
        self.r_max = r_max
        self.slope = slope
        self.r0 = r0

    def fit(self, X=None, y=None):
        self.profile_ = canonical_global(self.p, self.r_max, self.slope, self.r0)
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        r = check_array(X, ensure_2d=False, dtype=float).reshape(-1)
        if np.any((r <= 0) | (r > self.r_max)):
            raise InvalidInputError("radii must lie in (0, r_max]")
        return self.profile_(r)


# ---------------------------------------------------------------------------
# alpha_0

@dataclass(frozen=True)
class Alpha0:
    """Critical slope ``alpha_0 = -w'(t0)`` on the orbit entering ``P2*``."""

    value: float
    p: float
    t0: float
    offset: float
    study: dict = field(default_factory=dict)


def _alpha0_once(p, offset, config):
    phi = infinity_angle(p, "reversed", "P2*")
    traj = integrate_backward_from_saddle(p, "reversed", PoincareState(1.0, phi), (1.0, 0.0),
                                          offset=offset, config=config,
                                          events=(EventSpec("w-zero", terminal=True),))
    if traj.termination != "event:w-zero":
        raise HorizonExceededError(f"orbit did not cross w = 0 (termination {traj.termination})")
    hit = traj.events[-1]
    a, b = hit.state
    if hit.chart == "poincare":
        R = a / (1 - a)
        a, b = R * math.cos(b), R * math.sin(b)
    return -b, hit.t, traj


def alpha0(params, offset: float = 1e-8, config: Optional[IntegratorConfig] = None,
           horizon: float = 200.0, study: bool = True) -> Alpha0:
    """Trace the stable manifold of ``P2*`` back to its last crossing of ``w = 0``.

    With ``study`` the computation is repeated with the offset halved and
    with both tolerances halved; the relative changes are stored.
    """
    p = as_params(params).p
    if not 1 < p < 2:
        raise InvalidInputError("alpha_0 is defined for 1 < p < 2")
    from dataclasses import replace
    cfg = replace(config or IntegratorConfig(), t_max=horizon)
    value, t0, _ = _alpha0_once(p, offset, cfg)
    if not value > 0:
        raise ConsistencyError(f"non-positive alpha_0 {value!r}")
    info = {}
    if study:
        v_off, _, _ = _alpha0_once(p, offset / 2, cfg)
        v_tol, _, _ = _alpha0_once(p, offset, cfg.refined(0.5))
        info = {
            "half_offset": v_off,
            "half_tolerance": v_tol,
            "rel_change_offset": abs(v_off - value) / value,
            "rel_change_tolerance": abs(v_tol - value) / value,
        }
        info["converged"] = max(info["rel_change_offset"], info["rel_change_tolerance"]) <= 1e-6
    return Alpha0(value, p, t0, offset, info)


# ---------------------------------------------------------------------------
# oscillations

@dataclass(frozen=True)
class OscillationReport:
    critical_radii: np.ndarray
    values: np.ndarray
    kinds: tuple
    amplitudes: np.ndarray
    n0: Optional[int]
    max_index: int
    max_at_first: bool
    alternating: bool
    gsign_index: Optional[int]
    decreasing_index: Optional[int]


def _critical_points(profile: RadialProfile):
    traj = profile.trajectory
    if traj is not None and traj.system == "log":
        radii, values, kinds = [], [], []
        for e in traj.events_of("k-zero"):
            f, df = e.state
            radii.append(math.exp(e.t))
            values.append(f)
            kinds.append("max" if _log_ddf(profile.p, f, 0.0) < 0 else "min")
        return np.array(radii), np.array(values), kinds
    from scipy.interpolate import CubicHermiteSpline
    from scipy.optimize import brentq
    dh = profile.dh
    radii, values, kinds = [], [], []
    spline = CubicHermiteSpline(profile.r, profile.h, profile.dh)
    dspline = spline.derivative()
    for i in range(len(dh) - 1):
        if dh[i] == 0 or dh[i] * dh[i + 1] >= 0:
            continue
        rc = brentq(dspline, profile.r[i], profile.r[i + 1], xtol=1e-14)
        radii.append(rc)
        values.append(float(spline(rc)))
        kinds.append("max" if dh[i] > 0 else "min")
    return np.array(radii), np.array(values), kinds


def oscillation_analysis(profile: RadialProfile) -> OscillationReport:
    """Critical radii, extremum types and amplitudes about ``pi/2``.

    ``n0`` is the first index from which both the sign quantity stays
    positive along the trajectory and the amplitudes decrease strictly.
    """
    radii, values, kinds = _critical_points(profile)
    if len(radii) < 3:
        raise InsufficientDataError(f"found {len(radii)} critical radii, need at least 3")
    amps = np.abs(values - HALF_PI)
    alternating = all(a != b for a, b in zip(kinds, kinds[1:]))
    dec_index = None
    for n in range(len(amps)):
        if np.all(np.diff(amps[n:]) < 0):
            dec_index = n
            break
    g_index = None
    traj = profile.trajectory
    if traj is not None and traj.system == "log":
        f, df = traj.y[:, 0], traj.y[:, 1]
        sn = np.sin(f)
        ok = np.abs(sn) > 1e-300
        w = np.where(ok, np.cos(f) / np.where(ok, sn, 1.0), np.inf)
        k = np.where(ok, -df / np.where(ok, sn * sn, 1.0), np.inf)
        G = energy_diag(profile.p, PlanarState(w, k)).Gsign
        bad = np.nonzero(~(G > 0))[0]
        r_bad = math.exp(traj.t[bad[-1]]) if len(bad) else 0.0
        later = np.nonzero(radii > r_bad)[0]
        g_index = int(later[0]) if len(later) else None
    if dec_index is None:
        n0 = None
    elif traj is not None and traj.system == "log":
        n0 = None if g_index is None else max(dec_index, g_index)
    else:
        n0 = dec_index
    max_index = int(np.argmax(amps))
    return OscillationReport(radii, values, tuple(kinds), amps, n0, max_index, max_index == 0,
                             alternating, g_index, dec_index)


# ---------------------------------------------------------------------------
# taxonomy

@dataclass(frozen=True)
class SolutionClass:
    label: str
    evidence: dict


LABELS_BELOW_2 = ("minimizer-type", "oscillatory-with-blowup-at-0", "monotone-to-kpi", "unbounded")
LABELS_ABOVE_2 = ("increasing-unbounded", "half-integer-start", "doubly-unbounded")

UNBOUNDED = 10 * math.pi
LIMIT_TOL = 1e-3


def _end_evidence(p, start, s_end, horizon_tag):
    cfg = IntegratorConfig(t_max=s_end, rtol=1e-10, atol=1e-14)
    events = (EventSpec("f-crosses", UNBOUNDED, terminal=True),
              EventSpec("f-crosses", -UNBOUNDED, terminal=True),
              EventSpec("k-zero"))
    try:
        traj = integrate(p, "log", start, cfg, events)
        reason = traj.termination
    except (SingularDenominatorError, StiffnessError) as err:
        traj = err.trajectory
        reason = type(err).__name__
    f_end = float(traj.y[-1, 0])
    ev = {"end": horizon_tag, "termination": reason, "s_reached": traj.t_end, "f_end": f_end,
          "turning_points": len(traj.events_of("k-zero"))}
    if reason.startswith("event:f-crosses"):
        ev["kind"] = "unbounded"
        ev["sign"] = 1 if f_end > 0 else -1
        return ev
    window = math.log(10.0)
    span = abs(traj.t_end - traj.t_start)
    if span > window:
        s_tail = np.linspace(traj.t_end - math.copysign(window, traj.t_end - traj.t_start), traj.t_end, 200)
        f_tail = traj(s_tail)[:, 0]
        m = round(f_end / HALF_PI)
        if np.all(np.abs(f_tail - m * HALF_PI) < LIMIT_TOL):
            ev["kind"] = "limit"
            ev["limit_multiple"] = m  # limit = m * pi/2
            ev["limit"] = m * HALF_PI
            return ev
    ev["kind"] = "undetermined"
    return ev


def _label(p, lo, hi):
    def is_limit(e, odd):
        return e["kind"] == "limit" and (e["limit_multiple"] % 2 == 1) == odd

    unb_lo = lo["kind"] == "unbounded"
    unb_hi = hi["kind"] == "unbounded"
    if p < 2:
        if is_limit(lo, False) and is_limit(hi, True):
            return "minimizer-type"
        if unb_lo and is_limit(hi, True):
            return "oscillatory-with-blowup-at-0"
        if unb_lo and is_limit(hi, False):
            return "monotone-to-kpi"
        if unb_lo and unb_hi:
            return "unbounded"
    elif p > 2:
        if is_limit(lo, False) and unb_hi:
            return "increasing-unbounded"
        if is_limit(lo, True) and (unb_hi or is_limit(hi, False)):
            return "half-integer-start"
        if unb_lo and unb_hi:
            return "doubly-unbounded"
    return "undetermined"


def classify_solution(params, initial, horizon: float = 200.0, system: str = "reversed",
                      r0: float = DEFAULT_R0) -> SolutionClass:
    """Map the two-sided asymptotics of a solution onto the taxonomy labels.

    ``initial`` is a planar state at ``r = 1`` in the given system's time
    orientation (branch ``0 < h < pi``), or ``"P1"`` for the solution leaving
    the origin like ``C r``. Evidence that does not settle within
    ``horizon`` logarithmic units gives ``"undetermined"``.
    """
    p = as_params(params).p
    horizon = check_positive("horizon", horizon)
    if isinstance(initial, str):
        if initial != "P1":
            raise InvalidInputError(f"unknown origin spec {initial!r}")
        start = LogState(math.log(r0), r0, r0, Direction.TOWARD_INFINITY)
        lo = {"end": "r->0", "kind": "limit", "limit_multiple": 0, "limit": 0.0,
              "termination": "construction"}
        hi = _end_evidence(p, start, horizon, "r->inf")
    else:
        w, k = PlanarState(*initial)
        if not (math.isfinite(w) and math.isfinite(k)):
            raise InvalidInputError("initial state must be finite")
        f = math.atan2(1.0, w)
        df = -k / (1 + w * w)
        if system == "forward":
            df = -df
        elif system != "reversed":
            raise InvalidInputError(f"unknown system {system!r}")
        start = LogState(0.0, f, df, Direction.TOWARD_INFINITY)
        lo = _end_evidence(p, start, -horizon, "r->0")
        hi = _end_evidence(p, start, horizon, "r->inf")
    label = _label(p, lo, hi)
    return SolutionClass(label, {"p": p, "r->0": lo, "r->inf": hi})


# ---------------------------------------------------------------------------
# asymptotic spot checks

def asymptotic_checks(params, offset: float = 1e-8) -> dict:
    """Numerical checks of the large-``w`` behaviour used in the existence proofs.

    Items: ``(i)`` ``w'/w`` on the forward ``P1`` orbit at ``w = 1e4``;
    ``(ii)`` finite-difference ``dF/dg`` at ``(1e6, 1)`` against ``2(p-1)``;
    ``(iii)`` the ``g``-bracket at ``(1e6, 1)``. For ``1 < p < 2`` the
    observed ``w/w'`` near ``P2`` on the reversed manifold is also reported.
    """
    p = as_params(params).p
    out = {"p": p}

    phi = infinity_angle(p, "forward", "P1")
    traj = integrate_backward_from_saddle(
        p, "forward", PoincareState(1.0, phi), (1.0, 0.0), offset=offset,
        config=IntegratorConfig(t_max=100.0),
        events=(EventSpec("w-crosses", 1e4, terminal=True),))
    hits = traj.events_of("w-crosses")
    if hits:
        rho, ph = hits[-1].state
        ratio = math.tan(ph) if hits[-1].chart == "poincare" else hits[-1].state[1] / hits[-1].state[0]
        out["i"] = {"ratio": ratio, "error": abs(ratio - 1), "pass": abs(ratio - 1) < 1e-3}
    else:
        out["i"] = {"ratio": None, "error": None, "pass": False}

    w, g, step = 1e6, 1.0, 1e-6
    dF = (_F(p, w, g + step) - _F(p, w, g - step)) / (2 * step)
    out["ii"] = {"dF_dg": dF, "expected": 2 * (p - 1), "error": abs(dF - 2 * (p - 1)),
                 "pass": abs(dF - 2 * (p - 1)) < 1e-4}
    br = g_bracket(p, w, g)
    out["iii"] = {"bracket": br, "pass": abs(br) < 1e-6}

    if 1 < p < 2:
        phi2 = infinity_angle(p, "reversed", "P2")
        tr2 = integrate_backward_from_saddle(
            p, "reversed", PoincareState(1.0, phi2), (1.0, 0.0), offset=offset,
            config=IntegratorConfig(t_max=100.0),
            events=(EventSpec("radius-exceeds", 1e4, "falling", terminal=True),))
        hits = tr2.events_of("radius-exceeds")
        if hits:
            _, ph = hits[-1].state
            out["P2_ratio_w_over_dw"] = 1.0 / math.tan(ph)
        out["P2_expected_w_over_dw"] = p - 1
    out["pass"] = all(out[k]["pass"] for k in ("i", "ii", "iii"))
    return out


# ---------------------------------------------------------------------------
# profiles through an arbitrary state

def profile_from_state(params, initial, r_min: float = 1e-3, r_max: float = 1e3,
                       system: str = "reversed", n_samples: int = 2000) -> RadialProfile:
    """Solution through the planar state ``initial`` at ``r = 1`` on ``[r_min, r_max]``.

    Integration stops early on either side once ``|h| > 10 pi``; the
    reached range is stored in the metadata.
    """
    p = as_params(params).p
    if not 0 < r_min < 1 < r_max:
        raise InvalidInputError("need 0 < r_min < 1 < r_max")
    w, k = PlanarState(*initial)
    f = math.atan2(1.0, w)
    df = -k / (1 + w * w)
    if system == "forward":
        df = -df
    elif system != "reversed":
        raise InvalidInputError(f"unknown system {system!r}")
    start = LogState(0.0, f, df, Direction.TOWARD_INFINITY)
    events = (EventSpec("f-crosses", UNBOUNDED, terminal=True),
              EventSpec("f-crosses", -UNBOUNDED, terminal=True))
    parts = []
    for s_end in (math.log(r_min), math.log(r_max)):
        parts.append(integrate(p, "log", start, IntegratorConfig(t_max=s_end), events))
    lo, hi = parts
    s_lo, s_hi = lo.t_end, hi.t_end
    s = np.linspace(s_lo, s_hi, int(n_samples))
    y = np.where((s < 0)[:, None], lo(np.clip(s, s_lo, 0.0)), hi(np.clip(s, 0.0, s_hi)))
    r = np.exp(s)

    def evaluate(rr):
        ss = np.log(np.asarray(rr, dtype=float))
        if np.any((ss < s_lo - 1e-12) | (ss > s_hi + 1e-12)):
            raise InvalidInputError("radius outside the computed range")
        yy = np.where((ss < 0)[..., None], lo(np.clip(ss, s_lo, 0.0)), hi(np.clip(ss, 0.0, s_hi)))
        return yy[..., 0], yy[..., 1] / np.exp(ss)

    meta = {"initial": (float(w), float(k)), "system": system, "r_reached": (math.exp(s_lo), math.exp(s_hi)),
            "termination": (lo.termination, hi.termination)}
    return RadialProfile(r, y[:, 0], y[:, 1] / r, p, "through-state", meta, evaluate)
