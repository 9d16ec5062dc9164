"""Adaptive Dormand-Prince 5(4) integration with events and chart switching.

All systems handled here are two-dimensional, so the stepper works on
plain float pairs rather than arrays; this keeps a step at a few dozen
microseconds. Dense output uses the free fourth-order interpolant of the
pair.

Systems
-------
``"forward"`` / ``"reversed"``
    The planar ``(w, k)`` flows (inward / outward logarithmic time). A
    trajectory that leaves the disc of radius ``switch_radius_out`` is
    continued in Poincare coordinates ``(rho, phi)`` and switched back once
    it re-enters radius ``switch_radius_in``.
``"radial"``
    The radial equation in ``r`` with state ``(h, h')``.
``"log"``
    The same equation in ``s = ln r`` with state ``(f, f')``, ``f(s) = h(e^s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .exceptions import InvalidInputError, SingularDenominatorError, StiffnessError
from .model import (
    Direction,
    LogState,
    PlanarState,
    PoincareState,
    RadialPoint,
    _dk_forward,
    _dk_reversed,
    _log_ddf,
    _poincare_forward,
    _poincare_reversed,
    _radial_ddh,
    as_params,
    poincare_jacobian,
)

SYSTEM_NAMES = ("forward", "reversed", "radial", "log")

EVENT_KINDS = (
    "w-zero",
    "k-zero",
    "w-crosses",
    "f-crosses",
    "h-crosses",
    "denominator-below",
    "radius-exceeds",
)

# Dormand-Prince coefficients
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (-71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200,
                          -22 / 525, 1 / 40)
# free interpolant: y(t0 + x h) = y0 + h * sum_j Q_j x^(j+1),  Q = K^T P
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])
_PT = tuple(tuple(float(v) for v in row) for row in _P.T)  # 4 x 7

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for one integration.

    ``t_max`` is the terminal value of the independent variable; a value
    below the start time integrates backwards.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    t_max: float = 50.0
    switch_radius_out: float = 1e3
    switch_radius_in: float = 5e2
    first_step: Optional[float] = None
    max_steps: int = 500_000
    rho_max: float = 1.0 - 1e-11
    chart_switching: bool = True

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise InvalidInputError("rtol and atol must be positive")
        if not self.switch_radius_in < self.switch_radius_out:
            raise InvalidInputError("switch_radius_in must be below switch_radius_out")
        if not self.max_step > 0:
            raise InvalidInputError("max_step must be positive")
        if not 0 < self.rho_max < 1:
            raise InvalidInputError("rho_max must lie in (0, 1)")
        if not math.isfinite(self.t_max):
            raise InvalidInputError("t_max must be finite")

    def refined(self, factor=0.5):
        """Copy with both tolerances scaled by ``factor``."""
        return _replace(self, rtol=self.rtol * factor, atol=self.atol * factor)


def _replace(cfg, **kw):
    from dataclasses import replace
    return replace(cfg, **kw)


@dataclass(frozen=True)
class EventSpec:
    """A scalar condition located along a trajectory.

    ``value`` is the target for the ``*-crosses``, ``denominator-below`` and
    ``radius-exceeds`` kinds. ``direction`` is ``"rising"``, ``"falling"``
    or ``"any"`` and refers to the event function in integration order.
    """

    kind: str
    value: float = 0.0
    direction: str = "any"
    terminal: bool = False

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvalidInputError(f"unknown event kind {self.kind!r}")
        if self.direction not in ("rising", "falling", "any"):
            raise InvalidInputError(f"unknown event direction {self.direction!r}")
        if not math.isfinite(self.value):
            raise InvalidInputError("event target must be finite")


@dataclass(frozen=True)
class EventHit:
    t: float
    spec: EventSpec
    state: tuple
    chart: str


@dataclass(frozen=True)
class ChartSwitch:
    t: float
    before: tuple
    chart_before: str
    after: tuple
    chart_after: str


class Trajectory:
    """Immutable record of an integration: samples, dense output, events.

    States are stored in the chart that produced them (``charts[i]``).
    :meth:`planar` converts everything to ``(w, k)`` for the phase-plane
    systems.
    """

    def __init__(self, system, p, t, y, charts, events, termination, switches, segments):
        self.system = system
        self.p = p
        self.t = _frozen(np.asarray(t, dtype=float))
        self.y = _frozen(np.asarray(y, dtype=float).reshape(-1, 2))
        self.charts = tuple(charts)
        self.events = tuple(events)
        self.termination = termination
        self.switches = tuple(switches)
        n = len(segments)
        self._seg_t0 = np.array([s[0] for s in segments], dtype=float)
        self._seg_t1 = np.array([s[1] for s in segments], dtype=float)
        self._seg_h = np.array([s[2] for s in segments], dtype=float)
        self._seg_y0 = np.array([s[3] for s in segments], dtype=float).reshape(n, 2)
        self._seg_q = np.array([s[4] for s in segments], dtype=float).reshape(n, 2, 4)
        self._seg_chart = tuple(s[5] for s in segments)
        self._forward = len(self.t) < 2 or self.t[-1] >= self.t[0]

    def __len__(self):
        return len(self.t)

    def __repr__(self):
        return (f"Trajectory(system={self.system!r}, n={len(self)}, "
                f"t=[{self.t[0]:.6g}, {self.t[-1]:.6g}], termination={self.termination!r})")

    @property
    def t_start(self):
        return float(self.t[0])

    @property
    def t_end(self):
        return float(self.t[-1])

    @property
    def final_state(self):
        return tuple(self.y[-1]), self.charts[-1]

    def events_of(self, kind):
        return [e for e in self.events if e.spec.kind == kind]

    def _segment_index(self, t):
        t = np.asarray(t, dtype=float)
        if self._forward:
            idx = np.searchsorted(self._seg_t0, t, side="right") - 1
        else:
            idx = np.searchsorted(-self._seg_t0, -t, side="right") - 1
        return np.clip(idx, 0, max(len(self._seg_t0) - 1, 0))

    def dense(self, t):
        """Interpolated native states at ``t`` (array ``(..., 2)``) and chart tags."""
        if len(self._seg_t0) == 0:
            tt = np.asarray(t, dtype=float)
            return np.broadcast_to(self.y[0], tt.shape + (2,)).copy(), np.full(tt.shape, self.charts[0])
        t = np.asarray(t, dtype=float)
        lo, hi = (self.t[0], self.t[-1]) if self._forward else (self.t[-1], self.t[0])
        if np.any((t < lo - 1e-12 * max(1, abs(lo))) | (t > hi + 1e-12 * max(1, abs(hi)))):
            raise InvalidInputError("requested time outside the integrated range")
        idx = self._segment_index(t)
        h = self._seg_h[idx]
        x = (t - self._seg_t0[idx]) / h
        powers = np.stack([x, x * x, x ** 3, x ** 4], axis=-1)
        y = self._seg_y0[idx] + h[..., None] * np.einsum("...ij,...j->...i", self._seg_q[idx], powers)
        charts = np.asarray(self._seg_chart, dtype=object)[idx]
        return y, charts

    def __call__(self, t):
        return self.dense(t)[0]

    def derivative(self, t):
        """Time derivative of the dense interpolant at ``t`` (native chart)."""
        t = np.asarray(t, dtype=float)
        idx = self._segment_index(t)
        x = (t - self._seg_t0[idx]) / self._seg_h[idx]
        powers = np.stack([np.ones_like(x), 2 * x, 3 * x * x, 4 * x ** 3], axis=-1)
        return np.einsum("...ij,...j->...i", self._seg_q[idx], powers)

    def planar(self):
        """Samples as planar ``(w, k)`` arrays (phase-plane systems only)."""
        if self.system not in ("forward", "reversed"):
            raise InvalidInputError("planar view only exists for the phase-plane systems")
        return _to_planar_arrays(self.y, self.charts)

    def poincare(self):
        """Samples as disc coordinates ``(rho, phi)`` with ``phi`` in ``[0, 2 pi)``."""
        if self.system not in ("forward", "reversed"):
            raise InvalidInputError("disc view only exists for the phase-plane systems")
        rho = np.empty(len(self.t))
        phi = np.empty(len(self.t))
        for i, (a, b) in enumerate(self.y):
            if self.charts[i] == "poincare":
                rho[i], phi[i] = a, b
            else:
                R = math.hypot(a, b)
                rho[i] = R / (1 + R)
                phi[i] = math.atan2(b, a) if R > 0 else 0.0
        return rho, np.mod(phi, 2 * math.pi)


def _frozen(a):
    a.setflags(write=False)
    return a


def _to_planar_arrays(y, charts):
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    w = y[:, 0].copy()
    k = y[:, 1].copy()
    mask = np.asarray([c == "poincare" for c in charts], dtype=bool)
    if mask.any():
        R = y[mask, 0] / (1 - y[mask, 0])
        w[mask] = R * np.cos(y[mask, 1])
        k[mask] = R * np.sin(y[mask, 1])
    return w, k


# ---------------------------------------------------------------------------
# system plumbing

def _field(system, chart, p):
    if system == "forward":
        if chart == "planar":
            return lambda t, a, b: (b, _dk_forward(p, a, b))
        return lambda t, a, b: _poincare_forward(p, a, b)
    if system == "reversed":
        if chart == "planar":
            return lambda t, a, b: (b, _dk_reversed(p, a, b))
        return lambda t, a, b: _poincare_reversed(p, a, b)
    if system == "radial":
        return lambda t, a, b: (b, _radial_ddh(p, t, a, b))
    if system == "log":
        return lambda t, a, b: (b, _log_ddf(p, a, b))
    raise InvalidInputError(f"unknown system {system!r}")


def _event_function(spec: EventSpec, system, chart, p):
    kind, v = spec.kind, spec.value
    if chart == "planar":
        if kind == "w-zero":
            return lambda t, a, b: a
        if kind == "k-zero":
            return lambda t, a, b: b
        if kind == "w-crosses":
            return lambda t, a, b: a - v
        if kind == "radius-exceeds":
            return lambda t, a, b: math.hypot(a, b) - v
        if kind == "denominator-below":
            # (p-1) f'^2 + sin^2 f expressed through w = cot f, k = w'
            return lambda t, a, b: v - ((p - 1) * b * b / (1 + a * a) ** 2 + 1 / (1 + a * a))
    elif chart == "poincare":
        if kind == "w-zero":
            return lambda t, a, b: math.cos(b)
        if kind == "k-zero":
            return lambda t, a, b: math.sin(b)
        if kind == "w-crosses":
            return lambda t, a, b: a / (1 - a) * math.cos(b) - v
        if kind == "radius-exceeds":
            return lambda t, a, b: a / (1 - a) - v
        if kind == "denominator-below":
            def g(t, a, b):
                R = a / (1 - a)
                w, k = R * math.cos(b), R * math.sin(b)
                return v - ((p - 1) * k * k / (1 + w * w) ** 2 + 1 / (1 + w * w))
            return g
    elif chart == "radial":
        if kind == "w-zero":
            return lambda t, a, b: math.cos(a)
        if kind == "k-zero":
            return lambda t, a, b: b
        if kind in ("f-crosses", "h-crosses"):
            return lambda t, a, b: a - v
        if kind == "radius-exceeds":
            return lambda t, a, b: t - v
        if kind == "denominator-below":
            return lambda t, a, b: v - ((p - 1) * b * b + math.sin(a) ** 2 / (t * t))
    elif chart == "log":
        if kind == "w-zero":
            return lambda t, a, b: math.cos(a)
        if kind == "k-zero":
            return lambda t, a, b: b
        if kind in ("f-crosses", "h-crosses"):
            return lambda t, a, b: a - v
        if kind == "radius-exceeds":
            return lambda t, a, b: t - math.log(v)
        if kind == "denominator-below":
            return lambda t, a, b: v - ((p - 1) * b * b + math.sin(a) ** 2) * math.exp(-2 * t)
    raise InvalidInputError(f"event kind {kind!r} is not defined for system {system!r}")


def _start_state(system, start, t0):
    if system in ("forward", "reversed"):
        if isinstance(start, PoincareState):
            if not 0 <= start.rho < 1:
                raise InvalidInputError("Poincare start must satisfy 0 <= rho < 1")
            return "poincare", (float(start.rho), float(start.phi)), (0.0 if t0 is None else t0)
        if isinstance(start, PlanarState) or (isinstance(start, tuple) and len(start) == 2):
            w, k = start
            return "planar", (float(w), float(k)), (0.0 if t0 is None else t0)
        raise InvalidInputError("phase-plane systems start from a PlanarState or PoincareState")
    if system == "radial":
        if not isinstance(start, RadialPoint):
            raise InvalidInputError("the radial system starts from a RadialPoint")
        if not start.r > 0:
            raise InvalidInputError("radial start needs r > 0")
        return "radial", (float(start.h), float(start.dh)), float(start.r)
    if system == "log":
        if isinstance(start, RadialPoint):
            r, h, dh = start
            return "log", (float(h), float(r * dh)), math.log(r)
        if isinstance(start, LogState):
            if Direction(start.direction) is not Direction.TOWARD_INFINITY:
                raise InvalidInputError("the log system runs in outward time (t = +ln r)")
            return "log", (float(start.f), float(start.df)), float(start.t)
        raise InvalidInputError("the log system starts from a LogState or RadialPoint")
    raise InvalidInputError(f"unknown system {system!r}; expected one of {SYSTEM_NAMES}")


def _planar_to_disc(a, b):
    R = math.hypot(a, b)
    return R / (1 + R), math.atan2(b, a)


def _disc_to_planar(a, b):
    R = a / (1 - a)
    return R * math.cos(b), R * math.sin(b)


def _dopri_step(fun, t, a, b, f1, h):
    f1a, f1b = f1
    f2a, f2b = fun(t + C2 * h, a + h * A21 * f1a, b + h * A21 * f1b)
    f3a, f3b = fun(t + C3 * h, a + h * (A31 * f1a + A32 * f2a), b + h * (A31 * f1b + A32 * f2b))
    f4a, f4b = fun(t + C4 * h, a + h * (A41 * f1a + A42 * f2a + A43 * f3a),
                   b + h * (A41 * f1b + A42 * f2b + A43 * f3b))
    f5a, f5b = fun(t + C5 * h, a + h * (A51 * f1a + A52 * f2a + A53 * f3a + A54 * f4a),
                   b + h * (A51 * f1b + A52 * f2b + A53 * f3b + A54 * f4b))
    f6a, f6b = fun(t + h, a + h * (A61 * f1a + A62 * f2a + A63 * f3a + A64 * f4a + A65 * f5a),
                   b + h * (A61 * f1b + A62 * f2b + A63 * f3b + A64 * f4b + A65 * f5b))
    an = a + h * (B1 * f1a + B3 * f3a + B4 * f4a + B5 * f5a + B6 * f6a)
    bn = b + h * (B1 * f1b + B3 * f3b + B4 * f4b + B5 * f5b + B6 * f6b)
    f7 = fun(t + h, an, bn)
    f7a, f7b = f7
    ea = h * (E1 * f1a + E3 * f3a + E4 * f4a + E5 * f5a + E6 * f6a + E7 * f7a)
    eb = h * (E1 * f1b + E3 * f3b + E4 * f4b + E5 * f5b + E6 * f6b + E7 * f7b)
    K = ((f1a, f2a, f3a, f4a, f5a, f6a, f7a), (f1b, f2b, f3b, f4b, f5b, f6b, f7b))
    return an, bn, f7, ea, eb, K


def _dense_coeffs(K):
    return tuple(tuple(sum(Kc[i] * _PT[j][i] for i in range(7)) for j in range(4)) for Kc in K)


def _dense_eval(seg, t):
    t0, _, h, y0, Q, _ = seg
    x = (t - t0) / h
    x2 = x * x
    out = []
    for c in range(2):
        q = Q[c]
        out.append(y0[c] + h * (q[0] * x + q[1] * x2 + q[2] * x2 * x + q[3] * x2 * x2))
    return out[0], out[1]


class _Recorder:
    def __init__(self, system, p, t0, y0, chart):
        self.system = system
        self.p = p
        self.t = [t0]
        self.y = [y0]
        self.charts = [chart]
        self.events = []
        self.switches = []
        self.segments = []

    def build(self, termination):
        return Trajectory(self.system, self.p, self.t, self.y, self.charts, self.events,
                          termination, self.switches, self.segments)


def integrate(params, system: str, start, config: Optional[IntegratorConfig] = None,
              events: Sequence[EventSpec] = (), t0: Optional[float] = None) -> Trajectory:
    """Integrate ``system`` from ``start`` until ``config.t_max`` or a terminal event.

    Returns a :class:`Trajectory` whose ``termination`` is one of
    ``"t_max"``, ``"event:<kind>"``, ``"reached-infinity"`` (the disc
    boundary was reached outside a resolvable chart) or ``"max_steps"``.
    A singular leading coefficient raises :class:`SingularDenominatorError`
    and step-size underflow raises :class:`StiffnessError`; both carry the
    partial trajectory.
    """
    p = as_params(params).p
    cfg = config or IntegratorConfig()
    if system not in SYSTEM_NAMES:
        raise InvalidInputError(f"unknown system {system!r}; expected one of {SYSTEM_NAMES}")
    events = tuple(events)
    chart, (a, b), t = _start_state(system, start, t0)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidInputError("start state must be finite")
    t_end = float(cfg.t_max)
    direction = 1.0 if t_end >= t else -1.0
    phase = system in ("forward", "reversed")
    switching = phase and cfg.chart_switching

    rec = _Recorder(system, p, t, (a, b), chart)
    if t_end == t:
        return rec.build("t_max")

    def setup(chart):
        fun = _field(system, chart, p)
        funcs = [_event_function(e, system, chart, p) for e in events]
        return fun, funcs

    # validate events for the other chart too so errors surface early
    if phase:
        for e in events:
            _event_function(e, system, "planar", p)
            _event_function(e, system, "poincare", p)

    fun, funcs = setup(chart)
    try:
        f = fun(t, a, b)
    except SingularDenominatorError as err:
        err.trajectory = rec.build("singular-denominator")
        raise
    gvals = [g(t, a, b) for g in funcs]

    span = abs(t_end - t)
    if cfg.first_step is not None:
        h = min(abs(cfg.first_step), span)
    else:
        scale_a = cfg.atol + cfg.rtol * abs(a)
        scale_b = cfg.atol + cfg.rtol * abs(b)
        d0 = math.hypot(a / scale_a, b / scale_b) / math.sqrt(2)
        d1 = math.hypot(f[0] / scale_a, f[1] / scale_b) / math.sqrt(2)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        h = min(h, span, 0.1)
    h = min(h, cfg.max_step)

    n_steps = 0
    while True:
        if n_steps >= cfg.max_steps:
            return rec.build("max_steps")
        min_step = 10 * np.spacing(max(abs(t), 1.0))
        remaining = abs(t_end - t)
        if h > remaining:
            h = remaining
        if h < min_step:
            if chart == "poincare" and a > 1 - 1e-6:
                return rec.build("reached-infinity")
            err = StiffnessError(f"step size underflow at t={t:.12g} (chart {chart})")
            err.trajectory = rec.build("stiffness")
            raise err

        hs = direction * h
        try:
            an, bn, fn, ea, eb, K = _dopri_step(fun, t, a, b, f, hs)
            ok = all(math.isfinite(v) for v in (an, bn, ea, eb, fn[0], fn[1]))
        except SingularDenominatorError as err:
            # retry with a smaller step before giving up
            if h > 16 * min_step:
                h *= 0.25
                continue
            err.trajectory = rec.build("singular-denominator")
            raise
        except (ZeroDivisionError, OverflowError):
            ok = False
        if ok and chart == "poincare" and not (0 <= an < 1):
            ok = False
        if not ok:
            h *= 0.25
            continue
        sa = cfg.atol + cfg.rtol * max(abs(a), abs(an))
        sb = cfg.atol + cfg.rtol * max(abs(b), abs(bn))
        err_norm = math.sqrt(0.5 * ((ea / sa) ** 2 + (eb / sb) ** 2))
        if err_norm > 1.0:
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            continue

        n_steps += 1
        t_new = t + hs
        if abs(t_end - t_new) <= 1e-14 * max(1.0, abs(t_end)):
            t_new = t_end
        seg = [t, t_new, hs, (a, b), _dense_coeffs(K), chart]

        # locate the earliest terminal crossing (user events, chart boundary)
        gnew = [g(t_new, an, bn) for g in funcs]
        crossings = []
        for i, (spec, g0, g1) in enumerate(zip(events, gvals, gnew)):
            if _crossed(spec.direction, g0, g1):
                crossings.append((_refine(funcs[i], seg, t, t_new), i))
        special = None
        if switching and chart == "planar":
            R1 = math.hypot(an, bn)
            if R1 > cfg.switch_radius_out:
                g = lambda tt, x, y: math.hypot(x, y) - cfg.switch_radius_out
                special = ("to-poincare", _refine(g, seg, t, t_new))
        elif chart == "poincare":
            if an > cfg.rho_max:
                g = lambda tt, x, y: x - cfg.rho_max
                special = ("reached-infinity", _refine(g, seg, t, t_new))
            elif switching and an / (1 - an) < cfg.switch_radius_in:
                g = lambda tt, x, y: x / (1 - x) - cfg.switch_radius_in
                special = ("to-planar", _refine(g, seg, t, t_new))

        crossings.sort(key=lambda c: direction * c[0])
        cut = None
        for tc, i in crossings:
            if special is not None and direction * (tc - special[1]) > 0:
                break
            state = _dense_eval(seg, tc)
            rec.events.append(EventHit(tc, events[i], state, chart))
            if events[i].terminal:
                cut = (tc, f"event:{events[i].kind}")
                break
        if cut is None and special is not None:
            cut = (special[1], special[0])

        if cut is None:
            rec.segments.append(tuple(seg))
            t, a, b, f = t_new, an, bn, fn
            gvals = gnew
            rec.t.append(t)
            rec.y.append((a, b))
            rec.charts.append(chart)
            if t == t_end:
                return rec.build("t_max")
            factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
            h = min(h * factor, cfg.max_step)
            continue

        tc, reason = cut
        ac, bc = _dense_eval(seg, tc)
        seg[1] = tc
        rec.segments.append(tuple(seg))
        if tc != t:
            rec.t.append(tc)
            rec.y.append((ac, bc))
            rec.charts.append(chart)
        if reason.startswith("event:") or reason == "reached-infinity":
            return rec.build(reason)

        # chart switch
        if reason == "to-poincare":
            na, nb = _planar_to_disc(ac, bc)
            # keep phi continuous with the previous disc visit if any
            new_chart = "poincare"
        else:
            na, nb = _disc_to_planar(ac, bc)
            new_chart = "planar"
        rec.switches.append(ChartSwitch(tc, (ac, bc), chart, (na, nb), new_chart))
        chart = new_chart
        fun, funcs = setup(chart)
        t, a, b = tc, na, nb
        rec.t[-1] = t
        rec.y[-1] = (a, b)
        rec.charts[-1] = chart
        f = fun(t, a, b)
        gvals = [g(t, a, b) for g in funcs]
        h = min(h, cfg.max_step)


def _crossed(direction, g0, g1):
    if g0 == 0 or not (math.isfinite(g0) and math.isfinite(g1)):
        return False
    if direction == "rising":
        return g0 < 0 <= g1
    if direction == "falling":
        return g0 > 0 >= g1
    return (g0 < 0 <= g1) or (g0 > 0 >= g1)


def _refine(g, seg, t0, t1):
    def fn(tt):
        x, y = _dense_eval(seg, tt)
        return g(tt, x, y)

    lo, hi = (t0, t1) if t0 < t1 else (t1, t0)
    flo, fhi = fn(lo), fn(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        # interpolant missed the sign change seen at the nodes; use the node
        return t1
    return brentq(fn, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


# ---------------------------------------------------------------------------
# invariant manifolds of saddles at infinity

def integrate_backward_from_saddle(params, system: str, point: PoincareState, eigvec,
                                   offset: float = 1e-8, config: Optional[IntegratorConfig] = None,
                                   events: Sequence[EventSpec] = ()) -> Trajectory:
    """Trace the branch of a boundary saddle's invariant manifold that lies in the plane.

    ``eigvec`` is the eigenvector of the linearisation transverse to the
    boundary circle. The seed ``point - offset * eigvec`` is placed inside the
    disc; the integration runs backwards in time for a stable direction and
    forwards for an unstable one, so the result always moves away from the
    saddle into the plane. ``config.t_max`` is interpreted as a duration.
    """
    p = as_params(params).p
    if system not in ("forward", "reversed"):
        raise InvalidInputError("saddles at infinity belong to the phase-plane systems")
    v = np.asarray(eigvec, dtype=float).reshape(-1)
    if v.shape != (2,) or not np.all(np.isfinite(v)) or np.linalg.norm(v) == 0:
        raise InvalidInputError("eigvec must be a finite non-zero 2-vector")
    v = v / np.linalg.norm(v)
    rho0, phi0 = float(point.rho), float(point.phi)
    if abs(rho0 - 1.0) > 1e-12:
        raise InvalidInputError("saddles at infinity sit on rho = 1")

    with np.errstate(all="ignore"):
        J = poincare_jacobian(p, rho0, phi0, system)
        residual = np.asarray((_poincare_forward if system == "forward" else _poincare_reversed)(p, rho0, phi0))
    if not np.all(np.isfinite(J)) or np.max(np.abs(residual)) > 1e-8:
        raise InvalidInputError(f"({rho0}, {phi0}) is not a hyperbolic critical point")
    lam = np.linalg.eigvals(J)
    if np.any(np.abs(lam.imag) > 1e-9) or not (lam.real.min() < 0 < lam.real.max()):
        raise InvalidInputError(f"critical point at phi={phi0:.6g} is not a saddle (eigenvalues {lam})")
    Jv = J @ v
    rate = float(v @ Jv)
    if np.linalg.norm(Jv - rate * v) > 1e-5 * max(1.0, abs(rate)):
        raise InvalidInputError("eigvec is not an eigenvector of the linearisation")
    if abs(v[0]) < 1e-12:
        raise InvalidInputError("eigvec is tangent to the boundary; need the transverse direction")
    if v[0] < 0:
        v = -v
    seed = PoincareState(rho0 - offset * v[0], phi0 - offset * v[1])
    if not 0 <= seed.rho < 1:
        raise InvalidInputError("seed falls outside the disc")

    cfg = config or IntegratorConfig(t_max=200.0)
    duration = abs(cfg.t_max)
    t_end = -duration if rate < 0 else duration
    cfg = _replace(cfg, t_max=t_end)
    return integrate(p, system, seed, cfg, events, t0=0.0)
