import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phmap.critpoints import infinity_angle
from phmap.exceptions import InvalidInputError, SingularDenominatorError, StiffnessError
from phmap.integrate import EventSpec, IntegratorConfig, integrate, integrate_backward_from_saddle
from phmap.model import LogState, Direction, PlanarState, PoincareState, RadialPoint, energy_diag
from phmap.transforms import planar_to_poincare, poincare_to_planar


def test_config_validation():
    with pytest.raises(InvalidInputError):
        IntegratorConfig(rtol=0)
    with pytest.raises(InvalidInputError):
        IntegratorConfig(switch_radius_in=2e3)
    with pytest.raises(InvalidInputError):
        EventSpec("nonsense")
    with pytest.raises(InvalidInputError):
        EventSpec("w-crosses", float("inf"))
    with pytest.raises(InvalidInputError):
        EventSpec("k-zero", direction="up")


def test_radial_explicit_solution():
    r0 = 0.01
    tr = integrate(2.0, "radial", RadialPoint(r0, 2 * math.atan(r0), 2 / (1 + r0 * r0)), IntegratorConfig(t_max=100.0))
    r = np.linspace(r0, 100, 5000)
    assert tr.termination == "t_max"
    assert np.max(np.abs(tr(r)[:, 0] - 2 * np.arctan(r))) < 1e-8
    assert np.all(np.diff(tr.t) > 0)


def test_origin_is_constant():
    tr = integrate(1.5, "forward", PlanarState(0.0, 0.0), IntegratorConfig(t_max=10.0))
    assert np.all(tr.y == 0.0)


def test_small_spiral_decays():
    tr = integrate(1.5, "reversed", PlanarState(0.0, -1e-6), IntegratorConfig(t_max=60.0))
    E = energy_diag(1.5, PlanarState(tr.y[:, 0], tr.y[:, 1])).E
    assert E[-1] < 1e-3 * E[0]
    # after the first turn the energy envelope is decreasing
    assert E[len(E) // 2:].max() < E[: len(E) // 2].max()


def test_backward_integration():
    start = PlanarState(0.3, -0.2)
    fwd = integrate(1.5, "reversed", start, IntegratorConfig(t_max=5.0))
    back = integrate(1.5, "reversed", PlanarState(*fwd.y[-1]), IntegratorConfig(t_max=0.0), t0=5.0)
    assert np.all(np.diff(back.t) < 0)
    assert back.y[-1] == pytest.approx(np.array(start), abs=1e-8)


def test_events_satisfy_condition():
    events = [EventSpec("w-zero"), EventSpec("k-zero"), EventSpec("w-crosses", 0.1, "rising")]
    tr = integrate(1.5, "reversed", PlanarState(0.0, -1.0), IntegratorConfig(t_max=30.0), events)
    kinds = {e.spec.kind for e in tr.events}
    assert kinds == {"w-zero", "k-zero", "w-crosses"}
    for e in tr.events:
        w, k = e.state
        val = {"w-zero": w, "k-zero": k, "w-crosses": w - 0.1}[e.spec.kind]
        assert abs(val) < 1e-10
        # dense output agrees with the stored state
        assert tr(e.t) == pytest.approx(np.array(e.state), abs=1e-12)
    ts = [e.t for e in tr.events]
    assert ts == sorted(ts)
    for e in tr.events_of("w-crosses"):
        dw = tr.derivative(e.t)[0]
        assert dw > 0


def test_terminal_event_stops():
    tr = integrate(1.5, "reversed", PlanarState(0.0, -1.0), IntegratorConfig(t_max=30.0),
                   [EventSpec("k-zero", terminal=True)])
    assert tr.termination == "event:k-zero"
    assert tr.t_end == pytest.approx(tr.events[-1].t)
    assert abs(tr.y[-1, 1]) < 1e-10


def test_h_crossing_in_log_form():
    start = LogState(math.log(1e-6), 1e-6, 1e-6, Direction.TOWARD_INFINITY)
    tr = integrate(2.0, "log", start, IntegratorConfig(t_max=5.0, rtol=1e-11, atol=1e-18),
                   [EventSpec("h-crosses", math.pi / 2, "rising", terminal=True)])
    # h = 2 arctan(r / 2) reaches pi/2 at r = 2
    assert math.exp(tr.t_end) == pytest.approx(2.0, rel=1e-9)


def test_event_kind_not_defined_for_system():
    with pytest.raises(InvalidInputError):
        integrate(1.5, "forward", PlanarState(0.1, 0.1), IntegratorConfig(t_max=1.0), [EventSpec("h-crosses", 1.0)])


def test_chart_switch_continuity_and_infinity():
    tr = integrate(1.5, "reversed", PlanarState(0.0, -5.0), IntegratorConfig(t_max=60.0))
    assert tr.termination == "reached-infinity"
    assert tr.switches
    for sw in tr.switches:
        if sw.chart_before == "planar":
            d = planar_to_poincare(PlanarState(*sw.before))
            assert d.rho == pytest.approx(sw.after[0], abs=1e-9)
            assert math.cos(d.phi - sw.after[1]) == pytest.approx(1.0, abs=1e-12)
            assert math.hypot(*sw.before) == pytest.approx(1e3, rel=1e-9)
    assert np.all(np.diff(tr.t) > 0)
    rho, phi = tr.poincare()
    assert rho[-1] > 1 - 1e-6
    # ends at the elliptic point P3 (w' -> -infinity)
    assert phi[-1] == pytest.approx(1.5 * math.pi, abs=1e-3)


def test_switch_back_to_planar():
    # an orbit that leaves the planar disc and comes back
    tr = integrate(1.5, "reversed", PoincareState(0.9995, infinity_angle(1.5, "reversed", "P1") + 0.05),
                   IntegratorConfig(t_max=40.0))
    charts = [sw.chart_after for sw in tr.switches]
    assert "planar" in charts
    for sw in tr.switches:
        if sw.chart_before == "poincare":
            p = poincare_to_planar(PoincareState(*sw.before))
            assert p.w == pytest.approx(sw.after[0], rel=1e-9)
            assert p.k == pytest.approx(sw.after[1], rel=1e-9)


@pytest.mark.parametrize("system,start", [
    ("reversed", PlanarState(0.2, -1.0)),
    ("forward", PlanarState(-0.5, 0.4)),
])
def test_tolerance_halving(system, start):
    cfg = IntegratorConfig(t_max=20.0, rtol=1e-8, atol=1e-10)
    a = integrate(1.5, system, start, cfg)
    b = integrate(1.5, system, start, cfg.refined(0.5))
    scale = 1 + np.abs(a.y[-1])
    assert np.all(np.abs(a.y[-1] - b.y[-1]) < 10 * cfg.rtol * scale * 100)


def test_dense_output_outside_range():
    tr = integrate(1.5, "reversed", PlanarState(0.2, -1.0), IntegratorConfig(t_max=2.0))
    with pytest.raises(InvalidInputError):
        tr(3.0)


def test_singular_denominator_propagates_with_trajectory():
    with pytest.raises(SingularDenominatorError) as info:
        integrate(1.5, "radial", RadialPoint(1.0, 0.0, 0.0), IntegratorConfig(t_max=2.0))
    assert info.value.trajectory is not None
    assert len(info.value.trajectory) == 1


def test_stiffness_error_has_trajectory():
    cfg = IntegratorConfig(t_max=5.0, rtol=1e-10, atol=1e-300)
    with pytest.raises((StiffnessError, SingularDenominatorError)) as info:
        # radial form from h = 0 with tiny slope: guard hit as the denominator underflows
        integrate(1.5, "radial", RadialPoint(1.0, 1e-8, 1e-8), cfg)
    assert info.value.trajectory is not None


def test_saddle_manifold_p2_ratio():
    p = 1.5
    phi = infinity_angle(p, "reversed", "P2")
    tr = integrate_backward_from_saddle(p, "reversed", PoincareState(1.0, phi), (1.0, 0.0),
                                        config=IntegratorConfig(t_max=30.0))
    assert tr.t_end < 0  # stable direction is traced backwards
    w, k = tr.planar()
    # the departure from the saddle, before the orbit first comes within R = 1e4
    n = int(np.argmax(np.hypot(w, k) < 1e4))
    assert n > 3
    assert np.all(np.abs(w[:n] / k[:n] - (p - 1)) < 1e-3)


def test_saddle_manifold_p1_forward():
    p = 1.5
    phi = infinity_angle(p, "forward", "P1")
    tr = integrate_backward_from_saddle(p, "forward", PoincareState(1.0, phi), (1.0, 0.0),
                                        config=IntegratorConfig(t_max=30.0),
                                        events=[EventSpec("w-crosses", 1e4, terminal=True)])
    e = tr.events[-1]
    assert e.chart == "poincare"
    assert math.tan(e.state[1]) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("bad", [
    PoincareState(1.0, 0.5 * math.pi),  # elliptic point
    PoincareState(1.0, 1.0),  # not critical
    PoincareState(0.5, 1.0),  # not on the boundary
])
def test_saddle_precondition(bad):
    with pytest.raises(InvalidInputError):
        integrate_backward_from_saddle(1.5, "reversed", bad, (1.0, 0.0))


def test_saddle_eigvec_checked():
    phi = infinity_angle(1.5, "reversed", "P2")
    with pytest.raises(InvalidInputError):
        integrate_backward_from_saddle(1.5, "reversed", PoincareState(1.0, phi), (1.0, 1.0))


@given(w=st.floats(-2, 2), k=st.floats(-2, 2))
def test_energy_nonincreasing_where_gsign_positive(w, k):
    p = 1.5
    tr = integrate(p, "reversed", PlanarState(w, k), IntegratorConfig(t_max=8.0))
    if any(c != "planar" for c in tr.charts):
        return
    d = energy_diag(p, PlanarState(tr.y[:, 0], tr.y[:, 1]))
    for i in range(len(tr.t) - 1):
        if d.Gsign[i] > 0 and d.Gsign[i + 1] > 0:
            # a segment between positive samples may still dip; check it densely
            ts = np.linspace(tr.t[i], tr.t[i + 1], 6)
            y = tr(ts)
            seg = energy_diag(p, PlanarState(y[:, 0], y[:, 1]))
            if np.all(seg.Gsign > 0):
                assert d.E[i + 1] <= d.E[i] * (1 + 1e-9) + 1e-15
