import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phmap.exceptions import BranchBoundaryError, InvalidInputError, OutOfChartError, TurningPointError
from phmap.model import Direction, LogState, PlanarState, PoincareState, RadialPoint
from phmap.transforms import (
    branch_of,
    log_to_planar,
    log_to_radial,
    normalize_angle,
    planar_to_log,
    planar_to_poincare,
    planar_to_slope_ratio,
    poincare_to_planar,
    radial_to_log,
)

directions = st.sampled_from(list(Direction))


@given(r=st.floats(1e-6, 1e6), h=st.floats(-10, 10), dh=st.floats(-100, 100), d=directions)
def test_radial_log_roundtrip(r, h, dh, d):
    back = log_to_radial(radial_to_log(RadialPoint(r, h, dh), d))
    assert back.r == pytest.approx(r, rel=1e-12)
    assert back.h == h
    assert back.dh == pytest.approx(dh, rel=1e-12, abs=1e-300)


def test_direction_conventions():
    s = radial_to_log(RadialPoint(math.e, 1.0, 2.0), Direction.TOWARD_ORIGIN)
    assert s.t == pytest.approx(-1.0)
    assert s.df == pytest.approx(-2 * math.e)
    s = radial_to_log(RadialPoint(math.e, 1.0, 2.0), Direction.TOWARD_INFINITY)
    assert s.t == pytest.approx(1.0)
    assert s.df == pytest.approx(2 * math.e)


@given(f=st.floats(0.01, math.pi - 0.01), df=st.floats(-10, 10), m=st.integers(-3, 3))
def test_log_planar_roundtrip(f, df, m):
    s = LogState(0.0, f + m * math.pi, df, Direction.TOWARD_ORIGIN)
    w, k = log_to_planar(s, branch=m)
    back = planar_to_log(PlanarState(w, k), branch=m)
    assert back.f == pytest.approx(s.f, abs=1e-12)
    assert back.df == pytest.approx(df, rel=1e-9, abs=1e-12)


def test_branch_boundary():
    with pytest.raises(BranchBoundaryError):
        log_to_planar(LogState(0.0, math.pi, 1.0, Direction.TOWARD_ORIGIN), branch=0)
    with pytest.raises(BranchBoundaryError):
        log_to_planar(LogState(0.0, 0.5, 1.0, Direction.TOWARD_ORIGIN), branch=1)
    assert branch_of(-0.1) == -1
    assert branch_of(3.5) == 1


@given(w=st.floats(-1e4, 1e4), k=st.floats(-1e4, 1e4))
def test_planar_poincare_roundtrip(w, k):
    d = planar_to_poincare(PlanarState(w, k))
    assert 0 <= d.rho < 1
    assert 0 <= d.phi < 2 * math.pi
    back = poincare_to_planar(d)
    assert back.w == pytest.approx(w, rel=1e-9, abs=1e-9)
    assert back.k == pytest.approx(k, rel=1e-9, abs=1e-9)


def test_chart_errors():
    assert planar_to_poincare(PlanarState(0.0, 0.0)) == PoincareState(0.0, 0.0)
    with pytest.raises(OutOfChartError):
        poincare_to_planar(PoincareState(1.0, 0.0))
    with pytest.raises(InvalidInputError):
        poincare_to_planar(PoincareState(-0.1, 0.0))
    with pytest.raises(TurningPointError):
        planar_to_slope_ratio(PlanarState(1.0, 0.0))
    with pytest.raises(InvalidInputError):
        planar_to_poincare(PlanarState(float("inf"), 0.0))
    assert planar_to_slope_ratio(PlanarState(2.0, 4.0)).g == 0.5


@given(phi=st.floats(-100, 100))
def test_normalize_angle(phi):
    a = normalize_angle(phi)
    assert 0 <= a < 2 * math.pi
    assert math.cos(a) == pytest.approx(math.cos(phi), abs=1e-9)
