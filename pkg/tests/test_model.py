import math

import pytest
from hypothesis import given, strategies as st

from sliphop import (ApexState, ControlInputs, FlightState, SlipParams,
                     StanceState, TouchdownMismatch, flight_to_stance,
                     stance_to_flight)


class TestSlipParams:
    def test_r_g_value(self, params):
        # 0.2 - 3.3*9.81/4000
        assert params.r_g == pytest.approx(0.19191, abs=1e-4)

    def test_r_g_formula(self, params):
        assert params.r_g == params.r0 - params.m * params.g / params.k

    @pytest.mark.parametrize("field,value", [
        ("m", 0.0), ("m", -1.0), ("k", 0.0), ("b", -0.1), ("r0", 0.0),
        ("g", 0.0),
    ])
    def test_rejects_bad_values(self, field, value):
        kwargs = dict(m=3.3, k=4000.0, b=20.0, r0=0.2, g=9.81)
        kwargs[field] = value
        with pytest.raises(ValueError):
            SlipParams(**kwargs)

    def test_rejects_sagging_spring(self):
        # m*g/k >= r0 leaves no gravity-loaded length
        with pytest.raises(ValueError):
            SlipParams(m=100.0, k=10.0, b=0.0, r0=0.2)


class TestControlInputs:
    def test_k_theta_bounds(self):
        with pytest.raises(ValueError):
            ControlInputs(p_bar=-1.0, k_theta=1.2)
        with pytest.raises(ValueError):
            ControlInputs(p_bar=-1.0, k_theta=-0.1)

    def test_tau_max_positive_or_none(self):
        ControlInputs(p_bar=-1.0, k_theta=0.5, tau_max=None)
        with pytest.raises(ValueError):
            ControlInputs(p_bar=-1.0, k_theta=0.5, tau_max=0.0)


class TestStateValidation:
    def test_stance_requires_positive_r(self):
        with pytest.raises(ValueError):
            StanceState(r=0.0, r_dot=0.0, theta=0.0, theta_dot=0.0)

    def test_flight_requires_positive_y(self):
        with pytest.raises(ValueError):
            FlightState(x_dot=0.0, y=-0.1, y_dot=0.0)

    def test_apex_requires_positive_y(self):
        with pytest.raises(ValueError):
            ApexState(x_dot=1.0, y=0.0)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            StanceState(r=0.2, r_dot=math.nan, theta=0.0, theta_dot=0.0)


class TestStanceToFlight:
    def test_vertical_symmetry(self):
        f = stance_to_flight(
            StanceState(r=0.2, r_dot=2.0, theta=0.0, theta_dot=-5.0))
        assert f.x_dot == pytest.approx(1.0, abs=1e-15)
        assert f.y == pytest.approx(0.2, abs=1e-15)
        assert f.y_dot == pytest.approx(2.0, abs=1e-15)

    def test_rest_case(self):
        f = stance_to_flight(
            StanceState(r=0.2, r_dot=0.0, theta=0.0, theta_dot=0.0))
        assert (f.x_dot, f.y, f.y_dot) == (0.0, 0.2, 0.0)

    def test_general_state(self):
        # frozen from direct evaluation of the reset formula
        f = stance_to_flight(
            StanceState(r=0.19, r_dot=1.5, theta=0.3, theta_dot=-4.0))
        assert f.x_dot == pytest.approx(0.28277542174345127, rel=1e-14)
        assert f.y == pytest.approx(0.18151393293386514, rel=1e-14)
        assert f.y_dot == pytest.approx(1.657600090751027, rel=1e-14)


class TestFlightToStance:
    def test_vertical_case(self, params):
        s = flight_to_stance(FlightState(x_dot=1.0, y=0.2, y_dot=-2.0),
                             0.0, params)
        assert s.r == 0.2
        assert s.r_dot == pytest.approx(-2.0, abs=1e-15)
        assert s.theta == 0.0
        assert s.theta_dot == pytest.approx(-5.0, abs=1e-15)

    def test_general_state(self, params):
        # frozen from direct evaluation of the reset formula
        theta = 0.4
        f = FlightState(x_dot=1.2, y=params.r0 * math.cos(theta), y_dot=-1.8)
        s = flight_to_stance(f, theta, params)
        assert s.r == params.r0
        assert s.theta == theta
        assert s.r_dot == pytest.approx(-2.125211799975574, rel=1e-14)
        assert s.theta_dot == pytest.approx(-2.021600883239455, rel=1e-14)

    def test_height_mismatch_raises(self, params):
        with pytest.raises(TouchdownMismatch):
            flight_to_stance(FlightState(x_dot=1.0, y=0.21, y_dot=-2.0),
                             0.0, params)


stance_at_r0 = st.builds(
    StanceState,
    r=st.just(0.2),
    r_dot=st.floats(-4.0, 4.0),
    theta=st.floats(-1.3, 1.3),
    theta_dot=st.floats(-15.0, 15.0),
)


@given(stance_at_r0)
def test_roundtrip_at_rest_length(s):
    params = SlipParams(m=3.3, k=4000.0, b=20.0, r0=0.2)
    back = flight_to_stance(stance_to_flight(s), s.theta, params)
    assert back.r == pytest.approx(s.r, abs=1e-12)
    assert back.r_dot == pytest.approx(s.r_dot, abs=1e-12)
    assert back.theta == pytest.approx(s.theta, abs=1e-12)
    assert back.theta_dot == pytest.approx(s.theta_dot, abs=1e-12)


@given(stance_at_r0)
def test_resets_preserve_kinetic_energy(s):
    params = SlipParams(m=3.3, k=4000.0, b=20.0, r0=0.2)
    ke_stance = s.kinetic_energy(params)
    ke_flight = stance_to_flight(s).kinetic_energy(params)
    assert ke_flight == pytest.approx(ke_stance, rel=1e-12, abs=1e-15)
