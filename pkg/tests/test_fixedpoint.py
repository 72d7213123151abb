import math

import numpy as np
import pytest

from sliphop import (ApexState, ControlInputs, GaitFailure, IllConditioned,
                     InsufficientEnergy, NoConvergence, closed_form_fixed_point,
                     energy_speed_constraints, numeric_fixed_point,
                     return_map_analytic, simulator_return_map, stability,
                     theta_offset)
from sliphop.fixedpoint import (ANALYTIC_NUMERIC, CLOSED_FORM,
                                SIMULATOR_NUMERIC)

from _oracles import damped_map_iteration


class TestClosedForm:
    def test_unit_gain_zeroes_touchdown_rate(self, params):
        fp = closed_form_fixed_point(-1.0, 1.0, params)
        assert fp.touchdown.theta_offset == 0.0
        assert fp.touchdown.theta_dot_td == 0.0

    def test_mirror_symmetry(self, params):
        fwd = closed_form_fixed_point(-1.0, 0.5, params)
        bwd = closed_form_fixed_point(+1.0, 0.5, params)
        assert bwd.apex.x_dot == pytest.approx(-fwd.apex.x_dot, rel=1e-12)
        assert bwd.apex.y == pytest.approx(fwd.apex.y, rel=1e-12)
        assert bwd.touchdown.theta_td == pytest.approx(
            -fwd.touchdown.theta_td, rel=1e-12)

    def test_offset_identity(self, params):
        # theta_dot_td = -r_dot_td/r0 * tan(theta_offset), by construction
        for pb, kt in ((-1.0, 0.5), (-0.6, 0.3), (-1.5, 0.75)):
            td = closed_form_fixed_point(pb, kt, params).touchdown
            assert td.theta_dot_td + td.r_dot_td / params.r0 * math.tan(
                td.theta_offset) == pytest.approx(0.0, abs=1e-12)
            assert td.theta_offset == theta_offset(pb, kt)
            assert td.r_dot_td < 0.0

    def test_against_damped_iteration_oracle(self, params):
        # independent oracle: relaxed fixed-point iteration of the
        # analytic return map; the closed form carries the additional
        # fixed-point assumptions, so agreement is at model-error scale
        for pb, kt in ((-1.0, 0.5), (-0.7, 0.6)):
            cf = closed_form_fixed_point(pb, kt, params)
            oracle = damped_map_iteration(return_map_analytic, cf.apex,
                                          ControlInputs(pb, kt), params)
            assert oracle is not None
            assert cf.apex.x_dot == pytest.approx(oracle.x_dot, rel=0.25)
            assert cf.apex.y == pytest.approx(oracle.y, rel=0.25)

    def test_reference_point(self, params):
        fp = closed_form_fixed_point(-1.0, 0.5, params)
        # frozen output of the quadratic solution at Table-scale params
        assert fp.apex.x_dot == pytest.approx(1.777311186642619, rel=1e-9)
        assert fp.apex.y == pytest.approx(0.2248414390810544, rel=1e-9)
        assert fp.provenance == CLOSED_FORM
        assert fp.stable and fp.spectral_radius < 1.0

    def test_rejects_bad_gain(self, params):
        with pytest.raises(ValueError):
            closed_form_fixed_point(-1.0, 1.5, params)


class TestConstraints:
    def test_roots_zero_both_constraints(self, params):
        for pb in (-1.55, -1.0, -0.5):
            for kt in (0.3, 0.5, 0.75):
                td = closed_form_fixed_point(pb, kt, params).touchdown
                e_res, x_res = energy_speed_constraints(td, pb, kt, params)
                assert abs(e_res) <= 1e-9
                assert abs(x_res) <= 1e-9

    def test_theta_perturbation_moves_speed_residual(self, params):
        from dataclasses import replace
        td = closed_form_fixed_point(-1.0, 0.5, params).touchdown
        _, up = energy_speed_constraints(
            replace(td, theta_td=td.theta_td + 0.01), -1.0, 0.5, params)
        _, dn = energy_speed_constraints(
            replace(td, theta_td=td.theta_td - 0.01), -1.0, 0.5, params)
        assert up != 0.0 and dn != 0.0
        assert (up > 0.0) != (dn > 0.0)  # simple root crossing

    def test_r_dot_perturbation_moves_energy_residual(self, params):
        from dataclasses import replace
        td = closed_form_fixed_point(-1.0, 0.5, params).touchdown
        e_up, _ = energy_speed_constraints(
            replace(td, r_dot_td=td.r_dot_td + 0.01), -1.0, 0.5, params)
        e_dn, _ = energy_speed_constraints(
            replace(td, r_dot_td=td.r_dot_td - 0.01), -1.0, 0.5, params)
        assert e_up != 0.0 and e_dn != 0.0
        assert (e_up > 0.0) != (e_dn > 0.0)


def _contraction_map(apex, inputs, params):
    return ApexState(x_dot=0.5 * apex.x_dot, y=0.5 * apex.y + 0.1)


def _identity_map(apex, inputs, params):
    return ApexState(apex.x_dot, apex.y)


def _constant_map(apex, inputs, params):
    return ApexState(1.0, 0.25)


class TestStability:
    def test_contraction_toy_map(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        jac, rho, stable = stability(_contraction_map,
                                     ApexState(0.0001, 0.2), inputs, params)
        assert rho == pytest.approx(0.5, abs=1e-6)
        assert stable

    def test_identity_map_not_stable(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        _, rho, stable = stability(_identity_map, ApexState(1.0, 0.25),
                                   inputs, params)
        assert rho == pytest.approx(1.0, abs=1e-9)
        assert not stable

    def test_constant_map_ill_conditioned(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        with pytest.raises(IllConditioned):
            stability(_constant_map, ApexState(1.0, 0.25), inputs, params)


class TestNumericFixedPoint:
    def test_toy_map_exact(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        res = numeric_fixed_point(_contraction_map, ApexState(1.0, 0.3),
                                  inputs, params, tol=1e-12)
        assert res.apex.x_dot == pytest.approx(0.0, abs=1e-11)
        assert res.apex.y == pytest.approx(0.2, abs=1e-11)
        assert res.stable and res.spectral_radius == pytest.approx(0.5,
                                                                   abs=1e-6)

    def test_idempotent_at_fixed_point(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        res = numeric_fixed_point(_contraction_map, ApexState(0.0, 0.2),
                                  inputs, params, tol=1e-9)
        assert res.newton_steps == 0
        assert res.residual <= 1e-9

    def test_analytic_map_fixed_point(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        seed = closed_form_fixed_point(-1.0, 0.5, params).apex
        res = numeric_fixed_point(return_map_analytic, seed, inputs, params,
                                  tol=1e-9, provenance=ANALYTIC_NUMERIC)
        nxt = return_map_analytic(res.apex, inputs, params)
        assert abs(nxt.x_dot - res.apex.x_dot) <= 1e-9
        assert abs(nxt.y - res.apex.y) <= 1e-9
        assert res.stable
        # matches the independent relaxed-iteration oracle tightly
        oracle = damped_map_iteration(return_map_analytic, seed, inputs,
                                      params, tol=1e-11)
        assert res.apex.x_dot == pytest.approx(oracle.x_dot, abs=1e-7)
        assert res.apex.y == pytest.approx(oracle.y, abs=1e-7)

    def test_simulator_map_fixed_point(self, params):
        inputs = ControlInputs(-1.0, 0.5)
        seed = closed_form_fixed_point(-1.0, 0.5, params).apex
        res = numeric_fixed_point(simulator_return_map, seed, inputs, params,
                                  tol=1e-6, prewarm=3,
                                  provenance=SIMULATOR_NUMERIC)
        assert res.provenance == SIMULATOR_NUMERIC
        assert res.residual <= 1e-6
        nxt = simulator_return_map(res.apex, inputs, params)
        assert abs(nxt.x_dot - res.apex.x_dot) <= 1e-6
        assert abs(nxt.y - res.apex.y) <= 1e-6
        assert res.stable and res.spectral_radius < 1.0

    def test_gait_failure_wraps_map_errors(self, params):
        def broken_map(apex, inputs, params):
            raise InsufficientEnergy("boom", phase="aoa")

        inputs = ControlInputs(-1.0, 0.5)
        with pytest.raises(GaitFailure) as exc:
            numeric_fixed_point(broken_map, ApexState(1.0, 0.25), inputs,
                                params)
        assert exc.value.phase == "aoa"

    def test_no_convergence(self, params):
        # an expanding map with no fixed point near the seed
        def drift_map(apex, inputs, params):
            return ApexState(apex.x_dot + 1.0, apex.y)

        inputs = ControlInputs(-1.0, 0.5)
        with pytest.raises((NoConvergence, GaitFailure, IllConditioned)):
            numeric_fixed_point(drift_map, ApexState(1.0, 0.25), inputs,
                                params, max_steps=5)
