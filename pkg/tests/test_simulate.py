import math

import numpy as np
import pytest

from sliphop import (ApexState, ControlInputs, DescendingAtLiftoff,
                     FailedLiftoff, FlightState, GroundFault,
                     InsufficientEnergy, NonPhysical, SlipParams, StanceState,
                     UnreachableTouchdown, integrate_ascent, integrate_descent,
                     integrate_stance, return_map_numeric, stance_dynamics,
                     write_trajectory_csv)


from _oracles import full_stance_oracle


def stance_energy(params, r, r_dot, theta, theta_dot):
    return (0.5 * params.m * (r_dot ** 2 + (r * theta_dot) ** 2)
            + params.m * params.g * r * math.cos(theta)
            + 0.5 * params.k * (r - params.r0) ** 2)


class TestStanceDynamics:
    def test_gravity_loaded_equilibrium(self, params):
        s = StanceState(r=params.r_g, r_dot=0.0, theta=0.0, theta_dot=0.0)
        _, r_ddot, _, th_ddot = stance_dynamics(s, 0.0, params)
        assert r_ddot == pytest.approx(0.0, abs=1e-12)
        assert th_ddot == 0.0

    def test_unloaded_spring(self, params):
        s = StanceState(r=params.r0, r_dot=0.0, theta=0.0, theta_dot=0.0)
        _, r_ddot, _, th_ddot = stance_dynamics(s, 0.0, params)
        assert r_ddot == pytest.approx(-params.g, abs=1e-14)
        assert th_ddot == 0.0

    def test_general_state(self, params):
        # frozen from hand evaluation of the stance ODE right-hand side
        s = StanceState(r=0.19, r_dot=-1.0, theta=0.2, theta_dot=-3.0)
        r_dot, r_ddot, th_dot, th_ddot = stance_dynamics(s, 2.0, params)
        assert r_dot == -1.0
        assert th_dot == -3.0
        assert r_ddot == pytest.approx(10.277365053195615, rel=1e-14)
        assert th_ddot == pytest.approx(-4.532953691703028, rel=1e-14)

    def test_centrifugal_term_present(self, params):
        # constant-momentum reduction: r_ddot must contain r*theta_dot^2
        s0 = StanceState(r=0.19, r_dot=0.0, theta=0.0, theta_dot=0.0)
        s1 = StanceState(r=0.19, r_dot=0.0, theta=0.0, theta_dot=-3.0)
        _, a0, _, _ = stance_dynamics(s0, 0.0, params)
        _, a1, _, _ = stance_dynamics(s1, 0.0, params)
        assert a1 - a0 == pytest.approx(0.19 * 9.0, rel=1e-12)


class TestIntegrateStance:
    def test_symmetric_vertical_bounce(self, undamped_params):
        td = StanceState(r=0.2, r_dot=-1.6, theta=0.0, theta_dot=0.0)
        lo, seg = integrate_stance(td, None, undamped_params)
        assert lo.r_dot == pytest.approx(1.6, abs=1e-6)
        assert lo.theta == 0.0
        assert lo.r == pytest.approx(0.2, abs=1e-9)
        assert seg.t_bottom is not None
        assert 0.0 < seg.t_bottom < seg.t_liftoff

    def test_damping_dissipates(self, params):
        td = StanceState(r=0.2, r_dot=-1.6, theta=0.0, theta_dot=0.0)
        lo, _ = integrate_stance(td, None, params)
        assert abs(lo.r_dot) < abs(td.r_dot)

    def test_energy_conserved_unforced_undamped(self, undamped_params):
        td = StanceState(r=0.2, r_dot=-1.8, theta=0.25, theta_dot=-3.0)
        _, seg = integrate_stance(td, None, undamped_params)
        p = undamped_params
        e0 = stance_energy(p, *seg.samples[0, 1:5])
        for row in seg.samples:
            e = stance_energy(p, *row[1:5])
            assert e == pytest.approx(e0, rel=1e-9)

    def test_energy_nonincreasing_with_damping(self, params):
        td = StanceState(r=0.2, r_dot=-1.8, theta=0.25, theta_dot=-3.0)
        _, seg = integrate_stance(td, None, params)
        energies = [stance_energy(params, *row[1:5]) for row in seg.samples]
        for e_prev, e_next in zip(energies, energies[1:]):
            assert e_next <= e_prev + 1e-9 * abs(e_prev)

    def test_matches_fine_rk4_oracle(self, params):
        # production dt=1e-5 vs an independent RK4 at dt=1e-6
        td = StanceState(r=0.2, r_dot=-1.7, theta=0.42, theta_dot=-3.5)
        inputs = ControlInputs(p_bar=-1.0, k_theta=0.5)
        lo, seg = integrate_stance(td, inputs, params)
        t_oracle, lo_oracle = full_stance_oracle(td, inputs, params, dt=1e-6)
        assert lo.r == pytest.approx(lo_oracle.r, abs=1e-6)
        assert lo.r_dot == pytest.approx(lo_oracle.r_dot, abs=1e-6)
        assert lo.theta == pytest.approx(lo_oracle.theta, abs=1e-6)
        assert lo.theta_dot == pytest.approx(lo_oracle.theta_dot, abs=1e-6)
        assert seg.t_liftoff == pytest.approx(t_oracle, abs=1e-7)

    def test_liftoff_state_consistency(self, params):
        td = StanceState(r=0.2, r_dot=-1.5, theta=0.3, theta_dot=-4.0)
        lo, seg = integrate_stance(td, None, params)
        # leg force vanishes at the localized event
        force = params.k * (lo.r - params.r0) + params.b * lo.r_dot
        assert abs(force) <= 1e-5
        assert lo.r_dot > 0.0
        assert seg.p_liftoff == pytest.approx(
            lo.angular_momentum(params), rel=1e-12)

    def test_applied_torque_respects_saturation(self, params):
        td = StanceState(r=0.2, r_dot=-1.7, theta=0.42, theta_dot=-3.5)
        inputs = ControlInputs(p_bar=-1.3, k_theta=0.5, tau_max=7.0)
        _, seg = integrate_stance(td, inputs, params)
        taus = seg.samples[:, 5]
        assert np.all(np.abs(taus) <= 7.0 + 1e-12)
        assert np.any(np.abs(taus) > 6.9)  # the transient does saturate

    def test_requires_rest_length(self, params):
        with pytest.raises(ValueError):
            integrate_stance(StanceState(r=0.19, r_dot=-1.0, theta=0.0,
                                         theta_dot=0.0), None, params)

    def test_requires_compression(self, params):
        with pytest.raises(NonPhysical):
            integrate_stance(StanceState(r=0.2, r_dot=0.5, theta=0.0,
                                         theta_dot=0.0), None, params)

    def test_failed_liftoff_overdamped(self):
        params = SlipParams(m=3.3, k=4000.0, b=500.0, r0=0.2)
        td = StanceState(r=0.2, r_dot=-1.0, theta=0.0, theta_dot=0.0)
        with pytest.raises(FailedLiftoff):
            integrate_stance(td, None, params)

    def test_ground_fault_on_toppling(self, params):
        # gravity topples the nearly horizontal leg over the toe
        td = StanceState(r=0.2, r_dot=-0.3, theta=1.4, theta_dot=3.0)
        with pytest.raises(GroundFault):
            integrate_stance(td, None, params)


class TestFlightMaps:
    def test_descent_zero_height_drop(self, params):
        apex = ApexState(x_dot=1.0, y=params.r0)
        td = integrate_descent(apex, 0.0, params)
        assert td.y == params.r0
        assert td.y_dot == 0.0
        assert td.x_dot == 1.0

    def test_descent_vertical_drop(self, params):
        # 0.4039 - 0.2 = y_dot^2 / (2*9.81)
        td = integrate_descent(ApexState(x_dot=1.0, y=0.4039), 0.0, params)
        assert td.y_dot == pytest.approx(-2.000129495807709, rel=1e-12)

    def test_descent_general(self, params):
        td = integrate_descent(ApexState(x_dot=1.5, y=0.3), 0.4, params)
        assert td.y == pytest.approx(0.18421219880057704, rel=1e-14)
        assert td.y_dot == pytest.approx(-1.5072347725330244, rel=1e-12)
        assert td.x_dot == 1.5

    def test_descent_unreachable(self, params):
        with pytest.raises(UnreachableTouchdown):
            integrate_descent(ApexState(x_dot=1.0, y=0.15), 0.0, params)

    def test_ascent_identity_at_apex(self, params):
        apex = integrate_ascent(FlightState(x_dot=1.0, y=0.25, y_dot=0.0),
                                params)
        assert apex.x_dot == 1.0
        assert apex.y == 0.25

    def test_ascent_examples(self, params):
        a1 = integrate_ascent(FlightState(x_dot=1.0, y=0.2, y_dot=2.0),
                              params)
        assert a1.y == pytest.approx(0.4038735983690112, rel=1e-12)
        a2 = integrate_ascent(FlightState(x_dot=2.0, y=0.19, y_dot=1.5),
                              params)
        assert a2.y == pytest.approx(0.3046788990825688, rel=1e-12)
        assert a2.x_dot == 2.0

    def test_ascent_rejects_descending(self, params):
        with pytest.raises(DescendingAtLiftoff):
            integrate_ascent(FlightState(x_dot=1.0, y=0.2, y_dot=-0.1),
                             params)

    def test_flight_energy_conserved(self, params):
        apex = ApexState(x_dot=1.5, y=0.3)
        td = integrate_descent(apex, 0.4, params)
        e_apex = 0.5 * params.m * apex.x_dot ** 2 \
            + params.m * params.g * apex.y
        e_td = td.kinetic_energy(params) + params.m * params.g * td.y
        assert e_td == pytest.approx(e_apex, rel=1e-10)


class TestReturnMap:
    def test_trajectory_structure(self, params):
        apex = ApexState(x_dot=1.2, y=0.24)
        inputs = ControlInputs(p_bar=-0.9, k_theta=0.55)
        nxt, traj = return_map_numeric(apex, inputs, params)
        traj.validate()
        names = [e.name for e in traj.events]
        assert names == ["touchdown", "bottom", "liftoff", "apex"]
        phases = {s.phase for s in traj.samples}
        assert phases == {"descent", "stance", "ascent"}
        assert nxt.y > params.r_g

    def test_reset_continuity(self, params):
        apex = ApexState(x_dot=1.2, y=0.24)
        inputs = ControlInputs(p_bar=-0.9, k_theta=0.55)
        _, traj = return_map_numeric(apex, inputs, params)
        td_event = traj.events[0]
        first_stance = next(s for s in traj.samples if s.phase == "stance")
        # stance start equals the event-localized touchdown state
        assert first_stance.r == pytest.approx(td_event.state["r"], abs=1e-12)
        # Cartesian velocity continuous through the touchdown reset
        t_fall = td_event.t
        assert first_stance.y_dot == pytest.approx(-params.g * t_fall,
                                                   abs=1e-9)
        assert first_stance.x_dot == pytest.approx(apex.x_dot, abs=1e-9)
        assert first_stance.y == pytest.approx(
            params.r0 * math.cos(td_event.state["theta"]), abs=1e-9)

    def test_insufficient_energy_tagged(self, params):
        apex = ApexState(x_dot=1.0, y=0.15)
        inputs = ControlInputs(p_bar=-0.5, k_theta=0.05)
        with pytest.raises(InsufficientEnergy) as exc:
            return_map_numeric(apex, inputs, params)
        assert exc.value.phase == "aoa"

    def test_failure_phase_tagging(self, params):
        # momentum target opposing the travel direction swings the leg
        # backward, so the mass is still descending when the leg unloads
        apex = ApexState(x_dot=1.0, y=0.25)
        inputs = ControlInputs(p_bar=2.0, k_theta=0.9)
        with pytest.raises(DescendingAtLiftoff) as exc:
            return_map_numeric(apex, inputs, params)
        assert exc.value.phase == "ascent"

    def test_record_false_skips_trajectory(self, params):
        apex = ApexState(x_dot=1.2, y=0.24)
        inputs = ControlInputs(p_bar=-0.9, k_theta=0.55)
        nxt, traj = return_map_numeric(apex, inputs, params, record=False)
        assert traj is None
        nxt2, _ = return_map_numeric(apex, inputs, params, record=True)
        assert nxt2.x_dot == nxt.x_dot and nxt2.y == nxt.y


class TestCsvExport:
    def test_deterministic_and_well_formed(self, params, tmp_path):
        apex = ApexState(x_dot=1.2, y=0.24)
        inputs = ControlInputs(p_bar=-0.9, k_theta=0.55)
        _, traj = return_map_numeric(apex, inputs, params)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trajectory_csv(traj, p1)
        write_trajectory_csv(traj, p2)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().splitlines()
        assert lines[0] == "t,phase,r,r_dot,theta,theta_dot,x,y,x_dot,y_dot,tau"
        assert len(lines) == len(traj.samples) + 1
        first_flight = lines[1].split(",")
        assert first_flight[1] == "descent"
        assert first_flight[2] == ""   # no leg state in flight
        assert first_flight[10] == ""  # no torque in flight
        stance_row = next(ln for ln in lines if ",stance," in ln).split(",")
        assert all(cell != "" for cell in stance_row)

    def test_sample_rate(self, params):
        apex = ApexState(x_dot=1.2, y=0.24)
        inputs = ControlInputs(p_bar=-0.9, k_theta=0.55)
        _, traj = return_map_numeric(apex, inputs, params)
        stance_t = [s.t for s in traj.samples if s.phase == "stance"]
        dts = np.diff(stance_t)
        assert np.allclose(dts, 1e-3, atol=1e-12)
