"""Runtime invariant suite backing the `sliphop validate` subcommand.

A fast self-check battery: exact identities of the resets and flows,
oracle agreement of the liftoff-time formula, solver contraction, and
simulator conservation/symmetry spot checks. Each check returns
(name, ok, detail).
"""

from __future__ import annotations

import random

from .analytic import (flow_coeffs, liftoff_time, liftoff_time_bisect,
                       nominal_touchdown_r_dot, stance_flow)
from .control import solve_aoa_implicit
from .errors import SlipError
from .fixedpoint import closed_form_fixed_point, energy_speed_constraints
from .model import (ApexState, DEFAULT_PARAMS, SlipParams, StanceState,
                    flight_to_stance, stance_to_flight)
from .simulate import integrate_ascent, integrate_descent, integrate_stance

Check = tuple[str, bool, str]


def _check_reset_roundtrip(params: SlipParams, rng: random.Random) -> Check:
    worst = 0.0
    for _ in range(200):
        s = StanceState(r=params.r0, r_dot=rng.uniform(-3.0, 3.0),
                        theta=rng.uniform(-1.2, 1.2),
                        theta_dot=rng.uniform(-12.0, 12.0))
        back = flight_to_stance(stance_to_flight(s), s.theta, params)
        worst = max(worst, abs(back.r - s.r), abs(back.r_dot - s.r_dot),
                    abs(back.theta - s.theta),
                    abs(back.theta_dot - s.theta_dot))
    return ("reset roundtrip at r = r0", worst <= 1e-12,
            f"max component error {worst:.2e}")


def _check_reset_energy(params: SlipParams, rng: random.Random) -> Check:
    worst = 0.0
    for _ in range(200):
        s = StanceState(r=params.r0, r_dot=rng.uniform(-3.0, 3.0),
                        theta=rng.uniform(-1.2, 1.2),
                        theta_dot=rng.uniform(-12.0, 12.0))
        ke_s = s.kinetic_energy(params)
        ke_f = stance_to_flight(s).kinetic_energy(params)
        if ke_s > 0.0:
            worst = max(worst, abs(ke_f - ke_s) / ke_s)
    return ("kinetic energy preserved across resets", worst <= 1e-12,
            f"max relative error {worst:.2e}")


def _check_flow_residual(params: SlipParams, rng: random.Random) -> Check:
    # r_ddot + 2*zeta*w*r_dot + w^2*r - Gamma = 0 via central differences
    worst = 0.0
    h = 1e-6
    for _ in range(50):
        td = StanceState(r=params.r0, r_dot=rng.uniform(-2.5, -0.3),
                         theta=rng.uniform(-0.4, 0.4), theta_dot=0.0)
        p_bar = rng.uniform(-1.6, -0.3)
        c = flow_coeffs(td, p_bar, params)
        for _ in range(20):
            t = rng.uniform(h, 0.12)
            sm = stance_flow(t - h, c, td, p_bar, params)
            s0 = stance_flow(t, c, td, p_bar, params)
            sp = stance_flow(t + h, c, td, p_bar, params)
            r_ddot = (sp.r - 2.0 * s0.r + sm.r) / (h * h)
            res = r_ddot + 2.0 * c.zeta * c.omega * s0.r_dot \
                + c.omega ** 2 * s0.r - c.gamma
            worst = max(worst, abs(res))
    return ("stance flow solves the linearized radial ODE", worst <= 1e-2,
            f"max |residual| {worst:.2e} (finite-difference floor ~1e-3)")


def _check_liftoff_oracle(params: SlipParams) -> Check:
    worst = 0.0
    for p_bar in (-1.55, -1.0, -0.5):
        for k_theta in (0.3, 0.5, 0.75):
            r_dot = nominal_touchdown_r_dot(p_bar, k_theta, params)
            td = StanceState(r=params.r0, r_dot=r_dot, theta=0.0,
                             theta_dot=0.0)
            c = flow_coeffs(td, p_bar, params)
            t_formula = liftoff_time(c, params)
            t_oracle = liftoff_time_bisect(c, params)
            worst = max(worst, abs(t_formula - t_oracle))
    return ("liftoff-time formula vs bisection oracle", worst <= 5e-4,
            f"max |dt| {worst:.2e} s")


def _check_aoa_contraction(params: SlipParams) -> Check:
    worst_iters = 0
    for p_bar in (-1.5, -1.0, -0.5):
        for k_theta in (0.3, 0.5, 0.75):
            try:
                fp_ = closed_form_fixed_point(p_bar, k_theta, params)
            except SlipError:
                continue
            e_v = params.m * params.g * fp_.apex.y
            sol = solve_aoa_implicit(fp_.apex.x_dot, e_v, k_theta, params)
            if sol.residual > 1e-10:
                return ("implicit touchdown-angle solver converges", False,
                        f"residual {sol.residual:.2e} at ({p_bar}, {k_theta})")
            worst_iters = max(worst_iters, sol.iterations)
    return ("implicit touchdown-angle solver converges", True,
            f"max fixed-point iterations {worst_iters}")


def _check_constraint_roots(params: SlipParams) -> Check:
    worst = 0.0
    for p_bar in (-1.55, -1.0, -0.5):
        for k_theta in (0.3, 0.5, 0.75):
            try:
                res = closed_form_fixed_point(p_bar, k_theta, params)
            except SlipError:
                continue
            e_res, x_res = energy_speed_constraints(res.touchdown, p_bar,
                                                    k_theta, params)
            worst = max(worst, abs(e_res), abs(x_res))
    return ("closed-form fixed points zero the constraints", worst <= 1e-9,
            f"max |residual| {worst:.2e}")


def _check_flight_energy(params: SlipParams) -> Check:
    worst = 0.0
    for x_dot, y, theta in ((1.0, 0.25, 0.3), (2.0, 0.22, 0.5),
                            (0.5, 0.3, 0.1)):
        apex = ApexState(x_dot=x_dot, y=y)
        td = integrate_descent(apex, theta, params)
        e_apex = 0.5 * params.m * x_dot ** 2 + params.m * params.g * y
        e_td = td.kinetic_energy(params) + params.m * params.g * td.y
        worst = max(worst, abs(e_td - e_apex) / e_apex)
    return ("flight conserves total energy", worst <= 1e-10,
            f"max relative drift {worst:.2e}")


def _check_vertical_bounce() -> Check:
    params = SlipParams(m=3.3, k=4000.0, b=0.0, r0=0.2)
    td = StanceState(r=params.r0, r_dot=-1.4, theta=0.0, theta_dot=0.0)
    lo, _ = integrate_stance(td, None, params)
    err = abs(lo.r_dot + td.r_dot)
    return ("undamped vertical bounce is symmetric", err <= 1e-6,
            f"|r_dot_lo + r_dot_td| = {err:.2e}")


def _check_liftoff_force(params: SlipParams) -> Check:
    td = StanceState(r=params.r0, r_dot=-1.5, theta=0.3, theta_dot=-4.0)
    lo, _ = integrate_stance(td, None, params)
    force = params.k * (lo.r - params.r0) + params.b * lo.r_dot
    apex = integrate_ascent(stance_to_flight(lo), params)
    return ("leg force vanishes at the localized liftoff",
            abs(force) <= 1e-5 and apex.y > 0.0,
            f"|force| = {abs(force):.2e} N")


def run_invariant_suite(seed: int = 20260809) -> list[Check]:
    """Run every runtime invariant check; returns (name, ok, detail) rows."""
    params = DEFAULT_PARAMS
    rng = random.Random(seed)
    checks = [
        _check_reset_roundtrip(params, rng),
        _check_reset_energy(params, rng),
        _check_flow_residual(params, rng),
        _check_liftoff_oracle(params),
        _check_aoa_contraction(params),
        _check_constraint_roots(params),
        _check_flight_energy(params),
        _check_vertical_bounce(),
        _check_liftoff_force(params),
    ]
    return checks
