"""Touchdown-angle selection and the in-stance angular-momentum controller.

The touchdown policy aligns most of the touchdown velocity with the leg
axis: the commanded angle is theta_td = k_theta * theta_aoa where
theta_aoa solves the implicit constraint

    theta = Phi(theta) = atan( x_dot / sqrt(2*E_v/m - 2*g*r0*cos(k_theta*theta)) )

with E_v the vertical energy at touchdown. The stance policy is a PID
plus gravity feed-forward on the angular momentum p_theta = m*r^2*theta_dot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InsufficientEnergy, NoConvergence
from .model import ApexState, ControlInputs, SlipParams, StanceState
from .numerics import quadratic_roots

AOA_TOL = 1e-10
AOA_MAX_ITER = 200
# Stay off theta = pi/2: Phi is undefined there and a horizontal leg is
# not a gait.
AOA_THETA_MAX = 0.99 * math.pi / 2.0


@dataclass(frozen=True)
class AoaSolution:
    """Solved angle of attack and the commanded touchdown angle.

    residual is |Phi(theta_aoa) - theta_aoa|; iterations counts
    fixed-point sweeps (0 when the solver fell through to bisection).
    """

    theta_aoa: float
    theta_td: float
    method: str  # "implicit" | "quadratic-approx"
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class PidState:
    """Controller memory: error accumulator and previous momentum sample."""

    integral: float = 0.0
    p_prev: float = 0.0

    @staticmethod
    def at_touchdown(td: StanceState, params: SlipParams) -> "PidState":
        """Fresh per-stance state: zero accumulator, p_prev seeded so the
        first backward difference is zero."""
        return PidState(integral=0.0, p_prev=td.angular_momentum(params))


def vertical_energy(apex: ApexState, params: SlipParams) -> float:
    """Vertical energy E_v = 0.5*m*y_dot^2 + m*g*y evaluated at apex
    (y_dot = 0), conserved through flight."""
    return params.m * params.g * apex.y


def _phi(theta: float, x_dot: float, e_v: float, k_theta: float,
         params: SlipParams) -> float:
    rad = 2.0 * e_v / params.m \
        - 2.0 * params.g * params.r0 * math.cos(k_theta * theta)
    if rad <= 0.0:
        raise InsufficientEnergy(
            f"touchdown radicand {rad:.3e} <= 0 at theta = {theta:.4f}")
    return math.atan(x_dot / math.sqrt(rad))


def solve_aoa_implicit(x_dot: float, e_v: float, k_theta: float,
                       params: SlipParams, tol: float = AOA_TOL,
                       max_iter: int = AOA_MAX_ITER) -> AoaSolution:
    """Solve theta = Phi(theta) for the angle of attack.

    Fixed-point iteration from the edge of Phi's domain, with a bisection
    backstop on Phi(theta) - theta over the admissible interval. The
    solution carries the sign of x_dot (Phi is odd in x_dot, even in
    theta). Raises InsufficientEnergy when no admissible angle exists in
    (0, 0.99*pi/2], NoConvergence if the backstop cannot bracket a root.
    """
    if x_dot == 0.0:
        return AoaSolution(0.0, 0.0, "implicit", 0.0, 0)
    sign = 1.0 if x_dot > 0.0 else -1.0
    ax = abs(x_dot)

    # Phi's domain: cos(k_theta*theta) < e_v / (m*g*r0)
    q = e_v / (params.m * params.g * params.r0)
    if q >= 1.0:
        lo = 0.0
    else:
        if k_theta == 0.0:
            raise InsufficientEnergy(
                f"vertical energy ratio {q:.4f} < 1 with k_theta = 0")
        lo = math.acos(q) / k_theta
        if lo >= AOA_THETA_MAX:
            raise InsufficientEnergy(
                f"domain edge {lo:.4f} rad beyond {AOA_THETA_MAX:.4f}")
        lo = math.nextafter(lo, math.inf)

    theta = lo
    for it in range(1, max_iter + 1):
        try:
            nxt = _phi(theta, ax, e_v, k_theta, params)
        except InsufficientEnergy:
            break  # iterate left the domain; bisection handles it
        if abs(nxt - theta) <= tol:
            return AoaSolution(sign * nxt, k_theta * sign * nxt,
                               "implicit", abs(nxt - theta), it)
        theta = nxt

    # bisection backstop on g(theta) = Phi(theta) - theta
    def gap(t: float) -> float:
        try:
            return _phi(t, ax, e_v, k_theta, params) - t
        except InsufficientEnergy:
            # Phi -> pi/2 at the domain edge
            return math.pi / 2.0 - t

    hi = AOA_THETA_MAX
    if gap(lo) < 0.0 or gap(hi) > 0.0:
        raise NoConvergence(
            f"no bracket for Phi(theta) = theta on ({lo:.4f}, {hi:.4f})")
    a, b = lo, hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if gap(mid) > 0.0:
            a = mid
        else:
            b = mid
    theta = 0.5 * (a + b)
    res = abs(_phi(theta, ax, e_v, k_theta, params) - theta)
    if res > tol:
        raise NoConvergence(f"bisection residual {res:.3e} > {tol:.1e}")
    return AoaSolution(sign * theta, k_theta * sign * theta,
                       "implicit", res, 0)


def solve_aoa_approx(x_dot: float, e_v: float, k_theta: float,
                     params: SlipParams) -> AoaSolution:
    """Closed-form quadratic approximation of the angle of attack.

    Expanding atan(z) ~ pi/4*z and cos(t) ~ 1 - t^2/2 turns the
    constraint into a quadratic in theta^2 with coefficients

        a = 16*g*r0,  b = 16*(2*E_v/m - 2*g*r0),  c = -x_dot^2*pi^2,

    whose positive root is mapped once through Phi. Sign handling is
    automatic (Phi carries the sign of x_dot). Raises NegativeDiscriminant
    if the quadratic breaks, InsufficientEnergy if the mapped angle lies
    outside Phi's domain.
    """
    if x_dot == 0.0:
        return AoaSolution(0.0, 0.0, "quadratic-approx", 0.0)
    a = 16.0 * params.g * params.r0
    b = 16.0 * (2.0 * e_v / params.m - 2.0 * params.g * params.r0)
    c = -x_dot * x_dot * math.pi * math.pi
    q_plus, _ = quadratic_roots(a, b, c)
    if q_plus < 0.0:
        raise InsufficientEnergy(
            f"quadratic approximation gave theta^2 = {q_plus:.3e} < 0")
    theta0 = math.sqrt(q_plus)
    theta = _phi(theta0, x_dot, e_v, k_theta, params)
    res = abs(_phi(theta, x_dot, e_v, k_theta, params) - theta)
    return AoaSolution(theta, k_theta * theta, "quadratic-approx", res)


def hip_torque(target_p: float, state: StanceState, pid: PidState,
               gains: ControlInputs, params: SlipParams,
               dt: float) -> tuple[float, PidState]:
    """One discrete step of the stance torque law.

        tau = kp*(p_bar - p) + ki*sum(p_bar - p) - kd*p_dot - m*g*r*sin(theta)

    p_dot is a backward difference of p_theta over the control period;
    the accumulator is a raw error sum (per-sample, not scaled by dt) and
    is frozen while the output saturates (anti-windup). Returns the
    torque, clamped to +-tau_max when a limit is set, and the updated
    controller state.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    p = state.angular_momentum(params)
    err = target_p - p
    p_dot = (p - pid.p_prev) / dt
    feedforward = -params.m * params.g * state.r * math.sin(state.theta)
    integral = pid.integral + err
    tau = gains.kp * err + gains.ki * integral - gains.kd * p_dot + feedforward
    if gains.tau_max is not None and abs(tau) > gains.tau_max:
        tau = math.copysign(gains.tau_max, tau)
        integral = pid.integral  # freeze while saturated
    return tau, PidState(integral=integral, p_prev=p)
