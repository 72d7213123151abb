"""Closed-form approximate stance and return maps.

Linearizing the stance dynamics about the gravity-loaded leg length r_g
(constant angular momentum, radial gravity, Taylor expansion of the
1/r^3 and 1/r^2 terms) reduces stance to a damped harmonic oscillator
in r driving a first-order integrator in theta:

    r_ddot + 2*zeta*omega*r_dot + omega^2*r = Gamma
    theta_dot = p_bar/(m*r_g^2) * (3 - 2*r/r_g)

whose flow is available in closed form. Liftoff time comes from the
zero of the leg force on that flow, assuming compression and
decompression take roughly equal time. Freezing the liftoff phase at a
nominal condition collapses the stance map to an affine map in
(r_dot_td, theta_td) with constants C1..C4, which is what the
closed-form fixed points are built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .control import solve_aoa_approx, vertical_energy
from .errors import (NoLiftoffRoot, NonPhysical, NonpositiveTime, Overdamped,
                     SlipError)
from .model import (ApexState, ControlInputs, SlipParams, StanceState,
                    flight_to_stance, stance_to_flight)
from .simulate import integrate_ascent, integrate_descent


@dataclass(frozen=True)
class StanceFlowCoeffs:
    """Constants of the closed-form stance flow.

    omega    radial natural frequency sqrt(k/m + 3*p_bar^2/(m^2*r_g^4))
    zeta     damping ratio b/(2*m*omega), must be < 1
    omega_d  damped frequency omega*sqrt(1 - zeta^2)
    gamma    constant radial forcing; equilibrium length is gamma/omega^2
    a, b     cosine/sine amplitudes set by the touchdown state
    m_amp    oscillation amplitude sqrt(a^2 + b^2)
    psi      radial phase atan2(-b, a)
    psi2     velocity phase lag atan2(-sqrt(1-zeta^2), zeta)
    x_rate   secular leg-angle drift rate
    y_amp    leg-angle oscillation amplitude
    m2_force leg-force amplitude sqrt(k^2 + b^2*omega^2 - 2*b*k*omega*cos(psi2))
    """

    omega: float
    zeta: float
    omega_d: float
    gamma: float
    a: float
    b: float
    m_amp: float
    psi: float
    psi2: float
    x_rate: float
    y_amp: float
    m2_force: float


def flow_coeffs(td: StanceState, p_bar: float,
                params: SlipParams) -> StanceFlowCoeffs:
    """Stance-flow constants for a touchdown state and momentum target.

    Raises Overdamped when the damping ratio reaches 1.
    """
    m, k, bb, r_g = params.m, params.k, params.b, params.r_g
    omega = math.sqrt(k / m + 3.0 * p_bar * p_bar / (m * m * r_g ** 4))
    gamma = p_bar * p_bar / (m * m * r_g ** 3) + omega * omega * r_g
    zeta = bb / (2.0 * m * omega)
    if zeta >= 1.0:
        raise Overdamped(f"zeta = {zeta:.4f} >= 1")
    omega_d = omega * math.sqrt(1.0 - zeta * zeta)
    a = td.r - gamma / (omega * omega)
    b = (td.r_dot + zeta * omega * a) / omega_d
    m_amp = math.hypot(a, b)
    psi = math.atan2(-b, a)
    psi2 = math.atan2(-math.sqrt(1.0 - zeta * zeta), zeta)
    x_rate = p_bar / (m * r_g * r_g) \
        * (3.0 - 2.0 * gamma / (r_g * omega * omega))
    y_amp = 2.0 * p_bar * m_amp / (m * r_g ** 3 * omega)
    m2_force = math.sqrt(k * k + bb * bb * omega * omega
                         - 2.0 * bb * k * omega * math.cos(psi2))
    return StanceFlowCoeffs(omega=omega, zeta=zeta, omega_d=omega_d,
                            gamma=gamma, a=a, b=b, m_amp=m_amp, psi=psi,
                            psi2=psi2, x_rate=x_rate, y_amp=y_amp,
                            m2_force=m2_force)


def stance_flow(t: float, coeffs: StanceFlowCoeffs, td: StanceState,
                p_bar: float, params: SlipParams) -> StanceState:
    """Closed-form stance state at time t after touchdown.

        r(t)     = M e^{-zw t} cos(wd t + psi) + Gamma/w^2
        r_dot(t) = -M w e^{-zw t} cos(wd t + psi + psi2)
        theta(t) = theta_td + X t
                   + Y (e^{-zw t} cos(wd t + psi - psi2) - cos(psi - psi2))

    theta_dot comes from the momentum expansion
    p_bar/(m r_g^2) (3 - 2(M/r_g) e^{-zw t} cos(wd t + psi) - 2 Gamma/(r_g w^2)).
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    w, zeta, wd = coeffs.omega, coeffs.zeta, coeffs.omega_d
    m_amp, psi, psi2 = coeffs.m_amp, coeffs.psi, coeffs.psi2
    g_over_w2 = coeffs.gamma / (w * w)
    e = math.exp(-zeta * w * t)
    r = m_amp * e * math.cos(wd * t + psi) + g_over_w2
    r_dot = -m_amp * w * e * math.cos(wd * t + psi + psi2)
    theta = td.theta + coeffs.x_rate * t + coeffs.y_amp * (
        e * math.cos(wd * t + psi - psi2) - math.cos(psi - psi2))
    r_g = params.r_g
    theta_dot = p_bar / (params.m * r_g * r_g) * (
        3.0 - 2.0 * (m_amp / r_g) * e * math.cos(wd * t + psi)
        - 2.0 * coeffs.gamma / (r_g * w * w))
    return StanceState(r=r, r_dot=r_dot, theta=theta, theta_dot=theta_dot)


def bottom_time(coeffs: StanceFlowCoeffs) -> float:
    """First zero of the radial velocity: t_b = (pi/2 - psi - psi2)/omega_d."""
    return (0.5 * math.pi - coeffs.psi - coeffs.psi2) / coeffs.omega_d


def default_psi4(coeffs: StanceFlowCoeffs, params: SlipParams) -> float:
    """Phase of the leg-force combination k*cos(x) - b*omega*cos(x + psi2).

    The liftoff-time formula needs the phase psi4 of the combined
    leg-force oscillation; writing k - b*omega*e^{i*psi2} = M2*e^{i*psi4}
    gives psi4 = atan2(b*omega*sqrt(1-zeta^2), k - b*omega*zeta), which
    reduces to 0 in the undamped limit where the formula is exact.
    """
    bw = params.b * coeffs.omega
    return math.atan2(bw * math.sqrt(1.0 - coeffs.zeta ** 2),
                      params.k - bw * coeffs.zeta)


def liftoff_time(coeffs: StanceFlowCoeffs, params: SlipParams,
                 psi4: float | None = None) -> float:
    """Approximate liftoff time: zero of the leg force on the closed flow.

    With t_b the bottom time and the decompression assumed to mirror the
    compression (e^{-zw t_lo} ~ e^{-2 zw t_b}),

        t_lo = (2 pi - arccos(k (r0 w^2 - Gamma) / (M2 M w^2 e^{-2 zw t_b}))
                - psi - psi4) / omega_d.

    psi4 defaults to the derived force phase (see default_psi4); it can
    be overridden, and should always be validated against
    liftoff_time_bisect. Raises NoLiftoffRoot when the arccos argument
    leaves [-1, 1], NonpositiveTime when the branch selection does not
    yield t_lo > t_b > 0.
    """
    w, zeta, wd = coeffs.omega, coeffs.zeta, coeffs.omega_d
    t_b = bottom_time(coeffs)
    if psi4 is None:
        psi4 = default_psi4(coeffs, params)
    decay = math.exp(-2.0 * zeta * w * t_b)
    arg = params.k * (params.r0 * w * w - coeffs.gamma) \
        / (coeffs.m2_force * coeffs.m_amp * w * w * decay)
    if not -1.0 <= arg <= 1.0:
        raise NoLiftoffRoot(f"arccos argument {arg:.4f} outside [-1, 1]")
    t_lo = (2.0 * math.pi - math.acos(arg) - coeffs.psi - psi4) / wd
    if not t_lo > t_b > 0.0:
        raise NonpositiveTime(
            f"branch selection gave t_lo = {t_lo:.6f}, t_b = {t_b:.6f}")
    return t_lo


def liftoff_time_bisect(coeffs: StanceFlowCoeffs, params: SlipParams,
                        scan_dt: float = 1e-4, tol: float = 1e-12) -> float:
    """Oracle for liftoff_time: bisect k*(r - r0) + b*r_dot = 0 on the flow.

    Scans forward from the bottom time for the first upward force
    crossing. Independent of the arccos branch arithmetic; used to
    validate psi4 and the n1/n2 branch choices.
    """
    w, zeta, wd = coeffs.omega, coeffs.zeta, coeffs.omega_d
    g_over_w2 = coeffs.gamma / (w * w)

    def force(t: float) -> float:
        e = math.exp(-zeta * w * t)
        r = coeffs.m_amp * e * math.cos(wd * t + coeffs.psi) + g_over_w2
        r_dot = -coeffs.m_amp * w * e * math.cos(wd * t + coeffs.psi
                                                 + coeffs.psi2)
        return params.k * (r - params.r0) + params.b * r_dot

    t = bottom_time(coeffs)
    f_prev = force(t)
    t_stop = t + 4.0 * math.pi / wd
    while t < t_stop:
        t_next = t + scan_dt
        f_next = force(t_next)
        if f_prev < 0.0 <= f_next:
            lo, hi = t, t_next
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if force(mid) < 0.0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        t, f_prev = t_next, f_next
    raise NoLiftoffRoot("no upward force crossing within two periods")


def stance_map_analytic(td: StanceState, p_bar: float,
                        params: SlipParams) -> StanceState:
    """Closed-form stance map: evaluate the flow at the liftoff time.

    The liftoff angular rate is reported from the constant-momentum
    assumption, theta_dot_lo = p_bar/(m*r_lo^2). Touchdown must be at
    rest length and compressing.
    """
    if abs(td.r - params.r0) > 1e-9:
        raise ValueError(f"touchdown r = {td.r} must equal r0 = {params.r0}")
    if td.r_dot >= 0.0:
        raise NonPhysical(f"touchdown r_dot = {td.r_dot:.4f} >= 0")
    coeffs = flow_coeffs(td, p_bar, params)
    t_lo = liftoff_time(coeffs, params)
    lo = stance_flow(t_lo, coeffs, td, p_bar, params)
    return StanceState(r=lo.r, r_dot=lo.r_dot, theta=lo.theta,
                       theta_dot=p_bar / (params.m * lo.r * lo.r))


# --- simplified affine stance map (frozen liftoff phase) ----------------------

def theta_offset(p_bar: float, k_theta: float) -> float:
    """Leg-versus-velocity angle at touchdown, (p_bar/0.7)*(pi/4)*(1-k_theta).

    Built from the nominal angle of attack p_bar/0.7 * pi/4; k_theta < 1
    leaves this much of the touchdown velocity in the angular channel.
    """
    return (p_bar / 0.7) * (0.25 * math.pi) * (1.0 - k_theta)


def nominal_touchdown_r_dot(p_bar: float, k_theta: float,
                            params: SlipParams) -> float:
    """Nominal radial touchdown velocity for freezing the liftoff phase.

    Chains the touchdown-angle geometry: nominal speed from the
    momentum line x_dot = -p_bar/(m*r0), touchdown speed magnitude
    x_dot/sin(theta_aoa_nom) with theta_aoa_nom = |p_bar|/0.7 * pi/4,
    then r_dot = -|v|*cos(theta_offset). Continuous at p_bar = 0.
    """
    x_dot_nom = abs(p_bar) / (params.m * params.r0)
    theta_nom = abs(p_bar) / 0.7 * 0.25 * math.pi
    if theta_nom < 1e-12:
        v = (4.0 * 0.7 / math.pi) / (params.m * params.r0)
    else:
        v = x_dot_nom / max(math.sin(theta_nom), 1e-9)
    return -abs(v) * math.cos(theta_offset(p_bar, k_theta))


@dataclass(frozen=True)
class StanceMapConstants:
    """Affine stance-map constants and the frozen nominal liftoff time.

    z_lo = [r0, c1*r_dot_td + c2, theta_td + c3*r_dot_td + c4, p_bar/(m*r0^2)]
    """

    c1: float
    c2: float
    c3: float
    c4: float
    t_lo: float


def simplified_map_constants(p_bar: float, k_theta: float,
                             params: SlipParams) -> StanceMapConstants:
    """C1..C4 for the affine stance map, frozen at the nominal condition.

    The flow amplitude A is evaluated at r_td = r0 (the touchdown reset
    always returns the rest length), and the liftoff time at the nominal
    touchdown induced by (p_bar, k_theta), so the constants depend only
    on the gait knobs and the physical parameters.
    """
    r_dot_nom = nominal_touchdown_r_dot(p_bar, k_theta, params)
    td_nom = StanceState(r=params.r0, r_dot=r_dot_nom, theta=0.0,
                         theta_dot=0.0)
    coeffs = flow_coeffs(td_nom, p_bar, params)
    t_lo = liftoff_time(coeffs, params)

    w, zeta, wd = coeffs.omega, coeffs.zeta, coeffs.omega_d
    m, r_g = params.m, params.r_g
    a = params.r0 - coeffs.gamma / (w * w)
    s1 = math.sqrt(1.0 - zeta * zeta)
    e = math.exp(-zeta * w * t_lo)
    cwt = math.cos(wd * t_lo)
    swt = math.sin(wd * t_lo)

    c1 = w * e * (s1 * cwt - zeta * swt) / wd
    c2 = -a * w * w * e * swt / wd
    c3 = (2.0 * p_bar / (m * r_g ** 3 * w * wd)) \
        * (e * (s1 * cwt + zeta * swt) - s1)
    c4 = coeffs.x_rate * t_lo + (2.0 * p_bar * a / (m * r_g ** 3 * w)) * (
        e * (2.0 * zeta * cwt + (2.0 * zeta * zeta - 1.0) / s1 * swt)
        - 2.0 * zeta)
    return StanceMapConstants(c1=c1, c2=c2, c3=c3, c4=c4, t_lo=t_lo)


def simplified_stance_map(td: StanceState, p_bar: float, k_theta: float,
                          params: SlipParams) -> StanceState:
    """Affine stance map in (r_dot_td, theta_td) with frozen constants."""
    c = simplified_map_constants(p_bar, k_theta, params)
    r0 = params.r0
    return StanceState(
        r=r0,
        r_dot=c.c1 * td.r_dot + c.c2,
        theta=td.theta + c.c3 * td.r_dot + c.c4,
        theta_dot=p_bar / (params.m * r0 * r0),
    )


# --- composed analytic apex return map ----------------------------------------

def _tagged(err: SlipError, phase: str) -> SlipError:
    err.phase = phase
    return err


def return_map_analytic(apex: ApexState, inputs: ControlInputs,
                        params: SlipParams) -> ApexState:
    """Apex-to-apex closed-form return map.

    Composes the quadratic angle-of-attack approximation, closed-form
    descent, the touchdown reset, the closed-form stance map, the
    liftoff reset and closed-form ascent. Phase errors propagate with
    the failing phase tagged.
    """
    e_v = vertical_energy(apex, params)
    try:
        aoa = solve_aoa_approx(apex.x_dot, e_v, inputs.k_theta, params)
    except SlipError as err:
        raise _tagged(err, "aoa")
    theta_td = aoa.theta_td
    try:
        f_td = integrate_descent(apex, theta_td, params)
    except SlipError as err:
        raise _tagged(err, "descent")
    try:
        s_td = flight_to_stance(f_td, theta_td, params)
    except SlipError as err:
        raise _tagged(err, "touchdown")
    try:
        s_lo = stance_map_analytic(s_td, inputs.p_bar, params)
    except SlipError as err:
        raise _tagged(err, "stance")
    try:
        f_lo = stance_to_flight(s_lo)
        return integrate_ascent(f_lo, params)
    except SlipError as err:
        raise _tagged(err, "ascent")
