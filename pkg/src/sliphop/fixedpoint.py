"""Gait fixed points and their stability.

Three routes to a steady hop: the closed-form quadratic solution of the
touchdown energy/speed constraints, Newton iteration on the analytic
return map, and Newton iteration on the full simulator map. Stability
is the spectral radius of the 2x2 apex return-map Jacobian (central
finite differences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytic import (return_map_analytic, simplified_map_constants,
                       theta_offset)
from .errors import (GaitFailure, IllConditioned, NegativeDiscriminant,
                     NoConvergence, NonPhysical, NoRealFixedPoint, SlipError)
from .model import ApexState, ControlInputs, SlipParams
from .numerics import quadratic_roots, spectral_radius_2x2
from .simulate import return_map_numeric

__all__ = [
    "CLOSED_FORM", "ANALYTIC_NUMERIC", "SIMULATOR_NUMERIC",
    "TouchdownFixedPoint", "FixedPointResult", "quadratic_roots",
    "closed_form_fixed_point", "energy_speed_constraints",
    "numeric_fixed_point", "stability", "simulator_return_map",
]

CLOSED_FORM = "closed-form"
ANALYTIC_NUMERIC = "analytic-numeric"
SIMULATOR_NUMERIC = "simulator-numeric"

ReturnMap = Callable[[ApexState, ControlInputs, SlipParams], ApexState]


@dataclass(frozen=True)
class TouchdownFixedPoint:
    """Touchdown-coordinate fixed point (r_dot, theta, theta_dot) plus the
    leg-versus-velocity offset angle that generated it."""

    r_dot_td: float
    theta_td: float
    theta_dot_td: float
    theta_offset: float


@dataclass
class FixedPointResult:
    """A gait fixed point with its local stability information.

    jacobian/spectral_radius are NaN-filled when the return map could
    not be evaluated around the apex point (stable is then False);
    residual is the infinity norm of P(z*) - z* under the map that
    produced (or checked) the point.
    """

    apex: ApexState
    touchdown: TouchdownFixedPoint | None
    jacobian: np.ndarray
    spectral_radius: float
    stable: bool
    provenance: str
    residual: float
    newton_steps: int = 0


def simulator_return_map(apex: ApexState, inputs: ControlInputs,
                         params: SlipParams) -> ApexState:
    """Full-simulator return map with trajectory recording disabled."""
    nxt, _ = return_map_numeric(apex, inputs, params, record=False)
    return nxt


def _map_jacobian(return_map: ReturnMap, z: ApexState,
                  inputs: ControlInputs, params: SlipParams,
                  h_scale: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the apex map at z.

    Step h = max(h_scale, h_scale*|z_i|) per component. Raises
    IllConditioned when a difference column is pure noise.
    """
    z0 = np.array([z.x_dot, z.y])
    jac = np.empty((2, 2))
    for j in range(2):
        h = max(h_scale, h_scale * abs(z0[j]))
        zp = z0.copy()
        zp[j] += h
        zm = z0.copy()
        zm[j] -= h
        pp = return_map(ApexState(*zp), inputs, params)
        pm = return_map(ApexState(*zm), inputs, params)
        dx = pp.x_dot - pm.x_dot
        dy = pp.y - pm.y
        if max(abs(dx), abs(dy)) < 1e-13:
            raise IllConditioned(
                f"column {j} difference below noise floor at h = {h:.1e}")
        # divide by the realized step so linear maps come out exact
        denom = zp[j] - zm[j]
        jac[0, j] = dx / denom
        jac[1, j] = dy / denom
    return jac


def stability(return_map: ReturnMap, z_star: ApexState,
              inputs: ControlInputs, params: SlipParams,
              h_scale: float = 1e-6) -> tuple[np.ndarray, float, bool]:
    """Return-map Jacobian at a fixed point, its spectral radius, and the
    stability verdict (spectral radius < 1)."""
    jac = _map_jacobian(return_map, z_star, inputs, params, h_scale)
    rho = spectral_radius_2x2(jac[0, 0], jac[0, 1], jac[1, 0], jac[1, 1])
    return jac, float(rho), bool(rho < 1.0)


def _stability_or_nan(return_map: ReturnMap, z: ApexState,
                      inputs: ControlInputs, params: SlipParams,
                      ) -> tuple[np.ndarray, float, bool]:
    try:
        return stability(return_map, z, inputs, params)
    except SlipError:
        return np.full((2, 2), math.nan), math.nan, False


def closed_form_fixed_point(p_bar: float, k_theta: float,
                            params: SlipParams) -> FixedPointResult:
    """Closed-form gait fixed point from the touchdown constraints.

    The flight-conservation constraints (energy and fore-aft speed equal
    at touchdown and liftoff) are quadratic in the touchdown state once
    the stance map is affine; r_dot_td takes the negative root of the
    energy quadratic, theta_td the positive root of the speed quadratic,
    and theta_dot_td follows from the offset-angle relation
    theta_dot = -r_dot/r0 * tan(theta_offset). The apex point is the
    touchdown state mapped backward through the reset and descent.
    Stability is evaluated on the analytic return map at the apex.

    Raises NoRealFixedPoint when a constraint quadratic has no real
    root, NonPhysical when the chosen branch is not a descending-
    touchdown gait. No silent branch swapping.
    """
    if not 0.0 <= k_theta <= 1.0:
        raise ValueError(f"k_theta must be in [0, 1], got {k_theta}")
    m, r0, g = params.m, params.r0, params.g
    t_off = theta_offset(p_bar, k_theta)
    tan_off = math.tan(t_off)
    con = simplified_map_constants(p_bar, k_theta, params)
    c1, c2, c3, c4 = con.c1, con.c2, con.c3, con.c4

    # energy constraint, quadratic in r_dot_td
    a_r = 0.5 * m * (1.0 - c1 * c1 + tan_off * tan_off)
    b_r = -c1 * c2 * m
    c_r = -p_bar * p_bar / (2.0 * m * r0 * r0) - 0.5 * m * c2 * c2
    try:
        _, r_dot = quadratic_roots(a_r, b_r, c_r)  # Q- branch
    except NegativeDiscriminant as err:
        raise NoRealFixedPoint(f"energy quadratic: {err}") from err
    if r_dot >= 0.0:
        raise NonPhysical(f"r_dot_td = {r_dot:.4f} >= 0 on the Q- branch")

    # speed constraint, quadratic in theta_td
    p_over = p_bar / (m * r0)
    d = c1 * r_dot + c2
    gsl = c3 * r_dot + c4
    a_t = -0.5 * (r_dot * tan_off + p_over)
    b_t = -r_dot - p_over * gsl + d
    c_t = r_dot * tan_off + p_over * (1.0 - 0.5 * gsl * gsl) + d * gsl
    try:
        theta_td, _ = quadratic_roots(a_t, b_t, c_t)  # Q+ branch
    except NegativeDiscriminant as err:
        raise NoRealFixedPoint(f"speed quadratic: {err}") from err

    theta_dot = -r_dot / r0 * tan_off
    touchdown = TouchdownFixedPoint(r_dot_td=r_dot, theta_td=theta_td,
                                    theta_dot_td=theta_dot,
                                    theta_offset=t_off)

    # backward in time: inverse touchdown reset, then inverse descent
    c, sn = math.cos(theta_td), math.sin(theta_td)
    x_dot = -theta_dot * r0 * c - r_dot * sn
    y_td = r0 * c
    y_dot_td = -theta_dot * r0 * sn + r_dot * c
    if y_dot_td >= 0.0:
        raise NonPhysical(f"touchdown y_dot = {y_dot_td:.4f} >= 0")
    y_apex = y_td + y_dot_td * y_dot_td / (2.0 * g)
    if y_apex <= y_td:
        raise NonPhysical(f"apex height {y_apex:.4f} <= touchdown height")
    apex = ApexState(x_dot=x_dot, y=y_apex)

    inputs = ControlInputs(p_bar=p_bar, k_theta=k_theta)
    jac, rho, stable = _stability_or_nan(return_map_analytic, apex,
                                         inputs, params)
    try:
        nxt = return_map_analytic(apex, inputs, params)
        residual = max(abs(nxt.x_dot - apex.x_dot), abs(nxt.y - apex.y))
    except SlipError:
        residual = math.nan
    return FixedPointResult(apex=apex, touchdown=touchdown, jacobian=jac,
                            spectral_radius=rho, stable=stable,
                            provenance=CLOSED_FORM, residual=residual)


def energy_speed_constraints(candidate: TouchdownFixedPoint, p_bar: float,
                             k_theta: float, params: SlipParams,
                             ) -> tuple[float, float]:
    """Residuals of the two touchdown fixed-point constraints.

    Returns (E_td - E_lo, x_dot_td - x_dot_lo) evaluated with the same
    frozen stance-map constants and small-angle forms the closed-form
    solution uses; its output zeroes both by construction.
    """
    m, r0 = params.m, params.r0
    con = simplified_map_constants(p_bar, k_theta, params)
    tan_off = math.tan(candidate.theta_offset)
    r_dot, theta = candidate.r_dot_td, candidate.theta_td

    e_td = 0.5 * m * r_dot * r_dot + 0.5 * m * (r_dot * tan_off) ** 2
    e_lo = 0.5 * m * (con.c1 * r_dot + con.c2) ** 2 \
        + p_bar * p_bar / (2.0 * m * r0 * r0)

    gsl = theta + con.c3 * r_dot + con.c4
    x_td = -r_dot * theta + r_dot * tan_off * (1.0 - 0.5 * theta * theta)
    x_lo = (-p_bar / (m * r0)) * (1.0 - 0.5 * gsl * gsl) \
        - (con.c1 * r_dot + con.c2) * gsl
    return e_td - e_lo, x_td - x_lo


def numeric_fixed_point(return_map: ReturnMap, seed: ApexState,
                        inputs: ControlInputs, params: SlipParams,
                        tol: float = 1e-9, max_steps: int = 50,
                        prewarm: int = 0,
                        provenance: str = ANALYTIC_NUMERIC,
                        ) -> FixedPointResult:
    """Newton fixed point of an apex return map.

    Newton iteration on the residual F(z) = P(z) - z with a central
    finite-difference Jacobian (step max(1e-6, 1e-6|z|) per component),
    converged when the residual infinity norm is at or below tol. A
    backtracking halver guards steps that leave the gait's domain;
    prewarm > 0 applies that many plain map iterations first (the fixed
    points are attracting), which robustifies distant seeds. Raises
    NoConvergence after max_steps, GaitFailure when a map evaluation
    fails and backtracking cannot recover.
    """
    z = np.array([seed.x_dot, seed.y])

    def try_eval(zz: np.ndarray) -> np.ndarray | None:
        try:
            nxt = return_map(ApexState(zz[0], zz[1]), inputs, params)
        except (SlipError, ValueError):
            return None
        return np.array([nxt.x_dot, nxt.y])

    for _ in range(prewarm):
        nxt = try_eval(z)
        if nxt is None:
            break
        z = nxt

    steps = 0
    for steps in range(max_steps + 1):
        try:
            mapped = return_map(ApexState(z[0], z[1]), inputs, params)
        except SlipError as err:
            raise GaitFailure(
                f"map evaluation failed at z = ({z[0]:.4f}, {z[1]:.4f}): "
                f"{err}", phase=err.phase) from err
        residual = np.array([mapped.x_dot - z[0], mapped.y - z[1]])
        res_norm = float(np.max(np.abs(residual)))
        if res_norm <= tol:
            z_star = ApexState(z[0], z[1])
            jac, rho, stable = _stability_or_nan(return_map, z_star,
                                                 inputs, params)
            return FixedPointResult(apex=z_star, touchdown=None,
                                    jacobian=jac, spectral_radius=rho,
                                    stable=stable, provenance=provenance,
                                    residual=res_norm, newton_steps=steps)
        if steps == max_steps:
            break
        try:
            jac_p = _map_jacobian(return_map, ApexState(z[0], z[1]),
                                  inputs, params)
        except SlipError as err:
            raise GaitFailure(f"Jacobian evaluation failed: {err}",
                              phase=err.phase) from err
        jac_f = jac_p - np.eye(2)
        try:
            step = np.linalg.solve(jac_f, residual)
        except np.linalg.LinAlgError as err:
            raise IllConditioned(f"singular Newton system: {err}") from err
        lam = 1.0
        for _ in range(8):
            cand = z - lam * step
            nxt = try_eval(cand)
            if nxt is not None:
                new_norm = float(np.linalg.norm(nxt - cand))
                if new_norm < float(np.linalg.norm(residual)) or lam <= 0.25:
                    z = cand
                    break
            lam *= 0.5
        else:
            raise GaitFailure(
                f"no acceptable Newton step from z = ({z[0]:.4f}, {z[1]:.4f})")
    raise NoConvergence(
        f"residual {res_norm:.2e} > {tol:.1e} after {max_steps} Newton steps")
