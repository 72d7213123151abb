"""Domain types and the flight/stance coordinate-change reset maps.

Conventions: SI units throughout, no internal nondimensionalization.
The leg angle theta is measured from vertical; theta > 0 means the toe
leads the body in the +x direction, so forward travel (+x_dot) pairs
with a negative target angular momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import TouchdownMismatch

# Resets are exact coordinate changes; this slack only absorbs
# event-detection error in the preceding descent.
TOUCHDOWN_TOL = 1e-9


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SlipParams:
    """Physical constants of the point-mass hopper.

    m     mass (kg)
    k     spring constant (N/m)
    b     damping coefficient (N*s/m)
    r0    spring rest length (m)
    g     gravitational acceleration (m/s^2)
    """

    m: float
    k: float
    b: float
    r0: float
    g: float = 9.81

    def __post_init__(self):
        for name in ("m", "k", "b", "r0", "g"):
            _require_finite(name, getattr(self, name))
        if self.m <= 0.0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.k <= 0.0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if self.b < 0.0:
            raise ValueError(f"b must be >= 0, got {self.b}")
        if self.r0 <= 0.0:
            raise ValueError(f"r0 must be > 0, got {self.r0}")
        if self.g <= 0.0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if not 0.0 < self.r_g < self.r0:
            raise ValueError(
                f"gravity-loaded length r_g = r0 - m*g/k = {self.r_g:.6g} "
                f"must lie in (0, r0)")

    @property
    def r_g(self) -> float:
        """Gravity-loaded equilibrium leg length r0 - m*g/k."""
        return self.r0 - self.m * self.g / self.k

    @property
    def omega0(self) -> float:
        """Undamped radial natural frequency sqrt(k/m)."""
        return math.sqrt(self.k / self.m)


#: Reference hopper parameters used throughout the tests and as CLI defaults.
DEFAULT_PARAMS = SlipParams(m=3.3, k=4000.0, b=20.0, r0=0.2)


@dataclass(frozen=True)
class ControlInputs:
    """Gait knobs plus stance-controller configuration.

    p_bar    target angular momentum in stance (kg*m^2/s, negative for
             forward travel)
    k_theta  touchdown-angle gain in [0, 1]
    kp/ki/kd PID gains on the angular-momentum error
    tau_max  hip torque saturation (N*m), None for unlimited
    """

    p_bar: float
    k_theta: float
    kp: float = 100.0
    ki: float = 0.2
    kd: float = 0.05
    tau_max: float | None = None

    def __post_init__(self):
        _require_finite("p_bar", self.p_bar)
        _require_finite("k_theta", self.k_theta)
        if not 0.0 <= self.k_theta <= 1.0:
            raise ValueError(f"k_theta must be in [0, 1], got {self.k_theta}")
        if self.tau_max is not None and self.tau_max <= 0.0:
            raise ValueError(f"tau_max must be > 0 when set, got {self.tau_max}")


@dataclass(frozen=True)
class StanceState:
    """Polar stance state [r, r_dot, theta, theta_dot] about the toe."""

    r: float
    r_dot: float
    theta: float
    theta_dot: float

    def __post_init__(self):
        for name in ("r", "r_dot", "theta", "theta_dot"):
            _require_finite(name, getattr(self, name))
        if self.r <= 0.0:
            raise ValueError(f"r must be > 0, got {self.r}")

    def angular_momentum(self, params: SlipParams) -> float:
        """p_theta = m * r^2 * theta_dot about the toe."""
        return params.m * self.r * self.r * self.theta_dot

    def kinetic_energy(self, params: SlipParams) -> float:
        return 0.5 * params.m * (
            self.r_dot ** 2 + (self.r * self.theta_dot) ** 2)


@dataclass(frozen=True)
class FlightState:
    """Cartesian flight state [x_dot, y, y_dot]; y is mass height."""

    x_dot: float
    y: float
    y_dot: float

    def __post_init__(self):
        for name in ("x_dot", "y", "y_dot"):
            _require_finite(name, getattr(self, name))
        if self.y <= 0.0:
            raise ValueError(f"y must be > 0, got {self.y}")

    def kinetic_energy(self, params: SlipParams) -> float:
        return 0.5 * params.m * (self.x_dot ** 2 + self.y_dot ** 2)


@dataclass(frozen=True)
class ApexState:
    """Apex Poincare-section state [x_dot, y] (y_dot = 0 by definition)."""

    x_dot: float
    y: float

    def __post_init__(self):
        _require_finite("x_dot", self.x_dot)
        _require_finite("y", self.y)
        if self.y <= 0.0:
            raise ValueError(f"apex height must be > 0, got {self.y}")


def stance_to_flight(s: StanceState) -> FlightState:
    """Liftoff reset: polar stance coordinates to Cartesian flight.

    [x_dot, y, y_dot] =
        [-theta_dot*r*cos(theta) - r_dot*sin(theta),
          r*cos(theta),
         -theta_dot*r*sin(theta) + r_dot*cos(theta)]
    """
    c = math.cos(s.theta)
    sn = math.sin(s.theta)
    return FlightState(
        x_dot=-s.theta_dot * s.r * c - s.r_dot * sn,
        y=s.r * c,
        y_dot=-s.theta_dot * s.r * sn + s.r_dot * c,
    )


def flight_to_stance(f: FlightState, theta_td: float,
                     params: SlipParams) -> StanceState:
    """Touchdown reset: Cartesian flight coordinates to polar stance.

    Requires the flight height to match the touchdown geometry
    y = r0*cos(theta_td) within TOUCHDOWN_TOL; raises TouchdownMismatch
    otherwise.
    """
    y_td = params.r0 * math.cos(theta_td)
    if abs(f.y - y_td) > TOUCHDOWN_TOL:
        raise TouchdownMismatch(
            f"flight height {f.y:.12g} != r0*cos(theta_td) = {y_td:.12g}")
    c = math.cos(theta_td)
    sn = math.sin(theta_td)
    return StanceState(
        r=params.r0,
        r_dot=-sn * f.x_dot + c * f.y_dot,
        theta=theta_td,
        theta_dot=(-c * f.x_dot - sn * f.y_dot) / params.r0,
    )
