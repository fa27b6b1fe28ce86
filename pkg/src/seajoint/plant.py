"""Open-loop dynamics of the SEA-driven hip joint.

State is ``(phi, phi_dot, delta, delta_dot)``: joint angle and rate, SEA
spring deflection ``delta = X_C - X_0`` and its rate. The joint obeys

    m d3^2 phi'' = -m g d3 sin(phi) - B phi' + tau_D + tau_SEA

and the reduced (first-order motor) SEA obeys

    delta'' + omega^2 delta = U_eq - F_R / m

where ``U_eq`` is the lumped voltage-channel input that the controller
commands directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import ConfigError, SingularConfigurationError
from .geometry import SINGULAR_ARM, LinkGeometry, moment_arm

GRAVITY = 9.81


@dataclass(frozen=True)
class PlantParams:
    m: float = 2.0
    B: float = 0.5
    k: float = 20000.0
    g: float = GRAVITY
    # Mass seen by the spring; the limb mass unless overridden.
    m_sea: Optional[float] = None

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ConfigError("plant.m", f"must be > 0, got {self.m!r}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError("plant.k", f"must be > 0, got {self.k!r}")
        if not (self.B >= 0 and math.isfinite(self.B)):
            raise ConfigError("plant.B", f"must be >= 0, got {self.B!r}")
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ConfigError("plant.g", f"must be >= 0, got {self.g!r}")
        if self.m_sea is not None and not self.m_sea > 0:
            raise ConfigError("plant.m_sea", f"must be > 0, got {self.m_sea!r}")

    @property
    def spring_mass(self) -> float:
        return self.m if self.m_sea is None else self.m_sea

    @property
    def omega_sq(self) -> float:
        return self.k / self.spring_mass

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega_sq)


class PlantState(NamedTuple):
    phi: float = 0.0
    phi_dot: float = 0.0
    delta: float = 0.0
    delta_dot: float = 0.0


# --------------------------------------------------------------------------
# Disturbance torque

DISTURBANCE_KINDS = ("none", "constant", "sinusoid", "pulse")


@dataclass(frozen=True)
class DisturbanceProfile:
    kind: str = "none"
    amplitude: float = 0.0      # N*m
    frequency: float = 0.0      # Hz, sinusoid only
    start: float = 0.0          # s, pulse only
    duration: float = 0.0       # s, pulse only

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ConfigError("disturbance.kind", f"unknown kind {self.kind!r}; expected one of {DISTURBANCE_KINDS}")
        if self.frequency < 0:
            raise ConfigError("disturbance.frequency", "must be >= 0")
        if self.duration < 0:
            raise ConfigError("disturbance.duration", "must be >= 0")


def evaluate_disturbance(profile: DisturbanceProfile, t: float) -> float:
    kind = profile.kind
    if kind == "none":
        return 0.0
    if kind == "constant":
        return profile.amplitude
    if kind == "sinusoid":
        return profile.amplitude * math.sin(2.0 * math.pi * profile.frequency * t)
    # pulse
    if profile.start <= t < profile.start + profile.duration:
        return profile.amplitude
    return 0.0


# --------------------------------------------------------------------------
# Joint and spring dynamics

def sea_torque(geom: LinkGeometry, k: float, phi: float, delta: float) -> float:
    """Joint torque from spring force ``F_SEA = -k delta`` acting on arm r(phi - alpha)."""
    return -k * delta * moment_arm(geom, phi - geom.alpha)


def joint_drift(params: PlantParams, geom: LinkGeometry, phi: float, phi_dot: float,
                tau_D: float = 0.0) -> float:
    """f(x1, x2, tau_D): joint acceleration with the spring unloaded."""
    return -(params.B * phi_dot + params.m * params.g * geom.d3 * math.sin(phi) - tau_D) / (
        params.m * geom.d3 * geom.d3)


def joint_input_gain(params: PlantParams, geom: LinkGeometry, phi: float) -> float:
    """g(x1): joint acceleration per metre of spring deflection."""
    theta = phi - geom.alpha
    # moment_arm already carries d6 d7 sin(theta + sigma + pi/2) / L(theta)
    return -params.k * moment_arm(geom, theta) / (params.m * geom.d3 * geom.d3)


def joint_accel(params: PlantParams, geom: LinkGeometry, state: PlantState, tau_D: float = 0.0) -> float:
    phi, phi_dot, delta = state.phi, state.phi_dot, state.delta
    inertia = params.m * geom.d3 * geom.d3
    gravity = params.m * params.g * geom.d3 * math.sin(phi)
    return (-gravity - params.B * phi_dot + tau_D + sea_torque(geom, params.k, phi, delta)) / inertia


def spring_drift(params: PlantParams, geom: LinkGeometry, phi: float, delta: float,
                 m_sea_load: Optional[float] = None, eps: float = SINGULAR_ARM) -> float:
    """f2 = -omega^2 delta - F_R / m: spring acceleration with zero input."""
    m_load = params.spring_mass if m_sea_load is None else m_sea_load
    arm = moment_arm(geom, phi - geom.alpha)
    if abs(arm) < eps:
        raise SingularConfigurationError(phi, arm)
    f_reaction = params.m * params.g * geom.d3 * math.sin(phi) / arm
    return -(params.k / m_load) * delta - f_reaction / m_load


def sea_accel(params: PlantParams, geom: LinkGeometry, state: PlantState, U_eq: float,
              m_sea_load: Optional[float] = None) -> float:
    return spring_drift(params, geom, state.phi, state.delta, m_sea_load) + U_eq


def plant_derivative(params: PlantParams, geom: LinkGeometry, state: PlantState,
                     U_eq: float, tau_D: float = 0.0) -> PlantState:
    """Time derivative of the 4-state plant as a :class:`PlantState`."""
    return PlantState(
        state.phi_dot,
        joint_accel(params, geom, state, tau_D),
        state.delta_dot,
        sea_accel(params, geom, state, U_eq),
    )


def joint_energy(params: PlantParams, geom: LinkGeometry, phi: float, phi_dot: float) -> float:
    """Kinetic plus gravitational energy of the limb (spring excluded)."""
    return (0.5 * params.m * geom.d3 ** 2 * phi_dot ** 2
            + params.m * params.g * geom.d3 * (1.0 - math.cos(phi)))


# --------------------------------------------------------------------------
# Motor model reduction

IDENTIFIED_VELOCITY_POLE = 47.535


@dataclass(frozen=True)
class MotorParams:
    """DC motor + ball-screw drive constants.

    Either give ``J_eq`` directly or give the drivetrain fields
    (``J_s, m0, n, l, eta1, eta2``) so it can be assembled from the motor,
    screw and nut inertias.
    """

    R: float = 5.56
    L_ind: float = 4.6e-3
    K_T: float = 0.202
    K_EMF: float = 0.202
    J_M: float = 1.57e-4
    B_M: float = 16.5e-5
    J_eq: Optional[float] = 1.574e-4
    J_s: Optional[float] = None
    m0: Optional[float] = None
    n: Optional[float] = None
    l: Optional[float] = None
    eta1: Optional[float] = None
    eta2: Optional[float] = None

    _DRIVETRAIN = ("J_s", "m0", "n", "l", "eta1", "eta2")

    def __post_init__(self):
        for name in ("R", "K_T", "K_EMF", "J_M"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"motor.{name}", f"must be > 0, got {value!r}")
        if not self.L_ind >= 0:
            raise ConfigError("motor.L_ind", f"must be >= 0, got {self.L_ind!r}")
        if not self.B_M >= 0:
            raise ConfigError("motor.B_M", f"must be >= 0, got {self.B_M!r}")
        for name in self._DRIVETRAIN + ("J_eq",):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"motor.{name}", f"must be > 0, got {value!r}")
        drivetrain = self.drivetrain_inertia()
        if self.J_eq is None and drivetrain is None:
            raise ConfigError("motor.J_eq", "give J_eq or all of J_s, m0, n, l, eta1, eta2")
        if self.J_eq is not None and drivetrain is not None:
            if abs(drivetrain - self.J_eq) > 5e-3 * self.J_eq:
                raise ConfigError("motor.J_eq", f"{self.J_eq!r} inconsistent with drivetrain value {drivetrain!r}")

    @property
    def has_drivetrain(self) -> bool:
        return all(getattr(self, name) is not None for name in self._DRIVETRAIN)

    def drivetrain_inertia(self) -> Optional[float]:
        """J_M + J_s/(n^2 eta1) + l^2 m0 / (4 pi^2 n^2 eta1 eta2), or None if incomplete."""
        if not self.has_drivetrain:
            return None
        n, l, e1, e2 = self.n, self.l, self.eta1, self.eta2
        return (self.J_M + self.J_s / (n * n * e1)
                + l * l * self.m0 / (4.0 * math.pi ** 2 * n * n * e1 * e2))

    @property
    def equivalent_inertia(self) -> float:
        return self.J_eq if self.J_eq is not None else self.drivetrain_inertia()


@dataclass(frozen=True)
class MotorReduction:
    """Coefficients of ``U* = P (A2 v0'' + A1 v0' + A0 v0)``.

    ``P = 2 pi n / (l K_T)`` is only known when the drivetrain is given;
    otherwise ``prefactor`` is None and only ratios are meaningful.
    """

    A2: float
    A1: float
    A0: float
    c_v: float
    prefactor: Optional[float] = None
    J_eq: float = field(default=0.0)

    @property
    def a2(self) -> Optional[float]:
        return None if self.prefactor is None else self.prefactor * self.A2

    @property
    def a1(self) -> Optional[float]:
        return None if self.prefactor is None else self.prefactor * self.A1

    @property
    def a0(self) -> Optional[float]:
        return None if self.prefactor is None else self.prefactor * self.A0

    @property
    def electrical_time_constant(self) -> float:
        """A2 / A1 in seconds."""
        return self.A2 / self.A1

    def neglect_ratio(self, rate: float) -> float:
        """|A2 s^2| / |A1 s| at ``s = rate`` (1/s): size of the dropped v0'' term."""
        return self.A2 * abs(rate) / self.A1

    def pole_deviation(self, reference: float = IDENTIFIED_VELOCITY_POLE) -> float:
        return (self.c_v - reference) / reference


def motor_polynomial(R, L_ind, J_eq, B_M, K_T, K_EMF):
    """Bracketed coefficients (A2, A1, A0) of the second-order v0 equation. No validation."""
    return L_ind * J_eq, R * J_eq + L_ind * B_M, B_M * R + K_EMF * K_T


def reduce_motor_model(mp: MotorParams) -> MotorReduction:
    """Collapse the electro-mechanical SEA drive to first order in v0.

    ``A2 = L J_eq``, ``A1 = R J_eq + L B_M``, ``A0 = B_M R + K_EMF K_T``;
    dropping A2 leaves ``U_v = v0' + c_v v0`` with ``c_v = A0 / A1``.
    """
    J_eq = mp.equivalent_inertia
    A2, A1, A0 = motor_polynomial(mp.R, mp.L_ind, J_eq, mp.B_M, mp.K_T, mp.K_EMF)
    prefactor = None
    if mp.n is not None and mp.l is not None:
        prefactor = 2.0 * math.pi * mp.n / (mp.l * mp.K_T)
    return MotorReduction(A2=A2, A1=A1, A0=A0, c_v=A0 / A1, prefactor=prefactor, J_eq=J_eq)
