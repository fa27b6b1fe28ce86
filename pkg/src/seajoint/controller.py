"""Backstepping sliding-mode force controller for the SEA hip joint.

Three stages, each driving the next state toward the previous stage's
command:

1. sliding-mode stage: surface ``sigma = e2 + c e1`` and the deflection
   command ``u_x`` that makes ``sigma sigma' = -rho |sigma|``;
2. first backstepping stage: deflection-rate command ``u1`` steering
   ``z1 = delta`` to ``u_x``;
3. second backstepping stage: spring input ``U_eq`` steering
   ``z2 = delta_dot`` to ``u1``.

The controller is sampled: :meth:`Controller.step` runs once per
``update_period`` and its ``U_eq`` is held until the next call.

Lyapunov weighting
------------------
With ``V = sigma^2/2 + w (u_x - z1)^2/2 + w (u1 - z2)^2/2`` the stabilising
first-stage law is ``u1 = k1 (u_x - z1) + u_x' + sigma g(x1) / w``; ``w = 1``
is the unweighted form. ``sigma`` is in rad/s while deflections are in
metres, so ``w = 1`` couples them at a rate of ``|g| ~ 2.5e5 rad/s`` for the
UXA-90 linkage, far above any realisable sample rate. The default
``w = (g_hat / coupling_rate)^2`` puts that exchange at ``coupling_rate``
(the spring's natural frequency unless configured). Everything else in
the Lyapunov decrement is unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

from .errors import ConfigError, SingularConfigurationError
from .geometry import SINGULAR_ARM, LinkGeometry, moment_arm
from .plant import PlantParams, PlantState, joint_drift, joint_input_gain
from .reference import TrajectorySample


@dataclass(frozen=True)
class ControllerGains:
    c: float = 10.0
    rho: float = 3.0
    k1: float = 1.0
    k2: float = 5.0

    def __post_init__(self):
        for name in ("c", "rho", "k1", "k2"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"gains.{name}", f"must be > 0, got {value!r}")


@dataclass(frozen=True)
class ControllerConfig:
    update_period: float = 1e-4
    # None -> equal to update_period
    deriv_filter_tau: Optional[float] = None
    boundary_layer: float = 0.0
    nominal_tau_D: float = 0.0
    # sigma <-> deflection exchange rate (1/s); None -> spring natural frequency
    coupling_rate: Optional[float] = None
    # evaluate the spring cancellation at the middle of the hold interval
    hold_compensation: bool = True
    # optional |U_eq| clamp; None -> unsaturated
    u_clamp: Optional[float] = None

    def __post_init__(self):
        if not (self.update_period > 0 and math.isfinite(self.update_period)):
            raise ConfigError("controller.update_period", f"must be > 0, got {self.update_period!r}")
        if self.deriv_filter_tau is not None and not self.deriv_filter_tau >= self.update_period * (1 - 1e-12):
            raise ConfigError("controller.deriv_filter_tau",
                              f"must be >= update_period ({self.update_period!r}), got {self.deriv_filter_tau!r}")
        if not self.boundary_layer >= 0:
            raise ConfigError("controller.boundary_layer", f"must be >= 0, got {self.boundary_layer!r}")
        if self.coupling_rate is not None and not self.coupling_rate > 0:
            raise ConfigError("controller.coupling_rate", f"must be > 0, got {self.coupling_rate!r}")
        if self.u_clamp is not None and not self.u_clamp > 0:
            raise ConfigError("controller.u_clamp", f"must be > 0, got {self.u_clamp!r}")

    @property
    def filter_tau(self) -> float:
        return self.update_period if self.deriv_filter_tau is None else self.deriv_filter_tau


class FilterState(NamedTuple):
    """Memory of a dirty-derivative filter: the low-passed input."""

    value: float = 0.0


@dataclass(frozen=True)
class ControllerState:
    ux_filter: FilterState = FilterState()
    u1_filter: FilterState = FilterState()
    U_eq: float = 0.0
    t: Optional[float] = None
    # diagnostics of the last update, for logging
    sigma: float = 0.0
    u_x: float = 0.0
    u1: float = 0.0
    clamped: bool = False

    def reset(self) -> "ControllerState":
        return ControllerState()


# --------------------------------------------------------------------------
# Building blocks

def sliding_sigma(e1: float, e2: float, c: float) -> float:
    return e2 + c * e1


def switching(sigma: float, boundary_layer: float = 0.0) -> float:
    """sign(sigma) with sign(0) = 0, or sat(sigma / boundary_layer) when > 0."""
    if boundary_layer > 0.0:
        return max(-1.0, min(1.0, sigma / boundary_layer))
    if sigma > 0.0:
        return 1.0
    if sigma < 0.0:
        return -1.0
    return 0.0


def filtered_derivative(sample: float, dt: float, tau: float, memory: FilterState):
    """Dirty derivative ``(x - x_lp) / tau`` with first-order lag ``x_lp``.

    Returns ``(estimate, new_memory)``. With ``tau == dt`` this is the
    backward difference; ramps of slope ``s`` settle to exactly ``s``.
    """
    if not dt > 0 or not tau >= dt * (1 - 1e-12):
        raise ValueError(f"need dt > 0 and tau >= dt, got dt={dt!r}, tau={tau!r}")
    lagged = memory.value
    estimate = (sample - lagged) / tau
    a = dt / tau
    # convex form: with a == 1 the memory becomes the sample exactly
    return estimate, FilterState((1.0 - a) * lagged + a * sample)


def smc_virtual_control(ref: TrajectorySample, state: PlantState, params: PlantParams,
                        geom: LinkGeometry, gains: ControllerGains,
                        cfg: ControllerConfig = ControllerConfig()) -> float:
    """Deflection command ``u_x`` (metres) of the sliding-mode stage."""
    g_x1 = _checked_gain(params, geom, state.phi)
    e1 = ref.phi_d - state.phi
    e2 = ref.phi_d_dot - state.phi_dot
    sigma = sliding_sigma(e1, e2, gains.c)
    f = joint_drift(params, geom, state.phi, state.phi_dot, cfg.nominal_tau_D)
    return (gains.rho * switching(sigma, cfg.boundary_layer) + ref.phi_d_ddot - f + gains.c * e2) / g_x1


def backstep_u1(u_x: float, u_x_dot: float, z1: float, sigma: float, g_x1: float, k1: float,
                weight: float = 1.0) -> float:
    """Deflection-rate command; ``weight`` is the Lyapunov weight w on the deflection error."""
    return k1 * (u_x - z1) + u_x_dot + sigma * g_x1 / weight


def control_voltage(u1: float, u1_dot: float, u_x: float, z1: float, z2: float, f2: float,
                    k2: float) -> float:
    """Spring input ``U_eq`` (g2 = 1)."""
    return -f2 + k2 * (u1 - z2) + u1_dot + (u_x - z1)


def nominal_input_gain(params: PlantParams, geom: LinkGeometry) -> float:
    """|g(x1)| at the hanging posture phi = 0; the deflection-to-acceleration scale."""
    return abs(joint_input_gain(params, geom, 0.0))


def lyapunov_weight(params: PlantParams, geom: LinkGeometry, cfg: ControllerConfig) -> float:
    rate = params.omega if cfg.coupling_rate is None else cfg.coupling_rate
    return (nominal_input_gain(params, geom) / rate) ** 2


def _checked_gain(params, geom, phi, t=None):
    arm = moment_arm(geom, phi - geom.alpha)
    if abs(arm) < SINGULAR_ARM:
        raise SingularConfigurationError(phi, arm, t)
    return -params.k * arm / (params.m * geom.d3 * geom.d3)


# --------------------------------------------------------------------------
# Composed, sampled controller

class Controller:
    """Precomputes the constant pieces of the control law for one run."""

    def __init__(self, params: PlantParams, geom: LinkGeometry,
                 gains: ControllerGains = ControllerGains(),
                 cfg: ControllerConfig = ControllerConfig()):
        self.params, self.geom, self.gains, self.cfg = params, geom, gains, cfg
        self.weight = lyapunov_weight(params, geom, cfg)
        self.tau = cfg.filter_tau
        self._inertia = params.m * geom.d3 * geom.d3
        self._mgd = params.m * params.g * geom.d3
        self._m_spring = params.spring_mass

    def initial_state(self) -> ControllerState:
        return ControllerState()

    def step(self, ref: TrajectorySample, measured: PlantState, cstate: ControllerState):
        """One controller update. Returns ``(U_eq, new_state)``; pure in ``cstate``."""
        p, geom, gains, cfg = self.params, self.geom, self.gains, self.cfg
        phi, phi_dot, z1, z2 = measured
        T = cfg.update_period

        arm = moment_arm(geom, phi - geom.alpha)
        if abs(arm) < SINGULAR_ARM:
            raise SingularConfigurationError(phi, arm, ref.t)
        g_x1 = -p.k * arm / self._inertia

        e1 = ref.phi_d - phi
        e2 = ref.phi_d_dot - phi_dot
        sigma = e2 + gains.c * e1
        f = -(p.B * phi_dot + self._mgd * math.sin(phi) - cfg.nominal_tau_D) / self._inertia
        u_x = (gains.rho * switching(sigma, cfg.boundary_layer) + ref.phi_d_ddot - f + gains.c * e2) / g_x1

        u_x_dot, ux_mem = filtered_derivative(u_x, T, self.tau, cstate.ux_filter)
        u1 = backstep_u1(u_x, u_x_dot, z1, sigma, g_x1, gains.k1, self.weight)
        u1_dot, u1_mem = filtered_derivative(u1, T, self.tau, cstate.u1_filter)

        # f2 averaged over the hold: evaluate at the predicted mid-interval state
        if cfg.hold_compensation:
            phi_m, z1_m = phi + 0.5 * T * phi_dot, z1 + 0.5 * T * z2
            arm_m = moment_arm(geom, phi_m - geom.alpha)
            if abs(arm_m) < SINGULAR_ARM:
                raise SingularConfigurationError(phi_m, arm_m, ref.t)
        else:
            phi_m, z1_m, arm_m = phi, z1, arm
        f2 = -(p.k * z1_m + self._mgd * math.sin(phi_m) / arm_m) / self._m_spring

        U_eq = control_voltage(u1, u1_dot, u_x, z1, z2, f2, gains.k2)
        clamped = False
        if cfg.u_clamp is not None and abs(U_eq) > cfg.u_clamp:
            U_eq = math.copysign(cfg.u_clamp, U_eq)
            clamped = True
        return U_eq, ControllerState(ux_mem, u1_mem, U_eq, ref.t, sigma, u_x, u1, clamped)


def controller_step(ref: TrajectorySample, measured: PlantState, params: PlantParams,
                    geom: LinkGeometry, gains: ControllerGains, cfg: ControllerConfig,
                    cstate: ControllerState):
    """Functional form of :meth:`Controller.step`."""
    return Controller(params, geom, gains, cfg).step(ref, measured, cstate)


def with_gain(gains: ControllerGains, name: str, value: float) -> ControllerGains:
    if name not in ("c", "rho", "k1", "k2"):
        raise ConfigError(f"gains.{name}", "unknown gain")
    return replace(gains, **{name: value})
