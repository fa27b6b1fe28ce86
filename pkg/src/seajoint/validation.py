"""Self-check suite: every module invariant as a pass/fail line.

Oracles here are deliberately independent of the code under test: the
linkage is rebuilt from point coordinates, derivatives come from finite
differences, and the spring is checked against its closed-form solution.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .controller import ControllerConfig, ControllerGains, FilterState, filtered_derivative
from .geometry import (LinkGeometry, gravity_reaction_force, moment_arm, sea_length, sea_length_rate,
                       default_geometry)
from .plant import (IDENTIFIED_VELOCITY_POLE, DisturbanceProfile, MotorParams, PlantParams, PlantState,
                    joint_accel, joint_drift, joint_energy, joint_input_gain, reduce_motor_model)
from .reference import ConstantReference, ReferenceSpec, synthetic_walking_cycle
from .simulator import (PlantKernel, SimConfig, chatter_band, run_ideal_actuator, run_simulation,
                        write_trace_csv)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    results: tuple

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        return [r.line() for r in self.results]

    def __getitem__(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


# --------------------------------------------------------------------------
# Coordinate oracle

def linkage_points(d1, d2, d3, d4, d5, theta):
    """E, C, B as 2-D points from the measured lengths only."""
    cE = math.hypot(d1, d2 + d3)
    C = np.array([cE * math.sin(theta), -cE * math.cos(theta)])
    B = np.array([-d5, d4])
    return np.zeros(2), C, B


def oracle_length_and_arm(measured, theta):
    E, C, B = linkage_points(*measured, theta)
    CB = C - B
    length = math.hypot(*CB)
    # signed distance from E to line CB (cross product of B and C over |CB|)
    return length, (B[0] * C[1] - B[1] * C[0]) / length


def _check_geometry(geom: LinkGeometry, n: int = 10_000):
    thetas = np.linspace(-math.pi / 2, math.pi / 2, n)
    worst_len = worst_arm = 0.0
    for th in thetas:
        ref_len, ref_arm = oracle_length_and_arm(geom.measured, th)
        worst_len = max(worst_len, abs(sea_length(geom, th) - ref_len) / ref_len)
        worst_arm = max(worst_arm, abs(moment_arm(geom, th) - ref_arm) / geom.d6)
    return worst_len, worst_arm


# --------------------------------------------------------------------------

def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        passed, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        passed, detail = False, f"error={type(exc).__name__}: {exc}"
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def run_validation_suite(geom: Optional[LinkGeometry] = None, dt_plant: float = 1e-4,
                         params: Optional[PlantParams] = None, full: bool = True) -> ValidationReport:
    """Run every invariant check. ``full=False`` skips the 8 s closed-loop scenarios.

    ``geom`` and ``dt_plant`` exist for fault injection: a perturbed
    geometry must trip the oracle checks, a coarse step the integrator checks.
    """
    geom = default_geometry() if geom is None else geom
    params = PlantParams() if params is None else params
    rng = np.random.default_rng(20240601)
    checks: list[tuple[str, Callable]] = []

    def check(name):
        def register(fn):
            checks.append((name, fn))
            return fn
        return register

    @check("geometry.law_of_cosines")
    def _():
        worst_len, _ = _check_geometry(geom)
        return worst_len <= 1e-12, f"max_rel={worst_len:.3g} tol=1e-12"

    @check("geometry.moment_arm_oracle")
    def _():
        _, worst_arm = _check_geometry(geom)
        return worst_arm <= 1e-12, f"max_rel={worst_arm:.3g} tol=1e-12"

    @check("geometry.torque_identity")
    def _():
        worst = 0.0
        for phi in rng.uniform(-1.0, 1.0, 2000):
            expected = params.m * params.g * geom.d3 * math.sin(phi)
            if abs(expected) < 1e-9:
                continue
            got = gravity_reaction_force(geom, params.m, params.g, phi) * moment_arm(geom, phi - geom.alpha)
            worst = max(worst, abs(got - expected) / abs(expected))
        return worst <= 1e-12, f"max_rel={worst:.3g} tol=1e-12"

    @check("geometry.length_derivative")
    def _():
        h = 1e-6
        worst = max(abs((sea_length(geom, th + h) - sea_length(geom, th - h)) / (2 * h) - sea_length_rate(geom, th))
                    for th in np.linspace(-1.2, 1.2, 241))
        return worst <= 1e-6, f"max_abs={worst:.3g} tol=1e-6"

    @check("plant.state_space_consistency")
    def _():
        worst = 0.0
        for phi, phi_dot, delta, tau_D in zip(rng.uniform(-1, 1, 1000), rng.uniform(-5, 5, 1000),
                                              rng.uniform(-0.01, 0.01, 1000), rng.uniform(-1, 1, 1000)):
            lhs = joint_accel(params, geom, PlantState(phi, phi_dot, delta, 0.0), tau_D)
            rhs = joint_input_gain(params, geom, phi) * delta + joint_drift(params, geom, phi, phi_dot, tau_D)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
        return worst <= 1e-12, f"max_rel={worst:.3g} tol=1e-12"

    @check("plant.superposition")
    def _():
        worst = 0.0
        for phi, phi_dot, d_a, d_b, t_a, t_b in rng.uniform(-0.5, 0.5, (200, 6)):
            base = joint_accel(params, geom, PlantState(phi, phi_dot, 0.0, 0.0), 0.0)

            def acc(delta, tau):
                return joint_accel(params, geom, PlantState(phi, phi_dot, delta * 1e-2, 0.0), tau) - base

            worst = max(worst, abs(acc(d_a + d_b, 0) - acc(d_a, 0) - acc(d_b, 0)),
                        abs(acc(0, t_a + t_b) - acc(0, t_a) - acc(0, t_b)))
        return worst <= 1e-9, f"max_abs={worst:.3g} tol=1e-9"

    @check("plant.damped_energy")
    def _():
        cfg = SimConfig(dt_plant=dt_plant, controller=ControllerConfig(update_period=dt_plant), duration=2.0,
                        decimation=1, initial=PlantState(0.6, 0.0, 0.0, 0.0), mode="spring_freeze",
                        params=params, links=geom.measured, reference=ReferenceSpec(kind="constant"))
        res = run_simulation(cfg)
        if not res.ok:
            return False, f"run={res.status}"
        tr = res.trace
        energy = np.array([joint_energy(params, geom, p, v) for p, v in zip(tr.phi, tr.phi_dot)])
        rise = float(np.max(np.diff(energy)))
        return rise <= 1e-9 * energy[0], f"max_rise={rise:.3g} J"

    @check("integrator.harmonic_spring")
    def _():
        # without gravity F_R vanishes and delta decouples from the joint
        kernel = PlantKernel(replace(params, g=0.0), geom)
        x, worst, steps = (0.0, 0.0, 1e-3, 0.0), 0.0, int(round(1.0 / dt_plant))
        omega, none = params.omega, DisturbanceProfile()
        for i in range(steps):
            x = kernel.step(x, i * dt_plant, dt_plant, 0.0, none)
            worst = max(worst, abs(x[2] - 1e-3 * math.cos(omega * (i + 1) * dt_plant)))
        return worst <= 1e-6, f"max_abs={worst:.3g} m tol=1e-6 dt={dt_plant:g}"

    @check("integrator.richardson_order")
    def _():
        order = richardson_order(params, geom, h=8 * dt_plant)
        return 3.5 <= order <= 4.5, f"observed_order={order:.3f} expected=4"

    @check("controller.reaching")
    def _():
        gains, cfg = ControllerGains(), ControllerConfig(update_period=max(dt_plant, 1e-4))
        tr = run_ideal_actuator(params, geom, gains, ConstantReference(0.2), duration=2.0,
                                dt_plant=dt_plant, cfg=cfg)
        below = np.nonzero(np.abs(tr.sigma) < 0.01)[0]
        band = chatter_band(gains.rho, cfg.update_period)
        outside = np.abs(tr.sigma[:-1]) > band
        rise = float(np.max(np.diff(tr.V)[outside], initial=-math.inf))
        reach = tr.t[below[0]] if below.size else math.inf
        return reach <= 2.0 and rise <= 0.0, f"reach_time={reach:.4g} s max_dV={rise:.3g}"

    @check("controller.filter_ramp")
    def _():
        dt, tau, mem, est = 1e-3, 1e-2, FilterState(), 0.0
        for i in range(200):
            est, mem = filtered_derivative(2.0 * i * dt, dt, tau, mem)
        return abs(est - 2.0) <= 0.02, f"estimate={est:.6g} expected=2"

    @check("reference.triple_consistency")
    def _():
        src = synthetic_walking_cycle()
        ts = np.arange(0.0, 2.0 + 1e-4 / 2, 1e-4)
        samples = [src.sample(t) for t in ts]
        acc = np.array([s.phi_d_ddot for s in samples])
        vel = samples[0].phi_d_dot + np.concatenate(([0.0], np.cumsum((acc[1:] + acc[:-1]) * 0.5e-4)))
        pos = samples[0].phi_d + np.concatenate(([0.0], np.cumsum((vel[1:] + vel[:-1]) * 0.5e-4)))
        worst = float(np.max(np.abs(pos - [s.phi_d for s in samples])))
        return worst < 1e-3, f"max_abs={worst:.3g} rad tol=1e-3"

    @check("motor.reduction")
    def _():
        red = reduce_motor_model(MotorParams())
        dev = abs(red.pole_deviation(IDENTIFIED_VELOCITY_POLE))
        neglect = red.neglect_ratio(ControllerGains().c)
        return dev < 0.01 and neglect < 0.01, f"c_v={red.c_v:.4f} deviation={dev:.4%} neglect={neglect:.4%}"

    @check("simulator.zoh_breakpoints")
    def _():
        period = 10 * dt_plant
        cfg = SimConfig(dt_plant=dt_plant, duration=2.0, decimation=1, params=params, links=geom.measured,
                        controller=ControllerConfig(update_period=period), reference=ReferenceSpec(kind="step"))
        tr = run_simulation(cfg).trace
        changes = np.nonzero(np.diff(tr.U_eq) != 0.0)[0] + 1
        off_grid = [i for i in changes if i % 10]
        return len(tr) > 1 and not off_grid, f"changes={changes.size} off_grid={len(off_grid)}"

    @check("simulator.determinism")
    def _():
        import os, tempfile
        cfg = SimConfig(dt_plant=dt_plant, duration=2.0, params=params, links=geom.measured,
                        controller=ControllerConfig(update_period=dt_plant))
        blobs = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                path = os.path.join(tmp, "trace.csv")
                write_trace_csv(path, run_simulation(cfg).trace)
                with open(path, "rb") as fh:
                    blobs.append(fh.read())
        return blobs[0] == blobs[1], f"bytes={len(blobs[0])}"

    if full:
        @check("simulator.tracking_bound")
        def _():
            cfg = SimConfig(dt_plant=dt_plant, controller=ControllerConfig(update_period=dt_plant),
                            params=params, links=geom.measured)
            res = run_simulation(cfg)
            if not res.ok:
                return False, f"run={res.status}"
            worst = res.metrics.max_abs_error_after_transient
            return worst <= 0.02, f"max_abs_e1={worst:.3g} rad tol=0.02"

        @check("simulator.dt_halving")
        def _():
            drift = dt_halving_drift(dt_plant, params, geom)
            return drift < 1e-4, f"linf_phi={drift:.3g} rad tol=1e-4"

    return ValidationReport(tuple(_timed(name, fn) for name, fn in checks))


def pendulum_endpoint(params: PlantParams, geom: LinkGeometry, h: float, duration: float = 1.0,
                      phi0: float = 0.5) -> float:
    """phi(duration) of the unforced damped pendulum (spring frozen at zero) with step h."""
    kernel = PlantKernel(params, geom, freeze_spring=True)
    x, none = (phi0, 0.0, 0.0, 0.0), DisturbanceProfile()
    steps = int(round(duration / h))
    for i in range(steps):
        x = kernel.step(x, i * h, h, 0.0, none)
    return x[0]


def richardson_order(params: PlantParams, geom: LinkGeometry, h: float) -> float:
    """log2 of successive-difference ratio at steps h, h/2, h/4."""
    a, b, c = (pendulum_endpoint(params, geom, h / s) for s in (1, 2, 4))
    if not all(map(math.isfinite, (a, b, c))) or b == c:
        return math.nan
    return math.log2(abs(a - b) / abs(b - c))


def dt_halving_drift(dt_plant: float, params: PlantParams, geom: LinkGeometry) -> float:
    """L-inf phi difference between the default scenario at dt and dt/2 (same control rate)."""
    period = dt_plant
    base = SimConfig(dt_plant=dt_plant, controller=ControllerConfig(update_period=period),
                     params=params, links=geom.measured, decimation=1)
    fine = replace(base, dt_plant=dt_plant / 2, decimation=2)
    a, b = run_simulation(base), run_simulation(fine)
    if not (a.ok and b.ok):
        return math.inf
    return float(np.max(np.abs(a.trace.phi - b.trace.phi)))
