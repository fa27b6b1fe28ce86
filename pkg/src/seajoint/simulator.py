"""Closed-loop runs: fixed-step RK4 plant, sampled controller, traces, metrics, sweeps."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .controller import Controller, ControllerConfig, ControllerGains, switching, with_gain
from .errors import (ConfigError, DivergenceError, MetricError, OperatingRangeError,
                     SeaJointError, SingularConfigurationError)
from .geometry import (DEFAULT_THETA_RANGE, SINGULAR_ARM, LinkGeometry, check_operating_range,
                       derive_geometry, moment_arm)
from .plant import DisturbanceProfile, PlantParams, PlantState, evaluate_disturbance
from .reference import ReferenceSpec, TrajectorySample

DEFAULT_LINKS = (0.0280, 0.0525, 0.0525, 0.0350, 0.1180)
DIVERGENCE_LIMIT = 1e6
SIM_MODES = ("closed_loop", "open_loop", "spring_freeze")
TRACE_FIELDS = ("t", "phi_d", "phi", "phi_dot", "e1", "sigma", "delta", "delta_dot",
                "u_x", "u1", "U_eq", "tau_SEA", "tau_D")


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a run. Two equal configs give byte-equal traces."""

    dt_plant: float = 1e-4
    duration: float = 8.0
    decimation: int = 10
    initial: PlantState = PlantState()
    params: PlantParams = PlantParams()
    links: tuple = DEFAULT_LINKS
    gains: ControllerGains = ControllerGains()
    controller: ControllerConfig = ControllerConfig()
    disturbance: DisturbanceProfile = DisturbanceProfile()
    reference: ReferenceSpec = ReferenceSpec()
    # closed_loop | open_loop (U_eq = 0) | spring_freeze (delta'' forced to 0)
    mode: str = "closed_loop"
    theta_range: tuple = DEFAULT_THETA_RANGE
    transient_window: float = 0.5
    output: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "initial", PlantState(*map(float, self.initial)))
        object.__setattr__(self, "links", tuple(float(v) for v in self.links))
        object.__setattr__(self, "theta_range", tuple(float(v) for v in self.theta_range))
        if not (self.dt_plant > 0 and math.isfinite(self.dt_plant)):
            raise ConfigError("sim.dt_plant", f"must be > 0, got {self.dt_plant!r}")
        if not self.duration > 0:
            raise ConfigError("sim.duration", f"must be > 0, got {self.duration!r}")
        if not self.duration > self.transient_window:
            raise ConfigError("sim.duration", f"{self.duration!r} s leaves no samples after the "
                                              f"{self.transient_window!r} s transient window")
        if not (isinstance(self.decimation, int) and self.decimation >= 1):
            raise ConfigError("sim.decimation", f"must be an integer >= 1, got {self.decimation!r}")
        if self.mode not in SIM_MODES:
            raise ConfigError("sim.mode", f"unknown mode {self.mode!r}; expected one of {SIM_MODES}")
        ratio = self.controller.update_period / self.dt_plant
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigError("controller.update_period",
                              f"{self.controller.update_period!r} is not an integer multiple of dt_plant={self.dt_plant!r}")
        period = self.reference.period_s
        if self.reference.periodic and period is not None and self.duration < period * (1 - 1e-12):
            raise ConfigError("sim.duration", f"{self.duration!r} s is shorter than one reference period ({period!r} s)")
        if len(self.links) != 5:
            raise ConfigError("geometry", "expected the five measured lengths d1..d5")
        check_operating_range(self.geometry, self.theta_range)

    @property
    def geometry(self) -> LinkGeometry:
        return derive_geometry(*self.links)

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt_plant))

    @property
    def hold_steps(self) -> int:
        return int(round(self.controller.update_period / self.dt_plant))

    @property
    def phi_range(self) -> tuple[float, float]:
        alpha = self.geometry.alpha
        return (self.theta_range[0] + alpha, self.theta_range[1] + alpha)


class TraceRecord(NamedTuple):
    t: float
    phi_d: float
    phi: float
    phi_dot: float
    e1: float
    sigma: float
    delta: float
    delta_dot: float
    u_x: float
    u1: float
    U_eq: float
    tau_SEA: float
    tau_D: float


class Trace:
    """Column store of logged :class:`TraceRecord` rows."""

    def __init__(self, rows: Sequence[Sequence[float]]):
        data = np.asarray(rows, dtype=float).reshape(-1, len(TRACE_FIELDS))
        self.data = data
        for i, name in enumerate(TRACE_FIELDS):
            setattr(self, name, data[:, i])

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i) -> TraceRecord:
        return TraceRecord(*map(float, self.data[i]))

    def records(self):
        for row in self.data:
            yield TraceRecord(*map(float, row))

    def window(self, t0: float, t1: float = math.inf) -> np.ndarray:
        """Boolean mask for rows with t0 <= t <= t1."""
        return (self.t >= t0) & (self.t <= t1)


# --------------------------------------------------------------------------
# Integration

class PlantKernel:
    """Fast scalar vector field and RK4 step for one (params, geometry) pair."""

    def __init__(self, params: PlantParams, geom: LinkGeometry, freeze_spring: bool = False):
        self.geom = geom
        self.freeze_spring = freeze_spring
        self._alpha = geom.alpha
        self._inertia = params.m * geom.d3 * geom.d3
        self._mgd = params.m * params.g * geom.d3
        self._B, self._k = params.B, params.k
        self._w2 = params.omega_sq
        self._ms = params.spring_mass

    def derivative(self, x, U_eq: float, tau_D: float, t: Optional[float] = None):
        phi, phi_dot, delta, delta_dot = x
        arm = moment_arm(self.geom, phi - self._alpha)
        gravity = self._mgd * math.sin(phi)
        phi_ddot = (-gravity - self._B * phi_dot + tau_D - self._k * delta * arm) / self._inertia
        if self.freeze_spring:
            return phi_dot, phi_ddot, delta_dot, 0.0
        if abs(arm) < SINGULAR_ARM:
            raise SingularConfigurationError(phi, arm, t)
        return phi_dot, phi_ddot, delta_dot, -self._w2 * delta - gravity / arm / self._ms + U_eq

    def step(self, x, t: float, dt: float, U_eq: float, disturbance: DisturbanceProfile):
        f = self.derivative
        h = 0.5 * dt
        d0 = evaluate_disturbance(disturbance, t)
        dm = evaluate_disturbance(disturbance, t + h)
        d1 = evaluate_disturbance(disturbance, t + dt)
        k1 = f(x, U_eq, d0, t)
        k2 = f(tuple(a + h * b for a, b in zip(x, k1)), U_eq, dm, t)
        k3 = f(tuple(a + h * b for a, b in zip(x, k2)), U_eq, dm, t)
        k4 = f(tuple(a + dt * b for a, b in zip(x, k3)), U_eq, d1, t)
        s = dt / 6.0
        return tuple(a + s * (p + 2.0 * q + 2.0 * r + w) for a, p, q, r, w in zip(x, k1, k2, k3, k4))


def _diverged(x) -> bool:
    return any(not (abs(v) <= DIVERGENCE_LIMIT) for v in x)


def rk4_step(params: PlantParams, geom: LinkGeometry, state: PlantState, t: float, dt: float,
             U_eq: float, disturbance: DisturbanceProfile = DisturbanceProfile(),
             freeze_spring: bool = False) -> PlantState:
    """Classical RK4 advance with ``U_eq`` held over the step."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    x = PlantKernel(params, geom, freeze_spring).step(tuple(state), t, dt, U_eq, disturbance)
    if _diverged(x):
        raise DivergenceError(t + dt, x)
    return PlantState(*x)


# --------------------------------------------------------------------------
# Metrics

@dataclass(frozen=True)
class MetricSettings:
    transient_window: float = 0.5
    error_band: float = 0.02
    band_hold: float = 0.2
    steady_fraction: float = 0.2
    # step references only
    step_size: Optional[float] = None
    step_time: float = 0.0

    @classmethod
    def for_config(cls, cfg: SimConfig) -> "MetricSettings":
        ref = cfg.reference
        if ref.kind == "step":
            return cls(transient_window=cfg.transient_window, step_size=ref.step_size, step_time=ref.step_time)
        return cls(transient_window=cfg.transient_window)


@dataclass(frozen=True)
class Metrics:
    transient_time: float
    max_abs_error_after_transient: float
    steady_state_error: float
    overshoot_fraction: float
    sigma_rms_steady: float
    # metric name -> (t_start, t_end) of the samples it was computed over
    windows: dict = field(default_factory=dict, compare=False)

    NAMES = ("transient_time", "max_abs_error_after_transient", "steady_state_error",
             "overshoot_fraction", "sigma_rms_steady")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.NAMES}


def compute_metrics(trace: Trace, settings: MetricSettings = MetricSettings()) -> Metrics:
    if len(trace) < 2:
        raise MetricError("trace needs at least two rows")
    t, e1, sigma, phi = trace.t, trace.e1, trace.sigma, trace.phi
    t_end = float(t[-1])
    abs_e = np.abs(e1)

    # first instant that starts a >= band_hold stretch inside the error band
    transient, run_start = math.inf, None
    for ti, inside in zip(t, abs_e < settings.error_band):
        if not inside:
            run_start = None
            continue
        if run_start is None:
            run_start = float(ti)
        if ti - run_start >= settings.band_hold - 1e-12:
            transient = run_start
            break
    windows = {"transient_time": (float(t[0]), t_end if math.isinf(transient) else transient + settings.band_hold)}

    after = t > settings.transient_window
    if not after.any():
        raise MetricError(f"no samples after the transient window ({settings.transient_window} s)")
    max_after = float(abs_e[after].max())
    windows["max_abs_error_after_transient"] = (float(t[after][0]), t_end)

    t_steady = t_end - settings.steady_fraction * (t_end - float(t[0]))
    tail = t >= t_steady
    if tail.sum() < 2:
        raise MetricError("trace shorter than the steady-state window")
    windows["steady_state_error"] = windows["sigma_rms_steady"] = (float(t[tail][0]), t_end)
    sse = float(abs_e[tail].mean())
    srms = float(np.sqrt(np.mean(sigma[tail] ** 2)))

    overshoot = 0.0
    if settings.step_size:
        moving = t >= settings.step_time
        direction = math.copysign(1.0, settings.step_size)
        peak = float(np.max(direction * (phi[moving] - phi[-1])))
        overshoot = max(0.0, peak / abs(settings.step_size))
        windows["overshoot_fraction"] = (float(t[moving][0]), t_end)
    return Metrics(transient, max_after, sse, overshoot, srms, windows)


# --------------------------------------------------------------------------
# Runs

@dataclass
class SimResult:
    config: SimConfig
    trace: Trace
    metrics: Optional[Metrics]
    status: str = "ok"  # ok | diverged | singular | out_of_range
    error: Optional[SeaJointError] = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def raise_for_status(self) -> "SimResult":
        if self.error is not None:
            raise self.error
        return self


def run_simulation(cfg: SimConfig) -> SimResult:
    """Integrate ``cfg.duration`` with the controller sampled every ``update_period``.

    Failures (divergence, singular moment arm, leaving the operating range)
    stop the run and are returned in the result with the partial trace.
    """
    started = time.perf_counter()
    params, geom = cfg.params, cfg.geometry
    kernel = PlantKernel(params, geom, freeze_spring=cfg.mode == "spring_freeze")
    controller = Controller(params, geom, cfg.gains, cfg.controller)
    closed = cfg.mode == "closed_loop"
    source = cfg.reference.build(cfg.phi_range)
    dist = cfg.disturbance
    dt, n_steps, hold, dec = cfg.dt_plant, cfg.steps, cfg.hold_steps, cfg.decimation
    alpha, k = geom.alpha, params.k
    th_lo, th_hi = cfg.theta_range

    x = tuple(cfg.initial)
    cstate = controller.initial_state()
    U_eq = 0.0
    rows = []
    status, error = "ok", None
    for i in range(n_steps + 1):
        t = i * dt
        try:
            phi = x[0]
            if not th_lo <= phi - alpha <= th_hi:
                raise OperatingRangeError(t, phi, cfg.theta_range)
            ref = None
            if closed and i % hold == 0 and i < n_steps:
                ref = source.sample(t)
                U_eq, cstate = controller.step(ref, PlantState(*x), cstate)
            if i % dec == 0 or i == n_steps:
                ref = ref or source.sample(t)
                arm = moment_arm(geom, phi - alpha)
                rows.append((t, ref.phi_d, phi, x[1], ref.phi_d - phi, cstate.sigma, x[2], x[3],
                             cstate.u_x, cstate.u1, U_eq, -k * x[2] * arm, evaluate_disturbance(dist, t)))
            if i == n_steps:
                break
            x = kernel.step(x, t, dt, U_eq, dist)
            if _diverged(x):
                raise DivergenceError(t + dt, x)
        except DivergenceError as exc:
            status, error = "diverged", exc
            break
        except SingularConfigurationError as exc:
            if exc.t is None:
                exc = SingularConfigurationError(exc.phi, exc.arm, t)
            status, error = "singular", exc
            break
        except OperatingRangeError as exc:
            status, error = "out_of_range", exc
            break
    trace = Trace(rows)
    metrics = None
    if status == "ok":
        metrics = compute_metrics(trace, MetricSettings.for_config(cfg))
    return SimResult(cfg, trace, metrics, status, error, time.perf_counter() - started)


# --------------------------------------------------------------------------
# Ideal-actuator reduced loop (delta tracks u_x exactly)

class ReducedTrace(NamedTuple):
    t: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    phi: np.ndarray


def chatter_band(rho: float, update_period: float) -> float:
    """|sigma| below which sampled switching may overshoot zero: two held-switch increments."""
    return 2.0 * rho * update_period


def run_ideal_actuator(params: PlantParams, geom: LinkGeometry, gains: ControllerGains,
                       reference, phi0: float = 0.0, phi_dot0: float = 0.0, duration: float = 2.0,
                       dt_plant: float = 1e-4, cfg: ControllerConfig = ControllerConfig(),
                       disturbance: DisturbanceProfile = DisturbanceProfile()) -> ReducedTrace:
    """Joint-only loop with the spring deflection set to u_x at every controller update.

    Returns sigma and ``V = sigma^2 / 2`` at controller instants.
    """
    hold = int(round(cfg.update_period / dt_plant))
    inertia = params.m * geom.d3 ** 2
    mgd = params.m * params.g * geom.d3
    alpha = geom.alpha

    def accel(phi, phi_dot, delta, tau_D):
        arm = moment_arm(geom, phi - alpha)
        return (-mgd * math.sin(phi) - params.B * phi_dot + tau_D - params.k * delta * arm) / inertia

    phi, phi_dot = phi0, phi_dot0
    ts, sigmas, phis = [], [], []
    delta = 0.0
    n_steps = int(round(duration / dt_plant))
    for i in range(n_steps + 1):
        t = i * dt_plant
        if i % hold == 0:
            ref: TrajectorySample = reference.sample(t)
            arm = moment_arm(geom, phi - alpha)
            if abs(arm) < SINGULAR_ARM:
                raise SingularConfigurationError(phi, arm, t)
            g_x1 = -params.k * arm / inertia
            e1, e2 = ref.phi_d - phi, ref.phi_d_dot - phi_dot
            sigma = e2 + gains.c * e1
            f = -(params.B * phi_dot + mgd * math.sin(phi) - cfg.nominal_tau_D) / inertia
            delta = (gains.rho * switching(sigma, cfg.boundary_layer) + ref.phi_d_ddot - f + gains.c * e2) / g_x1
            ts.append(t)
            sigmas.append(sigma)
            phis.append(phi)
        if i == n_steps:
            break
        h = 0.5 * dt_plant
        d0 = evaluate_disturbance(disturbance, t)
        dm = evaluate_disturbance(disturbance, t + h)
        d1 = evaluate_disturbance(disturbance, t + dt_plant)
        a1 = accel(phi, phi_dot, delta, d0)
        a2 = accel(phi + h * phi_dot, phi_dot + h * a1, delta, dm)
        a3 = accel(phi + h * (phi_dot + h * a1), phi_dot + h * a2, delta, dm)
        a4 = accel(phi + dt_plant * (phi_dot + h * a2), phi_dot + dt_plant * a3, delta, d1)
        phi += dt_plant * (phi_dot + dt_plant * (a1 + a2 + a3) / 6.0)
        phi_dot += dt_plant * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0
    sig = np.array(sigmas)
    return ReducedTrace(np.array(ts), sig, 0.5 * sig ** 2, np.array(phis))


# --------------------------------------------------------------------------
# Gain sweeps

GAIN_AXES = ("c", "rho", "k1", "k2")


class SweepRow(NamedTuple):
    value: float
    status: str
    metrics: Optional[Metrics]
    error: Optional[str]


def _sweep_one(job) -> SweepRow:
    base, axis, value = job
    try:
        cfg = replace(base, gains=with_gain(base.gains, axis, value))
        result = run_simulation(cfg)
    except SeaJointError as exc:
        return SweepRow(value, "error", None, str(exc))
    return SweepRow(value, result.status, result.metrics, None if result.ok else str(result.error))


def gain_sweep(base: SimConfig, axis: str, values: Sequence[float], jobs: int = 1) -> list[SweepRow]:
    """One independent run per value, results in input order; failures are rows too."""
    if axis not in GAIN_AXES:
        raise ConfigError("sweep.axis", f"unknown gain {axis!r}; expected one of {GAIN_AXES}")
    values = [float(v) for v in values]
    for v in values:
        if not v > 0:
            raise ConfigError("sweep.values", f"gain values must be > 0, got {v!r}")
    work = [(base, axis, v) for v in values]
    if jobs <= 1 or len(work) <= 1:
        return [_sweep_one(job) for job in work]
    with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
        return list(pool.map(_sweep_one, work))


# --------------------------------------------------------------------------
# Output files

def _fmt(value) -> str:
    return format(float(value), ".17g")


def write_trace_csv(path, trace: Trace) -> None:
    lines = [",".join(TRACE_FIELDS)]
    lines += [",".join(map(_fmt, row)) for row in trace.data]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


SWEEP_FIELDS = ("axis", "value", "status") + Metrics.NAMES + ("error",)


def write_sweep_csv(path, axis: str, rows: Sequence[SweepRow]) -> None:
    lines = [",".join(SWEEP_FIELDS)]
    for row in rows:
        if row.metrics is None:
            cells = [""] * len(Metrics.NAMES)
        else:
            cells = [_fmt(v) for v in row.metrics.as_dict().values()]
        error = (row.error or "").replace(",", ";").replace("\n", " ")
        lines.append(",".join([axis, _fmt(row.value), row.status] + cells + [error]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def plot_trace_svg(path, trace: Trace) -> None:
    """Static SVG of (phi_d, phi) and e1 against time. Needs matplotlib."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ImportError("plotting needs matplotlib (pip install seajoint[plot])") from exc
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    top.plot(trace.t, trace.phi_d, label="phi_d")
    top.plot(trace.t, trace.phi, "--", label="phi")
    top.set_ylabel("angle [rad]")
    top.legend(loc="upper right")
    bottom.plot(trace.t, trace.e1)
    bottom.set_ylabel("e1 [rad]")
    bottom.set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

