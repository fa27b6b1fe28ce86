import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import cached_run
from seajoint.controller import ControllerConfig, ControllerGains, nominal_input_gain
from seajoint.errors import ConfigError, DivergenceError, MetricError
from seajoint.plant import DisturbanceProfile, PlantParams, PlantState, plant_derivative
from seajoint.reference import ReferenceSpec
from seajoint.simulator import (TRACE_FIELDS, Metrics, MetricSettings, PlantKernel, SimConfig, Trace,
                                compute_metrics, gain_sweep, plot_trace_svg, rk4_step, run_simulation,
                                write_sweep_csv, write_trace_csv)

STEP = ReferenceSpec("step", step_size=0.3)


def pendulum_rhs(params, geom):
    inertia = params.m * geom.d3 ** 2

    def rhs(_t, y):
        return [y[1], (-params.m * params.g * geom.d3 * math.sin(y[0]) - params.B * y[1]) / inertia]
    return rhs


# --------------------------------------------------------------------------
# Integrator

def test_zero_vector_field_leaves_state_unchanged(params, geom):
    assert rk4_step(params, geom, PlantState(), 0.0, 1e-3, 0.0) == PlantState()


def test_kernel_agrees_with_plant_derivative(params, geom):
    kernel = PlantKernel(params, geom)
    for s in (PlantState(0.3, -0.2, 0.004, 0.1), PlantState(-0.7, 1.5, -0.01, -2.0)):
        for U, tau in ((0.0, 0.0), (12.5, 0.3)):
            assert kernel.derivative(tuple(s), U, tau) == pytest.approx(
                tuple(plant_derivative(params, geom, s, U, tau)), rel=1e-13, abs=1e-13)


def test_pure_spring_matches_cosine(geom):
    # with g = 0 the hanging joint feels no gravity, so phi stays at 0 and the spring is a free oscillator
    params = PlantParams(g=0.0)
    state, dt = PlantState(0.0, 0.0, 0.001, 0.0), 1e-4
    worst = 0.0
    for i in range(1, 10_001):
        state = rk4_step(params, geom, state, (i - 1) * dt, dt, 0.0)
        worst = max(worst, abs(state.delta - 0.001 * math.cos(100.0 * i * dt)))
    assert worst < 1e-6


def test_pendulum_against_reference_solver_and_fourth_order(params, geom):
    y0, T = (0.5, 0.0), 1.0
    ref = solve_ivp(pendulum_rhs(params, geom), (0, T), y0, method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]

    def endpoint(dt):
        s = PlantState(y0[0], y0[1], 0.0, 0.0)
        n = int(round(T / dt))
        for i in range(n):
            s = rk4_step(params, geom, s, i * dt, dt, 0.0, freeze_spring=True)
        return np.array([s.phi, s.phi_dot])

    errors = [np.max(np.abs(endpoint(dt) - ref)) for dt in (2e-3, 1e-3)]
    assert errors[1] < 1e-9
    assert 16 * 0.8 <= errors[0] / errors[1] <= 16 * 1.2


def test_disturbance_enters_the_joint_equation(params, geom):
    dist = DisturbanceProfile("constant", 0.4)
    moved = rk4_step(params, geom, PlantState(), 0.0, 1e-4, 0.0, dist)
    inertia = params.m * geom.d3 ** 2
    beta = params.B / inertia  # gravity is negligible this close to phi = 0
    assert moved.phi_dot == pytest.approx(0.4 / params.B * (1 - math.exp(-beta * 1e-4)), rel=1e-5)


def test_non_finite_result_raises_divergence(params, geom):
    with pytest.raises(DivergenceError):
        rk4_step(params, geom, PlantState(0.0, 0.0, 1e5, 0.0), 0.0, 1e-3, 1e12)
    with pytest.raises(ValueError):
        rk4_step(params, geom, PlantState(), 0.0, 0.0, 0.0)


# --------------------------------------------------------------------------
# Configuration

@pytest.mark.parametrize("kwargs, key", [
    ({"dt_plant": 0.0}, "sim.dt_plant"),
    ({"duration": -1.0}, "sim.duration"),
    ({"decimation": 0}, "sim.decimation"),
    ({"mode": "turbo"}, "sim.mode"),
    ({"controller": ControllerConfig(update_period=1.5e-4)}, "controller.update_period"),
    ({"duration": 1.0}, "sim.duration"),
    ({"duration": 0.4, "reference": STEP}, "sim.duration"),
])
def test_sim_config_invariants(kwargs, key):
    with pytest.raises(ConfigError) as info:
        SimConfig(**kwargs)
    assert info.value.key == key


def test_sim_config_rejects_range_through_singularity():
    with pytest.raises(Exception) as info:
        SimConfig(theta_range=(-1.2, 1.4))
    assert "singular" in type(info.value).__name__.lower()


# --------------------------------------------------------------------------
# Runs

def test_equilibrium_is_invariant():
    result = run_simulation(SimConfig(reference=ReferenceSpec("constant", value=0.0), duration=1.0))
    assert result.ok
    assert not result.trace.phi.any()
    assert not result.trace.U_eq.any()
    assert not result.trace.e1.any()


def test_trace_invariants_and_decimation():
    cfg = SimConfig(reference=STEP, duration=0.6, decimation=7)
    trace = cached_run(cfg).trace
    assert np.all(np.diff(trace.t) > 0)
    assert np.array_equal(trace.e1, trace.phi_d - trace.phi)
    assert len(trace) == 6000 // 7 + 2  # every 7th step plus the final sample
    assert trace.t[-1] == pytest.approx(0.6)


def test_identical_configs_give_identical_bytes(tmp_path):
    cfg = SimConfig(reference=STEP, duration=0.6)
    write_trace_csv(tmp_path / "a.csv", run_simulation(cfg).trace)
    write_trace_csv(tmp_path / "b.csv", run_simulation(cfg).trace)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_zero_order_hold_breakpoints():
    cfg = SimConfig(reference=STEP, duration=0.6, decimation=1, controller=ControllerConfig(update_period=5e-4))
    trace = run_simulation(cfg).trace
    steps = np.rint(trace.t / cfg.dt_plant).astype(int)
    changed = np.nonzero(np.diff(trace.U_eq))[0] + 1
    assert len(changed) > 100
    assert np.all(steps[changed] % cfg.hold_steps == 0)


def test_spring_freeze_dissipates_energy(params, geom):
    cfg = SimConfig(mode="spring_freeze", initial=PlantState(0.6, 0.0, 0.0, 0.0), duration=2.0, decimation=1,
                    reference=STEP)
    result = run_simulation(cfg)
    assert result.ok and not result.trace.U_eq.any()
    tr = result.trace
    energy = 0.5 * params.m * geom.d3 ** 2 * tr.phi_dot ** 2 + params.m * params.g * geom.d3 * (1 - np.cos(tr.phi))
    assert np.all(np.diff(energy) <= 1e-12)
    assert energy[-1] < energy[0]


def test_literal_weighting_diverges_and_is_reported(params, geom):
    ctl = ControllerConfig(coupling_rate=nominal_input_gain(params, geom))
    result = run_simulation(SimConfig(reference=STEP, duration=0.6, controller=ctl))
    assert result.status == "diverged"
    assert result.metrics is None
    assert 0 < result.error.t < 0.6
    assert len(result.trace) > 0
    with pytest.raises(DivergenceError):
        result.raise_for_status()


def test_leaving_operating_range_is_reported():
    result = run_simulation(SimConfig(reference=STEP, duration=0.6, initial=PlantState(1.5, 0, 0, 0)))
    assert result.status == "out_of_range"
    assert result.error.t == 0.0


def test_gait_tracking_example():
    result = cached_run(SimConfig())
    assert result.ok
    assert result.metrics.max_abs_error_after_transient <= 0.02


# --------------------------------------------------------------------------
# Metrics

def make_trace(t, e1, sigma=None, phi=None):
    t = np.asarray(t, dtype=float)
    cols = dict.fromkeys(TRACE_FIELDS, np.zeros_like(t))
    cols.update(t=t, e1=np.asarray(e1, dtype=float))
    if sigma is not None:
        cols["sigma"] = np.asarray(sigma, dtype=float)
    if phi is not None:
        cols["phi"] = np.asarray(phi, dtype=float)
    return Trace(np.column_stack([cols[name] for name in TRACE_FIELDS]))


def test_perfect_tracking_metrics():
    t = np.linspace(0, 2, 2001)
    m = compute_metrics(make_trace(t, np.zeros_like(t)))
    assert m.as_dict() == {"transient_time": 0.0, "max_abs_error_after_transient": 0.0,
                           "steady_state_error": 0.0, "overshoot_fraction": 0.0, "sigma_rms_steady": 0.0}
    assert set(m.windows) >= {"transient_time", "steady_state_error", "max_abs_error_after_transient"}


def test_inserted_peak_is_found():
    t = np.linspace(0, 2, 2001)
    e1 = np.where(np.isclose(t, 1.0), 0.05, 0.001)
    m = compute_metrics(make_trace(t, e1))
    assert m.max_abs_error_after_transient == 0.05
    assert m.steady_state_error == pytest.approx(0.001)


def test_transient_time_needs_a_sustained_stretch():
    t = np.linspace(0, 3, 3001)
    e1 = np.where(t < 1.0, 0.1, 0.0)
    e1[(t > 1.1) & (t < 1.15)] = 0.03  # brief excursion resets the clock
    assert compute_metrics(make_trace(t, e1)).transient_time == pytest.approx(1.15, abs=2e-3)
    assert math.isinf(compute_metrics(make_trace(t, np.full_like(t, 0.5))).transient_time)


def test_sigma_rms_and_overshoot():
    t = np.linspace(0, 1, 1001)
    sigma = np.where(t >= 0.8, 2.0, 0.0)
    phi = np.minimum(0.36, 3 * t)
    phi[-300:] = 0.3
    m = compute_metrics(make_trace(t, np.zeros_like(t), sigma, phi), MetricSettings(step_size=0.3))
    assert m.sigma_rms_steady == pytest.approx(2.0)
    assert m.overshoot_fraction == pytest.approx(0.2)
    down = compute_metrics(make_trace(t, np.zeros_like(t), phi=-phi), MetricSettings(step_size=-0.3))
    assert down.overshoot_fraction == pytest.approx(0.2)


def test_metric_errors():
    with pytest.raises(MetricError):
        compute_metrics(make_trace([0.0], [0.0]))
    with pytest.raises(MetricError):
        compute_metrics(make_trace([0.0, 0.1, 0.2], [0, 0, 0]))


# --------------------------------------------------------------------------
# Sweeps and files

SHORT_STEP = SimConfig(reference=STEP, duration=1.0)


def test_single_value_sweep_matches_direct_run():
    (row,) = gain_sweep(SHORT_STEP, "c", [10.0])
    assert row.status == "ok" and row.error is None
    assert row.metrics == run_simulation(SHORT_STEP).metrics


def test_parallel_sweep_keeps_input_order_and_embeds_failures():
    bad = replace(SHORT_STEP, controller=ControllerConfig(coupling_rate=nominal_input_gain(PlantParams(),
                                                                                        SHORT_STEP.geometry)))
    rows = gain_sweep(bad, "k2", [20.0, 5.0], jobs=2)
    assert [r.value for r in rows] == [20.0, 5.0]
    assert all(r.status == "diverged" and r.metrics is None and r.error for r in rows)
    ok_rows = gain_sweep(SHORT_STEP, "rho", [30.0, 3.0], jobs=2)
    serial = gain_sweep(SHORT_STEP, "rho", [30.0, 3.0])
    assert [r.metrics for r in ok_rows] == [r.metrics for r in serial]


def test_sweep_argument_validation():
    with pytest.raises(ConfigError):
        gain_sweep(SHORT_STEP, "zeta", [1.0])
    with pytest.raises(ConfigError):
        gain_sweep(SHORT_STEP, "c", [10.0, -1.0])


def test_csv_layout(tmp_path):
    trace = make_trace([0.0, 0.1], [1 / 3, 0.0])
    write_trace_csv(tmp_path / "t.csv", trace)
    raw = (tmp_path / "t.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0].split(",") == list(TRACE_FIELDS)
    assert float(lines[1].split(",")[TRACE_FIELDS.index("e1")]) == 1 / 3

    rows = gain_sweep(SHORT_STEP, "c", [10.0])
    write_sweep_csv(tmp_path / "s.csv", "c", rows)
    header, row = (tmp_path / "s.csv").read_text().splitlines()
    assert header.split(",")[:3] == ["axis", "value", "status"]
    assert header.split(",")[3:-1] == list(Metrics.NAMES)
    assert row.startswith("c,10,ok,")


def test_svg_plot(tmp_path):
    pytest.importorskip("matplotlib")
    t = np.linspace(0, 1, 50)
    plot_trace_svg(tmp_path / "p.svg", make_trace(t, 0.01 * np.sin(t)))
    text = (tmp_path / "p.svg").read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text
