"""Simulation of an SEA-driven hip joint under backstepping sliding-mode force control."""

from .config import ExperimentConfig, parse_config
from .controller import (Controller, ControllerConfig, ControllerGains, ControllerState, backstep_u1,
                         control_voltage, controller_step, filtered_derivative, sliding_sigma,
                         smc_virtual_control)
from .errors import (ConfigError, DivergenceError, GeometryError, IngestionError, MetricError,
                     OperatingRangeError, SeaJointError, SingularConfigurationError)
from .geometry import (LinkGeometry, derive_geometry, gravity_reaction_force, moment_arm, phi_from_theta,
                       sea_length, default_geometry, theta_from_phi)
from .plant import (DisturbanceProfile, MotorParams, PlantParams, PlantState, evaluate_disturbance,
                    joint_accel, plant_derivative, reduce_motor_model, sea_accel, sea_torque)
from .reference import (ReferenceSpec, TrajectorySample, load_trajectory_file, sample,
                        synthetic_walking_cycle)
from .simulator import (Metrics, SimConfig, SimResult, Trace, TraceRecord, compute_metrics, gain_sweep,
                        rk4_step, run_simulation)
from .validation import run_validation_suite

__version__ = "0.1.0"
