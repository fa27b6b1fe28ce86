"""Exception hierarchy shared by every module."""


class SeaJointError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(SeaJointError, ValueError):
    """Invalid linkage dimensions (names the offending field)."""

    def __init__(self, field, value, reason="must be > 0"):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r}: {reason}")


class SingularConfigurationError(SeaJointError, ArithmeticError):
    """Moment arm below the singularity tolerance; F_R and 1/g(x1) blow up."""

    def __init__(self, phi, arm, t=None):
        self.phi = phi
        self.arm = arm
        self.t = t
        where = "" if t is None else f" at t={t:.6g} s"
        super().__init__(f"singular configuration{where}: phi={phi:.6g} rad, moment arm={arm:.3g} m")


class DivergenceError(SeaJointError, ArithmeticError):
    def __init__(self, t, state):
        self.t = t
        self.state = state
        super().__init__(f"simulation diverged at t={t:.6g} s: state={state!r}")


class ConfigError(SeaJointError, ValueError):
    """Bad configuration key, type, or value. ``key`` is the dotted name."""

    def __init__(self, key, message, location=None):
        self.key = key
        self.message = message
        self.location = location
        loc = f" ({location})" if location else ""
        super().__init__(f"{key}{loc}: {message}")


class IngestionError(SeaJointError, ValueError):
    def __init__(self, message, row=None, path=None):
        self.row = row
        self.path = path
        parts = [str(path)] if path else []
        if row is not None:
            parts.append(f"row {row}")
        prefix = ":".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class MetricError(SeaJointError, ValueError):
    pass


class OperatingRangeError(SeaJointError, ArithmeticError):
    """Joint left the configured theta operating range during a run."""

    def __init__(self, t, phi, theta_range):
        self.t = t
        self.phi = phi
        self.theta_range = theta_range
        super().__init__(f"joint left operating range at t={t:.6g} s: phi={phi:.6g} rad, theta range {theta_range}")
