"""Desired hip trajectories: (phi_d, phi_d_dot, phi_d_ddot) as functions of time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, IngestionError
from .geometry import DEFAULT_THETA_RANGE, default_geometry


class TrajectorySample(NamedTuple):
    t: float
    phi_d: float
    phi_d_dot: float
    phi_d_ddot: float


# Peak of sin(x) - sin(2x)/2 is 3*sqrt(3)/4 at x = 2*pi/3.
_GAIT_SHAPE_PEAK = 3.0 * math.sqrt(3.0) / 4.0
DEFAULT_WALK_PERIOD = 1.6
DEFAULT_WALK_PEAK = 0.4
DEFAULT_WALK_HARMONICS = (
    (DEFAULT_WALK_PEAK / _GAIT_SHAPE_PEAK, 0.0),
    (0.5 * DEFAULT_WALK_PEAK / _GAIT_SHAPE_PEAK, math.pi),
)


def default_phi_range() -> tuple[float, float]:
    alpha = default_geometry().alpha
    return (DEFAULT_THETA_RANGE[0] + alpha, DEFAULT_THETA_RANGE[1] + alpha)


class ReferenceSource:
    """Base class. Subclasses implement ``_eval(t) -> (phi, phi_dot, phi_ddot)``."""

    kind = "abstract"
    duration: Optional[float] = None

    def sample(self, t: float) -> TrajectorySample:
        if t < 0.0 or (self.duration is not None and t > self.duration):
            raise ValueError(f"t={t!r} outside reference domain [0, {self.duration}]")
        return TrajectorySample(t, *self._eval(t))

    def _eval(self, t):
        raise NotImplementedError


def sample(source: ReferenceSource, t: float) -> TrajectorySample:
    return source.sample(t)


class HarmonicReference(ReferenceSource):
    """phi_d(t) = sum_i A_i sin(2 pi i t / period + psi_i), i = 1..n."""

    kind = "synthetic_walk"

    def __init__(self, period: float, harmonics: Sequence[tuple[float, float]]):
        self.period = float(period)
        self.harmonics = tuple((float(a), float(p)) for a, p in harmonics)
        self._w = tuple(2.0 * math.pi * (i + 1) / self.period for i in range(len(self.harmonics)))

    def _eval(self, t):
        phi = dphi = ddphi = 0.0
        for (amp, phase), w in zip(self.harmonics, self._w):
            arg = w * t + phase
            s, c = math.sin(arg), math.cos(arg)
            phi += amp * s
            dphi += amp * w * c
            ddphi -= amp * w * w * s
        return phi, dphi, ddphi


def synthetic_walking_cycle(period: float = DEFAULT_WALK_PERIOD,
                            harmonics: Optional[Sequence[tuple[float, float]]] = None,
                            phi_range: Optional[tuple[float, float]] = None) -> HarmonicReference:
    """Periodic gait stand-in built from sine harmonics of ``1/period``.

    The default two-harmonic shape ``A (sin wt - sin(2wt)/2)`` starts at rest
    (zero angle, rate and acceleration), peaks at +/-0.4 rad and has the
    sharp reversal at the peaks typical of hip flexion/extension.
    """
    if not period > 0:
        raise ConfigError("reference.period", f"must be > 0, got {period!r}")
    harmonics = DEFAULT_WALK_HARMONICS if harmonics is None else harmonics
    lo, hi = default_phi_range() if phi_range is None else phi_range
    bound = sum(abs(a) for a, _ in harmonics)
    if bound > min(-lo, hi):
        raise ConfigError("reference.harmonics",
                          f"total amplitude {bound:.4g} rad exceeds operating range [{lo:.4g}, {hi:.4g}]")
    return HarmonicReference(period, harmonics)


class SineReference(ReferenceSource):
    kind = "sine"

    def __init__(self, amplitude: float, frequency: float, offset: float = 0.0, phase: float = 0.0):
        self.amplitude, self.frequency, self.offset, self.phase = amplitude, frequency, offset, phase
        self._w = 2.0 * math.pi * frequency

    def _eval(self, t):
        arg = self._w * t + self.phase
        a, w = self.amplitude, self._w
        return self.offset + a * math.sin(arg), a * w * math.cos(arg), -a * w * w * math.sin(arg)


class ConstantReference(ReferenceSource):
    kind = "constant"

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def _eval(self, t):
        return self.value, 0.0, 0.0


class StepReference(ReferenceSource):
    """Step from ``initial`` to ``initial + size`` at ``time``.

    With ``smoothing > 0`` the jump is a quintic (minimum-jerk) blend over
    ``[time, time + smoothing]`` so phi_d_ddot is continuous. ``smoothing=0``
    gives the raw step with zero derivatives everywhere.
    """

    kind = "step"

    def __init__(self, size: float, time: float = 0.0, smoothing: float = 0.05, initial: float = 0.0):
        if smoothing < 0:
            raise ConfigError("reference.smoothing", "must be >= 0")
        self.size, self.time, self.smoothing, self.initial = size, time, smoothing, initial

    def _eval(self, t):
        if t < self.time:
            return self.initial, 0.0, 0.0
        w = self.smoothing
        if w == 0.0 or t >= self.time + w:
            return self.initial + self.size, 0.0, 0.0
        x = (t - self.time) / w
        s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        ds = 30.0 * x * x * (1.0 - x) ** 2
        dds = 60.0 * x * (1.0 - 3.0 * x + 2.0 * x * x)
        return self.initial + self.size * s, self.size * ds / w, self.size * dds / (w * w)


class FileReference(ReferenceSource):
    """Natural cubic spline through tabulated (t, phi_d); clamp-and-hold outside."""

    kind = "file"

    def __init__(self, t: np.ndarray, phi: np.ndarray, path: Optional[str] = None):
        self.path = path
        self.t = np.asarray(t, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.spline = CubicSpline(self.t, self.phi, bc_type="natural")
        self._d1 = self.spline.derivative(1)
        self._d2 = self.spline.derivative(2)
        self.t_min, self.t_max = float(self.t[0]), float(self.t[-1])

    def sample(self, t: float) -> TrajectorySample:
        if t <= self.t_min:
            return TrajectorySample(t, float(self.phi[0]), 0.0, 0.0)
        if t >= self.t_max:
            return TrajectorySample(t, float(self.phi[-1]), 0.0, 0.0)
        return TrajectorySample(t, float(self.spline(t)), float(self._d1(t)), float(self._d2(t)))


def load_trajectory_file(path) -> FileReference:
    """Read a ``t,phi_d`` CSV (SI units, ``#`` comments) into a spline reference."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read trajectory file: {exc}", path=path) from exc
    ts, phis = [], []
    header_seen = False
    for row, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        cells = [c.strip() for c in stripped.split(",")]
        if not header_seen:
            if cells != ["t", "phi_d"]:
                raise IngestionError(f"expected header 't,phi_d', got {stripped!r}", row=row, path=path)
            header_seen = True
            continue
        if len(cells) != 2:
            raise IngestionError(f"expected 2 columns, got {len(cells)}", row=row, path=path)
        try:
            t, phi = float(cells[0]), float(cells[1])
        except ValueError:
            raise IngestionError(f"non-numeric value in {stripped!r}", row=row, path=path) from None
        if not (math.isfinite(t) and math.isfinite(phi)):
            raise IngestionError("non-finite value", row=row, path=path)
        if ts and t <= ts[-1]:
            raise IngestionError(f"t={t!r} not strictly increasing (previous {ts[-1]!r})", row=row, path=path)
        ts.append(t)
        phis.append(phi)
    if not header_seen:
        raise IngestionError("missing header 't,phi_d'", path=path)
    if len(ts) < 4:
        raise IngestionError(f"need at least 4 samples, got {len(ts)}", path=path)
    return FileReference(np.array(ts), np.array(phis), path=str(path))


def write_trajectory_file(path, times, source: ReferenceSource) -> None:
    lines = ["t,phi_d"]
    lines += [f"{t!r},{source.sample(t).phi_d!r}" for t in map(float, times)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


REFERENCE_KINDS = ("synthetic_walk", "file", "step", "sine", "constant")


@dataclass(frozen=True)
class ReferenceSpec:
    """Serializable description of a reference; ``build()`` makes the source."""

    kind: str = "synthetic_walk"
    period: float = DEFAULT_WALK_PERIOD
    harmonics: tuple = field(default=DEFAULT_WALK_HARMONICS)
    step_size: float = 0.3
    step_time: float = 0.0
    smoothing: float = 0.05
    initial: float = 0.0
    amplitude: float = 0.3
    frequency: float = 0.5
    offset: float = 0.0
    value: float = 0.0
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ConfigError("reference.kind", f"unknown kind {self.kind!r}; expected one of {REFERENCE_KINDS}")
        harmonics = tuple(tuple(float(v) for v in h) for h in self.harmonics)
        if any(len(h) != 2 for h in harmonics):
            raise ConfigError("reference.harmonics", "each harmonic must be [amplitude, phase]")
        object.__setattr__(self, "harmonics", harmonics)
        if self.kind == "file" and not self.path:
            raise ConfigError("reference.path", "required for kind='file'")

    @property
    def periodic(self) -> bool:
        return self.kind in ("synthetic_walk", "sine")

    @property
    def period_s(self) -> Optional[float]:
        if self.kind == "synthetic_walk":
            return self.period
        if self.kind == "sine" and self.frequency > 0:
            return 1.0 / self.frequency
        return None

    def build(self, phi_range: Optional[tuple[float, float]] = None) -> ReferenceSource:
        if self.kind == "synthetic_walk":
            return synthetic_walking_cycle(self.period, self.harmonics, phi_range)
        if self.kind == "step":
            return StepReference(self.step_size, self.step_time, self.smoothing, self.initial)
        if self.kind == "sine":
            return SineReference(self.amplitude, self.frequency, self.offset)
        if self.kind == "constant":
            return ConstantReference(self.value)
        return load_trajectory_file(self.path)
