"""Planar hip linkage: SEA length, moment arm, gravity reaction force.

Frame: E (hip pivot) at the origin, x to the right, y up. The SEA's
fixed end B sits at (-d5, d4); the link attachment point C swings on a
circle of radius d6 = |CE| at angle theta measured from the downward
vertical. The joint angle is phi = theta + alpha.

All functions take plain floats and use :mod:`math` so they stay cheap
inside the integrator loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError, SingularConfigurationError

# Below this moment arm (m) F_R and 1/g(x1) are treated as singular.
SINGULAR_ARM = 1e-6

DEFAULT_THETA_RANGE = (-1.2, 1.2)


@dataclass(frozen=True)
class LinkGeometry:
    """Measured link lengths d1..d5 plus the derived d6, d7, alpha, sigma.

    Build through :func:`derive_geometry`; the constructor only checks
    positivity so that fault-injection tests can create inconsistent
    instances on purpose.
    """

    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    d6: float
    d7: float
    alpha: float
    sigma: float

    def __post_init__(self):
        if not self.d1 >= 0.0:
            raise GeometryError("d1", self.d1, "must be >= 0")
        for name in ("d2", "d3", "d4", "d5", "d6", "d7"):
            value = getattr(self, name)
            if not value > 0.0:
                raise GeometryError(name, value)

    @property
    def measured(self) -> tuple[float, float, float, float, float]:
        return (self.d1, self.d2, self.d3, self.d4, self.d5)


def derive_geometry(d1: float, d2: float, d3: float, d4: float, d5: float) -> LinkGeometry:
    """Complete the linkage from the five measured segment lengths.

    ``d6 = |CE|`` and ``alpha`` follow from the L-shaped limb; ``d7 = |EB|``
    and ``sigma`` from the actuator mount. With these, the SEA length is
    the law of cosines in triangle CEB with included angle
    ``theta + sigma + pi/2``.

    d1 may be zero (straight limb); the other lengths must be positive.
    """
    for name, value in (("d1", d1), ("d2", d2), ("d3", d3), ("d4", d4), ("d5", d5)):
        if not math.isfinite(value):
            raise GeometryError(name, value, "must be finite")
    if d1 < 0.0:
        raise GeometryError("d1", d1, "must be >= 0")
    for name, value in (("d2", d2), ("d3", d3), ("d4", d4), ("d5", d5)):
        if value <= 0.0:
            raise GeometryError(name, value)
    lever = d2 + d3
    return LinkGeometry(
        d1=d1, d2=d2, d3=d3, d4=d4, d5=d5,
        d6=math.hypot(d1, lever),
        d7=math.hypot(d4, d5),
        alpha=math.atan(d1 / lever),
        sigma=math.atan(d4 / d5),
    )


def default_geometry() -> LinkGeometry:
    """UXA-90 hip linkage dimensions (metres)."""
    return derive_geometry(0.0280, 0.0525, 0.0525, 0.0350, 0.1180)


def sea_length(geom: LinkGeometry, theta: float) -> float:
    """Distance |CB| between the SEA end points at link angle ``theta``."""
    d4, d5, d6 = geom.d4, geom.d5, geom.d6
    radicand = d4 * d4 + d5 * d5 + d6 * d6 + 2.0 * d6 * (d5 * math.sin(theta) + d4 * math.cos(theta))
    if radicand < 0.0:
        raise GeometryError("sea_length", radicand, f"negative radicand at theta={theta!r}")
    return math.sqrt(radicand)


def sea_length_rate(geom: LinkGeometry, theta: float) -> float:
    """Analytic dL/dtheta."""
    return geom.d6 * (geom.d5 * math.cos(theta) - geom.d4 * math.sin(theta)) / sea_length(geom, theta)


def moment_arm(geom: LinkGeometry, theta: float) -> float:
    # Signed perpendicular distance from E to the line CB; positive over
    # the usual operating range, zero when C, E, B are collinear.
    return geom.d6 * geom.d7 * math.sin(theta + geom.sigma + math.pi / 2) / sea_length(geom, theta)


def theta_from_phi(geom: LinkGeometry, phi: float) -> float:
    return phi - geom.alpha


def phi_from_theta(geom: LinkGeometry, theta: float) -> float:
    return theta + geom.alpha


def gravity_reaction_force(geom: LinkGeometry, m: float, g: float, phi: float,
                           eps: float = SINGULAR_ARM) -> float:
    """Axial SEA force that balances the limb's gravity torque at ``phi``.

    Equals ``m g d3 sin(phi) / r(phi - alpha)``. Raises
    :class:`SingularConfigurationError` when ``|r| < eps``.
    """
    arm = moment_arm(geom, phi - geom.alpha)
    if abs(arm) < eps:
        raise SingularConfigurationError(phi, arm)
    return m * g * geom.d3 * math.sin(phi) / arm


def check_operating_range(geom: LinkGeometry, theta_range=DEFAULT_THETA_RANGE,
                          samples: int = 2001, eps: float = SINGULAR_ARM) -> None:
    """Raise if any theta in ``theta_range`` is singular or breaks the triangle bounds."""
    lo, hi = theta_range
    if not lo < hi:
        raise GeometryError("theta_range", theta_range, "lower bound must be below upper bound")
    lower = abs(geom.d7 - geom.d6) + 1e-9
    upper = geom.d6 + geom.d7
    previous = None
    for i in range(samples):
        theta = lo + (hi - lo) * i / (samples - 1)
        length = sea_length(geom, theta)
        if length < lower or length > upper * (1 + 1e-12):
            raise GeometryError("theta_range", theta_range,
                                f"SEA length {length:.6g} outside triangle bounds at theta={theta:.4g}")
        arm = moment_arm(geom, theta)
        # a sign change means the collinear pose lies between two samples
        if abs(arm) < eps or (previous is not None and (arm > 0) != (previous > 0)):
            raise SingularConfigurationError(phi_from_theta(geom, theta), arm)
        previous = arm
