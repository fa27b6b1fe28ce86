import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import central_diff, length_and_arm, points
from seajoint.errors import GeometryError, SingularConfigurationError
from seajoint.geometry import (LinkGeometry, check_operating_range, derive_geometry, gravity_reaction_force,
                               moment_arm, phi_from_theta, sea_length, sea_length_rate, default_geometry,
                               theta_from_phi)

LINKS = (0.0280, 0.0525, 0.0525, 0.0350, 0.1180)


def test_unit_lengths_closed_form():
    g = derive_geometry(1, 1, 1, 1, 1)
    assert g.d6 == pytest.approx(math.sqrt(5), abs=1e-15)
    assert g.d7 == pytest.approx(math.sqrt(2), abs=1e-15)
    assert g.alpha == pytest.approx(math.atan(0.5), abs=1e-15)
    assert g.sigma == pytest.approx(math.pi / 4, abs=1e-15)


def test_measured_linkage_derived_fields_match_coordinate_construction():
    g = default_geometry()
    E, C, B = points(*LINKS, theta=0.0)
    assert g.d6 == pytest.approx(np.hypot(*(C - E)), rel=1e-14)
    assert g.d7 == pytest.approx(np.hypot(*(B - E)), rel=1e-14)
    # at theta = 0 the attachment hangs straight below the pivot
    assert C[0] == pytest.approx(0.0, abs=1e-15)
    assert g.alpha == pytest.approx(math.atan2(0.028, 0.105), abs=1e-15)
    assert g.sigma == pytest.approx(math.atan2(B[1], -B[0]), abs=1e-15)


def test_straight_limb_has_zero_offset_angle():
    g = derive_geometry(0.0, 0.05, 0.05, 0.035, 0.118)
    assert g.alpha == 0.0
    assert g.d6 == 0.1


@pytest.mark.parametrize("index", range(5))
@pytest.mark.parametrize("bad", [-0.01, 0.0, math.nan])
def test_non_positive_length_names_the_field(index, bad):
    lengths = list(LINKS)
    lengths[index] = bad
    if index == 0 and bad == 0.0:
        derive_geometry(*lengths)  # d1 = 0 is the straight limb
        return
    with pytest.raises(GeometryError) as info:
        derive_geometry(*lengths)
    assert info.value.field == f"d{index + 1}"


def test_sea_length_closed_forms():
    g = default_geometry()
    assert sea_length(g, 0.0) == pytest.approx(math.hypot(g.d4 + g.d6, g.d5), rel=1e-15)
    assert sea_length(g, math.pi / 2 - g.sigma) == pytest.approx(g.d6 + g.d7, rel=1e-15)


def test_sea_length_and_arm_at_02_match_oracle():
    g = default_geometry()
    length, arm = length_and_arm(LINKS, 0.2)
    assert sea_length(g, 0.2) == pytest.approx(length, rel=1e-12)
    assert moment_arm(g, 0.2) == pytest.approx(arm, rel=1e-12)


def test_moment_arm_closed_forms():
    g = default_geometry()
    assert abs(moment_arm(g, math.pi / 2 - g.sigma)) < 1e-16
    assert moment_arm(g, -g.sigma) == pytest.approx(g.d6 * g.d7 / sea_length(g, -g.sigma), rel=1e-15)


def test_moment_arm_never_exceeds_link_radius():
    g = default_geometry()
    thetas = np.linspace(-math.pi, math.pi, 5001)
    assert max(abs(moment_arm(g, th)) for th in thetas) <= g.d6 * (1 + 1e-12)


def test_law_of_cosines_and_arm_over_10k_angles():
    g = default_geometry()
    worst_len = worst_arm = 0.0
    for th in np.linspace(-math.pi / 2, math.pi / 2, 10_000):
        length, arm = length_and_arm(LINKS, th)
        worst_len = max(worst_len, abs(sea_length(g, th) - length) / length)
        worst_arm = max(worst_arm, abs(moment_arm(g, th) - arm) / g.d6)
    assert worst_len <= 1e-12
    assert worst_arm <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(0.01, 0.1), st.floats(0.01, 0.1), st.floats(0.01, 0.1),
       st.floats(0.01, 0.2), st.floats(-1.5, 1.5))
def test_oracle_agreement_on_random_linkages(d1, d2, d3, d4, d5, theta):
    g = derive_geometry(d1, d2, d3, d4, d5)
    length, arm = length_and_arm((d1, d2, d3, d4, d5), theta)
    assert sea_length(g, theta) == pytest.approx(length, rel=1e-12)
    assert moment_arm(g, theta) == pytest.approx(arm, abs=1e-12 * g.d6)
    lo = abs(g.d7 - g.d6)
    assert lo - 1e-12 <= sea_length(g, theta) <= g.d6 + g.d7 + 1e-12


def test_length_derivative_matches_finite_difference():
    g = default_geometry()
    for th in np.linspace(-1.2, 1.2, 97):
        fd = central_diff(lambda x: sea_length(g, x), th)
        assert abs(fd - sea_length_rate(g, th)) <= 1e-6


def test_gravity_reaction_force_examples():
    g = default_geometry()
    assert gravity_reaction_force(g, 2.0, 9.81, 0.0) == 0.0
    force = gravity_reaction_force(g, 2.0, 9.81, 0.3)
    expected_torque = 2 * 9.81 * 0.0525 * math.sin(0.3)
    arm = length_and_arm(LINKS, 0.3 - g.alpha)[1]
    assert force * arm == pytest.approx(expected_torque, rel=1e-12)


def test_gravity_reaction_force_singular_at_collinear_pose():
    g = default_geometry()
    phi = math.pi / 2 - g.sigma + g.alpha
    with pytest.raises(SingularConfigurationError):
        gravity_reaction_force(g, 2.0, 9.81, phi)
    with pytest.raises(SingularConfigurationError):
        gravity_reaction_force(g, 2.0, 9.81, phi + 5e-6)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1.2, 1.2).filter(lambda p: abs(p) > 1e-6))
def test_torque_identity(phi):
    g = default_geometry()
    tau = 2 * 9.81 * g.d3 * math.sin(phi)
    got = gravity_reaction_force(g, 2.0, 9.81, phi) * moment_arm(g, theta_from_phi(g, phi))
    assert got == pytest.approx(tau, rel=1e-12)


def test_angle_conversions():
    g = default_geometry()
    assert theta_from_phi(g, g.alpha) == 0.0
    assert phi_from_theta(g, theta_from_phi(g, 0.5)) == pytest.approx(0.5, abs=1e-16)
    assert theta_from_phi(g, 0.4) == pytest.approx(0.4 - math.atan(0.028 / 0.105), abs=1e-16)


def test_operating_range_guard():
    g = default_geometry()
    check_operating_range(g)
    with pytest.raises(SingularConfigurationError):
        check_operating_range(g, (-1.2, 1.4))
    with pytest.raises(GeometryError):
        check_operating_range(g, (0.5, 0.1))


def test_constructor_accepts_inconsistent_fields_for_fault_injection():
    g = default_geometry()
    bent = LinkGeometry(*g.measured, g.d6 * 1.01, g.d7, g.alpha, g.sigma)
    assert sea_length(bent, 0.2) != pytest.approx(length_and_arm(LINKS, 0.2)[0], rel=1e-6)
    with pytest.raises(GeometryError):
        LinkGeometry(*g.measured, -1.0, g.d7, g.alpha, g.sigma)
