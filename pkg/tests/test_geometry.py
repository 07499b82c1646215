import numpy as np
import pytest

from decoupling_lab.errors import EmptyInterior
from decoupling_lab.geometry import Region, ei_family_for
from decoupling_lab.sampling import SampleScheme, sample_region


def test_ball_family_geometric_schedule():
    fam = ei_family_for(Region.open_ball([0.0, 0.0], 1.0), stages=3)
    radii = [m.radius for m in fam.members]
    assert radii == [0.5, 0.75, 0.875]
    assert list(fam.gaps) == [0.5, 0.25, 0.125]


def test_box_family_componentwise_shrink():
    fam = ei_family_for(Region.box([0.0], [1.0]), stages=2)
    m1, m2 = fam.members
    assert np.allclose(m1.lo, [0.25]) and np.allclose(m1.hi, [0.75])
    assert np.allclose(m2.lo, [0.125]) and np.allclose(m2.hi, [0.875])
    assert list(fam.gaps) == [0.25, 0.125]


def test_singleton_region_has_no_interior():
    with pytest.raises(EmptyInterior):
        ei_family_for(Region.box([0.3], [0.3]), stages=2)


def test_member_fattened_by_gap_stays_inside_parent():
    # sampled boundary check of the defining property
    for parent in (Region.open_ball([0.2, -0.1], 0.7), Region.box([-1.0, 0.0], [1.0, 2.0])):
        fam = ei_family_for(parent, stages=4)
        scheme = SampleScheme(levels=2, max_total_points=4000)
        for member, gap in zip(fam.members, fam.gaps):
            pts = sample_region(member, scheme, 1).points
            for off in np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1],
                                 [1, -1], [-1, 1]]) * gap * (1 - 1e-12):
                assert parent.contains(pts + off).all()


def test_closed_ball_member_lies_in_smaller_open_ball():
    parent = Region.closed_ball([0.0], 1.0)
    fam = ei_family_for(parent, stages=3)
    scheme = SampleScheme(levels=2)
    for member in fam.members:
        pts = sample_region(member, scheme, 1).points
        rho = np.abs(pts).max()
        assert rho < 1.0


def test_region_membership_and_distance_closed_forms():
    ball = Region.open_ball([0.0, 0.0], 0.5)
    assert ball.contains_point([0.49, 0.0])
    assert not ball.contains_point([0.5, 0.0])
    box = Region.box([0.0, -1.0], [1.0, 1.0])
    assert box.contains_point([0.0, 1.0])
    pts = np.array([[2.0, 0.0], [0.5, 0.5], [-1.0, 3.0]])
    assert np.allclose(box.dist(pts), [1.0, 0.0, 2.0])


def test_fatten_superset_and_distance():
    box = Region.box([0.0], [1.0])
    fat = box.fatten(0.25)
    assert fat.contains_point([-0.2])
    assert not fat.contains_point([-0.3])


def test_oracle_region_erosion_members():
    from decoupling_lab.gallery import parabola_epigraph_set

    U = Region.from_set(parabola_epigraph_set(), [-1.5, -2.5], [1.5, 2.5])
    fam = ei_family_for(U, stages=3)
    # eroded members keep a positive gap to the complement of the epigraph
    member = fam.members[-1]
    gap = fam.gaps[-1]
    pts = sample_region(member, SampleScheme(levels=1, max_total_points=3000), 0).points
    inside = member.contains(pts)
    pts = pts[inside]
    for off in np.array([[0.0, -1.0], [1.0, -1.0], [-1.0, -1.0]]) * gap * 0.9:
        assert U.contains(pts + off).all()
