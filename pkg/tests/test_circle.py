import math

import numpy as np
import pytest

from circle_potential import (
    Arc,
    ArcFamily,
    CircleGrid,
    FULL_CIRCLE,
    GridSet,
    PreconditionError,
    chord_distance,
    normalize_angle,
    vitali_disjoint_subfamily,
)
from circle_potential.circle import angles_close, dilation_covers_family

TWO_PI = 2.0 * math.pi


def test_normalize_angle_range_and_idempotence():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-40.0, 40.0, size=200):
        y = normalize_angle(x)
        assert -math.pi <= y < math.pi
        assert normalize_angle(y) == y
        assert abs(normalize_angle(x + TWO_PI) - y) < 1e-9


def test_normalize_angle_cut_values():
    assert normalize_angle(math.pi) == -math.pi
    assert normalize_angle(-math.pi) == -math.pi
    assert normalize_angle(0.0) == 0.0


def test_angles_close_across_cut():
    assert angles_close(math.pi - 1e-14, -math.pi + 1e-14)
    assert not angles_close(1.0, 1.1)


def test_chord_distance_basics():
    assert chord_distance(0.3, 0.3) == 0.0
    assert abs(chord_distance(0.0, math.pi) - 2.0) < 1e-14
    rng = np.random.default_rng(5)
    for _ in range(50):
        s, t = rng.uniform(-math.pi, math.pi, size=2)
        d = chord_distance(s, t)
        assert abs(d - chord_distance(t, s)) == 0.0
        assert abs(d - abs(np.exp(1j * s) - np.exp(1j * t))) < 1e-12


def test_arc_length_and_wraparound():
    a = Arc(3.0, -3.0)
    assert abs(a.length - (TWO_PI - 6.0)) < 1e-14
    assert a.contains(math.pi - 0.01)
    assert a.contains(-math.pi + 0.01)
    assert not a.contains(0.0)


def test_arc_open_endpoints_excluded():
    a = Arc(-0.5, 0.5)
    assert not a.contains(-0.5)
    assert not a.contains(0.5)
    assert a.contains(0.0)


def test_arc_centered_and_json_round_trip():
    a = Arc.centered(2.9, 1.0)
    assert abs(a.length - 1.0) < 1e-14
    assert abs(normalize_angle(a.midpoint - 2.9)) < 1e-14
    b = Arc.from_json(a.to_json())
    assert b == a


def test_degenerate_arc_rejected():
    with pytest.raises(PreconditionError):
        Arc(1.0, 1.0)


def test_family_total_length_and_full_constant():
    fam = ArcFamily((Arc(0.0, 0.5), Arc(1.0, 1.25)))
    assert abs(fam.total_length - 0.75) < 1e-14
    assert FULL_CIRCLE.full
    assert FULL_CIRCLE.total_length == TWO_PI
    assert len(FULL_CIRCLE) == 0


def test_family_disjoint_validation():
    with pytest.raises(PreconditionError):
        ArcFamily((Arc(0.0, 1.0), Arc(0.5, 1.5)), pairwise_disjoint=True)
    # shared endpoint is fine for open arcs
    ArcFamily((Arc(0.0, 1.0), Arc(1.0, 2.0)), pairwise_disjoint=True)


def test_family_overflow_rejected():
    arcs = tuple(Arc(k, k + 0.9) for k in range(8))
    with pytest.raises(PreconditionError):
        ArcFamily(arcs)


def test_vitali_selection_properties():
    """The greedy selection must be pairwise disjoint and its 3-fold
    dilations must cover every input arc."""
    rng = np.random.default_rng(77)
    for _ in range(25):
        k = int(rng.integers(1, 12))
        arcs = []
        budget = TWO_PI * 0.9
        for _ in range(k):
            ln = float(rng.uniform(0.02, 0.6))
            if ln > budget:
                break
            budget -= ln
            arcs.append(Arc.centered(float(rng.uniform(-math.pi, math.pi)), ln))
        if not arcs:
            continue
        fam = ArcFamily(tuple(arcs))
        sel = vitali_disjoint_subfamily(fam)
        assert sel.pairwise_disjoint
        assert set(sel.arcs) <= set(fam.arcs)
        assert dilation_covers_family(sel, fam)


def test_vitali_full_circle_passthrough():
    assert vitali_disjoint_subfamily(FULL_CIRCLE) is FULL_CIRCLE


def test_grid_angles_and_cell_index(grid64):
    t = grid64.angles
    assert t[0] == -math.pi
    assert np.allclose(np.diff(t), grid64.cell_width)
    for j in (0, 1, 17, 63):
        assert grid64.cell_index(t[j]) == j


def test_center_mask_counts_cells(grid256):
    h = grid256.cell_width
    a = Arc.centered(0.3, 1.0)
    m = grid256.mask_of(a, mode="centers")
    assert abs(m.sum() * h - a.length) <= h


def test_cover_mask_contains_center_mask(grid256):
    rng = np.random.default_rng(3)
    for _ in range(30):
        a = Arc.centered(float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 2.0)))
        centers = grid256.mask_of(a, mode="centers")
        cover = grid256.mask_of(a, mode="cover")
        assert np.all(~centers | cover)


def test_cover_mask_monotone_in_arc(grid256):
    """Enlarging an arc about a fixed midpoint can only add cover cells;
    capacity monotonicity on grid sets leans on this."""
    rng = np.random.default_rng(9)
    for _ in range(30):
        mid = float(rng.uniform(-3, 3))
        inner = float(rng.uniform(0.05, 1.0))
        outer = inner + float(rng.uniform(0.0, 1.0))
        small = grid256.mask_of(Arc.centered(mid, inner), mode="cover")
        big = grid256.mask_of(Arc.centered(mid, outer), mode="cover")
        assert np.all(~small | big)


def test_mask_of_family_is_union(grid64):
    a, b = Arc(0.0, 0.7), Arc(2.0, 2.4)
    fam = ArcFamily((a, b))
    m = grid64.mask_of(fam, mode="centers")
    expected = grid64.mask_of(a, mode="centers") | grid64.mask_of(b, mode="centers")
    assert np.array_equal(m, expected)
    assert grid64.mask_of(FULL_CIRCLE).all()


def test_mask_mode_validation(grid64):
    with pytest.raises(PreconditionError):
        grid64.mask_of(Arc(0.0, 1.0), mode="nearest")


def test_grid_set_algebra(grid64):
    a = GridSet.from_arcs(grid64, Arc(0.0, 1.0))
    b = GridSet.from_arcs(grid64, Arc(0.5, 1.5))
    u = a.union(b)
    i = a.intersect(b)
    assert i.is_subset_of(a) and i.is_subset_of(u)
    assert a.is_subset_of(u)
    assert u.count + i.count == a.count + b.count
    assert abs(u.measure - u.count * grid64.cell_width) == 0.0


def test_grid_set_rotation_shifts_indices(grid64):
    s = GridSet.from_indices(grid64, [0, 1, 2, 40])
    r = s.rotated(5)
    assert set(r.indices) == {5, 6, 7, 45}
    assert r.rotated(-5).indices.tolist() == s.indices.tolist()


def test_grid_set_mismatched_grids_rejected(grid64, grid256):
    a = GridSet.full(grid64)
    b = GridSet.full(grid256)
    with pytest.raises(PreconditionError):
        a.union(b)


def test_cell_intervals_merges_runs(grid64):
    s = GridSet.from_indices(grid64, [3, 4, 5, 20])
    runs = s.cell_intervals()
    assert len(runs) == 2
    h = grid64.cell_width
    center, half = runs[0]
    assert abs(center - grid64.angles[4]) < 1e-12
    assert abs(half - 1.5 * h) < 1e-12


def test_cell_intervals_wraparound_run(grid64):
    n = grid64.n_points
    s = GridSet.from_indices(grid64, [n - 2, n - 1, 0, 1])
    runs = s.cell_intervals()
    assert len(runs) == 1
    center, half = runs[0]
    assert abs(half - 2.0 * grid64.cell_width) < 1e-12
    # run straddles the cut, centered on the seam between cells n-1 and 0
    seam = normalize_angle(grid64.angles[0] - grid64.cell_width / 2.0)
    assert abs(normalize_angle(center - seam)) < 1e-12


def test_empty_and_full_grid_sets(grid64):
    assert GridSet.empty(grid64).is_empty()
    assert GridSet.full(grid64).count == grid64.n_points
    assert GridSet.empty(grid64).cell_intervals() == []
