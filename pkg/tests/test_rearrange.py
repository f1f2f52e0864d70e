"""Rearrangement operations: placement rule, preservation identities, and the
full inequality suite against brute-force oracles."""

import itertools

import numpy as np
import pytest

from nlslab import (GridSpec, ScalarField, coupled_x3, lp_norm_p, mass,
                    mixed_integral, potential_moment, rearrangement_report,
                    steiner_x3)
from nlslab.fields import dirichlet_energy
from nlslab.rearrange import (_placement_order, column_level_count_gap,
                              coupled_product_quantities)
from nlslab.sampling import column_decreasing_bump, random_compact_array

GRID = GridSpec(8, 8, 16, 4.0, 4.0, 8.0)


def column_field(grid, column):
    arr = np.zeros(grid.shape)
    arr[grid.n1 // 2, grid.n2 // 2, :len(column)] = column
    return ScalarField(grid, arr)


def test_placement_rule_example():
    g = GridSpec(4, 4, 5, 2.0, 2.0, 2.5)
    u = column_field(g, [0.0, 3.0, 1.0, 2.0, 0.0])
    out = steiner_x3(u)
    assert list(out.values[2, 2, :]) == [0.0, 2.0, 3.0, 1.0, 0.0]


def test_fixed_point_of_rearranged_column():
    g = GridSpec(4, 4, 6, 2.0, 2.0, 3.0)
    u = column_field(g, [0.0, 1.0, 3.0, 2.0, 0.5, 0.0])
    once = steiner_x3(u)
    twice = steiner_x3(once)
    assert np.array_equal(once.values, twice.values)


def test_placement_order_is_permutation():
    for n in range(4, 12):
        order = _placement_order(n)
        assert sorted(order.tolist()) == list(range(n))


def test_sorted_multisets_preserved_exactly():
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        star = steiner_x3(u)
        assert np.array_equal(np.sort(np.abs(u.values), axis=-1),
                              np.sort(star.values, axis=-1))


def test_complex_input_rearranges_moduli():
    rng = np.random.default_rng(1)
    arr = random_compact_array(GRID, rng) * np.exp(1j * rng.random(GRID.shape))
    star = steiner_x3(ScalarField(GRID, arr))
    assert not star.is_complex
    assert np.all(star.values >= 0)
    assert lp_norm_p(star, 2.0) == pytest.approx(
        float(np.sum(np.abs(arr) ** 2)) * GRID.cell_volume, rel=1e-12)


def test_coupled_with_zero_reduces_to_single():
    rng = np.random.default_rng(2)
    u = ScalarField(GRID, random_compact_array(GRID, rng))
    z = ScalarField.zeros(GRID)
    assert np.array_equal(coupled_x3(u, z).values, steiner_x3(u).values)


def test_coupled_small_example():
    g = GridSpec(4, 4, 6, 2.0, 2.0, 3.0)
    u = column_field(g, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    v = column_field(g, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    w = coupled_x3(u, v)
    col = w.values[2, 2, :]
    assert list(col) == [0.0, 0.0, 1.0, 1.0, 1.0, 0.0]


def test_coupled_support_overflow_is_error():
    u = ScalarField(GRID, np.ones(GRID.shape))
    with pytest.raises(ValueError, match="insufficient grid extent"):
        coupled_x3(u, u)


def test_coupled_lp_additivity_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        v = ScalarField(GRID, random_compact_array(GRID, rng))
        w = coupled_x3(u, v)
        for p in (1.0, 2.0, 3.0, 4.0):
            # oracle: direct multiset sum
            expected = float(np.sum(np.abs(u.values) ** p)
                             + np.sum(np.abs(v.values) ** p)) * GRID.cell_volume
            assert lp_norm_p(w, p) == pytest.approx(expected, rel=1e-12)
        assert mass(w) == pytest.approx(mass(u) + mass(v), rel=1e-12)


def brute_force_max_adjacency(values, n):
    """Oracle: maximum lag-1 autocorrelation over all placements."""
    best = -np.inf
    for perm in itertools.permutations(values):
        arr = np.array(perm)
        best = max(best, float(np.sum(arr[:-1] * arr[1:])))
    return best


def test_column_energy_minimal_over_all_placements():
    # the placement rule must minimize the 1D link energy, i.e. maximize the
    # adjacency sum, over every arrangement of the column multiset
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(4, 8))
        m = int(rng.integers(1, n + 1))
        vals = np.concatenate([rng.random(m), np.zeros(n - m)])
        g = GridSpec(4, 4, n, 2.0, 2.0, n / 2.0)
        star = steiner_x3(column_field(g, vals))
        col = star.values[2, 2, :]
        ours = float(np.sum(col[:-1] * col[1:]))
        assert ours >= brute_force_max_adjacency(vals, n) - 1e-12


def test_per_axis_gradient_non_increase():
    rng = np.random.default_rng(5)
    for _ in range(50):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        rep = rearrangement_report(u, ScalarField.zeros(GRID), 1.5, 1.5)
        for row in rep["gradient_axes"]:
            assert row["u_after"] <= row["u_before"] + 1e-12


def test_hardy_littlewood_product_non_decrease():
    rng = np.random.default_rng(6)
    for _ in range(50):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        v = ScalarField(GRID, random_compact_array(GRID, rng))
        before = mixed_integral(u, v, 1.5, 1.5)
        after = mixed_integral(steiner_x3(u), steiner_x3(v), 1.5, 1.5)
        assert after >= before - 1e-12


def test_disjoint_transverse_supports_gain_overlap():
    g = GRID
    a = np.zeros(g.shape)
    b = np.zeros(g.shape)
    a[2, 2, 2:6] = 1.0
    b[2, 2, 9:13] = 1.0
    u = ScalarField(g, a)
    v = ScalarField(g, b)
    assert mixed_integral(u, v, 1.5, 1.5) == 0.0
    assert mixed_integral(steiner_x3(u), steiner_x3(v), 1.5, 1.5) > 0.0


def test_potential_moment_identity():
    rng = np.random.default_rng(7)
    for _ in range(30):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        assert potential_moment(steiner_x3(u)) == pytest.approx(
            potential_moment(u), rel=1e-12)


def test_coupled_gradient_bound_and_level_counts():
    rng = np.random.default_rng(8)
    for _ in range(50):
        u = ScalarField(GRID, random_compact_array(GRID, rng))
        v = ScalarField(GRID, random_compact_array(GRID, rng))
        w = coupled_x3(u, v)
        assert dirichlet_energy(w) <= dirichlet_energy(u) + dirichlet_energy(v) + 1e-12
        thresholds = np.linspace(1e-9, 1.0, 7)
        assert column_level_count_gap(u, v, w, thresholds) == 0


def test_strict_gradient_drop_for_decreasing_pairs():
    g = GridSpec(8, 8, 32, 4.0, 4.0, 16.0)
    rng = np.random.default_rng(9)
    for _ in range(10):
        u = ScalarField(g, column_decreasing_bump(
            g, g.n3 // 2, int(rng.integers(2, 6)),
            amplitude=float(rng.uniform(0.5, 2.0))))
        v = ScalarField(g, column_decreasing_bump(
            g, g.n3 // 2, int(rng.integers(2, 6)),
            amplitude=float(rng.uniform(0.5, 2.0))))
        together = dirichlet_energy(coupled_x3(u, v))
        separate = dirichlet_energy(u) + dirichlet_energy(v)
        assert (separate - together) / separate > 1e-3


def test_coupled_product_bound_on_quadruples():
    rng = np.random.default_rng(10)
    for _ in range(30):
        fields = [ScalarField(GRID, random_compact_array(GRID, rng))
                  for _ in range(4)]
        lhs, rhs = coupled_product_quantities(*fields, 1.5, 1.5)
        assert lhs <= rhs + 1e-12


def test_report_equalities_for_symmetric_decreasing_input():
    g = GridSpec(8, 8, 32, 4.0, 4.0, 16.0)
    u = ScalarField(g, column_decreasing_bump(g, g.n3 // 2, 5))
    rep = rearrangement_report(u, ScalarField.zeros(g), 1.5, 1.5)
    assert rep["equimeasurable_max_gap"] == 0.0
    for row in rep["lp"]:
        assert row["u_after"] == pytest.approx(row["u_before"], rel=1e-12)
    for row in rep["gradient_axes"]:
        assert row["u_after"] == pytest.approx(row["u_before"], rel=1e-12)
    assert rep["potential_moment"]["u_after"] == pytest.approx(
        rep["potential_moment"]["u_before"], rel=1e-12)
