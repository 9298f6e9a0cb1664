import math

import numpy as np
import pytest

import zsparse as z
from conftest import TWO_PI, brute_force_ball_fraction
from zsparse.sparseness import (
    DELTA_1D,
    LevelSet,
    ScaleOverflowError,
    ball_cell_count,
    fibonacci_sphere,
    geometric_radii,
    is_1d_sparse,
    line_fraction,
    sparseness_scale,
    superlevel_sets,
)

LAMBDA = 0.4842822952708182  # frozen cut fraction 1/(2M)


def _constant_vector_field(grid, values):
    data = np.zeros((3, grid.n, grid.n, grid.n))
    for c, v in enumerate(values):
        data[c] = v
    return z.VectorField(grid, data)


class TestSuperlevelSets:
    def test_constant_field(self, grid16):
        om = _constant_vector_field(grid16, (1.0, 1.0, 1.0))
        sets = superlevel_sets(om, 0.5)
        assert [s.set_id for s in sets] == ["1+", "1-", "2+", "2-", "3+", "3-"]
        for s in sets:
            if s.sign > 0:
                assert s.mask.all()
            else:
                assert not s.mask.any()

    def test_single_harmonic_slab(self, grid16):
        # sin x > 1/2 on one slab of relative measure ~ 1/3; counted exactly:
        # strict inequality holds for samples with i/n in (1/12, 5/12)
        n = grid16.n
        x, _, _ = grid16.coordinates()
        om = z.VectorField(grid16, np.stack([np.sin(x), np.zeros_like(x), np.zeros_like(x)]))
        sets = superlevel_sets(om, 0.5)
        expected_planes = sum(1 for i in range(n) if math.sin(TWO_PI * i / n) > 0.5)
        plus, minus = sets[0], sets[1]
        assert plus.mask.sum() == expected_planes * n * n
        assert abs(plus.mask.mean() - 1.0 / 3.0) < 1.0 / n
        # the negative set is the mirror slab
        assert minus.mask.sum() == plus.mask.sum()
        assert np.array_equal(minus.mask, np.roll(plus.mask, n // 2, axis=0))
        for s in sets[2:]:
            assert not s.mask.any()

    def test_monotone_in_cut_fraction(self, grid16):
        rng = np.random.default_rng(0)
        om = z.VectorField(grid16, rng.standard_normal((3, 16, 16, 16)))
        low = superlevel_sets(om, 0.3)
        high = superlevel_sets(om, 0.6)
        for s_low, s_high in zip(low, high):
            assert np.all(s_high.mask <= s_low.mask)

    def test_shrinks_to_argmax(self, grid16):
        rng = np.random.default_rng(1)
        om = z.VectorField(grid16, rng.standard_normal((3, 16, 16, 16)))
        sets = superlevel_sets(om, 1.0 - 1e-12)
        total = sum(int(s.mask.sum()) for s in sets)
        assert total == 1  # only the argmax cell survives

    def test_plus_minus_disjoint(self, grid16):
        rng = np.random.default_rng(2)
        om = z.VectorField(grid16, rng.standard_normal((3, 16, 16, 16)))
        sets = superlevel_sets(om, 0.2)
        for j in range(3):
            assert not np.any(sets[2 * j].mask & sets[2 * j + 1].mask)

    def test_zero_field_rejected(self, grid16):
        om = _constant_vector_field(grid16, (0.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="identically zero"):
            superlevel_sets(om, 0.5)

    def test_bad_fraction_rejected(self, grid16):
        om = _constant_vector_field(grid16, (1.0, 0.0, 0.0))
        for lam in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                superlevel_sets(om, lam)


class TestBallFraction:
    def test_empty_and_full(self, grid16):
        empty = LevelSet(grid16, np.zeros((16, 16, 16), bool), 1, +1, 0.5)
        full = LevelSet(grid16, np.ones((16, 16, 16), bool), 1, +1, 0.5)
        assert np.all(z.ball_fraction_field(empty, 1.0).data == 0.0)
        assert np.all(z.ball_fraction_field(full, 1.0).data == 1.0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_brute_force_exactly(self, grid16, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((16, 16, 16)) < 0.3
        S = LevelSet(grid16, mask, 1, +1, 0.5)
        for r in (0.5, 1.1, 2.2):
            spectral = z.ball_fraction_field(S, r).data
            oracle = brute_force_ball_fraction(mask, grid16.L, r)
            assert np.max(np.abs(spectral - oracle)) <= 1e-12

    def test_radius_bounds(self, grid16):
        S = LevelSet(grid16, np.zeros((16, 16, 16), bool), 1, +1, 0.5)
        for r in (0.0, grid16.L / 2, grid16.L):
            with pytest.raises(ValueError, match="radius"):
                z.ball_fraction_field(S, r)


class TestSemiMixed:
    def test_empty_set_is_semi_mixed(self, grid16):
        S = LevelSet(grid16, np.zeros((16, 16, 16), bool), 1, +1, 0.5)
        ok, top = z.is_semi_mixed(S, 1.0, 0.1)
        assert ok and top == 0.0

    def test_full_grid_is_not(self, grid16):
        S = LevelSet(grid16, np.ones((16, 16, 16), bool), 1, +1, 0.5)
        ok, top = z.is_semi_mixed(S, 1.0, 0.9)
        assert not ok and top == 1.0

    def test_half_space_slab_fails_any_delta(self, grid32):
        mask = np.zeros((32, 32, 32), bool)
        mask[:16] = True  # x1 < L/2
        S = LevelSet(grid32, mask, 1, +1, 0.5)
        ok, top = z.is_semi_mixed(S, 4 * grid32.spacing, 0.75)
        assert not ok
        assert top == 1.0  # interior balls are fully covered

    def test_thin_slab_is_semi_mixed(self, grid32):
        # slab of thickness ~ r/10: ball coverage is about (3/4)(t/r) << 3/4
        r = 8 * grid32.spacing
        mask = np.zeros((32, 32, 32), bool)
        mask[0] = True  # one cell-thick plane
        S = LevelSet(grid32, mask, 1, +1, 0.5)
        ok, top = z.is_semi_mixed(S, r, 0.75)
        assert ok
        assert top < 0.2


class TestSparsenessScale:
    def test_empty_set_returns_smallest_radius(self, grid16):
        S = LevelSet(grid16, np.zeros((16, 16, 16), bool), 1, +1, 0.5)
        radii = geometric_radii(0.3, 2.0, 12)
        scan = sparseness_scale(S, 0.75, radii)
        assert scan.scale == radii[0]

    def test_full_grid_returns_none(self, grid16):
        S = LevelSet(grid16, np.ones((16, 16, 16), bool), 1, +1, 0.5)
        scan = sparseness_scale(S, 0.75, geometric_radii(0.3, 2.0, 12))
        assert scan.scale is None
        assert np.all(scan.max_fractions == 1.0)

    def test_single_cell_counting_oracle(self, grid16):
        # fraction at the occupied cell is 1/|ball|; the first passing radius
        # is the first whose ball holds at least ceil(1/delta) = 2 cells,
        # i.e. the first radius >= spacing
        mask = np.zeros((16, 16, 16), bool)
        mask[3, 4, 5] = True
        S = LevelSet(grid16, mask, 2, -1, 0.1)
        radii = geometric_radii(0.1, 3.0, 24)
        scan = sparseness_scale(S, 0.75, radii)
        by_count = next(float(r) for r in radii if ball_cell_count(grid16, r) >= 2)
        assert scan.scale == by_count
        assert by_count == next(float(r) for r in radii if r >= grid16.spacing)

    def test_curve_is_reported(self, grid16):
        rng = np.random.default_rng(3)
        S = LevelSet(grid16, rng.random((16, 16, 16)) < 0.4, 1, +1, 0.5)
        radii = geometric_radii(0.3, 2.0, 12)
        scan = sparseness_scale(S, 0.75, radii)
        assert len(scan.max_fractions) == len(radii)
        assert np.all((scan.max_fractions >= 0) & (scan.max_fractions <= 1))


class TestLineSparseness:
    def test_below_cut_everywhere(self, grid16):
        comp = np.zeros((16, 16, 16))
        ok, frac = is_1d_sparse(comp, grid16, [1.0, 1.0, 1.0], [1.0, 0, 0], 0.8, 0.5, cut=0.5)
        assert ok and frac == 0.0

    def test_above_cut_everywhere(self, grid16):
        comp = np.ones((16, 16, 16))
        ok, frac = is_1d_sparse(comp, grid16, [1.0, 1.0, 1.0], [0, 1.0, 0], 0.8, 0.99, cut=0.5)
        assert not ok and frac == 1.0

    def test_slab_crossings(self, grid32):
        # slab of thickness rho/2: a perpendicular segment of half-length rho
        # meets it in exact line measure (rho/2) / (2 rho) = 1/4; a tangential
        # segment inside the slab has measure 1
        rho = 1.0
        x, _, _ = grid32.coordinates()
        comp = np.where(np.abs(x - math.pi) < rho / 4, 1.0, 0.0)
        center = np.array([math.pi, 1.0, 1.0])
        ok, frac = is_1d_sparse(comp, grid32, center, [1.0, 0, 0], rho, 0.5, cut=0.5)
        sampling_tol = 2 * grid32.spacing / (2 * rho) + 2 / 256
        assert ok
        assert abs(frac - 0.25) <= sampling_tol
        ok2, frac2 = is_1d_sparse(comp, grid32, center, [0, 1.0, 0], rho, 0.5, cut=0.5)
        assert not ok2 and frac2 == 1.0

    def test_requires_unit_direction(self, grid16):
        comp = np.zeros((16, 16, 16))
        with pytest.raises(ValueError, match="unit"):
            is_1d_sparse(comp, grid16, [0, 0, 0], [2.0, 0, 0], 0.5, 0.5, cut=0.5)


class TestThreeDToOneD:
    """Sampled version of the containment: 3D delta-sparseness at scale r
    forces a 1D delta^(1/3)-sparse direction at some scale rho <= r."""

    @pytest.mark.parametrize("seed", [0, 1, 4])
    def test_semi_mixed_implies_line_sparse_direction(self, grid16, seed):
        rng = np.random.default_rng(seed)
        mask = rng.random((16, 16, 16)) < 0.25
        S = LevelSet(grid16, mask, 1, +1, 0.5)
        r, delta = 4 * grid16.spacing, 0.75
        ok, _ = z.is_semi_mixed(S, r, delta)
        assert ok  # dilute random masks are semi-mixed at this scale
        self._assert_line_direction_exists(grid16, mask, r, delta)

    def test_slab_case(self, grid32):
        r, delta = 6 * grid32.spacing, 0.75
        half_thickness = 0.4 * r
        x, _, _ = grid32.coordinates()
        mask = np.abs(x - math.pi) < half_thickness
        S = LevelSet(grid32, mask, 1, +1, 0.5)
        ok, _ = z.is_semi_mixed(S, r, delta)
        assert ok
        self._assert_line_direction_exists(grid32, mask, r, delta)

    @staticmethod
    def _assert_line_direction_exists(grid, mask, r, delta, n_points=12, m_line=64):
        target = delta ** (1.0 / 3.0) + 2.0 / m_line
        dirs = fibonacci_sphere(32)
        rhos = np.linspace(0.25 * r, r, 6)
        rng = np.random.default_rng(99)
        values = mask.astype(np.float64)
        for _ in range(n_points):
            x0 = rng.integers(0, grid.n, size=3) * grid.spacing
            best = min(
                line_fraction(values, grid, x0, d, float(rho), 0.5, m_line=m_line, order=0)
                for d in dirs
                for rho in rhos
            )
            assert best <= target


class TestCriterionCheck:
    def _bump_field(self, grid, width=0.15):
        x, y, zz = grid.coordinates()
        r2 = (x - math.pi) ** 2 + (y - math.pi) ** 2 + (zz - math.pi) ** 2
        bump = np.exp(-r2 / (2 * width**2))
        return z.VectorField(grid, np.stack([bump, np.zeros_like(bump), np.zeros_like(bump)]))

    def test_single_bump_all_points_pass(self, grid32):
        om = self._bump_field(grid32)
        rep = z.regularity_criterion_check(om, c_m=1.0, lam=LAMBDA, n_points=24, n_dir=32, m_line=128)
        assert rep.fraction_passing == 1.0
        for p in rep.points:
            assert p.passed and p.witness_scale is not None

    def test_constant_field_no_point_passes(self, grid16):
        om = _constant_vector_field(grid16, (1.0, 1.0, 1.0))
        rep = z.regularity_criterion_check(om, c_m=1.0, lam=LAMBDA, n_points=8, n_dir=16, m_line=64)
        assert rep.fraction_passing == 0.0

    def test_monotone_nondecreasing_in_delta1(self, grid16):
        rng = np.random.default_rng(5)
        om = z.VectorField(grid16, rng.standard_normal((3, 16, 16, 16)))
        fractions = [
            z.regularity_criterion_check(
                om, c_m=1.0, lam=LAMBDA, delta1=d1, n_points=12, n_dir=16, m_line=64
            ).fraction_passing
            for d1 in (0.5, 0.7, 0.9, 0.97)
        ]
        assert all(a <= b for a, b in zip(fractions, fractions[1:]))

    def test_scale_overflow(self, grid16):
        om = self._bump_field(grid16, width=0.4)
        # every admissible scale is excluded by a radii grid above min(budget, L/2)
        with pytest.raises(ScaleOverflowError, match="scale overflow"):
            z.regularity_criterion_check(om, c_m=1.0, lam=LAMBDA, radii=[grid16.L])

    def test_selection_uses_component_max(self, grid16):
        data = np.zeros((3, 16, 16, 16))
        data[1] = -2.0  # |omega| = 2 attained by the negative part of comp 2
        data[0] = 1.0
        om = z.VectorField(grid16, data)
        rep = z.regularity_criterion_check(om, c_m=1.0, lam=0.5, n_points=4, n_dir=8, m_line=32)
        assert all(p.set_id == "2-" for p in rep.points)

    def test_deterministic(self, grid16):
        rng = np.random.default_rng(6)
        om = z.VectorField(grid16, rng.standard_normal((3, 16, 16, 16)))
        a = z.regularity_criterion_check(om, c_m=1.0, lam=LAMBDA, n_points=8, n_dir=16, m_line=64)
        b = z.regularity_criterion_check(om, c_m=1.0, lam=LAMBDA, n_points=8, n_dir=16, m_line=64)
        assert a.fraction_passing == b.fraction_passing
        assert [p.witness_scale for p in a.points] == [p.witness_scale for p in b.points]


class TestHelpers:
    def test_fibonacci_sphere_unit_norm(self):
        d = fibonacci_sphere(64)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
        # antipodal balance: the mean should be near zero
        assert np.linalg.norm(d.mean(axis=0)) < 0.05

    def test_geometric_radii(self):
        r = geometric_radii(0.1, 1.0, 24)
        assert len(r) == 25
        assert r[0] == pytest.approx(0.1) and r[-1] == pytest.approx(1.0)
        np.testing.assert_allclose(np.diff(np.log(r)), np.log(r[1] / r[0]), rtol=1e-9)
