"""
U4: 全変動の検証器のユニットテスト

テスト対象: src/htv/total_variation.py, src/htv/grid.py

テスト観点:
- 生の TV の既知の値（加法的関数は 0、z1·z2 は 1、1次元の例）
- 低次の関数を加えても生の TV は不変、正の斉次性
- ANOVA 成分経由の HTV と定義どおりの HTV の一致（m=1）
- Ψ 展開のグリッド関数の HTV と Σ‖Rβ‖₁ の一致（m ∈ {1, 2}、中央ノットや座標ごとの固定点を含む）
- 切断べき基底の TV は係数の ℓ1 ノルム
- 対応範囲外の (m, d)
"""
import itertools

import numpy as np
import pytest

from src.basis.blocks import build_basis_block
from src.basis.knots import KnotSystem, ProjectionChoice, build_knots
from src.basis.psi import build_psi_basis
from src.errors import InvalidDataError, UnsupportedCaseError
from src.htv.grid import GridFunction, anova_decompose, spline_on_grid
from src.htv.total_variation import htv, htv_via_components, raw_tv

PROJECTIONS = [ProjectionChoice.averaging(), ProjectionChoice.fixed('min'), ProjectionChoice.fixed('max')]
PROJECTION_IDS = ['averaging', 'fixed-min', 'fixed-max']


def random_knots(gen, count):
    return np.sort(gen.random(count))


def make_bases(knot_values, order, projection):
    """各軸のノット値から Ψ 基底を作る"""
    marginals = tuple(
        build_knots(values, len(values), order, covariate=j)
        for j, values in enumerate(knot_values)
    )
    system = KnotSystem(order=order, marginals=marginals)
    return {j: build_psi_basis(system, projection, j) for j in range(len(marginals))}


# ===========================================================================
# Test: raw_tv
# ===========================================================================

class TestRawTV:
    """生の全変動"""

    def test_additive_function_has_zero_tv(self):
        """g(z1, z2) = z1 + z2 → 0"""
        g = GridFunction.from_callable([np.linspace(0, 1, 5)] * 2, lambda a, b: a + b)
        assert raw_tv(g) == 0.0

    def test_interaction_on_unit_square(self):
        """g(z1, z2) = z1 z2 を {0, 1}² で → 1"""
        g = GridFunction.from_callable([np.array([0.0, 1.0])] * 2, lambda a, b: a * b)
        assert raw_tv(g) == 1.0

    def test_one_dimensional(self):
        """(1, 3, 2) → |2| + |-1| = 3"""
        assert raw_tv(np.array([1.0, 3.0, 2.0])) == 3.0

    def test_lower_order_terms_ignored(self, rng):
        """d 未満の変数の関数を加えても不変"""
        values = rng.standard_normal((4, 5))
        shifted = values + rng.standard_normal((4, 1)) + rng.standard_normal((1, 5))
        assert raw_tv(shifted) == pytest.approx(raw_tv(values), abs=1e-12)

    def test_scaling(self, rng):
        values = rng.standard_normal((3, 3, 3))
        assert raw_tv(-2.5 * values) == pytest.approx(2.5 * raw_tv(values))

    def test_empty_grid(self):
        with pytest.raises(InvalidDataError):
            raw_tv(np.array([]))


# ===========================================================================
# Test: GridFunction と ANOVA 分解
# ===========================================================================

class TestAnovaDecomposition:
    """多元 ANOVA 分解"""

    def test_shape_mismatch(self):
        with pytest.raises(InvalidDataError):
            GridFunction((np.arange(3.0), np.arange(4.0)), np.zeros((4, 3)))

    @pytest.mark.parametrize("projection", PROJECTIONS, ids=PROJECTION_IDS)
    def test_components_reconstruct(self, rng, projection):
        """成分の和は元の関数"""
        knots = (random_knots(rng, 4), random_knots(rng, 3), random_knots(rng, 5))
        g = GridFunction(knots, rng.standard_normal((4, 3, 5)))
        decomposition = anova_decompose(g, projection)
        assert len(decomposition.components) == 8
        np.testing.assert_allclose(decomposition.reconstruct(), g.values, atol=1e-12)

    def test_components_are_centered(self, rng):
        """平均化作用素: S に含まれる軸の平均はゼロ"""
        knots = (random_knots(rng, 4), random_knots(rng, 5))
        g = GridFunction(knots, rng.standard_normal((4, 5)))
        decomposition = anova_decompose(g, ProjectionChoice.averaging())
        np.testing.assert_allclose(decomposition.component((0, 1)).mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(decomposition.component((0, 1)).mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(decomposition.component((1,)).mean(axis=1), 0.0, atol=1e-12)

    def test_points_order(self):
        """最初の座標が最も遅く変化"""
        g = GridFunction((np.array([0.0, 1.0]), np.array([5.0, 6.0, 7.0])), np.zeros((2, 3)))
        np.testing.assert_array_equal(g.points()[:3], [[0.0, 5.0], [0.0, 6.0], [0.0, 7.0]])


# ===========================================================================
# Test: htv
# ===========================================================================

class TestHTV:
    """階層的全変動"""

    def test_order1_one_dimensional(self):
        """d=1, m=1 は ρ_1 TV"""
        g = GridFunction((np.arange(3.0),), np.array([1.0, 3.0, 2.0]))
        assert htv(g, 1, (0.5,), ProjectionChoice.averaging()) == pytest.approx(1.5)

    def test_order2_one_dimensional(self):
        """|z - 1| の傾きの TV は 2"""
        g = GridFunction((np.array([0.0, 1.0, 2.0]),), np.array([1.0, 0.0, 1.0]))
        assert htv(g, 2, (1.0,), ProjectionChoice.averaging()) == pytest.approx(2.0)

    def test_additive_function_pays_only_main_effects(self):
        """加法的関数では交互作用の TV は 0"""
        knots = [np.linspace(0, 1, 5)] * 2
        g = GridFunction.from_callable(knots, lambda a, b: np.abs(a - 0.5) + b ** 2)
        with_interaction = htv(g, 1, (1.0, 100.0), ProjectionChoice.averaging())
        without = htv(g, 1, (1.0, 0.0), ProjectionChoice.averaging())
        assert with_interaction == pytest.approx(without)

    @pytest.mark.parametrize("order", [1, 2])
    def test_homogeneity(self, rng, order):
        """HTV(c g) = |c| HTV(g)"""
        knots = (random_knots(rng, 4), random_knots(rng, 5))
        values = rng.standard_normal((4, 5))
        projection = ProjectionChoice.averaging()
        base = htv(GridFunction(knots, values), order, (0.3, 0.7), projection)
        scaled = htv(GridFunction(knots, -3.0 * values), order, (0.3, 0.7), projection)
        assert scaled == pytest.approx(3.0 * base, rel=1e-12)

    def test_unsupported_cases(self, rng):
        """m=2 の d=3、m=3"""
        knots = tuple(random_knots(rng, 3) for _ in range(3))
        g = GridFunction(knots, rng.standard_normal((3, 3, 3)))
        with pytest.raises(UnsupportedCaseError):
            htv(g, 2, (1.0, 1.0, 1.0), ProjectionChoice.averaging())
        g1 = GridFunction((knots[0],), rng.standard_normal(3))
        with pytest.raises(UnsupportedCaseError):
            htv(g1, 3, (1.0,), ProjectionChoice.averaging())
        with pytest.raises(UnsupportedCaseError):
            htv_via_components(g1, (1.0,), ProjectionChoice.averaging(), order=2)

    def test_rho_too_short(self, rng):
        g = GridFunction((random_knots(rng, 3), random_knots(rng, 3)), rng.standard_normal((3, 3)))
        with pytest.raises(InvalidDataError):
            htv(g, 1, (1.0,), ProjectionChoice.averaging())


class TestComponentsEquivalence:
    """m=1: 定義どおりの HTV と ANOVA 成分経由の HTV"""

    @pytest.mark.parametrize("projection", PROJECTIONS, ids=PROJECTION_IDS)
    def test_random_grid_functions(self, rng, projection):
        """d ∈ {2, 3} のランダムなグリッド関数 100 個"""
        for trial in range(100):
            d = 2 + trial % 2
            sizes = rng.integers(2, 6, size=d)
            knots = tuple(random_knots(rng, int(s)) for s in sizes)
            g = GridFunction(knots, rng.standard_normal(tuple(int(s) for s in sizes)))
            rho = tuple(rng.uniform(0.1, 2.0, size=d))
            assert htv_via_components(g, rho, projection) == pytest.approx(
                htv(g, 1, rho, projection), abs=1e-9
            )


class TestBasisEquivalence:
    """Ψ 展開のグリッド関数: HTV = Σ_S ‖R β_S‖₁"""

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("projection", PROJECTIONS, ids=PROJECTION_IDS)
    def test_two_dimensional(self, rng, order, projection):
        """d=2、n_j ∈ {3, 4, 5} のランダムな係数"""
        for _ in range(50):
            sizes = rng.integers(3, 6, size=2)
            bases = make_bases([random_knots(rng, int(s)) for s in sizes], order, projection)
            blocks = [build_basis_block(s, bases) for s in [(0,), (1,), (0, 1)]]
            coefficients = {b.subset: rng.standard_normal(b.n_columns) for b in blocks}
            rho = tuple(rng.uniform(0.1, 2.0, size=2))

            g = spline_on_grid(bases, coefficients, intercept=rng.standard_normal())
            expected = sum(b.penalty(coefficients[b.subset], rho) for b in blocks)
            assert htv(g, order, rho, projection) == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("projection", [
        ProjectionChoice.fixed('median'),
        ProjectionChoice.fixed(('min', 'max')),
        ProjectionChoice.fixed(('median', 'min')),
    ], ids=['fixed-median', 'fixed-min-max', 'fixed-median-min'])
    def test_median_and_mixed_anchors(self, rng, order, projection):
        """中央ノットや座標ごとに異なる固定点でも一致"""
        for _ in range(20):
            sizes = rng.integers(3, 6, size=2)
            bases = make_bases([random_knots(rng, int(s)) for s in sizes], order, projection)
            blocks = [build_basis_block(s, bases) for s in [(0,), (1,), (0, 1)]]
            coefficients = {b.subset: rng.standard_normal(b.n_columns) for b in blocks}
            rho = tuple(rng.uniform(0.1, 2.0, size=2))

            g = spline_on_grid(bases, coefficients, intercept=rng.standard_normal())
            expected = sum(b.penalty(coefficients[b.subset], rho) for b in blocks)
            assert htv(g, order, rho, projection) == pytest.approx(expected, abs=1e-8)

    def test_three_dimensional_order1(self, rng):
        """m=1, d=3（全ての部分集合のブロック）"""
        projection = ProjectionChoice.averaging()
        for _ in range(20):
            bases = make_bases([random_knots(rng, int(s)) for s in rng.integers(3, 5, size=3)], 1, projection)
            subsets = [s for k in (1, 2, 3) for s in itertools.combinations(range(3), k)]
            blocks = [build_basis_block(s, bases) for s in subsets]
            coefficients = {b.subset: rng.standard_normal(b.n_columns) for b in blocks}
            rho = (0.5, 1.0, 1.5)
            g = spline_on_grid(bases, coefficients)
            expected = sum(b.penalty(coefficients[b.subset], rho) for b in blocks)
            assert htv(g, 1, rho, projection) == pytest.approx(expected, abs=1e-8)

    def test_sparse_expansion(self, rng):
        """主効果だけの展開では交互作用の重みが効かない"""
        projection = ProjectionChoice.averaging()
        bases = make_bases([random_knots(rng, 4), random_knots(rng, 5)], 2, projection)
        block = build_basis_block((1,), bases)
        beta = rng.standard_normal(block.n_columns)
        g = spline_on_grid(bases, {(1,): beta})
        assert htv(g, 2, (1.0, 50.0), projection) == pytest.approx(block.penalty(beta, (1.0, 50.0)), abs=1e-8)


class TestTruncatedPowerTV:
    """m=1 の切断べき基底: TV_k(βᵀΦ) = ‖β‖₁"""

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_l1_identity(self, rng, k):
        projection = ProjectionChoice.averaging()
        bases = make_bases([random_knots(rng, int(s)) for s in rng.integers(3, 6, size=k)], 1, projection)
        phis = [bases[j].evaluate_phi(bases[j].marginal.knots) for j in range(k)]
        beta = rng.standard_normal(tuple(p.shape[1] for p in phis))
        if k == 1:
            values = phis[0] @ beta
        elif k == 2:
            values = phis[0] @ beta @ phis[1].T
        else:
            values = np.einsum('ia,jb,kc,abc->ijk', *phis, beta)
        assert raw_tv(values) == pytest.approx(np.sum(np.abs(beta)), abs=1e-12)
