"""
U3: 交互作用ブロックと計画行列のユニットテスト

テスト対象: src/basis/blocks.py

テスト観点:
- 部分集合の列挙順（サイズ順 → 辞書順）
- 列の多重添字・非微分次数・罰則重み
- 評価行列のテンソル積構造と非有限値の検出
- 中心化（列平均ゼロ）、行の部分集合での再中心化、新しい点の中心化
- 基底系の完全性（ノットグリッド上で階数 = 点数）と重みゼロの列数 (m-1)^k
- m=1 の下三角の段差パターン
"""
import itertools

import numpy as np
import pytest

from src.basis.blocks import (
    build_basis_block,
    enumerate_blocks,
    evaluate_block,
    materialize_block,
    materialize_blocks,
)
from src.basis.knots import KnotSystem, ProjectionChoice, build_knot_system, build_knots
from src.basis.psi import build_psi_basis
from src.errors import InvalidDataError


@pytest.fixture
def data(rng):
    return rng.random((30, 3))


@pytest.fixture
def bases(data):
    """m=2、ノット数 (4, 5, 4) の Ψ 基底"""
    knots = build_knot_system(data, {0: 4, 1: 5, 2: 4}, 2)
    return {j: build_psi_basis(knots, ProjectionChoice.averaging(), j) for j in range(3)}


# ===========================================================================
# Test: enumerate_blocks
# ===========================================================================

class TestEnumerateBlocks:
    """部分集合の列挙"""

    def test_order(self):
        """サイズ順、同サイズは辞書順"""
        assert enumerate_blocks(3, 2) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]

    def test_count(self):
        """p=10, K=2 で 10 + 45"""
        assert len(enumerate_blocks(10, 2)) == 55

    def test_subset_of_covariates(self):
        """除外された共変量を飛ばす"""
        assert enumerate_blocks(3, 2, covariates=[0, 2]) == [(0,), (2,), (0, 2)]

    def test_invalid_order(self):
        with pytest.raises(InvalidDataError):
            enumerate_blocks(3, 0)
        with pytest.raises(InvalidDataError):
            enumerate_blocks(2, 3)


# ===========================================================================
# Test: BasisBlock
# ===========================================================================

class TestBasisBlock:
    """列の添字付けと罰則重み"""

    def test_main_effect_degrees(self, bases):
        """m=2 の主効果: ν=2 は無罰則、ν>=3 は次数1"""
        block = build_basis_block((0,), bases)
        assert block.multi_indices == ((2,), (3,), (4,))
        assert block.degrees.tolist() == [0, 1, 1]
        assert block.n_unpenalized == 1

    def test_interaction_columns(self, bases):
        """(0, 1) ブロックは 3 × 4 列、次数は切断座標の数"""
        block = build_basis_block((0, 1), bases)
        assert block.n_columns == 12
        assert block.multi_indices[0] == (2, 2)
        assert block.degrees[0] == 0
        assert block.degrees[block.multi_indices.index((2, 4))] == 1
        assert block.degrees[block.multi_indices.index((3, 5))] == 2

    def test_weights_follow_degrees(self, bases):
        """ρ_0 = 0、ρ_l は次数 l の列"""
        block = build_basis_block((0, 1), bases)
        weights = block.weights((0.1, 0.5))
        expected = np.array([0.0, 0.1, 0.5])[block.degrees]
        np.testing.assert_allclose(weights, expected)

    def test_weights_need_enough_rho(self, bases):
        block = build_basis_block((0, 1), bases)
        with pytest.raises(InvalidDataError):
            block.weights((0.1,))

    def test_penalty_is_weighted_l1(self, bases):
        """‖Rβ‖_1"""
        block = build_basis_block((1,), bases)
        beta = np.array([5.0, -1.0, 2.0, -3.0])
        assert block.penalty(beta, (0.5,)) == pytest.approx(0.5 * (1.0 + 2.0 + 3.0))

    def test_order1_all_penalized(self, data):
        """m=1 では全列が次数1以上"""
        knots = build_knot_system(data, 4, 1)
        bases = {j: build_psi_basis(knots, ProjectionChoice.averaging(), j) for j in range(3)}
        block = build_basis_block((0, 2), bases)
        assert np.all(block.degrees == 2)


# ===========================================================================
# Test: 評価と中心化
# ===========================================================================

class TestDesignBlock:
    """評価行列と中心化"""

    def test_tensor_product_columns(self, bases, data):
        """列 (ν, ν') は ψ_ν(x_0) ψ_ν'(x_1)"""
        block = build_basis_block((0, 1), bases)
        values = evaluate_block(block, bases, data)
        k = block.multi_indices.index((3, 4))
        expected = bases[0].psi[1](data[:, 0]) * bases[1].psi[2](data[:, 1])
        np.testing.assert_allclose(values[:, k], expected)

    def test_centered_columns(self, bases, data):
        """中心化列の平均はゼロ、グラム行列は Ψ̃ᵀΨ̃/n"""
        design = materialize_block(build_basis_block((0, 2), bases), bases, data)
        np.testing.assert_allclose(design.centered.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(design.gram, design.centered.T @ design.centered / 30)
        np.testing.assert_allclose(design.raw - design.means, design.centered)

    def test_take_recenters(self, bases, data):
        """行の部分集合で中心化し直す"""
        design = materialize_block(build_basis_block((1,), bases), bases, data)
        rows = np.arange(0, 30, 3)
        part = design.take(rows)
        assert part.n_rows == 10
        np.testing.assert_allclose(part.raw, design.raw[rows])
        np.testing.assert_allclose(part.centered.mean(axis=0), 0.0, atol=1e-12)

    def test_centered_at_uses_training_means(self, bases, data, rng):
        """新しい点は学習時の列平均で中心化"""
        block = build_basis_block((0,), bases)
        design = materialize_block(block, bases, data)
        new = rng.random((5, 3))
        raw = evaluate_block(block, bases, new)
        np.testing.assert_allclose(design.centered_at(raw), raw - design.means)

    def test_empirical_norm(self, bases, data):
        design = materialize_block(build_basis_block((0,), bases), bases, data)
        beta = np.array([1.0, -2.0, 0.5])
        expected = np.sqrt(np.mean((design.centered @ beta) ** 2))
        assert design.empirical_norm(beta) == pytest.approx(expected)

    def test_not_degenerate(self, bases, data):
        design = materialize_block(build_basis_block((0,), bases), bases, data)
        assert not design.is_degenerate

    def test_degenerate_block(self, make_design_block):
        """中心化後に全列ゼロ"""
        design = make_design_block(np.ones((10, 3)), [0, 1, 1])
        assert design.is_degenerate

    def test_non_finite_rejected(self, bases, data):
        """NaN を含むデータ"""
        block = build_basis_block((0, 1), bases)
        data = data.copy()
        data[4, 1] = np.nan
        with pytest.raises(InvalidDataError):
            materialize_block(block, bases, data)
        with pytest.raises(InvalidDataError, match="行 4"):
            evaluate_block(block, bases, data)

    def test_missing_basis(self, bases, data):
        block = build_basis_block((0, 1), bases)
        with pytest.raises(InvalidDataError):
            materialize_block(block, {0: bases[0]}, data)

    def test_parallel_matches_serial(self, bases, data):
        """並列評価でもブロックの順序と値は同じ"""
        blocks = [build_basis_block(s, bases) for s in enumerate_blocks(3, 2)]
        serial = materialize_blocks(blocks, bases, data)
        parallel = materialize_blocks(blocks, bases, data, max_workers=3)
        for a, b in zip(serial, parallel):
            assert a.subset == b.subset
            np.testing.assert_array_equal(a.centered, b.centered)


# ===========================================================================
# Test: 基底系全体の性質
# ===========================================================================

def bases_on_knots(knot_values, order, projection):
    """各軸のノット値そのものをデータとした Ψ 基底"""
    marginals = tuple(
        build_knots(np.asarray(values, dtype=float), len(values), order, covariate=j)
        for j, values in enumerate(knot_values)
    )
    system = KnotSystem(order=order, marginals=marginals)
    return {j: build_psi_basis(system, projection, j) for j in range(len(marginals))}


class TestBasisSystem:
    """全ブロックを合わせた基底系"""

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("projection", [
        ProjectionChoice.averaging(),
        ProjectionChoice.fixed('min'),
        ProjectionChoice.fixed('max'),
        ProjectionChoice.fixed('median'),
    ], ids=['averaging', 'fixed-min', 'fixed-max', 'fixed-median'])
    @pytest.mark.parametrize("sizes", [(3,), (5,), (3, 4), (5, 3)])
    def test_complete_on_knot_grid(self, order, projection, sizes):
        """{1} ∪ Ψ はノットグリッド上の関数全体を張り、列数はグリッド点数 - 1"""
        bases = bases_on_knots([np.linspace(0.0, 1.0, s) for s in sizes], order, projection)
        mesh = np.meshgrid(*(bases[j].marginal.knots for j in range(len(sizes))), indexing='ij')
        points = np.column_stack([m.ravel() for m in mesh])
        subsets = [s for k in range(1, len(sizes) + 1) for s in itertools.combinations(range(len(sizes)), k)]
        columns = np.hstack([evaluate_block(build_basis_block(s, bases), bases, points) for s in subsets])

        grid_size = int(np.prod(sizes))
        assert columns.shape[1] == grid_size - 1
        full = np.column_stack([np.ones(grid_size), columns])
        assert np.linalg.matrix_rank(full) == grid_size

    @pytest.mark.parametrize("order", [1, 2, 3])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_unpenalized_column_count(self, order, k):
        """重みゼロの列はちょうど (m-1)^k 本"""
        bases = bases_on_knots([np.linspace(0.0, 1.0, 6)] * k, order, ProjectionChoice.averaging())
        block = build_basis_block(tuple(range(k)), bases)
        assert block.n_unpenalized == (order - 1) ** k
        assert int(np.sum(block.weights((1.0,) * k) == 0.0)) == (order - 1) ** k

    def test_order1_step_pattern(self):
        """m=1・最小点固定でノットそのものを評価すると下三角の 0/1 パターン"""
        knots = np.array([0.0, 0.5, 1.0])
        bases = bases_on_knots([knots], 1, ProjectionChoice.fixed('min'))
        design = materialize_block(build_basis_block((0,), bases), bases, knots[:, None])
        np.testing.assert_array_equal(design.raw, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
