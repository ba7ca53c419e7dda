"""
U6: BDT 後退当てはめのユニットテスト

テスト対象: src/solver/bdt.py

テスト観点:
- 目的関数の履歴がブロック更新ごとに単調非増加
- 収束時の目的関数値が参照ソルバー（cvxpy）と一致
- λ が大きければ全ブロックがゼロ、定数応答では定数のフィット
- 収束後のゼロブロックは部分残差で解き直してもゼロ
- 周回上限で converged=False、退化ブロックの除外
- ロジスティック: 切片 logit(ȳ)、単調性、参照ソルバーとの一致
"""
import logging

import numpy as np
import pytest
from scipy.special import logit

from src.basis.blocks import build_basis_block, enumerate_blocks, materialize_blocks
from src.basis.knots import ProjectionChoice, build_knot_system
from src.basis.psi import build_psi_basis
from src.errors import InvalidDataError
from src.solver.bdt import bdt_fit, bdt_logit_fit, logistic_loss, penalty_total, squared_loss
from src.solver.lasso import solve_block
from src.solver.models import PenaltyConfig


def design_blocks(X, order=2, n_knots=5, max_order=2):
    """X の全ブロックを中心化済みで作る"""
    knots = build_knot_system(X, n_knots, order)
    bases = {j: build_psi_basis(knots, ProjectionChoice.averaging(), j) for j in range(X.shape[1])}
    blocks = [build_basis_block(s, bases) for s in enumerate_blocks(X.shape[1], max_order)]
    return materialize_blocks(blocks, bases, X)


def assert_nonincreasing(trace):
    trace = np.asarray(trace)
    scale = 1.0 + np.abs(trace[:-1])
    assert np.all(np.diff(trace) <= 1e-12 * scale)


def reference_objective(cp, Y, blocks, pen, loss='squared'):
    """cvxpy で同じ目的関数を最小化した値"""
    n = len(Y)
    variables = [cp.Variable(b.n_columns) for b in blocks]
    fitted = sum(b.centered @ v for b, v in zip(blocks, variables))
    penalty = sum(
        b.block.weights(pen.rho) @ cp.abs(v) + pen.lam_for(b.block.size) * cp.norm(b.centered @ v, 2) / np.sqrt(n)
        for b, v in zip(blocks, variables)
    )
    if loss == 'logistic':
        mu = cp.Variable()
        eta = mu + fitted
        data_fit = cp.sum(cp.logistic(eta) - cp.multiply(Y, eta)) / n
    else:
        data_fit = 0.5 * cp.sum_squares(Y - np.mean(Y) - fitted) / n
    problem = cp.Problem(cp.Minimize(data_fit + penalty))
    problem.solve()
    return problem.value


@pytest.fixture
def blocks(regression_data):
    X, _ = regression_data
    return design_blocks(X)


# ===========================================================================
# Test: 二乗損失
# ===========================================================================

class TestBdtFit:
    """二乗損失の BDT"""

    def test_trace_is_monotone(self, regression_data, blocks):
        """全てのブロック更新で目的関数は増えない"""
        _, Y = regression_data
        state = bdt_fit(Y, blocks, PenaltyConfig.tied(0.002, 0.01, 2))
        assert state.converged
        assert len(state.objective_trace) > len(blocks)
        assert_nonincreasing(state.objective_trace)

    def test_objective_accounting(self, regression_data, blocks):
        """最終値 = 損失 + 罰則（係数から再計算）"""
        _, Y = regression_data
        pen = PenaltyConfig.tied(0.002, 0.01, 2)
        state = bdt_fit(Y, blocks, pen)
        fitted = state.recompute_fitted(blocks)
        np.testing.assert_allclose(state.fitted, fitted, atol=1e-10)
        expected = squared_loss(Y, state.intercept, fitted) + penalty_total(blocks, state.coefficients, pen)
        assert state.objective == pytest.approx(expected, rel=1e-10)
        assert state.intercept == pytest.approx(np.mean(Y))

    def test_selects_relevant_blocks(self, regression_data, blocks):
        """無関係な x3 を含むブロックは非能動"""
        _, Y = regression_data
        state = bdt_fit(Y, blocks, PenaltyConfig.tied(0.002, 0.05, 2))
        assert (0,) in state.active_blocks
        assert (2,) not in state.active_blocks

    def test_zero_blocks_are_fixed_points(self, regression_data, blocks):
        """収束後にゼロのブロックを部分残差で解き直してもゼロのまま"""
        _, Y = regression_data
        pen = PenaltyConfig.tied(0.002, 0.05, 2)
        state = bdt_fit(Y, blocks, pen, tol=1e-10)
        inactive = [b for b in blocks if b.subset not in state.active_blocks]
        assert inactive
        residual = Y - np.mean(Y) - state.fitted
        for block in inactive:
            beta = solve_block(residual, block, block.block.weights(pen.rho), pen.lam_for(block.block.size))
            assert np.all(beta == 0.0), block.subset

    def test_large_lambda_all_zero(self, regression_data, blocks):
        """λ が大きければ全ブロックがゼロ、目的関数は分散の半分"""
        _, Y = regression_data
        state = bdt_fit(Y, blocks, PenaltyConfig.tied(0.01, 1e3, 2))
        assert state.active_blocks == ()
        assert state.n_nonzero == 0
        assert state.objective == pytest.approx(0.5 * np.var(Y))
        assert state.converged

    def test_constant_response(self, blocks):
        """定数応答では全ブロックがゼロで切片はその定数"""
        Y = np.full(blocks[0].n_rows, 3.0)
        state = bdt_fit(Y, blocks, PenaltyConfig.tied(0.01, 0.01, 2))
        assert state.active_blocks == ()
        assert state.intercept == 3.0
        assert state.objective == 0.0

    def test_warm_start(self, regression_data, blocks):
        """収束済みの解から始めると同じ値に早く収束する"""
        _, Y = regression_data
        pen = PenaltyConfig.tied(0.002, 0.01, 2)
        cold = bdt_fit(Y, blocks, pen)
        warm = bdt_fit(Y, blocks, pen, warm=cold)
        assert warm.objective == pytest.approx(cold.objective, rel=1e-6)
        assert warm.n_cycles <= cold.n_cycles

    def test_cycle_limit(self, regression_data, blocks, caplog):
        """周回上限に達すると converged=False と警告"""
        _, Y = regression_data
        with caplog.at_level(logging.WARNING, logger='src.solver.bdt'):
            state = bdt_fit(Y, blocks, PenaltyConfig.tied(0.001, 0.001, 2), max_cycles=1)
        assert not state.converged
        assert state.n_cycles == 1
        assert "収束しませんでした" in caplog.text

    def test_degenerate_block_skipped(self, regression_data, blocks, make_design_block, caplog):
        """中心化後に全列ゼロのブロックは常にゼロ"""
        _, Y = regression_data
        degenerate = make_design_block(np.ones((len(Y), 3)), [0, 1, 1], subset=(9,))
        with caplog.at_level(logging.WARNING, logger='src.solver.bdt'):
            state = bdt_fit(Y, list(blocks) + [degenerate], PenaltyConfig.tied(0.002, 0.01, 2))
        assert np.all(state.coefficients[(9,)] == 0.0)
        assert "(9,)" in caplog.text

    def test_input_validation(self, regression_data, blocks):
        _, Y = regression_data
        with pytest.raises(InvalidDataError):
            bdt_fit(Y[:-1], blocks, PenaltyConfig.tied(0.01, 0.01, 2))
        with pytest.raises(InvalidDataError):
            bdt_fit(Y, blocks, PenaltyConfig.tied(0.01, 0.01, 1))
        with pytest.raises(InvalidDataError):
            bdt_fit(np.where(np.arange(len(Y)) == 0, np.nan, Y), blocks, PenaltyConfig.tied(0.01, 0.01, 2))


class TestBdtReference:
    """参照ソルバーとの一致"""

    def test_single_block_instances(self, rng, make_design_block):
        """n=40、12列の1ブロック問題 50 個"""
        cp = pytest.importorskip("cvxpy")
        for _ in range(50):
            raw = rng.random((40, 12))
            block = make_design_block(raw, rng.integers(0, 3, size=12))
            Y = raw @ rng.standard_normal(12) + 0.3 * rng.standard_normal(40)
            pen = PenaltyConfig(
                rho=tuple(rng.uniform(0.002, 0.05, size=2)),
                lam=(float(rng.uniform(0.01, 0.1)),) * 2,
            )
            state = bdt_fit(Y, [block], pen)
            assert_nonincreasing(state.objective_trace)
            assert state.objective == pytest.approx(reference_objective(cp, Y, [block], pen), rel=1e-5)

    def test_multi_block(self, regression_data, blocks):
        """全ブロックの問題"""
        cp = pytest.importorskip("cvxpy")
        _, Y = regression_data
        pen = PenaltyConfig.tied(0.002, 0.01, 2)
        state = bdt_fit(Y, blocks, pen, tol=1e-12, max_cycles=5000)
        assert state.objective == pytest.approx(reference_objective(cp, Y, blocks, pen), rel=1e-4)


# ===========================================================================
# Test: ロジスティック損失
# ===========================================================================

class TestBdtLogitFit:
    """ロジスティック損失の BDT"""

    @pytest.fixture
    def logit_blocks(self, classification_data):
        X, _ = classification_data
        return design_blocks(X, n_knots=6)

    def test_intercept_only(self, classification_data, logit_blocks):
        """全ブロックがゼロなら切片は logit(ȳ)"""
        _, y = classification_data
        state = bdt_logit_fit(y, logit_blocks, PenaltyConfig.tied(0.01, 1e3, 2))
        assert state.active_blocks == ()
        assert state.intercept == pytest.approx(logit(np.mean(y)))
        assert state.objective == pytest.approx(logistic_loss(y, state.intercept, np.zeros(len(y))))

    def test_trace_is_monotone(self, classification_data, logit_blocks):
        _, y = classification_data
        state = bdt_logit_fit(y, logit_blocks, PenaltyConfig.tied(0.002, 0.005, 2))
        assert state.loss == 'logistic'
        assert state.active_blocks
        assert_nonincreasing(state.objective_trace)

    def test_matches_reference_solver(self, classification_data, logit_blocks):
        cp = pytest.importorskip("cvxpy")
        _, y = classification_data
        pen = PenaltyConfig.tied(0.002, 0.005, 2)
        state = bdt_logit_fit(y, logit_blocks, pen, tol=1e-12, max_cycles=20000)
        expected = reference_objective(cp, y, logit_blocks, pen, loss='logistic')
        assert state.objective == pytest.approx(expected, rel=1e-4)

    def test_labels_must_be_binary(self, classification_data, logit_blocks):
        _, y = classification_data
        with pytest.raises(InvalidDataError):
            bdt_logit_fit(y * 2.0, logit_blocks, PenaltyConfig.tied(0.01, 0.01, 2))
        with pytest.raises(InvalidDataError):
            bdt_logit_fit(np.zeros(len(y)), logit_blocks, PenaltyConfig.tied(0.01, 0.01, 2))
