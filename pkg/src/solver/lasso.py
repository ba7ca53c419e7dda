"""
ブロック部分問題: 重み付き Lasso と経験ノルムのソフト閾値

部分問題
    min_β  (1/2)‖r - Ψ̃β‖_n² + ‖Rβ‖_1 + λ‖Ψ̃β‖_n
の解は、λ を除いた Lasso の解 β̃ を
    β̂ = (1 - λ/‖Ψ̃β̃‖_n)_+ β̃
で縮小したものに一致する。

Lasso はブロックのグラム行列 G = Ψ̃ᵀΨ̃/n 上の座標降下（numba）で解き、
数パスごとに非ゼロ集合上の厳密解へ進む（符号が変わる座標は外す）。
"""
import logging
from typing import Optional

import numpy as np
from numba import njit

from src.basis.blocks import DesignBlock
from src.errors import InvalidDataError, LassoConvergenceError
from src.solver import config

logger = logging.getLogger(__name__)


@njit(cache=True, nogil=True)
def _coordinate_descent(gram, grad, weights, beta, n_passes):
    """
    巡回座標降下を n_passes 回行う（beta と grad をその場で更新）

    grad は c - Gβ（目的関数の負の勾配）を保持する。
    対角がゼロの列（中心化後にゼロの列）は触らない。
    """
    p = beta.shape[0]
    for _ in range(n_passes):
        for j in range(p):
            diag = gram[j, j]
            if diag <= 0.0:
                continue
            z = grad[j] + diag * beta[j]
            excess = abs(z) - weights[j]
            new = 0.0
            if excess > 0.0:
                new = excess / diag if z > 0.0 else -excess / diag
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                for l in range(p):
                    grad[l] -= delta * gram[l, j]


@njit(cache=True, nogil=True)
def _kkt_gap(gram, grad, weights, beta):
    """KKT 条件からの最大乖離"""
    gap = 0.0
    for j in range(beta.shape[0]):
        if gram[j, j] <= 0.0:
            continue
        if beta[j] > 0.0:
            violation = abs(grad[j] - weights[j])
        elif beta[j] < 0.0:
            violation = abs(grad[j] + weights[j])
        else:
            violation = max(abs(grad[j]) - weights[j], 0.0)
        if violation > gap:
            gap = violation
    return gap


def _gram_objective(gram: np.ndarray, linear: np.ndarray, weights: np.ndarray, beta: np.ndarray) -> float:
    """(1/2)βᵀGβ - cᵀβ + Σ w_j|β_j|（定数項を除いた Lasso の目的関数）"""
    return float(0.5 * beta @ gram @ beta - linear @ beta + weights @ np.abs(beta))


def _active_set_step(
    gram: np.ndarray,
    linear: np.ndarray,
    weights: np.ndarray,
    beta: np.ndarray,
    live: np.ndarray,
) -> Optional[np.ndarray]:
    """
    現在の非ゼロ集合と符号を固定した厳密解 G_SS x = c_S - w_S sign(β_S) へ進む

    厳密解で符号が保たれない場合は、最初に符号が変わる座標がゼロになる点まで
    線分上を進み、その座標を非ゼロ集合から外す。
    目的関数が下がらない場合は None。
    """
    support = live & ((beta != 0.0) | (weights == 0.0))
    if not np.any(support):
        return None
    signs = np.sign(beta[support])
    rhs = linear[support] - weights[support] * signs
    solution = np.linalg.lstsq(gram[np.ix_(support, support)], rhs, rcond=None)[0]
    target = np.zeros_like(beta)
    target[support] = solution

    crossing = support & (weights > 0.0) & (np.sign(target) != np.sign(beta))
    if np.any(crossing):
        direction = target - beta
        steps = -beta[crossing] / direction[crossing]
        step = float(np.min(steps))
        candidate = beta + step * direction
        candidate[np.flatnonzero(crossing)[steps <= step]] = 0.0
    else:
        candidate = target

    if _gram_objective(gram, linear, weights, candidate) > _gram_objective(gram, linear, weights, beta):
        return None
    return candidate


def solve_lasso_block(
    r: np.ndarray,
    block: DesignBlock,
    weights: np.ndarray,
    warm: Optional[np.ndarray] = None,
    tol: float = config.LASSO_KKT_TOL,
    max_passes: int = config.LASSO_MAX_PASSES,
) -> np.ndarray:
    """
    重み付き Lasso (1/2)‖r - Ψ̃β‖_n² + Σ_j w_j|β_j| を解く。

    Args:
        r: 部分残差（n ベクトル）
        block: DesignBlock
        weights: 列ごとの非負の重み（ρ_l）
        warm: 初期値（直前の解）
        tol: KKT 残差の相対許容値
        max_passes: 座標降下の最大パス数

    Returns:
        β̃（重みが全てゼロなら最小ノルムの最小二乗解）

    Raises:
        InvalidDataError: 重みの長さ・符号が不正
        LassoConvergenceError: max_passes 以内に KKT 条件を満たさない
    """
    if tol <= 0:
        raise InvalidDataError(f"許容値は正でなければなりません: {tol}")
    weights = np.ascontiguousarray(weights, dtype=float)
    if weights.shape != (block.n_columns,):
        raise InvalidDataError(f"重みの長さ {weights.shape} が列数 {block.n_columns} と一致しません")
    if np.any(weights < 0):
        raise InvalidDataError("重みは非負でなければなりません")

    r = np.asarray(r, dtype=float)
    gram = np.ascontiguousarray(block.gram)
    linear = block.centered.T @ r / block.n_rows
    live = np.diag(gram) > 0.0
    tol_abs = tol * max(1.0, float(np.max(np.abs(linear), initial=0.0)))

    if not np.any(weights[live] > 0.0):
        beta = np.zeros(block.n_columns)
        if np.any(live):
            beta[live] = np.linalg.lstsq(block.centered[:, live], r, rcond=None)[0]
        return beta

    beta = np.zeros(block.n_columns) if warm is None else np.array(warm, dtype=float)
    beta[~live] = 0.0

    passes = 0
    while True:
        grad = linear - gram @ beta
        gap = _kkt_gap(gram, grad, weights, beta)
        if gap <= tol_abs:
            return beta

        stepped = _active_set_step(gram, linear, weights, beta, live)
        if stepped is not None:
            beta = np.ascontiguousarray(stepped)
            grad = linear - gram @ beta
            gap = _kkt_gap(gram, grad, weights, beta)
            if gap <= tol_abs:
                return beta

        if passes >= max_passes:
            break
        chunk = min(config.ACTIVE_SET_REFINE_EVERY, max_passes - passes)
        _coordinate_descent(gram, grad, weights, beta, chunk)
        passes += chunk

    raise LassoConvergenceError(
        f"ブロック {block.subset}: {max_passes} パスで収束しませんでした（KKT 残差 {gap:.3e}）",
        best=beta,
        kkt_gap=float(gap),
    )


def threshold_block(beta_tilde: np.ndarray, block: DesignBlock, lam: float) -> np.ndarray:
    """
    ベクトル版ソフト閾値 β̂ = (1 - λ/‖Ψ̃β̃‖_n)_+ β̃

    ‖Ψ̃β̃‖_n <= λ（ゼロを含む）ならゼロベクトルを返す。
    """
    if lam < 0:
        raise InvalidDataError(f"λ は非負でなければなりません: {lam}")
    beta_tilde = np.asarray(beta_tilde, dtype=float)
    if lam == 0:
        return beta_tilde.copy()
    norm = block.empirical_norm(beta_tilde)
    if norm <= lam:
        return np.zeros_like(beta_tilde)
    return (1.0 - lam / norm) * beta_tilde


def subproblem_objective(
    r: np.ndarray,
    block: DesignBlock,
    weights: np.ndarray,
    lam: float,
    beta: np.ndarray,
) -> float:
    """(1/2)‖r - Ψ̃β‖_n² + ‖Rβ‖_1 + λ‖Ψ̃β‖_n"""
    fitted = block.centered @ beta
    return float(
        0.5 * np.mean((r - fitted) ** 2)
        + np.sum(weights * np.abs(beta))
        + lam * np.sqrt(np.mean(fitted ** 2))
    )


def solve_block(
    r: np.ndarray,
    block: DesignBlock,
    weights: np.ndarray,
    lam: float,
    warm: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    ブロック部分問題を解く（Lasso → ソフト閾値）

    内側ソルバーが収束しなかった場合は最良の反復を閾値処理して返し、警告を残す。
    """
    try:
        beta_tilde = solve_lasso_block(r, block, weights, warm=warm)
    except LassoConvergenceError as e:
        logger.warning(f"{e}（最良の反復を使用）")
        beta_tilde = e.best
    return threshold_block(beta_tilde, block, lam)
