"""
調整パラメータ (ρ, λ) の探索

- ρ, λ の対数グリッドをデータから作る（λ_max は全ブロックがゼロになる最小の λ）
- (ρ, 分割) の組ごとに λ 降順の経路をウォームスタートで解く（組の間は並列）
- 検証データ（または交差検証）の損失が最小の点を選ぶ
"""
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from src.basis.blocks import DesignBlock
from src.errors import InvalidDataError
from src.model import config
from src.model.models import ModelSpec, TuningRecord
from src.solver import config as solver_config
from src.solver.bdt import bdt_fit, bdt_logit_fit
from src.solver.lasso import solve_lasso_block
from src.solver.models import FitState

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


# ==================================================
# グリッド
# ==================================================

def _working_response(response: np.ndarray, loss: str) -> np.ndarray:
    """全ブロックがゼロの状態での部分問題の応答（ロジスティックは 4 倍済み）"""
    centered = response - np.mean(response)
    if loss == 'logistic':
        return centered / solver_config.LOGISTIC_CURVATURE
    return centered


def rho_scale(response: np.ndarray, blocks: Sequence[DesignBlock], loss: str = 'squared') -> float:
    """
    罰則付き列の max |Ψ̃ᵀ(Y - Ȳ)|/n

    ロジスティックでは重みも 4 倍されるので尺度は二乗損失と同じ式になる。
    """
    centered = response - np.mean(response)
    scale = 0.0
    for block in blocks:
        penalized = block.block.degrees > 0
        if np.any(penalized):
            linear = block.centered[:, penalized].T @ centered / block.n_rows
            scale = max(scale, float(np.max(np.abs(linear))))
    return scale if scale > 0 else 1.0


def rho_grid(spec: ModelSpec, response: np.ndarray, blocks: Sequence[DesignBlock], loss: str) -> Tuple[float, ...]:
    """ρ のグリッド（昇順）"""
    if spec.rho_grid is not None:
        return tuple(sorted(float(r) for r in spec.rho_grid))
    scale = rho_scale(response, blocks, loss)
    grid = np.logspace(
        np.log10(scale * config.RHO_RATIO_MIN),
        np.log10(scale * config.RHO_RATIO_MAX),
        spec.grid_size,
    )
    return tuple(float(r) for r in grid)


def lambda_max(
    response: np.ndarray,
    blocks: Sequence[DesignBlock],
    spec: ModelSpec,
    rho: float,
    loss: str = 'squared',
) -> float:
    """
    全ブロックの閾値処理がゼロを返す最小の λ

    全ブロックがゼロの出発点で各ブロックの Lasso 解 β̃ を求め、
    max_S ‖Ψ̃β̃_S‖_n / λ倍率_k とする（ロジスティックは 1/4 の尺度を戻す）。
    """
    working = _working_response(response, loss)
    factor = 1.0 / solver_config.LOGISTIC_CURVATURE if loss == 'logistic' else 1.0
    pen = spec.penalty(rho, 1.0)
    value = 0.0
    for block in blocks:
        if block.is_degenerate:
            continue
        multiplier = pen.lam_for(block.block.size)
        if multiplier <= 0:
            continue
        beta = solve_lasso_block(working, block, block.block.weights(pen.rho) * factor)
        value = max(value, block.empirical_norm(beta) / (factor * multiplier))
    return value


def lambda_grid(
    spec: ModelSpec,
    response: np.ndarray,
    blocks: Sequence[DesignBlock],
    rho_values: Sequence[float],
    loss: str,
) -> Tuple[float, ...]:
    """λ のグリッド（降順）。自動設定では ρ グリッド中央での λ_max から下ろす"""
    if spec.lam_grid is not None:
        return tuple(sorted((float(l) for l in spec.lam_grid), reverse=True))
    rho_mid = rho_values[len(rho_values) // 2]
    top = lambda_max(response, blocks, spec, rho_mid, loss)
    if top <= 0:
        logger.warning("λ_max がゼロです（応答に説明できる変動がありません）")
        return (0.0,)
    grid = np.logspace(np.log10(top), np.log10(top * config.LAMBDA_RATIO_MIN), spec.grid_size)
    grid[0] = top
    return tuple(float(l) for l in grid)


# ==================================================
# 経路と評価
# ==================================================

def solve(
    response: np.ndarray,
    blocks: Sequence[DesignBlock],
    spec: ModelSpec,
    rho: float,
    lam: float,
    loss: str,
    warm: Optional[FitState] = None,
) -> FitState:
    """損失に応じた BDT を1点で解く"""
    pen = spec.penalty(rho, lam)
    if loss == 'logistic':
        tol = spec.tol if spec.tol is not None else solver_config.BDT_TOL_LOGISTIC
        return bdt_logit_fit(response, blocks, pen, tol=tol, max_cycles=spec.max_cycles, warm=warm)
    tol = spec.tol if spec.tol is not None else solver_config.BDT_TOL_SQUARED
    return bdt_fit(response, blocks, pen, tol=tol, max_cycles=spec.max_cycles, warm=warm)


def fit_path(
    response: np.ndarray,
    blocks: Sequence[DesignBlock],
    spec: ModelSpec,
    rho: float,
    lam_values: Sequence[float],
    loss: str,
) -> List[FitState]:
    """λ 降順の経路を直前の解から順に解く"""
    states = []
    warm = None
    for lam in lam_values:
        warm = solve(response, blocks, spec, rho, lam, loss, warm=warm)
        states.append(warm)
    return states


def predict_from_raw(
    state: FitState,
    blocks: Sequence[DesignBlock],
    raw: Dict[Subset, np.ndarray],
) -> np.ndarray:
    """学習時の列平均で中心化した評価値から線形予測子を作る"""
    n = len(next(iter(raw.values()))) if raw else 0
    prediction = np.full(n, state.intercept)
    for block in blocks:
        beta = state.coefficients[block.subset]
        if np.any(beta != 0.0):
            prediction += block.centered_at(raw[block.subset]) @ beta
    return prediction


def validation_metric(loss: str, response: np.ndarray, prediction: np.ndarray) -> float:
    """検証 MSE、またはクリップした確率での検証ロジスティック損失"""
    if loss == 'logistic':
        prob = np.clip(expit(prediction), config.PROB_CLIP, 1.0 - config.PROB_CLIP)
        return float(-np.mean(response * np.log(prob) + (1.0 - response) * np.log(1.0 - prob)))
    return float(np.mean((response - prediction) ** 2))


@dataclass
class Split:
    """学習ブロックと検証点の組"""
    blocks: List[DesignBlock]
    response: np.ndarray
    val_raw: Dict[Subset, np.ndarray]
    val_response: np.ndarray


@dataclass
class TuningResult:
    records: Tuple[TuningRecord, ...]
    rho_values: Tuple[float, ...]
    lam_values: Tuple[float, ...]
    best: TuningRecord
    state: FitState          # 学習データ全体での選択点の解


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _holdouts(response: np.ndarray, spec: ModelSpec, loss: str) -> List[np.ndarray]:
    """
    検証に回す行の集合

    ロジスティックではラベルごとに並べ替えて各分割へ配るので、
    全ての学習側に両方のクラスが残る。
    """
    n = len(response)
    gen = _generator(spec.seed)
    if loss == 'logistic':
        groups = []
        for label in (0.0, 1.0):
            rows = np.flatnonzero(response == label)
            groups.append(rows[gen.permutation(len(rows))])
        smallest = min(len(g) for g in groups)
        if smallest < 2:
            raise InvalidDataError(f"少数クラスが {smallest} 件のため学習データ内で分割できません")
    else:
        groups = [gen.permutation(n)]

    if spec.tuning == 'kfold':
        parts = [np.array_split(g, spec.n_folds) for g in groups]
        return [np.concatenate([p[fold] for p in parts]) for fold in range(spec.n_folds)]

    if len(groups) == 1:
        n_val = max(1, int(round(spec.validation_fraction * n)))
        return [groups[0][:n_val]]
    takes = [min(len(g) - 1, max(1, int(round(spec.validation_fraction * len(g))))) for g in groups]
    return [np.concatenate([g[:take] for g, take in zip(groups, takes)])]


def make_splits(
    blocks: Sequence[DesignBlock],
    response: np.ndarray,
    spec: ModelSpec,
    loss: str = 'squared',
) -> List[Split]:
    """学習データ内の分割（検証割合による1分割、または k 分割。ロジスティックはラベルで層化）"""
    n = len(response)
    splits = []
    for holdout in _holdouts(response, spec, loss):
        mask = np.ones(n, dtype=bool)
        mask[holdout] = False
        train_rows = np.flatnonzero(mask)
        splits.append(Split(
            blocks=[block.take(train_rows) for block in blocks],
            response=response[train_rows],
            val_raw={block.subset: block.raw[holdout] for block in blocks},
            val_response=response[holdout],
        ))
    return splits


def tune(
    response: np.ndarray,
    blocks: Sequence[DesignBlock],
    spec: ModelSpec,
    loss: str,
    validation: Optional[Tuple[Dict[Subset, np.ndarray], np.ndarray]] = None,
    max_workers: Optional[int] = None,
    progress: bool = False,
) -> TuningResult:
    """
    グリッド探索を行い、選択点の解を返す。

    Args:
        response: 学習データの応答
        blocks: 学習データ全体の DesignBlock
        spec: ModelSpec
        loss: 'squared' / 'logistic'
        validation: 外部検証データ（{部分集合: 評価値}, 応答）。None なら学習データ内で分割
        max_workers: (ρ, 分割) の経路の並列数
        progress: tqdm で進捗を表示する

    Returns:
        TuningResult（レコードは ρ 昇順・λ 降順）
    """
    rho_values = rho_grid(spec, response, blocks, loss)
    lam_values = lambda_grid(spec, response, blocks, rho_values, loss)
    splits = [] if validation is not None else make_splits(blocks, response, spec, loss)
    logger.info(
        f"調整グリッド: ρ {len(rho_values)} 点 × λ {len(lam_values)} 点"
        f"（{spec.tuning}, 分割 {max(len(splits), 1)}）"
    )

    def run_full(rho: float) -> Tuple[List[FitState], Optional[np.ndarray]]:
        full = fit_path(response, blocks, spec, rho, lam_values, loss)
        if validation is None:
            return full, None
        val_raw, val_response = validation
        metrics = [validation_metric(loss, val_response, predict_from_raw(s, blocks, val_raw)) for s in full]
        return full, np.asarray(metrics)

    def run_split(rho: float, split: Split) -> np.ndarray:
        states = fit_path(split.response, split.blocks, spec, rho, lam_values, loss)
        return np.asarray([
            validation_metric(loss, split.val_response, predict_from_raw(s, split.blocks, split.val_raw))
            for s in states
        ])

    # (ρ, 分割) の組ごとに独立な経路を並列に解く
    workers = max_workers or 1
    n_tasks = len(rho_values) * (1 + len(splits))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        full_futures = [executor.submit(run_full, rho) for rho in rho_values]
        split_futures = [[executor.submit(run_split, rho, split) for split in splits] for rho in rho_values]
        with tqdm(total=n_tasks, desc="調整グリッド", unit="経路", disable=not progress) as bar:
            for future in as_completed([f for row in split_futures for f in row] + full_futures):
                future.result()
                bar.update(1)

    records, states = [], []
    for rho, full_future, row in zip(rho_values, full_futures, split_futures):
        full, metrics = full_future.result()
        if metrics is None:
            metrics = np.mean([f.result() for f in row], axis=0)
        for lam, state, metric in zip(lam_values, full, metrics):
            records.append(TuningRecord(
                rho=rho,
                lam=lam,
                metric=float(metric),
                n_active=len(state.active_blocks),
                n_nonzero=state.n_nonzero,
                objective=state.objective,
                converged=state.converged,
            ))
            states.append(state)

    best_index = int(np.argmin([r.metric for r in records]))
    best = records[best_index]
    logger.info(f"選択: ρ={best.rho:.4g}, λ={best.lam:.4g}, 検証指標 {best.metric:.6g}, 能動ブロック {best.n_active}")
    return TuningResult(
        records=tuple(records),
        rho_values=rho_values,
        lam_values=lam_values,
        best=best,
        state=states[best_index],
    )
