"""
シミュレーションの反復実行と集計

反復 i の seed は base_seed + i。反復はプロセス並列で実行し、
反復ごとの結果表と手法ごとの平均・標準誤差の表を返す。
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit
from tqdm import tqdm

from src.basis import config as basis_config
from src.basis.knots import ProjectionChoice
from src.errors import InvalidDataError
from src.model import config as model_config
from src.model.estimator import fit, predict
from src.model.models import ModelSpec
from src.sim_bench.metrics import SimulationMetrics
from src.sim_bench.scenarios import Scenario, gen_scenario

logger = logging.getLogger(__name__)

Method = Tuple[str, ModelSpec]


def default_methods(scenario: Scenario) -> List[Method]:
    """
    シナリオごとの既定の手法

    ANOVA シナリオは ATV/FTV × m ∈ {1, 2}（K=2、損失によらず周辺ノット 11 点）、
    格子シナリオは m=2 の平均化 TV と 5 通りの固定点 TV。
    """
    if scenario.name == 'lattice-2d':
        anchors = [
            ('FTV (min, min)', 'min'),
            ('FTV (max, max)', 'max'),
            ('FTV (min, max)', ('min', 'max')),
            ('FTV (max, min)', ('max', 'min')),
            ('FTV (median, median)', 'median'),
        ]
        methods = [(label, ModelSpec(order=2, projection=ProjectionChoice.fixed(anchor))) for label, anchor in anchors]
        methods.append(('ATV', ModelSpec(order=2, projection=ProjectionChoice.averaging())))
        return methods
    return [
        (
            f"{projection.label}, m={order}",
            ModelSpec(order=order, n_knots=basis_config.DEFAULT_N_KNOTS, projection=projection),
        )
        for projection in (ProjectionChoice.averaging(), ProjectionChoice.fixed())
        for order in (1, 2)
    ]


def evaluate_replication(scenario: Scenario, methods: Sequence[Method], index: int) -> List[Dict]:
    """1 反復分: データ生成 → 各手法のフィット → テスト指標"""
    seed = scenario.seed + index
    data = gen_scenario(scenario.with_seed(seed))
    rows = []
    for label, spec in methods:
        model = fit(data.X_train, data.Y_train, spec, loss=scenario.loss, X_val=data.X_val, Y_val=data.Y_val)
        linear = predict(model, data.X_test)
        row = {
            'replication': index,
            'seed': seed,
            'method': label,
            'n_active': len(model.active_blocks),
        }
        if scenario.loss == 'logistic':
            phat = np.clip(expit(linear), model_config.PROB_CLIP, 1.0 - model_config.PROB_CLIP)
            metrics = SimulationMetrics.classification_metrics(phat, data.Y_test)
            oracle = SimulationMetrics.error_rate(expit(data.f_test), data.Y_test)
            row.update(metrics.to_dict())
            row['excess_error'] = metrics.error_rate - oracle
        else:
            row['mise'] = SimulationMetrics.mise(linear, data.f_test)
        rows.append(row)
    return rows


def _evaluate_task(task: Tuple[Scenario, Sequence[Method], int]) -> List[Dict]:
    return evaluate_replication(*task)


def summarize(per_rep: pd.DataFrame) -> pd.DataFrame:
    """手法ごとの平均と標準誤差（ddof=1）。'mean (SE)' 形式の列も付ける"""
    metrics = [c for c in ('mise', 'excess_error', 'error_rate', 'log_loss', 'auc', 'n_active') if c in per_rep]
    rows = []
    for method, group in per_rep.groupby('method', sort=False):
        row = {'method': method, 'replications': len(group)}
        for metric in metrics:
            values = group[metric].to_numpy(dtype=float)
            mean = float(np.mean(values))
            se = float(np.std(values, ddof=1) / np.sqrt(len(values))) if len(values) > 1 else float('nan')
            row[f'{metric}_mean'] = mean
            row[f'{metric}_se'] = se
            row[metric] = format_mean_se(mean, se)
        rows.append(row)
    return pd.DataFrame(rows)


def format_mean_se(mean: float, se: float) -> str:
    """'0.055 (0.001)' 形式"""
    digits = 4 if abs(mean) < 0.01 else 3
    return f"{mean:.{digits}f} ({se:.{digits}f})"


def run_replications(
    scenario: Scenario,
    methods: Optional[Sequence[Method]] = None,
    reps: Optional[int] = None,
    max_workers: int = 1,
    progress: bool = False,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    シナリオを反復実行する。

    Args:
        scenario: Scenario（seed は反復 0 の seed）
        methods: (ラベル, ModelSpec) のリスト（None なら既定の手法）
        reps: 反復回数（None なら scenario.replications）
        max_workers: プロセス数
        progress: tqdm で進捗を表示する

    Returns:
        (反復ごとの結果, 手法ごとの集計)

    Raises:
        InvalidDataError: reps < 2
    """
    reps = scenario.replications if reps is None else reps
    if reps < 2:
        raise InvalidDataError(f"反復回数は 2 以上でなければなりません: {reps}")
    methods = list(methods) if methods is not None else default_methods(scenario)
    tasks = [(scenario, methods, i) for i in range(reps)]
    logger.info(f"シミュレーション開始: {scenario.name}, 反復 {reps}, 手法 {len(methods)}")

    if max_workers <= 1:
        results = [_evaluate_task(task) for task in tqdm(tasks, desc=scenario.name, unit="rep", disable=not progress)]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            iterator = executor.map(_evaluate_task, tasks)
            results = list(tqdm(iterator, total=reps, desc=scenario.name, unit="rep", disable=not progress))

    per_rep = pd.DataFrame([row for rows in results for row in rows])
    summary = summarize(per_rep)
    logger.info(f"シミュレーション完了: {scenario.name}")
    return per_rep, summary
