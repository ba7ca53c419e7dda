"""
部分依存関数

f̄_S(x_S) = (1/n) Σ_i f̂(x_S, X_{i,C})（C は S の補集合、X は学習データ）
"""
import itertools
import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import InvalidDataError, UnsupportedCaseError
from src.model.models import FittedModel

logger = logging.getLogger(__name__)


def default_query_grid(model: FittedModel, subset: Sequence[int]) -> np.ndarray:
    """S の各共変量の周辺ノットの直積（最初の座標が最も遅く変化）"""
    axes = [model.bases[j].marginal.knots for j in subset]
    return np.array(list(itertools.product(*axes)), dtype=float)


def partial_dependence(
    model: FittedModel,
    subset: Sequence[int],
    X_train: np.ndarray,
    grid: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """
    部分依存関数を計算する。

    Args:
        model: FittedModel
        subset: 対象の共変量（サイズ 1 または 2、0 始まり）
        X_train: 学習データ（補集合の平均に使う）
        grid: 問い合わせ点（q × |S|）。None ならノットの直積

    Returns:
        列 [S の共変量名..., 'value'] の DataFrame（問い合わせ点の辞書順）

    Raises:
        UnsupportedCaseError: |S| > 2
    """
    subset = tuple(int(j) for j in subset)
    if len(subset) not in (1, 2):
        raise UnsupportedCaseError(f"部分依存はサイズ 1 または 2 の部分集合のみ対応しています: {subset}")
    if len(set(subset)) != len(subset):
        raise InvalidDataError(f"部分集合に重複があります: {subset}")
    for j in subset:
        if not 0 <= j < model.n_features:
            raise InvalidDataError(f"共変量 {j} は範囲外です（p={model.n_features}）")

    X_train = model.check_features(X_train)
    if grid is None:
        missing = [j for j in subset if j not in model.bases]
        if missing:
            raise InvalidDataError(f"除外された共変量 {missing} には既定の問い合わせ点を作れません")
        grid = default_query_grid(model, subset)
    grid = np.asarray(grid, dtype=float).reshape(-1, len(subset))
    grid = grid[np.lexsort(grid.T[::-1])]

    values = np.empty(len(grid))
    work = X_train.copy()
    for i, point in enumerate(grid):
        work[:, subset] = point
        values[i] = float(np.mean(model.linear_predictor(work)))

    columns = {model.feature_names[j]: grid[:, k] for k, j in enumerate(subset)}
    columns['value'] = values
    return pd.DataFrame(columns)
