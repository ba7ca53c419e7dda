"""
生の全変動（raw TV）と階層的全変動（HTV）

グリッド関数に定義どおりの計算を行う独立した検証器。
基底側の Lasso 表現（Σ‖Rβ‖₁）と突き合わせるために使う。

対応範囲:
- m=1: d <= 3
- m=2: d <= 2（微分はノット間の差分商。右連続の規約）
"""
import itertools
import logging
from typing import Sequence, Tuple

import numpy as np

from src.basis.knots import ProjectionChoice
from src.errors import InvalidDataError, UnsupportedCaseError
from src.htv.grid import GridFunction, anova_decompose

logger = logging.getLogger(__name__)

MAX_DIMENSION = {1: 3, 2: 2}


def raw_tv(values: np.ndarray) -> float:
    """
    生の全変動 TV_d

    各セルの角での交代和（= 全軸の前進差分の合成）の絶対値の総和。
    d 未満の変数の関数を加えても値は変わらない。

    Args:
        values: d 次元のグリッド値（GridFunction も可）
    """
    if isinstance(values, GridFunction):
        values = values.values
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.size == 0:
        raise InvalidDataError("空のグリッドの全変動は定義されていません")
    differences = values
    for axis in range(values.ndim):
        differences = np.diff(differences, axis=axis)
    return float(np.sum(np.abs(differences)))


def _check_case(order: int, d: int, rho: Sequence[float]) -> None:
    if order not in MAX_DIMENSION or d > MAX_DIMENSION[order]:
        raise UnsupportedCaseError(f"HTV の検証器は (m={order}, d={d}) に対応していません")
    if len(rho) < d:
        raise InvalidDataError(f"d={d} に対して ρ が {len(rho)} 個しかありません")


def _derivative_axis(values: np.ndarray, axis: int, knots: np.ndarray) -> np.ndarray:
    """隣接ノット間の差分商。右端は最後の区間の傾きを使う（右連続の規約）"""
    shape = [1] * values.ndim
    shape[axis] = len(knots) - 1
    slopes = np.diff(values, axis=axis) / np.diff(knots).reshape(shape)
    last = np.take(slopes, [slopes.shape[axis] - 1], axis=axis)
    return np.concatenate([slopes, last], axis=axis)


def _htv(
    values: np.ndarray,
    knots: Tuple[np.ndarray, ...],
    covariates: Tuple[int, ...],
    order: int,
    rho: Sequence[float],
    projection: ProjectionChoice,
) -> float:
    d = values.ndim
    total = 0.0
    for k in range(1, d + 1):
        for subset in itertools.combinations(range(d), k):
            marginalized = values
            for axis in range(d):
                if axis in subset:
                    if order >= 2:
                        marginalized = _derivative_axis(marginalized, axis, knots[axis])
                else:
                    marginalized = projection.project_axis(marginalized, axis, covariates[axis])
            others = tuple(axis for axis in range(d) if axis not in subset)
            reduced = np.squeeze(marginalized, axis=others)
            if order == 1:
                total += rho[k - 1] * raw_tv(reduced)
            else:
                total += _htv(
                    reduced,
                    tuple(knots[axis] for axis in subset),
                    tuple(covariates[axis] for axis in subset),
                    order - 1,
                    rho[:k],
                    projection,
                )
    return total


def htv(
    g: GridFunction,
    order: int,
    rho: Sequence[float],
    projection: ProjectionChoice,
) -> float:
    """
    階層的全変動 HTV_d^m(g; ρ_1, ..., ρ_d) を定義から帰納的に計算する。

    m=1 では Σ_k Σ_{S_k} ρ_k TV_k(∏_{j∉S_k} H_j g)、
    m>=2 では Σ_k Σ_{S_k} HTV_k^{m-1}(∏_{j∉S_k} H_j ∏_{j∈S_k} D_j g)。

    Args:
        g: GridFunction（m=2 では交差1次スプラインのノット上の値）
        order: 微分の次数 m
        rho: (ρ_1, ..., ρ_d)
        projection: 射影作用素 H_j

    Raises:
        UnsupportedCaseError: 対応範囲外の (m, d)
    """
    _check_case(order, g.d, rho)
    return _htv(g.values, g.knots, g.axis_covariates, order, tuple(rho), projection)


def htv_via_components(
    g: GridFunction,
    rho: Sequence[float],
    projection: ProjectionChoice,
    order: int = 1,
) -> float:
    """
    ANOVA 成分から HTV を計算する: Σ_k Σ_{S_k} ρ_k TV_k(g_{S_k})（m=1 のみ）

    m>=2 は微分場の ANOVA 分解が必要になるため扱わない。
    """
    if order != 1:
        raise UnsupportedCaseError("成分経由の HTV は m=1 のみ対応しています")
    _check_case(order, g.d, rho)
    decomposition = anova_decompose(g, projection)
    total = 0.0
    for subset in decomposition.components:
        if subset:
            total += rho[len(subset) - 1] * raw_tv(decomposition.restricted(subset))
    return total
