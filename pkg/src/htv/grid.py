"""
グリッド関数と多元 ANOVA 分解

責務:
- 周辺ノットの直積グリッド上の関数値を保持する（GridFunction）
- g_S = ∏_{j∈S}(I - H_j) ∏_{j∉S} H_j g による ANOVA 分解
- Ψ 基底の係数から区分多項式スプラインのグリッド値を作る（検証用）
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.basis.blocks import build_basis_block, evaluate_block
from src.basis.knots import ProjectionChoice
from src.basis.psi import UnivariatePsiBasis
from src.errors import InvalidDataError

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


@dataclass(frozen=True)
class GridFunction:
    """
    d 変量関数の全ノットグリッド上の値

    covariates は射影作用素のアンカー参照に使う共変量番号（既定は 0..d-1）。
    """
    knots: Tuple[np.ndarray, ...]
    values: np.ndarray
    covariates: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        shape = tuple(len(k) for k in self.knots)
        if self.values.shape != shape:
            raise InvalidDataError(f"値配列の形状 {self.values.shape} がグリッド {shape} と一致しません")
        if not np.all(np.isfinite(self.values)):
            raise InvalidDataError("グリッド関数が非有限値を含みます")
        if self.covariates is not None and len(self.covariates) != len(self.knots):
            raise InvalidDataError("covariates の長さが次元と一致しません")

    @property
    def d(self) -> int:
        return len(self.knots)

    @property
    def axis_covariates(self) -> Tuple[int, ...]:
        return self.covariates if self.covariates is not None else tuple(range(self.d))

    def points(self) -> np.ndarray:
        """グリッド点を行とする行列（C 順、最初の座標が最も遅く変化）"""
        mesh = np.meshgrid(*self.knots, indexing='ij')
        return np.column_stack([axis.ravel() for axis in mesh])

    @classmethod
    def from_callable(
        cls,
        knots: Sequence[np.ndarray],
        func: Callable[..., np.ndarray],
        covariates: Optional[Sequence[int]] = None,
    ) -> 'GridFunction':
        """func(z_1, ..., z_d) をグリッド上で評価する"""
        knots = tuple(np.asarray(k, dtype=float) for k in knots)
        mesh = np.meshgrid(*knots, indexing='ij')
        values = np.asarray(func(*mesh), dtype=float) * np.ones(mesh[0].shape)
        return cls(knots, values, None if covariates is None else tuple(covariates))


@dataclass(frozen=True)
class AnovaDecomposition:
    """全部分集合 S ⊆ {0..d-1} の成分（各成分は全グリッド形状に展開済み）"""
    knots: Tuple[np.ndarray, ...]
    components: Dict[Subset, np.ndarray]

    def reconstruct(self) -> np.ndarray:
        return sum(self.components.values())

    def component(self, subset: Subset) -> np.ndarray:
        return self.components[tuple(subset)]

    def restricted(self, subset: Subset) -> np.ndarray:
        """成分 g_S を S の座標だけの配列として取り出す（他の軸は先頭要素）"""
        values = self.components[tuple(subset)]
        index = tuple(slice(None) if axis in subset else 0 for axis in range(values.ndim))
        return values[index]


def anova_decompose(g: GridFunction, projection: ProjectionChoice) -> AnovaDecomposition:
    """
    グリッド関数を多元 ANOVA 分解する。

    成分は g_S = ∏_{j∈S}(I - H_j) ∏_{j∉S} H_j g。作用素は別々の軸に
    作用するので適用順は任意。
    """
    covariates = g.axis_covariates
    components: Dict[Subset, np.ndarray] = {}
    for k in range(g.d + 1):
        for subset in itertools.combinations(range(g.d), k):
            values = g.values
            for axis in range(g.d):
                projected = projection.project_axis(values, axis, covariates[axis])
                values = values - projected if axis in subset else projected
            components[subset] = np.broadcast_to(values, g.values.shape).copy()
    return AnovaDecomposition(knots=g.knots, components=components)


def spline_on_grid(
    bases: Mapping[int, UnivariatePsiBasis],
    coefficients: Mapping[Subset, np.ndarray],
    intercept: float = 0.0,
) -> GridFunction:
    """
    g = β_0 + Σ_S β_Sᵀ Ψ_S を全ノットグリッド上で評価する。

    Args:
        bases: {共変量: UnivariatePsiBasis}（グリッドの座標順）
        coefficients: {部分集合: 係数ベクトル}
        intercept: β_0
    """
    covariates = tuple(sorted(bases))
    knots = tuple(bases[j].marginal.knots for j in covariates)
    mesh = np.meshgrid(*knots, indexing='ij')
    points = np.zeros((mesh[0].size, max(covariates) + 1))
    for axis, j in enumerate(covariates):
        points[:, j] = mesh[axis].ravel()

    values = np.full(mesh[0].size, float(intercept))
    for subset, beta in coefficients.items():
        block = build_basis_block(tuple(subset), bases)
        values += evaluate_block(block, bases, points) @ np.asarray(beta, dtype=float)
    return GridFunction(knots, values.reshape(mesh[0].shape), covariates)
