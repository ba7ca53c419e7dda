"""
推定器: データクラス定義
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from src.basis import config as basis_config
from src.basis.blocks import BasisBlock, evaluate_block
from src.basis.knots import KnotSystem, ProjectionChoice
from src.basis.psi import UnivariatePsiBasis
from src.errors import InvalidDataError, UnsupportedCaseError
from src.model import config
from src.solver.bdt import logistic_loss, squared_loss
from src.solver.models import PenaltyConfig

Subset = Tuple[int, ...]


@dataclass(frozen=True)
class ModelSpec:
    """推定の設定（基底・罰則グリッド・調整方式）"""
    order: int = basis_config.DEFAULT_ORDER                # 交差次数 m
    max_interaction: int = 2                               # 最大交互作用次数 K
    n_knots: Optional[Union[int, Dict[int, int]]] = None   # None なら損失に応じた既定値
    projection: ProjectionChoice = field(default_factory=ProjectionChoice.averaging)
    rho_grid: Optional[Tuple[float, ...]] = None           # None ならデータから自動設定
    lam_grid: Optional[Tuple[float, ...]] = None
    grid_size: int = config.GRID_SIZE
    rho_multipliers: Optional[Tuple[float, ...]] = None    # ρ_k = ρ × multiplier_k
    lam_multipliers: Optional[Tuple[float, ...]] = None
    tuning: str = config.DEFAULT_TUNING
    n_folds: int = config.DEFAULT_FOLDS
    validation_fraction: float = config.VALIDATION_FRACTION
    seed: int = 0
    max_cycles: int = 200
    tol: Optional[float] = None

    def __post_init__(self):
        if self.order not in config.FIT_ORDERS:
            raise UnsupportedCaseError(f"フィットは m={config.FIT_ORDERS} のみ対応しています（m={self.order}）")
        if self.max_interaction < 1:
            raise InvalidDataError(f"K は 1 以上でなければなりません: {self.max_interaction}")
        if self.max_interaction > config.MAX_FIT_INTERACTION:
            raise UnsupportedCaseError(
                f"K={self.max_interaction} のフィットは未対応です（ブロック数が爆発するため K <= {config.MAX_FIT_INTERACTION}）"
            )
        if self.tuning not in config.TUNING_MODES:
            raise InvalidDataError(f"未知の調整方式: {self.tuning}")
        if self.rho_grid is not None and (len(self.rho_grid) == 0 or min(self.rho_grid) <= 0):
            raise InvalidDataError("ρ のグリッドは空でない正の値でなければなりません")
        if self.lam_grid is not None and (len(self.lam_grid) == 0 or min(self.lam_grid) < 0):
            raise InvalidDataError("λ のグリッドは空でない非負の値でなければなりません")
        if self.grid_size < 1:
            raise InvalidDataError(f"grid_size は 1 以上でなければなりません: {self.grid_size}")
        if self.n_folds < 2:
            raise InvalidDataError(f"分割数は 2 以上でなければなりません: {self.n_folds}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidDataError(f"validation_fraction は (0, 1) の値です: {self.validation_fraction}")
        for name in ('rho_multipliers', 'lam_multipliers'):
            values = getattr(self, name)
            if values is not None and len(values) != self.max_interaction:
                raise InvalidDataError(f"{name} の長さは K={self.max_interaction} でなければなりません")

    @staticmethod
    def default_knots(loss: str) -> int:
        """損失ごとの既定の周辺ノット数（回帰 11 / 分類 6）"""
        if loss == 'logistic':
            return basis_config.DEFAULT_N_KNOTS_CLASSIFICATION
        return basis_config.DEFAULT_N_KNOTS

    def knots_for(self, loss: str) -> Union[int, Dict[int, int]]:
        if self.n_knots is not None:
            return self.n_knots
        return self.default_knots(loss)

    def penalty(self, rho: float, lam: float) -> PenaltyConfig:
        """グリッド点 (ρ, λ) を次数ごとの罰則パラメータに展開する"""
        rho_mult = self.rho_multipliers or (1.0,) * self.max_interaction
        lam_mult = self.lam_multipliers or (1.0,) * self.max_interaction
        return PenaltyConfig(
            rho=tuple(float(rho) * m for m in rho_mult),
            lam=tuple(float(lam) * m for m in lam_mult),
            projection=self.projection,
            order=self.order,
        )

    def to_dict(self) -> dict:
        n_knots = self.n_knots
        if isinstance(n_knots, dict):
            n_knots = {str(k): v for k, v in n_knots.items()}
        return {
            'order': self.order,
            'max_interaction': self.max_interaction,
            'n_knots': n_knots,
            'projection': self.projection.to_dict(),
            'rho_grid': None if self.rho_grid is None else list(self.rho_grid),
            'lam_grid': None if self.lam_grid is None else list(self.lam_grid),
            'grid_size': self.grid_size,
            'rho_multipliers': None if self.rho_multipliers is None else list(self.rho_multipliers),
            'lam_multipliers': None if self.lam_multipliers is None else list(self.lam_multipliers),
            'tuning': self.tuning,
            'n_folds': self.n_folds,
            'validation_fraction': self.validation_fraction,
            'seed': self.seed,
            'max_cycles': self.max_cycles,
            'tol': self.tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ModelSpec':
        data = dict(data)
        if isinstance(data.get('n_knots'), dict):
            data['n_knots'] = {int(k): int(v) for k, v in data['n_knots'].items()}
        data['projection'] = ProjectionChoice.from_dict(data['projection'])
        for name in ('rho_grid', 'lam_grid', 'rho_multipliers', 'lam_multipliers'):
            if data.get(name) is not None:
                data[name] = tuple(float(v) for v in data[name])
        return cls(**data)


@dataclass(frozen=True)
class TuningRecord:
    """調整グリッドの1点の結果"""
    rho: float
    lam: float
    metric: float          # 検証 MSE または検証ロジスティック損失
    n_active: int          # 能動ブロック数
    n_nonzero: int         # 非ゼロ係数の数
    objective: float       # 学習データ上の目的関数値
    converged: bool

    def to_dict(self) -> dict:
        return {
            'rho': self.rho,
            'lam': self.lam,
            'metric': self.metric,
            'n_active': self.n_active,
            'n_nonzero': self.n_nonzero,
            'objective': self.objective,
            'converged': self.converged,
        }


@dataclass(frozen=True)
class FittedModel:
    """
    フィット済みモデル

    予測は保存された基底記述子・列平均・係数のみから計算するため、
    シリアライズ後も同一の結果になる。
    """
    spec: ModelSpec
    loss: str
    n_features: int
    feature_names: Tuple[str, ...]
    knots: KnotSystem
    bases: Dict[int, UnivariatePsiBasis]
    blocks: Tuple[BasisBlock, ...]
    means: Dict[Subset, np.ndarray]
    coefficients: Dict[Subset, np.ndarray]
    intercept: float
    penalty: PenaltyConfig
    fitted: np.ndarray                  # 学習点での f̂（切片を含まない）
    objective_value: float
    converged: bool
    n_cycles: int
    tuning: Tuple[TuningRecord, ...] = ()
    excluded: Tuple[int, ...] = ()      # 退化のため除外した共変量
    block_norms: Dict[Subset, float] = field(default_factory=dict)  # 学習点での ‖Ψ̃β‖_n

    @property
    def covariates(self) -> Tuple[int, ...]:
        return tuple(sorted(self.bases))

    @property
    def active_blocks(self) -> Tuple[Subset, ...]:
        return tuple(b.subset for b in self.blocks if np.any(self.coefficients[b.subset] != 0.0))

    @property
    def selected(self) -> Tuple[float, float]:
        """選ばれたグリッド点 (ρ, λ)（倍率を掛ける前）"""
        best = min(self.tuning, key=lambda r: r.metric) if self.tuning else None
        if best is None:
            return self.penalty.rho[0], self.penalty.lam[0]
        return best.rho, best.lam

    def block_label(self, subset: Subset) -> str:
        return ':'.join(self.feature_names[j] for j in subset)

    def check_features(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidDataError(f"入力の列数 {X.shape[-1] if X.ndim else 0} がモデルの {self.n_features} と一致しません")
        if not np.all(np.isfinite(X[:, list(self.covariates)])):
            raise InvalidDataError("入力に非有限値が含まれます")
        return X

    def component_values(self, X: np.ndarray) -> np.ndarray:
        """ブロックごとの中心化成分 (Ψ(x) - Ψ̄†)ᵀβ（q × ブロック数）"""
        X = self.check_features(X)
        values = np.zeros((X.shape[0], len(self.blocks)))
        for i, block in enumerate(self.blocks):
            beta = self.coefficients[block.subset]
            if np.any(beta != 0.0) and X.shape[0] > 0:
                values[:, i] = (evaluate_block(block, self.bases, X) - self.means[block.subset]) @ beta
        return values

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        """β_0 + Σ_S (Ψ_S(x) - Ψ̄†_S)ᵀ β_S"""
        return self.intercept + self.component_values(X).sum(axis=1)

    def objective(self, X: np.ndarray, Y: np.ndarray) -> float:
        """保存された係数から二重罰則付き目的関数を再計算する（X は学習データ）"""
        X = self.check_features(X)
        Y = np.asarray(Y, dtype=float)
        fitted = self.component_values(X).sum(axis=1)
        if self.loss == 'logistic':
            value = logistic_loss(Y, self.intercept, fitted)
        else:
            value = squared_loss(Y, float(np.mean(Y)), fitted)
        for block in self.blocks:
            beta = self.coefficients[block.subset]
            component = (evaluate_block(block, self.bases, X) - self.means[block.subset]) @ beta
            value += block.penalty(beta, self.penalty.rho)
            value += self.penalty.lam_for(block.size) * float(np.sqrt(np.mean(component ** 2)))
        return float(value)
