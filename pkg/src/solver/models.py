"""
ソルバー: データクラス定義
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.basis.knots import ProjectionChoice
from src.errors import InvalidDataError

Subset = Tuple[int, ...]


@dataclass(frozen=True)
class PenaltyConfig:
    """罰則パラメータ (ρ_k, λ_k)、射影作用素、交差次数 m"""
    rho: Tuple[float, ...]      # ρ_1, ..., ρ_K（TV の重み）
    lam: Tuple[float, ...]      # λ_1, ..., λ_K（経験ノルムの重み）
    projection: ProjectionChoice = field(default_factory=ProjectionChoice.averaging)
    order: int = 2

    def __post_init__(self):
        if len(self.rho) != len(self.lam):
            raise InvalidDataError(f"ρ と λ の長さが一致しません: {len(self.rho)} vs {len(self.lam)}")
        if any(r < 0 for r in self.rho) or any(l < 0 for l in self.lam):
            raise InvalidDataError(f"罰則パラメータは非負でなければなりません: ρ={self.rho}, λ={self.lam}")

    @classmethod
    def tied(
        cls,
        rho: float,
        lam: float,
        max_order: int,
        projection: Optional[ProjectionChoice] = None,
        order: int = 2,
    ) -> 'PenaltyConfig':
        """ρ_1 = ... = ρ_K = ρ、λ_1 = ... = λ_K = λ"""
        return cls(
            rho=(float(rho),) * max_order,
            lam=(float(lam),) * max_order,
            projection=projection or ProjectionChoice.averaging(),
            order=order,
        )

    @property
    def max_order(self) -> int:
        return len(self.rho)

    def lam_for(self, size: int) -> float:
        """サイズ k のブロックの λ_k"""
        if size > len(self.lam):
            raise InvalidDataError(f"サイズ {size} のブロックに対する λ がありません")
        return self.lam[size - 1]


@dataclass
class FitState:
    """BDT の反復状態（およびフィット結果）"""
    loss: str                              # 'squared' / 'logistic'
    intercept: float                       # 二乗損失: Ȳ、ロジスティック: μ̂
    coefficients: Dict[Subset, np.ndarray]
    fitted: np.ndarray                     # f̂ = Σ Ψ̃† β̂（学習点）
    objective_trace: List[float] = field(default_factory=list)
    converged: bool = False
    n_cycles: int = 0

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float('nan')

    @property
    def active_blocks(self) -> Tuple[Subset, ...]:
        return tuple(s for s, beta in self.coefficients.items() if np.any(beta != 0.0))

    @property
    def n_nonzero(self) -> int:
        return int(sum(np.count_nonzero(beta) for beta in self.coefficients.values()))

    def recompute_fitted(self, blocks: Sequence) -> np.ndarray:
        """f̂ を計画ブロックから作り直す（増分更新の検証用）"""
        fitted = np.zeros(len(self.fitted))
        for block in blocks:
            fitted += block.centered @ self.coefficients[block.subset]
        return fitted
