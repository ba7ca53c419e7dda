"""
交互作用ブロックと計画行列

責務:
- 次数 K までの共変量部分集合 S_k を列挙する（サイズ順 → 辞書順）
- 各ブロックの列多重添字・非微分次数・罰則重みを決める
- データ点で Ψ ブロックを評価し、経験的に中心化した計画行列を作る
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.basis.psi import UnivariatePsiBasis
from src.errors import InvalidDataError

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


def enumerate_blocks(
    p: int,
    max_order: int,
    covariates: Optional[Sequence[int]] = None,
) -> List[Subset]:
    """
    全ての部分集合 S_k（1 <= k <= K）を列挙する。

    Args:
        p: 共変量の数
        max_order: 最大交互作用次数 K
        covariates: 対象とする共変量番号（None なら 0..p-1）

    Returns:
        サイズ順、同サイズ内は辞書順の部分集合リスト
    """
    if max_order < 1:
        raise InvalidDataError(f"交互作用次数 K={max_order} は 1 以上でなければなりません")
    if max_order > p:
        raise InvalidDataError(f"交互作用次数 K={max_order} が共変量数 p={p} を超えています")
    pool = list(range(p)) if covariates is None else sorted(covariates)
    return [
        subset
        for k in range(1, max_order + 1)
        for subset in itertools.combinations(pool, k)
    ]


@dataclass(frozen=True)
class BasisBlock:
    """部分集合 S_k の Ψ ブロック（列の並びと罰則の添字付け）"""
    subset: Subset
    order: int
    multi_indices: Tuple[Tuple[int, ...], ...]  # 列ごとの (ν_{j1}, ..., ν_{jk})
    degrees: np.ndarray                         # 列ごとの非微分次数 l

    @property
    def size(self) -> int:
        return len(self.subset)

    @property
    def n_columns(self) -> int:
        return len(self.multi_indices)

    def weights(self, rho: Sequence[float]) -> np.ndarray:
        """列ごとの罰則重み ρ_l（ρ_0 = 0）"""
        table = np.concatenate([[0.0], np.asarray(rho, dtype=float)])
        if len(table) <= self.degrees.max(initial=0):
            raise InvalidDataError(f"ブロック {self.subset} に対して ρ が {len(rho)} 個しかありません")
        return table[self.degrees]

    @property
    def n_unpenalized(self) -> int:
        return int(np.sum(self.degrees == 0))

    def penalty(self, coefficients: np.ndarray, rho: Sequence[float]) -> float:
        """‖R β‖_1（階層的TVの Lasso 表現）"""
        return float(np.sum(self.weights(rho) * np.abs(coefficients)))


def build_basis_block(subset: Subset, bases: Mapping[int, UnivariatePsiBasis]) -> BasisBlock:
    """部分集合と一変量基底から BasisBlock を作る"""
    orders = {bases[j].order for j in subset}
    if len(orders) != 1:
        raise InvalidDataError(f"ブロック {subset} の基底次数が一致しません: {orders}")
    order = orders.pop()
    multi_indices = tuple(itertools.product(*(bases[j].nus for j in subset)))
    degrees = np.array(
        [sum(nu >= order + 1 for nu in index) for index in multi_indices],
        dtype=int,
    )
    return BasisBlock(subset=tuple(subset), order=order, multi_indices=multi_indices, degrees=degrees)


def evaluate_block(
    block: BasisBlock,
    bases: Mapping[int, UnivariatePsiBasis],
    X: np.ndarray,
) -> np.ndarray:
    """
    Ψ† を評価する（行 i・列 (ν_{j1},...,ν_{jk}) の値は ∏ ψ_{ν_{jl}, jl}(X_{i,jl})）

    Raises:
        InvalidDataError: 評価値が非有限（行・列の位置を含む）
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    values = np.ones((n, 1))
    for j in block.subset:
        marginal = bases[j].evaluate(X[:, j])
        values = (values[:, :, None] * marginal[:, None, :]).reshape(n, -1)

    bad = np.argwhere(~np.isfinite(values))
    if len(bad) > 0:
        row, col = bad[0]
        raise InvalidDataError(
            f"ブロック {block.subset}: 行 {row}・列 {col} の評価値が非有限です（非有限 {len(bad)} 箇所）"
        )
    return values


@dataclass(frozen=True)
class DesignBlock:
    """データ上の Ψ ブロック（生の評価・列平均・中心化行列・グラム行列）"""
    block: BasisBlock
    raw: np.ndarray        # Ψ†
    means: np.ndarray      # Ψ̄†
    centered: np.ndarray   # Ψ̃† = Ψ† - Ψ̄†
    gram: np.ndarray       # Ψ̃†ᵀ Ψ̃† / n

    @property
    def subset(self) -> Subset:
        return self.block.subset

    @property
    def n_rows(self) -> int:
        return self.centered.shape[0]

    @property
    def n_columns(self) -> int:
        return self.centered.shape[1]

    @property
    def is_degenerate(self) -> bool:
        """中心化列が全てゼロ（定数共変量など）"""
        return not np.any(np.diag(self.gram) > 0.0)

    def empirical_norm(self, coefficients: np.ndarray) -> float:
        """‖Ψ̃† β‖_n"""
        fitted = self.centered @ coefficients
        return float(np.sqrt(np.mean(fitted ** 2)))

    def take(self, rows: np.ndarray) -> 'DesignBlock':
        """行の部分集合で中心化し直したブロック（交差検証の分割用）"""
        return _centered_block(self.block, self.raw[rows])

    def centered_at(self, raw: np.ndarray) -> np.ndarray:
        """新しい点の評価値を学習時の列平均で中心化する"""
        return raw - self.means


def _centered_block(block: BasisBlock, raw: np.ndarray) -> DesignBlock:
    means = raw.mean(axis=0)
    centered = raw - means
    gram = centered.T @ centered / raw.shape[0]
    return DesignBlock(block=block, raw=raw, means=means, centered=centered, gram=gram)


def materialize_block(
    block: BasisBlock,
    bases: Mapping[int, UnivariatePsiBasis],
    X: np.ndarray,
) -> DesignBlock:
    """
    データ行列上でブロックを評価し、列平均で中心化する。

    Args:
        block: BasisBlock
        bases: {共変量: UnivariatePsiBasis}
        X: n×p データ行列（有限値）
    """
    X = np.asarray(X, dtype=float)
    missing = [j for j in block.subset if j not in bases]
    if missing:
        raise InvalidDataError(f"ブロック {block.subset}: 基底が存在しない共変量 {missing}")
    columns = list(block.subset)
    if not np.all(np.isfinite(X[:, columns])):
        raise InvalidDataError(f"ブロック {block.subset}: データに非有限値が含まれます")

    return _centered_block(block, evaluate_block(block, bases, X))


def materialize_blocks(
    blocks: Sequence[BasisBlock],
    bases: Mapping[int, UnivariatePsiBasis],
    X: np.ndarray,
    max_workers: int = 1,
) -> List[DesignBlock]:
    """全ブロックを評価する（ブロック間は独立なので並列可。順序は保持）"""
    if max_workers <= 1 or len(blocks) <= 1:
        return [materialize_block(block, bases, X) for block in blocks]
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(lambda block: materialize_block(block, bases, X), blocks))
