"""
周辺ノットと射影作用素

責務:
- 各共変量のデータから分位点ノットを構築し、次数 m のノット上位集合を選ぶ
- 射影作用素 H_j（平均化 A_j / 固定点 F_j）をノット上の値に適用する

やらないこと:
- 基底関数の構築（psi.py が担当）
- 計画行列の生成（blocks.py が担当）
"""
import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np

from src.basis import config
from src.errors import InvalidDataError, KnotConstructionError, UnsupportedCaseError

logger = logging.getLogger(__name__)

Anchor = Union[str, int]


def superset_indices(n_knots: int, order: int) -> np.ndarray:
    """
    ノット上位集合 {t_1, ..., t_{n-m}} に対応する周辺ノットの添字（0始まり）

    m が奇数なら z_{(m-1)/2+2} .. z_{n-(m-1)/2}、偶数なら z_{m/2+1} .. z_{n-m/2}。
    境界付近の点は過剰パラメータ化を避けるため除く。
    """
    if order % 2 == 1:
        half = (order - 1) // 2
        first, last = half + 2, n_knots - half
    else:
        half = order // 2
        first, last = half + 1, n_knots - half
    indices = np.arange(first - 1, last)
    assert len(indices) == n_knots - order
    return indices


@dataclass(frozen=True)
class MarginalKnots:
    """1共変量分の周辺ノットとノット上位集合"""
    covariate: int
    knots: np.ndarray      # z_1 < ... < z_n（共変量と同じ単位）
    superset: np.ndarray   # t_1, ..., t_{n-m}
    order: int

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    def to_dict(self) -> dict:
        return {
            'covariate': self.covariate,
            'knots': self.knots.tolist(),
            'superset': self.superset.tolist(),
            'order': self.order,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'MarginalKnots':
        return cls(
            covariate=int(data['covariate']),
            knots=np.asarray(data['knots'], dtype=float),
            superset=np.asarray(data['superset'], dtype=float),
            order=int(data['order']),
        )


def build_knots(
    column: np.ndarray,
    n_knots: int,
    order: int,
    covariate: int = 0,
) -> MarginalKnots:
    """
    データ列から周辺ノットを構築する。

    等間隔確率の分位点（type-7 線形補間）を取り、重複値は1つにまとめる
    （離散共変量では n_j が要求値より小さくなる）。

    Args:
        column: 共変量のデータ列
        n_knots: 要求する分位点の数（> m）
        order: 交差次数 m
        covariate: 共変量の番号（エラーメッセージ用）

    Returns:
        MarginalKnots

    Raises:
        KnotConstructionError: 非有限値を含む、または相異なるノットが m 個以下
    """
    if order not in config.SUPPORTED_ORDERS:
        raise UnsupportedCaseError(f"交差次数 m={order} は未対応です（対応: {config.SUPPORTED_ORDERS}）")
    if n_knots <= order:
        raise KnotConstructionError(
            f"共変量 {covariate}: ノット数 {n_knots} は次数 m={order} より大きくなければなりません",
            covariate=covariate,
        )

    values = np.asarray(column, dtype=float)
    if values.ndim != 1 or len(values) == 0:
        raise KnotConstructionError(f"共変量 {covariate}: データ列が空です", covariate=covariate)
    if not np.all(np.isfinite(values)):
        raise KnotConstructionError(f"共変量 {covariate}: 非有限値を含みます", covariate=covariate)

    probs = np.linspace(0.0, 1.0, n_knots)
    quantiles = np.quantile(values, probs, method=config.QUANTILE_METHOD)
    knots = np.unique(quantiles)

    if len(knots) <= order:
        raise KnotConstructionError(
            f"共変量 {covariate}: 相異なるノットが {len(knots)} 個しかありません（m={order} には {order + 1} 個以上必要）",
            covariate=covariate,
        )
    if len(knots) < n_knots:
        logger.info(f"共変量 {covariate}: 分位点の重複により n_j = {n_knots} → {len(knots)}")

    superset = knots[superset_indices(len(knots), order)]
    return MarginalKnots(covariate=covariate, knots=knots, superset=superset, order=order)


@dataclass(frozen=True)
class KnotSystem:
    """全共変量の周辺ノット（グリッド幾何の保持者）"""
    order: int
    marginals: Tuple[MarginalKnots, ...]

    def __getitem__(self, covariate: int) -> MarginalKnots:
        for marginal in self.marginals:
            if marginal.covariate == covariate:
                return marginal
        raise KeyError(covariate)

    @property
    def covariates(self) -> Tuple[int, ...]:
        return tuple(marginal.covariate for marginal in self.marginals)

    def grid_shape(self, covariates: Sequence[int]) -> Tuple[int, ...]:
        return tuple(self[j].n_knots for j in covariates)

    def to_dict(self) -> dict:
        return {'order': self.order, 'marginals': [m.to_dict() for m in self.marginals]}

    @classmethod
    def from_dict(cls, data: dict) -> 'KnotSystem':
        return cls(
            order=int(data['order']),
            marginals=tuple(MarginalKnots.from_dict(m) for m in data['marginals']),
        )


def build_knot_system(
    X: np.ndarray,
    n_knots: Union[int, Dict[int, int]],
    order: int,
    covariates: Sequence[int] = None,
) -> KnotSystem:
    """
    データ行列の各列から KnotSystem を構築する。

    Args:
        X: n×p データ行列
        n_knots: 全共変量共通のノット数、または {共変量: ノット数}
        order: 交差次数 m
        covariates: 対象とする列番号（None なら全列）
    """
    X = np.asarray(X, dtype=float)
    if covariates is None:
        covariates = range(X.shape[1])
    marginals = []
    for j in covariates:
        count = n_knots.get(j, config.DEFAULT_N_KNOTS) if isinstance(n_knots, dict) else n_knots
        marginals.append(build_knots(X[:, j], count, order, covariate=j))
    return KnotSystem(order=order, marginals=tuple(marginals))


@dataclass(frozen=True)
class ProjectionChoice:
    """
    射影作用素 H_j の選択

    variant='averaging' は周辺ノット上の平均（A_j）、'fixed' は固定ノットでの値（F_j）。
    anchor は全共変量共通のアンカー（'min' / 'max' / 'median' / ノット添字）か、
    共変量番号を添字とするアンカーのタプル。
    """
    variant: str = 'averaging'
    anchor: Union[Anchor, Tuple[Anchor, ...]] = config.DEFAULT_FIXED_ANCHOR

    def __post_init__(self):
        if self.variant not in ('averaging', 'fixed'):
            raise InvalidDataError(f"未知の射影作用素: {self.variant}")

    @classmethod
    def averaging(cls) -> 'ProjectionChoice':
        return cls('averaging')

    @classmethod
    def fixed(cls, anchor: Union[Anchor, Sequence[Anchor]] = config.DEFAULT_FIXED_ANCHOR) -> 'ProjectionChoice':
        if isinstance(anchor, (list, tuple)):
            anchor = tuple(anchor)
        return cls('fixed', anchor)

    @property
    def label(self) -> str:
        """ATV / FTV の表記"""
        return 'ATV' if self.variant == 'averaging' else 'FTV'

    def fixed_index(self, covariate: int, n_knots: int) -> int:
        """
        固定点のノット添字（0始まり）を返す。

        Args:
            covariate: 共変量の番号（タプル指定のアンカーの添字）
            n_knots: その共変量の周辺ノット数
        """
        anchor = self.anchor
        if isinstance(anchor, tuple):
            if covariate >= len(anchor):
                raise InvalidDataError(f"固定点アンカーが共変量 {covariate} に対して指定されていません")
            anchor = anchor[covariate]

        if anchor == 'min':
            index = 0
        elif anchor == 'max':
            index = n_knots - 1
        elif anchor == 'median':
            index = (n_knots - 1) // 2
        elif isinstance(anchor, (int, np.integer)) and not isinstance(anchor, bool):
            index = int(anchor)
        else:
            raise InvalidDataError(f"未知の固定点アンカー: {anchor!r}")

        if not 0 <= index < n_knots:
            raise InvalidDataError(f"固定点の添字 {index} が周辺ノット数 {n_knots} の範囲外です")
        return index

    def project(self, values_at_knots: np.ndarray, covariate: int = 0) -> float:
        """ノット上の関数値（1次元）に H_j を適用したスカラーを返す"""
        values = np.asarray(values_at_knots, dtype=float)
        if self.variant == 'averaging':
            return float(values.mean())
        return float(values[self.fixed_index(covariate, len(values))])

    def project_axis(self, values: np.ndarray, axis: int, covariate: int = 0) -> np.ndarray:
        """グリッド配列の1軸に H_j を適用する（軸は長さ1で残す）"""
        if self.variant == 'averaging':
            return values.mean(axis=axis, keepdims=True)
        index = self.fixed_index(covariate, values.shape[axis])
        return np.take(values, [index], axis=axis)

    def to_dict(self) -> dict:
        anchor = list(self.anchor) if isinstance(self.anchor, tuple) else self.anchor
        return {'variant': self.variant, 'anchor': anchor}

    @classmethod
    def from_dict(cls, data: dict) -> 'ProjectionChoice':
        anchor = data.get('anchor', config.DEFAULT_FIXED_ANCHOR)
        if isinstance(anchor, list):
            anchor = tuple(anchor)
        return cls(data['variant'], anchor)
