"""
一変量の切断べき基底（Φ）と変換基底（Ψ）

責務:
- 切断べき関数 φ_{ν,j} を「多項式 + 単一の切断べき項」として表現する
- 線形作用素 T_j^{(m)} を再帰的に適用し、ψ_{ν,j} = (1 - H_j) T_j^{(m)} φ_{ν,j} を構築する
- ψ は「φ + 次数 m-1 以下の補正多項式」として保持するため、任意点で厳密に評価できる

規約:
- (c)_+^0 は c >= 0 で 1、c < 0 で 0（ノット上の評価も含めて常にこの規約）
- H_j は周辺ノット上の値に対して評価する（データ点ではない）
"""
import logging
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from src.basis.knots import KnotSystem, MarginalKnots, ProjectionChoice
from src.errors import InvalidDataError

logger = logging.getLogger(__name__)


def truncated_power(z: np.ndarray, knot: float, power: int) -> np.ndarray:
    """(z - t)_+^p / p! を評価する（p = 0 は右連続の階段関数）"""
    z = np.asarray(z, dtype=float)
    if power == 0:
        return (z >= knot).astype(float)
    return np.maximum(z - knot, 0.0) ** power / factorial(power)


@dataclass(frozen=True)
class TruncatedPowerFunction:
    """
    f(z) = Σ_i poly[i] z^i + scale · (z - knot)_+^power / power!

    φ と、それに T_j・H_j を施した結果はすべてこの形に収まる
    （切断べき項は高々1つで、作用素は多項式部分だけを変える）。
    """
    poly: np.ndarray = field(default_factory=lambda: np.zeros(1))
    knot: Optional[float] = None
    power: int = 0
    scale: float = 0.0

    @property
    def is_truncated(self) -> bool:
        return self.knot is not None and self.scale != 0.0

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        values = P.polyval(z, self.poly)
        if self.is_truncated:
            values = values + self.scale * truncated_power(z, self.knot, self.power)
        return values

    def derivative(self) -> 'TruncatedPowerFunction':
        """D_j（z についての微分）"""
        poly = P.polyder(self.poly)
        if not self.is_truncated:
            return TruncatedPowerFunction(poly)
        if self.power == 0:
            raise InvalidDataError("階段関数の微分は定義されていません")
        return TruncatedPowerFunction(poly, self.knot, self.power - 1, self.scale)

    def antiderivative(self) -> 'TruncatedPowerFunction':
        """D_j^-（原点で 0 となる積分。切断べき項は次数を1つ上げる）"""
        poly = P.polyint(self.poly)
        if not self.is_truncated:
            return TruncatedPowerFunction(poly)
        return TruncatedPowerFunction(poly, self.knot, self.power + 1, self.scale)

    def plus_polynomial(self, coefficients: Sequence[float]) -> 'TruncatedPowerFunction':
        poly = P.polyadd(self.poly, np.asarray(coefficients, dtype=float))
        return TruncatedPowerFunction(poly, self.knot, self.power, self.scale)

    def to_dict(self) -> dict:
        return {
            'poly': self.poly.tolist(),
            'knot': self.knot,
            'power': self.power,
            'scale': self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TruncatedPowerFunction':
        return cls(
            poly=np.asarray(data['poly'], dtype=float),
            knot=None if data['knot'] is None else float(data['knot']),
            power=int(data['power']),
            scale=float(data['scale']),
        )


def phi_function(nu: int, order: int, superset: np.ndarray) -> TruncatedPowerFunction:
    """
    切断べき基底 φ^{(m)}_{ν,j}

    ν <= m は z^{ν-1}/(ν-1)!、ν > m は (z - t_{ν-m})_+^{m-1}/(m-1)!。
    """
    if nu <= order:
        poly = np.zeros(nu)
        poly[nu - 1] = 1.0 / factorial(nu - 1)
        return TruncatedPowerFunction(poly)
    knot = float(superset[nu - order - 1])
    return TruncatedPowerFunction(np.zeros(1), knot, order - 1, 1.0)


def transform(
    phi: TruncatedPowerFunction,
    nu: int,
    order: int,
    project: Callable[[TruncatedPowerFunction], float],
) -> TruncatedPowerFunction:
    """
    T_j^{(m)} φ_{ν,j} を再帰的に計算する。

    T^{(1)} = I、T^{(m)} φ_2 = z、ν >= 3 では
    T^{(m)} φ_ν = (1 - z H_j D_j) D_j^- T^{(m-1)} D_j φ_ν。

    Args:
        phi: φ^{(m)}_{ν,j}
        nu: 添字 ν（2 以上）
        order: m
        project: 関数に H_j を適用してスカラーを返す
    """
    if order == 1 or nu == 2:
        return phi
    inner = transform(phi.derivative(), nu - 1, order - 1, project)
    integrated = inner.antiderivative()
    # (1 - z H D) w = w - z H(D w), D w = inner
    return integrated.plus_polynomial([0.0, -project(inner)])


@dataclass(frozen=True)
class UnivariatePsiBasis:
    """共変量 j の Ψ 基底 ψ_{ν,j}（ν = 2..n_j）"""
    covariate: int
    order: int
    marginal: MarginalKnots
    projection: ProjectionChoice
    phi: Tuple[TruncatedPowerFunction, ...]
    psi: Tuple[TruncatedPowerFunction, ...]

    @property
    def n_functions(self) -> int:
        return len(self.psi)

    @property
    def nus(self) -> Tuple[int, ...]:
        return tuple(range(2, self.n_functions + 2))

    @property
    def truncated(self) -> np.ndarray:
        """ν >= m+1（真に切断されたべき関数）かどうか"""
        return np.array([nu >= self.order + 1 for nu in self.nus])

    @property
    def corrections(self) -> Tuple[np.ndarray, ...]:
        """ψ = φ + 補正多項式 の補正多項式（係数は昇べき順）"""
        return tuple(P.polysub(s.poly, f.poly) for f, s in zip(self.phi, self.psi))

    def project(self, function: TruncatedPowerFunction) -> float:
        """H_j を適用したスカラー"""
        return self.projection.project(function(self.marginal.knots), covariate=self.covariate)

    def evaluate(self, z) -> np.ndarray:
        """ψ の評価行列（len(z) × (n_j - 1)）"""
        z = np.asarray(z, dtype=float)
        return np.column_stack([s(z) for s in self.psi])

    def evaluate_phi(self, z) -> np.ndarray:
        """φ の評価行列（len(z) × (n_j - 1)）"""
        z = np.asarray(z, dtype=float)
        return np.column_stack([f(z) for f in self.phi])

    def evaluate_derivative(self, z) -> np.ndarray:
        """D_j ψ の評価行列（m >= 2 のみ）"""
        z = np.asarray(z, dtype=float)
        return np.column_stack([s.derivative()(z) for s in self.psi])

    def to_dict(self) -> dict:
        return {
            'covariate': self.covariate,
            'order': self.order,
            'marginal': self.marginal.to_dict(),
            'projection': self.projection.to_dict(),
            'phi': [f.to_dict() for f in self.phi],
            'psi': [s.to_dict() for s in self.psi],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'UnivariatePsiBasis':
        return cls(
            covariate=int(data['covariate']),
            order=int(data['order']),
            marginal=MarginalKnots.from_dict(data['marginal']),
            projection=ProjectionChoice.from_dict(data['projection']),
            phi=tuple(TruncatedPowerFunction.from_dict(f) for f in data['phi']),
            psi=tuple(TruncatedPowerFunction.from_dict(s) for s in data['psi']),
        )


def build_psi_basis(
    knots: KnotSystem,
    projection: ProjectionChoice,
    covariate: int,
) -> UnivariatePsiBasis:
    """
    共変量 j の Ψ 基底を構築する。

    m=1 では ψ = φ - H_j φ、m=2 では ψ_2 = z - H_j z、ν >= 3 で
    ψ = (1 - H_j)(φ - z H_j D_j φ)、m=3 は T^{(3)} の再帰式による。

    Args:
        knots: KnotSystem
        projection: 射影作用素の選択
        covariate: 共変量の番号 j
    """
    marginal = knots[covariate]
    order = knots.order

    def project(function: TruncatedPowerFunction) -> float:
        return projection.project(function(marginal.knots), covariate=covariate)

    phis, psis = [], []
    for nu in range(2, marginal.n_knots + 1):
        phi = phi_function(nu, order, marginal.superset)
        transformed = transform(phi, nu, order, project)
        psi = transformed.plus_polynomial([-project(transformed)])
        phis.append(phi)
        psis.append(psi)

    logger.debug(f"共変量 {covariate}: Ψ 基底 {len(psis)} 本を構築（m={order}, {projection.label}）")
    return UnivariatePsiBasis(
        covariate=covariate,
        order=order,
        marginal=marginal,
        projection=projection,
        phi=tuple(phis),
        psi=tuple(psis),
    )
