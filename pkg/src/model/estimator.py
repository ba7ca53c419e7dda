"""
二重罰則付き関数 ANOVA 推定器

fit → FittedModel → predict / predict_proba / anova_components / component_matrix
"""
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from src.basis.blocks import build_basis_block, enumerate_blocks, evaluate_block, materialize_blocks
from src.basis.knots import KnotSystem, build_knots
from src.basis.psi import build_psi_basis
from src.errors import InvalidDataError, KnotConstructionError
from src.model import config
from src.model.models import FittedModel, ModelSpec
from src.model.tuning import tune

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]


def _check_training_data(X: np.ndarray, Y: np.ndarray, loss: str) -> Tuple[np.ndarray, np.ndarray]:
    if loss not in config.LOSSES:
        raise InvalidDataError(f"未知の損失: {loss}（対応: {config.LOSSES}）")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidDataError("X は n×p（p >= 1）の行列でなければなりません")
    if Y.ndim != 1 or len(Y) != X.shape[0]:
        raise InvalidDataError(f"応答の長さ {Y.shape} が X の行数 {X.shape[0]} と一致しません")
    if X.shape[0] < config.MIN_ROWS:
        raise InvalidDataError(f"サンプルサイズ {X.shape[0]} が最小値 {config.MIN_ROWS} 未満です")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(Y)):
        raise InvalidDataError("学習データに非有限値が含まれます")
    if loss == 'squared' and np.ptp(Y) == 0.0:
        raise InvalidDataError("応答が定数です")
    if loss == 'logistic':
        if not np.all((Y == 0.0) | (Y == 1.0)):
            raise InvalidDataError("ロジスティック応答は 0/1 でなければなりません")
        if Y.min() == Y.max():
            raise InvalidDataError("ロジスティック応答が単一クラスです")
    return X, Y


def _build_knots(X: np.ndarray, spec: ModelSpec, loss: str) -> Tuple[KnotSystem, Tuple[int, ...]]:
    """周辺ノットを作る（退化した共変量は警告して除外）"""
    n_knots = spec.knots_for(loss)
    marginals, excluded = [], []
    for j in range(X.shape[1]):
        count = n_knots.get(j, spec.default_knots(loss)) if isinstance(n_knots, dict) else n_knots
        try:
            marginals.append(build_knots(X[:, j], count, spec.order, covariate=j))
        except KnotConstructionError as e:
            logger.warning(f"共変量 {j} を除外します: {e}")
            excluded.append(j)
    if not marginals:
        raise InvalidDataError("全ての共変量が退化しています")
    return KnotSystem(order=spec.order, marginals=tuple(marginals)), tuple(excluded)


def fit(
    X: np.ndarray,
    Y: np.ndarray,
    spec: Optional[ModelSpec] = None,
    loss: str = 'squared',
    X_val: Optional[np.ndarray] = None,
    Y_val: Optional[np.ndarray] = None,
    feature_names: Optional[Sequence[str]] = None,
    max_workers: Optional[int] = None,
    progress: bool = False,
) -> FittedModel:
    """
    二重罰則付き ANOVA モデルをフィットする。

    Args:
        X: n×p 学習データ
        Y: 応答（squared は実数、logistic は 0/1）
        spec: ModelSpec（None なら既定値）
        loss: 'squared' / 'logistic'
        X_val, Y_val: 検証データ（tuning='validation' で与えると学習データを分割しない）
        feature_names: 共変量名（None なら x1..xp）
        max_workers: 調整グリッドの並列数
        progress: 進捗表示

    Returns:
        選択点で学習データ全体にフィットした FittedModel

    Raises:
        InvalidDataError: 入力の不正、定数応答、K > p
    """
    spec = spec or ModelSpec()
    X, Y = _check_training_data(X, Y, loss)
    p = X.shape[1]
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j + 1}" for j in range(p))
    if len(names) != p:
        raise InvalidDataError(f"feature_names の長さ {len(names)} が列数 {p} と一致しません")

    knots, excluded = _build_knots(X, spec, loss)
    covariates = knots.covariates
    subsets = enumerate_blocks(len(covariates), spec.max_interaction, covariates=covariates)
    bases = {j: build_psi_basis(knots, spec.projection, j) for j in covariates}
    basis_blocks = [build_basis_block(s, bases) for s in subsets]
    designs = materialize_blocks(basis_blocks, bases, X, max_workers=max_workers or 1)
    logger.info(
        f"計画行列: ブロック {len(designs)}, 列 {sum(d.n_columns for d in designs)}"
        f"（m={spec.order}, K={spec.max_interaction}, {spec.projection.label}）"
    )

    validation = None
    if X_val is not None or Y_val is not None:
        if X_val is None or Y_val is None:
            raise InvalidDataError("X_val と Y_val は両方指定してください")
        if spec.tuning == 'kfold':
            logger.warning("tuning='kfold' のため検証データは使いません")
        else:
            X_val, Y_val = _check_validation(X_val, Y_val, p)
            validation = ({b.subset: evaluate_block(b, bases, X_val) for b in basis_blocks}, Y_val)

    result = tune(Y, designs, spec, loss, validation=validation, max_workers=max_workers, progress=progress)
    state = result.state
    coefficients = {s: np.array(beta) for s, beta in state.coefficients.items()}
    block_norms = {d.subset: d.empirical_norm(coefficients[d.subset]) for d in designs}

    return FittedModel(
        spec=spec,
        loss=loss,
        n_features=p,
        feature_names=names,
        knots=knots,
        bases=bases,
        blocks=tuple(basis_blocks),
        means={d.subset: d.means for d in designs},
        coefficients=coefficients,
        intercept=float(state.intercept),
        penalty=spec.penalty(result.best.rho, result.best.lam),
        fitted=state.fitted.copy(),
        objective_value=state.objective,
        converged=state.converged,
        n_cycles=state.n_cycles,
        tuning=result.records,
        excluded=excluded,
        block_norms=block_norms,
    )


def _check_validation(X_val: np.ndarray, Y_val: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    X_val = np.asarray(X_val, dtype=float)
    Y_val = np.asarray(Y_val, dtype=float)
    if X_val.ndim != 2 or X_val.shape[1] != p or len(Y_val) != X_val.shape[0]:
        raise InvalidDataError("検証データの形状が学習データと一致しません")
    if not np.all(np.isfinite(X_val)) or not np.all(np.isfinite(Y_val)):
        raise InvalidDataError("検証データに非有限値が含まれます")
    return X_val, Y_val


def predict(model: FittedModel, X: np.ndarray) -> np.ndarray:
    """線形予測子 f̂(x) = β_0 + Σ_S (Ψ_S(x) - Ψ̄†_S)ᵀ β̂_S"""
    return model.linear_predictor(X)


def predict_proba(model: FittedModel, X: np.ndarray) -> np.ndarray:
    """ロジスティックモデルの確率 expit(f̂(x))"""
    if model.loss != 'logistic':
        raise InvalidDataError("確率予測はロジスティックモデルのみ対応しています")
    return expit(model.linear_predictor(X))


def anova_components(model: FittedModel, x: np.ndarray) -> Dict[Subset, float]:
    """1点での各ブロックの中心化成分（和は predict(x) - β_0）"""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    values = model.component_values(x)[0]
    return {block.subset: float(v) for block, v in zip(model.blocks, values)}


def component_matrix(model: FittedModel, X: np.ndarray) -> pd.DataFrame:
    """多数の点での各ブロックの成分（列はブロック名 'x1:x2' など）"""
    values = model.component_values(X)
    return pd.DataFrame(values, columns=[model.block_label(b.subset) for b in model.blocks])
