"""
シミュレーション評価指標
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from src.errors import InvalidDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassificationMetrics:
    log_loss: float
    error_rate: float
    auc: float

    def to_dict(self) -> dict:
        return {'log_loss': self.log_loss, 'error_rate': self.error_rate, 'auc': self.auc}


class SimulationMetrics:
    """評価指標計算クラス"""

    @staticmethod
    def mise(fhat: np.ndarray, f_true: np.ndarray) -> float:
        """
        MISE = (1/N) Σ (f(ξ_i) - f̂(ξ_i))²

        Args:
            fhat: テスト点での推定値
            f_true: テスト点での真の値
        """
        fhat = np.asarray(fhat, dtype=float)
        f_true = np.asarray(f_true, dtype=float)
        if fhat.shape != f_true.shape or fhat.size == 0:
            raise InvalidDataError(f"MISE の入力形状が不正です: {fhat.shape} vs {f_true.shape}")
        return float(np.mean((f_true - fhat) ** 2))

    @staticmethod
    def log_loss(phat: np.ndarray, y: np.ndarray) -> float:
        phat = np.asarray(phat, dtype=float)
        return float(-np.mean(y * np.log(phat) + (1.0 - y) * np.log(1.0 - phat)))

    @staticmethod
    def error_rate(phat: np.ndarray, y: np.ndarray) -> float:
        """確率 0.5 を閾値とした誤判別率"""
        return float(np.mean((np.asarray(phat) > 0.5) != (np.asarray(y) == 1.0)))

    @staticmethod
    def auc(score: np.ndarray, y: np.ndarray) -> float:
        """
        順位統計量による AUC（同順位は平均順位）

        Raises:
            InvalidDataError: y が単一クラス
        """
        y = np.asarray(y, dtype=float)
        n_pos = int(np.sum(y == 1.0))
        n_neg = len(y) - n_pos
        if n_pos == 0 or n_neg == 0:
            raise InvalidDataError("単一クラスでは AUC は定義されません")
        ranks = rankdata(score, method='average')
        return float((np.sum(ranks[y == 1.0]) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))

    @staticmethod
    def classification_metrics(phat: np.ndarray, y: np.ndarray) -> ClassificationMetrics:
        """
        ロジスティック損失・誤判別率・AUC

        Args:
            phat: (0, 1) の予測確率
            y: 0/1 ラベル
        """
        phat = np.asarray(phat, dtype=float)
        y = np.asarray(y, dtype=float)
        if phat.shape != y.shape:
            raise InvalidDataError(f"確率とラベルの形状が一致しません: {phat.shape} vs {y.shape}")
        if np.any(phat <= 0.0) or np.any(phat >= 1.0):
            raise InvalidDataError("予測確率は (0, 1) の範囲でなければなりません")
        return ClassificationMetrics(
            log_loss=SimulationMetrics.log_loss(phat, y),
            error_rate=SimulationMetrics.error_rate(phat, y),
            auc=SimulationMetrics.auc(phat, y),
        )


mise = SimulationMetrics.mise
classification_metrics = SimulationMetrics.classification_metrics
