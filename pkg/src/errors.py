"""
例外クラス定義

ライブラリ全体で送出する例外をここに集約する。
CLI はクラス名をそのまま stderr に出力するため、名前は変更しないこと。
"""
from typing import Optional

import numpy as np


class AnovaTVError(Exception):
    """本パッケージの例外の基底クラス"""


class InvalidDataError(AnovaTVError, ValueError):
    """入力データ・引数の検証エラー（非有限値、形状不一致、定数応答など）"""


class KnotConstructionError(InvalidDataError):
    """ノット構築エラー（相異なる値が不足している共変量など）"""

    def __init__(self, message: str, covariate: Optional[int] = None):
        super().__init__(message)
        self.covariate = covariate


class UnsupportedCaseError(AnovaTVError, NotImplementedError):
    """対応範囲外のケース（オラクルの (m, d)、K ≥ 3 のフィット等）"""


class LassoConvergenceError(AnovaTVError, RuntimeError):
    """ブロック Lasso が反復上限内に収束しなかった"""

    def __init__(self, message: str, best: np.ndarray, kkt_gap: float):
        super().__init__(message)
        self.best = best
        self.kkt_gap = kkt_gap
