"""
推定器: パラメータ定義
"""

# === フィット対象 ===
# フィットで扱う交差次数 m と最大交互作用次数 K
FIT_ORDERS: tuple = (1, 2)
MAX_FIT_INTERACTION: int = 2
# 最小サンプルサイズ
MIN_ROWS: int = 10

# === 調整パラメータのグリッド ===
# ρ, λ それぞれの対数グリッドの点数
GRID_SIZE: int = 8
# ρ の範囲（ρ_max = max |Ψ̃ᵀ(Y - Ȳ)|/n に対する比）
RHO_RATIO_MIN: float = 1e-3
RHO_RATIO_MAX: float = 1e-1
# λ の下限（λ_max に対する比）
LAMBDA_RATIO_MIN: float = 1e-3

# === 調整方式 ===
TUNING_MODES: tuple = ("validation", "kfold")
DEFAULT_TUNING: str = "validation"
DEFAULT_FOLDS: int = 5
# 検証用データを与えない場合に学習データから分ける割合
VALIDATION_FRACTION: float = 0.25

# === 損失 ===
LOSSES: tuple = ("squared", "logistic")
# 検証ロジスティック損失の確率クリップ（評価時のみ）
PROB_CLIP: float = 1e-12

# === モデル文書 ===
SCHEMA_NAME: str = "anova-tv-model"
SCHEMA_VERSION: int = 1
