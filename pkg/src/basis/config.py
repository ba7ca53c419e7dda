"""
基底構築: パラメータ定義
"""

# === スプライン次数 ===
# 交差次数 m（1: 区分定数, 2: 区分交差線形, 3: 区分交差二次）
SUPPORTED_ORDERS: tuple = (1, 2, 3)
DEFAULT_ORDER: int = 2

# === ノット ===
# 回帰のデフォルト周辺ノット数（10%刻みの11分位点）
DEFAULT_N_KNOTS: int = 11
# 分類（実データ）のデフォルト周辺ノット数（20%刻みの6分位点）
DEFAULT_N_KNOTS_CLASSIFICATION: int = 6
# 分位点の定義（type-7 線形補間）
QUANTILE_METHOD: str = "linear"

# === 固定点作用素 ===
DEFAULT_FIXED_ANCHOR: str = "min"
FIXED_ANCHORS: tuple = ("min", "max", "median")

