"""
ソルバー: パラメータ定義
"""

# === ブロック Lasso（内側ソルバー） ===
# KKT 残差の許容値（max(1, max|Ψ̃ᵀr|/n) に対する相対値）
LASSO_KKT_TOL: float = 1e-9
# 座標降下の最大パス数
LASSO_MAX_PASSES: int = 100_000
# 能動集合での厳密解を試みる間隔（パス数）
ACTIVE_SET_REFINE_EVERY: int = 10

# === 後退当てはめ（BDT） ===
# 1周あたりの目的関数の相対変化の収束判定
BDT_TOL_SQUARED: float = 1e-7
BDT_TOL_LOGISTIC: float = 1e-6
# 最大周回数（超えた場合は警告して最後の反復を返す）
MAX_CYCLES: int = 200

# === ロジスティック ===
# expit の微分の上界（二次下界原理）
LOGISTIC_CURVATURE: float = 0.25
# 線形予測子の絶対値がこれを超えたら分離の警告
LINEAR_PREDICTOR_WARN: float = 30.0
