"""
シミュレーション: パラメータ定義
"""
import numpy as np

# === シナリオ ===
SCENARIOS: tuple = ("linear-anova", "logistic-anova", "lattice-2d")

# 既定のサンプルサイズ（学習・検証それぞれ）
DEFAULT_N: dict = {
    "linear-anova": 200,
    "logistic-anova": 500,
    "lattice-2d": 100,
}

# 共変量の数（ANOVA シナリオは 4 つが有効、6 つが無関係）
P_ANOVA: int = 10
P_LATTICE: int = 2

# 誤差の標準偏差（ANOVA シナリオは SN 比 3:1）
NOISE_SD_LINEAR: float = 0.2546
NOISE_SD_LATTICE: float = 0.1

# テスト点の数（格子シナリオは LATTICE_GRID² 点の等間隔格子）
N_TEST: int = 10_000
LATTICE_GRID: int = 101

# === ロジスティックシナリオ ===
# [0, 1] 上の g_j の平均（中心化で差し引く）
G_MEANS: tuple = (0.5, 1.0 / 3.0, 2.0 / np.sqrt(3.0) - 1.0, 0.15)
# 真の関数による誤判別率
ORACLE_ERROR_RATE: float = 0.3535

# === 反復 ===
DEFAULT_REPLICATIONS: int = 100
DEFAULT_BASE_SEED: int = 20240101
