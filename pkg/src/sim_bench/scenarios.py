"""
シミュレーションシナリオの生成

- linear-anova: 10 個の一様共変量（4 つが有効）、Y = f(X) + N(0, 0.2546²)
- logistic-anova: 同じ f を g_j の平均を引いて中心化し、Y ~ Bernoulli(expit(f(X)))
- lattice-2d: f(x1, x2) = 1 - |x1 - x2|、誤差 N(0, 0.1²)、テストは 101×101 格子

乱数は Philox（カウンタ型）を使い、同じ seed なら同じデータになる。
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import expit

from src.errors import InvalidDataError, UnsupportedCaseError
from src.sim_bench import config

logger = logging.getLogger(__name__)


# ==================================================
# 真の関数
# ==================================================

def g1(z: np.ndarray) -> np.ndarray:
    return np.asarray(z, dtype=float)


def g2(z: np.ndarray) -> np.ndarray:
    return (2.0 * np.asarray(z, dtype=float) - 1.0) ** 2


def g3(z: np.ndarray) -> np.ndarray:
    s = np.sin(2.0 * np.pi * np.asarray(z, dtype=float))
    return s / (2.0 - s)


def g4(z: np.ndarray) -> np.ndarray:
    angle = 2.0 * np.pi * np.asarray(z, dtype=float)
    s, c = np.sin(angle), np.cos(angle)
    return 0.1 * s + 0.2 * c + 0.3 * s ** 2 + 0.4 * c ** 3 + 0.5 * s ** 3


def anova_truth(X: np.ndarray, centered: bool = False) -> np.ndarray:
    """
    f(x) = g1(x1) + g2(x2) + g3(x3) + g4(x4) + g1(x3 x4) + g2((x1 + x3)/2) + g3(x1 x2)

    centered=True では各 g_j を [0, 1] 上の平均を引いたものに置き換える。
    """
    X = np.asarray(X, dtype=float)
    m1, m2, m3, m4 = config.G_MEANS if centered else (0.0, 0.0, 0.0, 0.0)
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    return (
        (g1(x1) - m1) + (g2(x2) - m2) + (g3(x3) - m3) + (g4(x4) - m4)
        + (g1(x3 * x4) - m1) + (g2((x1 + x3) / 2.0) - m2) + (g3(x1 * x2) - m3)
    )


def lattice_truth(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return 1.0 - np.abs(X[:, 0] - X[:, 1])


def lattice_grid(size: int = config.LATTICE_GRID) -> np.ndarray:
    """[0, 1]² の等間隔格子（size² × 2）"""
    axis = np.linspace(0.0, 1.0, size)
    mesh = np.meshgrid(axis, axis, indexing='ij')
    return np.column_stack([mesh[0].ravel(), mesh[1].ravel()])


# ==================================================
# シナリオ
# ==================================================

@dataclass(frozen=True)
class Scenario:
    """シミュレーションの設定"""
    name: str
    n: Optional[int] = None             # 学習・検証それぞれのサイズ（None は既定値）
    seed: int = config.DEFAULT_BASE_SEED
    noise_sd: Optional[float] = None
    n_test: int = config.N_TEST
    replications: int = config.DEFAULT_REPLICATIONS

    def __post_init__(self):
        if self.name not in config.SCENARIOS:
            raise UnsupportedCaseError(f"未知のシナリオ: {self.name}（対応: {config.SCENARIOS}）")
        if self.n is not None and self.n < 1:
            raise InvalidDataError(f"サンプルサイズは正でなければなりません: {self.n}")

    @property
    def size(self) -> int:
        return self.n if self.n is not None else config.DEFAULT_N[self.name]

    @property
    def p(self) -> int:
        return config.P_LATTICE if self.name == 'lattice-2d' else config.P_ANOVA

    @property
    def loss(self) -> str:
        return 'logistic' if self.name == 'logistic-anova' else 'squared'

    @property
    def sigma(self) -> float:
        if self.noise_sd is not None:
            return self.noise_sd
        if self.name == 'lattice-2d':
            return config.NOISE_SD_LATTICE
        return config.NOISE_SD_LINEAR

    def with_seed(self, seed: int) -> 'Scenario':
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SimulationData:
    """学習・検証・テストのデータ"""
    X_train: np.ndarray
    Y_train: np.ndarray
    X_val: np.ndarray
    Y_val: np.ndarray
    X_test: np.ndarray
    f_test: np.ndarray                 # テスト点での真の f
    Y_test: Optional[np.ndarray] = None  # ロジスティックのみ（テストラベル）


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def truth(scenario: Scenario, X: np.ndarray) -> np.ndarray:
    if scenario.name == 'lattice-2d':
        return lattice_truth(X)
    return anova_truth(X, centered=scenario.name == 'logistic-anova')


def _responses(scenario: Scenario, f: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if scenario.loss == 'logistic':
        return (rng.random(len(f)) < expit(f)).astype(float)
    return f + scenario.sigma * rng.standard_normal(len(f))


def gen_scenario(scenario: Scenario) -> SimulationData:
    """
    シナリオのデータを生成する（同じ Scenario なら同一のデータ）

    Returns:
        SimulationData（テスト点は ANOVA シナリオが n_test 個の一様点、格子シナリオが 101×101 格子）
    """
    rng = make_generator(scenario.seed)
    n, p = scenario.size, scenario.p

    X_train = rng.random((n, p))
    f_train = truth(scenario, X_train)
    Y_train = _responses(scenario, f_train, rng)

    X_val = rng.random((n, p))
    Y_val = _responses(scenario, truth(scenario, X_val), rng)

    if scenario.name == 'lattice-2d':
        X_test = lattice_grid()
    else:
        X_test = rng.random((scenario.n_test, p))
    f_test = truth(scenario, X_test)
    Y_test = _responses(scenario, f_test, rng) if scenario.loss == 'logistic' else None

    logger.debug(f"シナリオ {scenario.name}: n={n}, p={p}, seed={scenario.seed}")
    return SimulationData(X_train, Y_train, X_val, Y_val, X_test, f_test, Y_test)


def oracle_error_rate(n: int = 100_000, seed: int = config.DEFAULT_BASE_SEED) -> float:
    """ロジスティックシナリオの真の f による誤判別率（モンテカルロ）"""
    rng = make_generator(seed)
    X = rng.random((n, config.P_ANOVA))
    f = anova_truth(X, centered=True)
    y = rng.random(n) < expit(f)
    return float(np.mean((f > 0.0) != y))
