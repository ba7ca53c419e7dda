"""
テスト共通フィクスチャ

全テストで再利用するデータ生成ヘルパーとフィクスチャを定義
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# プロジェクトルートをパスに追加
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.basis.blocks import BasisBlock, DesignBlock  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "integration: 複数モジュールを通した結合テスト")
    config.addinivalue_line("markers", "performance: 机上規模のシミュレーション受け入れテスト（時間がかかる）")


def philox(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@pytest.fixture
def rng():
    """再現可能な乱数生成器"""
    return philox(12345)


@pytest.fixture
def make_design_block():
    """
    任意の評価行列から DesignBlock を作るファクトリ

    degrees は列ごとの非微分次数（0 は無罰則）。
    """
    def factory(raw: np.ndarray, degrees, subset=(0,)) -> DesignBlock:
        raw = np.asarray(raw, dtype=float)
        degrees = np.asarray(degrees, dtype=int)
        block = BasisBlock(
            subset=tuple(subset),
            order=2,
            multi_indices=tuple((i + 2,) for i in range(raw.shape[1])),
            degrees=degrees,
        )
        means = raw.mean(axis=0)
        centered = raw - means
        return DesignBlock(
            block=block,
            raw=raw,
            means=means,
            centered=centered,
            gram=centered.T @ centered / raw.shape[0],
        )
    return factory


@pytest.fixture
def regression_data():
    """3共変量（x1 が主効果、x1×x2 が交互作用、x3 は無関係）の回帰データ"""
    gen = philox(2024)
    n = 80
    X = gen.random((n, 3))
    f = np.sin(2 * np.pi * X[:, 0]) + 0.8 * X[:, 0] * X[:, 1]
    Y = f + 0.1 * gen.standard_normal(n)
    return X, Y


@pytest.fixture
def classification_data():
    """2共変量のロジスティックデータ（両クラスを含む）"""
    gen = philox(7)
    n = 120
    X = gen.random((n, 2))
    f = 3.0 * (X[:, 0] - 0.5) - 2.0 * (X[:, 1] - 0.5) ** 2
    y = (gen.random(n) < 1.0 / (1.0 + np.exp(-f))).astype(float)
    return X, y
