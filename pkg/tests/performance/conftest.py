"""
性能テスト用フィクスチャ

シミュレーションはローカル生成データでネットワーク不要・再現可能
"""
import os

import pytest

from src.sim_bench.replications import default_methods
from src.sim_bench.scenarios import Scenario


@pytest.fixture
def workers():
    """反復の並列プロセス数（4 コア相当まで）"""
    return max(1, min(4, os.cpu_count() or 1))


@pytest.fixture
def atv_methods():
    """ANOVA シナリオの ATV（m=1, 2）"""
    def select(scenario: Scenario):
        return [(label, spec) for label, spec in default_methods(scenario) if label.startswith('ATV')]
    return select
