"""
シミュレーションモジュール

シナリオ生成、評価指標、反復実行
"""
from .scenarios import (
    Scenario,
    SimulationData,
    anova_truth,
    gen_scenario,
    lattice_grid,
    lattice_truth,
    oracle_error_rate,
)
from .metrics import ClassificationMetrics, SimulationMetrics, classification_metrics, mise
from .replications import default_methods, format_mean_se, run_replications, summarize

__all__ = [
    'Scenario',
    'SimulationData',
    'anova_truth',
    'gen_scenario',
    'lattice_grid',
    'lattice_truth',
    'oracle_error_rate',
    'ClassificationMetrics',
    'SimulationMetrics',
    'classification_metrics',
    'mise',
    'default_methods',
    'format_mean_se',
    'run_replications',
    'summarize',
]
