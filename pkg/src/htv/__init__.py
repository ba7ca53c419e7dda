"""
全変動の検証器モジュール
"""
from .grid import AnovaDecomposition, GridFunction, anova_decompose, spline_on_grid
from .total_variation import htv, htv_via_components, raw_tv

__all__ = [
    'AnovaDecomposition',
    'GridFunction',
    'anova_decompose',
    'spline_on_grid',
    'htv',
    'htv_via_components',
    'raw_tv',
]
