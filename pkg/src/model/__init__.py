"""
推定器モジュール

フィット、予測、ANOVA 成分、部分依存、調整結果、モデル文書
"""
from .models import FittedModel, ModelSpec, TuningRecord
from .estimator import anova_components, component_matrix, fit, predict, predict_proba
from .partial_dependence import default_query_grid, partial_dependence
from .report import active_block_summary, tune_report
from .serialization import dumps, from_document, load_model, loads, save_model, to_document
from .tuning import lambda_max, rho_grid, lambda_grid, tune

__all__ = [
    'FittedModel',
    'ModelSpec',
    'TuningRecord',
    'anova_components',
    'component_matrix',
    'fit',
    'predict',
    'predict_proba',
    'default_query_grid',
    'partial_dependence',
    'active_block_summary',
    'tune_report',
    'dumps',
    'from_document',
    'load_model',
    'loads',
    'save_model',
    'to_document',
    'lambda_max',
    'rho_grid',
    'lambda_grid',
    'tune',
]
