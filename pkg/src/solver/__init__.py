"""
ソルバーモジュール

ブロック Lasso、経験ノルムのソフト閾値、BDT 後退当てはめ（二乗・ロジスティック）
"""
from .models import FitState, PenaltyConfig
from .lasso import solve_block, solve_lasso_block, subproblem_objective, threshold_block
from .bdt import (
    bdt_fit,
    bdt_logit_fit,
    block_penalty,
    logistic_loss,
    penalty_total,
    squared_loss,
)

__all__ = [
    'FitState',
    'PenaltyConfig',
    'solve_block',
    'solve_lasso_block',
    'subproblem_objective',
    'threshold_block',
    'bdt_fit',
    'bdt_logit_fit',
    'block_penalty',
    'logistic_loss',
    'penalty_total',
    'squared_loss',
]
