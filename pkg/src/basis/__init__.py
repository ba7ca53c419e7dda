"""
基底構築モジュール

周辺ノット、Ψ 基底、交互作用ブロックと計画行列
"""
from .knots import (
    KnotSystem,
    MarginalKnots,
    ProjectionChoice,
    build_knot_system,
    build_knots,
    superset_indices,
)
from .psi import (
    TruncatedPowerFunction,
    UnivariatePsiBasis,
    build_psi_basis,
    phi_function,
    transform,
    truncated_power,
)
from .blocks import (
    BasisBlock,
    DesignBlock,
    build_basis_block,
    enumerate_blocks,
    evaluate_block,
    materialize_block,
    materialize_blocks,
)

__all__ = [
    'KnotSystem',
    'MarginalKnots',
    'ProjectionChoice',
    'build_knot_system',
    'build_knots',
    'superset_indices',
    'TruncatedPowerFunction',
    'UnivariatePsiBasis',
    'build_psi_basis',
    'phi_function',
    'transform',
    'truncated_power',
    'BasisBlock',
    'DesignBlock',
    'build_basis_block',
    'enumerate_blocks',
    'evaluate_block',
    'materialize_block',
    'materialize_blocks',
]
