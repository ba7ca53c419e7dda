"""
調整結果・能動ブロックの集計表
"""
import pandas as pd

from src.model.models import FittedModel


TUNING_COLUMNS = ['rho', 'lam', 'metric', 'n_active', 'n_nonzero', 'objective', 'converged']


def tune_report(model: FittedModel) -> pd.DataFrame:
    """調整グリッドの各点を検証指標の昇順に並べた表（同値はグリッド順）"""
    df = pd.DataFrame([r.to_dict() for r in model.tuning], columns=TUNING_COLUMNS)
    return df.sort_values('metric', kind='mergesort').reset_index(drop=True)


def active_block_summary(model: FittedModel) -> pd.DataFrame:
    """能動ブロックごとの次数・非ゼロ係数数・学習点での経験ノルム"""
    rows = []
    for block in model.blocks:
        beta = model.coefficients[block.subset]
        if not (beta != 0.0).any():
            continue
        rows.append({
            'block': model.block_label(block.subset),
            'size': block.size,
            'n_columns': block.n_columns,
            'n_nonzero': int((beta != 0.0).sum()),
            'empirical_norm': model.block_norms.get(block.subset, float('nan')),
        })
    return pd.DataFrame(rows, columns=['block', 'size', 'n_columns', 'n_nonzero', 'empirical_norm'])
