"""
モデル文書の保存・読み込み（JSON）

文書は自己記述的で、予測に必要な全て（ノット、Ψ 関数の記述子、列平均、係数、切片）を含む。
浮動小数は repr で書き出すため、読み込んだモデルの予測は元と完全に一致する。
時刻などの非決定的な値は含めない。
"""
import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from src.basis.blocks import build_basis_block
from src.basis.knots import KnotSystem, ProjectionChoice
from src.basis.psi import UnivariatePsiBasis
from src.errors import InvalidDataError
from src.model import config
from src.model.models import FittedModel, ModelSpec, TuningRecord
from src.solver.models import PenaltyConfig

logger = logging.getLogger(__name__)


def _subset_key(subset) -> list:
    return [int(j) for j in subset]


def to_document(model: FittedModel) -> dict:
    """FittedModel を JSON 化可能な辞書にする"""
    return {
        'schema': config.SCHEMA_NAME,
        'version': config.SCHEMA_VERSION,
        'loss': model.loss,
        'n_features': model.n_features,
        'feature_names': list(model.feature_names),
        'excluded': list(model.excluded),
        'spec': model.spec.to_dict(),
        'penalty': {
            'rho': list(model.penalty.rho),
            'lam': list(model.penalty.lam),
            'projection': model.penalty.projection.to_dict(),
            'order': model.penalty.order,
        },
        'knots': model.knots.to_dict(),
        'bases': [model.bases[j].to_dict() for j in model.covariates],
        'blocks': [
            {
                'subset': _subset_key(block.subset),
                'multi_indices': [list(index) for index in block.multi_indices],
                'degrees': block.degrees.tolist(),
                'means': model.means[block.subset].tolist(),
                'coefficients': model.coefficients[block.subset].tolist(),
                'empirical_norm': model.block_norms.get(block.subset),
            }
            for block in model.blocks
        ],
        'intercept': model.intercept,
        'fitted': model.fitted.tolist(),
        'objective': model.objective_value,
        'converged': model.converged,
        'n_cycles': model.n_cycles,
        'tuning': [r.to_dict() for r in model.tuning],
    }


def from_document(document: dict) -> FittedModel:
    """
    辞書から FittedModel を復元する。

    Raises:
        InvalidDataError: スキーマ名・版の不一致、ブロック構成の不整合
    """
    if document.get('schema') != config.SCHEMA_NAME:
        raise InvalidDataError(f"モデル文書ではありません（schema={document.get('schema')!r}）")
    if document.get('version') != config.SCHEMA_VERSION:
        raise InvalidDataError(
            f"モデル文書の版 {document.get('version')} は未対応です（対応: {config.SCHEMA_VERSION}）"
        )

    bases = {}
    for data in document['bases']:
        basis = UnivariatePsiBasis.from_dict(data)
        bases[basis.covariate] = basis

    blocks, means, coefficients, norms = [], {}, {}, {}
    for data in document['blocks']:
        subset = tuple(data['subset'])
        block = build_basis_block(subset, bases)
        if [list(index) for index in block.multi_indices] != data['multi_indices']:
            raise InvalidDataError(f"ブロック {subset} の列構成が基底と一致しません")
        blocks.append(block)
        means[subset] = np.asarray(data['means'], dtype=float)
        coefficients[subset] = np.asarray(data['coefficients'], dtype=float)
        if data.get('empirical_norm') is not None:
            norms[subset] = float(data['empirical_norm'])

    penalty = document['penalty']
    return FittedModel(
        spec=ModelSpec.from_dict(document['spec']),
        loss=document['loss'],
        n_features=int(document['n_features']),
        feature_names=tuple(document['feature_names']),
        knots=KnotSystem.from_dict(document['knots']),
        bases=bases,
        blocks=tuple(blocks),
        means=means,
        coefficients=coefficients,
        intercept=float(document['intercept']),
        penalty=PenaltyConfig(
            rho=tuple(penalty['rho']),
            lam=tuple(penalty['lam']),
            projection=ProjectionChoice.from_dict(penalty['projection']),
            order=int(penalty['order']),
        ),
        fitted=np.asarray(document['fitted'], dtype=float),
        objective_value=float(document['objective']),
        converged=bool(document['converged']),
        n_cycles=int(document['n_cycles']),
        tuning=tuple(TuningRecord(**r) for r in document['tuning']),
        excluded=tuple(document['excluded']),
        block_norms=norms,
    )


def dumps(model: FittedModel) -> str:
    return json.dumps(to_document(model), ensure_ascii=False, indent=2)


def loads(text: str) -> FittedModel:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidDataError(f"モデル文書を解析できません: {e}") from e
    return from_document(document)


def save_model(model: FittedModel, path: Union[str, Path]) -> Path:
    """モデル文書を書き出す"""
    path = Path(path)
    path.write_text(dumps(model) + '\n', encoding='utf-8')
    logger.info(f"モデル保存完了: {path}（能動ブロック {len(model.active_blocks)}）")
    return path


def load_model(path: Union[str, Path]) -> FittedModel:
    path = Path(path)
    if not path.exists():
        raise InvalidDataError(f"モデル文書が見つかりません: {path}")
    return loads(path.read_text(encoding='utf-8'))
