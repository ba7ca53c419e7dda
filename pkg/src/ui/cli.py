"""
CLIインターフェース

コマンドラインから二重罰則付き ANOVA モデルのフィット・予測・部分依存・シミュレーションを実行

終了コード:
    0: 成功
    2: 入力・設定の検証エラー（InvalidDataError / UnsupportedCaseError / 使い方の誤り）
    1: 実行時エラー
"""
import functools
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Tuple

import click
import numpy as np
import pandas as pd
import yaml

# プロジェクトルートをパスに追加
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.basis import config as basis_config
from src.basis.knots import ProjectionChoice
from src.errors import InvalidDataError, UnsupportedCaseError
from src.model import config as model_config
from src.model.estimator import fit, predict, predict_proba
from src.model.models import ModelSpec
from src.model.partial_dependence import partial_dependence
from src.model.report import active_block_summary, tune_report
from src.model.serialization import load_model, save_model
from src.sim_bench import config as sim_config
from src.sim_bench.replications import default_methods, run_replications
from src.sim_bench.scenarios import Scenario

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_CONFIG = 'config.yaml'
VALIDATION_ERRORS = (InvalidDataError, UnsupportedCaseError)


# ==================================================
# 設定
# ==================================================

def _parse_floats(text: Optional[str], name: str) -> Optional[Tuple[float, ...]]:
    if text is None or text == '':
        return None
    try:
        return tuple(float(v) for v in str(text).split(','))
    except ValueError as e:
        raise InvalidDataError(f"--{name} はカンマ区切りの数値で指定してください: {text}") from e


def _parse_anchor(text: str):
    """'min' / 'max' / 'median' / 整数、またはカンマ区切りで共変量ごと"""
    def one(token: str):
        token = token.strip()
        if token in basis_config.FIXED_ANCHORS:
            return token
        try:
            return int(token)
        except ValueError as e:
            raise InvalidDataError(f"未知の固定点アンカー: {token}") from e

    parts = [one(t) for t in str(text).split(',')]
    return parts[0] if len(parts) == 1 else tuple(parts)


@dataclass(frozen=True)
class RunConfig:
    """1回の CLI 実行の設定（フラグと設定ファイルを統合したもの）"""
    command: str
    input: Optional[Path] = None
    output: Optional[Path] = None
    response: Optional[str] = None
    model: Optional[Path] = None
    validation_input: Optional[Path] = None
    loss: str = 'squared'
    order: int = basis_config.DEFAULT_ORDER
    max_interaction: int = 2
    knots: Optional[int] = None
    htv: str = 'averaging'
    anchor: str = basis_config.DEFAULT_FIXED_ANCHOR
    grid_size: int = model_config.GRID_SIZE
    rho_grid: Optional[str] = None
    lam_grid: Optional[str] = None
    tuning: str = model_config.DEFAULT_TUNING
    folds: int = model_config.DEFAULT_FOLDS
    validation_fraction: float = model_config.VALIDATION_FRACTION
    seed: int = 0
    threads: int = 1
    progress: bool = False

    def validate(self) -> 'RunConfig':
        """計算の前にフラグの整合性を確認する"""
        if self.htv not in ('averaging', 'fixed'):
            raise InvalidDataError(f"--htv は averaging / fixed です: {self.htv}")
        if self.htv == 'averaging' and self.anchor != basis_config.DEFAULT_FIXED_ANCHOR:
            logger.warning("--anchor は --htv fixed のときのみ使われます")
        if self.threads < 1:
            raise InvalidDataError(f"--threads は 1 以上です: {self.threads}")
        if self.knots is not None and self.knots <= self.order:
            raise InvalidDataError(f"--knots {self.knots} は次数 m={self.order} より大きくしてください")
        if self.validation_input is not None and self.tuning == 'kfold':
            raise InvalidDataError("--validation-input は --tuning validation と組み合わせてください")
        self.to_spec()
        return self

    def projection(self) -> ProjectionChoice:
        if self.htv == 'fixed':
            return ProjectionChoice.fixed(_parse_anchor(self.anchor))
        return ProjectionChoice.averaging()

    def to_spec(self) -> ModelSpec:
        return ModelSpec(
            order=self.order,
            max_interaction=self.max_interaction,
            n_knots=self.knots,
            projection=self.projection(),
            rho_grid=_parse_floats(self.rho_grid, 'rho-grid'),
            lam_grid=_parse_floats(self.lam_grid, 'lam-grid'),
            grid_size=self.grid_size,
            tuning=self.tuning,
            n_folds=self.folds,
            validation_fraction=self.validation_fraction,
            seed=self.seed,
        )


def load_config_file(path: Optional[str]) -> dict:
    """設定ファイル（YAML）を読み込む。未指定で既定ファイルも無ければ空"""
    if path is None:
        if not Path(DEFAULT_CONFIG).exists():
            return {}
        path = DEFAULT_CONFIG
    config_path = Path(path)
    if not config_path.exists():
        raise click.UsageError(f"設定ファイルが見つかりません: {config_path}")
    with open(config_path, 'r', encoding='utf-8') as f:
        cfg = yaml.safe_load(f) or {}
    if not isinstance(cfg, dict):
        raise click.UsageError(f"設定ファイルの形式が不正です: {config_path}")
    return cfg


# ==================================================
# 入出力
# ==================================================

def read_numeric_csv(path: Path) -> pd.DataFrame:
    """ヘッダ付き・カンマ区切り・数値列のみの CSV を読む"""
    try:
        df = pd.read_csv(path, encoding='utf-8')
    except pd.errors.EmptyDataError as e:
        raise InvalidDataError(f"CSV が空です: {path}") from e
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InvalidDataError(f"CSV を解析できません: {path}: {e}") from e
    non_numeric = [c for c in df.columns if not pd.api.types.is_numeric_dtype(df[c])]
    if non_numeric and len(df) > 0:
        raise InvalidDataError(f"数値でない列があります: {non_numeric}")
    return df


def _feature_frame(df: pd.DataFrame, names: Tuple[str, ...], path: Path) -> np.ndarray:
    missing = [c for c in names if c not in df.columns]
    if missing:
        raise InvalidDataError(f"{path} に列 {missing} がありません")
    return df[list(names)].to_numpy(dtype=float)


@contextmanager
def output_files() -> Iterator[Callable[[Path, Callable[[Path], None]], Path]]:
    """
    出力を一時ファイル経由で書き、途中で失敗したらこの実行で書いたファイルを全て消す
    """
    written: List[Path] = []

    def write(path: Path, writer: Callable[[Path], None]) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + '.tmp')
        try:
            writer(tmp)
            tmp.replace(path)
        finally:
            if tmp.exists():
                tmp.unlink()
        written.append(path)
        return path

    try:
        yield write
    except BaseException:
        for path in written:
            if path.exists():
                path.unlink()
        raise


def handle_errors(func):
    """例外を終了コードに対応付ける（stderr は 'error: クラス名: メッセージ'）"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except VALIDATION_ERRORS as e:
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(2)
        except Exception as e:
            logger.debug("実行時エラー", exc_info=True)
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(1)
    return wrapper


# ==================================================
# コマンド
# ==================================================

@click.group()
@click.option('--config', 'config_path', default=None, help=f'設定ファイルのパス（既定: {DEFAULT_CONFIG} があれば使用）')
@click.option('--verbose', '-v', is_flag=True, help='DEBUG ログを出力')
@click.option('--quiet', '-q', is_flag=True, help='WARNING 以上のみ出力')
@click.pass_context
def cli(ctx, config_path, verbose, quiet):
    """二重罰則付き関数 ANOVA モデリングツール"""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif quiet:
        logging.getLogger().setLevel(logging.WARNING)
    cfg = load_config_file(config_path)
    # 設定ファイルの各セクションはサブコマンドの既定値になる（明示したフラグが優先）
    ctx.default_map = {name: cfg.get(name) or {} for name in ('fit', 'predict', 'pdp', 'simulate')}


def _model_options(func):
    options = [
        click.option('--loss', type=click.Choice(model_config.LOSSES), default='squared', help='損失関数'),
        click.option('--order', '-m', type=int, default=basis_config.DEFAULT_ORDER, help='交差次数 m（1 / 2）'),
        click.option('--max-interaction', '-K', type=int, default=2, help='最大交互作用次数 K'),
        click.option('--knots', type=int, default=None, help='周辺ノット数（既定: 回帰 11 / 分類 6）'),
        click.option('--htv', type=click.Choice(['averaging', 'fixed']), default='averaging', help='射影作用素'),
        click.option('--anchor', default=basis_config.DEFAULT_FIXED_ANCHOR,
                     help='固定点（min / max / median / ノット添字、カンマ区切りで共変量ごと）'),
        click.option('--grid-size', type=int, default=model_config.GRID_SIZE, help='ρ, λ グリッドの点数'),
        click.option('--rho-grid', default=None, help='ρ のグリッド（カンマ区切り）'),
        click.option('--lam-grid', default=None, help='λ のグリッド（カンマ区切り）'),
        click.option('--tuning', type=click.Choice(model_config.TUNING_MODES), default=model_config.DEFAULT_TUNING,
                     help='調整方式'),
        click.option('--folds', type=int, default=model_config.DEFAULT_FOLDS, help='交差検証の分割数'),
        click.option('--validation-fraction', type=float, default=model_config.VALIDATION_FRACTION,
                     help='検証データを与えない場合の検証割合'),
        click.option('--seed', type=int, default=0, help='乱数シード'),
        click.option('--threads', type=int, default=1, help='並列数の上限'),
        click.option('--progress', is_flag=True, help='進捗バーを表示'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@cli.command('fit')
@click.option('--input', '-i', 'input_path', required=True, type=click.Path(dir_okay=False), help='学習データ CSV')
@click.option('--response', '-y', required=True, help='応答の列名')
@click.option('--output-dir', '-o', default='results', help='出力ディレクトリ')
@click.option('--validation-input', default=None, type=click.Path(dir_okay=False), help='検証データ CSV')
@_model_options
@handle_errors
def fit_command(input_path, response, output_dir, validation_input, **options):
    """
    CSV からモデルをフィットし、モデル文書・調整結果・能動ブロック一覧を書き出す

    例: python -m src.ui.cli fit -i train.csv -y Y -o results
    """
    run = RunConfig(
        command='fit',
        input=Path(input_path),
        output=Path(output_dir),
        response=response,
        validation_input=Path(validation_input) if validation_input else None,
        **options,
    ).validate()
    cmd_fit(run)


def cmd_fit(run: RunConfig) -> int:
    df = read_numeric_csv(run.input)
    if run.response not in df.columns:
        raise InvalidDataError(f"応答の列 '{run.response}' がありません（列: {list(df.columns)}）")
    names = tuple(c for c in df.columns if c != run.response)
    if not names:
        raise InvalidDataError("共変量の列がありません")
    X = df[list(names)].to_numpy(dtype=float)
    Y = df[run.response].to_numpy(dtype=float)

    X_val = Y_val = None
    if run.validation_input is not None:
        val = read_numeric_csv(run.validation_input)
        X_val = _feature_frame(val, names, run.validation_input)
        if run.response not in val.columns:
            raise InvalidDataError(f"{run.validation_input} に応答の列 '{run.response}' がありません")
        Y_val = val[run.response].to_numpy(dtype=float)

    click.echo(f"フィット中: {run.input}（n={len(Y)}, p={len(names)}, 損失 {run.loss}）")
    model = fit(
        X, Y, run.to_spec(), loss=run.loss, X_val=X_val, Y_val=Y_val,
        feature_names=names, max_workers=run.threads, progress=run.progress,
    )

    with output_files() as write:
        write(run.output / 'model.json', lambda p: save_model(model, p))
        write(run.output / 'tuning_report.csv', lambda p: tune_report(model).to_csv(p, index=False))
        write(run.output / 'active_blocks.csv', lambda p: active_block_summary(model).to_csv(p, index=False))

    rho, lam = model.selected
    click.echo(f"選択: ρ={rho:.4g}, λ={lam:.4g}, 能動ブロック {len(model.active_blocks)}/{len(model.blocks)}")
    click.echo(f"出力: {run.output}")
    return 0


@cli.command('predict')
@click.option('--model', '-M', 'model_path', required=True, type=click.Path(dir_okay=False), help='モデル文書')
@click.option('--input', '-i', 'input_path', required=True, type=click.Path(dir_okay=False), help='特徴量 CSV')
@click.option('--output', '-o', 'output_path', required=True, type=click.Path(dir_okay=False), help='予測 CSV')
@handle_errors
def predict_command(model_path, input_path, output_path):
    """
    モデル文書で予測する（入力の行順を保持）

    例: python -m src.ui.cli predict -M results/model.json -i test.csv -o pred.csv
    """
    cmd_predict(RunConfig(
        command='predict',
        model=Path(model_path),
        input=Path(input_path),
        output=Path(output_path),
    ))


def cmd_predict(run: RunConfig) -> int:
    model = load_model(run.model)
    df = read_numeric_csv(run.input)
    X = _feature_frame(df, model.feature_names, run.input).reshape(-1, model.n_features)
    result = pd.DataFrame({'prediction': predict(model, X)})
    if model.loss == 'logistic':
        result['probability'] = predict_proba(model, X)

    with output_files() as write:
        write(run.output, lambda p: result.to_csv(p, index=False, float_format='%.17g'))
    click.echo(f"予測: {len(result)} 行 → {run.output}")
    return 0


@cli.command('pdp')
@click.option('--model', '-M', 'model_path', required=True, type=click.Path(dir_okay=False), help='モデル文書')
@click.option('--input', '-i', 'input_path', required=True, type=click.Path(dir_okay=False), help='学習データ CSV')
@click.option('--subset', '-s', 'subsets', multiple=True, required=True,
              help='対象の共変量名（2 変数はカンマ区切り、複数指定可）')
@click.option('--output', '-o', 'output_path', required=True, type=click.Path(dir_okay=False), help='出力 CSV')
@handle_errors
def pdp_command(model_path, input_path, subsets, output_path):
    """
    部分依存関数をプロット用の縦持ち表で書き出す

    例: python -m src.ui.cli pdp -M results/model.json -i train.csv -s x1 -s x1,x2 -o pdp.csv
    """
    cmd_pdp(RunConfig(
        command='pdp',
        model=Path(model_path),
        input=Path(input_path),
        output=Path(output_path),
    ), subsets)


def cmd_pdp(run: RunConfig, subsets) -> int:
    model = load_model(run.model)
    requested = []
    for text in subsets:
        names = [t.strip() for t in text.split(',')]
        if len(names) > 2:
            raise UnsupportedCaseError(f"部分依存はサイズ 2 以下の部分集合のみ対応しています: {text}")
        unknown = [n for n in names if n not in model.feature_names]
        if unknown:
            raise InvalidDataError(f"モデルにない共変量: {unknown}")
        requested.append(tuple(model.feature_names.index(n) for n in names))

    df = read_numeric_csv(run.input)
    X = _feature_frame(df, model.feature_names, run.input)

    frames = []
    for subset in requested:
        table = partial_dependence(model, subset, X)
        names = [model.feature_names[j] for j in subset]
        frames.append(pd.DataFrame({
            'subset': model.block_label(subset),
            'z1': table[names[0]],
            'z2': table[names[1]] if len(names) > 1 else np.nan,
            'value': table['value'],
        }))
    result = pd.concat(frames, ignore_index=True)

    with output_files() as write:
        write(run.output, lambda p: result.to_csv(p, index=False, float_format='%.17g'))
    click.echo(f"部分依存: {len(requested)} 組 → {run.output}")
    return 0


@cli.command('simulate')
@click.option('--scenario', required=True, help=f'シナリオ名（{", ".join(sim_config.SCENARIOS)}）')
@click.option('--reps', type=int, default=sim_config.DEFAULT_REPLICATIONS, help='反復回数')
@click.option('--n', 'n', type=int, default=None, help='学習・検証それぞれのサンプルサイズ')
@click.option('--seed', type=int, default=sim_config.DEFAULT_BASE_SEED, help='反復 0 の乱数シード')
@click.option('--grid-size', type=int, default=model_config.GRID_SIZE, help='ρ, λ グリッドの点数')
@click.option('--knots', type=int, default=None, help='周辺ノット数（既定: 手法ごとの設定、ANOVA シナリオは 11）')
@click.option('--output-dir', '-o', default='results', help='出力ディレクトリ')
@click.option('--threads', type=int, default=1, help='並列プロセス数')
@click.option('--progress', is_flag=True, help='進捗バーを表示')
@handle_errors
def simulate_command(scenario, reps, n, seed, grid_size, knots, output_dir, threads, progress):
    """
    シミュレーションを反復実行し、反復ごとの結果と 'mean (SE)' 形式の集計表を書き出す

    例: python -m src.ui.cli simulate --scenario linear-anova --reps 20 --threads 4
    """
    if scenario not in sim_config.SCENARIOS:
        raise UnsupportedCaseError(f"未知のシナリオ: {scenario}（対応: {sim_config.SCENARIOS}）")
    run = RunConfig(command='simulate', output=Path(output_dir), grid_size=grid_size,
                    knots=knots, seed=seed, threads=threads, progress=progress)
    cmd_simulate(run, Scenario(name=scenario, n=n, seed=seed, replications=reps))


def cmd_simulate(run: RunConfig, scenario: Scenario) -> int:
    overrides = {'grid_size': run.grid_size}
    if run.knots is not None:
        overrides['n_knots'] = run.knots
    methods = [(label, replace(spec, **overrides)) for label, spec in default_methods(scenario)]
    per_rep, summary = run_replications(scenario, methods, max_workers=run.threads, progress=run.progress)

    stem = scenario.name.replace('-', '_')
    with output_files() as write:
        write(run.output / f'{stem}_replications.csv', lambda p: per_rep.to_csv(p, index=False))
        write(run.output / f'{stem}_summary.csv', lambda p: summary.to_csv(p, index=False))

    metric = 'excess_error' if scenario.loss == 'logistic' else 'mise'
    click.echo("\n" + "=" * 60)
    click.echo(f"シナリオ: {scenario.name}（n={scenario.size}, 反復 {len(per_rep['replication'].unique())}）")
    click.echo("=" * 60)
    for _, row in summary.iterrows():
        click.echo(f"{row['method']:<24} {metric}: {row[metric]}")
    return 0


if __name__ == '__main__':
    cli()
