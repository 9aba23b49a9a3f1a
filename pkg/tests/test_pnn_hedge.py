import json
import logging
from json import loads

import pandas as pd

import pnn_hedge.pnn_hedge as facade
from pnn_hedge.__main__ import main
from pnn_hedge.config.structures import EvaluateFlags
from pnn_hedge.exceptions import NumericalFailure
from pnn_hedge.neural.checkpoint import load_checkpoint
from pnn_hedge.neural.network import shared_checksum
from pnn_hedge.pnn_hedge import Experiment, load_experiment
from pnn_hedge.storage.lock import LOCK_NAME

import pytest


log = logging.getLogger(__name__)


EVALUATION_FILES = (
    'pnl_stats.csv',
    'pnl_per_task.csv',
    'variance_aggregate.csv',
    'histograms.csv',
    'delta_slices.csv',
    'embeddings.csv',
    'implied_vols.csv',
)

cli_flags = (
    ('flags', 'files'),
    (
        (['--stats'], ['pnl_stats.csv', 'pnl_per_task.csv']),
        (['--variance'], ['variance_aggregate.csv']),
        (['--histograms', '--embeddings'], ['histograms.csv', 'embeddings.csv']),
        (['--all'], list(EVALUATION_FILES)),
    ),
)


def tiny_mapping(output_dir):
    return {
        'version': 1,
        'name': 'tiny',
        'seed': 3,
        'output_dir': str(output_dir),
        's0': 1.0,
        'paths_per_task': 50,
        'train_fraction': 0.8,
        'grid': {'n_steps': 5, 'maturity': 5 / 365},
        'claim': {'kind': 'european_call', 'strike': 1.0, 'position': 'short'},
        'family': {
            'rule': 'gbm_uniform',
            'n_tasks': 2,
            'sigma_range': [0.2, 0.4],
            'mu': 0.0,
        },
        'arch': {'embed_dim': 1, 'hidden': [4]},
        'train': {
            'batch_size': 32,
            'epochs': 2,
            'lr_initial': 1e-3,
            'lr_final': 1e-4,
            'seed': 0,
        },
        'recalibration': {
            'model': {'kind': 'gbm', 'mu': 0.0, 'sigma': 0.3},
            'train_paths': [5, 10],
            'eval_paths': 20,
            'seed': 11,
        },
        'report': {
            'paths_per_task_sweep': [20],
            'histogram_bins': 10,
            'histogram_range': [-0.2, 0.05],
            'delta_tau': 2 / 365,
            'delta_spots': [0.9, 1.1, 5],
            'vol_shift': 0.05,
        },
    }


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(tiny_mapping(tmp_path / 'out')), encoding='utf-8')
    return path


@pytest.fixture
def experiment(config_file):
    return Experiment(load_experiment(str(config_file)))


def trained(experiment):
    assert loads(experiment.simulate())['status_code'] == 0
    assert loads(experiment.train())['status_code'] == 0
    return experiment


def test_simulate_writes_manifest(experiment):
    response = loads(experiment.simulate())
    assert response.get('status_code') == 0
    assert response.get('status_message') == 'OK'
    assert response['content']['tasks'] == 2
    manifest = pd.read_csv(experiment.output_dir / 'manifest.csv')
    assert list(manifest['task_id']) == [0, 1]
    assert list(manifest['n_paths']) == [50, 50]
    assert not (experiment.output_dir / LOCK_NAME).exists()


def test_train_writes_checkpoint_and_log(experiment):
    trained(experiment)
    _, arch = load_checkpoint(experiment.output_dir / 'checkpoint.bin')
    assert arch == experiment.arch
    history = pd.read_csv(experiment.output_dir / 'training_log.csv')
    assert list(history['epoch']) == [1, 2]
    assert history['learning_rate'].iloc[-1] == pytest.approx(1e-4)


def test_train_resume(experiment):
    trained(experiment)
    response = loads(experiment.train(resume=True))
    assert response['status_code'] == 0
    assert response['content']['epochs'] == 2


def test_train_without_datasets(experiment):
    response = loads(experiment.train())
    assert response.get('status_code') == 1
    assert response.get('status_message') == 'Bad Config'
    assert response.get('content') == []
    assert experiment.last_status.code == 1


def test_evaluate_everything(experiment):
    trained(experiment)
    response = loads(experiment.evaluate(EvaluateFlags.everything()))
    assert response['status_code'] == 0
    for name in EVALUATION_FILES:
        assert (experiment.output_dir / name).exists()
    variance = pd.read_csv(experiment.output_dir / 'variance_aggregate.csv')
    assert list(variance['strategy']) == ['deep_hedging', 'bs', 'bs', 'bs']
    assert list(variance['vol_shift']) == pytest.approx([0.0, -0.05, 0.0, 0.05])
    slices = pd.read_csv(experiment.output_dir / 'delta_slices.csv')
    assert len(slices) == 2 * 5
    embeddings = pd.read_csv(experiment.output_dir / 'embeddings.csv')
    assert list(embeddings['task_id']) == [0, 1]


def test_evaluate_without_flags_writes_nothing(experiment):
    trained(experiment)
    response = loads(experiment.evaluate(EvaluateFlags()))
    assert response['status_code'] == 0
    assert response['content'] == {'files': []}
    for name in EVALUATION_FILES:
        assert not (experiment.output_dir / name).exists()


def test_recalibrate_keeps_shared_weights(experiment):
    trained(experiment)
    params, _ = load_checkpoint(experiment.output_dir / 'checkpoint.bin')
    response = loads(experiment.recalibrate())
    assert response['status_code'] == 0
    assert response['content']['new_task_id'] == 2

    tuned, arch = load_checkpoint(
        experiment.output_dir / 'checkpoint_recalibrated.bin',
    )
    assert arch.n_tasks == 3
    assert shared_checksum(tuned) == shared_checksum(params)
    summary = pd.read_csv(experiment.output_dir / 'recalibration.csv')
    assert len(summary) == 2 * 3
    assert set(summary['strategy']) == {'pnn_embedding', 'single_task', 'bs'}
    deltas = pd.read_csv(experiment.output_dir / 'recalibration_deltas.csv')
    assert sorted(set(deltas['train_paths'])) == [5, 10]


def test_report_runs_every_step(experiment):
    response = loads(experiment.report())
    assert response['status_code'] == 0
    assert set(response['content']) == {
        'simulate',
        'train',
        'evaluate',
        'recalibrate',
        'sweep',
    }
    stats = pd.read_csv(experiment.output_dir / 'pnl_stats.csv')
    assert list(stats['simulations_per_task']) == [20, 50]


def test_pipeline_is_byte_identical(config_file, tmp_path):
    roots = []
    for name in ('first', 'second'):
        experiment = Experiment(
            load_experiment(str(config_file), output_dir=str(tmp_path / name)),
        )
        trained(experiment)
        experiment.evaluate(EvaluateFlags(stats=True, histograms=True))
        roots.append(experiment.output_dir)
    first, second = roots
    files = sorted(
        path.relative_to(first) for path in first.rglob('*') if path.is_file()
    )
    assert files == sorted(
        path.relative_to(second) for path in second.rglob('*') if path.is_file()
    )
    for name in files:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_locked_output(experiment):
    experiment.output_dir.mkdir(parents=True)
    (experiment.output_dir / LOCK_NAME).write_text('0')
    response = loads(experiment.simulate())
    assert response['status_code'] == 1
    assert not (experiment.output_dir / 'manifest.csv').exists()


def test_numerical_failure_status(experiment, monkeypatch):
    def diverge(*args, **kwargs):
        raise NumericalFailure()

    experiment.simulate()
    monkeypatch.setattr(facade, 'train', diverge)
    response = loads(experiment.train())
    assert response['status_code'] == 2
    assert response['status_message'] == 'Numerical Failure'
    assert experiment.last_status.code == 2


def test_simulate_exports_csv(experiment):
    response = loads(experiment.simulate(export_csv=True))
    assert response['status_code'] == 0
    assert len(response['content']['csv']) == 2
    frame = pd.read_csv(experiment.output_dir / 'datasets' / 'task_0001.csv')
    assert frame.shape == (50, 6)
    assert (frame['t_0'] == 1.0).all()


def test_evaluate_skips_baseline_with_non_positive_volatility(tmp_path):
    mapping = tiny_mapping(tmp_path / 'out')
    mapping['family']['sigma_range'] = [0.2, 0.25]
    mapping['report']['vol_shift'] = 0.3
    path = tmp_path / 'shifted.json'
    path.write_text(json.dumps(mapping), encoding='utf-8')
    experiment = trained(Experiment(load_experiment(str(path))))
    response = loads(experiment.evaluate(EvaluateFlags(baseline=True)))
    assert response['status_code'] == 0
    variance = pd.read_csv(experiment.output_dir / 'variance_aggregate.csv')
    assert list(variance['strategy']) == ['deep_hedging', 'bs', 'bs']
    assert list(variance['vol_shift']) == pytest.approx([0.0, 0.0, 0.3])


def test_unexpected_value_error_is_bad_config(experiment, monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError('broken input')

    monkeypatch.setattr(facade, 'resolve_family', broken)
    response = loads(experiment.simulate())
    assert response['status_code'] == 1
    assert response['description'] == 'broken input'
    assert not (experiment.output_dir / LOCK_NAME).exists()


def test_cli_simulate_and_train(config_file, capsys):
    assert main(['--config', str(config_file), 'simulate']) == 0
    assert main(['--config', str(config_file), 'train']) == 0
    response = loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert response['content']['epochs'] == 2


@pytest.mark.parametrize(*cli_flags)
def test_cli_evaluate_flags(config_file, tmp_path, flags, files):
    out = tmp_path / 'cli'
    base = ['--config', str(config_file), '--out', str(out)]
    assert main([*base, 'simulate']) == 0
    assert main([*base, 'train']) == 0
    assert main([*base, 'evaluate', *flags]) == 0
    written = {path.name for path in out.glob('*.csv')}
    assert written == {'manifest.csv', 'training_log.csv', *files}


def test_cli_simulate_export_csv(config_file, tmp_path):
    out = tmp_path / 'cli'
    base = ['--config', str(config_file), '--out', str(out)]
    assert main([*base, 'simulate', '--export-csv']) == 0
    exported = sorted(path.name for path in (out / 'datasets').glob('*.csv'))
    assert exported == ['task_0000.csv', 'task_0001.csv']


def test_cli_seed_override_changes_datasets(config_file, tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    base = ['--config', str(config_file)]
    main([*base, '--out', str(first), 'simulate'])
    main([*base, '--out', str(second), '--seed', '4', 'simulate'])
    first_seeds = pd.read_csv(first / 'manifest.csv', dtype=str)['seed']
    second_seeds = pd.read_csv(second / 'manifest.csv', dtype=str)['seed']
    assert list(first_seeds) != list(second_seeds)


def test_cli_bad_config_path(tmp_path, capsys):
    assert main(['--config', str(tmp_path / 'absent.json'), 'simulate']) == 1
    response = loads(capsys.readouterr().out)
    assert response['status_code'] == 1


def test_cli_bad_threads(config_file):
    assert main(['--config', str(config_file), '--threads', '0', 'simulate']) == 1


def test_cli_broken_config(tmp_path):
    mapping = tiny_mapping(tmp_path / 'out')
    mapping['grid']['n_steps'] = 0
    path = tmp_path / 'broken.json'
    path.write_text(json.dumps(mapping), encoding='utf-8')
    assert main(['--config', str(path), 'simulate']) == 1


if __name__ == '__main__':
    pytest.main()
