import logging
from dataclasses import replace
from os import environ

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from pnn_hedge.baseline import bs_hedge_pnl, bs_price, hedge_vol
from pnn_hedge.config.config import recalibration_train_config
from pnn_hedge.config.structures import (
    ArchConfig,
    BnsSpec,
    EvaluateFlags,
    FamilyConfig,
    FamilyRule,
    GbmSpec,
    HestonJumpSpec,
    HestonSpec,
    TimeGrid,
)
from pnn_hedge.evaluation import pnl_stats, variance_aggregate
from pnn_hedge.market import resolve_family, simulate
from pnn_hedge.neural.checkpoint import load_checkpoint
from pnn_hedge.pnn_hedge import Experiment, load_experiment
from pnn_hedge.training import (
    hedge_with_network,
    recalibrate,
    split_paths,
    train_single_task,
)

import pytest


log = logging.getLogger(__name__)

pytestmark = pytest.mark.skipif(
    not environ.get('PNN_HEDGE_ACCEPTANCE'),
    reason='долгие прогоны: задайте PNN_HEDGE_ACCEPTANCE=1',
)

MONTH = TimeGrid(30, 30 / 365)
EPOCHS = 200

martingale_models = (
    GbmSpec(0.0, 0.2),
    HestonSpec(2.0, 0.04, 0.3, -0.7),
    HestonJumpSpec(2.0, 0.04, 0.3, -0.7, 2.0, -0.05, 0.1),
    BnsSpec(0.04, 1.5, 1.0, 10.0, -2.0),
)

family_sizes = (8, 16, 32)

STATS = EvaluateFlags(stats=True)


def experiment_for(tmp_path, **changes):
    config = load_experiment(output_dir=str(tmp_path))
    config = replace(config, train=replace(config.train, epochs=EPOCHS), **changes)
    return Experiment(config, threads=4)


@pytest.fixture(scope='module')
def gbm_family(tmp_path_factory):
    experiment = experiment_for(tmp_path_factory.mktemp('gbm_family'))
    for response in (experiment.simulate(), experiment.train()):
        assert experiment.last_status.code == 0, response
    return experiment


@pytest.mark.parametrize('model', martingale_models)
def test_martingale_at_million_paths(model):
    paths = simulate(model, MONTH, 10**6, 1.0, 2021, threads=4)
    terminal = paths.spot[:, -1]
    stderr = terminal.std(ddof=1) / np.sqrt(terminal.size)
    assert abs(terminal.mean() - 1.0) < 3 * stderr


def test_gbm_family_pnl_statistics(gbm_family):
    gbm_family.evaluate(STATS)
    stats = pd.read_csv(gbm_family.output_dir / 'pnl_stats.csv').iloc[0]
    assert -0.0535 <= stats['mean'] <= -0.0495
    assert stats['std'] <= 0.030
    assert stats['std_max'] <= 0.020
    assert stats['q01'] >= -0.125

    config = gbm_family.config
    sigmas = [model.sigma for model in resolve_family(config.family, config.seed)]
    premium = np.mean(
        [
            float(bs_price(config.s0, config.claim.strike, sigma, config.grid.maturity))
            for sigma in sigmas
        ],
    )
    assert stats['mean'] == pytest.approx(-premium, abs=1e-3)


def test_gbm_family_loss_decreases(gbm_family):
    history = pd.read_csv(gbm_family.output_dir / 'training_log.csv')
    assert history['train_loss'].iloc[-1] < history['train_loss'].iloc[0]


@pytest.mark.parametrize('n_tasks', family_sizes)
def test_embedding_is_monotone_in_volatility(tmp_path, n_tasks):
    family = FamilyConfig(FamilyRule.GBM_UNIFORM, n_tasks)
    experiment = experiment_for(tmp_path, family=family, paths_per_task=2000)
    experiment.simulate()
    experiment.train()
    assert experiment.last_status.code == 0
    params, _ = load_checkpoint(experiment.output_dir / 'checkpoint.bin')
    config = experiment.config
    sigmas = [model.sigma for model in resolve_family(config.family, config.seed)]
    correlation, _ = spearmanr(sigmas, params.embedding[:, 0])
    assert abs(correlation) >= 0.95


def test_std_shrinks_with_simulations(tmp_path, gbm_family):
    small = experiment_for(tmp_path, paths_per_task=100)
    small.simulate()
    small.train()
    tables = []
    for experiment in (small, gbm_family):
        experiment.evaluate(STATS)
        tables.append(pd.read_csv(experiment.output_dir / 'pnl_per_task.csv'))
    few, many = tables
    assert many['std'].max() < few['std'].max()
    worst = many.loc[many['std'].idxmax()]
    assert worst['std'] == pytest.approx(worst['bs_std'], rel=0.25)


def test_recalibration_beats_single_task(gbm_family):
    config = gbm_family.config
    params, arch = load_checkpoint(gbm_family.output_dir / 'checkpoint.bin')
    train_config = recalibration_train_config(config)
    new_task = GbmSpec(0.0, 0.45)
    new_id = params.n_tasks
    gaps, large_budget = [], []
    for seed in range(5):
        paths = simulate(
            new_task,
            config.grid,
            11000,
            config.s0,
            45 + seed,
            task_id=new_id,
        )
        held_out = paths.select(slice(1000, None))
        bs_pnl = bs_hedge_pnl(held_out, config.claim, hedge_vol(held_out)).pnl
        bs_std = bs_pnl.std(ddof=1)
        for count in (100, 1000):
            subset = paths.select(slice(0, count))
            tuned, _ = recalibrate(params, subset, arch, train_config, config.claim)
            single, _ = train_single_task(subset, arch, train_config, config.claim)
            tuned_pnl = hedge_with_network(tuned, new_id, held_out, config.claim).pnl
            single_pnl = hedge_with_network(single, 0, held_out, config.claim).pnl
            tuned_std, single_std = tuned_pnl.std(ddof=1), single_pnl.std(ddof=1)
            if count == 100:
                gaps.append(single_std - tuned_std)
            elif seed == 0:
                large_budget.extend([tuned_std / bs_std, single_std / bs_std])
    assert np.median(gaps) > 0
    assert all(ratio == pytest.approx(1.0, abs=0.15) for ratio in large_budget)


def test_sv_family_beats_realized_vol_baseline(tmp_path):
    family = FamilyConfig(FamilyRule.SV_SAMPLE, 30)
    experiment = experiment_for(
        tmp_path,
        family=family,
        paths_per_task=20000,
        arch=ArchConfig(8, (128, 128, 128)),
    )
    experiment.simulate()
    experiment.train()
    assert experiment.last_status.code == 0
    params, _ = load_checkpoint(experiment.output_dir / 'checkpoint.bin')
    claim = experiment.config.claim
    network, baseline = [], []
    for paths in experiment._load_datasets():
        _, held_out = split_paths(paths, experiment.config.train_fraction)
        network.append(hedge_with_network(params, paths.task_id, held_out, claim))
        baseline.append(bs_hedge_pnl(held_out, claim, hedge_vol(held_out)))
    deep, bs = variance_aggregate(network), variance_aggregate(baseline)
    log.info(f'Глубокое хеджирование {deep}, BS {bs}, статистика {pnl_stats(network)}')
    assert deep.mean_variance < bs.mean_variance
    assert deep.max_variance < bs.max_variance


if __name__ == '__main__':
    pytest.main()
