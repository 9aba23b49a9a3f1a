import math

import numpy as np

from pnn_hedge.baseline import bs_delta, bs_price
from pnn_hedge.config.structures import (
    BnsSpec,
    GbmSpec,
    HedgeResult,
    HestonSpec,
    NetworkArch,
)
from pnn_hedge.evaluation import (
    atm_implied_vols,
    bs_delta_slice,
    delta_slice,
    export_embeddings,
    histogram,
    implied_vol,
    per_task_table,
    pnl_stats,
    pnl_stats_row,
    sim_count_sweep,
    variance_aggregate,
)
from pnn_hedge.exceptions import (
    DomainError,
    EmptyData,
    IncompatibleData,
    InvalidConfig,
)
from pnn_hedge.neural.network import forward_batch, init_params

import pytest


implied_vol_cases = (
    ('sigma', 's', 'strike', 'tau'),
    (
        (0.1, 1.0, 1.0, 30 / 365),
        (0.45, 1.0, 1.0, 30 / 365),
        (0.8, 1.1, 1.0, 0.5),
        (1.5, 0.9, 1.0, 2.0),
    ),
)

out_of_bounds_prices = (
    ('price',),
    ((0.0,), (-0.1,), (1.0,), (1.5,)),
)


def result(pnl, task_id=0, premium=0.05) -> HedgeResult:
    pnl = np.asarray(pnl, dtype=np.float64)
    return HedgeResult(np.zeros((pnl.size, 1)), pnl, premium, task_id)


def test_pnl_stats_pool_tasks():
    first = result([1.0, 2.0, 3.0], 0)
    second = result([10.0, 10.0, 13.0], 1)
    stats = pnl_stats([first, second])
    pooled = np.array([1.0, 2.0, 3.0, 10.0, 10.0, 13.0])
    assert stats.mean == pytest.approx(pooled.mean())
    assert stats.std == pytest.approx(pooled.std(ddof=1))
    assert stats.std_min == pytest.approx(1.0)
    assert stats.std_max == pytest.approx(np.std([10.0, 10.0, 13.0], ddof=1))
    assert stats.quantile_1pct == pytest.approx(np.quantile(pooled, 0.01))
    assert stats.quantile_10pct == pytest.approx(np.quantile(pooled, 0.10))
    assert [task.task_id for task in stats.per_task] == [0, 1]
    assert stats.per_task[0].variance == pytest.approx(1.0)


def test_pooled_variance_decomposes_into_within_and_between():
    rng = np.random.default_rng(3)
    pnls = [
        rng.normal(0.0, 1.0, 40),
        rng.normal(0.5, 0.2, 25),
        rng.normal(-1.0, 2.0, 60),
    ]
    stats = pnl_stats([result(pnl, task_id) for task_id, pnl in enumerate(pnls)])
    total = sum(pnl.size for pnl in pnls)
    within = 0.0
    between = 0.0
    for pnl, task in zip(pnls, stats.per_task):
        within += (pnl.size - 1) * task.variance
        between += pnl.size * (task.mean - stats.mean) ** 2
    assert stats.std**2 * (total - 1) == pytest.approx(within + between, rel=1e-10)


def test_pnl_stats_rejects_duplicate_task_ids():
    with pytest.raises(IncompatibleData):
        pnl_stats([result([0.0, 1.0], 2), result([1.0, 3.0], 2)])


def test_pnl_stats_on_constant_pnl():
    stats = pnl_stats([result([0.5, 0.5, 0.5])])
    assert stats.std == 0.0
    assert stats.quantile_1pct == 0.5


@pytest.mark.parametrize('results', ([], [result([1.0])]))
def test_pnl_stats_needs_data(results):
    with pytest.raises(EmptyData):
        pnl_stats(results)


def test_variance_aggregate():
    results = [result([0.0, 2.0]), result([0.0, 4.0]), result([0.0, 6.0])]
    aggregate = variance_aggregate(results)
    assert aggregate.mean_variance == pytest.approx((2.0 + 8.0 + 18.0) / 3)
    assert aggregate.median_variance == pytest.approx(8.0)
    assert aggregate.max_variance == pytest.approx(18.0)


def test_histogram_clips_outliers():
    edges, counts = histogram(np.array([-5.0, -0.1, 0.0, 0.04, 3.0]), 5, (-0.2, 0.05))
    assert edges.size == 6
    assert edges[0] == pytest.approx(-0.2)
    assert edges[-1] == pytest.approx(0.05)
    assert counts.sum() == 5
    assert counts[0] >= 1
    assert counts[-1] >= 1


def test_histogram_errors():
    with pytest.raises(InvalidConfig):
        histogram(np.zeros(3), 0, (0.0, 1.0))
    with pytest.raises(DomainError):
        histogram(np.zeros(3), 3, (1.0, 0.0))


@pytest.mark.parametrize(*implied_vol_cases)
def test_implied_vol_inverts_bs_price(sigma, s, strike, tau):
    price = float(bs_price(s, strike, sigma, tau))
    assert implied_vol(price, s, strike, tau) == pytest.approx(sigma, abs=1e-6)


@pytest.mark.parametrize(*out_of_bounds_prices)
def test_implied_vol_out_of_bounds(price):
    with pytest.raises(DomainError):
        implied_vol(price, 1.0, 1.0, 0.1)


def test_atm_implied_vols_marks_bad_premium_as_nan():
    good = float(bs_price(1.0, 1.0, 0.3, 0.1))
    results = [result([0.0, 1.0], 0, good), result([0.0, 1.0], 1, 2.0)]
    rows = atm_implied_vols(results, 1.0, 1.0, 0.1)
    assert rows[0]['implied_vol'] == pytest.approx(0.3, abs=1e-6)
    assert math.isnan(rows[1]['implied_vol'])


def test_delta_slice_matches_network():
    params = init_params(NetworkArch(2, 1, hidden=(4,)), 0)
    spots = np.linspace(0.8, 1.2, 5)
    grid_spots, deltas = delta_slice(params, 1, 0.05, spots)
    features = np.column_stack([np.log(spots), np.full(5, 0.05)])
    expected, _ = forward_batch(params, np.ones(5, dtype=int), features)
    assert np.array_equal(grid_spots, spots)
    assert deltas == pytest.approx(expected)
    with pytest.raises(DomainError):
        delta_slice(params, 1, 0.0, spots)


def test_bs_delta_slice():
    spots = np.linspace(0.8, 1.2, 5)
    expected = bs_delta(spots, 1.0, 0.3, 0.1)
    assert bs_delta_slice(0.3, 0.1, spots) == pytest.approx(expected)


def test_export_embeddings_columns():
    params = init_params(NetworkArch(3, 2, hidden=(4,)), 0)
    models = [
        GbmSpec(0.0, 0.2),
        HestonSpec(1.0, 0.04, 0.3, -0.5),
        BnsSpec(0.04, 1.0, 2.0, 10.0, -1.0),
    ]
    rows = export_embeddings(params, models, [0.01, 0.02, 0.03])
    assert [row['kind'] for row in rows] == ['gbm', 'heston', 'bns']
    assert rows[0]['param_sigma'] == 0.2
    assert rows[1]['param_kappa'] == 1.0
    assert rows[2]['embedding_1'] == pytest.approx(params.embedding[2, 1])
    assert rows[2]['atm_price'] == 0.03


def test_export_embeddings_counts_must_match():
    params = init_params(NetworkArch(3, 1, hidden=(4,)), 0)
    with pytest.raises(EmptyData):
        export_embeddings(params, [GbmSpec(0.0, 0.2)], [0.01])


def test_per_task_table_adds_bs_std():
    results = [result([0.0, 1.0], 0), result([0.0, 2.0], 1)]
    bs_results = [result([0.0, 4.0], 0)]
    rows = per_task_table(results, bs_results)
    assert rows[0]['bs_std'] == pytest.approx(np.std([0.0, 4.0], ddof=1))
    assert math.isnan(rows[1]['bs_std'])
    assert rows[1]['premium'] == 0.05


def test_sim_count_sweep_rows():
    calls = []

    def run(count):
        calls.append(count)
        return [result(np.linspace(0.0, 1.0, count))]

    rows = sim_count_sweep(run, (10, 20))
    assert calls == [10, 20]
    assert [row['simulations_per_task'] for row in rows] == [10, 20]
    assert rows[0] == pnl_stats_row(10, pnl_stats(run(10)))


if __name__ == '__main__':
    pytest.main()
