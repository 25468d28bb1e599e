import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from doma import outage
from doma.mac_core import DegenerateChannelError, Scheme
from doma.outage import (CSV_HEADER, OutageReport, OutageResolutionError, epsilon_outage_capacity,
                         fig3_preset, fig5_preset, reports_to_csv, reports_to_json, run_scenario,
                         sweep)


def test_degenerate_distribution():
    for eps in (0.01, 0.1, 0.5, 0.99):
        assert epsilon_outage_capacity(np.full(100, 2.0), eps) == 2.0


def test_hand_quantile():
    assert epsilon_outage_capacity(np.arange(1, 101), 0.1) == 11


def test_quantile_index_is_exact():
    # 0.29 * 100 evaluates to 28.999999999999996 in floating point.
    assert outage.quantile_index(0.29, 100) == 29
    assert epsilon_outage_capacity(np.arange(100.0), 0.29) == 29.0


def test_per_device_columns():
    samples = np.column_stack([np.arange(10.0), 10 * np.arange(10.0)])
    np.testing.assert_array_equal(epsilon_outage_capacity(samples, 0.2), [2.0, 20.0])


def test_needs_enough_samples():
    with pytest.raises(OutageResolutionError, match="at least 10"):
        epsilon_outage_capacity(np.ones(9), 0.1)
    with pytest.raises(ValueError):
        epsilon_outage_capacity(np.ones(9), 1.0)


@given(st.lists(st.floats(0, 1e6), min_size=20, max_size=200), st.floats(0.05, 0.95))
def test_quantile_bounds_and_definition(samples, eps):
    x = np.array(samples)
    cap = epsilon_outage_capacity(x, eps)
    assert x.min() <= cap <= x.max()
    exact_eps = Fraction(repr(eps))
    assert Fraction(int(np.sum(x < cap)), x.size) <= exact_eps
    # Any larger sample value would put more than eps of the mass strictly below it.
    larger = x[x > cap]
    if larger.size:
        assert Fraction(int(np.sum(x < larger.min())), x.size) > exact_eps


def test_exponential_oracle():
    cfg = fig3_preset(cluster_size=1, trials=100_000, seed=11)
    report = run_scenario(cfg, Scheme.MASSIVE_INBAND_NOMA)
    closed_form = math.log2(1 - 10 * math.log(0.9))
    assert abs(report.per_device_capacity[0] - closed_form) / closed_form < 0.02


def test_doma_delta_zero_matches_massive(base_config):
    a = run_scenario(base_config, Scheme.DOMA)
    b = run_scenario(base_config, Scheme.MASSIVE_INBAND_NOMA)
    np.testing.assert_allclose(a.per_device_capacity, b.per_device_capacity, rtol=1e-12)


def test_single_ap_matches_massive_at_one_ap(base_config):
    cfg = base_config.replace(ap_count=1)
    a = run_scenario(cfg, Scheme.SINGLE_AP_NOMA)
    b = run_scenario(cfg, Scheme.MASSIVE_INBAND_NOMA)
    np.testing.assert_allclose(a.per_device_capacity, b.per_device_capacity, rtol=1e-12)


def test_chunked_rates_match_direct_loop(base_config):
    """The batched engine agrees with one-trial-at-a-time public operations."""
    from doma.channel import ChannelModel, draw, trial_stream
    from doma.mac_core import doma_rate, ftpa_allocate, unified_order

    cfg = base_config.replace(overlap_fraction=0.3, trials=40)
    rates = outage.simulate_rates(cfg, Scheme.DOMA)
    for t in range(cfg.trials):
        gains = draw(ChannelModel(), cfg.cluster_size, cfg.ap_count, trial_stream(cfg.seed, t))
        order = unified_order(gains, cfg.noise_power)
        alloc = ftpa_allocate(order, gains, cfg.per_ap_cluster_power_budget, cfg.ftpa_decay)
        r = doma_rate(alloc, gains, order, 0.3, cfg.ici_power, cfg.noise_power, 1.0).per_device_rate
        np.testing.assert_allclose(rates[t], r[order.devices_by_rank()], rtol=1e-13)


def test_rank_columns_sorted_by_sic_rank(base_config):
    cfg = base_config.replace(ftpa_decay=0.0)
    rates = outage.simulate_rates(cfg, Scheme.MASSIVE_INBAND_NOMA)
    # Uniform power: the top rank has the largest metric and no residual interference.
    assert np.all(rates[:, -1] >= rates.max(axis=1))


def test_capacity_nondecreasing_in_k():
    reports = sweep(fig3_preset(trials=2000), "K", [1, 2, 4], Scheme.MASSIVE_INBAND_NOMA)
    caps = np.array([r.per_device_capacity for r in reports])
    assert np.all(np.diff(caps, axis=0) >= -1e-3)


def test_fig5_direction():
    cfg = fig5_preset(trials=2000)
    small = run_scenario(cfg, Scheme.DOMA).per_device_capacity
    big = run_scenario(cfg.replace(cluster_size=64), Scheme.DOMA).per_device_capacity[:8]
    assert all(s > b for s, b in zip(small, big))


def test_worker_count_does_not_change_results(base_config):
    cfg = base_config.replace(trials=3000, overlap_fraction=0.25)
    one = run_scenario(cfg, Scheme.DOMA, workers=1)
    many = run_scenario(cfg, Scheme.DOMA, workers=3)
    assert reports_to_csv([one]) == reports_to_csv([many])


def test_degenerate_channel_reports_trial(base_config, monkeypatch):
    real = outage.draw_trials

    def fake(model, m, k, seed, start, stop):
        g = real(model, m, k, seed, start, stop)
        if start <= 5 < stop:
            g[5 - start, 2, :] = 0.0
        return g

    monkeypatch.setattr(outage, "draw_trials", fake)
    with pytest.raises(DegenerateChannelError) as err:
        run_scenario(base_config, Scheme.DOMA)
    assert err.value.trial == 5


def test_sweep_singleton_equals_run(base_config):
    [swept] = sweep(base_config, "delta", [0.0], Scheme.DOMA)
    assert swept == run_scenario(base_config, Scheme.DOMA)


def test_sweep_delta_monotone(base_config):
    reports = sweep(base_config.replace(trials=1000), "delta", [0, 0.25, 0.5], Scheme.DOMA)
    caps = np.array([r.per_device_capacity for r in reports])
    assert np.all(np.diff(caps, axis=0) <= 0)
    assert [r.sweep_coordinates["delta"] for r in reports] == [0.0, 0.25, 0.5]


def test_adding_sweep_points_keeps_existing(base_config):
    a = sweep(base_config, "alpha", [0.0, 1.0], Scheme.MASSIVE_INBAND_NOMA)
    b = sweep(base_config, "alpha", [0.5, 0.0, 2.0, 1.0], Scheme.MASSIVE_INBAND_NOMA)
    assert a[0] == b[1] and a[1] == b[3]


def test_sweep_axes(base_config):
    [r] = sweep(base_config, "snr", [20], Scheme.DOMA)
    assert r.sweep_coordinates["snr_db"] == pytest.approx(20.0)
    [r] = sweep(base_config, "M", [4], Scheme.DOMA)
    assert len(r.per_device_capacity) == 4
    with pytest.raises(ValueError, match="invalid sweep axis"):
        sweep(base_config, "bandwidth", [1], Scheme.DOMA)
    with pytest.raises(ValueError):
        sweep(base_config, "K", [1.5], Scheme.DOMA)


def test_report_invariants():
    with pytest.raises(ValueError):
        OutageReport(Scheme.DOMA, (1.0,), 0.1, 5, 0)
    with pytest.raises(ValueError):
        OutageReport(Scheme.DOMA, (-1.0,), 0.1, 50, 0)
    r = OutageReport(Scheme.DOMA, (2.0, 1.0), 0.1, 50, 0,
                     {"K": 1, "M": 2, "delta": 0.0, "snr_db": 10.0, "alpha": 0.0})
    assert r.cluster_min == 1.0


def test_csv_and_json_documents(base_config):
    reports = sweep(base_config, "delta", [0.0, 0.5], Scheme.DOMA)
    rows = list(csv.reader(io.StringIO(reports_to_csv(reports))))
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 2 * base_config.cluster_size
    assert rows[1][:4] == ["1", "doma", "2", "8"]
    assert [int(r[7]) for r in rows[1:9]] == list(range(1, 9))
    doc = json.loads(reports_to_json(reports))
    assert doc["reports"][1]["spectrum"]["count"] == 15
    assert doc["reports"][0]["per_device_capacity"] == list(reports[0].per_device_capacity)
    assert doc["reports"][0]["cluster_min_capacity"] == min(reports[0].per_device_capacity)
