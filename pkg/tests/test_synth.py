import json

import jsonschema
import numpy as np
import pytest
from scipy import stats as sps

from nh3trend.calibration import fit_month
from nh3trend.errors import AllMissing, IndexOutOfRange, InvalidSpec
from nh3trend.report import load_schema
from nh3trend.series import Provenance
from nh3trend.synth import SpikeSpec, SynthSpec, generate_network, impute_gaps_stub, inject_spike, sampler_mean_for
from nh3trend.trend import fit_trend

from conftest import make_series

QUIET = dict(observation_sd=0.0, sampler_sd=0.0, seasonal_amplitude=0.0)


def test_deterministic():
    spec = SynthSpec(n_area_stations=20, n_months=48, missing_rate=0.1, seed=42)
    a, b = generate_network(spec), generate_network(spec)
    assert a.raw == b.raw and a.months == b.months and a.reference == b.reference
    assert a.truth.to_json_dict() == b.truth.to_json_dict()


def test_seed_changes_output():
    a = generate_network(SynthSpec(n_area_stations=3, n_months=24, seed=1))
    b = generate_network(SynthSpec(n_area_stations=3, n_months=24, seed=2))
    assert a.raw != b.raw


def test_station_draws_do_not_depend_on_network_size():
    small = generate_network(SynthSpec(n_area_stations=5, n_months=36, seed=9))
    large = generate_network(SynthSpec(n_area_stations=50, n_months=36, seed=9))
    assert small.raw == large.raw[:5]


def test_zero_noise_identity():
    spec = SynthSpec(n_area_stations=10, n_months=24, trend_sd=0.0, calib_a=1.0, calib_b=0.0, seed=3, **QUIET)
    net = generate_network(spec)
    for s in net.raw:
        assert list(s.values) == pytest.approx(list(net.true_values[s.station_id]), abs=1e-12)
        assert len(set(s.values)) == 1
    for m in net.months:
        for e in m.entries:
            assert e.triplet_mean == pytest.approx(e.reference, abs=1e-12)


def test_sampler_mean_inverts_model():
    r = np.linspace(0.5, 60, 50)
    a, b = np.full(50, 1.08), np.full(50, -0.003)
    x = sampler_mean_for(r, a, b)
    np.testing.assert_allclose(r / x, a + b * x, rtol=1e-13)
    np.testing.assert_allclose(sampler_mean_for(r, np.ones(50), np.zeros(50)), r, rtol=1e-15)


def test_calibration_round_trip():
    net = generate_network(SynthSpec(n_area_stations=1, n_months=155, seed=4, **QUIET))
    for k, month in enumerate(net.months):
        fit = fit_month(month)
        assert fit.a_hat == pytest.approx(net.truth.a[k], abs=1e-9)
        assert fit.b_hat == pytest.approx(net.truth.b[k], abs=1e-9)


def test_gap_rate():
    net = generate_network(SynthSpec(n_area_stations=100, n_months=120, missing_rate=0.1, seed=5))
    gaps = sum(len(s) - s.n_present for s in net.raw)
    assert gaps / 12_000 == pytest.approx(0.1, abs=0.01)
    truth_gaps = sum(sum(net.truth.gap_mask[s.station_id]) for s in net.raw)
    assert truth_gaps == gaps


def test_non_negative():
    net = generate_network(SynthSpec(n_area_stations=40, n_months=60, baseline=1.0, seed=6))
    assert all(v >= 0 for s in net.raw for v in s.values if v is not None)
    assert all(v >= 0 for m in net.months for e in m.entries for v in e.samplers if v is not None)


class TestSpikes:
    def test_inject(self):
        s = inject_spike(make_series([10.0] * 24), 20, 82.8)
        assert s.values[19] == 82.8
        assert s.values.count(10.0) == 23

    def test_inject_then_restore(self):
        base = make_series(np.random.default_rng(0).normal(8, 1, 48))
        back = inject_spike(inject_spike(base, 30, 82.8), 30, base.values[29])
        assert back == base

    def test_first_month_spike_gives_negative_slope(self):
        assert fit_trend(inject_spike(make_series([10.0] * 36), 1, 82.8)).theta1 < 0

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            inject_spike(make_series([1.0] * 5), 6, 82.8)
        with pytest.raises(IndexError):
            inject_spike(make_series([1.0] * 5), 0, 82.8)

    def test_spec_spike(self):
        net = generate_network(SynthSpec(n_area_stations=3, n_months=24, spikes=(SpikeSpec("MAN002", 7, 82.8),)))
        assert net.raw[1].values[6] == 82.8

    def test_late_spike_sensitivity(self):
        # Two late 82.8 spikes on a flat noisy series.
        noise = np.random.default_rng(0).normal(0.0, 1.0, 138)
        s = make_series(8.0 + noise)
        s = inject_spike(inject_spike(s, 134, 82.8), 138, 82.8)
        full, early = fit_trend(s), fit_trend(s.head(133))
        ref_full = sps.linregress(np.arange(1, 139), np.array(s.values))
        ref_early = sps.linregress(np.arange(1, 134), np.array(s.values[:133]))
        assert abs(full.p_naive - ref_full.pvalue) <= 1e-8
        assert abs(early.p_naive - ref_early.pvalue) <= 1e-8
        assert full.p_naive < 0.05 <= early.p_naive


class TestImputeStub:
    def test_fills_gaps(self):
        vals = [1.0, None, 3.0, None] * 6
        filled = impute_gaps_stub(make_series(vals))
        assert filled.n_present == 24
        assert filled.provenance is Provenance.CALIBRATED_IMPUTED
        assert fit_trend(filled).n_used > fit_trend(make_series(vals)).n_used

    def test_uses_calendar_month_mean(self):
        vals = [float(m) for m in range(1, 13)] + [float(m) + 2 for m in range(1, 13)]
        vals[15] = None
        filled = impute_gaps_stub(make_series(vals))
        assert filled.values[15] == 4.0

    def test_overall_mean_fallback(self):
        filled = impute_gaps_stub(make_series([2.0, None, 4.0]))
        assert filled.values[1] == 3.0

    def test_all_missing(self):
        with pytest.raises(AllMissing):
            impute_gaps_stub(make_series([None, None]))


@pytest.mark.parametrize("kwargs", [
    dict(n_area_stations=0),
    dict(missing_rate=1.0),
    dict(sampler_sd=-1.0),
    dict(area_trends=(0.1,), n_area_stations=2),
    dict(calib_a=(1.0, 1.0), n_months=3),
    dict(seed=-1),
    dict(spikes=(SpikeSpec("MAN001", 99, 1.0),), n_months=12),
])
def test_invalid_spec(kwargs):
    with pytest.raises(InvalidSpec):
        generate_network(SynthSpec(**kwargs))


def test_unknown_spike_station():
    with pytest.raises(InvalidSpec):
        generate_network(SynthSpec(n_area_stations=2, n_months=12, spikes=(SpikeSpec("MAN999", 1, 1.0),)))


def test_ground_truth_schema():
    net = generate_network(SynthSpec(n_area_stations=4, n_months=24, missing_rate=0.2,
                                     spikes=(SpikeSpec("MAN001", 3, 50.0),)))
    doc = json.loads(json.dumps(net.truth.to_json_dict()))
    jsonschema.validate(doc, load_schema("ground_truth"))
    assert doc["rng"]["version"] == 1
    assert len(doc["calibration"]["a"]) == 24


def test_planted_trend_power():
    """Detection rate for a planted trend agrees with an independent simulation."""
    n_stations, n_months, trend = 1000, 156, 0.01
    spec = SynthSpec(n_reference_stations=1, n_area_stations=n_stations, n_months=n_months,
                     area_trends=(trend,) * n_stations, baseline_spread=0.0,
                     calib_a=1.0, calib_b=0.0, seed=123)
    net = generate_network(spec)
    hit = np.mean([fit_trend(s).p_naive < 0.05 for s in net.raw])

    # Oracle: same signal, Gaussian noise of the combined observation and triplet-mean sd.
    rng = np.random.default_rng(2024)
    t = np.arange(1, n_months + 1)
    sd = np.sqrt(spec.observation_sd**2 + spec.sampler_sd**2 / 3)
    signal = spec.baseline + trend * t + spec.seasonal_amplitude * np.sin(2 * np.pi * t / 12)
    power = np.mean([sps.linregress(t, signal + rng.normal(0, sd, n_months)).pvalue < 0.05
                     for _ in range(1000)])
    assert 0.2 < power < 0.8
    assert abs(hit - power) <= 0.05
