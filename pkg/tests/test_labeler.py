"""Statistical labeling: windows, CIs, labels, expected value, policy."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtf.errors import ConfigError, SensorSetMismatch, WeightMismatch, WindowTooSmall
from dtf.ingest import SensorReading
from dtf.labeler import (
    MachineLabeler,
    ManagementPolicy,
    SensorLabel,
    SensorSpec,
    classify_condition,
    compute_ci,
    expected_value,
    label_rows,
    label_sensor,
    label_stream,
    load_sensor_specs,
    validate_weights,
    window_stats,
)

from conftest import FAULTY, HEALTHY, SPEC_TABLE


def _ci_oracle(values, z):
    """Direct formula, independent of the implementation under test."""
    a = np.asarray(values, dtype=float)
    half = z * a.std(ddof=1) / math.sqrt(len(a))
    return float(a.mean() - half), float(a.mean() + half)


def _labels(bits, specs):
    return [SensorLabel(s.sensor_id, b, 0.0, 0.0) for b, s in zip(bits, specs)]


# -- compute_ci -----------------------------------------------------------------

def test_ci_five_point_window():
    lo, hi = compute_ci([1, 2, 3, 4, 5], z=1.96)
    assert lo == pytest.approx(1.6140, abs=1e-3)
    assert hi == pytest.approx(4.3860, abs=1e-3)


def test_ci_constant_window_collapses():
    assert compute_ci([5, 5, 5, 5], z=3.0) == (5.0, 5.0)


def test_ci_matches_direct_formula_on_random_windows():
    rng = np.random.default_rng(42)
    for _ in range(500):
        n = int(rng.integers(2, 60))
        values = rng.normal(loc=rng.uniform(-50, 50), scale=rng.uniform(0.1, 20), size=n)
        lo, hi = compute_ci(values.tolist(), z=1.96)
        olo, ohi = _ci_oracle(values, 1.96)
        assert lo == pytest.approx(olo, abs=1e-9)
        assert hi == pytest.approx(ohi, abs=1e-9)


def test_ci_rejects_short_window():
    with pytest.raises(WindowTooSmall):
        compute_ci([1.0], z=1.96)


def test_ci_rejects_nonpositive_z():
    with pytest.raises(ValueError):
        compute_ci([1.0, 2.0], z=0.0)


def test_window_stats_uses_sample_std():
    stats = window_stats([2.0, 4.0, 6.0], z=1.96)
    assert stats.n == 3
    assert stats.mean == pytest.approx(4.0)
    assert stats.std == pytest.approx(2.0)  # n−1 denominator, not population


def test_ci_half_width_shrinks_like_sqrt_n():
    # Doubling the window length of an i.i.d. resample should shrink the
    # expected half-width by roughly √2.
    rng = np.random.default_rng(3)
    pool = rng.normal(10.0, 2.0, size=5000)

    def mean_half_width(n, trials=1000):
        total = 0.0
        for _ in range(trials):
            sample = rng.choice(pool, size=n, replace=True)
            lo, hi = compute_ci(sample.tolist(), z=1.96)
            total += (hi - lo) / 2
        return total / trials

    ratio = mean_half_width(20) / mean_half_width(40)
    assert ratio == pytest.approx(math.sqrt(2), rel=0.05)


# -- label_sensor ---------------------------------------------------------------

@pytest.mark.parametrize(
    "ci,expected",
    [
        ((1.0, 2.0), 0),
        ((2.4, 2.7), 1),
        ((0.0, 2.5), 0),  # boundary contact is still containment
        ((-0.1, 2.0), 1),
    ],
)
def test_label_sensor_containment(ci, expected):
    spec = SensorSpec("S1", 0.0, 2.5, 1.0)
    assert label_sensor(ci, spec) == expected


# -- expected_value -------------------------------------------------------------

def test_expected_value_weighted_sum(specs7):
    labels = _labels((0, 0, 0, 1, 0, 0, 1), specs7)
    assert expected_value(labels, specs7) == pytest.approx(0.22, abs=1e-9)


def test_expected_value_extremes(specs7):
    assert expected_value(_labels([0] * 7, specs7), specs7) == 0.0
    assert expected_value(_labels([1] * 7, specs7), specs7) == pytest.approx(1.0, abs=1e-9)


def test_expected_value_rejects_duplicate_labels(specs7):
    labels = _labels([0] * 7, specs7)
    labels[1] = SensorLabel("S1", 1, 0.0, 0.0)
    with pytest.raises(SensorSetMismatch):
        expected_value(labels, specs7)


def test_expected_value_rejects_partial_cover(specs7):
    with pytest.raises(SensorSetMismatch):
        expected_value(_labels([0] * 6, specs7[:6]), specs7)


def test_expected_value_rejects_unbalanced_weights(specs7):
    bad = specs7[:-1] + [SensorSpec("S7", 0.0, 360.0, 0.19)]  # sums to 0.99
    with pytest.raises(WeightMismatch):
        expected_value(_labels([0] * 7, bad), bad)


@given(
    weights=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=10),
    data=st.data(),
)
@settings(max_examples=60, deadline=None)
def test_expected_value_monotone_in_labels(weights, data):
    total = sum(weights)
    specs = [SensorSpec(f"S{i}", 0.0, 1.0, w / total) for i, w in enumerate(weights)]
    bits = data.draw(st.lists(st.integers(0, 1), min_size=len(specs), max_size=len(specs)))
    base = expected_value(_labels(bits, specs), specs)
    for i, b in enumerate(bits):
        if b == 1:
            continue
        flipped = list(bits)
        flipped[i] = 1
        assert expected_value(_labels(flipped, specs), specs) >= base


# -- spec loading ---------------------------------------------------------------

def test_validate_weights_accepts_exact_sum(specs7):
    validate_weights(specs7)  # should not raise


def test_load_rejects_weight_sum_99_percent(tmp_path):
    entries = [
        {"sensor_id": s, "low": lo, "high": hi, "weight": w}
        for s, lo, hi, w in SPEC_TABLE
    ]
    entries[-1]["weight"] = 0.19  # Σ becomes 0.99
    path = tmp_path / "specs.json"
    path.write_text(json.dumps({"*": entries}))
    with pytest.raises(WeightMismatch):
        load_sensor_specs(path)


def test_load_rejects_negative_weight(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps([{"sensor_id": "A", "low": 0, "high": 1, "weight": -0.2},
                                {"sensor_id": "B", "low": 0, "high": 1, "weight": 1.2}]))
    with pytest.raises(WeightMismatch):
        load_sensor_specs(path)


def test_spec_rejects_inverted_range():
    with pytest.raises(ConfigError):
        SensorSpec("A", 5.0, 1.0, 1.0)


def test_load_bare_list_becomes_default_set(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps([
        {"sensor_id": "A", "low": 0, "high": 1, "weight": 0.5},
        {"sensor_id": "B", "low": 0, "high": 1, "weight": 0.5},
    ]))
    specs = load_sensor_specs(path)
    assert set(specs) == {"*"}
    assert [s.sensor_id for s in specs["*"]] == ["A", "B"]


def test_packaged_specs_load_and_balance():
    from dtf.config import packaged_data

    specs = load_sensor_specs(packaged_data("sensor_specs.json"))
    default = specs["*"]
    assert [s.sensor_id for s in default] == [f"S{i}" for i in range(1, 8)]
    assert math.fsum(s.weight for s in default) == pytest.approx(1.0, abs=1e-9)


# -- policy ---------------------------------------------------------------------

def test_policy_presets():
    assert ManagementPolicy.preset("conservative").threshold == 0.2
    assert ManagementPolicy.preset("moderate").threshold == 0.6
    assert ManagementPolicy.preset("aggressive").threshold == 0.8


def test_policy_threshold_override():
    assert ManagementPolicy.preset("moderate", 0.45).threshold == 0.45


def test_policy_rejects_unknown_style():
    with pytest.raises(ConfigError):
        ManagementPolicy.preset("reckless")


def test_policy_rejects_out_of_range_threshold():
    with pytest.raises(ConfigError):
        ManagementPolicy("moderate", 1.5)


def test_classify_conservative_flags_what_moderate_tolerates():
    e = 0.22
    assert classify_condition(e, ManagementPolicy.preset("conservative")) == 1
    assert classify_condition(e, ManagementPolicy.preset("moderate")) == 0


def test_classify_threshold_is_inclusive():
    assert classify_condition(0.6, ManagementPolicy.preset("moderate")) == 1


def test_classify_zero_never_intervenes():
    for style in ("conservative", "moderate", "aggressive"):
        assert classify_condition(0.0, ManagementPolicy.preset(style)) == 0


def test_classify_rejects_out_of_range_e():
    with pytest.raises(ValueError):
        classify_condition(1.5, ManagementPolicy.preset("moderate"))


@given(e=st.floats(0.0, 1.0), lo=st.floats(0.0, 1.0), hi=st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_classify_monotone_in_threshold(e, lo, hi):
    t1, t2 = sorted((lo, hi))
    d1 = classify_condition(e, ManagementPolicy("moderate", t1))
    d2 = classify_condition(e, ManagementPolicy("moderate", t2))
    assert d1 >= d2


# -- MachineLabeler -------------------------------------------------------------

def _push_round(labeler, values, ts):
    """Push one reading per sensor; return the estimate of the last push."""
    est = None
    for sensor, value in values.items():
        est = labeler.push(SensorReading("M1", sensor, ts, value))
    return est


def test_labeler_warm_up_needs_two_per_window(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=5)
    assert _push_round(labeler, HEALTHY, ts=1) is None  # every window has n = 1
    est = _push_round(labeler, HEALTHY, ts=2)
    assert est is not None
    assert est.expected_value == 0.0
    assert est.intervene == 0


def test_labeler_waits_for_every_sensor(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=5)
    _push_round(labeler, HEALTHY, ts=1)
    _push_round(labeler, HEALTHY, ts=2)
    # After an estimate, six fresh sensors are not enough.
    sensors = list(HEALTHY)
    for sensor in sensors[:-1]:
        assert labeler.push(SensorReading("M1", sensor, 3, HEALTHY[sensor])) is None
    est = labeler.push(SensorReading("M1", sensors[-1], 3, HEALTHY[sensors[-1]]))
    assert est is not None


def test_labeler_timestamp_is_max_seen(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=5)
    _push_round(labeler, HEALTHY, ts=10)
    sensors = list(HEALTHY)
    for i, sensor in enumerate(sensors):
        # Deliberately out of order; the estimate carries the newest stamp.
        est = labeler.push(SensorReading("M1", sensor, 20 - i, HEALTHY[sensor]))
    assert est.timestamp == 20


def test_labeler_labels_follow_spec_order(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=5)
    values = dict(HEALTHY)
    _push_round(labeler, values, ts=1)
    values.update(FAULTY)
    _push_round(labeler, values, ts=2)
    est = _push_round(labeler, values, ts=3)
    assert [l.sensor_id for l in est.labels] == [s.sensor_id for s in specs7]
    flagged = {l.sensor_id for l in est.labels if l.label == 1}
    assert flagged == set(FAULTY)
    assert est.expected_value == pytest.approx(0.75, abs=1e-9)


def test_labeler_ignores_unconfigured_sensor(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=5)
    _push_round(labeler, HEALTHY, ts=1)
    assert labeler.push(SensorReading("M1", "S99", 2, 1.0)) is None
    # The stray sensor must not count toward tuple completion.
    est = _push_round(labeler, HEALTHY, ts=2)
    assert est is not None


def test_labeler_window_slides(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=3)
    # Fill S5's window with in-range values, then push it out of range; once
    # three hot readings arrived, the in-range history has been evicted.
    values = dict(HEALTHY)
    for ts in range(1, 4):
        _push_round(labeler, values, ts=ts)
    values["S5"] = 90.0
    for ts in range(4, 7):
        est = _push_round(labeler, values, ts=ts)
    s5 = next(l for l in est.labels if l.sensor_id == "S5")
    assert s5.label == 1
    assert s5.ci_low == s5.ci_high == 90.0  # constant window of evicted history


def test_labeler_set_policy_mid_stream(specs7):
    labeler = MachineLabeler("M1", specs7, window_size=3)
    values = dict(HEALTHY)
    values.update(FAULTY)  # E = 0.75 once windows settle
    for ts in range(1, 5):
        est = _push_round(labeler, values, ts=ts)
    assert est.intervene == 1  # moderate default, 0.75 ≥ 0.6
    labeler.set_policy(ManagementPolicy("aggressive", 0.8))
    est = _push_round(labeler, values, ts=5)
    assert est.intervene == 0  # 0.75 < 0.8


def test_labeler_rejects_tiny_window(specs7):
    with pytest.raises(WindowTooSmall):
        MachineLabeler("M1", specs7, window_size=1)


def test_labeler_rejects_unbalanced_specs():
    bad = [SensorSpec("A", 0, 1, 0.5), SensorSpec("B", 0, 1, 0.4)]
    with pytest.raises(WeightMismatch):
        MachineLabeler("M1", bad, window_size=5)


# -- label_stream ---------------------------------------------------------------

def _batch_oracle(readings, specs, window_size, z, policy):
    """Re-derive every estimate from raw windows with numpy primitives."""
    from collections import deque

    windows = {s.sensor_id: deque(maxlen=window_size) for s in specs}
    fresh, latest = set(), 0
    out = []
    for r in readings:
        if r.sensor_id not in windows:
            continue
        windows[r.sensor_id].append(r.value)
        fresh.add(r.sensor_id)
        latest = max(latest, r.timestamp)
        if len(fresh) < len(windows) or any(len(w) < 2 for w in windows.values()):
            continue
        fresh.clear()
        bits, e = [], 0.0
        for s in specs:
            lo, hi = _ci_oracle(list(windows[s.sensor_id]), z)
            bit = 0 if s.low <= lo and hi <= s.high else 1
            bits.append(bit)
            e += bit * s.weight
        out.append((latest, bits, e, 1 if e >= policy.threshold else 0))
    return out


def test_stream_matches_batch_oracle_on_random_data(specs7):
    rng = np.random.default_rng(99)
    policy = ManagementPolicy.preset("conservative")
    readings = []
    ts = 0
    for _ in range(400):
        spec = specs7[int(rng.integers(len(specs7)))]
        ts += 1
        # Mix of in-range and out-of-range values keeps both labels alive.
        span = spec.high - spec.low
        value = float(spec.low + rng.uniform(-0.4, 1.4) * span)
        readings.append(SensorReading("M1", spec.sensor_id, ts, value))

    got = list(label_stream(readings, specs7, window_size=8, z=1.96, policy=policy))
    want = _batch_oracle(readings, specs7, window_size=8, z=1.96, policy=policy)
    assert len(got) == len(want)
    for est, (ts_w, bits, e, intervene) in zip(got, want):
        assert est.timestamp == ts_w
        assert [l.label for l in est.labels] == bits
        assert est.expected_value == pytest.approx(e, abs=1e-9)
        assert est.intervene == intervene


def test_stream_keeps_machines_independent(specs7):
    readings = []
    hot = dict(HEALTHY)
    hot.update(FAULTY)
    for ts in range(1, 6):
        for sensor in HEALTHY:
            readings.append(SensorReading("A", sensor, ts, HEALTHY[sensor]))
            readings.append(SensorReading("B", sensor, ts, hot[sensor]))
    estimates = list(label_stream(readings, {"*": specs7}, window_size=3))
    by_machine = {}
    for est in estimates:
        by_machine.setdefault(est.machine_id, []).append(est)
    assert set(by_machine) == {"A", "B"}
    assert all(e.expected_value == 0.0 for e in by_machine["A"])
    assert by_machine["B"][-1].expected_value == pytest.approx(0.75, abs=1e-9)


def test_stream_skips_machines_without_specs(specs7):
    readings = [
        SensorReading("GHOST", s, ts, HEALTHY[s])
        for ts in (1, 2, 3)
        for s in HEALTHY
    ]
    assert list(label_stream(readings, {"M1": specs7}, window_size=3)) == []


def test_label_rows_aligns_output_to_input_rows(specs7):
    batches = []
    for ts in range(1, 5):
        batches.append([SensorReading("M1", s, ts, HEALTHY[s]) for s in HEALTHY])
    rows = label_rows(batches, specs7, window_size=4)
    assert len(rows) == 4
    assert rows[0] == []  # warm-up row
    assert all(len(r) == 1 for r in rows[1:])
    flat = [est for r in rows for est in r]
    streamed = list(label_stream(
        [r for batch in batches for r in batch], specs7, window_size=4))
    assert [e.timestamp for e in flat] == [e.timestamp for e in streamed]
    assert [e.expected_value for e in flat] == [e.expected_value for e in streamed]
