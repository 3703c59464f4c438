import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reconkm.experiments import (
    SweepRecord,
    SweepSpec,
    frequency_table,
    generate_synthetic,
    polarity_l2,
    polarity_stddev,
    records_from_csv,
    records_to_csv,
    run_sweep,
    summarize,
    write_reports,
)
from reconkm.instance import Instance


def test_polarity_stddev_examples():
    assert polarity_stddev([-1, 1]) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert polarity_stddev([0.7, 0.7, 0.7]) == 0.0
    assert polarity_stddev([0, 0, 3, 3]) == pytest.approx(math.sqrt(3), abs=1e-15)
    with pytest.raises(ValueError):
        polarity_stddev([1.0])


def test_polarity_l2_examples():
    assert polarity_l2([0.3, -0.4]) == pytest.approx(0.5, abs=1e-15)
    assert polarity_l2([0, 0, 0]) == 0.0
    assert polarity_l2([0.5]) == 0.5
    with pytest.raises(ValueError):
        polarity_l2([])


def _rec(restart, selected, k=2, lam=0.0):
    return SweepRecord(k, lam, 0, restart, restart, tuple(selected), 1.0, 0.0, 1.0, 1, 0, True)


def test_frequency_table():
    recs = [_rec(r, ["a", "b"] if r < 77 else ["b", "c"]) for r in range(80)]
    table = frequency_table(recs, 2, 0.0, top=16, polarity={"a": -0.5})
    assert [(t.label, t.frequency) for t in table] == [("b", 1.0), ("a", 0.9625), ("c", 0.0375)]
    assert table[0].polarity is None and table[1].polarity == -0.5
    assert [t.label for t in frequency_table(recs, 2, 0.0, top=1)] == ["b"]
    assert "d" not in {t.label for t in table}
    with pytest.raises(KeyError):
        frequency_table(recs, 4, 0.0)


def test_sweep_line_instance(line3):
    spec = SweepSpec(k_values=(2,), lambda_values=(0.0,), restarts=3, normalization="sum")
    recs = run_sweep(line3, spec)
    assert len(recs) == 3
    assert all(r.total == 1.0 for r in recs)
    assert all(r.polarity_stddev is None and r.polarity_l2 is None for r in recs)


def test_sweep_seeds_paired_across_lambda():
    inst = generate_synthetic(n_per_blob=6, seed=1)
    spec = SweepSpec(k_values=(2, 3), lambda_values=(0.0, 0.4, 1.6), restarts=4, normalization="sum")
    recs = run_sweep(inst, spec)
    assert len(recs) == 2 * 3 * 4
    for k in (2, 3):
        cols = [[r.seed for r in recs if r.k == k and r.lambda_index == li] for li in range(3)]
        assert cols[0] == cols[1] == cols[2]
        assert len(set(cols[0])) == 4
    assert {r.seed for r in recs if r.k == 2}.isdisjoint({r.seed for r in recs if r.k == 3})
    assert all(r.polarity_stddev is not None for r in recs)


def test_sweep_quota_even():
    inst = generate_synthetic(n_per_blob=5, seed=0)
    spec = SweepSpec(k_values=(3,), lambda_values=(1.0,), restarts=3, quotas="even", assignment_mode="same-group-nearest")
    for r in run_sweep(inst, spec):
        blobs = [int(label[1:]) < 5 for label in r.selected]
        assert sum(blobs) == 2  # blob0 takes the odd seat


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(k_values=())
    with pytest.raises(ValueError):
        SweepSpec(lambda_values=(-1.0,))
    with pytest.raises(ValueError):
        SweepSpec.from_json({"k_values": [2], "bogus": 1})


def test_csv_roundtrip_and_summary(tmp_path):
    inst = generate_synthetic(n_per_blob=8, seed=3)
    spec = SweepSpec(k_values=(2, 4), lambda_values=(0.0, 3.2), restarts=5, normalization="sum")
    recs = run_sweep(inst, spec)
    csv_path, json_path = write_reports(recs, tmp_path, spec)
    back = records_from_csv(csv_path.read_text())
    assert back == recs
    summary = json.loads(json_path.read_text())
    assert summary["std_ddof"] == 1
    for cell in summary["cells"]:
        rows = [r for r in back if r.k == cell["k"] and r.lam == cell["lambda"]]
        for metric in ("f_term", "total", "polarity_stddev"):
            x = np.array([getattr(r, metric) for r in rows])
            assert abs(cell["per_restart"][metric]["mean"] - x.mean()) <= 1e-12 * max(1, abs(x.mean()))
            assert abs(cell["per_restart"][metric]["std"] - x.std(ddof=1)) <= 1e-12 * max(1, x.std())
        best = min(rows, key=lambda r: (r.total, r.restart))
        assert cell["best_restart"]["restart"] == best.restart


def test_summary_single_restart():
    out = summarize([_rec(0, ["a", "b"])])
    assert out["cells"][0]["per_restart"]["total"] == {"mean": 1.0, "std": 0.0, "n": 1}


def test_synthetic_properties():
    a = generate_synthetic(n_per_blob=10, seed=5)
    b = generate_synthetic(n_per_blob=10, seed=5)
    assert a.dff.tobytes() == b.dff.tobytes() and a.polarity.tobytes() == b.polarity.tobytes()
    x = a.polarity
    np.testing.assert_array_equal(a.dff, np.abs(x[:, None] - x[None, :]))
    assert a.groups[:10] == ("blob0",) * 10


def test_synthetic_small_spread_blocks():
    inst = generate_synthetic(n_per_blob=5, spread=1e-9, seed=0)
    D = inst.dff
    assert D[:5, :5].max() < 1e-7 and D[5:, 5:].max() < 1e-7
    np.testing.assert_allclose(D[:5, 5:], 2.0, atol=1e-7)


def test_synthetic_rejects_bad_params():
    with pytest.raises(ValueError):
        generate_synthetic(blob_centers=(0.0,))
    with pytest.raises(ValueError):
        generate_synthetic(spread=0.0)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12))
def test_polarity_metrics_match_definition(xs):
    x = np.array(xs)
    m = x.mean()
    assert polarity_stddev(xs) == pytest.approx(math.sqrt(((x - m) ** 2).sum() / (len(x) - 1)), abs=1e-9)
    assert polarity_l2(xs) == pytest.approx(math.sqrt((x**2).sum()), abs=1e-12)
