"""Figure rendering: files appear, bytes are reproducible, kinds resolve."""
from __future__ import annotations

import pytest

from riscast import experiments, plots
from riscast.experiments import SweepRow


def power_rows():
    rows = []
    for i, power in enumerate((20.0, 30.0, 40.0)):
        for j, scheme in enumerate(("optimal-csi", "no-ris")):
            out = max(0.01, 0.5 - 0.1 * i - 0.2 * j)
            rows.append(SweepRow(scheme, 8, power, out, out * 0.9, min(1.0, out * 1.1), 1 - out, 500, (11,)))
    return rows


def element_rows():
    rows = []
    for n in (4, 8, 12):
        out = 1.0 / n
        rows.append(SweepRow("optimal-csi", n, 30.0, out, out * 0.9, out * 1.1, 1 - out, 500, (11,)))
    return rows


def test_sweep_kind():
    assert plots.sweep_kind(power_rows()) == "power"
    assert plots.sweep_kind(element_rows()) == "elements"
    single = [element_rows()[0]]
    assert plots.sweep_kind(single) == "elements"
    with pytest.raises(ValueError):
        plots.sweep_kind(power_rows() + element_rows())


def test_render_power_sweep_files(tmp_path):
    csv_path = tmp_path / "power_n8.csv"
    experiments.write_sweep_csv(csv_path, power_rows())
    written = plots.render_sweep(csv_path, tmp_path / "figs")
    names = sorted(p.name for p in written)
    assert names == ["power_n8_outage.svg", "power_n8_rate.svg"]
    for p in written:
        assert p.exists() and p.stat().st_size > 2000
        assert b"<svg" in p.read_bytes()[:300]


def test_render_element_sweep_files(tmp_path):
    csv_path = tmp_path / "elements.csv"
    experiments.write_sweep_csv(csv_path, element_rows())
    written = plots.render_sweep(csv_path, tmp_path)
    assert sorted(p.name for p in written) == ["elements_outage.svg", "elements_rate.svg"]


def test_rendering_is_byte_reproducible(tmp_path):
    csv_path = tmp_path / "power.csv"
    experiments.write_sweep_csv(csv_path, power_rows())
    first = plots.render_sweep(csv_path, tmp_path / "a")
    second = plots.render_sweep(csv_path, tmp_path / "b")
    for p1, p2 in zip(first, second):
        assert p1.read_bytes() == p2.read_bytes()


def test_render_training_curves(tmp_path):
    metrics = tmp_path / "metrics_dnn_n8.csv"
    metrics.write_text(
        "epoch,train_rmse,val_rmse\n1,0.5,0.6\n2,0.3,0.4\n3,0.2,0.35\n"
    )
    written = plots.render_training(metrics, tmp_path)
    assert [p.name for p in written] == ["metrics_dnn_n8_curves.svg"]
    assert written[0].stat().st_size > 1000
    again = plots.render_training(metrics, tmp_path / "again")
    assert written[0].read_bytes() == again[0].read_bytes()


def test_render_training_rejects_foreign_csv(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        plots.render_training(bad, tmp_path)
