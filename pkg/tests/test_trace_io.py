"""Tests for CSV traces and their metadata sidecar."""

import csv
import math

import numpy as np
import pytest

from dremlab.errors import TraceIOError
from dremlab.harness.simulation import run
from dremlab.harness.trace_io import emit_csv, header, load_csv, metadata_path
from dremlab.models import Law
from dremlab.presets import preset_run_config


def test_header_layout():
    """Test 8 scalar columns, six n-blocks and n mask columns."""
    columns = header(3)
    assert len(columns) == 29
    assert columns[:8] == [
        "t", "z", "omega", "gamma", "rank", "tilde_z_grad", "tilde_z_drem", "tilde_z_dremr"
    ]
    assert columns[8:11] == ["phibar_1", "phibar_2", "phibar_3"]
    assert columns[-3:] == ["identifiable_1", "identifiable_2", "identifiable_3"]


def test_emit_writes_csv_and_sidecar(exp_a_trace, tmp_path):
    """Test one row per record plus the metadata file."""
    path = emit_csv(exp_a_trace, tmp_path / "exp-a.csv")
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == header(3)
    assert len(rows) == len(exp_a_trace.records) + 1
    assert all(len(row) == 29 for row in rows)
    assert metadata_path(path).name == "exp-a.meta.yaml"
    assert metadata_path(path).exists()


def test_load_restores_regularized_series(exp_a_trace, tmp_path):
    """Test that the regularized estimate and oracle split read back exactly."""
    loaded = load_csv(emit_csv(exp_a_trace, tmp_path / "trace.csv"))
    assert not loaded.in_memory
    assert np.array_equal(loaded.times, exp_a_trace.times)
    assert np.array_equal(
        loaded.theta_hat(Law.DREM_REGULARIZED), exp_a_trace.theta_hat(Law.DREM_REGULARIZED)
    )
    assert np.array_equal(loaded.series("d"), exp_a_trace.series("d"))
    assert np.array_equal(loaded.series("eigenvalues"), exp_a_trace.series("eigenvalues"))
    assert [r.identifiable for r in loaded.records] == [
        r.identifiable for r in exp_a_trace.records
    ]
    assert np.array_equal(loaded.tilde_z(Law.GRADIENT), exp_a_trace.tilde_z(Law.GRADIENT))
    assert loaded.phibar_max == exp_a_trace.phibar_max
    assert not loaded.has_estimate(Law.GRADIENT)


def test_unselected_laws_written_as_nan(exp_b2_trace, tmp_path):
    """Test nan columns for laws that did not run."""
    path = emit_csv(exp_b2_trace, tmp_path / "b2.csv")
    with open(path, newline="") as f:
        row = next(iter(csv.DictReader(f)))
    assert row["tilde_z_grad"] == "nan"
    assert row["tilde_z_drem"] == "nan"
    assert not math.isnan(float(row["tilde_z_dremr"]))


def test_csv_switch_fallback(exp_b2_trace, tmp_path):
    """Test switch detection from rank and d on a loaded trace."""
    loaded = load_csv(emit_csv(exp_b2_trace, tmp_path / "b2.csv"))
    switches = loaded.switch_times()
    assert any(1.0 <= s <= 1.3 for s in switches)
    assert any(2.0 <= s <= 2.3 for s in switches)


def test_byte_identical_reruns(tmp_path):
    """Test that two runs of a preset produce the same CSV bytes."""
    cfg = preset_run_config("exp-b2", horizon=0.3)
    first = emit_csv(run(cfg), tmp_path / "first.csv")
    second = emit_csv(run(cfg), tmp_path / "second.csv")
    assert first.read_bytes() == second.read_bytes()


def test_load_missing_sidecar(exp_a_trace, tmp_path):
    """Test TraceIOError without metadata."""
    path = emit_csv(exp_a_trace, tmp_path / "trace.csv")
    metadata_path(path).unlink()
    with pytest.raises(TraceIOError):
        load_csv(path)


def test_load_bad_header(exp_a_trace, tmp_path):
    """Test TraceIOError for a CSV with foreign columns."""
    path = emit_csv(exp_a_trace, tmp_path / "trace.csv")
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(TraceIOError):
        load_csv(path)


def test_emit_to_unwritable_location(exp_a_trace, tmp_path):
    """Test TraceIOError when the destination is a directory."""
    target = tmp_path / "dir.csv"
    target.mkdir()
    with pytest.raises(TraceIOError):
        emit_csv(exp_a_trace, target)


def test_csv_tilde_z_matches_phibar_and_error(exp_b2_trace, tmp_path):
    """Test tilde_z_dremr = phibar . tilde_theta_dremr on every parsed row."""
    path = emit_csv(exp_b2_trace, tmp_path / "b2.csv")
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == len(exp_b2_trace.records)
    worst = 0.0
    for row in rows:
        phibar = np.array([float(row[f"phibar_{i}"]) for i in (1, 2, 3)])
        tilde_theta = np.array([float(row[f"tilde_theta_dremr_{i}"]) for i in (1, 2, 3)])
        worst = max(worst, abs(float(row["tilde_z_dremr"]) - float(phibar @ tilde_theta)))
    assert worst <= 1e-12
