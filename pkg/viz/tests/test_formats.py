"""Strict parsing of the documented artifact layouts."""

import struct
from pathlib import Path

import numpy as np
import pytest

from finsviz.formats import (
    FormatError,
    read_contour,
    read_diagnostics,
    read_snapshot,
    read_summary,
)

SAMPLE = Path(__file__).resolve().parents[1] / "sample_run"


class TestSnapshotReader:
    def test_reads_sample_run(self):
        snap = read_snapshot(SAMPLE / "snap_000000.fins")
        assert snap.n == 32
        assert set(snap.fields) == {"rho", "u1", "u2", "pi"}
        assert snap.fields["rho"].shape == (32, 32)
        # two-valued patch density
        assert set(np.round(np.unique(snap.fields["rho"]), 12)) == {1.0, 1.05}

    def test_corrupted_magic_rejected(self, tmp_path):
        data = bytearray((SAMPLE / "snap_000000.fins").read_bytes())
        data[:4] = b"SNIF"
        bad = tmp_path / "bad.fins"
        bad.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="magic"):
            read_snapshot(bad)

    def test_truncation_names_offset(self, tmp_path):
        data = (SAMPLE / "snap_000000.fins").read_bytes()
        bad = tmp_path / "short.fins"
        bad.write_bytes(data[: len(data) - 100])
        with pytest.raises(FormatError, match="truncated at byte"):
            read_snapshot(bad)

    def test_trailing_bytes_rejected(self, tmp_path):
        data = (SAMPLE / "snap_000000.fins").read_bytes()
        bad = tmp_path / "long.fins"
        bad.write_bytes(data + b"\x00")
        with pytest.raises(FormatError, match="trailing"):
            read_snapshot(bad)

    def test_wrong_version_rejected(self, tmp_path):
        data = bytearray((SAMPLE / "snap_000000.fins").read_bytes())
        struct.pack_into("<I", data, 4, 99)
        bad = tmp_path / "v99.fins"
        bad.write_bytes(bytes(data))
        with pytest.raises(FormatError, match="version"):
            read_snapshot(bad)


class TestDiagnosticsReader:
    def test_reads_sample_ledger(self):
        header, rows = read_diagnostics(SAMPLE / "diagnostics.csv")
        assert header[0] == "t"
        assert len(rows) >= 2
        assert rows[0]["t"] == 0.0
        assert all(r["rho_dev_linf"] <= rows[0]["rho_dev_linf"] + 1e-15
                   for r in rows)

    def test_malformed_row_names_line(self, tmp_path):
        bad = tmp_path / "d.csv"
        bad.write_text("t,energy_l2\n0.0,1.0\n0.1\n")
        with pytest.raises(FormatError, match="line 3"):
            read_diagnostics(bad)

    def test_non_numeric_cell_names_column(self, tmp_path):
        bad = tmp_path / "d.csv"
        bad.write_text("t,energy_l2,warnings\n0.0,abc,\n")
        with pytest.raises(FormatError, match="energy_l2"):
            read_diagnostics(bad)

    def test_header_only_is_valid_and_empty(self, tmp_path):
        empty = tmp_path / "d.csv"
        empty.write_text("t,energy_l2,warnings\n")
        header, rows = read_diagnostics(empty)
        assert rows == []


class TestContourReader:
    def test_reads_sample_contour(self):
        rows = read_contour(SAMPLE / "contour_000000.csv")
        assert rows.shape[1] == 5
        assert rows.shape[0] >= 64
        assert np.all(np.diff(rows[:, 0]) > 0)   # arclength increases

    def test_wrong_header_rejected(self, tmp_path):
        bad = tmp_path / "c.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError, match="line 1"):
            read_contour(bad)


class TestSummaryReader:
    def test_reads_sample_summary(self):
        constants, trends, scalars = read_summary(SAMPLE / "summary.txt")
        assert "velocity_bound" in constants
        assert "energy_l2" in trends
        assert "final_time" in scalars

    def test_missing_ledger_rejected(self, tmp_path):
        bad = tmp_path / "s.txt"
        bad.write_text("steps: 3\n")
        with pytest.raises(FormatError, match="no constants"):
            read_summary(bad)
