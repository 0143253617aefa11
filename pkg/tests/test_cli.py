"""Configuration parsing, snapshot format, and the command-line surface."""

import numpy as np
import pytest

from fins2d.cli import main
from fins2d.config import RunConfig, parse_config
from fins2d.errors import ConfigError, SnapshotFormatError
from fins2d.snapshot import Snapshot, read_snapshot, write_snapshot


MINIMAL_CONFIG = """
# smallest useful run
n = 32
alpha = 0.75
nu = 1.0
dt = 0.01
t_end = 0.0
velocity = random
velocity_amplitude = 0.3
density = bump
density_amplitude = 0.01
seed = 7
"""


class TestConfig:
    def test_parse_round_trip_values(self):
        cfg = parse_config(MINIMAL_CONFIG)
        assert cfg.n == 32
        assert cfg.alpha == 0.75
        assert cfg.velocity == "random"
        assert cfg.seed == 7

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key 'viscosity'"):
            parse_config("viscosity = 1.0")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("n = 32\nn = 64")

    def test_range_violations_name_the_key(self):
        with pytest.raises(ConfigError, match="alpha"):
            parse_config("alpha = 0.4")
        with pytest.raises(ConfigError, match="n:"):
            parse_config("n = 48")
        with pytest.raises(ConfigError, match="interpolant"):
            parse_config("interpolant = cubic")

    def test_smallness_gate(self):
        with pytest.raises(ConfigError, match="max_rho_dev"):
            parse_config("density_amplitude = 0.4\nmax_rho_dev = 0.1")

    def test_defaults_valid(self):
        RunConfig().validate()


class TestSnapshot:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        n = 16
        fields = {"rho": rng.normal(size=(n, n)),
                  "u1": rng.normal(size=(n, n))}
        snap = Snapshot(n, 2 * np.pi, 0.25, 0.75, fields)
        p1 = tmp_path / "a.fins"
        p2 = tmp_path / "b.fins"
        write_snapshot(p1, snap)
        back = read_snapshot(p1)
        assert back.n == n and back.t == 0.25 and back.alpha == 0.75
        assert list(back.fields) == ["rho", "u1"]
        for name in fields:
            assert np.array_equal(back.fields[name], fields[name])
        write_snapshot(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "bad.fins"
        snap = Snapshot(8, 1.0, 0.0, 0.75, {"rho": np.zeros((8, 8))})
        write_snapshot(p, snap)
        data = bytearray(p.read_bytes())
        data[:4] = b"XINS"
        p.write_bytes(bytes(data))
        with pytest.raises(SnapshotFormatError, match="magic"):
            read_snapshot(p)

    def test_truncation_rejected(self, tmp_path):
        p = tmp_path / "short.fins"
        snap = Snapshot(8, 1.0, 0.0, 0.75, {"rho": np.zeros((8, 8))})
        write_snapshot(p, snap)
        p.write_bytes(p.read_bytes()[:-13])
        with pytest.raises(SnapshotFormatError, match="truncated"):
            read_snapshot(p)

    def test_trailing_garbage_rejected(self, tmp_path):
        p = tmp_path / "long.fins"
        snap = Snapshot(8, 1.0, 0.0, 0.75, {"rho": np.zeros((8, 8))})
        write_snapshot(p, snap)
        p.write_bytes(p.read_bytes() + b"oops")
        with pytest.raises(SnapshotFormatError, match="trailing"):
            read_snapshot(p)


class TestSimulateCommand:
    def test_t_end_zero_writes_initial_state_only(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(MINIMAL_CONFIG)
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "simulate"]) == 0
        snaps = sorted(p.name for p in out.glob("snap_*.fins"))
        assert snaps == ["snap_000000.fins"]
        assert (out / "diagnostics.csv").exists()
        assert (out / "summary.txt").exists()

    def test_determinism_byte_identical(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(MINIMAL_CONFIG.replace("t_end = 0.0", "t_end = 0.03"))
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert main(["--config", str(cfg), "--out", str(out1), "simulate"]) == 0
        assert main(["--config", str(cfg), "--out", str(out2), "simulate"]) == 0
        files1 = sorted(p.name for p in out1.iterdir())
        files2 = sorted(p.name for p in out2.iterdir())
        assert files1 == files2
        for name in files1:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_config_error_names_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha = 2.0")
        assert main(["--config", str(cfg), "simulate"]) == 2
        assert "alpha" in capsys.readouterr().err

    def test_patch_demo_outputs_contours(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "n = 32\ndt = 0.01\nt_end = 0.02\nvelocity = random\n"
            "velocity_amplitude = 0.2\ndensity_amplitude = 0.05\n"
            "patch_markers = 128\npatch_radius = 1.0\ninterpolant = clamped\n"
            "seed = 3\n")
        out = tmp_path / "patch"
        assert main(["--config", str(cfg), "--out", str(out), "patch-demo"]) == 0
        contours = sorted(out.glob("contour_*.csv"))
        assert len(contours) >= 2
        header = contours[0].read_text().splitlines()[0]
        assert header == "s,x1,x2,theta,kappa"
        # recorded patch area stays constant under the divergence-free flow
        rows = [r for r in (out / "diagnostics.csv").read_text().splitlines()
                if r and not r.startswith("#")]
        cols = rows[0].split(",")
        areas = [float(r.split(",")[cols.index("patch_area")])
                 for r in rows[1:]]
        assert max(areas) - min(areas) <= 1e-4 * areas[0]


class TestVerifyCommand:
    def test_unknown_suite_is_usage_error(self, capsys):
        assert main(["verify", "--suite", "nonsense"]) == 2
        assert "unknown suite" in capsys.readouterr().err

    def test_scaling_suite_passes(self, capsys):
        assert main(["verify", "--suite", "scaling"]) == 0
        out = capsys.readouterr().out
        assert "[PASS] scaling/identity-factor-exact" in out
        assert "checks passed" in out

    @pytest.mark.parametrize("suite", ["kernels", "scaling"])
    def test_broken_multiplier_fails_suites(self, capsys, monkeypatch, suite):
        # fault injection: replace the dissipation symbol by a quadratic one
        import fins2d.spectral as sp
        monkeypatch.setattr(
            sp, "_SYMBOL_IMPL", lambda kmag, params: params.nu * kmag ** 2)
        assert main(["verify", "--suite", suite]) == 1
        assert "[FAIL]" in capsys.readouterr().out


class TestScalingCheckCommand:
    def test_scaling_check_writes_report(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "n = 32\ndt = 0.02\nt_end = 0.1\nvelocity = random\n"
            "velocity_amplitude = 0.3\ndensity = bump\n"
            "density_amplitude = 0.01\nseed = 5\n")
        out = tmp_path / "scale"
        rc = main(["--config", str(cfg), "--out", str(out),
                   "scaling-check", "--factor", "2.0"])
        assert rc == 0
        text = (out / "scaling.txt").read_text()
        assert "passed: True" in text
