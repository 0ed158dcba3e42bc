import json

import numpy as np
import pytest

from chdisguise import analytic_flip_profile, loads_channel
from chdisguise.cli import main
from chdisguise.errors import NumericalError


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_fixture(capsys, tmp_path, name, *flags):
    code, out, err = run(capsys, "fixture", name, *flags)
    assert code == 0, err
    suffix = "_".join(f.lstrip("-") for f in flags)
    path = tmp_path / f"{name}_{suffix}.json"
    path.write_text(out)
    return path


class TestFixture:
    def test_bitflip_kraus(self, capsys):
        code, out, _ = run(capsys, "fixture", "bitflip", "--a", "0.2")
        assert code == 0
        ch = loads_channel(out)
        assert np.abs(ch.kraus_ops[0] - np.sqrt(0.8) * np.eye(2)).max() <= 1e-15

    def test_bitflip_zero_is_identity(self, capsys):
        code, out, _ = run(capsys, "fixture", "bitflip", "--a", "0")
        ch = loads_channel(out)
        assert code == 0
        assert len(ch.kraus_ops) == 2
        assert np.abs(ch.kraus_ops[0] - np.eye(2)).max() <= 1e-15
        assert np.abs(ch.kraus_ops[1]).max() == 0.0

    def test_reference_pair_entry(self, capsys):
        code, out, _ = run(capsys, "fixture", "appendix-b-e")
        assert code == 0
        ch = loads_channel(out)
        assert ch.kraus_ops[0][0, 0] == pytest.approx(-0.504828)

    def test_missing_parameter(self, capsys):
        code, _, err = run(capsys, "fixture", "phaseflip")
        assert code == 2
        assert "needs --b" in err

    def test_unknown_fixture_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fixture", "amplitude-damping"])
        assert exc.value.code == 2

    def test_round_trip_byte_stable(self, capsys, tmp_path):
        code, out, _ = run(capsys, "fixture", "xzflip", "--c", "0.3")
        ch = loads_channel(out)
        from chdisguise import dumps_channel

        assert dumps_channel(ch) == out


class TestGenRandom:
    def test_deterministic_bytes(self, capsys):
        _, out1, _ = run(capsys, "gen-random", "--dim", "2", "--kraus", "4", "--seed", "5")
        _, out2, _ = run(capsys, "gen-random", "--dim", "2", "--kraus", "4", "--seed", "5")
        assert out1 == out2

    def test_output_is_valid_channel(self, capsys):
        code, out, _ = run(capsys, "gen-random", "--dim", "3", "--kraus", "2", "--seed", "1")
        assert code == 0
        ch = loads_channel(out)
        assert ch.dim == 3 and ch.is_trace_preserving()


class TestProfile:
    def test_flip_profile_matches_closed_form(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        out = tmp_path / "flip"
        code, _, err = run(capsys, "profile", str(e), str(f), "--out", str(out))
        assert code == 0, err
        lines = (tmp_path / "flip_bounds.csv").read_text().splitlines()
        assert lines[0] == "beta,alpha_lo,alpha_hi,p_lo,q_lo,p_hi,q_hi,tight"
        flip = analytic_flip_profile(0.2, 0.2)
        assert len(lines) == 401
        for row in lines[1:]:
            parts = row.split(",")
            beta, p_hi, q_hi = float(parts[0]), float(parts[5]), float(parts[6])
            assert flip.branch_residual(p_hi, q_hi, beta) <= 1e-8
        hull = (tmp_path / "flip_hull.csv").read_text().splitlines()
        assert hull[0] == "p,q"

    def test_identical_channels(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.25")
        out = tmp_path / "same"
        code, _, _ = run(
            capsys, "profile", str(e), str(e),
            "--beta-grid", "log:0.1:10:41", "--out", str(out),
        )
        assert code == 0
        rows = (tmp_path / "same_bounds.csv").read_text().splitlines()[1:]
        mid = rows[20].split(",")  # beta = 1 sits mid-grid
        assert float(mid[0]) == pytest.approx(1.0)
        assert float(mid[3]) == 0.0 and float(mid[4]) == pytest.approx(0.0, abs=1e-12)
        for row in rows:
            parts = row.split(",")
            assert float(parts[3]) <= 1e-12 or float(parts[4]) <= 1e-12

    def test_exact_column(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        out = tmp_path / "ex"
        code, _, _ = run(
            capsys, "profile", str(e), str(f),
            "--beta-grid", "log:0.5:2:5", "--out", str(out), "--exact",
        )
        assert code == 0
        lines = (tmp_path / "ex_bounds.csv").read_text().splitlines()
        assert lines[0].endswith(",alpha_exact")
        first = lines[1].split(",")
        assert float(first[-1]) == pytest.approx(float(first[2]), abs=1e-6)

    def test_deterministic_output_bytes(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.3")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.4")
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            run(capsys, "profile", str(e), str(f), "--beta-grid", "log:0.1:10:30", "--out", str(out))
            outs.append((tmp_path / f"{name}_bounds.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_malformed_channel_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _, err = run(capsys, "profile", str(bad), str(bad), "--out", str(tmp_path / "x"))
        assert code == 2
        assert "error" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, _ = run(
            capsys, "profile", str(tmp_path / "nope.json"), str(tmp_path / "nope.json"),
            "--out", str(tmp_path / "x"),
        )
        assert code == 2

    def test_bad_grid_exits_2(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        code, _, _ = run(
            capsys, "profile", str(e), str(e),
            "--beta-grid", "linear:1:2:3", "--out", str(tmp_path / "x"),
        )
        assert code == 2


class TestMiscCommands:
    def test_containment(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        ident = write_fixture(capsys, tmp_path, "bitflip", "--a", "0")
        code, out, _ = run(capsys, "containment", str(e), str(ident))
        assert code == 0
        record = json.loads(out)
        assert record["q_min"] == pytest.approx(0.2, abs=1e-9)

    def test_exact(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        code, out, _ = run(capsys, "exact", str(e), str(f), "--beta", "1.0")
        assert code == 0
        record = json.loads(out)
        assert record["alpha_hat"] == pytest.approx(0.2, abs=1e-8)
        assert record["p"] == pytest.approx(1 / 6, abs=1e-8)

    def test_compose(self, capsys):
        code, out, _ = run(
            capsys, "compose", "--p1", "0", "--q1", "0",
            "--p2", "0.3", "--q2", "0.1", "--mode", "product",
        )
        assert code == 0
        record = json.loads(out)
        assert record == {"p2": 0.3, "q2": 0.1}

    def test_triangle_point_mode(self, capsys):
        code, out, _ = run(
            capsys, "triangle", "--p1", str(1 / 6), "--q1", str(1 / 6),
            "--p2", str(1 / 6), "--q2", str(1 / 6),
        )
        assert code == 0
        record = json.loads(out)
        assert record["p2"] == pytest.approx(2 / 7)

    def test_triangle_region_mode(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        g = write_fixture(capsys, tmp_path, "xzflip", "--c", "0.2")
        out = tmp_path / "region.csv"
        code, _, _ = run(
            capsys, "triangle", str(e), str(f), str(g),
            "--beta-grid", "log:0.1:10:60", "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "p,q"
        assert len(lines) > 2

    def test_diamond_from_p_eq(self, capsys):
        code, out, _ = run(capsys, "diamond", "--p-eq", "0.5", "--dim", "2")
        assert code == 0
        record = json.loads(out)
        assert record["diamond_lo"] == pytest.approx(0.25)
        assert record["diamond_hi"] == pytest.approx(2.0)

    def test_diamond_from_channels(self, capsys, tmp_path):
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        code, out, _ = run(capsys, "diamond", str(e), str(f))
        assert code == 0
        record = json.loads(out)
        assert record["p_eq"] == pytest.approx(1 / 6, abs=1e-8)
        assert record["diamond_lo"] == pytest.approx(0.05, abs=1e-8)

    def test_diamond_perfectly_distinguishable(self, capsys, tmp_path):
        ident = write_fixture(capsys, tmp_path, "bitflip", "--a", "0")
        xch = write_fixture(capsys, tmp_path, "bitflip", "--a", "1")
        code, out, _ = run(capsys, "diamond", str(ident), str(xch))
        assert code == 0
        record = json.loads(out)
        assert record["p_eq"] == pytest.approx(0.5, abs=1e-9)
        assert record["diamond_hi"] == pytest.approx(2.0)

    def test_qkd(self, capsys):
        code, out, _ = run(capsys, "qkd", "--p", "0.1", "--dim", "2")
        assert code == 0
        assert json.loads(out) == {"rate_bound_bits": 0.1}

    def test_qkd_bad_range_exits_2(self, capsys):
        code, _, _ = run(capsys, "qkd", "--p", "1.5", "--dim", "2")
        assert code == 2

    def test_numerical_failure_exits_3(self, capsys, tmp_path, monkeypatch):
        from chdisguise import cli

        def boom(*args, **kwargs):
            raise NumericalError("synthetic failure")

        monkeypatch.setattr(cli.sdp_exact, "solve_pair", boom)
        e = write_fixture(capsys, tmp_path, "bitflip", "--a", "0.2")
        f = write_fixture(capsys, tmp_path, "phaseflip", "--b", "0.2")
        code, _, err = run(capsys, "exact", str(e), str(f))
        assert code == 3
        assert "numerical failure" in err

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["qkd", "--p", "0.1", "--dim", "2", "--frobnicate"])
        assert exc.value.code == 2
