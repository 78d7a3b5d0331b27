"""Command-line round trips, exit codes, and byte reproducibility."""

import hashlib
import json
import subprocess
import sys

import pytest

from walkwise import RunConfig, main
from walkwise import cli
from walkwise.errors import CapacityError


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# config round trip and seed resolution


def test_config_round_trip():
    cfgs = [
        RunConfig(command="generate", seed=7, level=6, horizon=2.0, out="x.csv"),
        RunConfig(command="integrate", seed=0, level=12, f="poly:1,0,2",
                  mode="strat", m="4:8"),
        RunConfig(command="diagnose", suite="clt", paths=500, alpha=1e-4,
                  threads=3),
        RunConfig(command="embed", m="5"),
    ]
    for c in cfgs:
        assert RunConfig.parse(c.emit()) == c


def test_resolve_seed_plain():
    assert cli.resolve_seed("17") == (17, None)
    with pytest.raises(cli.UsageError):
        cli.resolve_seed("seventeen")


def test_resolve_seed_registry(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_DIR_ENV, str(tmp_path))
    (tmp_path / "alpha.txt").write_text("# block of ten\n40\n41\n42\n")
    assert cli.resolve_seed("@alpha") == (40, 3)
    (tmp_path / "empty").write_text("# nothing\n")
    with pytest.raises(cli.UsageError):
        cli.resolve_seed("@empty")
    with pytest.raises(cli.UsageError):
        cli.resolve_seed("@missing")


def test_registry_count_becomes_paths(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_DIR_ENV, str(tmp_path))
    (tmp_path / "block").write_text("9\n10\n11\n12\n")
    cfg = cli.config_from_args(["diagnose", "--suite", "clt", "--seed", "@block"])
    assert cfg.seed == 9
    assert cfg.paths == 4
    # an explicit --paths wins over the registry size
    cfg = cli.config_from_args(
        ["diagnose", "--suite", "clt", "--seed", "@block", "--paths", "2"])
    assert cfg.paths == 2


def test_parse_m():
    assert cli._parse_m("3", []) == [3]
    assert cli._parse_m("4:8", []) == [4, 5, 6, 7, 8]
    assert cli._parse_m(None, [1, 2]) == [1, 2]
    with pytest.raises(cli.UsageError):
        cli._parse_m("8:4", [])
    with pytest.raises(cli.UsageError):
        cli._parse_m("x", [])


# ---------------------------------------------------------------------------
# generate


def test_generate_file(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, _, _ = run(["generate", "--seed", "5", "--level", "4",
                      "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "# seed=5"
    assert lines[1] == "# level=4"
    assert lines[2] == "# horizon=1.0"
    assert lines[3] == "# error_bound=1.0"
    assert lines[4] == "t,value"
    assert len(lines) == 5 + 4**4 + 1
    assert lines[5] == "0.0,0.0"
    t1, v1 = lines[6].split(",")
    assert float(t1) == 4.0**-4
    assert abs(float(v1)) == 2.0**-4

    # rerunning the same config is byte identical
    out2 = tmp_path / "w2.csv"
    run(["generate", "--seed", "5", "--level", "4", "--out", str(out2)], capsys)
    assert out.read_bytes() == out2.read_bytes()


def test_generate_stdout(capsys):
    code, text, _ = run(["generate", "--seed", "0", "--level", "2"], capsys)
    assert code == 0
    assert text.startswith("# seed=0\n# level=2\n")
    assert len(text.splitlines()) == 5 + 17


# ---------------------------------------------------------------------------
# integrate


def test_integrate_identity_closed_form(tmp_path, capsys):
    out = tmp_path / "est.json"
    code, _, _ = run(["integrate", "--seed", "3", "--level", "8", "--f", "x",
                      "--m", "4:6", "--out", str(out)], capsys)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["config"]["command"] == "integrate"
    assert payload["f"] == "x"
    assert payload["levels"] == [4, 5, 6]
    for key in ("4", "5", "6"):
        b = payload["endpoint_per_level"][key]
        km = payload["K_m_per_level"][key]
        assert payload["per_level"][key] == b * b / 2 - km / 2
        assert payload["identity_exact_per_level"][key] is True


def test_integrate_strat_mode(tmp_path, capsys):
    out = tmp_path / "est.json"
    code, _, _ = run(["integrate", "--seed", "3", "--level", "8", "--f", "x",
                      "--mode", "strat", "--m", "5", "--out", str(out)], capsys)
    assert code == 0
    payload = json.loads(out.read_text())
    b = payload["endpoint_per_level"]["5"]
    assert payload["per_level"]["5"] == b * b / 2


def test_integrate_unknown_integrand(capsys):
    code, _, err = run(["integrate", "--f", "nope"], capsys)
    assert code == 2
    assert "registered integrands" in err
    assert "poly:" in err


def test_integrate_missing_table(capsys):
    code, _, err = run(["integrate", "--f", "table:missing.csv"], capsys)
    assert code == 2


def test_integrate_m_above_level(capsys):
    code, _, err = run(["integrate", "--f", "x", "--level", "6", "--m", "7"],
                       capsys)
    assert code == 2


# ---------------------------------------------------------------------------
# embed


def test_embed_crosscheck(tmp_path, capsys):
    out = tmp_path / "emb.csv"
    code, _, _ = run(["embed", "--seed", "42", "--level", "8", "--m", "3",
                      "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert "# crosscheck=exact" in lines
    assert "k,s_mk,value" in lines
    first = lines[lines.index("k,s_mk,value") + 1]
    assert first == "0,0.0,0.0"


def test_embed_identity_level(capsys):
    code, text, _ = run(["embed", "--seed", "1", "--level", "4", "--m", "4"],
                        capsys)
    assert code == 0
    body = text.splitlines()
    k1 = body[body.index("k,s_mk,value") + 2]
    k, s, _ = k1.split(",")
    assert int(k) == 1 and float(s) == 4.0**-4


def test_embed_m_above_level(capsys):
    code, _, err = run(["embed", "--level", "5", "--m", "9"], capsys)
    assert code == 2
    assert "m" in err


# ---------------------------------------------------------------------------
# diagnose


def test_diagnose_pass_exit_zero(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code, _, _ = run(["diagnose", "--suite", "variation", "--seed", "2",
                      "--level", "7", "--out", str(out)], capsys)
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["suite"] == "variation"
    assert payload["passed"] is True
    assert payload["config"]["suite"] == "variation"


def test_diagnose_fail_exit_one(capsys):
    # at coarse levels the inter-level distance hugs sqrt(m) 2^-m/2, well
    # above the (1/4) m 2^-m/2 line, so this run fails deterministically
    code, text, _ = run(["diagnose", "--suite", "convergence", "--seed", "0",
                         "--paths", "20", "--m", "6:7"], capsys)
    assert code == 1


def test_diagnose_bad_suite(capsys):
    code, _, err = run(["diagnose", "--suite", "bogus"], capsys)
    assert code == 2


def test_diagnose_byte_determinism(tmp_path, capsys):
    # the config block embeds the output path, so reruns must target the
    # same file to be byte comparable
    a = tmp_path / "a.json"
    argv = ["diagnose", "--suite", "twistlaw", "--paths", "800", "--m", "1",
            "--out", str(a)]
    run(argv, capsys)
    first = hashlib.md5(a.read_bytes()).hexdigest()
    run(argv, capsys)
    assert hashlib.md5(a.read_bytes()).hexdigest() == first


# ---------------------------------------------------------------------------
# error mapping


def test_capacity_maps_to_exit_three(monkeypatch, capsys):
    def boom(cfg):
        raise CapacityError(4, 10**10, 2**34)

    monkeypatch.setattr(cli, "cmd_generate", boom)
    code = cli.dispatch(RunConfig(command="generate"))
    capsys.readouterr()
    assert code == 3


def test_unwritable_out_maps_to_exit_two(tmp_path, capsys):
    bad = tmp_path / "no_such_dir" / "x.csv"
    code, _, err = run(["generate", "--level", "2", "--out", str(bad)], capsys)
    assert code == 2
    assert "cannot write" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "walkwise", "generate", "--level", "2"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("# seed=0\n")
