"""End-to-end CLI tests driven through main() in-process."""
import json
from pathlib import Path

import pytest

from drillguide.cli import main

GOLDEN = Path(__file__).parent / "data" / "golden"

TINY = {"seed": 11, "n_subjects": 2, "trials_per_condition": 1}


def write_config(tmp_path: Path, obj: dict) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


def run(argv: list[str]) -> int:
    return main(argv)


def test_simulate_writes_dataset_and_config(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    out = tmp_path / "out"
    assert run(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "dataset.csv").exists()
    eff = json.loads((out / "config.json").read_text(encoding="utf-8"))
    assert eff["seed"] == 11
    assert eff["n_subjects"] == 2
    # 2 subjects x 4 conditions x 1 trial
    lines = (out / "dataset.csv").read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 1 + 8
    msg = capsys.readouterr().out
    assert "8" in msg


def test_simulate_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, TINY)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert run(["simulate", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "dataset.csv").read_bytes() == (b / "dataset.csv").read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, dict(TINY, seed=1))

    def dataset(out: Path, extra: list[str]) -> bytes:
        assert run(["simulate", "--config", str(cfg), "--out", str(out), *extra]) == 0
        return (out / "dataset.csv").read_bytes()

    base = dataset(tmp_path / "o1", [])
    monkeypatch.setenv("DRILLGUIDE_SEED", "2")
    env = dataset(tmp_path / "o2", [])
    flag = dataset(tmp_path / "o3", ["--seed", "3"])
    monkeypatch.delenv("DRILLGUIDE_SEED")
    flag_alone = dataset(tmp_path / "o4", ["--seed", "3"])
    assert base != env  # env var overrides config seed
    assert env != flag  # flag overrides env var
    assert flag == flag_alone
    eff = json.loads((tmp_path / "o3" / "config.json").read_text(encoding="utf-8"))
    assert eff["seed"] == 3


def test_bad_env_seed_fails(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, TINY)
    monkeypatch.setenv("DRILLGUIDE_SEED", "not-a-number")
    code = run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error: config-invalid" in capsys.readouterr().err


def test_simulate_defaults_without_config(tmp_path):
    out = tmp_path / "out"
    assert run(["simulate", "--out", str(out), "--subjects", "1",
                "--trials", "1", "--seed", "5"]) == 0
    eff = json.loads((out / "config.json").read_text(encoding="utf-8"))
    assert eff["seed"] == 5
    assert eff["n_subjects"] == 1
    assert eff["trials_per_condition"] == 1


def test_simulate_rejects_bad_config(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n_subjects": 0})
    code = run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    assert "error: config-invalid" in err
    assert "n_subjects" in err


def test_simulate_rejects_unknown_key(tmp_path, capsys):
    cfg = write_config(tmp_path, {"n_subjcts": 4})
    assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "n_subjcts" in capsys.readouterr().err


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory) -> Path:
    """A small simulated dataset shared across analyze/replay tests."""
    tmp = tmp_path_factory.mktemp("sim")
    cfg = tmp / "config.json"
    cfg.write_text(json.dumps({"seed": 11, "n_subjects": 6,
                               "trials_per_condition": 2}), encoding="utf-8")
    out = tmp / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    return out


def test_analyze_writes_report_bundle(sim_dir, tmp_path):
    out = tmp_path / "rep"
    assert run(["analyze", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(sim_dir / "config.json"),
                "--out", str(out)]) == 0
    for name in ("report.json", "report.txt", "box_pm.svg", "box_rm.svg",
                 "box_tt.svg", "radar.svg"):
        assert (out / name).exists(), name
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["n_subjects"] == 6
    assert set(report["metrics"]) == {
        "PM", "PX", "PY", "PZ", "RM", "RX", "RZ", "TT"}
    text = (out / "report.txt").read_text(encoding="utf-8")
    assert "friedman" in text


def test_analyze_cardinality_mismatch(sim_dir, tmp_path, capsys):
    csv_text = (sim_dir / "dataset.csv").read_text(encoding="utf-8")
    lines = csv_text.strip().splitlines()
    clipped = tmp_path / "clipped.csv"
    clipped.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    code = run(["analyze", "--data", str(clipped),
                "--config", str(sim_dir / "config.json"),
                "--out", str(tmp_path / "rep")])
    assert code == 1
    assert "error: data-invalid" in capsys.readouterr().err


def test_analyze_rejects_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope,nope\n1,2\n", encoding="utf-8")
    assert run(["analyze", "--data", str(bad), "--out", str(tmp_path / "r")]) == 1
    assert "error: data-invalid" in capsys.readouterr().err


def test_analyze_missing_file(tmp_path, capsys):
    assert run(["analyze", "--data", str(tmp_path / "absent.csv"),
                "--out", str(tmp_path / "r")]) == 1
    assert "error: io-error" in capsys.readouterr().err


def first_trial_of(sim_dir: Path, condition: str) -> tuple[str, str]:
    """(subject, trial) of the first dataset row in the given condition."""
    lines = (sim_dir / "dataset.csv").read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    for line in lines[1:]:
        row = dict(zip(header, line.split(",")))
        if row["condition"] == condition:
            return row["subject"], row["trial"]
    raise AssertionError(f"no {condition} rows")


def test_replay_stream(sim_dir, tmp_path):
    subject, trial = first_trial_of(sim_dir, "DWEP")
    dest = tmp_path / "frames.jsonl"
    assert run(["replay", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(sim_dir / "config.json"),
                "--subject", subject, "--trial", trial,
                "--every", "10", "--out", str(dest)]) == 0
    lines = dest.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) >= 2
    first = json.loads(lines[0])
    assert first["frame"] == 0
    assert first["elapsed"] == 0.0
    render = first["render"]
    assert render["condition"] == "DWEP"
    assert {p["id"] for p in render["primitives"]} >= {"drill_avatar"}
    for line in lines:
        obj = json.loads(line)
        assert obj["render"]["condition"] == "DWEP"


def test_replay_stdout(sim_dir, capsys):
    subject, trial = first_trial_of(sim_dir, "EntryPoint")
    assert run(["replay", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(sim_dir / "config.json"),
                "--subject", subject, "--trial", trial,
                "--every", "25", "--out", "-"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert json.loads(out[0])["frame"] == 0


def test_replay_wrong_config_mismatch(sim_dir, tmp_path, capsys):
    subject, trial = first_trial_of(sim_dir, "DWEP")
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"seed": 999, "n_subjects": 6,
                                 "trials_per_condition": 2}), encoding="utf-8")
    code = run(["replay", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(other), "--subject", subject, "--trial", trial,
                "--out", str(tmp_path / "f.jsonl")])
    assert code == 1
    assert "error: replay-mismatch" in capsys.readouterr().err


def test_replay_missing_trial(sim_dir, tmp_path, capsys):
    code = run(["replay", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(sim_dir / "config.json"),
                "--subject", "40", "--trial", "0",
                "--out", str(tmp_path / "f.jsonl")])
    assert code == 1
    assert "no record" in capsys.readouterr().err


def test_replay_rejects_bad_every(sim_dir, tmp_path, capsys):
    code = run(["replay", "--data", str(sim_dir / "dataset.csv"),
                "--config", str(sim_dir / "config.json"),
                "--subject", "0", "--trial", "0",
                "--every", "0", "--out", str(tmp_path / "f.jsonl")])
    assert code == 1
    assert "error: invalid-input" in capsys.readouterr().err


def test_validate_config_ok(tmp_path, capsys):
    cfg = write_config(tmp_path, TINY)
    assert run(["validate-config", "--config", str(cfg)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_config_bad(tmp_path, capsys):
    cfg = write_config(tmp_path, {"max_tilt_deg": -3})
    assert run(["validate-config", "--config", str(cfg)]) == 1
    assert "max_tilt_deg" in capsys.readouterr().err


def test_no_args_shows_usage():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


# Golden regressions. Regenerate via:
#   drillguide simulate --config tests/data/golden/config.json --out tests/data/golden
#   drillguide analyze --data tests/data/golden/dataset.csv \
#     --config tests/data/golden/config.json --out tests/data/golden
# then delete the box_*.svg files.

def test_golden_dataset_bytes(tmp_path):
    out = tmp_path / "out"
    assert run(["simulate", "--config", str(GOLDEN / "config.json"),
                "--out", str(out)]) == 0
    assert (out / "dataset.csv").read_bytes() == (GOLDEN / "dataset.csv").read_bytes()
    got = json.loads((out / "config.json").read_text(encoding="utf-8"))
    want = json.loads((GOLDEN / "config.json").read_text(encoding="utf-8"))
    assert got == want


def test_golden_report_bytes(tmp_path):
    out = tmp_path / "rep"
    assert run(["analyze", "--data", str(GOLDEN / "dataset.csv"),
                "--config", str(GOLDEN / "config.json"),
                "--out", str(out)]) == 0
    assert (out / "report.json").read_bytes() == (GOLDEN / "report.json").read_bytes()
    assert (out / "report.txt").read_bytes() == (GOLDEN / "report.txt").read_bytes()
    assert (out / "radar.svg").read_bytes() == (GOLDEN / "radar.svg").read_bytes()
