import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from capinn.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, compare_summaries, main, parse_config_text, reduction, resolved_text
import importlib

cli_main_mod = importlib.import_module("capinn.cli.main")
from capinn.errors import ConfigError, DivergenceError

TINY = """\
[experiment]
name = tiny
problem = heat

[problem]
d = 2

[network]
hidden_width = 6
hidden_depth = 2

[sampling]
n_f = 16
n_b = 8
n_0 = 8
n_test = 50

[train]
iterations = 6
seeds = 0, 1
eval_every = 3

[optimizer]
name = ca-adamw
"""


def _write(tmp_path, text, name="c.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_defaults_materialized():
    exp = parse_config_text(TINY)
    assert exp.train.iterations == 6 and exp.train.seeds == (0, 1)
    assert exp.values["optimizer"]["alpha_base"] == 0.1
    assert exp.spec.input_dim == 3 and exp.spec.hidden_width == 6
    text = resolved_text(exp)
    assert "alpha_base = 0.1" in text and "schema = 1" in text
    again = parse_config_text(text)
    assert again.values == exp.values


@pytest.mark.parametrize(
    "edit, line, col",
    [
        (("hidden_depth = 2", "hidden_depht = 2"), 10, 1),
        (("iterations = 6", "iterations = six"), 19, 14),
        (("n_f = 16", "n_f = 16\nn_f = 17"), 14, 1),
        (("[network]", "[netwrok]"), 8, 1),
        (("d = 2", "nu = 0.1"), 6, 1),
    ],
)
def test_config_errors_located(edit, line, col):
    with pytest.raises(ConfigError) as e:
        parse_config_text(TINY.replace(*edit))
    assert (e.value.line, e.value.column) == (line, col)


def test_config_missing_and_schema():
    with pytest.raises(ConfigError):
        parse_config_text(TINY.replace("problem = heat\n", ""))
    with pytest.raises(ConfigError):
        parse_config_text(TINY.replace("name = tiny", "name = tiny\nschema = 2"))
    with pytest.raises(ConfigError):
        parse_config_text("name = x\n")
    with pytest.raises(ConfigError):
        parse_config_text(TINY.replace("name = ca-adamw", "name = lbfgs"))


def test_run_artifacts_and_determinism(tmp_path, capsys):
    cfg = _write(tmp_path, TINY)
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_OK
    for seed in (0, 1):
        d = tmp_path / "a" / "tiny" / str(seed)
        for f in ("config.resolved.cfg", "metrics.csv", "window0.ckpt", "final.ckpt", "summary.json"):
            assert (d / f).exists()
        assert (d / "metrics.csv").read_bytes() == (tmp_path / "b" / "tiny" / str(seed) / "metrics.csv").read_bytes()
    summ = json.loads((tmp_path / "a" / "tiny" / "summary.json").read_text())
    assert summ["seeds"] == [0, 1] and summ["monitor_violations"] == 0
    per = [json.loads((tmp_path / "a" / "tiny" / str(s) / "summary.json").read_text())["rel_l2_u"] for s in (0, 1)]
    assert summ["mean"]["rel_l2_u"] == pytest.approx(np.mean(per), rel=1e-15)
    assert summ["best"]["rel_l2_u"] == min(per)


def test_resolved_config_reproduces_run(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["run", str(cfg), "--seeds", "1", "--out", str(tmp_path / "a")]) == EXIT_OK
    resolved = tmp_path / "a" / "tiny" / "config.resolved.cfg"
    assert main(["run", str(resolved), "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "tiny" / "1" / "metrics.csv").read_bytes()
    b = (tmp_path / "b" / "tiny" / "1" / "metrics.csv").read_bytes()
    assert a == b


def test_threads_match_serial(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["run", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    assert main(["run", str(cfg), "--threads", "2", "--out", str(tmp_path / "p")]) == EXIT_OK
    for seed in (0, 1):
        assert (tmp_path / "s" / "tiny" / str(seed) / "metrics.csv").read_bytes() == (tmp_path / "p" / "tiny" / str(seed) / "metrics.csv").read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, TINY.replace("hidden_depth", "hidden_depht"))
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 10" in err and "hidden_depht" in err


def test_divergence_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise DivergenceError("loss nan", iteration=3, window=0)

    monkeypatch.setattr(cli_main_mod, "time_march", boom)
    cfg = _write(tmp_path, TINY)
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == EXIT_DIVERGED
    s = json.loads((tmp_path / "tiny" / "0" / "summary.json").read_text())
    assert s["diverged"] and s["iteration"] == 3


def test_reduction_table_values():
    assert abs(reduction(5.66e-3, 1.34e-4) - 97.63) <= 0.01
    assert abs(reduction(1.44e-1, 8.20e-3) - 94.31) <= 0.01
    with pytest.raises(ZeroDivisionError):
        reduction(0.0, 1.0)


def test_compare(tmp_path, capsys):
    a = {"optimizer": "adamw", "seeds": [0, 1], "mean": {"rel_l2_u": 5.66e-3}}
    b = {"optimizer": "ca-adamw", "seeds": [1, 0], "mean": {"rel_l2_u": 1.34e-4}}
    rows = compare_summaries(a, b)
    assert rows[0][0] == "rel_l2_u" and abs(rows[0][3] - 97.63) <= 0.01
    for name, s in (("A", a), ("B", b)):
        (tmp_path / name).mkdir()
        (tmp_path / name / "summary.json").write_text(json.dumps(s))
    assert main(["compare", str(tmp_path / "A"), str(tmp_path / "B"), "--csv", str(tmp_path / "t.csv")]) == EXIT_OK
    assert "97.63%" in capsys.readouterr().out
    assert (tmp_path / "t.csv").read_text().splitlines()[1].endswith(",97.63")
    b["seeds"] = [0, 2]
    (tmp_path / "B" / "summary.json").write_text(json.dumps(b))
    assert main(["compare", str(tmp_path / "A"), str(tmp_path / "B")]) == EXIT_CONFIG
    b["seeds"] = [0, 1]
    b["schedule"] = {"lr": 1e-3}
    with pytest.raises(ValueError, match="schedules differ"):
        compare_summaries(a, b)


def test_run_records_schedule(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["run", str(cfg), "--seeds", "0", "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "tiny" / "summary.json").read_text())
    assert s["schedule"] == {"iterations": 6, "windows": 1, "lr": 1e-3, "warmup_frac": 0.05, "floor_frac": 0.01, "weight_decay": 0.0}


def test_dump_samples(tmp_path):
    cfg = _write(tmp_path, TINY)
    assert main(["dump-samples", str(cfg), "--out", str(tmp_path / "s")]) == EXIT_OK
    lines = (tmp_path / "s" / "interior.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,t,u_exact" and len(lines) == 17
    assert len((tmp_path / "s" / "test.csv").read_text().splitlines()) == 51


def test_landscape_command(tmp_path):
    text = TINY.replace("[optimizer]", "[landscape]\nn = 3\nextent = 0.5\n\n[optimizer]")
    cfg = _write(tmp_path, text)
    out = tmp_path / "g.txt"
    assert main(["landscape", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "3 0.5" and len(lines) == 4


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "capinn", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "compare" in out.stdout


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.cfg")) + sorted(root.glob("full_scale/*.cfg"))
    assert len(files) >= 10
    for f in files:
        from capinn.cli import load_config

        load_config(f)
