import io
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from fracwell import cli
from fracwell.errors import ConfigError

IVP = {
    "command": "solve-ivp",
    "problem": {
        "alpha": 0.5, "a": 0.0, "T": 1.0, "init": [1.0],
        "rhs": {"name": "linear", "params": {"lambda": 1.0}},
    },
    "solver": {"n_steps": 64},
}
TVP = {
    "command": "solve-tvp",
    "problem": {
        "alpha": 0.5, "a": 0.0, "T": 1.0, "y_star": 2.0,
        "rhs": {"name": "linear", "params": {"lambda": 1.0}},
    },
    "solver": {"n_steps": 64},
}
SWEEP = {
    "command": "sweep",
    "problem": IVP["problem"],
    "solver": {"n_steps": 128},
    "sweep": {"mode": "start_shift"},
}


def run_cfg(doc, **kw):
    out, err = io.StringIO(), io.StringIO()
    cfg = cli.parse_config(json.dumps(doc), **kw)
    code = cli.run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


def test_parse_defaults():
    cfg = cli.parse_config(json.dumps(IVP))
    assert cfg.command == "solve-ivp"
    assert cfg.solver.n_steps == 64
    assert cfg.solver.tol_residual == 1e-8
    assert cfg.seed == 0


def test_parse_collects_all_violations():
    bad = {
        "command": "solve-ivp",
        "problem": {"alpha": 1.5, "a": 1.0, "T": 0.0, "init": [1.0],
                    "rhs": {"name": "nope"}},
        "solver": {"n_steps": 0},
        "extra": 1,
    }
    with pytest.raises(ConfigError) as err:
        cli.parse_config(json.dumps(bad))
    msgs = "\n".join(err.value.violations)
    assert len(err.value.violations) >= 5
    for needle in ("extra", "n_steps", "a < T", "ceil(alpha)=2", "registry entries"):
        assert needle in msgs


def test_parse_bad_json():
    with pytest.raises(ConfigError, match="line 1"):
        cli.parse_config("{oops")


def test_parse_tvp_alpha():
    doc = json.loads(json.dumps(TVP))
    doc["problem"]["alpha"] = 1.2
    with pytest.raises(ConfigError) as err:
        cli.parse_config(json.dumps(doc))
    assert any("0 < alpha < 1" in v for v in err.value.violations)


def test_main_exit_codes(tmp_path):
    good = tmp_path / "ivp.json"
    good.write_text(json.dumps(IVP))
    assert cli.main(["solve-ivp", "--config", str(good), "--out", str(tmp_path / "y.csv")]) == 0
    doc = json.loads(json.dumps(TVP))
    doc["problem"]["alpha"] = 1.2
    bad = tmp_path / "tvp.json"
    bad.write_text(json.dumps(doc))
    assert cli.main(["solve-tvp", "--config", str(bad)]) == 1
    assert cli.main(["solve-ivp", "--config", str(tmp_path / "missing.json")]) == 1


def test_blow_up_exit_code():
    doc = json.loads(json.dumps(IVP))
    doc["problem"].update(T=10.0, alpha=0.9)
    doc["problem"]["rhs"]["params"]["lambda"] = 10.0
    code, _, err = run_cfg(doc)
    assert code == 2 and "solver failed" in err


def test_subprocess_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "fracwell", "ml", "--alpha", "1", "--z", "0", "1"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "alpha,z,value"
    assert float(lines[2].split(",")[2]) == pytest.approx(2.718281828459045, rel=1e-15)


def test_ivp_csv(tmp_path):
    out = tmp_path / "y.csv"
    code, _, _ = run_cfg(IVP, output_path=str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,y" and len(lines) == 66
    assert lines[1] == "0,1"


@pytest.mark.parametrize(
    "doc, kw",
    [
        ({"command": "ml", "problem": {"alpha": 0.5, "z": [0, 1, -2]}}, {}),
        (IVP, {}),
        (TVP, {"method": "both"}),
        (TVP, {"method": "shooting"}),
        (SWEEP, {}),
    ],
)
def test_summary_schema(doc, kw, tmp_path):
    out = tmp_path / "res.csv"
    code, stdout, _ = run_cfg(doc, output_path=str(out), fmt="both", **kw)
    assert code == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert json.loads(stdout) == summary
    cmd = doc["command"]
    jsonschema.validate(summary, cli.SUMMARY_SCHEMAS[cmd])


def test_tvp_both_agree():
    code, stdout, _ = run_cfg(TVP, fmt="json", method="both")
    summary = json.loads(stdout)
    assert code == 0 and summary["max_difference"] <= 1e-7


def test_atomic_write_keeps_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "keep.csv"
    target.write_text("old\n")

    def boom(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", boom)
    code, _, err = run_cfg(IVP, output_path=str(target))
    assert code == 1 and "disk full" in err
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["keep.csv"]


def test_deterministic_across_threads(tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("FRACWELL_THREADS", threads)
        out = tmp_path / f"sweep{threads}.csv"
        assert run_cfg(SWEEP, output_path=str(out))[0] == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_fmt_num_round_trip():
    x = 0.1 + 0.2
    assert float(cli.fmt_num(x)) == x
