import csv
import json
import subprocess
import sys

import pytest

from semiclassical import __version__
from semiclassical.cli import list_text, main, resolve
from semiclassical.experiments import EXPERIMENTS, ConfigError
from semiclassical.report import dumps, gnuplot_script

NAMES = [
    "identity-check",
    "bergman-kernel",
    "heisenberg",
    "metaplectic",
    "factorization",
    "taylor-residual",
    "weyl-algebra",
    "weight-props",
    "toy-spectrum",
    "norm-decay",
    "band-demo",
]


def load(path):
    return json.loads(path.read_text(encoding="utf-8"))


def strip_time(text):
    return "\n".join(line for line in text.splitlines() if '"timestamp"' not in line)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert [line.split()[0] for line in out] == NAMES
    assert all(len(line.split(None, 1)) == 2 for line in out)
    assert list_text() == list_text()


def test_unknown_experiment(capsys, tmp_path):
    assert main(["run", "nope", "--out", str(tmp_path / "x")]) == 2
    err = capsys.readouterr().err
    assert "toy-spectrum" in err
    assert not (tmp_path / "x").exists()


def test_malformed_config_writes_nothing(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json", encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "toy-spectrum", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


@pytest.mark.parametrize(
    "cfg",
    [
        {"params": {"L": -1}},
        {"params": {"nope": 1}},
        {"params": {"N": 7}},
        {"params": {"t_list": "abc"}},
        {"seed": -3},
        {"unknown": 1},
        [1, 2],
    ],
)
def test_invalid_configs(tmp_path, cfg):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "out"
    assert main(["run", "toy-spectrum", "--config", str(p), "--out", str(out)]) == 2
    assert not out.exists()


def test_identity_check_run(tmp_path):
    out = tmp_path / "id"
    assert main(["run", "identity-check", "--out", str(out), "--no-png"]) == 0
    res = load(out / "result.json")
    assert res["metrics"]["max_relative_error"] < 1e-6
    assert res["version"] == __version__
    assert res["config"]["params"]["N"] == 128
    rows = list(csv.reader((out / "errors.csv").open(encoding="utf-8")))
    assert rows[0] == ["vector", "width", "center", "relative_error"]
    assert len(rows) == 21


def test_toy_spectrum_artifacts(tmp_path):
    out = tmp_path / "toy"
    assert main(["run", "toy-spectrum", "--out", str(out)]) == 0
    res = load(out / "result.json")
    top = res["metrics"]["top_moduli"][:3]
    assert top == pytest.approx([1.0, 0.36787944117144233, 0.1353352832366127], rel=1e-3)
    script = (out / "plot.gp").read_text(encoding="utf-8")
    assert "'eigenvalues.csv'" in script
    assert (out / "plot.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert set(res["files"]) == {"eigenvalues", "plot_script", "plot_png"}


def test_determinism(tmp_path):
    texts = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", "weight-props", "--out", str(out), "--seed", "7", "--set", "samples=500", "--set", "pairs=2000"]) == 0
        texts.append((out / "result.json").read_text(encoding="utf-8"))
        assert (out / "temperate.csv").read_bytes()
    assert strip_time(texts[0]) == strip_time(texts[1])
    assert load(tmp_path / "a" / "result.json")["seed"] == 7


def test_invariant_failure_exit_code(tmp_path):
    out = tmp_path / "f"
    assert main(["run", "band-demo", "--out", str(out), "--set", "kmax_isotropic=2", "--no-png"]) == 0
    assert main(["run", "identity-check", "--out", str(out), "--set", "tol=1e-30", "--no-png"]) == 1
    res = load(out / "result.json")
    assert res["passed"] is False
    assert res["failures"] == ["resolution of identity: max relative error"]


def test_precedence(tmp_path):
    cfg = {"seed": 3, "params": {"pairs": 10, "box": 2.0}}
    r = resolve("bergman-kernel", cfg, {"pairs": 5}, seed=None)
    assert r["params"]["pairs"] == 5 and r["params"]["box"] == 2.0 and r["seed"] == 3
    r = resolve("bergman-kernel", cfg, {}, seed=9)
    assert r["seed"] == 9 and r["params"]["pairs"] == 10
    r = resolve("bergman-kernel", {}, {})
    assert r["params"] == EXPERIMENTS["bergman-kernel"].defaults and r["seed"] == 0


def test_config_type_checks():
    with pytest.raises(ConfigError):
        resolve("toy-spectrum", {"params": {"N": 96.5}}, {})
    with pytest.raises(ConfigError):
        resolve("toy-spectrum", {"experiment": "band-demo"}, {})
    r = resolve("toy-spectrum", {"params": {"t": 2}}, {})
    assert isinstance(r["params"]["t"], float)


def test_parallel_sweep(tmp_path):
    out = tmp_path / "sweep"
    assert main(["run", "toy-spectrum", "--out", str(out), "--set", "t_list=[0.5, 1.5]", "--parallel", "--no-png"]) == 0
    sweep = load(out / "result.json")["metrics"]["sweep"]
    assert [s["t"] for s in sweep] == [0.5, 1.5]
    assert sweep[1]["moduli"][1] == pytest.approx(0.22313016014842982, rel=1e-3)


def test_dumps_stable():
    a = dumps({"b": 1, "a": [1.5, {"y": float("nan"), "x": 2}]})
    assert a == dumps({"a": [1.5, {"x": 2, "y": float("nan")}], "b": 1})
    assert json.loads(a)["a"][1]["y"] == "nan"


def test_gnuplot_script_references_tables():
    tables = {"t": {"header": ["x", "y"], "rows": [[1, 2]]}}
    s = gnuplot_script([{"table": "t", "x": "x", "y": ["y"], "title": "demo", "logy": True}], tables)
    assert "'t.csv' using 1:2" in s and "set logscale y" in s


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "semiclassical", "list"], capture_output=True, text=True, check=True)
    assert len(r.stdout.splitlines()) == 11
