import json
import subprocess
import sys

import pytest

from minmove import records
from minmove.cli import main, parse_grid
from minmove.errors import InvalidInput


def run(tmp_path, *argv):
    return main([str(a) for a in argv])


def test_simulate_writes_monotone_csv(tmp_path):
    out = tmp_path / "t.csv"
    assert run(tmp_path, "simulate", "--gamma", 2, "--epsilon", 0.01, "--x0", 1, "--steps", 1000,
               "--w", "pwq", "--h", "quadratic", "--out", out) == 0
    cfg, meta, header, rows = records.read_csv(out)
    assert header == ["step", "t", "x"]
    assert len(rows) == 1000
    xs = [float(r[2]) for r in rows]
    assert all(b <= a for a, b in zip(xs, xs[1:]))
    assert cfg["epsilon"] == 0.01 and meta["monotone_direction"] == "nonincreasing"


@pytest.mark.parametrize("argv", [
    ["simulate", "--gamma", "2", "--x0", "1", "--steps", "10"],
    ["simulate", "--gamma", "2", "--epsilon", "0", "--x0", "1", "--steps", "10"],
    ["simulate", "--gamma", "2", "--epsilon", "0.1", "--x0", "1", "--steps", "10", "--w", "sawblade"],
    ["phase", "--gamma-grid", "1:2", "--t-grid", "0:1:3"],
    ["threshold", "--gamma", "2", "--method", "guess"],
    ["velocity", "--gamma", "2", "--T", "abc"],
    ["nonsense"],
])
def test_config_errors_exit_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "x")]) == 2


def test_velocity_json(tmp_path):
    out = tmp_path / "v.json"
    assert run(tmp_path, "velocity", "--gamma", 2, "--T", 0.5, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["f"] == 0.0 and doc["budget_exceeded"] is False
    assert {"gamma", "T", "f", "err_bound", "iters", "config"} <= set(doc)


def test_velocity_independent_of_start(tmp_path):
    docs = []
    for y0 in (0, 0.37):
        out = tmp_path / f"v{y0}.json"
        assert run(tmp_path, "velocity", "--gamma", 2, "--T", 0.8, "--y0", y0, "--tol", 1e-3, "--out", out) == 0
        docs.append(json.loads(out.read_text()))
    a, b = docs
    assert abs(a["f"] - b["f"]) <= a["err_bound"] + b["err_bound"]


def test_velocity_budget_exit_4_still_writes(tmp_path):
    out = tmp_path / "v.json"
    assert run(tmp_path, "velocity", "--gamma", 2, "--T", 0.5000001, "--tol", 1e-7, "--max-iters", 1024,
               "--out", out) == 4
    doc = json.loads(out.read_text())
    assert doc["budget_exceeded"] is True and doc["f"] is not None


def test_threshold(tmp_path):
    out = tmp_path / "th.json"
    assert run(tmp_path, "threshold", "--gamma", 2, "--method", "criterion", "--w", "pwq", "--out", out) == 0
    assert json.loads(out.read_text())["threshold"] == pytest.approx(0.5, abs=1e-6)


def test_phase_pinned_column(tmp_path):
    out = tmp_path / "p.csv"
    assert run(tmp_path, "phase", "--gamma-grid", "0.5:10:4", "--t-grid", "0:1:11", "--w", "pwq",
               "--tol", 1e-2, "--out", out) == 0
    _, _, header, rows = records.read_csv(out)
    assert header == ["gamma", "T", "f", "err_bound", "iters", "pinned"]
    assert len(rows) == 44
    for g, T, f, _, _, pinned in rows:
        g, T = float(g), float(T)
        assert (pinned == "true") == (T <= g / (2 + g))
        if pinned == "true":
            assert float(f) == 0.0


def test_phase_row_order_independent_of_workers(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    grid = ["--gamma-grid", "1:2:2", "--t-grid", "0.3:0.9:4", "--tol", "1e-2"]
    assert main(["phase", *grid, "--out", str(a), "--threads", "1"]) == 0
    assert main(["phase", *grid, "--out", str(b), "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_and_plot(tmp_path):
    out, png = tmp_path / "c.csv", tmp_path / "c.png"
    assert run(tmp_path, "compare", "--gamma", 2, "--x0", 1, "--epsilons", "0.1,0.05,0.025", "--t-end", 1,
               "--out", out, "--plot", png) == 0
    _, _, header, rows = records.read_csv(out)
    assert header == ["epsilon", "sup_distance"]
    d = [float(r[1]) for r in rows]
    assert all(b <= a + 1e-6 for a, b in zip(d, d[1:]))
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_limit_ode_csv(tmp_path):
    out = tmp_path / "l.csv"
    assert run(tmp_path, "limit-ode", "--gamma", 2, "--x0", 1, "--t-end", 2, "--out", out) == 0
    _, meta, header, rows = records.read_csv(out)
    assert header == ["t", "x"]
    assert float(rows[-1][1]) == pytest.approx(0.5, abs=1e-3)
    assert meta["pinned_at"] is not None


def test_rerun_is_byte_identical_and_config_round_trips(tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    argv = ["simulate", "--gamma", "2", "--epsilon", "0.05", "--x0", "0.8", "--steps", "50", "--w", "cosine"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["simulate", "--config", str(a), "--out", str(c)]) == 0
    assert a.read_bytes() == c.read_bytes()


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 2, "T": 0.3, "tol": 1e-2}))
    out = tmp_path / "v.json"
    assert main(["velocity", "--config", str(cfg), "--T", "1.5", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["T"] == 1.5 and doc["config"]["tol"] == 1e-2


def test_json_output_round_trips(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["threshold", "--gamma", "1", "--out", str(a)]) == 0
    assert main(["threshold", "--config", str(a), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_validate_potential(tmp_path):
    out = tmp_path / "r.json"
    assert run(tmp_path, "validate-potential", "--w", "cosine", "--out", out) == 0
    assert json.loads(out.read_text())["passed"] is True
    saw = tmp_path / "saw.json"
    saw.write_text(json.dumps({"kind": "tabulated", "values": [i / 50 for i in range(51)]}))
    assert run(tmp_path, "validate-potential", "--w", saw, "--out", out) == 2


def test_selftest_subset(capsys):
    assert main(["selftest", "--only", "2,3"]) == 0
    text = capsys.readouterr().out
    assert "criterion  2 [PASS]" in text and "2/2 criteria passed" in text


def test_module_entry_point(tmp_path):
    out = tmp_path / "v.json"
    proc = subprocess.run([sys.executable, "-m", "minmove", "velocity", "--gamma", "2", "--T", "0",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["f"] == 0.0


def test_parse_grid():
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("2:2:1") == [2.0]
    with pytest.raises(InvalidInput):
        parse_grid("1:0:3")


def test_reals_use_17_digits():
    assert records.fmt(0.1) == "0.10000000000000001"
    assert float(records.fmt(1 / 3)) == 1 / 3
    assert records.fmt(True) == "true"
