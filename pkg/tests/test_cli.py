import json

import pytest

from convexapprox import harness
from convexapprox.cli import main
from convexapprox.verify import BoundRow


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_partition_check_exit_code(tmp_path, capsys):
    assert main(["partition-check", "--n", "2,8", "--grid", "1000", "--out", str(tmp_path)]) == 0
    assert "pass" in capsys.readouterr().out
    assert json.loads((tmp_path / "partition_facts.json").read_text())


def test_kernel_check(capsys):
    assert main(["kernel-check", "--n", "8"]) == 0
    assert "integrals inside: True" in capsys.readouterr().out


def test_build_writes_files(tmp_path):
    assert main(["build", "--function", "x2", "--r", "2", "--n", "16", "--out", str(tmp_path)]) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    approx = json.loads((tmp_path / "approximant.json").read_text())
    assert cert["passed"]
    for key in ("convexity_min", "endpoint_residuals", "ratio_1_5", "ratio_1_6", "ratio_1_7",
                "constants_used"):
        assert key in cert
    assert set(harness.CONSTANT_KEYS) <= set(cert["constants_used"])
    assert approx["polynomial"]["basis"] == "chebyshev"


def test_build_needs_function():
    with pytest.raises(SystemExit) as exc:
        main(["build"])
    assert exc.value.code == 2


@pytest.mark.parametrize("text, fragment", [
    ('{\n "functions": ["x2"],\n "r_values": [2,\n}', "line 4"),
    ('{"functions": ["x2"], "r_values": [2]}', "'n_values'"),
    ('{"functions": ["x2"], "r_values": [1], "n_values": [8]}', "'r_values[0]'"),
    ('{"functions": [3], "r_values": [2], "n_values": [8]}', "'functions[0]'"),
    ('{"functions": ["x2"], "r_values": [2], "n_values": [8], "params": {"mu": 3}}', "'params.mu'"),
    ('{"functions": ["x2"], "r_values": [2], "n_values": [8], "extra": 1}', "'extra'"),
    ('[1, 2]', "top level"),
])
def test_malformed_config(tmp_path, capsys, text, fragment):
    cfg = _write(tmp_path / "c.json", text)
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert fragment in capsys.readouterr().err


def test_sweep_deterministic(tmp_path):
    cfg = _write(tmp_path / "c.json",
                 '{"functions": ["x2"], "r_values": [2], "n_values": [8, 16], "seed": 3}')
    outs = []
    for i, jobs in enumerate((1, 1, 2)):
        d = tmp_path / f"run{i}"
        assert main(["sweep", "--config", cfg, "--out", str(d), "--jobs", str(jobs)]) == 0
        outs.append(((d / "sweep.csv").read_bytes(), (d / "sweep.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    lines = outs[0][0].decode().splitlines()
    assert lines[0] == ",".join(BoundRow.CSV_COLUMNS)
    assert [ln.split(",")[:3] for ln in lines[1:]] == [["x2", "2", "8"], ["x2", "2", "16"]]
    doc = json.loads(outs[0][1])
    assert doc["all_passed"]
    assert all(N >= n for N, n in zip(doc["N_detected"]["x2"]["2"], (8, 16)))


def test_failed_build_exit_code(tmp_path):
    # a non-convex function never yields a certificate
    assert main(["build", "--function", "x**3 + x**2", "--r", "2", "--n", "16",
                 "--out", str(tmp_path)]) == 1
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert not cert["passed"] and "second difference" in cert["failure"]


def test_stability_ratios():
    rows = [BoundRow("f", 2, n, v, 0.0, 0.0, 1.0, 0, 0, n) for n, v in ((8, 2.0), (16, 3.0))]
    st = harness.stability(rows)["f/r=2"]
    assert st["ratio_1_5"] == 1.5 and st["ratio_1_6"] == 1.0 and st["N_detected"] == [8, 16]
