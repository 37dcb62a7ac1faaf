import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

import henon.search as search
from henon.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def schema(name):
    return json.loads(resources.files("henon").joinpath("schemas", f"{name}.schema.json").read_text())


def test_height_examples(capsys):
    code, d = run_json(capsys, "height", "-b", "-9/16", "-P", "1/4,-3/4")
    assert code == 0 and d["total"] <= d["error_radius"] + 1e-9
    code, d = run_json(capsys, "height", "-b", "0", "-P", "0,0")
    assert code == 0 and d["total"] == 0 and d["error_radius"] == 0
    code, d = run_json(capsys, "height", "-b", "0", "-P", "0,2")
    assert code == 0
    assert d["h_plus"] == pytest.approx(0.7241371580, abs=1e-6)
    assert d["h_minus"] == pytest.approx(0.3311557729, abs=1e-6)
    assert d["total"] == pytest.approx(1.0552929309, abs=1e-6)
    jsonschema.validate(d, schema("height"))


def test_height_text_and_csv(capsys):
    code, out, _ = run(capsys, "height", "-b", "1/9", "-P", "0,1/9")
    assert code == 0 and "2 log 3" in out
    code, out, _ = run(capsys, "height", "-b", "1/9", "-P", "0,1/9", "--format", "csv")
    assert out.splitlines()[0].startswith("place,direction,kind")


def test_verify_examples(capsys):
    code, d = run_json(capsys, "verify", "-b", "-1/4")
    assert code == 0 and d["verdict"] == "VerifiedBySearch" and d["periods"] == [1, 1, 2]
    code, d = run_json(capsys, "verify", "-b", "1/2")
    assert code == 0 and d["verdict"] == "VacuousNonSquareDenominator"
    code, d = run_json(capsys, "verify", "-b", "-9/16")
    assert code == 0 and d["verdict"].startswith("Verified") and d["periods"] == [1, 1, 2, 8]
    code, d = run_json(capsys, "verify", "-b", "-9/16", "--primes", "5,7", "--force-search")
    assert d["verdict"] == "VerifiedBySearch" and d["primes"] == [5, 7]


def test_verify_refuted_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(search, "ALLOWED_PERIODS", frozenset({1}))
    code, d = run_json(capsys, "verify", "-b", "-1/4")
    assert code == 4 and d["verdict"] == "Refuted" and len(d["witness"]) == 2
    jsonschema.validate(d, schema("verify"))


def test_batch_examples(capsys, tmp_path):
    code, d = run_json(capsys, "batch", "--max-height", "1")
    assert code == 0 and d["total"] == 3 and d["counts"]["Refuted"] == 0
    ck, rep = tmp_path / "ck.tsv", tmp_path / "r.json"
    code, _, _ = run(capsys, "batch", "--max-height", "5", "--checkpoint", str(ck), "--report", str(rep))
    assert code == 0 and json.loads(rep.read_text())["total"] == len(ck.read_text().splitlines())
    first = rep.read_bytes()
    code, _, _ = run(capsys, "batch", "--max-height", "5", "--checkpoint", str(ck), "--resume", "--report", str(rep))
    assert code == 0 and rep.read_bytes() == first


def test_batch_io_error(capsys, tmp_path):
    code, _, err = run(capsys, "batch", "--max-height", "2", "--checkpoint", str(tmp_path / "no" / "ck.tsv"))
    assert code == 5 and "I/O" in err


def test_batch_workers_env(capsys, monkeypatch):
    monkeypatch.setenv("HENON_WORKERS", "2")
    code, d = run_json(capsys, "batch", "--max-height", "4")
    assert code == 0 and d["counts"]["Refuted"] == 0
    monkeypatch.setenv("HENON_WORKERS", "0")
    code, _, _ = run(capsys, "batch", "--max-height", "2")
    assert code == 2


def test_family_examples(capsys):
    code, d = run_json(capsys, "family", "-b", "t", "-P", "0,0", "--samples", "10,100,1000")
    assert code == 0
    assert d["divisor_plus"] == [{"place": "inf", "weight": "1/2", "degree": 1}]
    assert d["divisor_minus"] == [{"place": "inf", "weight": "1/2", "degree": 1}]
    ratios = [r["ratio"] for r in d["samples"]]
    assert all(abs(a - 1) >= abs(b - 1) for a, b in zip(ratios, ratios[1:])) and abs(ratios[-1] - 1) < 0.05
    jsonschema.validate(d, schema("family"))
    code, out, _ = run(capsys, "family", "-b", "5", "-P", "1,1", "--isotriviality")
    assert code == 0 and "isotrivial: true" in out
    code, out, _ = run(capsys, "family", "-b", "t^2+2t", "-P", "0,0", "--isotriviality")
    assert code == 0 and "isotrivial: false" in out
    code, out, _ = run(capsys, "family", "-f", "y^2+2ty+t^2", "--isotriviality")
    assert "isotrivial: true" in out
    code, out, _ = run(capsys, "family", "-b", "t", "-P", "0,0", "--samples", "10", "--format", "csv")
    assert out.splitlines()[0] == "t0,h_t0,hhat,ratio,status"


def test_family_nonconstant_a(capsys):
    code, _, _ = run(capsys, "family", "-b", "t", "-a", "t", "--isotriviality")
    assert code == 6


def test_family_cap_exceeded(capsys):
    # (0, 0) only enters the escape region at infinity after one step
    code, _, err = run(capsys, "family", "-b", "t", "-P", "0,0", "--cap", "0")
    assert code == 3 and "cap" in err


def test_orbit(capsys):
    code, out, _ = run(capsys, "orbit", "-b", "-9/16", "-P", "1/4,-3/4")
    assert code == 0 and out.strip() == "Periodic(8)"
    code, d = run_json(capsys, "orbit", "-b", "0", "-P", "0,2")
    assert d["status"] == "escaped_forward"
    jsonschema.validate(d, schema("orbit"))


@pytest.mark.parametrize("argv", [
    ["height", "-b", "1.5", "-P", "0,0"],
    ["height", "-b", "x", "-P", "0,0"],
    ["height", "-b", "0", "-P", "0"],
    ["verify"],
    ["nonsense"],
    ["batch", "--max-height", "0"],
    ["family", "-b", "t+", "-P", "0,0"],
])
def test_parse_errors_exit_2(capsys, argv):
    assert main(argv) == 2


@pytest.mark.parametrize("name,argv", [
    ("verify_minus_quarter", ["verify", "-b", "-1/4"]),
    ("verify_half", ["verify", "-b", "1/2"]),
    ("verify_minus_9_16", ["verify", "-b", "-9/16"]),
    ("batch_t3", ["batch", "--max-height", "3"]),
    ("family_t", ["family", "-b", "t", "-P", "0,0", "--isotriviality"]),
    ("orbit_period8", ["orbit", "-b", "-9/16", "-P", "1/4,-3/4"]),
    ("height_origin", ["height", "-b", "0", "-P", "0,0"]),
])
def test_golden_and_schema(capsys, name, argv):
    code, d = run_json(capsys, *argv)
    assert code == 0
    assert d == json.loads((GOLDEN / f"{name}.json").read_text())
    jsonschema.validate(d, schema(name.split("_")[0]))


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "henon", "verify", "-b", "-1/4", "--format", "json"],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and json.loads(r.stdout)["periods"] == [1, 1, 2]
