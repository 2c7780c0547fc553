import csv
import io
import json
import math
from fractions import Fraction

import pytest

from qpolya.cli import format_scalar, main
from qpolya.scalar import LogFloat


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def parse_csv(text):
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("# qpolya"):
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = json.loads(value)
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


PMF = ("pmf", "--dist", "qpolya", "--k", "2", "--n", "3", "--r", "1,1,1", "--m", "1", "--q", "0.5")


def test_pmf_example():
    code, text = run(*PMF)
    assert code == 0
    assert text.startswith("# qpolya ")
    meta, rows = parse_csv(text)
    assert len(rows) == 10 and meta["support_size"] == 10
    assert meta["normalization_defect"] <= 1e-12 and meta["check"] == "pass"
    assert [tuple(int(r[c]) for c in ("x1", "x2")) for r in rows][:3] == [(0, 0), (0, 1), (0, 2)]
    assert math.fsum(float(r["probability"]) for r in rows) == pytest.approx(1, abs=1e-12)


def test_exact_fields():
    code, text = run(*PMF[:-1], "1/2", "--exact")
    assert code == 0
    meta, rows = parse_csv(text)
    assert meta["normalization_defect"] == 0
    total = sum(Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows)
    assert total == 1
    for r in rows:
        p = Fraction(int(r["numerator"]), int(r["denominator"]))
        assert float(r["probability"]) == pytest.approx(float(p), rel=1e-16)


def test_csv_and_json_agree():
    _, text = run(*PMF)
    _, doc = run(*PMF, "--format", "json")
    doc = json.loads(doc)
    _, rows = parse_csv(text)
    assert doc["meta"]["version"].startswith("qpolya ")
    assert len(doc["rows"]) == len(rows)
    for a, b in zip(rows, doc["rows"]):
        assert float(f"{float(a['probability']):.15g}") == float(f"{b['probability']:.15g}")
        assert int(a["x1"]) == b["x1"]


def test_byte_stable():
    assert run(*PMF)[1] == run(*PMF)[1]
    args = ("sample", "--dist", "qpolya", "--n", "3", "--r", "1,1,1", "--m", "1", "--q", "0.5",
            "--samples", "20000", "--seed", "5")
    one = run(*args, "--threads", "1")
    four = run(*args, "--threads", "4")
    assert one == four


@pytest.mark.parametrize("argv", [
    ("--dist", "qhyper", "--n", "3", "--r", "2,1,2", "--q", "3/2"),
    ("--dist", "neg-qhyper", "--n", "3", "--r", "2,1", "--q", "0.7"),
    ("--dist", "inverse-qpolya", "--n", "2", "--r", "1,2", "--m", "1", "--q", "2", "--wmax", "25"),
    ("--dist", "inverse-qpolya", "--n", "2", "--r", "1,2", "--m", "-1", "--q", "1/2", "--exact"),
    ("--dist", "qmult2", "--n", "4", "--theta", "0.4,0.5", "--m", "1", "--q", "0.5"),
    ("--dist", "qmult2", "--n", "3", "--lambda", "1/3", "--m", "1", "--q", "2", "--exact"),
    ("--dist", "neg-qmult2", "--n", "2", "--lambda", "1/3", "--m", "1", "--q", "2", "--wmax", "40"),
    ("--dist", "qpolya", "--n", "3", "--r", "2,1", "--m", "0", "--q", "0.5"),
])
def test_pmf_distributions(argv):
    code, text = run("pmf", *argv)
    assert code == 0, text
    meta, rows = parse_csv(text)
    assert rows and meta["check"] == "pass"


def test_defective_inverse_table_is_flagged():
    code, text = run("pmf", "--dist", "inverse-qpolya", "--n", "2", "--r", "1,2", "--m", "1",
                     "--q", "0.5", "--wmax", "30")
    meta, _ = parse_csv(text)
    assert code == 0 and meta["proper"] is False


def test_sample_report(tmp_path):
    path = tmp_path / "draws.csv"
    code, text = run("sample", "--dist", "inverse-qpolya", "--n", "2", "--r", "1,2", "--m", "1",
                     "--q", "2", "--wmax", "30", "--samples", "30000", "--seed", "1",
                     "--samples-out", str(path), "--format", "json")
    assert code == 0
    doc = json.loads(text)
    meta = doc["meta"]
    assert meta["p_value"] > 1e-3 and meta["tv_distance"] < 0.02
    assert meta["sample_count"] == 30000
    with open(path) as fh:
        assert sum(1 for _ in fh) == 30001
    assert sum(r["observed"] for r in doc["rows"]) + meta["outside_table"] == 30000


def test_identity_check_small():
    code, text = run("identity-check", "--count", "6", "--inverse-count", "6", "--seed", "1")
    meta, rows = parse_csv(text)
    assert code == 0 and meta["check"] == "pass"
    assert {r["identity"] for r in rows} >= {"E27", "E210b", "E211", "E212"}


def test_converge():
    code, text = run("converge", "--t-min", "2", "--t-max", "6", "--q", "2", "--tolerance", "1")
    meta, rows = parse_csv(text)
    assert code == 0 and meta["strictly_decreasing"] is True
    assert [int(r["t"]) for r in rows] == [2, 3, 4, 5, 6]
    code, _ = run("converge", "--t-min", "2", "--t-max", "3", "--q", "2", "--tolerance", "1e-9")
    assert code == 1


def test_posterior_example():
    code, text = run("posterior", "--r-total", "2", "--n", "1", "--x", "1", "--q", "1/2", "--exact")
    assert code == 0
    meta, rows = parse_csv(text)
    got = {int(r["r1"]): Fraction(int(r["numerator"]), int(r["denominator"])) for r in rows}
    assert got == {1: Fraction(4, 7), 2: Fraction(3, 7)}


@pytest.mark.parametrize("argv", [
    ("pmf", "--n", "3", "--r", "1,1", "--m", "1", "--q", "1"),
    ("pmf", "--n", "3", "--r", "1,1", "--m", "1", "--q", "abc"),
    ("pmf", "--n", "3", "--m", "1", "--q", "0.5"),
    ("pmf", "--n", "3", "--r", "1,1", "--q", "0.5"),
    ("pmf", "--n", "3", "--r", "1,x", "--m", "1", "--q", "0.5"),
    ("pmf", "--n", "3", "--r", "1,1", "--k", "2", "--m", "1", "--q", "0.5"),
    ("pmf", "--dist", "qhyper", "--n", "3", "--r", "1,1", "--m", "2", "--q", "0.5"),
    ("pmf", "--dist", "qmult2", "--n", "3", "--theta", "1.5", "--m", "1", "--q", "0.5"),
    ("pmf", "--n", "3", "--r", "1,1", "--m", "1", "--q", "0.5", "--tolerance", "-1"),
    ("converge", "--t-min", "5", "--t-max", "2"),
    ("posterior", "--r-total", "3", "--n", "1", "--x", "2", "--q", "0.5"),
    ("sample", "--dist", "qmult2", "--n", "2", "--theta", "0.5", "--m", "1", "--q", "0.5"),
    ("nonsense",),
])
def test_usage_errors(argv, capsys):
    code, text = run(*argv)
    assert code == 2
    assert text == ""


def test_computation_error(capsys):
    code, _ = run("pmf", "--n", "3", "--r", "1,1", "--m", "-1", "--q", "0.5")
    assert code == 3
    assert "computation error" in capsys.readouterr().err


def test_version():
    code, _ = run("--version")
    assert code == 0


def test_format_scalar():
    assert format_scalar(Fraction(1, 3)) == "0.33333333333333331"
    assert format_scalar(Fraction(0)) == "0"
    tiny = format_scalar(Fraction(1, 10 ** 400))
    assert tiny.endswith("e-400") and float(tiny.split("e")[0]) == pytest.approx(1)
    huge = LogFloat.of(10.0) ** 500
    assert format_scalar(huge).endswith("e+500")
    assert format_scalar(0.25) == "0.25"
