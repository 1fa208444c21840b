import json
from fractions import Fraction

import pytest

from isingrc import cli, measures
from isingrc.reports import Check


@pytest.fixture
def k3_file(tmp_path):
    path = tmp_path / "k3.txt"
    path.write_text("# triangle\n3 3\n0 1\n1 2\n0 2\n")
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def records(text):
    return [json.loads(line) for line in text.splitlines()]


def test_verify_triangle_passes(capsys, k3_file):
    code, out, _ = run(capsys, "verify", "--graph", k3_file, "--beta", "2")
    assert code == 0
    recs = records(out)
    assert all(r["schema_version"] == 1 for r in recs)
    header, summary = recs[0], recs[-1]
    assert header["params"] == {"beta": "2/1", "p_rc": "1/2", "p_even": "1/4", "p_prime": "1/3", "q": "2/1"}
    assert summary["pass"] and summary["failed"] == 0
    checks = [r for r in recs if "check" in r]
    assert all("mode" in r for r in checks)
    names = [r["check"] for r in checks]
    assert names == sorted(names)
    for family in ("equivalence", "even_count", "distortion", "holes", "worm_paths", "lifted_flow", "matrix"):
        assert any(n.startswith(family) for n in names)


def test_verify_k4_runs(capsys):
    code, out, _ = run(capsys, "verify", "--builtin", "K4", "--p", "1/2")
    assert code == 0 and records(out)[-1]["pass"]


def test_self_loop_is_input_error(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n0 1\n1 1\n")
    code, out, err = run(capsys, "verify", "--graph", bad, "--beta", "2")
    assert code == 2 and out == ""
    assert "line 3" in err and "self-loop" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["exact", "--builtin", "K3", "--beta", "1/2"],
        ["exact", "--builtin", "K3", "--p", "3/2"],
        ["verify", "--builtin", "K3", "--p", "1/2", "--q", "3"],
        ["sample", "--builtin", "K3", "--p", "1", "--steps", "3"],
        ["sample", "--builtin", "K3", "--p", "1/2", "--initial", "64"],
        ["mix", "--builtin", "K3", "--p", "1", "--kind", "rc"],
    ],
)
def test_bad_parameters_exit_two(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_missing_file_exits_two(capsys, tmp_path):
    assert run(capsys, "exact", "--graph", tmp_path / "nope.txt", "--p", "1/2")[0] == 2


def test_beta_and_p_are_exclusive(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["exact", "--builtin", "K3", "--beta", "2", "--p", "1/2"])
    assert info.value.code == 2


def test_guard_exits_three(capsys):
    code, _, err = run(capsys, "verify", "--builtin", "K4", "--p", "1/2", "--guard-m", "5")
    assert code == 3 and "m=6" in err


def test_failed_check_exits_one(capsys, monkeypatch):
    def broken(g, max_edges=None):
        return [Check("even_count.graph", g.describe(), {}, 1, 2)]

    monkeypatch.setattr(measures, "even_count_check", broken)
    code, out, _ = run(capsys, "verify", "--builtin", "K3", "--p", "1/2")
    assert code == 1 and records(out)[-1]["failed"] == 1


def test_exact_triangle(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "K3", "--beta", "2")
    values = {r["quantity"]: r["value"] for r in records(out)[1:]}
    assert code == 0
    assert values["Z_ising"] == values["Z_rc_rescaled"] == values["Z_even_rescaled"] == "28/1"
    assert values["Z_even"] == "7/16" and values["Z_two_holes"] == "9/16"


def test_exact_csv_laws(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "single_edge", "--p", "1/2", "--format", "csv")
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    assert lines[1] == "subset_bitmask,pi_rc,pi_even,pi_worm"
    assert lines[2].startswith("0,2/3,1/1,")


def test_sample_zero_steps_echoes_initial(capsys):
    code, out, _ = run(capsys, "sample", "--builtin", "K3", "--p", "1/2", "--steps", "0", "--initial", "5")
    assert code == 0 and records(out)[-1] == {"schema_version": 1, "record": "final", "state": 5, "edges": [0, 2]}


def test_sample_trace_and_histogram(capsys):
    code, out, _ = run(capsys, "sample", "--builtin", "K3", "--p", "1/2", "--steps", "20", "--trace", "--seed", "4")
    steps = [r for r in records(out) if "t" in r]
    assert [r["t"] for r in steps] == list(range(1, 21))
    assert set(steps[0]) == {"schema_version", "t", "edge", "kind", "accepted"}
    code, out, _ = run(capsys, "sample", "--builtin", "K3", "--p", "1/2", "--samples", "500", "--format", "csv")
    lines = out.splitlines()
    assert lines[1] == "subset_bitmask,count,frequency"
    assert sum(int(l.split(",")[1]) for l in lines[2:]) == 500


def test_mix_single_edge(capsys):
    code, out, _ = run(capsys, "mix", "--builtin", "single_edge", "--p", "1/2", "--eps", "1/4")
    rep = records(out)[1]
    assert code == 0
    assert round(rep["bound_polynomial"]) == 266
    assert rep["tau_exact"] <= rep["bound_polynomial"]
    assert rep["mode"] == "rational" and rep["pass"]


def test_congestion_report_and_dump(capsys, tmp_path):
    dump = tmp_path / "traffic.csv"
    code, out, _ = run(capsys, "congestion", "--builtin", "K3", "--p", "1/2", "--transitions-csv", dump)
    rep = records(out)[1]
    assert code == 0 and rep["bound"] == "5832/1" and rep["pass"]
    assert Fraction(rep["max_congestion"]) <= 5832
    rows = dump.read_text().splitlines()
    assert rows[0] == "from,to,kind,traffic,bounds,pass"
    assert len(rows) == 1 + 8 * 4


def test_bench_reports_both_chains(capsys):
    code, out, _ = run(capsys, "bench", "--builtin", "C4", "--p", "1/2", "--steps", "2000")
    recs = records(out)[1:]
    assert code == 0 and [r["chain"] for r in recs] == ["rc", "sw"]
    assert all(r["tau_int_sweeps"] >= 0.5 for r in recs)


@pytest.mark.parametrize(
    "argv",
    [
        ["sample", "--builtin", "K4", "--p", "1/2", "--steps", "300", "--trace", "--seed", "7"],
        ["bench", "--builtin", "K3", "--p", "1/2", "--steps", "500", "--seed", "3"],
        ["verify", "--builtin", "C4", "--beta", "3"],
    ],
)
def test_output_is_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
