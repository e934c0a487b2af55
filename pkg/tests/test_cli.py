import json
import subprocess
import sys

import pytest

from klab.cli import main
from klab.graph import read_graph


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sample_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "sample", "--n", "100", "--d", "3", "--seed", "4", "--out", str(a))[1] == "edges: 150\n"
    run(capsys, "sample", "--n", "100", "--d", "3", "--seed", "4", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    G = read_graph(a)
    assert G.is_regular(3) and G.n == 100


def test_bad_input_exit_codes(capsys):
    code, _, err = run(capsys, "sample", "--n", "5", "--d", "3")
    assert code == 2 and "OddProduct" in err
    code, _, err = run(capsys, "switchtest", "--n", "10", "--d", "3", "--ell", "4", "--trials", "2")
    assert code == 2 and "BallTooLarge" in err
    code, _, _ = run(capsys, "spectrum", "--n", "20")
    assert code == 2


def test_size_cap_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("KLAB_DENSE_CAP", "10")
    code, _, err = run(capsys, "spectrum", "--n", "20", "--d", "3")
    assert code == 2 and "SizeCapExceeded" in err


def test_switchtest(capsys):
    code, out, _ = run(capsys, "switchtest", "--n", "6", "--d", "3", "--trials", "50", "--samples", "3000", "--seed", "1")
    data = json.loads(out)
    assert code == 0
    assert data["involution_passes"] == data["regularity_passes"] == 50
    assert data["labelled_graphs"] == 70
    assert data["chi2_p_direct"] > 1e-4 and data["chi2_p_composite"] > 1e-4


def test_localcheck_jsonl(tmp_path, capsys):
    args = ["localcheck", "--n", "200", "--d", "3", "--seed", "2", "--r", "3", "--eta", "0.2", "--re", "0.5",
            "--pairs", "50", "--near-pairs", "50", "--threads", "2"]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    run(capsys, *args, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()
    lines = [json.loads(x) for x in a.read_text().splitlines()]
    assert lines[0]["header"]["command"] == "localcheck"
    assert lines[1]["metric"] == "local_law" and lines[-1]["metric"] == "local_law_summary"


def test_localcheck_grid(capsys):
    code, out, _ = run(capsys, "localcheck", "--n", "150", "--d", "3", "--grid-re", "3", "--grid-eta", "2",
                       "--pairs", "10", "--near-pairs", "10", "--threads", "1")
    lines = out.splitlines()
    assert code == 0 and json.loads(lines[-1])["value"]["points"] == len(lines) - 2


def test_density_and_spectrum(capsys):
    code, out, err = run(capsys, "density", "--n", "400", "--d", "3", "--bins", "20")
    assert code == 0 and out.count("\n") == 22 and err.startswith("KS:")
    code, out, _ = run(capsys, "density", "--iid", "--n", "4000", "--d", "3")
    assert code == 0
    code, out, _ = run(capsys, "spectrum", "--n", "100", "--d", "3", "--eta", "0.1", "--re", "0.5")
    data = json.loads(out)
    assert code == 0 and len(data["eigenvalues"]) == 100 and data["m_diff"] < 0.5


def test_nbwcheck(capsys):
    code, out, _ = run(capsys, "nbwcheck", "--n", "200", "--d", "3", "--pairs", "50")
    data = json.loads(out)
    assert code == 0 and data["violations"] == 0 and data["checked"] > 0


def test_graph_file_input(tmp_path, capsys):
    f = tmp_path / "g.json"
    run(capsys, "sample", "--n", "60", "--d", "4", "--out", str(f))
    code, out, _ = run(capsys, "spectrum", "--graph", str(f))
    assert code == 0 and json.loads(out)["d"] == 4


@pytest.mark.slow
def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "klab.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "klab" in out.stdout
