import csv
import json

import numpy as np
import pytest

from seclist.channels import bsc, noiseless, save_channel
from seclist.cli import main
from seclist.codes import ListCode, ThresholdDecoder, dump_code, load_code, save_code


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_capacity_bsc_file(tmp_path, capsys):
    p = tmp_path / "bsc.json"
    save_channel(bsc(0.1), p)
    rc, out, _ = run(capsys, "capacity", "--channel", str(p), "--json", str(tmp_path / "c.json"))
    assert rc == 0
    assert "C(W)      = 0.531004" in out
    doc = json.loads((tmp_path / "c.json").read_text())
    assert doc["C"] == pytest.approx(0.531004, abs=1e-6)
    assert out.startswith("params: ")


def test_capacity_noiseless4(capsys):
    rc, out, _ = run(capsys, "capacity", "--channel", "noiseless:4")
    assert rc == 0 and "C(W)      = 2.000000" in out


def test_malformed_channel(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    rc, _, err = run(capsys, "capacity", "--channel", str(p))
    assert rc == 2 and err.startswith("error:")
    rc, _, _ = run(capsys, "capacity", "--channel", str(tmp_path / "missing.json"))
    assert rc == 2
    rc, _, _ = run(capsys, "capacity", "--channel", "bsc:1.5")
    assert rc == 2


def test_region_csv(tmp_path, capsys):
    out_csv = tmp_path / "r.csv"
    rc, out, _ = run(capsys, "region", "--channel", "bsc:0.1", "--grid", "512", "--out", str(out_csv))
    assert rc == 0
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 512
    assert "cor56: applies" in out
    rc, _, _ = run(capsys, "region", "--channel", "bsc:0.1", "--grid", "1", "--out", str(out_csv))
    with open(out_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert rc == 0 and len(rows) == 1
    rc, _, _ = run(capsys, "region", "--channel", "bsc:0.1", "--grid", "0")
    assert rc == 2


def test_region_z_channel(capsys):
    rc, out, _ = run(capsys, "region", "--channel", "z:0.3", "--grid", "32")
    assert rc == 0 and "cor56: does not apply" in out


def test_build_eval_roundtrip(tmp_path, capsys):
    code_p = tmp_path / "code.json"
    rc, out, _ = run(capsys, "build", "--channel", "bsc:0.1", "--n", "6", "--r1", "0.7",
                     "--r2", "0.5", "--seed", "3", "--attempts", "2", "--out", str(code_p))
    assert rc == 0 and "seed=3" in out
    before = code_p.read_bytes()
    rc, out, _ = run(capsys, "eval", "--channel", "bsc:0.1", "--code", str(code_p), "--seed", "1",
                     "--out", str(tmp_path / "rep.json"))
    assert rc == 0
    assert code_p.read_bytes() == before
    assert dump_code(load_code(code_p)).encode() == before
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert 0 <= rep["eps_A"] <= 1 and rep["delta_D"] is not None


def test_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        rc, out, _ = run(capsys, "build", "--channel", "bsc:0.1", "--n", "6", "--r1", "0.7",
                         "--r2", "0.5", "--seed", "11", "--attempts", "2",
                         "--json", str(tmp_path / f"b{k}.json"))
        outs.append(out.replace(f"b{k}.json", "b.json"))
    assert outs[0] == outs[1]
    assert (tmp_path / "b0.json").read_bytes() == (tmp_path / "b1.json").read_bytes()


def test_hypothesis_violation_exit(capsys):
    rc, _, err = run(capsys, "build", "--channel", "bsc:0.1", "--n", "6", "--r1", "0.5",
                     "--r2", "0.4", "--seed", "0")
    assert rc == 4 and "eps3" in err


def test_over_budget_exit(tmp_path, capsys, monkeypatch):
    code = ListCode(n=8, M=2, L=1, codewords=np.array([[0] * 8, [1] * 8]),
                    decoder=ThresholdDecoder(np.array([0.5, 0.5]), 0.2))
    p = tmp_path / "c.json"
    save_code(code, p)
    monkeypatch.setenv("SLX_BUDGET", "16")
    rc, _, err = run(capsys, "eval", "--channel", "bsc:0.1", "--code", str(p), "--exact")
    assert rc == 3 and "--mc" in err
    rc, out, _ = run(capsys, "eval", "--channel", "bsc:0.1", "--code", str(p), "--mc",
                     "--trials", "500", "--seed", "2", "--restarts", "1")
    assert rc == 0 and "eps_A" in out


def test_commit_and_auction(tmp_path, capsys):
    W = noiseless(2)
    words = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    code = ListCode(n=2, M=4, L=1, codewords=words,
                    decoder=ThresholdDecoder(np.array([0.5, 0.5]), 0.5))
    p = tmp_path / "c.json"
    save_code(code, p)
    rc, out, _ = run(capsys, "commit", "--channel", "noiseless:2", "--code", str(p), "--seed", "1",
                     "--runs", "20", "--out", str(tmp_path / "t.jsonl"))
    assert rc == 0 and "accept rate 1.0000" in out
    assert len((tmp_path / "t.jsonl").read_text().splitlines()) == 20
    rc, _, _ = run(capsys, "commit", "--channel", "noiseless:2", "--code", str(p), "--t", "3")
    assert rc == 2
    rc, out, _ = run(capsys, "auction", "--channel", "noiseless:2", "--code", str(p),
                     "--bids", "1:10,2:5", "--seed", "0", "--runs", "5")
    assert rc == 0 and "failure rate 0.0000" in out
    rc, _, _ = run(capsys, "auction", "--channel", "noiseless:2", "--code", str(p),
                   "--bids", "9:1", "--seed", "0")
    assert rc == 2
    rc, _, _ = run(capsys, "auction", "--channel", "noiseless:2", "--code", str(p),
                   "--bids", "garbage", "--seed", "0")
    assert rc == 2
    rc, _, _ = run(capsys, "eval", "--channel", "noiseless:3", "--code", str(p))
    assert rc == 2
