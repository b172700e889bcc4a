import csv
import io
import json
import re
import subprocess
import sys

import pytest

from strikespan import __version__
from strikespan.cli import main

BS = "spot=100,vol=0.2,rate=0,T=1"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def quotes(tmp_path):
    f = tmp_path / "quotes.csv"
    f.write_text("strike,call_price\n90,12\n100,6\n110,3\n")
    return f


def test_price_all_forms_agree(capsys):
    code, out, _ = run(capsys, "price", "--payoff", "call:K=100", "--bs", BS, "--form", "all")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["version"] == __version__ and doc["config"]["payoff"] == "call:K=100"
    forms = doc["result"]["forms"]
    values = [forms[f]["value"] for f in ("theorem1", "lebesgue", "bick", "bl", "convex")]
    assert max(values) - min(values) < 2e-4
    assert forms["agreement"]["max_abs_spread"] < 2e-4


def test_price_table_digital(capsys, quotes):
    code, out, _ = run(capsys, "price", "--payoff", "digital_ge:K=95", "--table", str(quotes), "--discount", "0.9")
    assert code == 0
    v = json.loads(out)["result"]["forms"]["theorem1"]["value"]
    assert v == pytest.approx(0.6, abs=1e-15)  # D * (slope / D)


def test_non_convex_quotes_exit_3(capsys, tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("strike,call_price\n90,10\n100,9\n110,3\n")
    code, _, err = run(capsys, "price", "--payoff", "call:K=100", "--table", str(f), "--discount", "1")
    assert code == 3 and "(90, 100, 110)" in err


def test_exponential_exit_2(capsys):
    code, _, err = run(capsys, "price", "--payoff", "exponential:rate=1", "--bs", BS)
    assert code == 2 and "tail condition" in err


@pytest.mark.parametrize("argv", [
    ["price", "--bs", BS],
    ["price", "--payoff", "call:K=100"],
    ["price", "--payoff", "call:K=100", "--bs", BS, "--table", "x.csv"],
    ["price", "--payoff", "rainbow:K=1", "--bs", BS],
    ["price", "--payoff", "missing.json", "--bs", BS],
    ["price", "--payoff", "call:K=100", "--table", "no_such.csv"],
    ["hedge", "--bs", BS],
])
def test_data_errors_exit_3(capsys, argv):
    assert run(capsys, *argv)[0] == 3


def test_mc_needs_seed(capsys, monkeypatch):
    monkeypatch.delenv("STRIKESPAN_SEED", raising=False)
    assert run(capsys, "price", "--payoff", "call:K=100", "--mc", "n=1000")[0] == 3
    monkeypatch.setenv("STRIKESPAN_SEED", "7")
    code, out, _ = run(capsys, "price", "--payoff", "call:K=100", "--mc", "n=1000")
    assert code == 0 and json.loads(out)["result"]["backend"]["mc"]["seed"] == 7


def test_payoff_spec_file(capsys, tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"family": "straddle", "params": {"K": 100}}))
    code, out, _ = run(capsys, "price", "--payoff", str(f), "--bs", BS, "--format", "table")
    assert code == 0 and "theorem1" in out


def test_hedge_csv_rows(capsys, tmp_path):
    out_csv = tmp_path / "h.csv"
    code, out, _ = run(capsys, "hedge", "--payoff", "straddle:K=100", "--bs", BS, "--nodes", "257",
                       "--hi", "400", "--out", str(out_csv))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    kinds = [r["instrument"] for r in rows]
    assert kinds.count("cash") == 1 and kinds.count("digital") == 256
    assert set(rows[0]) == {"instrument", "strike", "strike2", "weight", "flavor"}
    rep = json.loads(out)["result"]["report"]
    assert rep["rows"] == 257


def test_callspread_hedge_of_piecewise_linear_is_exact(capsys):
    code, out, _ = run(capsys, "hedge", "--payoff", "butterfly:K1=90,K2=100,K3=110", "--bs", BS,
                       "--kind", "callspread", "--alpha", "80", "--beta", "120", "--nodes", "41")
    assert code == 0
    assert json.loads(out)["result"]["report"]["grid_sup_error"] < 1e-12


def test_hedge_bad_grid_exit_3(capsys):
    assert run(capsys, "hedge", "--payoff", "digital_ge:K=100", "--bs", BS, "--kind", "callspread",
               "--alpha", "80", "--beta", "120")[0] == 3


def test_american_put(capsys):
    code, out, _ = run(capsys, "american", "--payoff", "put:K=100", "--bs", "spot=100,vol=0.2,rate=0.05,T=1",
                       "--oracle-steps", "200")
    assert code == 0
    rep = json.loads(out)["result"]["report"]
    assert rep["oracle_value"] <= rep["bound"] and rep["equality_certified"] is False


def test_american_power_call_certified(capsys):
    code, out, _ = run(capsys, "american", "--payoff", "power_call:n=2,K=10000",
                       "--bs", "spot=100,vol=0.2,rate=0.05,T=1", "--oracle-steps", "200")
    rep = json.loads(out)["result"]["report"]
    assert code == 0 and rep["equality_certified"] is True
    assert abs(rep["oracle_value"] - rep["oracle_european"]) <= rep["lattice_error"] + 1e-12


def test_american_rejects_non_convex(capsys):
    assert run(capsys, "american", "--payoff", "butterfly:K1=90,K2=100,K3=110", "--bs", BS)[0] == 3


def test_barrier_parity_line(capsys):
    code, out, _ = run(capsys, "barrier", "--payoff", "call:K=100", "--event", "maxlt:B=130",
                       "--mc", "seed=7,n=20000")
    assert code == 0
    parity = json.loads(out)["result"]["parity"]
    assert abs(parity["residual"]) <= 1e-10 * parity["vanilla"]


def test_barrier_needs_event_and_mc(capsys):
    assert run(capsys, "barrier", "--payoff", "call:K=100", "--mc", "seed=7,n=100")[0] == 3
    assert run(capsys, "barrier", "--payoff", "call:K=100", "--event", "maxlt:B=130", "--bs", BS)[0] == 3


def test_seventeen_digits(capsys):
    _, out, _ = run(capsys, "price", "--payoff", "call:K=100", "--bs", BS)
    assert '"schema": 1' in out
    raw = re.search(r'"theorem1": \{.*?"value": ([-0-9.e+]+)', out).group(1)
    v = json.loads(out)["result"]["forms"]["theorem1"]["value"]
    assert raw == format(v, ".17g") and float(raw) == v


def test_subprocess_determinism():
    cmd = [sys.executable, "-m", "strikespan.cli", "barrier", "--payoff", "straddle:K=100",
           "--event", "maxge:B=120", "--mc", "seed=7,n=20000"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"{")
