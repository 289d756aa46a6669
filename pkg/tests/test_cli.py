import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from comoments.cli import RunConfig, main, parse_config, run
from comoments.errors import ParseError
from comoments.reproduce import FIG_P_GRID, TARGETS, reproduce, to_csv


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestRunConfig:
    @pytest.mark.parametrize("argv", [
        ["bounds", "--marginal1", "unif:a=0,b=1", "--marginal2", "norm", "-d", "2", "--centered", "--method", "mc",
         "-n", "1000", "--seed", "7", "--threads", "2", "--format", "json"],
        ["rank-coeff", "--model", "mixture", "-d", "3", "--lambda", "0.25", "-n", "500"],
        ["copula-sample", "--marginal1", "norm", "--marginal2", "expon:rate=1,shift=-1", "-d", "2",
         "--direction", "min", "-n", "10", "--out", "pairs.csv"],
        ["mixture-sample", "--rate1", "1.5", "--rate2", "2", "--lambda", "0.3", "--parity", "odd", "-n", "5"],
        ["es", "--rate1", "1", "--rate2", "1", "--lambda", "0.5", "--p", "0.95", "-n", "100000"],
        ["mes", "--sweep-lambda", "0,0.25,0.5,0.75,1", "-n", "100000"],
        ["annuity", "--status", "last", "--life-table", "x=18.76,y=23.06", "--term", "10"],
        ["reproduce", "table1", "--out", "t1.csv"],
    ])
    def test_round_trip(self, argv):
        cfg = parse_config(argv)
        assert parse_config(cfg.to_argv()) == cfg
        assert cfg.to_argv() == parse_config(cfg.to_argv()).to_argv()

    @given(seed=st.integers(0, 2**64 - 1), n=st.integers(2, 10**9), threads=st.integers(1, 64),
           lam=st.floats(0, 1), p=st.floats(0.01, 0.99), fmt=st.sampled_from(["csv", "json"]))
    def test_round_trip_property(self, seed, n, threads, lam, p, fmt):
        cfg = parse_config(["es", "--lambda", repr(lam), "--p", repr(p), "-n", str(n), "--seed", str(seed),
                            "--threads", str(threads), "--format", fmt])
        assert parse_config(cfg.to_argv()) == cfg

    def test_defaults(self):
        cfg = parse_config(["es"])
        assert cfg.seed == 42 and cfg.threads is None and cfg.format == "csv"
        assert isinstance(cfg, RunConfig)

    def test_scientific_n(self):
        assert parse_config(["es", "-n", "1e6"]).n == 1_000_000

    def test_parse_error(self):
        with pytest.raises(ParseError):
            parse_config(["bounds", "-d", "2"])


class TestCommands:
    def test_bounds_example(self, capsys):
        code, out, _ = invoke(capsys, "bounds", "--marginal1", "unif:a=0,b=1", "--marginal2", "unif:a=0,b=1",
                              "-d", "2", "--centered", "--method", "closed")
        assert code == 0
        r = rows(out)[0]
        assert float(r["upper"]) == pytest.approx(0.8660, abs=1e-4)
        assert float(r["lower"]) == pytest.approx(-0.8660, abs=1e-4)

    def test_es_example(self, capsys):
        code, out, _ = invoke(capsys, "es", "--rate1", "1", "--rate2", "1", "--lambda", "0.5", "--p", "0.95",
                              "-n", "1000000", "--seed", "42", "--format", "json")
        rec = json.loads(out)
        assert {"value", "stderr", "n", "seed"} <= set(rec)
        assert rec["value"] == pytest.approx(6.83, rel=0.02)
        assert rec["n"] == 1_000_000 and rec["seed"] == 42

    def test_mes_sweep(self, capsys):
        code, out, _ = invoke(capsys, "mes", "--sweep-lambda", "0,0.5,1", "-n", "100000", "--format", "json")
        recs = json.loads(out)
        assert [r["lambda"] for r in recs] == [0.0, 0.5, 1.0]
        assert all({"value", "stderr", "n", "seed"} <= set(r) for r in recs)

    def test_annuity_life_table(self, capsys):
        code, out, _ = invoke(capsys, "annuity", "--status", "joint-indep", "--life-table", "x=18.76,y=23.06",
                              "--format", "json")
        rec = json.loads(out)
        assert rec["rate_x"] == pytest.approx(1 / 18.76)
        assert {"value", "stderr", "n", "seed"} <= set(rec)

    def test_copula_sample_file(self, capsys, tmp_path):
        path = tmp_path / "pairs.csv"
        code, out, _ = invoke(capsys, "copula-sample", "--marginal2", "expon:rate=1,shift=-0.693", "-d", "2",
                              "--direction", "max", "--marginal1", "norm", "-n", "1000", "--seed", "3",
                              "--out", str(path))
        assert code == 0 and out == ""
        text = path.read_text()
        assert text.splitlines()[0] == "u1,u2,x1,x2"
        assert "\r" not in text
        assert len(text.splitlines()) == 1001

    def test_rank_coeff_from_file(self, capsys, tmp_path):
        path = tmp_path / "pairs.csv"
        main(["copula-sample", "--marginal2", "norm", "--marginal1", "norm", "-d", "2", "-n", "20000",
              "--out", str(path)])
        code, out, _ = invoke(capsys, "rank-coeff", "--input", str(path), "-d", "2")
        assert code == 0
        assert float(rows(out)[0]["value"]) == pytest.approx(1.0, abs=0.02)

    def test_rank_coeff_two_columns(self, capsys, tmp_path):
        path = tmp_path / "two.csv"
        path.write_text("1,2\n2,3\n3,1\n4,4\n")
        code, out, _ = invoke(capsys, "rank-coeff", "--input", str(path), "-d", "1")
        assert code == 0 and int(rows(out)[0]["n"]) == 4

    def test_rank_coeff_model(self, capsys):
        code, out, _ = invoke(capsys, "rank-coeff", "--model", "extremal", "--marginal2", "norm", "-d", "2",
                              "--direction", "min", "-n", "100000")
        assert float(rows(out)[0]["value"]) == pytest.approx(-1.0, abs=0.02)

    def test_mixture_sample(self, capsys):
        code, out, _ = invoke(capsys, "mixture-sample", "--rate1", "1", "--rate2", "2", "--lambda", "1",
                              "--parity", "odd", "-n", "5")
        r = rows(out)
        assert list(r[0]) == ["u1", "u2", "l1", "l2"]
        assert all(float(x["u1"]) == float(x["u2"]) for x in r)


class TestErrors:
    def test_malformed_marginal(self, capsys):
        code, _, err = invoke(capsys, "bounds", "--marginal1", "unif:a=0,b=1", "--marginal2", "unif:a=0,b=x1",
                              "-d", "2")
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "parse" and "x1" in payload["message"]

    def test_unknown_flag(self, capsys):
        code, _, err = invoke(capsys, "es", "--nope")
        assert code == 2 and json.loads(err)["error"] == "parse"

    def test_domain(self, capsys):
        code, _, err = invoke(capsys, "es", "--lambda", "1.5")
        assert code == 3 and json.loads(err)["error"] == "domain"

    def test_unknown_target(self, capsys):
        code, _, err = invoke(capsys, "reproduce", "table9")
        assert code == 3 and json.loads(err)["type"] == "UnknownTarget"

    def test_insufficient_tail(self, capsys):
        code, _, err = invoke(capsys, "es", "--p", "0.99", "-n", "1000")
        assert code == 3

    def test_compute(self, capsys):
        code, _, err = invoke(capsys, "bounds", "--marginal1", "t:nu=3", "--marginal2", "t:nu=3", "-d", "2")
        assert code == 4 and json.loads(err)["error"] == "compute"

    def test_all_needs_out(self, capsys):
        code, _, _ = invoke(capsys, "reproduce", "all")
        assert code == 2

    def test_bad_threads(self, capsys):
        code, _, _ = invoke(capsys, "es", "--threads", "0")
        assert code == 2


class TestReproduce:
    def test_fig1_branches(self):
        t = reproduce("fig1")
        u = np.array([r[0] for r in t.rows])
        assert len(u) == 512
        g = np.array([r[1] for r in t.rows])
        f = np.array([r[2] for r in t.rows])
        np.testing.assert_allclose(g, (1 + u) / 2)
        np.testing.assert_allclose(f, (1 - u) / 2)

    def test_fig2_bands(self):
        t = reproduce("fig2")
        for u1, g, f, direct, *_ in t.rows:
            if u1 <= 0.5:
                assert 0.25 <= g <= 0.5 and 0 <= f <= 0.25
            else:
                assert direct == u1

    def test_fig3_threshold(self):
        t = reproduce("fig3")
        high = [r for r in t.rows if r[0] > 0.75]
        assert all(r[3] == r[0] and math.isnan(r[1]) for r in high)

    def test_table1_layout(self):
        t = reproduce("table1")
        assert t.header == ("marginal", "min_coskewness", "min_coskewness_stderr",
                            "max_coskewness", "max_coskewness_stderr")
        assert [r[0] for r in t.rows][0] == "normal"

    def test_every_value_has_stderr(self):
        for target in ("table2", "table3", "table5", "fig4", "fig6"):
            header = reproduce(target, n=100_000).header
            values = [h for h in header if h.startswith(("lambda_", "es_", "last", "joint"))]
            for h in values:
                assert h.endswith("_stderr") or f"{h}_stderr" in header

    def test_fig4_grid(self):
        t = reproduce("fig4", n=100_000)
        assert [r[0] for r in t.rows] == list(FIG_P_GRID)
        assert FIG_P_GRID[0] == 0.75 and FIG_P_GRID[-1] < 1

    @pytest.mark.parametrize("target", ["table2", "table3", "table5", "fig5", "fig6"])
    def test_golden_across_threads(self, target):
        a = to_csv(reproduce(target, n=100_000, seed=11, threads=1))
        b = to_csv(reproduce(target, n=100_000, seed=11, threads=4))
        c = to_csv(reproduce(target, n=100_000, seed=11, threads=4))
        assert a == b == c

    def test_seed_changes_output(self):
        assert to_csv(reproduce("table3", n=100_000, seed=1)) != to_csv(reproduce("table3", n=100_000, seed=2))

    def test_all(self, capsys, tmp_path):
        code, out, _ = invoke(capsys, "reproduce", "all", "-n", "100000", "--out", str(tmp_path))
        assert code == 0
        assert sorted(p.stem for p in tmp_path.iterdir()) == sorted(TARGETS)
        assert (tmp_path / "table2.csv").read_text() == run(parse_config(["reproduce", "table2", "-n", "100000"]))
