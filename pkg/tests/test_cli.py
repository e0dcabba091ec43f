import csv
import json
import math

import pytest

from selfish_bandits import cli
from selfish_bandits import io as sio
from selfish_bandits.core import HardNumericDrift
from selfish_bandits.learners import LearnerKind
from selfish_bandits.simlab import tuned_params


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out-dir", str(out)])
    return code, out


def without_timestamp(path):
    d = json.loads(path.read_text())
    d.pop("generated_at")
    return d


class TestPolicies:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("T^-2/3", 4096 ** (-2 / 3)),
            ("eta=T^-2/3", 4096 ** (-2 / 3)),
            ("gamma=T^-1/3", 4096 ** (-1 / 3)),
            ("0.5*T^-2/3", 0.5 * 4096 ** (-2 / 3)),
            ("2*T^(-1/3)", 2 * 4096 ** (-1 / 3)),
            ("T^-0.5", 4096**-0.5),
            ("0.01", 0.01),
            (0.02, 0.02),
        ],
    )
    def test_resolve(self, text, expected):
        assert cli.resolve_policy(text, "eta", LearnerKind.WSU_UX, 2, 4096) == pytest.approx(expected, rel=1e-15)

    def test_named(self):
        assert cli.resolve_policy("exp3-default", "eta", LearnerKind.EXP3, 2, 1000) == pytest.approx(
            math.sqrt(math.log(2) / 2000)
        )
        assert cli.resolve_policy("exp3-default", "gamma", LearnerKind.EXP3, 2, 1000) == 0.0
        tuned = tuned_params(2, 4096)
        assert cli.resolve_policy("upper-bound-tuned", "gamma", LearnerKind.WSU_UX, 2, 4096) == tuned.gamma

    def test_garbage(self):
        with pytest.raises(cli.UsageError):
            cli.resolve_policy("T**2", "eta", LearnerKind.WSU_UX, 2, 10)

    def test_horizons(self):
        assert cli.parse_horizon("2^16") == 65536
        assert cli.parse_horizon("4096") == 4096
        with pytest.raises(cli.UsageError):
            cli.parse_horizon("lots")

    def test_env(self):
        assert cli.parse_env("bernoulli:0.2,0.7")[1] == (0.2, 0.7)
        with pytest.raises(cli.UsageError):
            cli.parse_env("adaptive")


class TestConfigMerge:
    def parse(self, argv, environ=None):
        return cli.load_config(cli.build_parser().parse_args(argv), environ or {})

    def test_flags_win_over_manifest(self, tmp_path):
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"horizons": [2048, 4096], "n_trials": 7, "base_seed": 3, "eta": "T^-0.7"}))
        cfg = self.parse(["run", "--config", str(m), "--trials", "5"])
        assert cfg.horizons == [2048, 4096] and cfg.n_trials == 5 and cfg.base_seed == 3 and cfg.eta == "T^-0.7"

    def test_env_seed(self, tmp_path):
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"seed": 3}))
        assert self.parse(["run", "--config", str(m)], {cli.SEED_ENV: "99"}).base_seed == 99
        assert self.parse(["run", "--seed", "5"], {cli.SEED_ENV: "99"}).base_seed == 5

    def test_unknown_key(self, tmp_path):
        m = tmp_path / "m.json"
        m.write_text(json.dumps({"horizon": 5}))
        with pytest.raises(cli.UsageError):
            self.parse(["run", "--config", str(m)])


class TestRun:
    ARGS = ["run", "--T", "4096", "--trials", "4", "--seed", "17"]

    def test_header_and_rows(self, tmp_path):
        code, out = run(self.ARGS, tmp_path)
        assert code == 0
        with open(out / "runs.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == sio.RUN_COLUMNS
        assert rows[0][0] == "schema_version"
        assert rows[0][1:] == [
            "trial", "seed", "T", "eta", "gamma", "learner", "env", "pseudo_regret", "ln_pi_final",
            "pi_T1", "pi_T1T2", "e1", "e2", "recovered", "second_moment_sum", "bias_sum", "arm1_pulls_phase1",
        ]
        assert len(rows) == 5
        # 17 significant digits round-trip exactly
        assert float(rows[1][4]) == 4096 ** (-2 / 3)

    def test_byte_identical(self, tmp_path):
        _, a = run(self.ARGS, tmp_path, "a")
        _, b = run(self.ARGS + ["--parallelism", "8"], tmp_path, "b")
        assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
        assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
        sa, sb = without_timestamp(a / "summary.json"), without_timestamp(b / "summary.json")
        sa["config"].pop("parallelism"), sb["config"].pop("parallelism")
        assert sa == sb

    def test_summary_embeds_resolved_params(self, tmp_path):
        _, out = run(self.ARGS, tmp_path)
        s = json.loads((out / "summary.json").read_text())
        r = s["runs"][0]
        assert r["eta"] == 4096 ** (-2 / 3) and r["gamma"] == 4096 ** (-1 / 3)
        assert r["regime"] == "non-trivial" and "derived" in r
        assert s["schema_version"] == sio.SCHEMA_VERSION

    def test_trivial_eta_regret(self, tmp_path):
        code, out = run(["run", "--env", "trivial-eta", "--T", "4096", "--eta", "0.001", "--gamma", "0.4",
                         "--trials", "4"], tmp_path)
        assert code == 0
        mean = json.loads((out / "summary.json").read_text())["runs"][0]["scalars"]["pseudo_regret"]["mean"]
        assert mean >= 0.2 * 4096

    def test_invalid_exit_2(self, tmp_path, capsys):
        code, _ = run(["run", "--T", "2000", "--eta", "0.4", "--gamma", "0.1", "--trials", "2"], tmp_path)
        assert code == 2
        assert "invalid" in capsys.readouterr().err

    def test_drift_exit_3(self, tmp_path, monkeypatch, capsys):
        def boom(*a, **k):
            raise HardNumericDrift("simplex drift at round 3", seed=1234)

        monkeypatch.setattr(cli, "monte_carlo", boom)
        code, _ = run(self.ARGS, tmp_path)
        assert code == 3
        assert "1234" in capsys.readouterr().err


class TestScalingAndClaims:
    def test_scaling(self, tmp_path):
        code, out = run(["scaling", "--learner", "wsu-ux", "--learner", "exp3", "--T", "1024", "--T", "2048",
                         "--T", "4096", "--trials", "4"], tmp_path)
        assert code == 0
        s = json.loads((out / "scaling.json").read_text())
        for name in ("wsu-ux", "exp3"):
            entry = s["learners"][name]
            assert {"per_T", "slope", "intercept", "r_squared", "verdict"} <= set(entry)
            assert [p["T"] for p in entry["per_T"]] == [1024, 2048, 4096]
        assert s["learners"]["exp3"]["per_T"][0]["gamma"] == 0.0

    def test_scaling_needs_three(self, tmp_path):
        assert run(["scaling", "--T", "1024", "--T", "2048", "--trials", "2"], tmp_path)[0] == 2

    def test_claims(self, tmp_path):
        code, out = run(["claims", "--T", "4096", "--trials", "4"], tmp_path)
        assert code == 0
        rep = json.loads((out / "claims.json").read_text())["reports"][0]
        assert rep["claim1"]["asymptotic_target"] == pytest.approx(math.log(5 / 4))
        assert {"frequency", "ci95"} <= set(rep["events"]["event_e1"])
        assert {"frequency", "ci95"} <= set(rep["events"]["event_e2"])
        assert {"M", "T_prime", "eps1", "eps2"} <= set(rep["derived"])

    def test_claims_regime_mismatch(self, tmp_path):
        assert run(["claims", "--T", "4096", "--eta", "0.5*T^-2/3", "--trials", "2"], tmp_path)[0] == 2

    def test_claims_wrong_env(self, tmp_path):
        assert run(["claims", "--env", "trivial-eta", "--T", "4096", "--trials", "2"], tmp_path)[0] == 2


class TestAuditAndBounds:
    def test_ic_audit(self, tmp_path):
        code, out = run(["ic-audit", "--configs", "20", "--grid", "201"], tmp_path)
        assert code == 0
        text = (out / "ic_audit.json").read_text()
        d = json.loads(text)
        assert list(d)[:3] == ["schema_version", "command", "generated_at"]
        labels = {(v["algo"], v["conditioning"]): v["verdict"] for v in d["verdicts"]}
        assert labels[("WSU", "conditional-on-selected")] == "TRUTHFUL"
        assert labels[("MWU-normalized", "conditional-on-selected")] == "NOT-TRUTHFUL"
        assert ("WSU-UX", "unconditional") in labels
        _, again = run(["ic-audit", "--configs", "20", "--grid", "201"], tmp_path, "again")
        assert without_timestamp(out / "ic_audit.json") == without_timestamp(again / "ic_audit.json")

    def test_bounds(self, tmp_path):
        code, out = run(["bounds", "--T", "65536"], tmp_path)
        assert code == 0
        d = json.loads((out / "bounds.json").read_text())
        row = d["bounds"][0]
        assert row["tuned_bound"] <= row["tuned_closed_form"]
        assert abs(row["combiner"]["lhs_at_optimum"] - row["combiner"]["rhs"]) <= 1e-9 * row["combiner"]["rhs"]
        assert d["helper_checks"]["passed"]


class TestPlot:
    def test_svg(self, tmp_path):
        _, out = run(["scaling", "--learner", "wsu-ux", "--learner", "exp3", "--T", "1024", "--T", "2048",
                      "--T", "4096", "--trials", "3"], tmp_path)
        assert cli.main(["plot", str(out / "runs.csv"), "--out-dir", str(out)]) == 0
        svg = (out / "regret_loglog.svg").read_text()
        assert svg.count('id="regret-wsu-ux"') == 1 and svg.count('id="regret-exp3"') == 1
        assert "fitted exponent of T" in svg and svg.count('id="fit-wsu-ux"') == 1
        assert "<image" not in svg and "xlink:href=\"http" not in svg
        traj = (out / "pi1_trajectory.svg").read_text()
        assert 'id="pi1-wsu-ux-T4096"' in traj
        first = (out / "regret_loglog.svg").read_bytes()
        cli.main(["plot", str(out / "runs.csv"), "--out-dir", str(out)])
        assert (out / "regret_loglog.svg").read_bytes() == first

    def test_axis_label_mentions_exponent(self, tmp_path):
        rows = [
            {"learner": "wsu-ux", "T": str(T), "pseudo_regret": str(2.0 * T ** (2 / 3) + d)}
            for T in (1000, 2000, 4000) for d in (-1.0, 1.0)
        ]
        from selfish_bandits.plotting import plot_regret

        path = plot_regret(rows, tmp_path / "r.svg")
        # text is rendered as paths; the label string is kept in an SVG comment
        assert "fitted exponent of T: wsu-ux 0.667" in path.read_text()

    def test_empty_body(self, tmp_path):
        p = tmp_path / "runs.csv"
        p.write_text(",".join(sio.RUN_COLUMNS) + "\n")
        assert cli.main(["plot", str(p), "--out-dir", str(tmp_path)]) == 2

    def test_foreign_schema(self, tmp_path):
        p = tmp_path / "runs.csv"
        p.write_text("a,b\n1,2\n")
        assert cli.main(["plot", str(p), "--out-dir", str(tmp_path)]) == 2
