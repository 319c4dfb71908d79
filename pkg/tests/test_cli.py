import csv
import io
import json

import numpy as np
import pytest

from aqsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from aqsim.experiment import (
    ConfigError,
    ExperimentConfig,
    build_config,
    demo_configs,
    emit_report,
    parse_attack,
    parse_config,
    parse_scheme,
    read_config_file,
    render,
    run,
    trial_rng,
)

from conftest import within_3_sigma_heterogeneous

EXAMPLE = {"n": "4", "trials": "1000", "seed": "7", "scheme": "pauli", "variant": "A", "attack": "pauli:XXXX"}


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParseConfig:
    def test_example_is_valid(self):
        config, out = parse_config(EXAMPLE)
        assert (config.n, config.trials, config.seed, config.attack) == (4, 1000, 7, "pauli:XXXX")
        assert out == {"format": "table", "out": None}

    def test_bogus_scheme_names_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({**EXAMPLE, "scheme": "bogus"})
        assert exc.value.key == "scheme"

    def test_flag_overrides_file(self, tmp_path):
        path = write(tmp_path, "n = 2\ntrials = 100  # small\nscheme = ih\n")
        config, _ = parse_config({"trials": "500"}, path)
        assert config.trials == 500 and config.scheme == "ih" and config.n == 2

    def test_unknown_file_key(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            parse_config({}, write(tmp_path, "n=2\ntrials=1\nscheme=pauli\ncolour=blue\n"))
        assert exc.value.key == "colour"

    def test_hyphenated_keys(self, tmp_path):
        values = read_config_file(write(tmp_path, "test-mode = swap\nper-trial = yes\n"))
        assert values == {"test_mode": "swap", "per_trial": "yes"}

    def test_missing_required(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({"n": "2", "scheme": "pauli"})
        assert exc.value.key == "trials"

    def test_malformed_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            parse_config({}, write(tmp_path, "n 4\n"))
        assert exc.value.key == "config"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config({}, tmp_path / "absent.cfg")

    @pytest.mark.parametrize(
        "key,value",
        [("n", "0"), ("n", "x"), ("trials", "0"), ("seed", "-1"), ("variant", "C"), ("test_mode", "weak"),
         ("message", "one"), ("attack", "pauli:XX"), ("attack", "permutation:0,0,1,2"), ("attack", "teleport"),
         ("attack", "ma-exchange:9"), ("format", "xml"), ("per_trial", "maybe")],
    )
    def test_every_invalid_value_names_its_key(self, key, value):
        with pytest.raises(ConfigError) as exc:
            build_config({**EXAMPLE, key: value})
        assert exc.value.key == key

    def test_uv_scheme(self):
        assert parse_scheme("uv:S,H").name == "uv:S,H"
        with pytest.raises(ConfigError):
            parse_scheme("uv:S")

    def test_attack_objects(self):
        assert parse_attack("none", 2) is None
        assert parse_attack("symmetric-demo", 2) == "symmetric-demo"
        adapted = parse_attack("pauli-adapted:XY", 2)
        assert adapted.sig_q.letters == "ZY"


class TestRun:
    def test_honest_accepts(self):
        report = run(ExperimentConfig(3, 100, 1, "pauli"))
        assert report.accept_rate == report.success_rate == 1.0
        assert report.mean_detection == 0.0

    def test_pauli_attack_always_succeeds(self):
        report = run(ExperimentConfig(4, 1000, 2, "pauli", "A", "projective", "pauli:XYZI"))
        assert report.success_rate == 1.0

    def test_ih_detection_matches_analytic(self):
        config = ExperimentConfig(1, 3000, 3, "ih", "A", "projective", "pauli:X", per_trial=True)
        report = run(config)
        hits = sum(r["detected"] for r in report.records)
        assert within_3_sigma_heterogeneous(hits, [r["analytic_detection"] for r in report.records])
        assert report.analytic_detection == pytest.approx(np.mean([r["analytic_detection"] for r in report.records]))

    def test_symmetric_demo(self):
        assert run(ExperimentConfig(1, 200, 4, "pauli", attack="symmetric-demo")).accept_rate == 1.0

    def test_success_never_exceeds_accept(self):
        for config in demo_configs(11, 2, 50):
            report = run(config)
            assert 0 <= report.success_rate <= report.accept_rate <= 1

    def test_trial_streams_independent_of_order(self):
        a = trial_rng(5, 3).random(4)
        trial_rng(5, 2).random(10)
        assert np.array_equal(a, trial_rng(5, 3).random(4))

    def test_record_count(self):
        report = run(ExperimentConfig(2, 17, 0, "pauli", per_trial=True))
        assert [r["trial"] for r in report.records] == list(range(17))


class TestEmit:
    def test_json_round_trip(self):
        report = run(ExperimentConfig(2, 20, 0, "ih", attack="pauli:XZ"))
        data = json.loads(_render(report, "json"))
        assert data["config"]["scheme"] == "ih"
        assert set(data) >= {"accept_rate", "success_rate", "mean_detection"}
        assert "duration_s" not in data

    def test_csv_rows(self):
        report = run(ExperimentConfig(2, 25, 0, "pauli", per_trial=True))
        rows = list(csv.reader(io.StringIO(_render(report, "csv"))))
        assert len(rows) == 26
        assert rows[0][:3] == ["trial", "accepted", "success"]

    def test_table_aligned(self):
        text = _render(run(ExperimentConfig(1, 5, 0, "pauli")), "table")
        header, rule, row = text.splitlines()
        assert header.startswith("experiment") and set(rule) <= {"-", " "}
        assert row.split()[0] == "run"

    def test_same_seed_same_bytes(self):
        config = ExperimentConfig(2, 40, 9, "pauli", "B", "swap", "ma-exchange:1", per_trial=True)
        assert _render(run(config), "json") == _render(run(config), "json")
        assert _render(run(config), "csv") == _render(run(config), "csv")

    def test_writes_file(self, tmp_path):
        path = tmp_path / "r.json"
        emit_report(run(ExperimentConfig(1, 3, 0, "pauli")), "json", path)
        assert json.loads(path.read_text())["trials"] == 3


def _render(report, fmt):
    return render([report], fmt)


class TestMain:
    def test_run_json(self, tmp_path, capsys):
        out = tmp_path / "o.json"
        code = main(["run", "--n", "2", "--trials", "10", "--scheme", "pauli", "--attack", "pauli:XY",
                     "--format", "json", "--out", str(out)])
        assert code == EXIT_OK
        assert json.loads(out.read_text())["success_rate"] == 1.0

    def test_run_stdout_table(self, capsys):
        assert main(["run", "--n", "1", "--trials", "5", "--scheme", "ih"]) == EXIT_OK
        assert "accept" in capsys.readouterr().out

    def test_bogus_scheme_exit_2(self, capsys):
        assert main(["run", "--n", "1", "--trials", "5", "--scheme", "bogus"]) == EXIT_CONFIG
        assert "scheme" in capsys.readouterr().err

    def test_unknown_flag_exit_2(self, capsys):
        assert main(["run", "--colour", "blue"]) == EXIT_CONFIG

    def test_config_file_with_override(self, tmp_path):
        cfg = write(tmp_path, "n=1\ntrials=100\nscheme=pauli\nformat=json\nper_trial=true\n")
        out = tmp_path / "o.json"
        assert main(["run", "--config", str(cfg), "--trials", "7", "--out", str(out)]) == EXIT_OK
        assert len(json.loads(out.read_text())["records"]) == 7

    def test_unwritable_out_exit_1(self, tmp_path, capsys):
        target = tmp_path / "missing" / "dir" / "o.json"
        assert main(["run", "--n", "1", "--trials", "2", "--scheme", "pauli", "--out", str(target)]) == EXIT_RUNTIME
        assert "error" in capsys.readouterr().err

    def test_timing_flag(self, tmp_path):
        out = tmp_path / "o.json"
        main(["run", "--n", "1", "--trials", "2", "--scheme", "pauli", "--format", "json", "--timing", "--out", str(out)])
        assert "duration_s" in json.loads(out.read_text())

    def test_demo_small(self, tmp_path):
        out = tmp_path / "d.json"
        assert main(["demo", "--trials", "20", "--format", "json", "--out", str(out)]) == EXIT_OK
        names = [e["name"] for e in json.loads(out.read_text())["experiments"]]
        assert names == ["honest", "pauli-forgery", "ma-exchange-forgery", "ih-defense"]

    def test_validate_scheme(self, capsys):
        assert main(["validate-scheme", "--scheme", "ih", "--format", "json"]) == EXIT_OK
        data = json.loads(capsys.readouterr().out)
        assert data["valid"] and np.allclose(data["gram_real"], 2 * np.eye(4))

    def test_validate_subset_invalid(self, capsys):
        assert main(["validate-scheme", "--scheme", "pauli", "--subset", "0,1,2"]) == EXIT_OK
        assert "INVALID" in capsys.readouterr().out

    def test_validate_bad_probs(self):
        assert main(["validate-scheme", "--scheme", "pauli", "--probs", "0.5,0.5"]) == EXIT_CONFIG
