"""End-to-end tests for the command line interface, run in-process."""

import csv
import dataclasses
import json
import math

import pytest

from compound_fsc import CompoundFamily, bsc, ge_gap_family, save_family
from compound_fsc.cli import main
from compound_fsc.util import binary_entropy_nats


def read_csv(path):
    # first line is the manifest pointer comment, second is the header
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "# manifest: manifest.json"
    rows = list(csv.reader(lines[1:]))
    return rows[0], rows[1:]


def write_pair_family(tmp_path, name="pair.json"):
    fam = CompoundFamily(members=(bsc(0.1), bsc(0.2)), labels=("p10", "p20"))
    path = tmp_path / name
    save_family(fam, path)
    return path


class TestCapacity:
    def test_bsc_pair_report(self, tmp_path, capsys):
        fam = write_pair_family(tmp_path)
        out = tmp_path / "run"
        rc = main(["capacity", "--family", str(fam), "--n", "1", "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "C_1" in text and "bits" in text

        body = json.loads((out / "capacity_report.json").read_text())
        assert body["manifest"] == "manifest.json"
        expected = math.log(2.0) - binary_entropy_nats(0.2)
        assert abs(body["C_n_nats_per_symbol"] - expected) < 1e-3
        assert body["worst_case"][1] == "p20"

        header, rows = read_csv(out / "convergence.csv")
        assert header == ["iteration", "value_nats_per_symbol"]
        assert len(rows) >= 1

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "capacity"
        assert "--family" in manifest["argv"]

    def test_feedback_none_matches_identity_for_n1(self, tmp_path):
        # one-shot capacity cannot use feedback, so the two runs agree
        fam = write_pair_family(tmp_path)
        vals = {}
        for fb in ("identity", "none"):
            out = tmp_path / fb
            rc = main(
                [
                    "capacity",
                    "--family",
                    str(fam),
                    "--n",
                    "1",
                    "--feedback",
                    fb,
                    "--out",
                    str(out),
                ]
            )
            assert rc == 0
            body = json.loads((out / "capacity_report.json").read_text())
            vals[fb] = body["C_n_nats_per_symbol"]
        assert abs(vals["identity"] - vals["none"]) < 1e-6

    def test_missing_family_file(self, tmp_path, capsys):
        rc = main(
            [
                "capacity",
                "--family",
                str(tmp_path / "nope.json"),
                "--n",
                "1",
                "--out",
                str(tmp_path / "run"),
            ]
        )
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_table_cap_exit_code(self, tmp_path, capsys):
        fam = write_pair_family(tmp_path)
        rc = main(
            ["capacity", "--family", str(fam), "--n", "13", "--out", str(tmp_path / "run")]
        )
        assert rc == 3
        assert "error:" in capsys.readouterr().err

    def test_nonconvergence_exit_code(self, tmp_path, capsys, monkeypatch):
        import compound_fsc.cli as climod
        from compound_fsc.capacity import SolverConfig, compute_Cn
        from compound_fsc.channel import identity_feedback

        fam_path = write_pair_family(tmp_path)
        family = CompoundFamily(members=(bsc(0.1), bsc(0.2)), labels=("p10", "p20"))
        report = compute_Cn(family, identity_feedback((0, 1)), 1, SolverConfig(max_iters=40, restarts=1))
        bad_diag = dataclasses.replace(report.diagnostics, converged=False)
        bad = dataclasses.replace(report, diagnostics=bad_diag)
        monkeypatch.setattr(climod, "compute_Cn", lambda *a, **k: bad)

        out = tmp_path / "run"
        rc = main(["capacity", "--family", str(fam_path), "--n", "1", "--out", str(out)])
        assert rc == 4
        assert "converge" in capsys.readouterr().err
        # the report is still written so the run can be inspected
        assert (out / "capacity_report.json").exists()


class TestVerify:
    def test_single_suite(self, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["verify", "--suite", "kim-identity", "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "kim-identity" in text and "pass" in text

        header, rows = read_csv(out / "verify_results.csv")
        assert header == ["check", "passed", "instances", "violations", "worst", "detail"]
        assert rows[0][0] == "kim-identity"
        assert rows[0][1] == "True"

    def test_unknown_suite(self, tmp_path, capsys):
        rc = main(["verify", "--suite", "bogus", "--out", str(tmp_path / "run")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err


class TestSimulate:
    def test_example1_files_and_rerun(self, tmp_path):
        out = tmp_path / "a"
        argv = [
            "simulate",
            "--preset",
            "example1",
            "--n",
            "3",
            "--trials",
            "400",
            "--seed",
            "11",
            "--out",
            str(out),
        ]
        assert main(argv) == 0
        csv_a = (out / "simulate_results.csv").read_bytes()
        log_a = (out / "trials.jsonl").read_bytes()
        assert csv_a and log_a

        # byte-identical when rerun from the recorded manifest
        out2 = tmp_path / "b"
        rc = main(["rerun", str(out / "manifest.json"), "--out", str(out2)])
        assert rc == 0
        assert (out2 / "simulate_results.csv").read_bytes() == csv_a
        assert (out2 / "trials.jsonl").read_bytes() == log_a

    def test_noiseless_config_zero_error(self, tmp_path):
        spec = bsc(0.0).to_dict()
        spec["label"] = "clean"
        cfg = {
            "family": [spec],
            "n": 2,
            "messages": 2,
            "codebook": "constant",
            "trials": 100,
            "seed": 3,
        }
        cfg_path = tmp_path / "sim.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "run"
        rc = main(["simulate", "--config", str(cfg_path), "--out", str(out)])
        assert rc == 0
        header, rows = read_csv(out / "simulate_results.csv")
        row = dict(zip(header, rows[0]))
        assert float(row["error_rate"]) == 0.0
        assert int(row["trials"]) == 100

    def test_flags_override_config(self, tmp_path):
        spec = bsc(0.1).to_dict()
        spec["label"] = "p10"
        cfg = {"family": [spec], "n": 2, "trials": 50, "seed": 5}
        cfg_path = tmp_path / "sim.json"
        cfg_path.write_text(json.dumps(cfg))

        out1 = tmp_path / "cfg"
        assert main(["simulate", "--config", str(cfg_path), "--out", str(out1)]) == 0
        header, rows = read_csv(out1 / "simulate_results.csv")
        assert int(dict(zip(header, rows[0]))["trials"]) == 50

        out2 = tmp_path / "flag"
        rc = main(
            ["simulate", "--config", str(cfg_path), "--trials", "20", "--out", str(out2)]
        )
        assert rc == 0
        header, rows = read_csv(out2 / "simulate_results.csv")
        assert int(dict(zip(header, rows[0]))["trials"]) == 20

    def test_simulate_without_inputs(self, tmp_path, capsys):
        rc = main(["simulate", "--out", str(tmp_path / "run")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_json_format(self, tmp_path):
        out = tmp_path / "run"
        rc = main(
            [
                "simulate",
                "--preset",
                "example1",
                "--n",
                "2",
                "--trials",
                "100",
                "--format",
                "json",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        body = json.loads((out / "simulate_results.json").read_text())
        assert body["manifest"] == "manifest.json"
        assert 0.0 <= body["error_rate"] <= 1.0
        assert "all_bad_freq" in body


class TestEstimate:
    def test_stateful_family_rejected(self, tmp_path, capsys):
        fam_path = tmp_path / "ge.json"
        save_family(ge_gap_family(), fam_path)
        rc = main(
            ["estimate", "--family", str(fam_path), "--n", "1000", "--out", str(tmp_path / "r")]
        )
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_rate_and_sanov_tables(self, tmp_path):
        fam = write_pair_family(tmp_path)
        out = tmp_path / "run"
        rc = main(
            [
                "estimate",
                "--family",
                str(fam),
                "--n",
                "1000",
                "--trials",
                "3",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert rc == 0

        header, rows = read_csv(out / "estimate_rates.csv")
        assert "train_symbols" in header[0]
        assert any("nats" in h for h in header)
        # sweep points below n: 100 and 316
        assert [r[0] for r in rows] == ["100", "316"]

        header2, rows2 = read_csv(out / "sanov_table.csv")
        assert any("bound" in h for h in header2)
        assert len(rows2) >= 1


class TestTopLevel:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "compound-fsc" in capsys.readouterr().out

    def test_missing_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_manifest_round_trip(self, tmp_path):
        out = tmp_path / "run"
        main(["verify", "--suite", "kim-identity", "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["subcommand"] == "verify"
        assert manifest["argv"][0] == "verify"
        assert "--suite" in manifest["argv"]
        assert "version" in manifest
