"""Command-line interface: table contents against the library, file
artifacts with verified manifests, and the documented exit codes.
"""

import hashlib
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from rectgilbert import cli, meanfield, recurrence
from rectgilbert.moments import expected_length_exact, second_moment_exact

F = Fraction


def run(capsys, *argv):
    rc = cli.main(list(argv))
    return rc, capsys.readouterr().out


def parse_table(text):
    """(schema, meta dict, header list, row lists) from CSV stdout."""
    lines = [ln for ln in text.strip().split("\n") if ln]
    schema = lines[0].lstrip("# ")
    meta = {}
    i = 1
    while lines[i].startswith("#"):
        key, _, val = lines[i].lstrip("# ").partition("=")
        meta[key] = val
        i += 1
    header = lines[i].split(",")
    rows = [ln.split(",") for ln in lines[i + 1:]]
    return schema, meta, header, rows


class TestCoeffs:
    def test_exact_table(self, capsys):
        rc, out = run(capsys, "coeffs", "--q", "1/2", "--n-max", "4")
        assert rc == 0
        schema, meta, header, rows = parse_table(out)
        assert schema == "rectgilbert-coeffs/1"
        assert meta["q"] == "1/2"
        assert header == ["n", "h_exact", "h_decimal"]
        assert [r[1] for r in rows] == ["1", "1/2", "1/3", "29/120", "11/60"]
        assert float(rows[3][2]) == 29 / 120

    def test_json_format(self, capsys):
        rc, out = run(capsys, "coeffs", "--q", "1/3", "--n-max", "3",
                      "--format", "json")
        assert rc == 0
        doc = json.loads(out)
        assert doc["schema"] == "rectgilbert-coeffs/1"
        assert doc["meta"]["q"] == "1/3"
        assert doc["columns"] == ["n", "h_exact", "h_decimal"]
        assert doc["rows"][2][1] == "5/27"

    def test_out_file_with_manifest(self, capsys, tmp_path):
        target = tmp_path / "h.csv"
        rc, out = run(capsys, "coeffs", "--q", "1/2", "--n-max", "3",
                      "--out", str(target))
        assert rc == 0
        assert out == ""  # table goes to the file, not stdout
        text = target.read_text()
        assert text.startswith("# rectgilbert-coeffs/1\n")
        manifest = json.loads((tmp_path / "h.csv.manifest.json").read_text())
        assert manifest["schema"] == "rectgilbert-run/1"
        assert manifest["subcommand"] == "coeffs"
        assert manifest["parameters"]["q"] == "1/2"
        art = manifest["artifacts"][0]
        assert art["path"] == str(target)
        assert art["bytes"] == len(text.encode())
        assert art["sha256"] == hashlib.sha256(text.encode()).hexdigest()


class TestDist:
    def test_half_exact_matches_series(self, capsys):
        rc, out = run(capsys, "dist", "--model", "half-exact",
                      "--grid", "0:2:5", "--q", "1/2")
        assert rc == 0
        schema, meta, header, rows = parse_table(out)
        assert schema == "rectgilbert-dist/1"
        assert header == ["ell", "pdf", "pdf_err", "cdf", "cdf_err"]
        n_terms = int(meta["n_terms"])
        h = recurrence.compute_h(F(1, 2), n_terms - 1)
        cfg = recurrence.SeriesEvalConfig(lam=1.0, n_terms=n_terms)
        for row in rows:
            ell = float(row[0])
            assert float(row[3]) == recurrence.cdf(h, cfg, ell).value
            assert float(row[1]) == recurrence.pdf(h, cfg, ell).value

    def test_meanfield_model_matches_closed_form(self, capsys):
        rc, out = run(capsys, "dist", "--model", "meanfield-full",
                      "--grid", "0:1:3", "--q", "1/2")
        assert rc == 0
        _, _, _, rows = parse_table(out)
        for row in rows:
            ell = float(row[0])
            want = 1.0 - meanfield.survival(F(1, 2), 1.0, ell, "full")
            assert float(row[3]) == pytest.approx(want, abs=1e-15)

    def test_full_sim_table(self, capsys):
        rc, out = run(capsys, "dist", "--model", "full-sim",
                      "--grid", "0:1:3", "--reps", "2000", "--seed", "3")
        assert rc == 0
        _, meta, _, rows = parse_table(out)
        assert meta["cap_hits"] == "0"
        cdf = [float(r[3]) for r in rows]
        assert cdf[0] == 0.0 and cdf == sorted(cdf)
        assert all(float(r[4]) > 0 for r in rows[1:])

    def test_grid_validation(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["dist", "--model", "half-exact", "--grid", "oops"])
        assert exc.value.code == 2


class TestSimulate:
    def test_half_matches_library(self, capsys):
        from rectgilbert import halfsim

        rc, out = run(capsys, "simulate-half", "--reps", "2000",
                      "--grid", "0:2:3", "--q", "1/2", "--seed", "5")
        assert rc == 0
        schema, _, header, rows = parse_table(out)
        assert schema == "rectgilbert-halfsim/1"
        assert header == ["quantity", "value", "se"]
        vals = {r[0]: (float(r[1]), float(r[2])) for r in rows}
        rep = halfsim.monte_carlo_report(F(1, 2), 1.0, 2000, master_seed=5,
                                         survival_grid=np.linspace(0, 2, 3))
        assert vals["mean"] == (rep.mean, rep.mean_se)
        assert vals["second_moment"] == (rep.second_moment,
                                         rep.second_moment_se)
        assert vals["survival@1.0"][0] == rep.survival[1]

    def test_full_matches_library(self, capsys):
        from rectgilbert import fullsim

        rc, out = run(capsys, "simulate-full", "--reps", "2000",
                      "--n-cap", "2048", "--seed", "5")
        assert rc == 0
        _, meta, _, rows = parse_table(out)
        vals = {r[0]: float(r[1]) for r in rows}
        est = fullsim.estimate(2000, F(1, 2), n_cap=2048, master_seed=5)
        mean, _ = fullsim.mean_length(est, 1.0)
        assert vals["cap_hits"] == est.cap_hits == 0
        assert vals["mean_length"] == mean
        assert vals["hbar_1"] == float(est.h_hat[1])

    def test_cap_hits_flagged_in_exit_code(self, capsys):
        rc, out = run(capsys, "simulate-full", "--reps", "500",
                      "--n-cap", "8", "--seed", "5")
        assert rc == 2
        _, _, _, rows = parse_table(out)
        vals = {r[0]: float(r[1]) for r in rows}
        assert vals["cap_hits"] > 0

    def test_episode_log(self, capsys, tmp_path):
        log = tmp_path / "episodes.csv"
        rc, _ = run(capsys, "simulate-full", "--reps", "50", "--n-cap",
                    "2048", "--seed", "5", "--episode-log", str(log))
        assert rc == 0
        lines = log.read_text().strip().split("\n")
        assert lines[0] == "# rectgilbert-episodes/1"
        assert lines[1] == "episode,blocking_index,squares_created"
        assert len(lines) == 52
        first = lines[2].split(",")
        assert int(first[2]) == int(first[1]) + 1
        manifest = json.loads((tmp_path / "episodes.csv.manifest.json")
                              .read_text())
        assert manifest["artifacts"][0]["path"] == str(log)

    def test_samples_out(self, capsys, tmp_path):
        samples = tmp_path / "s.csv"
        rc, _ = run(capsys, "simulate-half", "--reps", "40", "--seed", "5",
                    "--samples-out", str(samples))
        assert rc == 0
        lines = samples.read_text().strip().split("\n")
        assert lines[0] == "# rectgilbert-samples/1"
        assert lines[1] == "sample,length,steps"
        assert len(lines) == 42
        assert float(lines[2].split(",")[1]) > 0


class TestMoments:
    def test_closed_form_rows(self, capsys):
        rc, out = run(capsys, "moments", "--q", "1/2", "--lambda", "2")
        assert rc == 0
        _, _, header, rows = parse_table(out)
        assert header == ["quantity", "value", "uncertainty", "method"]
        by_method = {(r[0], r[3]): float(r[1]) for r in rows}
        assert by_method[("mean", "closed_form")] == expected_length_exact(2.0)
        assert by_method[("second_moment", "closed_form")] == \
            second_moment_exact(2.0)
        assert by_method[("mean", "mean_field")] == pytest.approx(
            math.sqrt(2.0), abs=1e-10
        )

    def test_general_q_row(self, capsys):
        rc, out = run(capsys, "moments", "--q", "1/4")
        assert rc == 0
        _, _, _, rows = parse_table(out)
        mean_rows = [r for r in rows if r[0] == "mean"]
        assert mean_rows[0][3] == "integral_equation"
        assert float(mean_rows[0][1]) == pytest.approx(1.538245574839434,
                                                       abs=1e-6)
        assert 0 < float(mean_rows[0][2]) < 1e-4


class TestMeanfield:
    def test_coefficient_table(self, capsys):
        rc, out = run(capsys, "meanfield", "--model", "half", "--q", "1/3",
                      "--n-max", "9")
        assert rc == 0
        schema, meta, header, rows = parse_table(out)
        assert schema == "rectgilbert-meanfield-coeffs/1"
        assert header == ["power", "coeff_exact", "coeff_decimal"]
        assert [int(r[0]) for r in rows] == [1, 3, 5, 7, 9]
        P, Q = meanfield.model_intensities(F(1, 3), F(1), "half")
        want = meanfield.series_coefficients(P, Q, 9).numeric_coefficients()
        assert [F(r[1]) for r in rows] == list(want)

    def test_curve(self, capsys):
        rc, out = run(capsys, "meanfield", "--model", "half", "--q", "1/2",
                      "--lambda", "2", "--grid", "0:1:3")
        assert rc == 0
        schema, _, header, rows = parse_table(out)
        assert schema == "rectgilbert-meanfield-curve/1"
        assert header == ["ell", "survival", "pdf", "err"]
        for row in rows:
            ell = float(row[0])
            assert float(row[1]) == meanfield.survival(F(1, 2), 2.0, ell,
                                                       "half")


class TestTaylor:
    def test_table(self, capsys):
        rc, out = run(capsys, "taylor")
        assert rc == 0
        schema, _, header, rows = parse_table(out)
        assert schema == "rectgilbert-taylor/1"
        assert header == ["ell_power", "half_model", "full_model", "equal"]
        assert [r[0] for r in rows] == ["0", "2", "4", "6"]
        assert rows[3] == ["6", "-31/720", "-2/45", "0"]
        assert [r[3] for r in rows] == ["1", "1", "1", "0"]


class TestTessellate:
    def test_requires_out(self, capsys):
        rc = cli.main(["tessellate", "--model", "full", "--width", "2",
                       "--height", "2"])
        capsys.readouterr()
        assert rc == 2

    def test_artifacts_and_rerun_identity(self, capsys, tmp_path):
        base = tmp_path / "window"
        argv = ["tessellate", "--model", "full", "--width", "4", "--height",
                "4", "--margin", "2", "--seed", "9", "--out", str(base)]
        rc, out = run(capsys, *argv)
        assert rc == 0
        svg = (tmp_path / "window.svg").read_bytes()
        csv = (tmp_path / "window.csv").read_bytes()
        assert svg.startswith(b'<?xml version="1.0"')
        assert csv.startswith(b"# rectgilbert-segments/1\n")
        manifest = json.loads((tmp_path / "window.svg.manifest.json")
                              .read_text())
        assert manifest["schema"] == "rectgilbert-run/1"
        assert manifest["subcommand"] == "tessellate"
        arts = {a["path"]: a for a in manifest["artifacts"]}
        assert arts[str(tmp_path / "window.svg")]["sha256"] == \
            hashlib.sha256(svg).hexdigest()
        assert arts[str(tmp_path / "window.csv")]["sha256"] == \
            hashlib.sha256(csv).hexdigest()
        # A second run with identical parameters reproduces every byte.
        rc2, _ = run(capsys, *argv)
        assert rc2 == 0
        assert (tmp_path / "window.svg").read_bytes() == svg
        assert (tmp_path / "window.csv").read_bytes() == csv


class TestArgumentErrors:
    def test_q_out_of_range(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["coeffs", "--q", "2/1"])
        assert exc.value.code == 2

    def test_q_decimal_strings_parse_exactly(self, capsys):
        rc, out = run(capsys, "coeffs", "--q", "0.25", "--n-max", "1")
        assert rc == 0
        _, meta, _, rows = parse_table(out)
        assert meta["q"] == "1/4"
        assert rows[1][1] == "1/4"

    def test_q_rejects_garbage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["coeffs", "--q", "half"])
        assert exc.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("rectgilbert ")
