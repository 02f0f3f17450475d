from __future__ import annotations

import json
import math

import pytest

from qrgraph.cli import main


def run(args) -> int:
    return main([str(a) for a in args])


@pytest.fixture()
def cover_dir(tmp_path):
    out = tmp_path / "gen"
    assert run(["gen", "--kind", "cycle_cover", "--n", 8, "--m", 2, "--out", out]) == 0
    return out


def _strip_time(path):
    with open(path) as fh:
        obj = json.load(fh)
    obj.pop("wall_time_s")
    return json.dumps(obj, sort_keys=True)


class TestValidate:
    def test_valid_corpus_file_exit_zero(self, cover_dir, tmp_path):
        assert run(["validate", cover_dir / "map.json", "--out", tmp_path / "v"]) == 0

    def test_asymmetric_dist_exit_two(self, tmp_path):
        bad = {
            "vertices": [{"id": "a", "mass": 1.0}, {"id": "b", "mass": 1.0}],
            "edges": [{"u": "a", "v": "b", "len": 1.0}],
            "dist": [[0.0, 1.0], [2.0, 0.0]],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        assert run(["validate", path, "--out", tmp_path / "v"]) == 2

    def test_non_surjective_map_exit_two(self, cover_dir, tmp_path):
        with open(cover_dir / "map.json") as fh:
            obj = json.load(fh)
        obj["pairs"] = [[x, "t0000"] for x, _y in obj["pairs"]]
        bad = tmp_path / "badmap.json"
        bad.write_text(json.dumps(obj))
        assert run(["validate", bad, "--out", tmp_path / "v"]) == 2

    def test_unknown_field_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vertices": [], "edges": [], "dist": "path", "x": 1}))
        assert run(["validate", path, "--out", tmp_path / "v"]) == 2


class TestSubcommands:
    def test_pullback_emits_matrix_and_report(self, cover_dir, tmp_path):
        out = tmp_path / "pb"
        assert run(["pullback", "--map", cover_dir / "map.json", "--out", out]) == 0
        assert (out / "pullback_matrix.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["exact"] is True

    def test_exact_cap_exit_three(self, cover_dir, tmp_path):
        code = run(["pullback", "--map", cover_dir / "map.json",
                    "--exact-cap", 4, "--out", tmp_path / "pb"])
        assert code == 3

    def test_modulus_connecting_family(self, cover_dir, tmp_path):
        fam = tmp_path / "fam.json"
        fam.write_text(json.dumps({"connect": {"E": ["t0000"], "F": ["t0004"]}}))
        out = tmp_path / "mod"
        assert run(["modulus", "--space", cover_dir / "target.json",
                    "--family", fam, "--p", 2, "--out", out]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["value"] == pytest.approx(0.5)
        assert (out / "density.csv").exists()

    def test_verify_properties(self, cover_dir, tmp_path):
        for prop in ("bld", "bdd", "lq", "metric-qr", "inverse-qr", "bqs"):
            code = run(["verify", "--map", cover_dir / "map.json",
                        "--property", prop, "--out", tmp_path / prop])
            assert code == 0, prop

    def test_embed_outputs(self, cover_dir, tmp_path):
        out = tmp_path / "em"
        assert run(["embed", "--map", cover_dir / "map.json", "--out", out]) == 0
        assert (out / "coordinates.csv").exists()
        assert (out / "plan.json").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["injective"] is True

    def test_measure_outputs(self, cover_dir, tmp_path):
        out = tmp_path / "ms"
        assert run(["measure", "--map", cover_dir / "map.json", "--out", out]) == 0
        assert (out / "jacobians.csv").exists()

    def test_gen_polar_grid(self, tmp_path):
        out = tmp_path / "pg"
        assert run(["gen", "--kind", "polar_grid", "--levels", 3, "--sectors", 6,
                    "--r0", 1.0, "--r1", math.e, "--out", out]) == 0
        assert (out / "space.json").exists()

    def test_gen_pullback_space(self, cover_dir, tmp_path):
        out = tmp_path / "pbs"
        assert run(["gen", "--kind", "pullback_space", "--map", cover_dir / "map.json",
                    "--out", out]) == 0
        assert run(["validate", out / "space.json", "--out", out / "v"]) == 0

    def test_modulus_weight_file(self, cover_dir, tmp_path):
        fam = tmp_path / "fam.json"
        fam.write_text(json.dumps({"connect": {"E": ["t0000"], "F": ["t0004"]}}))
        wfile = tmp_path / "w.json"
        wfile.write_text(json.dumps({f"t{i:04d}": 2.0 for i in range(8)}))
        out = tmp_path / "modw"
        assert run(["modulus", "--space", cover_dir / "target.json", "--family", fam,
                    "--weight", wfile, "--out", out]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["value"] == pytest.approx(1.0)  # doubled weights

    def test_usage_error_64(self, capsys):
        assert run(["bogus-command"]) == 64


class TestDeterminism:
    def test_reports_byte_identical_modulo_walltime(self, cover_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["embed", "--map", cover_dir / "map.json",
                        "--seed", 7, "--out", out]) == 0
        assert _strip_time(a / "report.json") == _strip_time(b / "report.json")
        assert (a / "coordinates.csv").read_text() == (b / "coordinates.csv").read_text()
        assert (a / "plan.json").read_text() == (b / "plan.json").read_text()
