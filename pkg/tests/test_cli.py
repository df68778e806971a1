import hashlib
import json

import numpy as np
import pytest

from graspgeom.cli import main
from graspgeom.mesh import save_obj
from graspgeom.primitives import box_mesh
from graspgeom.sdf import build_sdf_grid, load_grid, save_grid


@pytest.fixture(scope="module")
def cube_obj(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "cube.obj"
    save_obj(box_mesh(), path)
    return path


@pytest.fixture(scope="module")
def small_cube_obj(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "smallcube.obj"
    save_obj(box_mesh(extents=(0.1, 0.1, 0.1)), path)
    return path


@pytest.fixture(scope="module")
def grid_file(tmp_path_factory, cube):
    path = tmp_path_factory.mktemp("grids") / "cube.sdf"
    save_grid(build_sdf_grid(cube, dims=(32, 32, 32)), path)
    return path


def write_manifest(tmp_path, objects, cache="cache"):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"cache_dir": cache, "objects": objects}))
    return path


class TestPrecompute:
    def test_build_then_idempotent(self, tmp_path, small_cube_obj, capsys):
        manifest = write_manifest(tmp_path, [
            {"name": "smallcube", "mesh": str(small_cube_obj), "mass": 0.2}])
        args = ["precompute-sdf", str(manifest), "--dims", "24", "24", "24",
                "--seed", "1"]
        assert main(args) == 0
        cache = tmp_path / "cache"
        produced = sorted(p.name for p in cache.iterdir())
        assert produced == ["assets.json", "smallcube.pc128.npy",
                            "smallcube.pc32.npy", "smallcube.pc512.npy",
                            "smallcube.sdf", "smallcube.sq.json"]
        n = 24 ** 3
        assert (cache / "smallcube.sdf").stat().st_size == 64 + 4 * n
        before = {p.name: p.read_bytes() for p in cache.iterdir()}
        capsys.readouterr()

        assert main(args) == 0
        out = capsys.readouterr().out
        assert "up-to-date" in out
        after = {p.name: p.read_bytes() for p in cache.iterdir()}
        assert before == after

        assets = json.loads((cache / "assets.json").read_text())
        assert "smallcube" in assets
        assert assets["smallcube"]["mass"] == 0.2
        assert len(assets["smallcube"]["com"]) == 3
        grid = load_grid(cache / "smallcube.sdf")
        assert np.array_equal(grid.dims, [24, 24, 24])

    def test_missing_mesh_is_isolated(self, tmp_path, small_cube_obj, capsys):
        manifest = write_manifest(tmp_path, [
            {"name": "ok", "mesh": str(small_cube_obj)},
            {"name": "ghost", "mesh": str(tmp_path / "missing.obj")}])
        code = main(["precompute-sdf", str(manifest),
                     "--dims", "16", "16", "16", "--seed", "1"])
        captured = capsys.readouterr()
        assert code == 1
        assert (tmp_path / "cache" / "ok.sdf").exists()
        assert "ghost" in captured.err
        assert "FAILED" in captured.err

    def test_duplicate_names_rejected(self, tmp_path, small_cube_obj):
        manifest = write_manifest(tmp_path, [
            {"name": "a", "mesh": str(small_cube_obj)},
            {"name": "a", "mesh": str(small_cube_obj)}])
        assert main(["precompute-sdf", str(manifest)]) == 2


class TestBenchQuery:
    def test_report_and_dump(self, tmp_path, grid_file, capsys):
        out_dir = tmp_path / "bench"
        code = main(["bench-query", str(grid_file), "--points", "1000",
                     "--repeats", "3", "--seed", "5", "--out", str(out_dir)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "median:" in captured
        pts = np.fromfile(out_dir / "points.f64").reshape(-1, 3)
        dists = np.fromfile(out_dir / "dists.f64")
        assert pts.shape == (1000, 3)
        assert dists.shape == (1000,)
        meta = json.loads((out_dir / "meta.json").read_text())
        assert meta["points"] == 1000
        assert meta["checksum"] == hashlib.sha256(dists.tobytes()).hexdigest()[:16]

    def test_zero_points(self, grid_file, capsys):
        assert main(["bench-query", str(grid_file), "--points", "0",
                     "--repeats", "2"]) == 0
        assert "points: 0" in capsys.readouterr().out

    def test_checksum_deterministic(self, grid_file, capsys):
        main(["bench-query", str(grid_file), "--points", "500", "--repeats", "1",
              "--seed", "9"])
        first = capsys.readouterr().out
        main(["bench-query", str(grid_file), "--points", "500", "--repeats", "1",
              "--seed", "9"])
        second = capsys.readouterr().out
        line = [l for l in first.splitlines() if l.startswith("checksum")]
        assert line == [l for l in second.splitlines() if l.startswith("checksum")]

    def test_unloadable_grid(self, tmp_path):
        bad = tmp_path / "bad.sdf"
        bad.write_bytes(b"not a grid")
        assert main(["bench-query", str(bad)]) == 1


class TestFitSq:
    @pytest.mark.slow
    def test_cube_fit_output(self, tmp_path, cube_obj, capsys):
        out = tmp_path / "cube.sq.json"
        code = main(["fit-sq", str(cube_obj), "--lambda", "0", "--seed", "2",
                     "--dims", "48", "48", "48", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert max(doc["exponents"]) <= 0.35
        assert np.allclose(doc["scale"], 0.5, rtol=0.10)

    def test_invalid_mesh(self, tmp_path, capsys):
        bad = tmp_path / "bad.obj"
        bad.write_text("not a mesh\n")
        assert main(["fit-sq", str(bad)]) == 1
        assert "error" in capsys.readouterr().err


class TestObbAndSamples:
    def test_obb_json(self, tmp_path, capsys):
        # a non-degenerate box, so the principal axes are well defined
        mesh_path = tmp_path / "slab.obj"
        save_obj(box_mesh(extents=(0.2, 0.1, 0.05)), mesh_path)
        out = tmp_path / "obb.json"
        assert main(["obb", str(mesh_path), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert np.allclose(doc["extent"], [0.2, 0.1, 0.05], atol=5e-3)
        assert len(doc["quaternion_wxyz"]) == 4

    def test_sample_pc(self, cube_obj, tmp_path, capsys):
        out = tmp_path / "pc.npy"
        assert main(["sample-pc", str(cube_obj), "--points", "64",
                     "--seed", "3", "--out", str(out)]) == 0
        pts = np.load(out)
        assert pts.shape == (64, 3)


class TestRewardEval:
    def test_annotated_output(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("step,delta_h,d1,d2,d3,d4,d5\n0,0.2,0,0,0,0,0\n")
        assert main(["reward-eval", str(trace)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "step,delta_h,d1,d2,d3,d4,d5,r_sdf,lift,total,success"
        cells = out[1].split(",")
        assert float(cells[-2]) == pytest.approx(5065.0, abs=1e-9)

    def test_empty_trace(self, tmp_path, capsys):
        trace = tmp_path / "empty.csv"
        trace.write_text("")
        assert main(["reward-eval", str(trace)]) == 0
        assert capsys.readouterr().out == ""

    def test_malformed_row_names_line(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("0,0.2,0,0,0,0,0\n1,0.1,0,0,0\n")
        assert main(["reward-eval", str(trace)]) == 1
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_config_override(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("0,0.2,0,0,0,0,0\n")
        assert main(["reward-eval", str(trace), "--c3", "0"]) == 0
        out = capsys.readouterr().out.splitlines()
        cells = out[0].split(",")
        assert float(cells[-2]) == pytest.approx(5025.0, abs=1e-9)


class TestInvocation:
    def test_no_command(self):
        assert main([]) == 2

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 2

    def test_bad_bounds_count(self, tmp_path, small_cube_obj):
        manifest = write_manifest(tmp_path, [
            {"name": "c", "mesh": str(small_cube_obj)}])
        code = main(["precompute-sdf", str(manifest), "--bounds", "1", "2", "3"])
        assert code == 2
