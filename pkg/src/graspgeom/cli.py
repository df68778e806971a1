"""Batch pipeline and benchmark front end.

Subcommands: precompute-sdf, fit-sq, obb, sample-pc, bench-query, reward-eval.
Exit codes: 0 success, 1 partial or total failure, 2 invalid invocation.

The precompute manifest is JSON:

    {"cache_dir": "cache", "objects": [{"name": "cube", "mesh": "cube.obj",
                                        "mass": 0.3}]}

Mass is optional metadata and is carried through to the asset manifest.
"""

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .mesh import (center_of_mass, load_mesh, oriented_bounding_box,
                   sample_surface)
from .representation import PC_SIZES, write_asset_manifest
from .reward import RewardConfig, annotate_trace
from .sdf import DEFAULT_DIMS, build_sdf_grid, load_grid, query, save_grid
from .superquadric import FitConfig, fit_superquadric, save_fit_result


def _add_bounds_args(p):
    p.add_argument("--dims", type=int, nargs=3, default=list(DEFAULT_DIMS),
                   metavar=("NX", "NY", "NZ"), help="voxel counts per axis")
    p.add_argument("--bounds", type=float, nargs="+", default=None,
                   help="grid bounds: LO HI (uniform) or 6 values "
                        "XLO YLO ZLO XHI YHI ZHI; default [-0.5, 0.5]^3")


def _parse_bounds(values):
    if values is None:
        return None
    if len(values) == 2:
        lo, hi = values
        return (np.full(3, lo), np.full(3, hi))
    if len(values) == 6:
        return (np.array(values[:3]), np.array(values[3:]))
    raise SystemExit("--bounds takes 2 or 6 numbers")


def build_parser():
    parser = argparse.ArgumentParser(prog="graspgeom",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute-sdf",
                       help="build and cache SDF grid, OBB, COM, SQ fit, and "
                            "point-cloud samples for every object in a manifest")
    p.add_argument("manifest", help="corpus manifest JSON")
    _add_bounds_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="superquadric regularization weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="rebuild up-to-date caches")
    p.add_argument("--jobs", type=int, default=1, help="worker pool width")

    p = sub.add_parser("fit-sq", help="recover a superquadric for one mesh")
    p.add_argument("mesh")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", type=int, nargs=3, default=[128, 128, 128],
                   metavar=("NX", "NY", "NZ"),
                   help="regularizer grid resolution (fitted to the mesh AABB)")
    p.add_argument("--compare", action="store_true",
                   help="also run the unregularized fit and print the reg_loss ratio")
    p.add_argument("--out", default=None, help="output JSON path")

    p = sub.add_parser("obb", help="oriented bounding box of a mesh")
    p.add_argument("mesh")
    p.add_argument("--out", default=None, help="output JSON path")

    p = sub.add_parser("sample-pc", help="seeded area-uniform surface samples")
    p.add_argument("mesh")
    p.add_argument("--points", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output .npy path")

    p = sub.add_parser("bench-query", help="time batched grid queries")
    p.add_argument("grid", help="grid cache file")
    p.add_argument("--points", type=int, default=81920)
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None,
                   help="directory for points.f64 / dists.f64 / meta.json dumps")

    p = sub.add_parser("reward-eval", help="annotate a reward trace CSV")
    p.add_argument("trace", help="input CSV (step, delta_h, d1..d5); - for stdin")
    p.add_argument("--out", default=None, help="output CSV; default stdout")
    p.add_argument("--c1", type=float, default=0.5)
    p.add_argument("--c2", type=float, default=5000.0)
    p.add_argument("--c3", type=float, default=1.0)
    p.add_argument("--eps-h", type=float, default=0.02)
    p.add_argument("--eps-sdf", type=float, default=0.025)
    p.add_argument("--h-bar", type=float, default=0.2)
    return parser


# ---------------------------------------------------------------------------
# precompute
# ---------------------------------------------------------------------------

def _grid_is_current(path: Path, dims, bounds):
    if not path.exists():
        return False
    try:
        grid = load_grid(path)
    except Exception:
        return False
    bmin, bmax = ((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5)) if bounds is None else bounds
    return (np.array_equal(grid.dims, dims)
            and np.allclose(grid.bounds_min, bmin)
            and np.allclose(grid.bounds_max, bmax))


def _precompute_object(entry, cache_dir: Path, args, bounds):
    name = entry["name"]
    t0 = time.perf_counter()
    mesh = load_mesh(entry["mesh"])
    paths = {
        "sdf": cache_dir / f"{name}.sdf",
        "sq": cache_dir / f"{name}.sq.json",
        "pc": {n: cache_dir / f"{name}.pc{n}.npy" for n in PC_SIZES},
    }
    built = []
    if args.force or not _grid_is_current(paths["sdf"], args.dims, bounds):
        grid = build_sdf_grid(mesh, dims=args.dims, bounds=bounds)
        save_grid(grid, paths["sdf"])
        built.append("sdf")
    else:
        grid = load_grid(paths["sdf"])
    for n, pc_path in paths["pc"].items():
        if args.force or not pc_path.exists():
            np.save(pc_path, sample_surface(mesh, n, args.seed).points)
            built.append(f"pc{n}")
    if args.force or not paths["sq"].exists():
        points = sample_surface(mesh, 2000, args.seed).points
        fit = fit_superquadric(points, grid, FitConfig(lam=args.lam, seed=args.seed))
        save_fit_result(fit, paths["sq"])
        built.append("sq")
    obb = oriented_bounding_box(mesh)
    com = center_of_mass(mesh)
    entry_out = {
        "mesh": entry["mesh"],
        "sdf": str(paths["sdf"]),
        "sq": str(paths["sq"]),
        "pc": {str(n): str(p) for n, p in paths["pc"].items()},
        "com": [float(v) for v in com],
        "obb": {
            "center": [float(v) for v in obb.center],
            "quaternion_wxyz": [float(v) for v in obb.quaternion],
            "extent": [float(v) for v in obb.extent],
        },
    }
    if "mass" in entry:
        entry_out["mass"] = entry["mass"]
    return name, entry_out, built, time.perf_counter() - t0


def cmd_precompute(args) -> int:
    bounds = _parse_bounds(args.bounds)
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    objects = manifest.get("objects", [])
    names = [o.get("name") for o in objects]
    if len(set(names)) != len(names):
        print("error: duplicate object names in manifest", file=sys.stderr)
        return 2
    cache_dir = Path(manifest.get("cache_dir", "cache"))
    if not cache_dir.is_absolute():
        cache_dir = Path(args.manifest).parent / cache_dir
    cache_dir.mkdir(parents=True, exist_ok=True)

    results, failures = {}, {}
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        futures = {pool.submit(_precompute_object, o, cache_dir, args, bounds):
                   o["name"] for o in objects}
        for fut, name in futures.items():
            try:
                results[name] = fut.result()
            except Exception as exc:
                failures[name] = exc

    entries = {}
    for name in sorted(results):
        _, entry_out, built, dt = results[name]
        entries[name] = entry_out
        what = ",".join(built) if built else "up-to-date"
        print(f"{name}: {what} ({dt:.2f}s)")
    for name in sorted(failures):
        print(f"{name}: FAILED: {failures[name]}", file=sys.stderr)

    manifest_path = cache_dir / "assets.json"
    if entries:
        payload = json.dumps(entries, indent=2, sort_keys=True) + "\n"
        if not manifest_path.exists() or manifest_path.read_text() != payload:
            write_asset_manifest(manifest_path, entries)
    print(f"{len(results)} ok, {len(failures)} failed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# other subcommands
# ---------------------------------------------------------------------------

def cmd_fit_sq(args) -> int:
    mesh = load_mesh(args.mesh)
    lo, hi = mesh.aabb()
    pad = 0.35 * float(np.linalg.norm(hi - lo))
    grid = build_sdf_grid(mesh, dims=args.dims, bounds=(lo - pad, hi + pad))
    points = sample_surface(mesh, 2000, args.seed).points
    out = Path(args.out) if args.out else Path(args.mesh).with_suffix(".sq.json")
    fit = fit_superquadric(points, grid, FitConfig(lam=args.lam, seed=args.seed))
    save_fit_result(fit, out)
    sq = fit.superquadric
    print(f"scale: {sq.scale.tolist()}")
    print(f"exponents: {sq.exponents.tolist()}")
    print(f"data_loss: {fit.data_loss:.6g}  reg_loss: {fit.reg_loss:.6g}  "
          f"converged: {fit.converged}  start: {fit.start_index}")
    print(f"wrote {out}")
    if args.compare:
        base = fit_superquadric(points, grid, FitConfig(lam=0.0, seed=args.seed))
        base_out = out.with_suffix(".lam0.json")
        save_fit_result(base, base_out)
        ratio = fit.reg_loss / base.reg_loss if base.reg_loss > 0 else float("nan")
        print(f"lam=0 data_loss: {base.data_loss:.6g}  reg_loss: {base.reg_loss:.6g}")
        print(f"reg_loss ratio (lam={args.lam} / lam=0): {ratio:.4f}")
        print(f"wrote {base_out}")
    return 0


def cmd_obb(args) -> int:
    mesh = load_mesh(args.mesh)
    obb = oriented_bounding_box(mesh)
    doc = {
        "center": obb.center.tolist(),
        "quaternion_wxyz": obb.quaternion.tolist(),
        "extent": obb.extent.tolist(),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_sample_pc(args) -> int:
    mesh = load_mesh(args.mesh)
    pts = sample_surface(mesh, args.points, args.seed).points
    print(f"{len(pts)} points, seed {args.seed}")
    if args.out:
        np.save(args.out, pts)
        print(f"wrote {args.out}")
    else:
        for p in pts[:5]:
            print(f"  {p[0]:+.6f} {p[1]:+.6f} {p[2]:+.6f}")
        if len(pts) > 5:
            print(f"  ... {len(pts) - 5} more")
    return 0


def cmd_bench_query(args) -> int:
    grid = load_grid(args.grid)
    rng = np.random.default_rng(args.seed)
    pts = rng.uniform(grid.bounds_min, grid.bounds_max, size=(args.points, 3))
    dists = query(grid, pts)  # warm-up (JIT) and the dump payload
    times = []
    for _ in range(max(1, args.repeats)):
        t0 = time.perf_counter()
        query(grid, pts)
        times.append(time.perf_counter() - t0)
    med = float(np.median(times))
    best = float(np.min(times))
    checksum = hashlib.sha256(dists.tobytes()).hexdigest()[:16]
    rate = args.points / med if med > 0 else float("inf")
    print(f"points: {args.points}  repeats: {args.repeats}")
    print(f"median: {med * 1e3:.3f} ms  min: {best * 1e3:.3f} ms  "
          f"rate: {rate / 1e6:.1f} Mpts/s")
    print(f"checksum: {checksum}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        pts.astype("<f8").tofile(out / "points.f64")
        dists.astype("<f8").tofile(out / "dists.f64")
        meta = {
            "points": args.points, "repeats": args.repeats, "seed": args.seed,
            "median_ms": med * 1e3, "min_ms": best * 1e3,
            "checksum": checksum, "grid": str(args.grid),
        }
        with open(out / "meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {out}/points.f64, dists.f64, meta.json")
    return 0


def cmd_reward_eval(args) -> int:
    config = RewardConfig(c1=args.c1, c2=args.c2, c3=args.c3,
                          eps_h=args.eps_h, eps_sdf=args.eps_sdf,
                          h_bar=args.h_bar)
    if args.trace == "-":
        lines = sys.stdin.readlines()
    else:
        with open(args.trace) as fh:
            lines = fh.readlines()
    out_lines, errors = annotate_trace(lines, config)
    text = "\n".join(out_lines)
    if out_lines:
        text += "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for lineno, msg in errors:
        print(f"line {lineno}: {msg}", file=sys.stderr)
    return 1 if errors else 0


_COMMANDS = {
    "precompute-sdf": cmd_precompute,
    "fit-sq": cmd_fit_sq,
    "obb": cmd_obb,
    "sample-pc": cmd_sample_pc,
    "bench-query": cmd_bench_query,
    "reward-eval": cmd_reward_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # late argument validation (e.g. --bounds arity)
        if not isinstance(exc.code, int):
            print(f"error: {exc.code}", file=sys.stderr)
            return 2
        return exc.code
    except (OSError, ValueError, RuntimeError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
