"""Render fitness-map galleries for builtin problems.

Samples a design per (function, instance), writes the plain 2-D raster, the
per-pair channel stack, its mean reduction, and the PCA view as PGM files,
plus a manifest listing fill counts.

Usage:
    python3 scripts/make_map_gallery.py --functions sphere rastrigin \
        --dimension 3 --instances 2 --resolution 64 --out-dir maps/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from landsel.fitmap import (
    multichannel,
    pca_project,
    rasterize_2d,
    rasterize_projection,
    reduce_mean,
    write_pgm,
    write_stack,
)
from landsel.preprocess import preprocess_pipeline
from landsel.sampling import create_initial_design, evaluate_design
from landsel.space import BUILTIN_FUNCTIONS, builtin_problem


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--functions", nargs="+", default=sorted(BUILTIN_FUNCTIONS))
    ap.add_argument("--dimension", type=int, default=2)
    ap.add_argument("--instances", type=int, default=1)
    ap.add_argument("--n", type=int, default=None, help="design size (default 50*D)")
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="maps")
    args = ap.parse_args(argv)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for fid in args.functions:
        for iid in range(args.instances):
            problem = builtin_problem(fid, iid, args.dimension)
            design = evaluate_design(
                problem, create_initial_design(problem.space, n=args.n, seed=args.seed)
            )
            processed = preprocess_pipeline(design)
            stem = out_dir / f"{fid}_d{args.dimension}_i{iid}"

            raw = rasterize_2d(processed, resolution=args.resolution)
            write_pgm(raw, stem.with_name(stem.name + "_raw.pgm"))
            manifest.append((f"{stem.name}_raw.pgm", raw.non_empty))

            if processed.width > 2:
                stack = multichannel(processed, resolution=args.resolution)
                for path in write_stack(stack, stem):
                    manifest.append((path.name, None))
                reduced = reduce_mean(stack)
                write_pgm(reduced, stem.with_name(stem.name + "_mean.pgm"))
                manifest.append((f"{stem.name}_mean.pgm", reduced.non_empty))

            projection = pca_project(processed)
            pca_map = rasterize_projection(projection, processed.objective, args.resolution)
            write_pgm(pca_map, stem.with_name(stem.name + "_pca.pgm"))
            manifest.append((f"{stem.name}_pca.pgm", pca_map.non_empty))

    lines = [f"{name}\t{'' if fill is None else fill}" for name, fill in manifest]
    (out_dir / "manifest.tsv").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(manifest)} maps to {out_dir}/ (manifest.tsv lists fill counts)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
