"""Command line front door: voxelize, cache, inspect, bench.

Flag names for provider and grid options use the same snake_case spellings
as the library constructors. Exit codes: 0 success, 1 runtime failure,
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import resource
import statistics
import sys
import time

import numpy as np

from .errors import ConfigError, ParseError, VoxmolError
from .sampling import ExampleProvider


def _env_threads():
    try:
        value = int(os.environ.get("VOXMOL_THREADS", "0"))
    except ValueError:
        return None
    return value if value > 0 else None


def _add_provider_args(parser):
    g = parser.add_argument_group("example provider options")
    g.add_argument("--shuffle", action="store_true", default=False,
                   help="randomize draw order each pass")
    g.add_argument("--balanced", action="store_true", default=False,
                   help="alternate binary classes (label at labelpos != 0)")
    g.add_argument("--stratify_receptor", action="store_true", default=False,
                   help="round-robin over first-file (receptor) pools")
    g.add_argument("--labelpos", type=int, default=0,
                   help="index of the classification label on each line")
    g.add_argument("--stratify_pos", type=int, default=1,
                   help="index of the regression label used for binning")
    g.add_argument("--stratify_abs", action=argparse.BooleanOptionalAction,
                   default=True, help="bin on the absolute regression value")
    g.add_argument("--stratify_min", type=float, default=0.0,
                   help="lower edge of the stratification range")
    g.add_argument("--stratify_max", type=float, default=0.0,
                   help="upper edge of the stratification range")
    g.add_argument("--stratify_step", type=float, default=0.0,
                   help="bin width for numeric stratification")
    g.add_argument("--group_batch_size", type=int, default=1,
                   help="frames per group slice in grouped sampling")
    g.add_argument("--max_group_size", type=int, default=0,
                   help="frames in the largest group; > 0 enables grouping")
    g.add_argument("--cache_structs", action=argparse.BooleanOptionalAction,
                   default=True, help="memoize parsed structures in memory")
    g.add_argument("--duplicate_first", action="store_true", default=False,
                   help="pair the first coordinate set with each later one")
    g.add_argument("--num_copies", type=int, default=1,
                   help="emit each drawn example this many times in a row")
    g.add_argument("--make_vector_types", action="store_true", default=False,
                   help="represent types as one-hot vectors")
    g.add_argument("--data_root", type=str, default="",
                   help="parent directory prefixed to relative structure paths")
    g.add_argument("--recmolcache", type=str, default="",
                   help="MOLC cache for the first file of each line")
    g.add_argument("--ligmolcache", type=str, default="",
                   help="MOLC cache for the remaining files of each line")


def _add_gridmaker_args(parser):
    g = parser.add_argument_group("grid options")
    g.add_argument("--resolution", type=float, default=0.5,
                   help="grid spacing in Angstrom")
    g.add_argument("--dimension", type=float, default=23.5,
                   help="cube side length in Angstrom")
    g.add_argument("--binary", action="store_true", default=False,
                   help="binary overlap indicator instead of densities")
    g.add_argument("--radius_type_indexed", action="store_true", default=False,
                   help="index radii by type id (vector types)")
    g.add_argument("--radius_scale", type=float, default=1.0,
                   help="pre-multiplier on atomic radii")
    g.add_argument("--gaussian_radius_multiple", type=float, default=1.0,
                   help="radius multiple where the Gaussian hands off to the tail")


def _add_common_args(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed for shuffling and augmentation")
    parser.add_argument("--threads", type=int, default=_env_threads(),
                        help="kernel thread count (default: VOXMOL_THREADS or all)")


def _provider_kwargs(args) -> dict:
    return {name: getattr(args, name) for name in ExampleProvider._param_names}


def _gridmaker_kwargs(args) -> dict:
    return {name: getattr(args, name)
            for name in ("resolution", "dimension", "binary", "radius_type_indexed",
                         "radius_scale", "gaussian_radius_multiple")}


def _configure_threads(args) -> None:
    threads = getattr(args, "threads", None)
    if threads is None:
        return
    if threads < 1:
        raise ConfigError(f"--threads must be >= 1, got {threads}")
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(threads)
    from . import voxelizer

    voxelizer.set_num_threads(threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxmol",
        description="Convert molecular structures into voxelized density grids "
                    "and manage the datasets that feed them.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_vox = sub.add_parser(
        "voxelize", help="voxelize structure files or a sampled batch",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_vox.add_argument("molfiles", nargs="*",
                       help="structure files forming one example (.xyz/.pdb)")
    p_vox.add_argument("--types", type=str, default=None,
                       help="metadata file; voxelizes a sampled batch instead")
    p_vox.add_argument("--batch-size", type=int, default=1,
                       help="examples per batch when using --types")
    p_vox.add_argument("-o", "--output", type=str, default="grid.npy",
                       help="output NPY path (JSON sidecar written alongside)")
    p_vox.add_argument("--typer", type=str, default=None,
                       help="typer table file (default: built-in element table)")
    p_vox.add_argument("--random_rotation", action="store_true", default=False,
                       help="apply a random rotation per example")
    p_vox.add_argument("--random_translation", type=float, default=0.0,
                       help="max per-axis random translation in Angstrom")
    _add_gridmaker_args(p_vox)
    _add_provider_args(p_vox)
    _add_common_args(p_vox)
    p_vox.set_defaults(func=cmd_voxelize)

    p_cache = sub.add_parser(
        "cache", help="pack structure files into one MOLC cache",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_cache.add_argument("inputs", nargs="*", help="structure files to pack")
    p_cache.add_argument("--types", type=str, default=None,
                         help="metadata file whose structure tokens are packed")
    p_cache.add_argument("--select", choices=("all", "first", "rest"), default="all",
                         help="which file tokens of each metadata line to pack")
    p_cache.add_argument("-o", "--output", type=str, required=True,
                         help="output cache path")
    p_cache.add_argument("--data_root", type=str, default="",
                         help="parent directory prefixed to relative structure paths")
    p_cache.add_argument("--max_group_size", type=int, default=0,
                         help="set > 0 when the metadata file has group ids")
    p_cache.set_defaults(func=cmd_cache)

    p_inspect = sub.add_parser(
        "inspect", help="report batch composition for a metadata file",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_inspect.add_argument("types", help="metadata (.types) file")
    p_inspect.add_argument("--batches", type=int, default=1,
                           help="number of batches to simulate")
    p_inspect.add_argument("--batch-size", type=int, default=10,
                           help="examples per batch")
    p_inspect.add_argument("--dump", type=str, default=None,
                           help="write drawn batches as JSON to this path ('-' for stdout)")
    _add_provider_args(p_inspect)
    _add_common_args(p_inspect)
    p_inspect.set_defaults(func=cmd_inspect)

    p_bench = sub.add_parser(
        "bench", help="measure gridding throughput on a dataset",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_bench.add_argument("types", help="metadata (.types) file")
    p_bench.add_argument("--batch-size", type=int, default=64,
                         help="grids per timed call")
    p_bench.add_argument("--reps", type=int, default=5,
                         help="timed repetitions (median reported, after warmup)")
    p_bench.add_argument("--json", action="store_true", default=False,
                         help="emit a machine-readable JSON report")
    p_bench.add_argument("--random_rotation", action="store_true", default=False)
    p_bench.add_argument("--random_translation", type=float, default=0.0)
    _add_gridmaker_args(p_bench)
    _add_provider_args(p_bench)
    _add_common_args(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def _make_rng(seed):
    return np.random.default_rng(seed)


def _load_typers(args):
    if getattr(args, "typer", None):
        from .atomtypes import load_typer

        return (load_typer(args.typer),)
    return None


def cmd_voxelize(args) -> int:
    _configure_threads(args)
    from . import voxelizer
    from .sampling import Example

    gm = voxelizer.GridMaker(**_gridmaker_kwargs(args))
    rng = _make_rng(args.seed)
    typers = _load_typers(args)

    if args.types:
        provider = ExampleProvider(**_provider_kwargs(args), typers=typers, seed=rng)
        provider.populate(args.types)
        batch = provider.next_batch(args.batch_size)
        grid = gm.forward_batch(batch,
                                random_translation=args.random_translation,
                                random_rotation=args.random_rotation, rng=rng)
        centers = [gm._default_center(ex.coord_sets) for ex in batch]
        origin = np.array([gm.grid_origin(c) for c in centers])
        labels = voxelizer.channel_names(batch[0])
    else:
        if not args.molfiles:
            raise ConfigError("voxelize needs structure files or --types")
        from .atomtypes import default_element_typer, type_molecule
        from .chemio import parse_molecule_file

        typer = typers[0] if typers else default_element_typer()
        sets = [type_molecule(parse_molecule_file(p), typer) for p in args.molfiles]
        example = Example(coord_sets=sets, labels=[])
        center = gm._default_center(sets)
        grid = gm.forward_batch(
            [example], random_translation=args.random_translation,
            random_rotation=args.random_rotation, rng=rng)[0]
        origin = gm.grid_origin(center)
        labels = voxelizer.channel_names(example)

    voxelizer.save_grid(args.output, grid, origin=origin,
                        resolution=args.resolution, channel_labels=labels,
                        extra={"dimension": args.dimension})
    nonzero = int(np.count_nonzero(grid))
    print(f"shape: {tuple(grid.shape)}")
    print(f"nonzero voxels: {nonzero}")
    print(f"wrote {args.output}")
    return 0


def _iter_types_tokens(path, select, max_group_size):
    from .sampling import parse_types_line

    has_group = max_group_size > 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            spec = parse_types_line(stripped, has_group=has_group,
                                    source=path, line_no=line_no)
            if select == "first":
                yield from spec.files[:1]
            elif select == "rest":
                yield from spec.files[1:]
            else:
                yield from spec.files


def cmd_cache(args) -> int:
    from .chemio import RawMolecule, parse_molecule_file, write_cache

    tokens: list[str] = []
    if args.types:
        tokens.extend(_iter_types_tokens(args.types, args.select, args.max_group_size))
    tokens.extend(args.inputs)
    if not tokens:
        raise ConfigError("cache needs structure files or --types")

    seen: dict[str, RawMolecule] = {}
    for token in tokens:
        if token in seen:
            continue
        path = token
        if args.data_root and not os.path.isabs(path):
            path = os.path.join(args.data_root, path)
        mol = parse_molecule_file(path)
        mol.name = token  # stored under the token used to reference it
        seen[token] = mol
    write_cache(seen.values(), args.output)
    nbytes = os.path.getsize(args.output)
    print(f"entries: {len(seen)}")
    print(f"bytes: {nbytes}")
    print(f"wrote {args.output}")
    return 0


def cmd_inspect(args) -> int:
    provider = ExampleProvider(**_provider_kwargs(args), seed=args.seed)
    provider.populate(args.types)

    grouped = args.max_group_size > 0
    batches = []
    if grouped:
        for _ in range(args.batches):
            group_batch = provider.next_group_specs(args.batch_size)
            batches.append([spec for seq in group_batch for spec in seq])
    else:
        for _ in range(args.batches):
            batches.append(provider.next_specs(args.batch_size))

    flat = [spec for batch in batches for spec in batch]
    real = [spec for spec in flat if spec.files]

    class_counts = {"positive": 0, "negative": 0}
    receptor_counts: dict[str, int] = {}
    stratum_counts: dict[int, int] = {}
    numeric = args.stratify_max > args.stratify_min
    for spec in real:
        if args.labelpos < len(spec.labels):
            key = "positive" if spec.labels[args.labelpos] != 0 else "negative"
            class_counts[key] += 1
        receptor_counts[spec.files[0]] = receptor_counts.get(spec.files[0], 0) + 1
        if numeric:
            value = spec.labels[args.stratify_pos]
            if args.stratify_abs:
                value = abs(value)
            nbins = max(1, int(math.ceil(
                (args.stratify_max - args.stratify_min) / args.stratify_step - 1e-9)))
            idx = min(max(int(math.floor(
                (value - args.stratify_min) / args.stratify_step)), 0), nbins - 1)
            stratum_counts[idx] = stratum_counts.get(idx, 0) + 1

    print(f"dataset: {provider.size} examples from {args.types}")
    print(f"batches: {args.batches}  batch_size: {args.batch_size}  drawn: {len(flat)}")
    print(f"class counts: positive {class_counts['positive']}, "
          f"negative {class_counts['negative']}")
    print("receptor counts:")
    for rec in sorted(receptor_counts):
        print(f"  {rec}  {receptor_counts[rec]}")
    if numeric:
        print("stratum counts:")
        for idx in sorted(stratum_counts):
            lo = args.stratify_min + idx * args.stratify_step
            print(f"  [{lo:g}, {lo + args.stratify_step:g})  {stratum_counts[idx]}")
    print("batch 0:")
    for spec in batches[0]:
        tag = " (pad)" if not spec.files else ""
        group = f"group={spec.group} " if spec.group is not None else ""
        seq = f"seqcont={int(spec.seqcont)} " if grouped else ""
        print(f"  {group}{seq}labels={spec.labels} files={' '.join(spec.files)}{tag}")

    if args.dump:
        doc = {"batches": [[spec.as_dict() for spec in batch] for batch in batches]}
        if args.dump == "-":
            json.dump(doc, sys.stdout, indent=None)
            sys.stdout.write("\n")
        else:
            with open(args.dump, "w", encoding="utf-8") as fh:
                json.dump(doc, fh)
                fh.write("\n")
            print(f"wrote {args.dump}")
    return 0


def cmd_bench(args) -> int:
    _configure_threads(args)
    from . import voxelizer

    gm = voxelizer.GridMaker(**_gridmaker_kwargs(args))

    def run_once(threads: int):
        actual = voxelizer.set_num_threads(threads)
        rng = _make_rng(args.seed)
        provider = ExampleProvider(**_provider_kwargs(args), seed=rng)
        provider.populate(args.types)
        batch = provider.next_batch(args.batch_size)
        kwargs = dict(random_translation=args.random_translation,
                      random_rotation=args.random_rotation)
        grid = gm.forward_batch(batch, rng=_make_rng(args.seed), **kwargs)  # warmup
        times = []
        for _ in range(max(1, args.reps)):
            t0 = time.perf_counter()
            grid = gm.forward_batch(batch, rng=_make_rng(args.seed), **kwargs)
            times.append(time.perf_counter() - t0)
        checksum = hashlib.sha256(np.ascontiguousarray(grid).tobytes()).hexdigest()
        peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        return {
            "threads": actual,
            "grids_per_sec": args.batch_size / statistics.median(times),
            "peak_mb": peak_kb / 1024.0,
            "checksum": checksum,
        }

    import numba

    max_threads = numba.config.NUMBA_NUM_THREADS
    thread_counts = sorted({1, max_threads})
    results = [run_once(t) for t in thread_counts]

    if args.json:
        print(json.dumps({"batch_size": args.batch_size, "reps": args.reps,
                          "results": results}))
    else:
        print(f"batch_size: {args.batch_size}  reps: {args.reps} (median)")
        for r in results:
            print(f"threads {r['threads']:>3}: {r['grids_per_sec']:9.2f} grids/s  "
                  f"peak {r['peak_mb']:.1f} MB  checksum {r['checksum'][:16]}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError, FileNotFoundError) as exc:
        print(f"voxmol: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"voxmol: error: {exc}", file=sys.stderr)
        return 2
    except (VoxmolError, OSError, RuntimeError) as exc:
        print(f"voxmol: failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
