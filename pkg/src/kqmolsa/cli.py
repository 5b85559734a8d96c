"""Command-line front end: descriptor, compare, screen and selftest."""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .distance import MinimizerOptions, NonPDError
from .molecule import MoleculeError, default_radii, iter_sdf_blocks, parse_sdf
from .quantize import QuadratureConfig, QuantizeError, ShapeDescriptor, descriptor_from_molecule
from .similarity import DEFAULT_WEIGHTS, check_weights, score, score_to_dict, screen, to_csv

logger = logging.getLogger("kqmolsa")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
DESCRIPTOR_SUFFIX = ".kq.json"


class CLIError(Exception):
    pass


def _weights(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must look like 0.3,0.7, got {text!r}") from None
    try:
        return check_weights((x, y))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=_positive_int, default=None, help="quantization level (default 1)")
    common.add_argument("--nr", type=int, default=15, help="radial quadrature points")
    common.add_argument("--ntheta", type=int, default=10, help="angular quadrature points")
    common.add_argument("--radii", default=None, help="radii table overriding the Bondi values")
    common.add_argument("--jobs", type=_positive_int, default=1)
    common.add_argument("-v", "--verbose", action="count", default=0)

    align = argparse.ArgumentParser(add_help=False)
    align.add_argument("--weights", type=_weights, default=DEFAULT_WEIGHTS, help="area,shape weights (default 0.3,0.7)")
    align.add_argument("--minimizer", choices=("nelder-mead", "powell"), default="nelder-mead")
    align.add_argument("--seed", type=int, default=0, help="seed for minimizer restarts")
    align.add_argument("--format", choices=("text", "csv", "json"), default="text")

    p = argparse.ArgumentParser(prog="kqmolsa", description="Kähler quantization molecular shape descriptors")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("descriptor", parents=[common], help="write one descriptor file per SDF record")
    d.add_argument("--input", required=True, help="SDF file")
    d.add_argument("--output", default=".", help="output directory")
    d.add_argument("--plot", action="store_true", help="also draw each planar domain")

    c = sub.add_parser("compare", parents=[common, align], help="score two molecules or descriptor files")
    c.add_argument("inputs", nargs=2, metavar="INPUT")

    s = sub.add_parser("screen", parents=[common, align], help="rank a library against a query")
    s.add_argument("--query", required=True)
    s.add_argument("--library", required=True, nargs="+", help="SDF files, descriptor files or directories of them")
    s.add_argument("--output", default=None, help="CSV report path (default: stdout)")
    s.add_argument("--top", type=_positive_int, default=None)
    s.add_argument("--plot", action="store_true", help="draw the ranked scores next to the report")

    t = sub.add_parser("selftest", parents=[common], help="run the built-in oracle checks")
    t.add_argument("--seed", type=int, default=0)
    return p


# --- descriptors ---------------------------------------------------------------


def _descriptor_job(args):
    block, k, q, radii = args
    try:
        mol = parse_sdf(block)
        return descriptor_from_molecule(mol, k, q, radii)
    except (MoleculeError, QuantizeError, ValueError) as exc:
        name = block.splitlines()[0].strip() if block.strip() else ""
        return f"{name or 'record'}: {exc}"


def _map(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def descriptors_from_sdf(path, k, q, radii, jobs=1):
    """Descriptors of every record, in file order; failures come back as messages."""
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc}") from None
    blocks = list(iter_sdf_blocks(text))
    if not blocks:
        raise CLIError(f"{path}: no molfile records")
    return _map(_descriptor_job, [(b, k, q, radii) for b in blocks], jobs)


def _is_descriptor_file(path: Path) -> bool:
    return path.name.endswith(DESCRIPTOR_SUFFIX) or path.suffix == ".json"


def load_inputs(paths, k, q, radii, jobs=1):
    """Descriptors from descriptor files, directories of them, or SDFs.

    Returns (descriptors, error messages).
    """
    out, errors = [], []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files = sorted(path.glob("*" + DESCRIPTOR_SUFFIX))
            if not files:
                raise CLIError(f"{path}: no {DESCRIPTOR_SUFFIX} files")
            for f in files:
                out.append(_load_descriptor(f))
        elif _is_descriptor_file(path):
            out.append(_load_descriptor(path))
        else:
            for res in descriptors_from_sdf(path, k, q, radii, jobs):
                (out if isinstance(res, ShapeDescriptor) else errors).append(res)
    return out, errors


def _load_descriptor(path: Path) -> ShapeDescriptor:
    try:
        desc = ShapeDescriptor.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CLIError(f"cannot read descriptor {path}: {exc}") from None
    if not desc.molecule_name:
        desc.molecule_name = path.name.removesuffix(DESCRIPTOR_SUFFIX)
    return desc


def _infer_k(args, paths) -> int:
    """Explicit --k wins; otherwise adopt the level of the first descriptor file given."""
    if args.k is not None:
        return args.k
    for raw in paths:
        path = Path(raw)
        if path.is_file() and _is_descriptor_file(path):
            try:
                return int(json.loads(path.read_text())["k"])
            except (OSError, ValueError, KeyError):
                break
    return 1


def _safe_stem(name: str, index: int, used: set) -> str:
    stem = re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("._") or f"mol{index + 1}"
    base, n = stem, 2
    while stem in used:
        stem = f"{base}_{n}"
        n += 1
    used.add(stem)
    return stem


# --- commands -------------------------------------------------------------------


def cmd_descriptor(args, q, radii) -> int:
    k = args.k or 1
    results = descriptors_from_sdf(args.input, k, q, radii, args.jobs)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    used: set[str] = set()
    n_ok = 0
    for i, res in enumerate(results):
        if isinstance(res, str):
            print(f"error: {res}", file=sys.stderr)
            continue
        stem = _safe_stem(res.molecule_name, i, used)
        path = outdir / (stem + DESCRIPTOR_SUFFIX)
        res.save(path)
        n_ok += 1
        print(f"{path}\tarea_check={res.area_check:.4f}\tarea={res.area_original:.2f}")
        for w in res.warnings:
            print(f"warning: {res.molecule_name}: {w}", file=sys.stderr)
        if args.plot:
            _plot_domain_for(args.input, i, radii, outdir / (stem + ".domain.png"))
    if n_ok == 0:
        return EXIT_FATAL
    return EXIT_OK if n_ok == len(results) else EXIT_PARTIAL


def _plot_domain_for(sdf_path, index, radii, png_path):
    from .domain import build_domain
    from .molecule import build_sphere_set
    from .plotting import plot_domain
    from .surface import build_surface

    block = list(iter_sdf_blocks(Path(sdf_path).read_bytes()))[index]
    mol = parse_sdf(block)
    plot_domain(build_domain(build_surface(build_sphere_set(mol, radii))), png_path, mol.name)


def _alignment_opts(args) -> MinimizerOptions:
    return MinimizerOptions(method=args.minimizer, seed=args.seed)


def cmd_compare(args, q, radii) -> int:
    k = _infer_k(args, args.inputs)
    descs = []
    for path in args.inputs:
        found, errors = load_inputs([path], k, q, radii)
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        if not found:
            raise CLIError(f"{path}: no usable molecule")
        descs.append(found[0])
    a, b = descs
    if a.k != b.k:
        raise CLIError(f"quantization level mismatch: {a.name or 'first'} has k={a.k}, {b.name or 'second'} has k={b.k}")
    try:
        s = score(a, b, args.weights, _alignment_opts(args))
    except NonPDError as exc:
        raise CLIError(f"descriptor unusable: {exc}") from None
    if args.format == "csv":
        s.name = b.name
        sys.stdout.write(to_csv([s]))
    elif args.format == "json":
        out = score_to_dict(s)
        out.update(query=a.name, target=b.name)
        print(json.dumps(out, indent=1))
    else:
        print(f"query      {a.name}")
        print(f"target     {b.name}")
        print(f"score      {s.score:.3f}")
        print(f"distance   {s.distance:.4f}")
        print(f"area_ratio {s.area_ratio:.4f}")
        print(f"p          {round(s.scale_p, 4) + 0.0:.4f}")
        print(f"converged  {'yes' if s.converged else 'no'}")
    return EXIT_OK


def cmd_screen(args, q, radii) -> int:
    k = _infer_k(args, [args.query, *args.library])
    queries, qerr = load_inputs([args.query], k, q, radii)
    for e in qerr:
        print(f"error: {e}", file=sys.stderr)
    if not queries:
        raise CLIError(f"{args.query}: no usable query molecule")
    query = queries[0]
    library, lerr = load_inputs(args.library, k, q, radii, args.jobs)
    for e in lerr:
        print(f"error: {e}", file=sys.stderr)
    if not library:
        raise CLIError("library has no usable molecules")
    try:
        ranked, skipped = screen(query, library, args.weights, args.top, _alignment_opts(args), args.jobs)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    for s in skipped:
        print(f"skipped: {s.name}: {s.reason}", file=sys.stderr)

    if args.format == "json":
        text = json.dumps({"query": query.name, "results": [score_to_dict(s) for s in ranked]}, indent=1) + "\n"
    elif args.format == "csv" or args.output:
        text = to_csv(ranked)
    else:
        text = "".join(f"{i + 1:3d}  {s.score:.3f}  d={s.distance:.4f}  ratio={s.area_ratio:.3f}  {s.name}\n"
                       for i, s in enumerate(ranked))
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    if args.plot:
        from .plotting import plot_screen

        png = Path(args.output).with_suffix(".png") if args.output else Path("screen.png")
        plot_screen(ranked, png, query.name)
        print(f"wrote {png}", file=sys.stderr)
    return EXIT_PARTIAL if (skipped or lerr) else EXIT_OK


def cmd_selftest(args, q, radii) -> int:
    from .selftest import run_selftest

    results = run_selftest(q, seed=args.seed)
    for r in results:
        print(r.line())
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed")
    return EXIT_OK if n_pass == len(results) else EXIT_FATAL


COMMANDS = {"descriptor": cmd_descriptor, "compare": cmd_compare, "screen": cmd_screen, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse reports usage errors with status 2, which here means partial success
        return EXIT_OK if exc.code in (0, None) else EXIT_FATAL
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        q = QuadratureConfig(args.nr, args.ntheta)
        radii = default_radii(args.radii)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    try:
        return COMMANDS[args.command](args, q, radii)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
