"""Command-line interface.

Subcommands:

* ``analyze``  per-sample recurrence and robustness levels as CSV
* ``diagram``  slice the filtration over a budget range, JSON and optional SVG
* ``detect``   wandering-domain certificates (cheaply reachable, dearly returnable pairs)
* ``verify``   definitional lemma sweep over random finite instances

Standard output carries data, standard error carries diagnostics; they are
never mixed.  Exit codes: 0 success (and certificates found / zero
violations), 1 no certificates / violations found, 2 bad specification,
3 resource limit exceeded.  All randomness is seed-controlled and every
output is byte-stable across runs and thread counts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import ExtendedLevel, Branch, ResourceLimitError
from .filtration import diagram, summarize
from .flows import flow_level_matrix
from .links import level_matrix, horizon_stability
from .export import (build_document, export_diagram_json, export_levels_csv,
                     render_svg)
from .oracle import run_verification
from .specfile import LoadedSystem, SpecError, instance_to_spec, load_system
from .wandering import find_wandering_certificates

EXIT_OK = 0
EXIT_NONE = 1
EXIT_SPEC = 2
EXIT_RESOURCE = 3


def _matrix_and_summary(loaded: LoadedSystem, threads: int):
    if loaded.kind == "map":
        matrix = level_matrix(loaded.system, threads=threads)
    else:
        matrix = flow_level_matrix(loaded.system, threads=threads)
    return matrix, summarize(matrix, zero_tol=loaded.tau)


def _coords(loaded: LoadedSystem):
    return loaded.system.space.coords


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _diag(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_analyze(args) -> int:
    loaded = load_system(args.spec)
    matrix, summary = _matrix_and_summary(loaded, args.threads)
    _write(args.out, export_levels_csv(summary, _coords(loaded)))
    if args.matrix_out:
        header = ",".join(str(int(t)) for t in matrix.targets)
        rows = "\n".join(",".join(f"{v:.9g}" for v in row) for row in matrix.levels)
        Path(args.matrix_out).write_bytes((header + "\n" + rows + "\n").encode())
    meta = loaded.meta
    if loaded.kind == "map":
        _diag(f"{loaded.name}: n={loaded.system.n} h={meta.get('h')} "
              f"n_max={loaded.system.horizon} tau={loaded.tau:.9g}")
        if loaded.system.n <= 2048:
            rep = horizon_stability(loaded.system, threads=args.threads)
            state = "stable" if rep.stable else f"{rep.changed_pairs} pairs changed (max {rep.max_change:.3g})"
            _diag(f"horizon check at n_max={rep.reduced_horizon}: {state}")
    else:
        hz = meta["horizon"]
        _diag(f"{loaded.name}: n={loaded.system.n} h={meta.get('h')} dt={hz['dt']} "
              f"T={hz['t_min']} t_max={hz['t_max']} tau={loaded.tau:.9g} "
              f"(levels computed at the largest duration floor T; the gap to "
              f"unbounded durations is unquantified)")
    return EXIT_OK


def _parse_magnitudes(args) -> list[float]:
    if args.eps_step <= 0:
        raise SpecError("--eps-step must be positive")
    if args.eps_min > args.eps_max:
        raise SpecError("--eps-min must not exceed --eps-max")
    mags = []
    v = args.eps_min
    while v <= args.eps_max + 1e-12:
        if v > 0:
            mags.append(round(v, 12))
        v += args.eps_step
    return mags


def cmd_diagram(args) -> int:
    loaded = load_system(args.spec)
    _, summary = _matrix_and_summary(loaded, args.threads)
    mags = _parse_magnitudes(args)
    levels = [ExtendedLevel(Branch.NEG, m) for m in reversed(mags)]
    levels += [ExtendedLevel(Branch.NEG, 0.0), ExtendedLevel(Branch.POS, 0.0)]
    levels += [ExtendedLevel(Branch.POS, m) for m in mags]
    slices = diagram(summary, levels)
    doc = build_document(summary, slices, loaded.meta, _coords(loaded),
                         loaded.system.spacing)
    payload = export_diagram_json(doc)
    _write(args.json, payload)
    if args.svg:
        Path(args.svg).write_bytes(render_svg(doc, args.width, args.height))
    _diag(f"{loaded.name}: {len(slices)} slices over "
          f"[-{args.eps_max}, -0] and [+0, {args.eps_max}]")
    return EXIT_OK


def cmd_detect(args) -> int:
    loaded = load_system(args.spec)
    if loaded.kind != "map":
        raise SpecError("certificate detection runs on maps")
    matrix, _ = _matrix_and_summary(loaded, args.threads)
    h = loaded.system.spacing
    min_gap = args.min_gap if args.min_gap is not None else (4.0 * h if h else 1e-9)
    certs = find_wandering_certificates(matrix, min_gap, system=loaded.system,
                                        limit=args.limit)
    coords = _coords(loaded)
    lines = ["x,z,eps,gap"]
    for c in certs:
        lines.append(f"{c.x},{c.z},{c.eps:.9g},{c.gap:.9g}")
    sys.stdout.write("\n".join(lines) + "\n")
    sys.stdout.flush()
    if args.out:
        payload = {"schema_version": 1,
                   "system": loaded.meta, "min_gap": min_gap,
                   "certificates": [
                       {"x": c.x, "z": c.z,
                        **({"x_coords": [float(v) for v in coords[c.x]],
                            "z_coords": [float(v) for v in coords[c.z]]} if coords is not None else {}),
                        "eps": c.eps, "gap": float(c.gap) if np.isfinite(c.gap) else "inf"}
                       for c in certs]}
        Path(args.out).write_bytes((json.dumps(payload, indent=2) + "\n").encode())
    _diag(f"{loaded.name}: {len(certs)} certificates at min_gap={min_gap:.9g} "
          f"(evidence at sampled resolution, not proof)")
    return EXIT_OK if certs else EXIT_NONE


def cmd_verify(args) -> int:
    if args.seeds < 1:
        raise SpecError("--seeds must be at least 1")
    if args.max_size < 2 or args.max_size > 12:
        raise SpecError("--max-size must be in [2, 12]")
    dump_dir = Path(args.dump_failures) if args.dump_failures else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)

    def on_failure(inst, report):
        if dump_dir:
            spec = instance_to_spec(inst.cost, inst.table, inst.horizon)
            (dump_dir / f"instance_{inst.seed}.json").write_text(json.dumps(spec, indent=2) + "\n")

    summary = run_verification(args.seeds, max_size=args.max_size,
                               seed_start=args.seed_start, on_failure=on_failure)
    print(f"instances={summary.instances} violations={len(summary.failures)}")
    for seed, fails in summary.failures:
        for f in fails:
            print(f"seed={seed} check={f.name} {f.detail}")
    _diag(f"verified {summary.instances} instances, sizes 2..{args.max_size}, "
          f"seeds {args.seed_start}..{args.seed_start + args.seeds - 1}")
    return EXIT_OK if summary.ok else EXIT_NONE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nwfilt",
                                 description="Coarse recurrence analysis of sampled maps and semiflows")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--threads", type=int, default=1,
                       help="parallel workers for matrix assembly (output is identical for any value)")

    p = sub.add_parser("analyze", help="per-sample levels as CSV")
    p.add_argument("spec")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.add_argument("--matrix-out", default=None, help="optional full level-matrix CSV")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("diagram", help="filtration slices as JSON and optional SVG")
    p.add_argument("spec")
    p.add_argument("--eps-min", type=float, default=0.0)
    p.add_argument("--eps-max", type=float, required=True)
    p.add_argument("--eps-step", type=float, required=True)
    p.add_argument("--json", default=None, help="JSON path (default: stdout)")
    p.add_argument("--svg", default=None, help="optional SVG path (1-D systems)")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=420)
    common(p)
    p.set_defaults(fn=cmd_diagram)

    p = sub.add_parser("detect", help="wandering-domain certificates")
    p.add_argument("spec")
    p.add_argument("--min-gap", type=float, default=None,
                   help="reporting gap (default: 4x grid spacing)")
    p.add_argument("--out", default=None, help="optional JSON certificate dump")
    p.add_argument("--limit", type=int, default=None, help="report at most this many certificates")
    common(p)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("verify", help="definitional lemma sweep on random instances")
    p.add_argument("--seeds", type=int, default=1000)
    p.add_argument("--seed-start", type=int, default=0)
    p.add_argument("--max-size", type=int, default=8)
    p.add_argument("--dump-failures", default=None, help="directory for failing instances")
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SpecError as e:
        _diag(f"spec error: {e}")
        return EXIT_SPEC
    except ResourceLimitError as e:
        _diag(f"resource limit: {e}")
        return EXIT_RESOURCE
    except ValueError as e:
        _diag(f"error: {e}")
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
