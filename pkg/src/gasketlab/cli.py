"""Batch front end.

Usage:
    gasketlab renorm --dim 2 --level 3
    gasketlab spectra --dim 2 --levels 2,3
    gasketlab words --spec sg.json --depth 2 --out words.csv
    gasketlab dim-estimate --spec sg.json --depth 10 --out report.json
    gasketlab verify-a3 --spec sg.json --depth 3 --samples 64 --out a3.json
    gasketlab capacity --spec sg.json --inner-n 4 --refine 2
    gasketlab blowup --spec sg.json --depth 6 --res 64 --out-grid grid.csv
    gasketlab hausdorff --spec sg.json

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  Reports embed
the resolved configuration and are byte-identical for identical inputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

from . import blowup as blowup_mod
from . import capacity as capacity_mod
from . import energy as energy_mod
from .errors import (
    BudgetExceededError,
    DegenerateBasisError,
    DisconnectedNetworkError,
    EigenRelationError,
    EmptyBoundaryError,
    EmptyInnerSetError,
    GasketLabError,
    InadmissibleWordError,
    InvalidParameterError,
    InvalidVertexError,
    NotFoundError,
    ProportionalityError,
    SingularInteriorError,
    SolverError,
    SpecParseError,
    SpecSemanticError,
)
from .gasket import GasketSpec, encode_word, iter_words, parse_word
from .harmonic import extension_matrices, renormalization_factor, theta
from .subdivision import cell_count

_INPUT_ERRORS = (
    SpecParseError,
    SpecSemanticError,
    InvalidParameterError,
    InadmissibleWordError,
    InvalidVertexError,
    EmptyBoundaryError,
    DegenerateBasisError,
    BudgetExceededError,
)
_NUMERIC_ERRORS = (
    SolverError,
    ProportionalityError,
    EigenRelationError,
    SingularInteriorError,
    DisconnectedNetworkError,
    EmptyInnerSetError,
    NotFoundError,
)


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def load_spec(path: str) -> GasketSpec:
    """Read and validate a gasket spec file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpecParseError(f"cannot read spec {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"spec {path!r} is not valid JSON: {exc}") from exc
    return GasketSpec.from_dict(data)


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_csv(header: list, rows, out: str | None) -> None:
    if out:
        fh = open(out, "w", encoding="utf-8", newline="")
    else:
        fh = sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    finally:
        if out:
            fh.close()


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GASKETLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameterError(f"GASKETLAB_THREADS must be an integer, got {env!r}")
    return 1


# --- subcommands ---------------------------------------------------------------


def cmd_renorm(args) -> int:
    r = renormalization_factor(args.dim, args.level)
    sys.stdout.write(frac_str(r) + "\n")
    return 0


def cmd_spectra(args) -> int:
    levels = args.levels or [args.level]
    if not levels or levels == [None]:
        raise InvalidParameterError("give --level or --levels")
    levels = sorted(set(int(l) for l in levels))
    for l in levels:
        data = extension_matrices(args.dim, l)
        sys.stdout.write(f"level {l} r {frac_str(data.r)}\n")
        sys.stdout.write(f"level {l} s {frac_str(data.s)}\n")
        sys.stdout.write(f"level {l} ratio {float(data.theta_term):.15g}\n")
    th = theta(args.dim, levels)
    sys.stdout.write(f"theta {float(th):.15g}\n")
    return 0


def cmd_words(args) -> int:
    spec = load_spec(args.spec)
    rows = (
        [encode_word(w), r.numerator, r.denominator, mu.numerator, mu.denominator]
        for w, r, mu in iter_words(spec, args.depth, args.budget)
    )
    _emit_csv(["word", "r_num", "r_den", "mu_num", "mu_den"], rows, args.out)
    return 0


def cmd_dim_estimate(args) -> int:
    spec = load_spec(args.spec)
    report = energy_mod.index_estimate(
        spec, args.depth, eps=args.eps, delta=args.delta, budget=args.budget
    )
    payload = {
        "config": {
            "subcommand": "dim-estimate",
            "spec": spec.to_dict(),
            "depth": args.depth,
            "eps": args.eps,
            "delta": args.delta,
            "budget": args.budget,
            "threads": _threads(args),
        },
        "report": report.to_dict(),
    }
    _emit_json(payload, args.out)
    return 0


def cmd_verify_a3(args) -> int:
    spec = load_spec(args.spec)
    report = capacity_mod.a3_report(
        spec,
        args.depth,
        N=args.inner_n,
        samples=args.samples,
        K=args.refine,
        seed=args.seed,
        cap_words=args.cap_words,
        point_samples=args.point_samples,
        mode=args.mode,
        budget=args.budget,
        threads=_threads(args),
    )
    payload = {
        "config": {
            "subcommand": "verify-a3",
            "spec": spec.to_dict(),
            "depth": args.depth,
            "inner_n": report.N,
            "samples": args.samples,
            "refine": args.refine,
            "seed": args.seed,
            "cap_words": args.cap_words,
            "point_samples": args.point_samples,
            "mode": args.mode,
            "budget": args.budget,
            "threads": _threads(args),
        },
        "report": report.to_dict(),
    }
    _emit_json(payload, args.out)
    if args.rows_out:
        _emit_csv(
            ["word", "sample_id", "nu_U", "nu_V", "osc", "cap_rel", "cap_pt", "ratio_a", "ratio_b", "ratio_c"],
            (row.as_list() for row in report.rows),
            args.rows_out,
        )
    return 0


def cmd_capacity(args) -> int:
    spec = load_spec(args.spec)
    word = parse_word(args.word)
    spec.validate_word(word)
    if args.point is not None:
        result = capacity_mod.point_capacity(
            spec, word, args.point, K=args.refine, base_depth=args.base_depth, mode=args.mode
        )
    else:
        n = args.inner_n if args.inner_n else capacity_mod.default_inner_depth(spec)
        result = capacity_mod.relative_capacity(spec, word, n, K=args.refine, mode=args.mode)
    values = [frac_str(v) if isinstance(v, Fraction) else v for v in result.values]
    payload = {
        "config": {
            "subcommand": "capacity",
            "spec": spec.to_dict(),
            "word": args.word,
            "inner_n": args.inner_n,
            "point": args.point,
            "base_depth": args.base_depth,
            "refine": args.refine,
            "mode": args.mode,
            "threads": _threads(args),
        },
        "report": {
            "kind": result.kind,
            "refinements": result.refinements,
            "values": values,
            "root_r": frac_str(result.root_r),
            "arithmetic_mode": result.mode,
        },
    }
    _emit_json(payload, args.out)
    return 0


def cmd_blowup(args) -> int:
    spec = load_spec(args.spec)
    word = parse_word(args.word)
    spec.validate_word(word)
    if (args.b1 is None) != (args.b2 is None):
        raise InvalidParameterError("give both --b1 and --b2 or neither")
    if args.b1:
        b1 = [Fraction(x) for x in args.b1.split(",")]
        b2 = [Fraction(x) for x in args.b2.split(",")]
    else:
        basis = energy_mod.default_basis(spec.d)
        b1, b2 = basis.raw[0], basis.raw[1]
    cloud = blowup_mod.blowup_cloud(
        spec, word, b1, b2, args.depth, K=args.refine, mode=args.mode, budget=args.budget
    )
    if args.out_cloud:
        rows = (
            [encode_word(cloud.word), float(x), float(y), float(w), float(e)]
            for (x, y), w, e in zip(cloud.points, cloud.weights, cloud.e_means)
        )
        _emit_csv(["word", "x", "y", "weight", "e_value"], rows, args.out_cloud)
    if args.out_grid:
        grid = blowup_mod.density_grid(cloud, args.res)
        rows = (
            [i, j, grid[i, j]]
            for i in range(args.res)
            for j in range(args.res)
            if grid[i, j] != 0.0
        )
        _emit_csv(["row", "col", "mass"], rows, args.out_grid)
    total = cloud.total_mass
    payload = {
        "config": {
            "subcommand": "blowup",
            "spec": spec.to_dict(),
            "word": args.word,
            "depth": args.depth,
            "refine": cloud.refinement,
            "res": args.res,
            "mode": args.mode,
            "threads": _threads(args),
        },
        "report": {
            "points": cloud.n_points,
            "alpha": cloud.alpha,
            "total_mass": frac_str(total) if isinstance(total, Fraction) else total,
            "arithmetic_mode": cloud.mode,
        },
    }
    _emit_json(payload, args.out)
    return 0


def cmd_hausdorff(args) -> int:
    spec = load_spec(args.spec)
    per_level = {}
    for l in spec.levels:
        n = cell_count(spec.d, l)
        per_level[str(l)] = {
            "cells": n,
            "log_ratio": math.log(n / l),
            "frostman_exponent": math.log(n) / math.log(l),
        }
    payload = {
        "config": {"subcommand": "hausdorff", "spec": spec.to_dict()},
        "report": {
            "per_level": per_level,
            "printed_formula_min_log_N_over_l": min(v["log_ratio"] for v in per_level.values()),
            "frostman_exponent_min_logN_over_logl": min(v["frostman_exponent"] for v in per_level.values()),
            "dimension_floor_log_half_d_plus_1": math.log((spec.d + 1) / 2),
            "note": "the two lower-bound expressions are both reported; they differ and neither is adjudicated here",
        },
    }
    _emit_json(payload, args.out)
    return 0


# --- argument wiring -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gasketlab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--threads", type=int, default=None, help="cap worker parallelism (env GASKETLAB_THREADS)")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("renorm", help="print the renormalization factor r for one level")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--level", type=int, required=True)
    p.set_defaults(func=cmd_renorm)

    p = sub.add_parser("spectra", help="print r, s and contraction ratios for levels")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--levels", type=lambda s: [int(x) for x in s.split(",")], default=None)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("words", help="emit the admissible words of one depth as CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--budget", type=int, default=10_000_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_words)

    p = sub.add_parser("dim-estimate", help="rank-decay scan and index estimate")
    p.add_argument("--spec", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--budget", type=int, default=10_000_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dim_estimate)

    p = sub.add_parser("verify-a3", help="energy/capacity balance report")
    p.add_argument("--spec", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--inner-n", type=int, default=None)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--refine", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap-words", type=int, default=8)
    p.add_argument("--point-samples", type=int, default=3)
    p.add_argument("--mode", choices=["exact", "float", "auto"], default="auto")
    p.add_argument("--budget", type=int, default=10_000_000)
    p.add_argument("--out", default=None)
    p.add_argument("--rows-out", default=None)
    p.set_defaults(func=cmd_verify_a3)

    p = sub.add_parser("capacity", help="relative or point capacity below a word")
    p.add_argument("--spec", required=True)
    p.add_argument("--word", default="")
    p.add_argument("--inner-n", type=int, default=None)
    p.add_argument("--point", type=int, default=None)
    p.add_argument("--base-depth", type=int, default=1)
    p.add_argument("--refine", type=int, default=1)
    p.add_argument("--mode", choices=["exact", "float", "auto"], default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("blowup", help="push-forward cloud and density grid")
    p.add_argument("--spec", required=True)
    p.add_argument("--word", default="")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--res", type=int, default=64)
    p.add_argument("--b1", default=None, help="comma-separated rationals")
    p.add_argument("--b2", default=None)
    p.add_argument("--mode", choices=["exact", "float", "auto"], default="auto")
    p.add_argument("--budget", type=int, default=10_000_000)
    p.add_argument("--out", default=None)
    p.add_argument("--out-cloud", default=None)
    p.add_argument("--out-grid", default=None)
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("hausdorff", help="report the dimension lower-bound expressions")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hausdorff)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except GasketLabError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
