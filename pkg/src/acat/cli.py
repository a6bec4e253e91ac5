"""Command-line harness: run presets, convergence studies, coefficient dumps
and the timing table."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import diffops, harness
from .acat1d import SchemeSpec
from .smooth import IndicatorConfig

_SCHEME_ALIASES = {
    "acat": "acat", "cat": "cat_fixed", "flcat2": "flcat2",
    "lo": "first_order", "lat": "lat",
}


def _build_scheme(args, base: SchemeSpec) -> SchemeSpec:
    kind = _SCHEME_ALIASES[args.scheme] if args.scheme else base.kind
    P = args.P if args.P is not None else base.P
    if kind == "acat" and P == 1:
        kind = "flcat2"  # the order-2 adaptive scheme is the blended flux
    ind = IndicatorConfig(
        eps_scale=base.indicator.eps_scale,
        limiter=args.limiter or base.indicator.limiter,
        use_modified_p2=args.modified_p2 or base.indicator.use_modified_p2,
        select_threshold=(args.threshold if args.threshold is not None
                          else base.indicator.select_threshold),
    )
    return SchemeSpec(kind=kind, P=P,
                      low_order=args.low_order or base.low_order,
                      indicator=ind, lat_order=args.lat_order or base.lat_order)


def _build_config(args) -> harness.RunConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = harness.parse_keyvalues(fh.read())
    else:
        cfg = harness.preset(args.preset)
    cfg = replace(cfg, scheme=_build_scheme(args, cfg.scheme))
    if args.cells:
        if "x" in args.cells:
            a, b = args.cells.split("x")
            cfg = replace(cfg, cells=(int(a), int(b)))
        else:
            cfg = replace(cfg, cells=int(args.cells))
    if args.cfl is not None:
        cfg = replace(cfg, cfl=args.cfl)
    if args.tfinal is not None:
        cfg = replace(cfg, t_final=args.tfinal)
    if args.bc:
        cfg = replace(cfg, bc=args.bc)
    if getattr(args, "dump_psi", False):
        cfg = replace(cfg, dump_psi=True)
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _add_common(sub) -> None:
    sub.add_argument("--preset", required=False, choices=harness.PRESET_NAMES)
    sub.add_argument("--config", help="key=value config file (overrides --preset)")
    sub.add_argument("--scheme", choices=sorted(_SCHEME_ALIASES))
    sub.add_argument("--P", type=int, help="maximal stencil half-width")
    sub.add_argument("--cells", help="mesh size, e.g. 200 or 100x100")
    sub.add_argument("--cfl", type=float)
    sub.add_argument("--tfinal", type=float)
    sub.add_argument("--bc", choices=["periodic", "outflow"])
    sub.add_argument("--low-order", dest="low_order",
                     choices=["rusanov", "lax_friedrichs", "hll"])
    sub.add_argument("--limiter", choices=["superbee", "minmod"])
    sub.add_argument("--threshold", type=float, help="indicator selection threshold")
    sub.add_argument("--modified-p2", dest="modified_p2", action="store_true",
                     help="use the split-weight half-width-2 indicator")
    sub.add_argument("--lat-order", dest="lat_order", type=int)


def _cmd_run(args) -> int:
    cfg = _build_config(args)
    out = cfg.out_dir or "."
    os.makedirs(out, exist_ok=True)
    result = harness.run(cfg)
    if cfg.dim == 1:
        harness.write_solution_1d(result, out)
        harness.write_diagnostics(result, out)
        if cfg.dump_psi:
            harness.write_psi_1d(result, out)
    else:
        harness.write_field_2d(result, out)
        harness.write_diagnostics(result, out)
        if cfg.dump_psi:
            harness.write_psi_2d(result, out)
        if args.cut:
            if args.cut != "y=x":
                raise ValueError(f"unsupported cut {args.cut!r}; only y=x")
            harness.write_cut_2d(result, out)
    if args.gnuplot:
        harness.write_gnuplot_stub(out, cfg.dim)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(harness.to_keyvalues(cfg))
    print(f"{cfg.preset}: {cfg.scheme.label()} finished at t={result.t:.17g} "
          f"after {result.n_steps} steps ({result.wall_time:.3f}s), output in {out}")
    return 0


def _cmd_convergence(args) -> int:
    cfg = _build_config(args)
    cells = [int(c) for c in args.cells_list.split(",")]
    report = harness.convergence_study(cfg, cells)
    orders_l1 = [float("nan")] + report.orders("l1")
    orders_linf = [float("nan")] + report.orders("linf")
    print(f"# preset={report.preset} scheme={report.scheme_label}")
    print("cells,l1,order_l1,linf,order_linf,wall")
    for i, n in enumerate(report.cells):
        print(f"{n},{report.l1[i]:.17g},{orders_l1[i]:.3f},"
              f"{report.linf[i]:.17g},{orders_linf[i]:.3f},{report.wall[i]:.3f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "convergence.csv"), "w") as fh:
            fh.write("cells,l1,order_l1,linf,order_linf,wall\n")
            for i, n in enumerate(report.cells):
                fh.write(f"{n},{report.l1[i]:.17g},{orders_l1[i]:.17g},"
                         f"{report.linf[i]:.17g},{orders_linf[i]:.17g},"
                         f"{report.wall[i]:.17g}\n")
    return 0


def _cmd_coeffs(args) -> int:
    if args.q is None:
        formula = diffops.centered_coeffs(args.p, args.k)
    else:
        formula = diffops.interpolatory_coeffs(args.p, args.k, Fraction(args.q))
    offs = formula.offsets
    print(f"# {formula.kind} p={formula.half_width} k={formula.deriv_order}"
          + (f" q={formula.eval_offset}" if formula.eval_offset is not None else ""))
    print("offset,exact,decimal")
    for j, frac, dec in zip(offs, formula.exact_coeffs, formula.coeffs):
        print(f"{j},{frac},{dec:.17g}")
    return 0


def _cmd_bench(args) -> int:
    base = _build_config(args)
    configs = []
    for spec in args.schemes.split(","):
        name, _, pval = spec.partition(":")
        kind = _SCHEME_ALIASES[name]
        P = int(pval) if pval else base.scheme.P
        if kind == "acat" and P == 1:
            kind = "flcat2"
        configs.append(replace(base, scheme=replace(base.scheme, kind=kind, P=P)))
    rows = harness.timing_table(configs)
    print(" | ".join(f"{label:>12s}" for label, _, _ in rows))
    print(" | ".join(f"{ratio:12.2f}" for _, _, ratio in rows))
    print("# wall seconds: " + ", ".join(f"{label}={wall:.3f}"
                                         for label, wall, _ in rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acat",
        description="Adaptive compact Taylor schemes for 1D/2D conservation laws",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run one preset and write CSV outputs")
    _add_common(p_run)
    p_run.add_argument("--out", help="output directory (default: current)")
    p_run.add_argument("--dump-psi", dest="dump_psi", action="store_true",
                       help="write final indicator fields")
    p_run.add_argument("--cut", help="2D diagonal extraction, e.g. --cut y=x")
    p_run.add_argument("--gnuplot", action="store_true",
                       help="emit plot.dat and a gnuplot script stub")

    p_conv = subs.add_parser("convergence", help="mesh-refinement error study")
    _add_common(p_conv)
    p_conv.add_argument("--cells-list", dest="cells_list", required=True,
                        help="comma list of mesh sizes, e.g. 40,80,160,320")
    p_conv.add_argument("--out", help="also write convergence.csv here")

    p_coef = subs.add_parser("coeffs", help="print differentiation weights")
    p_coef.add_argument("--p", type=int, required=True)
    p_coef.add_argument("--k", type=int, required=True)
    p_coef.add_argument("--q", help="evaluation offset (omit for centered)")

    p_bench = subs.add_parser("bench", help="normalized wall-clock table")
    _add_common(p_bench)
    p_bench.add_argument("--schemes", required=True,
                         help="comma list like acat:1,acat:2,acat:3")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        if args.command == "coeffs":
            return _cmd_coeffs(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
