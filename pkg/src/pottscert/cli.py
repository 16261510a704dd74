"""Command-line interface: build instances, solve, check stability, find blocks."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import builders, imageio
from .blockfinder import (
    dumps_report,
    find_stable_blocks,
    read_report,
)
from .duals import dumps_dual, restrict_dual
from .lp import dumps_solution, persistency_mask, solve_lp, solve_map
from .model import (
    TAU,
    BlockDecomposition,
    ModelError,
    objective,
    objective_exact,
    read_instance,
    write_instance,
)
from .stability import check_block_stable, check_stable, dumps_verdict
from .viz import decomposition_image, save_report_figure


def _fmt(x) -> str:
    return "%.12g" % float(x)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=TAU, help="comparison tolerance")
    p.add_argument("--rational", action="store_true", help="exact rational arithmetic")
    p.add_argument("--engine", default="auto", choices=["auto", "simplex", "highs"])
    p.add_argument("--big", type=float, default=None,
                   help="finite stand-in for FORBIDDEN costs inside LP/ILP")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pottscert",
        description="Potts MAP inference with LP persistency certification via stable blocks",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct instance files")
    bsub = b.add_subparsers(dest="kind", required=True)

    bg = bsub.add_parser("golden", help="paper example instances")
    bg.add_argument("which", choices=["triangle", "combined"])
    bg.add_argument("--eps", type=float, default=None)
    bg.add_argument("--gamma", type=float, default=0.1)
    bg.add_argument("-o", "--output", required=True)

    br = bsub.add_parser("grid", help="seeded random grid")
    br.add_argument("--rows", type=int, required=True)
    br.add_argument("--cols", type=int, required=True)
    br.add_argument("--k", type=int, required=True)
    br.add_argument("--seed", type=int, default=0)
    br.add_argument("--cost-range", type=float, nargs=2, default=(0.0, 5.0))
    br.add_argument("--weight-range", type=float, nargs=2, default=(1.0, 1.0))
    br.add_argument("--integer-costs", action="store_true")
    br.add_argument("-o", "--output", required=True)

    bs = bsub.add_parser("stereo", help="disparity MRF from a stereo pair")
    bs.add_argument("--left", required=True)
    bs.add_argument("--right", required=True)
    bs.add_argument("--k", type=int, required=True)
    bs.add_argument("--s", type=float, default=50.0)
    bs.add_argument("--P", type=float, default=2.0)
    bs.add_argument("--T", type=float, default=4.0)
    bs.add_argument("--no-bt", action="store_true",
                    help="disable the sampling-insensitive dissimilarity")
    bs.add_argument("-o", "--output", required=True)

    bseg = bsub.add_parser("segmentation", help="segmentation MRF from an image")
    bseg.add_argument("--image", required=True)
    bseg.add_argument("--costs", required=True, help="node cost table file")
    bseg.add_argument("--lambda1", type=float, default=5.0)
    bseg.add_argument("--lambda2", type=float, default=100.0)
    bseg.add_argument("--sigma", type=float, default=5.0)
    bseg.add_argument("-o", "--output", required=True)

    s = sub.add_parser("solve", help="exact MAP labeling")
    s.add_argument("instance")
    s.add_argument("--labels-out", default=None, help="write the labeling to a file")
    _add_solver_flags(s)

    l = sub.add_parser("lp", help="solve the pairwise relaxation")
    l.add_argument("instance")
    l.add_argument("--solution-out", default=None)
    l.add_argument("--dual-out", default=None)
    _add_solver_flags(l)

    c = sub.add_parser("check-stable", help="stability under the adversarial perturbation")
    c.add_argument("instance")
    c.add_argument("--beta", type=float, default=2.0)
    c.add_argument("--gamma", type=float, default=1.0)
    c.add_argument("--block", default=None,
                   help="file of node ids; checks that block with the LP dual restriction")
    c.add_argument("--witness-out", default=None)
    _add_solver_flags(c)

    f = sub.add_parser("find-blocks", help="iterative stable block discovery")
    f.add_argument("instance")
    f.add_argument("--beta", type=float, default=2.0)
    f.add_argument("--gamma", type=float, default=1.0)
    f.add_argument("--iters", type=int, default=5)
    f.add_argument("--optimized", action="store_true")
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--report", default=None, help="report path (default: <instance>.report)")
    f.add_argument("--plot", default=None, help="write a matplotlib summary figure")
    f.add_argument("--rows", type=int, default=None, help="grid rows (for --plot map)")
    f.add_argument("--cols", type=int, default=None)
    f.add_argument("--max-search-nodes", type=int, default=5_000_000,
                   help="cap per stability search; capped blocks stay uncertified")
    _add_solver_flags(f)

    r = sub.add_parser("render", help="render a finder report over a grid to PPM")
    r.add_argument("--report", required=True)
    r.add_argument("--instance", required=True)
    r.add_argument("--rows", type=int, required=True)
    r.add_argument("--cols", type=int, required=True)
    r.add_argument("--labels", default=None, help="labeling file (default: solve MAP)")
    r.add_argument("-o", "--output", required=True)
    return ap


def _cmd_build(args) -> int:
    if args.kind == "golden":
        if args.which == "triangle":
            eps = 0.1 if args.eps is None else args.eps
            inst, _ = builders.counterexample_triangle(eps)
        else:
            eps = 0.01 if args.eps is None else args.eps
            inst, _, _ = builders.combined_example(eps, args.gamma)
    elif args.kind == "grid":
        inst = builders.random_grid(
            args.rows, args.cols, args.k, tuple(args.cost_range),
            tuple(args.weight_range), args.seed, args.integer_costs,
        )
    elif args.kind == "stereo":
        left = imageio.read_image(args.left)
        right = imageio.read_image(args.right)
        inst = builders.build_stereo(
            left, right, args.k, s=args.s, p=args.P, t=args.T,
            bt_correction=not args.no_bt,
        )
    else:
        image = imageio.read_image(args.image)
        costs = builders.parse_cost_table(Path(args.costs).read_text())
        inst = builders.build_segmentation(
            image, costs, lambda1=args.lambda1, lambda2=args.lambda2, sigma=args.sigma,
        )
    write_instance(inst, args.output)
    print(f"wrote {args.output} ({inst.num_nodes} nodes, {inst.num_labels} labels, "
          f"{inst.num_edges} edges)")
    return 0


def _cmd_solve(args) -> int:
    inst = read_instance(args.instance, exact=args.rational)
    g = solve_map(inst, rational=args.rational, engine=args.engine, big=args.big)
    value = objective_exact(inst, g) if args.rational else objective(inst, g)
    print("labeling " + " ".join(str(x) for x in g))
    print(f"objective {value if args.rational else _fmt(value)}")
    if args.labels_out:
        Path(args.labels_out).write_text(" ".join(str(x) for x in g) + "\n")
    return 0


def _cmd_lp(args) -> int:
    inst = read_instance(args.instance, exact=args.rational)
    primal, dual = solve_lp(inst, rational=args.rational, engine=args.engine, big=args.big)
    g = solve_map(inst, rational=args.rational, engine=args.engine, big=args.big)
    mask = persistency_mask(primal, g, args.tol)
    print(f"objective {primal.objective if args.rational else _fmt(primal.objective)}")
    qg = objective_exact(inst, g) if args.rational else objective(inst, g)
    print(f"map_objective {qg if args.rational else _fmt(qg)}")
    print(f"persistent_fraction {_fmt(mask.fraction)}")
    print("fractional " + " ".join(str(u) for u in mask.fractional_nodes))
    sol_path = args.solution_out or args.instance + ".sol"
    dual_path = args.dual_out or args.instance + ".dual"
    Path(sol_path).write_text(dumps_solution(primal))
    Path(dual_path).write_text(dumps_dual(dual, "eta"))
    return 0


def _cmd_check_stable(args) -> int:
    inst = read_instance(args.instance, exact=args.rational)
    g = solve_map(inst, rational=args.rational, engine=args.engine, big=args.big)
    if args.block:
        nodes = sorted(int(t) for t in Path(args.block).read_text().split())
        primal, dual = solve_lp(inst, rational=args.rational, engine=args.engine,
                                big=args.big)
        block = frozenset(nodes)
        rest = frozenset(range(inst.num_nodes)) - block
        parts = (block, rest) if rest else (block,)
        decomp = BlockDecomposition(inst.num_nodes, parts)
        bd = restrict_dual(inst, dual, decomp, lp_objective=primal.objective,
                           tol=args.tol, exact=args.rational)
        verdict = check_block_stable(inst, nodes, g, args.beta, args.gamma, bd,
                                     rational=args.rational, engine=args.engine,
                                     big=args.big)
    else:
        verdict = check_stable(inst, g, args.beta, args.gamma,
                               rational=args.rational, engine=args.engine,
                               big=args.big)
    sys.stdout.write(dumps_verdict(verdict))
    if verdict.witness is not None:
        path = args.witness_out or args.instance + ".witness"
        Path(path).write_text(" ".join(str(x) for x in verdict.witness) + "\n")
        print(f"witness_file {path}")
    return 0


def _cmd_find_blocks(args) -> int:
    if args.iters < 1:
        raise ModelError("--iters must be at least 1")
    inst = read_instance(args.instance, exact=args.rational)
    report = find_stable_blocks(
        inst, beta=args.beta, gamma=args.gamma, iterations=args.iters,
        optimized=args.optimized, rational=args.rational, engine=args.engine,
        tol=args.tol, node_cap=args.max_search_nodes, jobs=args.jobs, big=args.big,
    )
    path = args.report or args.instance + ".report"
    Path(path).write_text(dumps_report(report))
    print(f"certified_fraction {_fmt(report.certified_fraction)}")
    for size, count in report.block_size_histogram.items():
        print(f"blocksize {size} {count}")
    print(f"report_file {path}")
    for note in report.notes:
        print(f"note {note}")
    if args.plot:
        image = None
        if args.rows and args.cols:
            g = solve_map(inst, rational=args.rational, engine=args.engine, big=args.big)
            owner = report.final.block_of()
            image = decomposition_image(g, owner, report.certified,
                                        args.rows, args.cols, inst.num_labels)
        fractions = [rec.certified_fraction for rec in report.iterations]
        save_report_figure(fractions, image, args.plot)
        print(f"plot_file {args.plot}")
    return 0


def _cmd_render(args) -> int:
    inst = read_instance(args.instance)
    if args.rows * args.cols != inst.num_nodes:
        raise ModelError("grid dimensions do not match the instance")
    block_ids, certified, _ = read_report(args.report)
    if len(block_ids) != inst.num_nodes:
        raise ModelError("report does not match the instance")
    if args.labels:
        labels = [int(t) for t in Path(args.labels).read_text().split()]
    else:
        labels = list(solve_map(inst))
    image = decomposition_image(labels, block_ids, certified,
                                args.rows, args.cols, inst.num_labels)
    imageio.write_ppm(args.output, image)
    print(f"wrote {args.output}")
    return 0


_HANDLERS = {
    "build": _cmd_build,
    "solve": _cmd_solve,
    "lp": _cmd_lp,
    "check-stable": _cmd_check_stable,
    "find-blocks": _cmd_find_blocks,
    "render": _cmd_render,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
