"""Iterative discovery of stable blocks and the persistency they certify.

Each iteration tests every block of the current decomposition: the block's
boundary costs absorb the restriction of one certified-optimal pairwise dual,
the restricted instance gets a stability check, and nodes where the returned
witness disagrees with the exact optimum fall into the catch-all boundary
block.  Same-label connected components of the surviving boundary nodes are
reclaimed as fresh blocks.  Nodes in blocks that test stable with matching
restricted optimum are certified: the LP is persistent there.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .duals import restrict_dual
from .lp import solve_lp, solve_map
from .model import (
    TAU,
    BlockDecomposition,
    BlockStatus,
    Labeling,
    ModelError,
    PottsInstance,
    StabilityVerdict,
    validate_labeling,
)
from .stability import check_block_stable


@dataclass(frozen=True)
class IterationRecord:
    decomposition: BlockDecomposition
    verdicts: tuple[StabilityVerdict, ...]
    certified_fraction: float


@dataclass(frozen=True)
class FinderReport:
    num_nodes: int
    iterations: tuple[IterationRecord, ...]
    notes: tuple[str, ...] = ()

    @property
    def final(self) -> BlockDecomposition:
        return self.iterations[-1].decomposition

    @cached_property
    def certified(self) -> tuple[bool, ...]:
        out = [False] * self.num_nodes
        final = self.final
        for block, status in zip(final.blocks, final.statuses):
            if status is BlockStatus.STABLE:
                for u in block:
                    out[u] = True
        return tuple(out)

    @property
    def certified_fraction(self) -> float:
        return sum(self.certified) / self.num_nodes

    @property
    def block_size_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for block in self.final.blocks:
            hist[len(block)] = hist.get(len(block), 0) + 1
        return dict(sorted(hist.items()))


def initial_decomposition(inst: PottsInstance, g: Labeling) -> BlockDecomposition:
    """One block per label holding that label's interior, plus the boundary.

    A node joins its label's block only if every neighbor shares the label;
    all cut-edge nodes land in the catch-all boundary block (the last one).
    Label blocks may be empty when the optimum is not surjective.
    """
    g = validate_labeling(inst, g)
    interior: list[set[int]] = [set() for _ in range(inst.num_labels)]
    star: set[int] = set()
    for u in range(inst.num_nodes):
        if all(g[v] == g[u] for v in inst.neighbors(u)):
            interior[g[u]].add(u)
        else:
            star.add(u)
    blocks = tuple(frozenset(b) for b in interior) + (frozenset(star),)
    return BlockDecomposition(inst.num_nodes, blocks, boundary_index=len(blocks) - 1)


def reclaim(inst: PottsInstance, g: Labeling, remainder) -> list[frozenset[int]]:
    """Same-label connected components of the remainder set, as new blocks."""
    g = validate_labeling(inst, g)
    remainder = set(int(u) for u in remainder)
    seen: set[int] = set()
    out = []
    for start in sorted(remainder):
        if start in seen:
            continue
        comp = {start}
        queue = [start]
        seen.add(start)
        while queue:
            u = queue.pop(0)
            for v in inst.neighbors(u):
                if v in remainder and v not in seen and g[v] == g[u]:
                    seen.add(v)
                    comp.add(v)
                    queue.append(v)
        out.append(frozenset(comp))
    return out


def _drop_empty(decomp: BlockDecomposition) -> BlockDecomposition:
    keep = [(b, block) for b, block in enumerate(decomp.blocks) if block]
    if len(keep) == decomp.num_blocks:
        return decomp
    blocks = tuple(block for _, block in keep)
    bidx = None
    for pos, (b, _) in enumerate(keep):
        if b == decomp.boundary_index:
            bidx = pos
    return BlockDecomposition(decomp.num_nodes, blocks, boundary_index=bidx)


def _two_block(inst: PottsInstance, block: frozenset[int]) -> BlockDecomposition:
    rest = frozenset(range(inst.num_nodes)) - block
    if rest:
        return BlockDecomposition(inst.num_nodes, (block, rest))
    return BlockDecomposition(inst.num_nodes, (block,))


def _run(inst: PottsInstance, g: Labeling, beta: float, gamma: float,
         iterations: int, initial: BlockDecomposition | None, optimized: bool,
         rational: bool, engine: str, tol: float, ilp_tol, node_cap, jobs: int,
         big) -> FinderReport:
    g = validate_labeling(inst, g)
    if iterations < 1:
        raise ModelError("at least one iteration is required")
    primal, dual = solve_lp(inst, rational=rational, engine=engine, big=big)
    lp_obj = primal.objective
    decomp = initial if initial is not None else initial_decomposition(inst, g)
    if decomp.num_nodes != inst.num_nodes:
        raise ModelError("initial decomposition does not match the instance")
    decomp = _drop_empty(decomp)
    notes: list[str] = []
    records: list[IterationRecord] = []

    for t in range(1, iterations + 1):
        blocks = list(decomp.blocks)
        bidx = decomp.boundary_index
        if optimized:
            # One restriction of the certified dual to the whole partition;
            # its messages agree with each block's own two-block restriction.
            full_bd = restrict_dual(inst, dual, decomp, lp_objective=lp_obj,
                                    tol=tol, exact=rational)

        def test_block(block: frozenset[int]) -> StabilityVerdict:
            if optimized:
                from .duals import _block_boundary_dual

                bd = _block_boundary_dual(inst, block, full_bd)
            else:
                bd = restrict_dual(inst, dual, _two_block(inst, block),
                                   lp_objective=lp_obj, tol=tol, exact=rational)
            return check_block_stable(
                inst, block, g, beta, gamma, bd, rational=rational,
                engine=engine, ilp_tol=ilp_tol, node_cap=node_cap, big=big,
            )

        live = [b for b, block in enumerate(blocks) if block]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = dict(zip(live, pool.map(lambda b: test_block(blocks[b]), live)))
        else:
            results = {b: test_block(blocks[b]) for b in live}

        statuses: list[BlockStatus] = []
        verdicts: list[StabilityVerdict] = []
        moved: set[int] = set()
        next_blocks: list[frozenset[int]] = []
        reclaimed: list[frozenset[int]] = []
        for b, block in enumerate(blocks):
            if b not in results:
                statuses.append(BlockStatus.UNTESTED)
                verdicts.append(StabilityVerdict(True, None, 0, None))
                continue
            verdict = results[b]
            verdicts.append(verdict)
            certified = verdict.stable and verdict.optimum_matches
            statuses.append(BlockStatus.STABLE if certified else BlockStatus.UNSTABLE)
            if verdict.capped:
                notes.append(f"iteration {t}: search capped on a block of size {len(block)}")
            if not verdict.optimum_matches:
                notes.append(
                    f"iteration {t}: restricted optimum differs from the exact"
                    f" solution on a block of size {len(block)}"
                )
            nodes = sorted(block)
            if verdict.witness is not None:
                delta_nodes = {
                    u for u, lab in zip(nodes, verdict.witness) if lab != g[u]
                }
            else:
                delta_nodes = set()
            moved |= delta_nodes
            survivors = block - delta_nodes
            if b == bidx:
                reclaimed = reclaim(inst, g, survivors)
            elif survivors:
                next_blocks.append(survivors)
        tested = BlockDecomposition(
            inst.num_nodes, tuple(blocks), boundary_index=bidx,
            statuses=tuple(statuses),
        )
        certified_nodes = sum(
            len(block)
            for block, st in zip(tested.blocks, tested.statuses)
            if st is BlockStatus.STABLE
        )
        records.append(
            IterationRecord(tested, tuple(verdicts), certified_nodes / inst.num_nodes)
        )
        if t == iterations:
            break
        new_blocks = tuple(next_blocks) + tuple(reclaimed)
        if moved:
            new_blocks = new_blocks + (frozenset(moved),)
            decomp = BlockDecomposition(
                inst.num_nodes, new_blocks, boundary_index=len(new_blocks) - 1
            )
        else:
            decomp = BlockDecomposition(inst.num_nodes, new_blocks, boundary_index=None)
    return FinderReport(inst.num_nodes, tuple(records), tuple(notes))


def run(inst: PottsInstance, g: Labeling, beta: float = 2.0, gamma: float = 1.0,
        iterations: int = 5, *, initial: BlockDecomposition | None = None,
        rational: bool = False, engine: str = "auto", tol: float = TAU,
        ilp_tol: float | None = None, node_cap: int | None = None,
        jobs: int = 1, big: float | None = None) -> FinderReport:
    """Block-stability search testing each block against its own two-block dual."""
    return _run(inst, g, beta, gamma, iterations, initial, False, rational,
                engine, tol, ilp_tol, node_cap, jobs, big)


def run_optimized(inst: PottsInstance, g: Labeling, beta: float = 2.0,
                  gamma: float = 1.0, iterations: int = 5, *,
                  initial: BlockDecomposition | None = None,
                  rational: bool = False, engine: str = "auto", tol: float = TAU,
                  ilp_tol: float | None = None, node_cap: int | None = None,
                  jobs: int = 1, big: float | None = None) -> FinderReport:
    """Single-restriction variant: one partition-wide dual restriction per
    iteration; the merged stability program decomposes across blocks once
    crossing edges are removed, so blocks are solved independently."""
    return _run(inst, g, beta, gamma, iterations, initial, True, rational,
                engine, tol, ilp_tol, node_cap, jobs, big)


def find_stable_blocks(inst: PottsInstance, g: Labeling | None = None, *,
                       beta: float = 2.0, gamma: float = 1.0,
                       iterations: int = 5, optimized: bool = False,
                       **kwargs) -> FinderReport:
    """Convenience wrapper: computes the exact optimum if not supplied."""
    if g is None:
        g = solve_map(
            inst,
            rational=kwargs.get("rational", False),
            engine=kwargs.get("engine", "auto"),
            big=kwargs.get("big"),
        )
    variant = run_optimized if optimized else run
    return variant(inst, g, beta, gamma, iterations, **kwargs)


def dumps_report(report: FinderReport) -> str:
    final = report.final
    owner = final.block_of()
    lines = []
    for u in range(report.num_nodes):
        status = final.statuses[owner[u]]
        letter = "S" if status is BlockStatus.STABLE else "U"
        lines.append(f"node {u} block {owner[u]} status {letter}")
    for t, rec in enumerate(report.iterations, start=1):
        lines.append(f"iteration {t} certified_fraction {'%.17g' % rec.certified_fraction}")
    return "\n".join(lines) + "\n"


def loads_report(text: str) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Parse a report dump: (block ids, certified flags, per-iteration fractions)."""
    blocks: dict[int, int] = {}
    certified: dict[int, bool] = {}
    fractions: list[float] = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "node":
            u = int(parts[1])
            blocks[u] = int(parts[3])
            certified[u] = parts[5] == "S"
        elif parts[0] == "iteration":
            fractions.append(float(parts[3]))
    n = max(blocks) + 1 if blocks else 0
    barr = np.zeros(n, dtype=np.int64)
    carr = np.zeros(n, dtype=bool)
    for u in range(n):
        if u not in blocks:
            raise ModelError(f"report is missing node {u}")
        barr[u] = blocks[u]
        carr[u] = certified[u]
    return barr, carr, fractions


def write_report(report: FinderReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(report))


def read_report(path) -> tuple[np.ndarray, np.ndarray, list[float]]:
    with open(path) as fh:
        return loads_report(fh.read())
