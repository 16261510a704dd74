"""MAP inference for Potts models with persistency certification via stable blocks."""

from .model import (
    FORBIDDEN,
    TAU,
    BlockDecomposition,
    BlockStatus,
    BoundaryDual,
    CostPerturbation,
    ModelError,
    PairwiseDual,
    PottsInstance,
    StabilityVerdict,
    WeightPerturbation,
    apply_cost_perturbation,
    apply_weight_perturbation,
    boundary,
    crossing_edges,
    objective,
    objective_exact,
    read_instance,
    replace_forbidden,
    restricted_instance,
    write_instance,
)
from .lp import (
    PersistencyFlag,
    PersistencyMask,
    PrimalSolution,
    improve_dual,
    persistency_mask,
    solve_lp,
    solve_map,
)
from .duals import (
    block_dual_value,
    boundary_message_sums,
    extend_dual,
    local_decode,
    pairwise_dual_value,
    restrict_dual,
)
from .stability import (
    adversarial_perturbation,
    brute_force_stable,
    check_block_stable,
    check_stable,
)
from .blockfinder import (
    FinderReport,
    find_stable_blocks,
    initial_decomposition,
    reclaim,
    run,
    run_optimized,
)
from . import builders, oracle

__version__ = "0.1.0"

__all__ = [
    "FORBIDDEN",
    "TAU",
    "BlockDecomposition",
    "BlockStatus",
    "BoundaryDual",
    "CostPerturbation",
    "FinderReport",
    "ModelError",
    "PairwiseDual",
    "PersistencyFlag",
    "PersistencyMask",
    "PottsInstance",
    "PrimalSolution",
    "StabilityVerdict",
    "WeightPerturbation",
    "adversarial_perturbation",
    "apply_cost_perturbation",
    "apply_weight_perturbation",
    "block_dual_value",
    "boundary",
    "boundary_message_sums",
    "brute_force_stable",
    "builders",
    "check_block_stable",
    "check_stable",
    "crossing_edges",
    "extend_dual",
    "find_stable_blocks",
    "improve_dual",
    "initial_decomposition",
    "local_decode",
    "objective",
    "objective_exact",
    "oracle",
    "pairwise_dual_value",
    "persistency_mask",
    "read_instance",
    "reclaim",
    "replace_forbidden",
    "restrict_dual",
    "restricted_instance",
    "run",
    "run_optimized",
    "solve_lp",
    "solve_map",
    "write_instance",
]
