"""Critical Ising and FK-Ising loops on square-lattice domains.

Samplers with exact-enumeration oracles, loop extraction with nesting levels,
recursive explorations of the outermost loops, loop-collection metrics and
Monte Carlo estimators.
"""

__version__ = "0.1.0"

from .lattice import DiscreteDomain, DomainError, build_rectangle, discretize_shape, parse_shape  # noqa: E402
from .fk_ising import (  # noqa: E402
    BETA_C,
    P_SD,
    FKConfiguration,
    FKParams,
    IsingParams,
    MixedBC,
    SpinConfiguration,
    enumerate_exact,
    make_rng,
    sample_fk,
    sample_ising,
)
from .loops import Loop, LoopCollection, classify_ising_levels, cut_out_domains, extract_fk_loops, extract_ising_loops  # noqa: E402
from .exploration import explore_all_fk_level1, fk_exploration_path, harvest_outermost  # noqa: E402
from .metric import collection_distance, loop_distance  # noqa: E402

__all__ = [
    "__version__",
    "DiscreteDomain",
    "DomainError",
    "build_rectangle",
    "discretize_shape",
    "parse_shape",
    "BETA_C",
    "P_SD",
    "FKConfiguration",
    "FKParams",
    "IsingParams",
    "MixedBC",
    "SpinConfiguration",
    "enumerate_exact",
    "make_rng",
    "sample_fk",
    "sample_ising",
    "Loop",
    "LoopCollection",
    "classify_ising_levels",
    "cut_out_domains",
    "extract_fk_loops",
    "extract_ising_loops",
    "explore_all_fk_level1",
    "fk_exploration_path",
    "harvest_outermost",
    "collection_distance",
    "loop_distance",
]
