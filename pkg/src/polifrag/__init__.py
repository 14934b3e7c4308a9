"""Structural fragmentation of co-follow networks across Markov Stability scales."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ContractError, EmptyHierarchyError, EmptyInputError, ParseError, PolifragError,
    SchemaError, StageError, UndefinedSubgroupError, ValidationError,
)
from .graph import (  # noqa: E402
    AttributeTable, BipartiteGraph, Ideology, WeightedGraph, load_attributes, load_bipartite, project,
)
from .stability import Partition, QualityModel, nvi, quality  # noqa: E402
from .leiden import optimize  # noqa: E402
from .scan import ScaleScanResult, scan_scales, select_robust_scales  # noqa: E402
from .hierarchy import (  # noqa: E402
    MultilevelPartition, OverlapTable, ancestors, filter_singleton_levels, overlaps,
)
from .fragmentation import (  # noqa: E402
    FragmentationReport, effective_branching, enc, frag_overall, frag_transition,
)
from .similarity import classify_pairs, mean_vector, merge_test, weighted_similarity  # noqa: E402
from .stats import chi_square, fisher_exact, mann_whitney_u, noether_power  # noqa: E402
from .synth import PlantedSpec, generate, ground_truth_frag  # noqa: E402
