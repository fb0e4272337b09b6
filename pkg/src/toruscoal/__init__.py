"""Spatial multiple-merger coalescents on the 2-D torus.

Exact event-driven simulation of spatial coalescents whose lines walk on a
torus and merge through a finite coalescence measure on [0,1], together with
a forward Cannings population model, infinite-alleles statistics, and a
non-spatial Kingman/Ewens reference suite used to validate the large-torus
Kingman limit.
"""

from .partitions import (
    LabeledPartition,
    UnlabeledPartition,
    in_distance_class,
    partition_metric,
    unlabeled_metric,
)
from .torus import TorusSpec, transient_distribution, site_probability
from .rates import LambdaMeasure, Mechanism, RateTable, parse_mechanism, sample_merge
from .spatial import (
    CoalescentState,
    Event,
    EventLog,
    RunawaySimulationError,
    next_event,
    replay_jsonl,
    run_until,
)
from .mutation import (
    Spectrum,
    default_mutation_rate,
    mean_spectrum,
    run_infinite_alleles,
    total_tree_length,
)
from .kingman import (
    HandoffInfo,
    KingmanConfig,
    ewens_expected_spectrum,
    hybrid_run,
    qq_data,
    sample_kingman_spectrum,
    simulate_kingman,
)
from .cannings import (
    CanningsModel,
    DiscreteGenealogy,
    MomentRow,
    OffspringLaw,
    moment_diagnostics,
    pair_coalescence_prob,
    step_generation,
    trace_genealogy,
)

__version__ = "0.1.0"
