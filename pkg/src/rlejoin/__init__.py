"""Run-length-encoded join summaries computed by graphical-model inference.

The pipeline learns exact frequency potentials from normalized CSV tables,
eliminates variables leaves-to-root over the query's join graph (or junction
tree, for cyclic queries), and emits a per-column RLE summary of the join
result whose totals all equal the join size. The summary can be persisted,
reloaded, and desummarized into the flat result without ever computing the
join directly.
"""

from .baselines import TupleMultiset, brute_force_join, hash_join_plan, rle_columns
from .errors import (
    DisconnectedGraphError,
    DuplicateAliasError,
    FrequencyOverflowError,
    InconsistentSummaryError,
    MalformedCsvError,
    QuerySyntaxError,
    RleJoinError,
    SummaryFormatError,
    TooLargeForOracleError,
    UnknownColumnError,
    UnknownVariableError,
)
from .factors import (
    ConditionalFactor,
    Factor,
    conditionalize,
    learn_factor,
    product,
    select,
    shared_values,
    sum_out,
    variable_dictionaries,
)
from .graphs import (
    EdgeCover,
    EliminationPlan,
    JunctionTree,
    build_junction_tree,
    check_rip,
    fractional_edge_cover,
    min_fill_in,
    plan_elimination,
)
from .inference import Generator, build_generator, potential_join
from .query import JoinGraph, JoinQuery, TableRef, build_join_graph, parse_query
from .relation import Dictionary, Relation, load_csv, relation_from_rows
from .summary import (
    GenerationStats,
    JoinSummary,
    coalesce,
    desummarize,
    generate_summary,
    join_size,
    load,
    store,
)

__version__ = "0.1.0"
