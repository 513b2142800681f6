"""Taxonomy refinement with hyperbolic and Euclidean word embeddings.

The package takes a noisy taxonomy (child -> parent IS-A edges over a term
vocabulary), trains Poincare-ball embeddings from cleaned hypernym candidate
pairs, and uses embedding ranks to relocate badly attached terms, attach
orphan terms, attach leftover compounds by substring, and finally break any
remaining cycles.  An evaluation module scores taxonomies against a gold
standard by edge-level F1 and compares systems with McNemar's test.
"""

__version__ = "0.1.0"

from taxrefine.taxonomy import (
    ParseError,
    StructureReport,
    Taxonomy,
    break_cycles,
    components,
    normalize_term,
    orphans,
    parse_taxonomy,
    sanitize_root,
    serialize_taxonomy,
)
from taxrefine.relations import RelationSet, RelationTriple, clean, merge, parse_relations
from taxrefine.hyperbolic import (
    MissingRepresentationError,
    PoincareModel,
    TrainConfig,
    nearest,
    poincare_distance,
    rank,
    train,
)
from taxrefine.euclidean import EuclideanModel, cosine, load_vectors, most_similar, sim_rank
from taxrefine.refinement import (
    EuclideanBackend,
    PoincareBackend,
    RankTable,
    RefinementLog,
    attach_compounds,
    attach_orphans,
    build_rank_table,
    refine,
    relocate_outliers,
    root_baseline,
)
from taxrefine.evaluation import EvalReport, McNemarResult, edge_f1, mcnemar, structure_stats

__all__ = [
    "ParseError",
    "StructureReport",
    "Taxonomy",
    "break_cycles",
    "components",
    "normalize_term",
    "orphans",
    "parse_taxonomy",
    "sanitize_root",
    "serialize_taxonomy",
    "RelationSet",
    "RelationTriple",
    "clean",
    "merge",
    "parse_relations",
    "MissingRepresentationError",
    "PoincareModel",
    "TrainConfig",
    "nearest",
    "poincare_distance",
    "rank",
    "train",
    "EuclideanModel",
    "cosine",
    "load_vectors",
    "most_similar",
    "sim_rank",
    "EuclideanBackend",
    "PoincareBackend",
    "RankTable",
    "RefinementLog",
    "attach_compounds",
    "attach_orphans",
    "build_rank_table",
    "refine",
    "relocate_outliers",
    "root_baseline",
    "EvalReport",
    "McNemarResult",
    "edge_f1",
    "mcnemar",
    "structure_stats",
]
