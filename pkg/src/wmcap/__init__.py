"""Embedding-capacity estimation for pixel-pair reversible watermarking.

Estimates how many watermark bits an image can absorb over multiple
embedding passes — without embedding anything — via co-occurrence matrix
iteration or precomputable per-pair expectation tables, with capacity
upper bounds and a reference embedder to validate against.
"""

__version__ = "0.1.0"

from .bounds import BoundReport, bound_capacity, build_extremal_tables, max_capacity_search
from .capacity import (
    CapacityReport,
    assemble_capacity,
    binary_entropy,
    compressed_size,
    estimate,
    optimal_passes,
)
from .cooc import CoocMatrix, StageTallies, advance, build_cooc, run_cap, run_fixed_p, tally
from .imaging import GrayImage, PairSequence, load_pgm, partition_pairs, reconstruct_image, save_pgm
from .oracle import (
    EmbedRecord,
    Watermark,
    embed_multi,
    extract_and_restore,
    gen_watermark,
    timing_bench,
    variance_experiment,
)
from .schemes import Scheme, SchemeDescriptor, get_scheme
from .tree import build_poly_tables, build_stage_tables, build_total_table, estimate_totals

__all__ = [
    "BoundReport",
    "CapacityReport",
    "CoocMatrix",
    "EmbedRecord",
    "GrayImage",
    "PairSequence",
    "Scheme",
    "SchemeDescriptor",
    "StageTallies",
    "Watermark",
    "advance",
    "assemble_capacity",
    "binary_entropy",
    "bound_capacity",
    "build_cooc",
    "build_extremal_tables",
    "build_poly_tables",
    "build_stage_tables",
    "build_total_table",
    "compressed_size",
    "embed_multi",
    "estimate",
    "estimate_totals",
    "extract_and_restore",
    "gen_watermark",
    "get_scheme",
    "load_pgm",
    "max_capacity_search",
    "optimal_passes",
    "partition_pairs",
    "reconstruct_image",
    "run_cap",
    "run_fixed_p",
    "save_pgm",
    "tally",
    "timing_bench",
    "variance_experiment",
]
