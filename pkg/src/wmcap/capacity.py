"""Binary entropy, compressed-stream size estimates and capacity assembly.

A stage's watermark capacity is the expected number of embeddable pairs
minus whatever auxiliary data must ride along: raw flag bits, the
entropy-estimated compressed flag stream, and the entropy-estimated
compressed location map.  Streams a scheme does not use contribute zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cooc import CoocMatrix, StageTallies, run_cap, run_fixed_p
from .schemes import Scheme


def binary_entropy(q: float) -> float:
    """H(q) in bits, with H(0) = H(1) = 0."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"entropy argument must be in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def compressed_size(size: float, ones: float) -> float:
    """Ideal compressed length of a bitstream with `ones` ones in `size` bits."""
    if size < 0 or ones < 0 or ones > size * (1 + 1e-12):
        raise ValueError(f"need 0 <= ones <= size, got ones={ones}, size={size}")
    if size == 0.0:
        return 0.0
    return size * binary_entropy(min(ones / size, 1.0))


@dataclass(frozen=True)
class StageCapacity:
    k: int
    size_I: float
    size_F_raw: float   # raw flag bits embedded alongside the watermark
    size_Fc: float      # entropy estimate of the compressed flag stream
    size_Lc: float      # entropy estimate of the compressed location map
    capacity: float
    p_used: float
    infeasible: bool    # capacity went negative; reported as-is, not clamped


@dataclass(frozen=True)
class CapacityReport:
    scheme: str
    estimator: str
    pairing: str
    p_w: float
    passes: int
    n_pairs: float
    n_pixels: int
    stages: list[StageCapacity]
    warnings: list[str] = field(default_factory=list)

    @property
    def total_capacity(self) -> float:
        return math.fsum(s.capacity for s in self.stages)

    @property
    def total_capacity_bpp(self) -> float:
        return self.total_capacity / self.n_pixels if self.n_pixels else 0.0

    def totals(self) -> dict:
        return {
            "size_I": math.fsum(s.size_I for s in self.stages),
            "size_F": math.fsum(s.size_F_raw for s in self.stages),
            "size_Fc": math.fsum(s.size_Fc for s in self.stages),
            "size_Lc": math.fsum(s.size_Lc for s in self.stages),
            "capacity_bits": self.total_capacity,
            "capacity_bpp": self.total_capacity_bpp,
        }

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "estimator": self.estimator,
            "pairing": self.pairing,
            "p_w": self.p_w,
            "passes": self.passes,
            "n_pairs": self.n_pairs,
            "n_pixels": self.n_pixels,
            "stages": [
                {
                    "k": s.k,
                    "size_I": s.size_I,
                    "size_F": s.size_F_raw,
                    "size_Fc": s.size_Fc,
                    "size_Lc": s.size_Lc,
                    "capacity_bits": s.capacity,
                    "capacity_bpp": s.capacity / self.n_pixels if self.n_pixels else 0.0,
                    "p_used": s.p_used,
                    "infeasible": s.infeasible,
                }
                for s in self.stages
            ],
            "totals": self.totals(),
            "warnings": list(self.warnings),
        }


def stage_capacity(
    scheme: Scheme, t: StageTallies, p_used: float, compressor=compressed_size
) -> StageCapacity:
    """Capacity of one stage from its stream tallies, per the scheme's streams.

    `compressor(size, ones)` models the compressed stream length; the default
    is the ideal entropy size, but a measured coder ratio can be plugged in.
    """
    if scheme.flag_stream_compressed:
        raw_f = 0.0
        fc = compressor(t.size_F, t.ones_F)
    else:
        raw_f = t.size_F
        fc = 0.0
    lc = compressor(t.size_L, t.ones_L) if scheme.has_location_map else 0.0
    cap = t.size_I - raw_f - fc - lc
    return StageCapacity(
        k=t.k,
        size_I=t.size_I,
        size_F_raw=raw_f,
        size_Fc=fc,
        size_Lc=lc,
        capacity=cap,
        p_used=p_used,
        infeasible=cap < 0.0,
    )


def assemble_capacity(
    scheme: Scheme,
    tallies: list[StageTallies],
    p_seq,
    *,
    estimator: str,
    p_w: float,
    pairing: str = "horizontal",
    n_pixels: int = 0,
    n_pairs: float = 0.0,
    warnings=(),
    compressor=compressed_size,
) -> CapacityReport:
    if isinstance(p_seq, float):
        p_seq = [p_seq] * len(tallies)
    stages = [stage_capacity(scheme, t, p, compressor) for t, p in zip(tallies, p_seq)]
    if not n_pairs and tallies and scheme.has_location_map:
        n_pairs = tallies[0].size_L
    return CapacityReport(
        scheme=scheme.name,
        estimator=estimator,
        pairing=pairing,
        p_w=p_w,
        passes=len(tallies),
        n_pairs=n_pairs,
        n_pixels=n_pixels,
        stages=stages,
        warnings=list(warnings),
    )


def estimate(
    scheme: Scheme,
    cooc0: CoocMatrix,
    p_w: float,
    passes: int,
    method: str = "tree",
    *,
    pairing: str = "horizontal",
    n_pixels: int = 0,
) -> CapacityReport:
    """End-to-end capacity estimate by one of the three estimators."""
    from . import tree  # deferred: tree imports cooc types

    if method == "cooc":
        tallies = run_fixed_p(scheme, cooc0, p_w, passes)
        p_seq, warns = p_w, []
    elif method == "cap":
        tallies, p_list, warns = run_cap(scheme, cooc0, p_w, passes)
        p_seq = p_list
    elif method == "tree":
        tallies = tree.stage_tallies(scheme, cooc0, p_w, passes)
        p_seq, warns = p_w, []
    else:
        raise ValueError(f"unknown estimator {method!r}: expected tree, cooc or cap")
    return assemble_capacity(
        scheme,
        tallies,
        p_seq,
        estimator=method,
        p_w=p_w,
        pairing=pairing,
        n_pixels=n_pixels,
        n_pairs=cooc0.total,
        warnings=warns,
    )


def optimal_passes(
    scheme: Scheme,
    cooc0: CoocMatrix,
    p_w: float,
    method: str = "cap",
    max_passes: int = 32,
    *,
    pairing: str = "horizontal",
    n_pixels: int = 0,
) -> tuple[int, CapacityReport]:
    """Smallest pass count whose next stage adds nothing.

    Runs the chosen estimator out to `max_passes` and returns the first
    stage index whose capacity drops to or below zero (embedding past it
    cannot help); the report carries the whole trajectory for inspection.
    """
    if max_passes < 1:
        raise ValueError("need at least one pass")
    trajectory = estimate(
        scheme, cooc0, p_w, max_passes, method, pairing=pairing, n_pixels=n_pixels
    )
    p_opt = max_passes
    for s in trajectory.stages:
        if s.capacity <= 0.0:
            p_opt = s.k
            break
    return p_opt, trajectory
