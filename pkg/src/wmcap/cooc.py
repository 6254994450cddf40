"""Co-occurrence matrix estimation of multi-pass embedding statistics.

The pairwise co-occurrence matrix counts how often each (x, y) pixel pair
occurs among the image's disjoint pairs.  Advancing it one stage splits the
mass of every embeddable pair onto its bit-0/bit-1 children with weights
(1-p)/p and moves non-embeddable mass to the no-bit child; the region sums
of the advanced matrices are the expected per-stage stream sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .schemes import N_CELLS, Scheme, pack


class CoocMatrix:
    """Sparse nonnegative mass per pixel pair, keyed by the packed index.

    Counts are integers when built from an image and become fractional
    expectations after the first advance.  The total is preserved by
    every advance.
    """

    __slots__ = ("counts", "total")

    def __init__(self, counts: dict[int, float]):
        self.counts = counts
        self.total = math.fsum(counts.values())

    def __len__(self):
        return len(self.counts)

    def mass(self, x: int, y: int) -> float:
        return self.counts.get(pack(x, y), 0.0)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(N_CELLS)
        for idx, c in self.counts.items():
            dense[idx] = c
        return dense

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "CoocMatrix":
        idx = np.nonzero(dense)[0]
        return cls({int(i): float(dense[i]) for i in idx})

    def dump(self, fh) -> None:
        """Write `x y count` triplets, sorted, for debugging."""
        for idx in sorted(self.counts):
            fh.write(f"{idx // 256} {idx % 256} {self.counts[idx]!r}\n")

    @classmethod
    def load(cls, fh) -> "CoocMatrix":
        counts: dict[int, float] = {}
        for line in fh:
            if not line.strip():
                continue
            xs, ys, cs = line.split()
            counts[pack(int(xs), int(ys))] = counts.get(pack(int(xs), int(ys)), 0.0) + float(cs)
        return cls(counts)


@dataclass(frozen=True)
class StageTallies:
    """Expected stream sizes read off the stage-k co-occurrence matrix."""

    k: int
    size_I: float
    size_F: float
    ones_F: float
    ones_L: float
    size_L: float


def cooc_dense(pairs) -> np.ndarray:
    """Dense per-pair occurrence counts of an image's disjoint pairs."""
    arr = np.asarray(getattr(pairs, "pairs", pairs))
    if arr.size == 0:
        raise ValueError("cannot build a co-occurrence matrix from zero pairs")
    flat = arr[:, 0].astype(np.int64) * 256 + arr[:, 1].astype(np.int64)
    return np.bincount(flat, minlength=N_CELLS).astype(np.float64)


def build_cooc(pairs) -> CoocMatrix:
    """Count the disjoint pixel pairs of an image into a CoocMatrix."""
    return CoocMatrix.from_dense(cooc_dense(pairs))


def advance(scheme: Scheme, cooc: CoocMatrix, p: float) -> CoocMatrix:
    """One stage of the mass-splitting iteration at bit probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    emb = scheme.emb
    c0, c1, cphi = scheme.child0, scheme.child1, scheme.childphi
    out: dict[int, float] = {}
    q = 1.0 - p
    for idx in sorted(cooc.counts):  # fixed order keeps the arithmetic reproducible
        m = cooc.counts[idx]
        if emb[idx]:
            if q:
                d = int(c0[idx])
                out[d] = out.get(d, 0.0) + q * m
            if p:
                d = int(c1[idx])
                out[d] = out.get(d, 0.0) + p * m
        else:
            d = int(cphi[idx])
            out[d] = out.get(d, 0.0) + m
    return CoocMatrix(out)


def tally(scheme: Scheme, cooc: CoocMatrix, k: int = 0) -> StageTallies:
    """Region sums of the matrix over the scheme's stream domains."""
    emb = scheme.emb
    flag = scheme.flag
    loc = scheme.loc
    acc_i, acc_f, acc_f1, acc_l1 = [], [], [], []
    for idx in sorted(cooc.counts):
        m = cooc.counts[idx]
        if emb[idx]:
            acc_i.append(m)
        if flag[idx] >= 0:
            acc_f.append(m)
            if flag[idx] == 1:
                acc_f1.append(m)
        if loc[idx] == 1:
            acc_l1.append(m)
    size_l = cooc.total if scheme.has_location_map else 0.0
    return StageTallies(
        k=k,
        size_I=math.fsum(acc_i),
        size_F=math.fsum(acc_f),
        ones_F=math.fsum(acc_f1),
        ones_L=math.fsum(acc_l1),
        size_L=size_l,
    )


def advance_dense(scheme: Scheme, dense: np.ndarray, p: float) -> np.ndarray:
    """Vectorized advance over a dense 256x256 mass vector (same arithmetic)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    out = np.zeros_like(dense)
    emb = scheme.emb
    src = dense[emb]
    np.add.at(out, scheme.child0[emb], (1.0 - p) * src)
    np.add.at(out, scheme.child1[emb], p * src)
    np.add.at(out, scheme.childphi[~emb], dense[~emb])
    return out


def tally_dense(scheme: Scheme, dense: np.ndarray, k: int = 0) -> StageTallies:
    total = float(dense.sum())
    return StageTallies(
        k=k,
        size_I=float(dense @ scheme.base_grid("I")),
        size_F=float(dense @ scheme.base_grid("F")),
        ones_F=float(dense @ scheme.base_grid("ones_F")),
        ones_L=float(dense @ scheme.base_grid("ones_L")),
        size_L=total if scheme.has_location_map else 0.0,
    )


def run_fixed_p(
    scheme: Scheme, cooc0: CoocMatrix, p: float, passes: int, engine: str = "sparse"
) -> list[StageTallies]:
    """Stage tallies for k = 0..passes-1 at a fixed bit probability.

    engine="dense" runs the same iteration on a dense mass vector; results
    agree with the sparse path to well under 1e-9 relative.
    """
    if passes < 1:
        raise ValueError("need at least one pass")
    tallies = []
    if engine == "dense":
        cur = cooc0.to_dense()
        for k in range(passes):
            tallies.append(tally_dense(scheme, cur, k))
            if k + 1 < passes:
                cur = advance_dense(scheme, cur, p)
        return tallies
    cur = cooc0
    for k in range(passes):
        tallies.append(tally(scheme, cur, k))
        if k + 1 < passes:
            cur = advance(scheme, cur, p)
    return tallies


def stage_aux_size(scheme: Scheme, t: StageTallies) -> float:
    """Expected auxiliary bits of one stage (entropy sizes for compressed streams)."""
    from .capacity import compressed_size  # local import to avoid a cycle

    total = 0.0
    if scheme.flag_stream_compressed:
        total += compressed_size(t.size_F, t.ones_F)
    else:
        total += t.size_F
    if scheme.has_location_map:
        total += compressed_size(t.size_L, t.ones_L)
    return total


def stage_aux_ones_probability(scheme: Scheme, t: StageTallies) -> float:
    """Probability that an auxiliary bit is 1 at this stage.

    Compressed streams are taken as incompressible output, ones fraction 0.5;
    raw flag bits keep their own ones fraction.
    """
    from .capacity import compressed_size

    num = 0.0
    den = 0.0
    if scheme.flag_stream_compressed:
        fc = compressed_size(t.size_F, t.ones_F)
        num += 0.5 * fc
        den += fc
    else:
        num += t.ones_F
        den += t.size_F
    if scheme.has_location_map:
        lc = compressed_size(t.size_L, t.ones_L)
        num += 0.5 * lc
        den += lc
    if den == 0.0:
        return 0.5
    return num / den


def adaptive_probability(scheme: Scheme, t: StageTallies, p_w: float) -> tuple[float, str | None]:
    """One stage of the adaptive re-weighting; returns (p_k, warning or None)."""
    if t.size_I <= 0.0:
        return p_w, None  # nothing embeddable: the advance degenerates to no-bit moves
    size_a = stage_aux_size(scheme, t)
    p_a = stage_aux_ones_probability(scheme, t)
    p_k = ((t.size_I - size_a) * p_w + size_a * p_a) / t.size_I
    if not 0.0 <= p_k <= 1.0:
        clamped = min(1.0, max(0.0, p_k))
        return clamped, f"stage {t.k}: adaptive probability {p_k:.6f} clamped to [0,1]"
    return p_k, None


def run_cap(
    scheme: Scheme, cooc0: CoocMatrix, p_w: float, passes: int, engine: str = "sparse"
) -> tuple[list[StageTallies], list[float], list[str]]:
    """Adaptive-probability estimation: re-weight p each stage by the
    auxiliary bits that ride along with the watermark.

    Returns the stage tallies, the per-stage probabilities actually used,
    and any warnings (the weighted probability leaving [0, 1] signals an
    inconsistent stage estimate and is clamped).
    """
    if passes < 1:
        raise ValueError("need at least one pass")
    if not 0.0 <= p_w <= 1.0:
        raise ValueError(f"p_w must be in [0, 1], got {p_w}")
    tallies: list[StageTallies] = []
    p_seq: list[float] = []
    warnings: list[str] = []
    dense = engine == "dense"
    cur = cooc0.to_dense() if dense else cooc0
    for k in range(passes):
        t = tally_dense(scheme, cur, k) if dense else tally(scheme, cur, k)
        tallies.append(t)
        p_k, warn = adaptive_probability(scheme, t, p_w)
        if warn:
            warnings.append(warn)
        p_seq.append(p_k)
        if k + 1 < passes:
            cur = advance_dense(scheme, cur, p_k) if dense else advance(scheme, cur, p_k)
    return tallies, p_seq, warnings
