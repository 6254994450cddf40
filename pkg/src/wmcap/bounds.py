"""Upper bounds on the multi-pass embedding capacity.

The estimators average over the branching evolutions of each pair; the
bound instead tracks per-pair extremes over every possible evolution:
the most payload bits any bit assignment can extract from a pair, the
largest/smallest per-stage flag and location-map contributions, and
entropy lower bounds on what the compressed auxiliary streams must cost
in the best case.  Everything is again a max/min dynamic program over
the 256x256 grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import binary_entropy
from .cooc import CoocMatrix
from .schemes import Scheme


@dataclass(frozen=True)
class ExtremalTables:
    """Per-pair path extremes for one stream kind over `passes` stages.

    max_total_size: largest total bit count over any evolution (65536,)
    max_ones_by_stage / min_ones_by_stage: extreme per-stage bit values
    min_size_by_stage: smallest per-stage bit count
    """

    scheme: str
    kind: str
    passes: int
    max_total_size: np.ndarray = field(repr=False)
    max_ones_by_stage: list[np.ndarray] = field(repr=False, default_factory=list)
    min_ones_by_stage: list[np.ndarray] = field(repr=False, default_factory=list)
    min_size_by_stage: list[np.ndarray] = field(repr=False, default_factory=list)


def _extremal_step(scheme: Scheme, prev: np.ndarray, op) -> np.ndarray:
    out = prev[scheme.childphi]
    emb = scheme.emb
    out[emb] = op(prev[scheme.child0[emb]], prev[scheme.child1[emb]])
    return out


def _max_total(scheme: Scheme, per_stage: np.ndarray, passes: int) -> np.ndarray:
    cur = per_stage.copy()
    for _ in range(1, passes):
        cur = per_stage + _extremal_step(scheme, cur, np.maximum)
    return cur


def _stage_extremes(scheme: Scheme, base: np.ndarray, passes: int, op) -> list[np.ndarray]:
    tables = [base.copy()]
    for _ in range(1, passes):
        tables.append(_extremal_step(scheme, tables[-1], op))
    return tables


def build_extremal_tables(scheme: Scheme, kind: str, passes: int) -> ExtremalTables:
    """Max/min DP tables for one stream kind (I, F or L)."""
    if passes < 1:
        raise ValueError("need at least one pass")
    size_b = scheme.size_grid(kind)
    tables = ExtremalTables(
        scheme=scheme.name,
        kind=kind,
        passes=passes,
        max_total_size=_max_total(scheme, size_b, passes),
        min_size_by_stage=_stage_extremes(scheme, size_b, passes, np.minimum),
    )
    if kind in ("F", "L"):
        ones_b = scheme.ones_grid(kind)
        tables.max_ones_by_stage.extend(_stage_extremes(scheme, ones_b, passes, np.maximum))
        tables.min_ones_by_stage.extend(_stage_extremes(scheme, ones_b, passes, np.minimum))
    return tables


def max_net_payload_table(scheme: Scheme, passes: int) -> np.ndarray:
    """Largest per-pair (payload - raw flag) bit total over any evolution.

    When flags are embedded raw they cost capacity on the very path that
    produced them, so the maximisation has to track the net contribution
    jointly; schemes that compress their flags pay for them elsewhere and
    the net reduces to the plain payload maximum.
    """
    net = scheme.size_grid("I")
    if not scheme.flag_stream_compressed:
        net = net - scheme.size_grid("F")
    return _max_total(scheme, net, passes)


@dataclass(frozen=True)
class BoundEntry:
    passes: int
    bound_bits: float
    payload_term: float
    locmap_term: float
    flag_term: float
    alphas: list[float]
    betas: list[float]


@dataclass(frozen=True)
class BoundReport:
    scheme: str
    pairing: str
    n_pairs: float
    n_pixels: int
    entries: list[BoundEntry]
    eta_max: float
    eta_max_passes: int
    cap_hit: bool  # search stopped at the pass limit before the bound decreased

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "pairing": self.pairing,
            "n_pairs": self.n_pairs,
            "n_pixels": self.n_pixels,
            "entries": [
                {
                    "passes": e.passes,
                    "bound_bits": e.bound_bits,
                    "bound_bpp": e.bound_bits / self.n_pixels if self.n_pixels else 0.0,
                    "payload_term": e.payload_term,
                    "locmap_term": e.locmap_term,
                    "flag_term": e.flag_term,
                    "alphas": e.alphas,
                    "betas": e.betas,
                }
                for e in self.entries
            ],
            "eta_max_bits": self.eta_max,
            "eta_max_bpp": self.eta_max / self.n_pixels if self.n_pixels else 0.0,
            "eta_max_passes": self.eta_max_passes,
            "cap_hit": self.cap_hit,
        }


def _weighted(weights: np.ndarray, table: np.ndarray) -> float:
    return float(weights @ table)


def _ratio_entropy(num: float, den: float) -> float:
    # empty streams carry no cost: 0/0 counts as argument 0
    if den <= 0.0:
        return 0.0
    return binary_entropy(min(max(num / den, 0.0), 1.0))


def bound_capacity(scheme: Scheme, cooc0: CoocMatrix, passes: int) -> BoundEntry:
    """Upper bound on the capacity achievable by any watermark in `passes` passes."""
    if passes < 1:
        raise ValueError("need at least one pass")
    w = cooc0.to_dense()
    n_pairs = cooc0.total

    payload = _weighted(w, max_net_payload_table(scheme, passes))

    locmap_term = 0.0
    if scheme.has_location_map:
        loc = build_extremal_tables(scheme, "L", passes)
        for k in range(passes):
            hi = _weighted(w, loc.max_ones_by_stage[k]) / n_pairs
            lo = _weighted(w, loc.min_ones_by_stage[k]) / n_pairs
            # the cheapest conceivable map compresses at the better of the two
            # extreme ones-fractions; the entropy between them can only be larger
            locmap_term += n_pairs * min(binary_entropy(min(hi, 1.0)), binary_entropy(max(lo, 0.0)))

    flag_term = 0.0
    alphas: list[float] = []
    betas: list[float] = []
    if scheme.flag_stream_compressed:
        flg = build_extremal_tables(scheme, "F", passes)
        inv_ones = 1.0 - scheme.ones_grid("F")
        inv_ones[scheme.flag < 0] = 0.0  # inverted bits exist only where flags do
        max_inv = _stage_extremes(scheme, inv_ones, passes, np.maximum)
        min_inv = _stage_extremes(scheme, inv_ones, passes, np.minimum)
        for k in range(passes):
            m1 = _weighted(w, flg.max_ones_by_stage[k])
            l1 = _weighted(w, flg.min_ones_by_stage[k])
            m0 = _weighted(w, max_inv[k])
            l0 = _weighted(w, min_inv[k])
            alpha = _ratio_entropy(m1, m1 + l0)
            beta = _ratio_entropy(l1, l1 + m0)
            alphas.append(alpha)
            betas.append(beta)
            flag_term += _weighted(w, flg.min_size_by_stage[k]) * min(alpha, beta)

    return BoundEntry(
        passes=passes,
        bound_bits=payload - locmap_term - flag_term,
        payload_term=payload,
        locmap_term=locmap_term,
        flag_term=flag_term,
        alphas=alphas,
        betas=betas,
    )


def max_capacity_search(
    scheme: Scheme,
    cooc0: CoocMatrix,
    pass_limit: int = 16,
    *,
    pairing: str = "horizontal",
    n_pixels: int = 0,
) -> BoundReport:
    """Scan the bound over increasing pass counts until it starts to fall.

    The bound typically rises to a peak and then declines as auxiliary data
    swamps the extra payload; the scan stops at the first decrease.  If the
    pass limit is reached with no decrease the report says so, since the
    peak may lie beyond it.
    """
    if pass_limit < 1:
        raise ValueError("need at least one pass")
    entries: list[BoundEntry] = []
    best = -math.inf
    best_p = 0
    cap_hit = True
    for passes in range(1, pass_limit + 1):
        entry = bound_capacity(scheme, cooc0, passes)
        entries.append(entry)
        if entry.bound_bits > best:
            best, best_p = entry.bound_bits, passes
        if len(entries) >= 2 and entry.bound_bits < entries[-2].bound_bits:
            cap_hit = False
            break
    return BoundReport(
        scheme=scheme.name,
        pairing=pairing,
        n_pairs=cooc0.total,
        n_pixels=n_pixels,
        entries=entries,
        eta_max=max(best, 0.0),
        eta_max_passes=best_p,
        cap_hit=cap_hit,
    )
