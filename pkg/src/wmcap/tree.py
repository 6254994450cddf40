"""Single-iteration expectation tables over the full pixel-pair domain.

Instead of advancing the image statistics pass by pass, tabulate for every
possible pair the expected number of bits it contributes to a stream, per
stage and in total, by a dynamic program over the 256x256 grid: the table
for stage k is a gather of the stage k-1 table through the children maps.
One weighted sum against the initial co-occurrence matrix then yields the
image-level estimate for any number of passes.

Because the recursion only ever multiplies by p and (1-p), every cell of
the total table is a polynomial in p of degree < P; the polynomial
coefficients are computed once (independently of p) and can be cached.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from .cooc import CoocMatrix, StageTallies
from .schemes import N_CELLS, Scheme

KINDS = ("I", "F", "ones_F", "ones_L")

POLY_CACHE_FORMAT = 1
POLY_CACHE_MAX_PASSES = 16
CACHE_ENV_VAR = "WMCAP_CACHE_DIR"


@dataclass(frozen=True)
class ExpectationTable:
    scheme: str
    kind: str
    stage: int | None  # stage index, or None for a total-over-P table
    passes: int
    p: float
    values: np.ndarray  # (65536,) expected bits per pair


@dataclass(frozen=True)
class PolyTable:
    """Per-pair polynomial coefficients c0..c_{P-1}; value = sum c_j p^j."""

    scheme: str
    kind: str
    passes: int
    total: bool
    coeffs: np.ndarray  # (65536, P)

    def evaluate(self, p: float) -> np.ndarray:
        powers = p ** np.arange(self.coeffs.shape[1])
        return self.coeffs @ powers


def _check(scheme: Scheme, kind: str, passes: int, p: float | None = None):
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}: expected one of {KINDS}")
    if passes < 1:
        raise ValueError("need at least one pass")
    if p is not None and not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")


def _step(scheme: Scheme, prev: np.ndarray, p: float) -> np.ndarray:
    """Pull a per-pair table one stage back through the children maps."""
    out = prev[scheme.childphi]
    emb = scheme.emb
    out[emb] = (1.0 - p) * prev[scheme.child0[emb]] + p * prev[scheme.child1[emb]]
    return out


def build_stage_tables(scheme: Scheme, kind: str, passes: int, p: float) -> list[ExpectationTable]:
    """Expected per-pair stream bits at each stage 0..passes-1."""
    _check(scheme, kind, passes, p)
    cur = scheme.base_grid(kind)
    tables = [ExpectationTable(scheme.name, kind, 0, passes, p, cur)]
    for k in range(1, passes):
        cur = _step(scheme, cur, p)
        tables.append(ExpectationTable(scheme.name, kind, k, passes, p, cur))
    return tables


def build_total_table(scheme: Scheme, kind: str, passes: int, p: float) -> ExpectationTable:
    """Expected total per-pair stream bits over all passes.

    Built iteratively: the P-pass table reuses the (P-1)-pass table, so a
    sweep over increasing P costs one grid gather per step.
    """
    _check(scheme, kind, passes, p)
    base = scheme.base_grid(kind)
    cur = base
    for _ in range(1, passes):
        cur = base + _step(scheme, cur, p)
    return ExpectationTable(scheme.name, kind, None, passes, p, cur)


def _poly_step(scheme: Scheme, prev: np.ndarray, width: int) -> np.ndarray:
    """Polynomial version of `_step`: multiply-by-p is a degree shift."""
    deg = prev.shape[1]
    out = np.zeros((N_CELLS, width))
    out[:, :deg] = prev[scheme.childphi]
    emb = scheme.emb
    a = prev[scheme.child0[emb]]  # weight (1-p): keep, subtract shifted
    b = prev[scheme.child1[emb]]  # weight p: add shifted
    out[emb, :deg] = a
    out[emb, 1 : deg + 1] += b - a
    return out


def build_stage_poly_tables(scheme: Scheme, kind: str, passes: int) -> list[PolyTable]:
    """Per-stage polynomial tables for stages 0..passes-1 (degree <= k)."""
    _check(scheme, kind, passes)
    cur = np.zeros((N_CELLS, 1))
    cur[:, 0] = scheme.base_grid(kind)
    out = [PolyTable(scheme.name, kind, 1, False, cur)]
    for k in range(1, passes):
        cur = _poly_step(scheme, cur, k + 1)
        out.append(PolyTable(scheme.name, kind, k + 1, False, cur))
    return out


def build_poly_tables(scheme: Scheme, kind: str, passes: int, total: bool = True) -> PolyTable:
    """Coefficients of the per-pair expectation as a polynomial in p."""
    _check(scheme, kind, passes)
    base = scheme.base_grid(kind)
    cur = np.zeros((N_CELLS, 1))
    cur[:, 0] = base
    if total:
        for step in range(1, passes):
            nxt = _poly_step(scheme, cur, step + 1)
            nxt[:, 0] += base
            cur = nxt
    else:
        for _ in range(1, passes):
            cur = _poly_step(scheme, cur, cur.shape[1] + 1)
    coeffs = np.zeros((N_CELLS, passes))
    coeffs[:, : cur.shape[1]] = cur
    return PolyTable(scheme.name, kind, passes, total, coeffs)


def estimate_totals(table, cooc0: CoocMatrix):
    """Weight per-pair tables by the image's initial pair population.

    Accepts a single table (returns its weighted sum) or a list of stage
    tables (returns one total per stage); mixed kinds or schemes in a list
    are rejected.
    """
    if isinstance(table, (list, tuple)):
        kinds = {(t.scheme, t.kind) for t in table if isinstance(t, ExpectationTable)}
        if len(kinds) > 1:
            raise ValueError(f"mixed table kinds/schemes: {sorted(kinds)}")
        return [estimate_totals(t, cooc0) for t in table]
    values = table.values if isinstance(table, ExpectationTable) else np.asarray(table)
    if values.shape[0] != N_CELLS:
        raise ValueError("table does not cover the 256x256 pair domain")
    acc = 0.0
    for idx in sorted(cooc0.counts):
        acc += cooc0.counts[idx] * float(values[idx])
    return acc


def stage_tallies(scheme: Scheme, cooc0: CoocMatrix, p: float, passes: int) -> list[StageTallies]:
    """Per-stage stream sizes via the expectation tables, matching the
    co-occurrence iteration at fixed p."""
    _check(scheme, "I", passes, p)
    tables = {kind: build_stage_tables(scheme, kind, passes, p) for kind in KINDS}
    n_pairs = cooc0.total
    out = []
    for k in range(passes):
        out.append(
            StageTallies(
                k=k,
                size_I=estimate_totals(tables["I"][k], cooc0),
                size_F=estimate_totals(tables["F"][k], cooc0),
                ones_F=estimate_totals(tables["ones_F"][k], cooc0),
                ones_L=estimate_totals(tables["ones_L"][k], cooc0),
                size_L=n_pairs if scheme.has_location_map else 0.0,
            )
        )
    return out


# -- polynomial table cache ------------------------------------------------

def _cache_key(scheme: Scheme, kind: str, passes: int, total: bool) -> str:
    return (
        f"scheme={scheme.name};theta_h={scheme.descriptor.theta_h};kind={kind};"
        f"passes={passes};total={int(total)};format={POLY_CACHE_FORMAT}"
    )


def _cache_path(cache_dir: str, key: str) -> str:
    digest = hashlib.sha256(key.encode()).hexdigest()[:24]
    return os.path.join(cache_dir, f"poly_{digest}.npz")


def poly_tables_cached(
    scheme: Scheme, kind: str, passes: int, total: bool = True, cache_dir: str | None = None
) -> PolyTable:
    """build_poly_tables with an optional on-disk cache.

    The cache directory comes from the WMCAP_CACHE_DIR environment variable
    unless given explicitly; entries are keyed by scheme, threshold, kind,
    pass count and format version, and ignored on any mismatch.  Tables for
    more than POLY_CACHE_MAX_PASSES passes are never cached.
    """
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV_VAR)
    if not cache_dir or passes > POLY_CACHE_MAX_PASSES:
        return build_poly_tables(scheme, kind, passes, total)
    key = _cache_key(scheme, kind, passes, total)
    path = _cache_path(cache_dir, key)
    if os.path.exists(path):
        try:
            with np.load(path, allow_pickle=False) as blob:
                if str(blob["key"]) == key:
                    return PolyTable(scheme.name, kind, passes, total, blob["coeffs"])
        except (OSError, ValueError, KeyError):
            pass  # unreadable or stale cache entry: rebuild below
    table = build_poly_tables(scheme, kind, passes, total)
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + ".tmp.npz"
    np.savez(tmp, key=np.array(key), coeffs=table.coeffs)
    os.replace(tmp, path)
    return table
