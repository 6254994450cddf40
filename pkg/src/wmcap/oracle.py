"""Reference embedder: actually watermarks, extracts and measures.

This is the ground truth the estimators are judged against.  Embedding is
a faithful sequential pipeline per pass: scan the pairs for auxiliary data
(flags, location map), compress what the scheme compresses, lay out
[auxiliary | watermark] and push one bit through every embeddable pair in
order.  Extraction runs the passes backwards and must reproduce both the
cover image and the watermark bit-exactly.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

import numpy as np

from .arith import ArithDecodeError, arith_code, arith_decode
from .imaging import MAX_LEVEL, GrayImage, partition_pairs, reconstruct_image
from .schemes import ROLE_EMBED_ODD, ROLE_INERT, Scheme

LENGTH_PREFIX_BITS = 32  # delimits each compressed stream; charged against capacity


class EmbeddingError(RuntimeError):
    pass


class PayloadUnderrun(EmbeddingError):
    """The watermark source ran out mid-pass."""


class ExtractionError(RuntimeError):
    def __init__(self, message, stage=None, pair_index=None):
        detail = message
        if stage is not None:
            detail += f" (stage {stage}"
            detail += f", pair {pair_index})" if pair_index is not None else ")"
        super().__init__(detail)
        self.stage = stage
        self.pair_index = pair_index


@dataclass(frozen=True)
class Watermark:
    bits: np.ndarray
    p: float
    seed: int

    @property
    def ones_fraction(self) -> float:
        return float(self.bits.mean()) if len(self.bits) else 0.0


def gen_watermark(n: int, p: float, seed: int) -> Watermark:
    """Deterministic Bernoulli(p) bit vector (numpy PCG64 stream)."""
    if n < 0:
        raise ValueError("watermark length must be nonnegative")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    bits = (rng.random(n) < p).astype(np.uint8)
    return Watermark(bits, p, seed)


@dataclass(frozen=True)
class PassStats:
    k: int
    embedded_bits: int
    watermark_bits: int
    flag_bits: int
    compressed_flag_bits: int
    compressed_locmap_bits: int
    feasible: bool = True  # False when the auxiliary data alone overflows the pass

    @property
    def aux_bits(self) -> int:
        return self.embedded_bits - self.watermark_bits


@dataclass(frozen=True)
class EmbedRecord:
    scheme: str
    pairing: str
    passes_requested: int
    passes_completed: int
    stats: list[PassStats]
    watermarked: GrayImage
    achieved_capacity: int

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "pairing": self.pairing,
            "passes_requested": self.passes_requested,
            "passes_completed": self.passes_completed,
            "achieved_capacity_bits": self.achieved_capacity,
            "achieved_capacity_bpp": (
                self.achieved_capacity / self.watermarked.n_pixels
                if self.watermarked.n_pixels
                else 0.0
            ),
            "stages": [
                {
                    "k": s.k,
                    "embedded_bits": s.embedded_bits,
                    "watermark_bits": s.watermark_bits,
                    "flag_bits": s.flag_bits,
                    "compressed_flag_bits": s.compressed_flag_bits,
                    "compressed_locmap_bits": s.compressed_locmap_bits,
                }
                for s in self.stats
            ],
        }


# The hot loops index per-pair tables tens of thousands of times per pass;
# plain Python lists beat numpy scalar indexing there by a wide margin.
_LUT_CACHE: dict[tuple[str, int], tuple] = {}


def _luts(scheme: Scheme):
    key = (scheme.name, scheme.descriptor.theta_h)
    if key not in _LUT_CACHE:
        _LUT_CACHE[key] = (
            scheme.emb.tolist(),
            scheme.role.tolist(),
            scheme.flag.tolist(),
            scheme.loc.tolist(),
            scheme.child0.tolist(),
            scheme.child1.tolist(),
            scheme.childphi.tolist(),
        )
    return _LUT_CACHE[key]


def _check_oracle_support(scheme: Scheme):
    if scheme.name == "tian" and scheme.descriptor.theta_h < MAX_LEVEL:
        raise EmbeddingError(
            "tian embedding below theta_h=255 is not supported: flagged-but-"
            "untouched pairs make the payload undecodable"
        )


def _int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _bits_to_int(bits) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _repack(seq, flat: list[int]):
    arr = np.asarray(flat, dtype=np.int64)
    pairs_arr = np.stack([arr >> 8, arr & 255], axis=1).astype(np.uint8)
    return type(seq)(pairs_arr, seq.pairing, seq.width, seq.height, seq.residuals)


def collect_aux(scheme: Scheme, flat_pairs: list[int]) -> tuple[list[int], list[int]]:
    """(flag stream, location map) a pass over these pairs would generate."""
    _, _, flag, loc, _, _, _ = _luts(scheme)
    flags = [flag[i] for i in flat_pairs if flag[i] >= 0]
    locmap = [loc[i] for i in flat_pairs] if scheme.has_location_map else []
    return flags, locmap


def embed_pass(scheme: Scheme, flat_pairs: list[int], payload) -> tuple[list[int], PassStats, int]:
    """Embed one pass over packed pairs, drawing watermark bits from `payload`.

    `payload` is (bits, cursor); auxiliary bits are generated here and go in
    first, watermark bits fill the remaining embeddable pairs.  Returns the
    transformed pairs, the pass stats and the new cursor.  A pass whose
    auxiliary data overflows its embeddable pairs still transforms (so the
    flag/map streams can be inspected) but is marked infeasible.  Raises
    PayloadUnderrun when the watermark source runs out.
    """
    _check_oracle_support(scheme)
    emb, _, _, _, c0, c1, cphi = _luts(scheme)
    wm_bits, cursor = payload

    flags, locmap = collect_aux(scheme, flat_pairs)
    n_emb = sum(1 for i in flat_pairs if emb[i])

    comp_flag_bits = 0
    comp_loc_bits = 0
    aux: list[int] = []
    if scheme.has_location_map:
        code = arith_code(locmap)
        comp_loc_bits = LENGTH_PREFIX_BITS + len(code)
        aux += _int_to_bits(len(code), LENGTH_PREFIX_BITS) + code
    if scheme.flag_stream_compressed:
        code = arith_code(flags)
        comp_flag_bits = LENGTH_PREFIX_BITS + len(code)
        aux += _int_to_bits(len(code), LENGTH_PREFIX_BITS) + code
    else:
        aux += flags

    feasible = len(aux) <= n_emb
    n_wm = max(0, n_emb - len(aux))
    if cursor + n_wm > len(wm_bits):
        raise PayloadUnderrun(
            f"watermark exhausted: pass needs {n_wm} bits, {len(wm_bits) - cursor} left"
        )

    bits = aux[:n_emb] + list(wm_bits[cursor : cursor + n_wm])
    out = []
    bpos = 0
    for i in flat_pairs:
        if emb[i]:
            b = bits[bpos]
            bpos += 1
            out.append(c1[i] if b else c0[i])
        else:
            out.append(cphi[i])
    stats = PassStats(
        k=-1,
        embedded_bits=n_emb,
        watermark_bits=n_wm,
        flag_bits=len(flags),
        compressed_flag_bits=comp_flag_bits,
        compressed_locmap_bits=comp_loc_bits,
        feasible=feasible,
    )
    return out, stats, cursor + n_wm


def embed_multi(
    scheme: Scheme, img: GrayImage, watermark: Watermark, passes: int, pairing: str = "horizontal"
) -> EmbedRecord:
    """Repeat the embedding pass on the same pair partition.

    Stops early (passes_completed < passes) if a pass cannot fit its own
    auxiliary data; runs out of watermark bits is an error.
    """
    if passes < 1:
        raise ValueError("need at least one pass")
    _check_oracle_support(scheme)
    seq = partition_pairs(img, pairing)
    flat = (seq.pairs[:, 0].astype(np.int64) * 256 + seq.pairs[:, 1]).tolist()
    cursor = 0
    stats: list[PassStats] = []
    completed = 0
    for k in range(passes):
        new_flat, st, new_cursor = embed_pass(scheme, flat, (watermark.bits, cursor))
        if not st.feasible:
            break  # pass cannot carry its own auxiliary data; leave the image as-is
        flat, cursor = new_flat, new_cursor
        stats.append(PassStats(k, st.embedded_bits, st.watermark_bits, st.flag_bits,
                               st.compressed_flag_bits, st.compressed_locmap_bits))
        completed += 1
    marked = reconstruct_image(_repack(seq, flat))
    return EmbedRecord(
        scheme=scheme.name,
        pairing=pairing,
        passes_requested=passes,
        passes_completed=completed,
        stats=stats,
        watermarked=marked,
        achieved_capacity=sum(s.watermark_bits for s in stats),
    )


def _extract_pass(scheme: Scheme, flat_pairs: list[int], stage: int) -> tuple[list[int], list[int]]:
    """Undo one pass: returns (previous pairs, watermark bits of this pass)."""
    role = _luts(scheme)[1]

    if scheme.name == "coltuc":
        payload = []
        carrier = []
        for i in flat_pairs:
            x, y = i >> 8, i & 255
            if x & 1:
                payload.append(y & 1)
                carrier.append(1)
            elif role[((x | 1) << 8) | (y | 1)] == ROLE_EMBED_ODD:
                payload.append(y & 1)
                carrier.append(2)
            else:
                carrier.append(3)
        n_flags = sum(1 for c in carrier if c == 3)
        if n_flags > len(payload):
            raise ExtractionError("payload shorter than its flag stream", stage)
        flags = payload[:n_flags]
        wm = payload[n_flags:]
        prev = []
        fpos = 0
        for j, i in enumerate(flat_pairs):
            x, y = i >> 8, i & 255
            which = carrier[j]
            if which == 3:
                prev.append(((x | flags[fpos]) << 8) | y)
                fpos += 1
                continue
            (ox, oy), _bit = scheme.invert(x, y)
            prev.append((ox << 8) | oy)
        return prev, wm

    # tian: every changeable received pair carries one payload bit
    payload = []
    changeable = []
    for i in flat_pairs:
        ch = role[i] != ROLE_INERT
        changeable.append(ch)
        if ch:
            payload.append(((i >> 8) - (i & 255)) & 1)  # LSB of the difference
    n = len(flat_pairs)
    pos = 0

    def take(count, what):
        nonlocal pos
        if pos + count > len(payload):
            raise ExtractionError(f"payload too short for {what}", stage)
        chunk = payload[pos : pos + count]
        pos += count
        return chunk

    loc_len = _bits_to_int(take(LENGTH_PREFIX_BITS, "location-map length"))
    try:
        locmap = arith_decode(take(loc_len, "location map"), n)
    except ArithDecodeError as exc:
        raise ExtractionError(f"location map undecodable: {exc}", stage) from exc
    n_flags = sum(1 for j in range(n) if changeable[j] and locmap[j] == 0)
    flag_len = _bits_to_int(take(LENGTH_PREFIX_BITS, "flag-stream length"))
    try:
        flags = arith_decode(take(flag_len, "flag stream"), n_flags)
    except ArithDecodeError as exc:
        raise ExtractionError(f"flag stream undecodable: {exc}", stage) from exc
    wm = payload[pos:]

    prev = []
    fqueue = iter(flags)
    for j, i in enumerate(flat_pairs):
        if not changeable[j]:
            prev.append(i)
            continue
        x, y = i >> 8, i & 255
        try:
            (ox, oy), _bit = scheme.invert(x, y, loc_bit=locmap[j], flag_source=fqueue)
        except ValueError as exc:
            raise ExtractionError(str(exc), stage, j) from exc
        prev.append((ox << 8) | oy)
    return prev, wm


def extract_and_restore(
    scheme: Scheme, watermarked: GrayImage, passes: int, pairing: str = "horizontal"
) -> tuple[GrayImage, np.ndarray]:
    """Undo `passes` embedding passes; returns (cover image, watermark bits)."""
    if passes < 1:
        raise ValueError("need at least one pass")
    _check_oracle_support(scheme)
    seq = partition_pairs(watermarked, pairing)
    flat = (seq.pairs[:, 0].astype(np.int64) * 256 + seq.pairs[:, 1]).tolist()
    chunks: list[list[int]] = []
    for stage in range(passes - 1, -1, -1):
        flat, wm = _extract_pass(scheme, flat, stage)
        chunks.append(wm)
    bits = [b for chunk in reversed(chunks) for b in chunk]
    return reconstruct_image(_repack(seq, flat)), np.array(bits, dtype=np.uint8)


def watermark_bits_needed(img: GrayImage, passes: int) -> int:
    # one bit per pair per pass is a safe upper bound on demand
    return (img.width // 2) * img.height * passes + passes


def write_bits(bits, path) -> None:
    """Raw bit file: 32-bit big-endian length header, then packed bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(len(bits).to_bytes(4, "big"))
        fh.write(np.packbits(bits).tobytes())


def read_bits(path) -> np.ndarray:
    with open(path, "rb") as fh:
        n = int.from_bytes(fh.read(4), "big")
        packed = np.frombuffer(fh.read(), dtype=np.uint8)
    bits = np.unpackbits(packed)
    if len(bits) < n:
        raise ValueError(f"bit file truncated: header says {n}, payload has {len(bits)}")
    return bits[:n]


def psnr(a: GrayImage, b: GrayImage) -> float:
    mse = float(np.mean((a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2))
    return float("inf") if mse == 0 else 10.0 * np.log10(255.0**2 / mse)


def embed_optimal(
    scheme: Scheme,
    img: GrayImage,
    p: float,
    seed: int,
    max_passes: int = 16,
    pairing: str = "horizontal",
) -> EmbedRecord:
    """Embed until a pass stops paying: no net watermark bits, or its own
    auxiliary data no longer fits."""
    _check_oracle_support(scheme)
    wm = gen_watermark(watermark_bits_needed(img, max_passes), p, seed)
    seq = partition_pairs(img, pairing)
    flat = (seq.pairs[:, 0].astype(np.int64) * 256 + seq.pairs[:, 1]).tolist()
    cursor = 0
    stats: list[PassStats] = []
    for k in range(max_passes):
        new_flat, st, new_cursor = embed_pass(scheme, flat, (wm.bits, cursor))
        if not st.feasible or st.watermark_bits == 0:
            break
        flat, cursor = new_flat, new_cursor
        stats.append(PassStats(k, st.embedded_bits, st.watermark_bits, st.flag_bits,
                               st.compressed_flag_bits, st.compressed_locmap_bits))
    return EmbedRecord(
        scheme=scheme.name,
        pairing=pairing,
        passes_requested=max_passes,
        passes_completed=len(stats),
        stats=stats,
        watermarked=reconstruct_image(_repack(seq, flat)),
        achieved_capacity=sum(s.watermark_bits for s in stats),
    )


def variance_experiment(
    scheme: Scheme,
    img: GrayImage,
    p: float,
    passes: int,
    trials: int,
    seed0: int = 0,
    pairing: str = "horizontal",
) -> list[float]:
    """Std-dev (bpp) of the cumulative achieved capacity after each stage,
    across independently seeded watermarks."""
    if trials < 2:
        raise ValueError("need at least two trials for a standard deviation")
    n_need = watermark_bits_needed(img, passes)
    cumulative = np.zeros((trials, passes))
    for t in range(trials):
        wm = gen_watermark(n_need, p, seed0 + t)
        rec = embed_multi(scheme, img, wm, passes, pairing)
        acc = 0
        for k in range(passes):
            if k < len(rec.stats):
                acc += rec.stats[k].watermark_bits
            cumulative[t, k] = acc
    bpp = cumulative / img.n_pixels
    return [float(np.std(bpp[:, k], ddof=1)) for k in range(passes)]


def timing_bench(
    scheme: Scheme,
    img: GrayImage,
    p: float = 0.5,
    passes: int = 3,
    runs: int = 5,
    seed: int = 0,
    pairing: str = "horizontal",
) -> dict:
    """Median wall-clock seconds for actual watermarking vs the estimators.

    The tree estimator's image-independent tables are built once up front
    (they are reusable across images); its timed online stage is the
    polynomial evaluation plus the weighted sums, matching how it would be
    deployed.  The adaptive estimator is timed end to end.
    """
    from . import capacity as cap_mod
    from . import tree as tree_mod
    from .cooc import StageTallies, build_cooc, run_cap

    if runs < 1:
        raise ValueError("need at least one run")
    wm = gen_watermark(watermark_bits_needed(img, passes), p, seed)
    seq = partition_pairs(img, pairing)

    # image-independent offline stage, reusable across images: not timed
    live_kinds = [k for k in tree_mod.KINDS if k != "ones_L" or scheme.has_location_map]
    stage_polys = {
        kind: tree_mod.build_stage_poly_tables(scheme, kind, passes) for kind in live_kinds
    }

    def run_aw():
        embed_multi(scheme, img, wm, passes, pairing)

    def run_cap_est():
        c0 = build_cooc(seq)
        tallies, p_seq, _warns = run_cap(scheme, c0, p, passes, engine="dense")
        cap_mod.assemble_capacity(
            scheme, tallies, p_seq, estimator="cap", p_w=p,
            pairing=pairing, n_pixels=img.n_pixels, n_pairs=c0.total,
        )

    def run_tree_est():
        from .cooc import cooc_dense

        w = cooc_dense(seq)
        total = float(w.sum())
        values = {kind: [t.evaluate(p) for t in stage_polys[kind]] for kind in live_kinds}
        ones_l = values.get("ones_L")
        tallies = [
            StageTallies(
                k=k,
                size_I=float(w @ values["I"][k]),
                size_F=float(w @ values["F"][k]),
                ones_F=float(w @ values["ones_F"][k]),
                ones_L=float(w @ ones_l[k]) if ones_l else 0.0,
                size_L=total if scheme.has_location_map else 0.0,
            )
            for k in range(passes)
        ]
        cap_mod.assemble_capacity(
            scheme, tallies, p, estimator="tree", p_w=p,
            pairing=pairing, n_pixels=img.n_pixels, n_pairs=total,
        )

    def timed(fn):
        samples = []
        for _ in range(runs):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        return statistics.median(samples)

    t_aw = timed(run_aw)
    t_cap = timed(run_cap_est)
    t_ta = timed(run_tree_est)
    return {
        "scheme": scheme.name,
        "image_pixels": img.n_pixels,
        "passes": passes,
        "p": p,
        "runs": runs,
        "t_AW": t_aw,
        "t_CAP": t_cap,
        "t_TA": t_ta,
        "speedup_AW_over_CAP": t_aw / t_cap if t_cap > 0 else float("inf"),
        "speedup_AW_over_TA": t_aw / t_ta if t_ta > 0 else float("inf"),
    }
