"""Pixel-pair watermarking schemes: embeddability, transforms and inverses.

Each scheme is described per pixel pair (x, y) by four things: whether the
pair can carry a data bit, the transformed pair for bit 0 / bit 1 / no bit,
the flag bit it contributes to the auxiliary stream (if any), and its
location-map bit (if the scheme keeps a location map).  All of it is
precomputed over the full 256x256 domain as flat lookup tables indexed by
``x * 256 + y``, which is also what makes the statistical estimators cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imaging import MAX_LEVEL

GRID = MAX_LEVEL + 1
N_CELLS = GRID * GRID

SCHEME_NAMES = ("tian", "coltuc")

# values of the per-pair role grid
ROLE_EMBED_EXPAND = 1   # tian: difference expansion, location bit 1
ROLE_EMBED_CHANGE = 2   # tian: LSB substitution on the difference, flagged
ROLE_EMBED_TRANSFORM = 3  # coltuc: contrast-mapped pair, marker LSB(x')=1
ROLE_EMBED_ODD = 4      # coltuc: odd-odd pair embedded in place
ROLE_FLAGGED = 5        # no payload; original LSB saved as a flag bit
ROLE_INERT = 6          # no payload, untouched, no auxiliary data


def pack(x, y):
    """Flat grid index of the pair (x, y)."""
    return x * GRID + y


def unpack(idx):
    return idx // GRID, idx % GRID


@dataclass(frozen=True)
class SchemeDescriptor:
    name: str
    has_location_map: bool
    flag_stream_compressed: bool
    theta_h: int = MAX_LEVEL


@dataclass(frozen=True)
class PairClassification:
    embeddable: bool
    flag: int | None
    loc: int | None


@dataclass(frozen=True)
class PairChildren:
    child0: tuple[int, int] | None
    child1: tuple[int, int] | None
    childphi: tuple[int, int] | None
    embeddable: bool


@dataclass(frozen=True)
class Scheme:
    """A concrete scheme with its full-domain lookup tables.

    emb:      bool,  pair carries one payload bit
    role:     uint8, one of the ROLE_* codes
    flag:     int8,  flag bit (0/1) or -1 when the pair contributes none
    loc:      int8,  location-map bit (0/1) or -1 when the scheme has none
    child0/1: int32, flat index of the transformed pair for bit 0/1 (embeddable pairs)
    childphi: int32, flat index of the no-bit transition (non-embeddable pairs)
    """

    descriptor: SchemeDescriptor
    emb: np.ndarray = field(repr=False)
    role: np.ndarray = field(repr=False)
    flag: np.ndarray = field(repr=False)
    loc: np.ndarray = field(repr=False)
    child0: np.ndarray = field(repr=False)
    child1: np.ndarray = field(repr=False)
    childphi: np.ndarray = field(repr=False)

    @property
    def name(self) -> str:
        return self.descriptor.name

    @property
    def has_location_map(self) -> bool:
        return self.descriptor.has_location_map

    @property
    def flag_stream_compressed(self) -> bool:
        return self.descriptor.flag_stream_compressed

    # -- per-pair views used by the reference embedder and the tests --

    def classify(self, x: int, y: int) -> PairClassification:
        i = pack(x, y)
        f = int(self.flag[i])
        l = int(self.loc[i])
        return PairClassification(
            embeddable=bool(self.emb[i]),
            flag=None if f < 0 else f,
            loc=None if l < 0 else l,
        )

    def children(self, x: int, y: int) -> PairChildren:
        i = pack(x, y)
        if self.emb[i]:
            return PairChildren(
                child0=unpack(int(self.child0[i])),
                child1=unpack(int(self.child1[i])),
                childphi=None,
                embeddable=True,
            )
        return PairChildren(None, None, unpack(int(self.childphi[i])), embeddable=False)

    def child(self, x: int, y: int, bit) -> tuple[int, int]:
        i = pack(x, y)
        if self.emb[i]:
            if bit not in (0, 1):
                raise ValueError("embeddable pair needs a 0/1 bit")
            table = self.child1 if bit else self.child0
            return unpack(int(table[i]))
        return unpack(int(self.childphi[i]))

    def invert(self, x: int, y: int, loc_bit=None, flag_source=None):
        """Recover (original pair, extracted bit) from a transformed pair.

        ``flag_source`` must yield the flag bits in the order the encoder
        emitted them; ``loc_bit`` is the pair's location-map bit (tian only).
        The extracted bit is None when the pair carried no payload.
        """
        if self.name == "coltuc":
            return _coltuc_invert(self, x, y, flag_source)
        return _tian_invert(self, x, y, loc_bit, flag_source)

    # -- region grids for the estimators --

    def size_grid(self, kind: str) -> np.ndarray:
        """Per-pair bit count contributed to stream `kind` in one pass (0/1)."""
        if kind == "I":
            return self.emb.astype(np.float64)
        if kind == "F":
            return (self.flag >= 0).astype(np.float64)
        if kind == "L":
            if not self.has_location_map:
                return np.zeros(N_CELLS)
            return np.ones(N_CELLS)
        raise ValueError(f"unknown stream kind {kind!r}")

    def ones_grid(self, kind: str) -> np.ndarray:
        """Per-pair bit value contributed to stream `kind` (1 where the bit is 1)."""
        if kind == "F":
            return (self.flag == 1).astype(np.float64)
        if kind == "L":
            return (self.loc == 1).astype(np.float64)
        raise ValueError(f"no ones grid for stream kind {kind!r}")

    def base_grid(self, kind: str) -> np.ndarray:
        """Stage-0 table for an estimator kind: I, F, ones_F or ones_L."""
        if kind in ("I", "F"):
            return self.size_grid(kind)
        if kind == "ones_F":
            return self.ones_grid("F")
        if kind == "ones_L":
            return self.ones_grid("L")
        raise ValueError(f"unknown estimator kind {kind!r}")

    def mask_image(self, region: str) -> np.ndarray:
        """256x256 uint8 membership mask (255 inside) for visual inspection."""
        if region == "D_E":
            m = self.emb
        elif region == "D_F":
            m = self.flag >= 0
        elif region == "D1_F":
            m = self.flag == 1
        elif region == "D1_L":
            m = self.loc == 1
        else:
            raise ValueError(f"unknown region {region!r}")
        return (m.reshape(GRID, GRID) * np.uint8(255)).astype(np.uint8)


_XX, _YY = np.meshgrid(np.arange(GRID, dtype=np.int64), np.arange(GRID, dtype=np.int64), indexing="ij")
_X = _XX.ravel()
_Y = _YY.ravel()


def _in_rcm_domain(x, y):
    # 0 <= 2x - y <= 255 and 0 <= 2y - x <= 255
    a = 2 * x - y
    b = 2 * y - x
    return (a >= 0) & (a <= MAX_LEVEL) & (b >= 0) & (b <= MAX_LEVEL)


def _build_coltuc(theta_h: int) -> Scheme:
    x, y = _X, _Y
    in_dc = _in_rcm_domain(x, y)
    odd_odd = ((x & 1) == 1) & ((y & 1) == 1)

    # Odd-odd in-domain pairs are embedded in place (LSB(x)<-0, LSB(y)<-bit).
    # The decoder recognises them by re-oddifying, so their marked images must
    # never collide with the image of a flagged pair: that forces the three
    # even-LSB neighbours of the pair to sit inside the domain too, otherwise
    # the pair is demoted to flagged.
    odd_safe = (
        odd_odd
        & in_dc
        & _in_rcm_domain(x - 1, y - 1)
        & _in_rcm_domain(x - 1, y)
        & _in_rcm_domain(x, y - 1)
    )

    role = np.full(N_CELLS, ROLE_FLAGGED, dtype=np.uint8)
    role[in_dc & ~odd_odd] = ROLE_EMBED_TRANSFORM
    role[odd_safe] = ROLE_EMBED_ODD
    emb = (role == ROLE_EMBED_TRANSFORM) | (role == ROLE_EMBED_ODD)

    flag = np.where(emb, -1, (x & 1)).astype(np.int8)
    loc = np.full(N_CELLS, -1, dtype=np.int8)

    child0 = np.zeros(N_CELLS, dtype=np.int32)
    child1 = np.zeros(N_CELLS, dtype=np.int32)
    tr = role == ROLE_EMBED_TRANSFORM
    xt = (2 * x - y) | 1
    yt = (2 * y - x) & ~1
    child0[tr] = pack(xt, yt)[tr]
    child1[tr] = pack(xt, yt | 1)[tr]
    od = role == ROLE_EMBED_ODD
    child0[od] = pack(x - 1, y - 1)[od]
    child1[od] = pack(x - 1, y)[od]

    childphi = pack(x & ~1, y).astype(np.int32)
    childphi[emb] = 0

    desc = SchemeDescriptor("coltuc", has_location_map=False, flag_stream_compressed=False, theta_h=theta_h)
    return Scheme(desc, emb, role, flag, loc, child0, child1, childphi)


def _build_tian(theta_h: int) -> Scheme:
    x, y = _X, _Y
    l = (x + y) // 2
    h = x - y
    bound = np.minimum(2 * (MAX_LEVEL - l), 2 * l + 1)

    expandable = (np.abs(2 * h) <= bound) & (np.abs(2 * h + 1) <= bound)
    h_keep = 2 * (h // 2)  # difference with its LSB cleared (floor halving)
    changeable = (np.abs(h_keep) <= bound) & (np.abs(h_keep + 1) <= bound)
    emb = changeable & (np.abs(h) < theta_h)

    role = np.full(N_CELLS, ROLE_INERT, dtype=np.uint8)
    role[changeable & ~emb] = ROLE_FLAGGED  # empty at theta_h = 255
    role[emb & ~expandable] = ROLE_EMBED_CHANGE
    role[emb & expandable] = ROLE_EMBED_EXPAND

    # a pair is flagged xor expanded: everything changeable that is not expanded
    in_flag = changeable & ~(expandable & emb)
    flag = np.where(in_flag, (h & 1), -1).astype(np.int8)
    loc = (emb & expandable).astype(np.int8)  # 0/1 for every pair

    def pair_from_diff(hp):
        xs = l + (hp + 1) // 2
        ys = l - hp // 2
        return pack(xs, ys)

    child0 = np.zeros(N_CELLS, dtype=np.int32)
    child1 = np.zeros(N_CELLS, dtype=np.int32)
    for b, table in ((0, child0), (1, child1)):
        hp = np.where(expandable, 2 * h + b, h_keep + b)
        idx = pair_from_diff(hp)
        table[emb] = idx[emb]

    childphi = np.arange(N_CELLS, dtype=np.int32)  # untouched pairs map to themselves
    childphi[emb] = 0

    desc = SchemeDescriptor("tian", has_location_map=True, flag_stream_compressed=True, theta_h=theta_h)
    return Scheme(desc, emb, role, flag, loc, child0, child1, childphi)


def _coltuc_invert(scheme, x, y, flag_source):
    if x & 1:
        # transformed pair: marker LSB(x')=1, payload in LSB(y')
        bit = y & 1
        xt, yt = x & ~1, y & ~1
        ox = (2 * xt + yt + 2) // 3
        oy = (xt + 2 * yt + 2) // 3
        return (ox, oy), bit
    u = pack(x | 1, y | 1)
    if scheme.role[u] == ROLE_EMBED_ODD:
        return (x | 1, y | 1), y & 1
    if flag_source is None:
        raise ValueError("flag bit needed to invert a non-embedded pair")
    f = next(flag_source, None)
    if f is None:
        raise ValueError("flag stream exhausted while undoing a pair")
    return (x | f, y), None


def _tian_invert(scheme, x, y, loc_bit, flag_source):
    if loc_bit is None:
        raise ValueError("tian inversion needs the pair's location-map bit")
    l = (x + y) // 2
    h = x - y
    if loc_bit == 1:
        orig_h = h // 2
        bit = h & 1
    else:
        # changeability is invariant under both the LSB substitution and the
        # identity, so the grid role of the received pair decides it
        changeable = scheme.role[pack(x, y)] != ROLE_INERT
        if not changeable:
            return (x, y), None
        if flag_source is None:
            raise ValueError("flag bit needed to invert a changed pair")
        f = next(flag_source, None)
        if f is None:
            raise ValueError("flag stream exhausted while undoing a pair")
        orig_h = 2 * (h // 2) + f
        if abs(orig_h) >= scheme.descriptor.theta_h:
            return (x, y), None  # was left untouched, flag just restates its LSB
        bit = h & 1
    ox = l + (orig_h + 1) // 2
    oy = l - orig_h // 2
    return (ox, oy), bit


_CACHE: dict[tuple[str, int], Scheme] = {}


def get_scheme(name: str, theta_h: int = MAX_LEVEL) -> Scheme:
    """Build (or fetch) the lookup tables for a scheme by name."""
    if name not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {name!r}: expected one of {SCHEME_NAMES}")
    if not 1 <= theta_h <= MAX_LEVEL:
        raise ValueError("theta_h must be in [1, 255]")
    key = (name, theta_h)
    if key not in _CACHE:
        _CACHE[key] = _build_tian(theta_h) if name == "tian" else _build_coltuc(theta_h)
    return _CACHE[key]
