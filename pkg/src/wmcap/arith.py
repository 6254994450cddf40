"""Adaptive binary arithmetic coder for the auxiliary bitstreams.

Order-0 adaptive model (counts start at 1/1) over a 32-bit integer range
coder with underflow handling.  Encoder and decoder update the model in
lockstep, so streams decode without a side table; output length tracks
n*H(ones/n) to within a few dozen bits.
"""

from __future__ import annotations

import numpy as np

_PRECISION = 32
_FULL = (1 << _PRECISION) - 1
_HALF = 1 << (_PRECISION - 1)
_QUARTER = 1 << (_PRECISION - 2)
_MAX_TOTAL = 1 << 16  # rescale model counts so ranges never collapse


class ArithDecodeError(ValueError):
    """Raised when a compressed stream is truncated or inconsistent."""


class _Model:
    __slots__ = ("c0", "c1")

    def __init__(self):
        self.c0 = 1
        self.c1 = 1

    def split(self, low: int, high: int) -> int:
        # boundary of the zero region inside [low, high]
        total = self.c0 + self.c1
        span = high - low + 1
        return low + span * self.c0 // total - 1

    def update(self, bit: int) -> None:
        if bit:
            self.c1 += 1
        else:
            self.c0 += 1
        if self.c0 + self.c1 >= _MAX_TOTAL:
            self.c0 = (self.c0 + 1) >> 1
            self.c1 = (self.c1 + 1) >> 1


def arith_code(bits) -> list[int]:
    """Compress a 0/1 sequence; returns the code bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    out: list[int] = []
    pending = 0

    def emit(bit: int):
        nonlocal pending
        out.append(bit)
        out.extend([bit ^ 1] * pending)
        pending = 0

    low, high = 0, _FULL
    model = _Model()
    for b in bits:
        b = int(b)
        mid = model.split(low, high)
        if b:
            low = mid + 1
        else:
            high = mid
        while True:
            if high < _HALF:
                emit(0)
            elif low >= _HALF:
                emit(1)
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                pending += 1
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1
        model.update(b)
    # two final bits pin the interval
    pending += 1
    if low < _QUARTER:
        emit(0)
    else:
        emit(1)
    return out


def arith_decode(code, n: int) -> list[int]:
    """Recover exactly `n` bits from a stream produced by arith_code.

    The decoder may read a handful of phantom zero bits past the end of a
    well-formed stream (the encoder's flushed tail); needing more than a
    word of them means the stream was cut short.
    """
    code = np.asarray(code, dtype=np.uint8)
    n_code = len(code)
    pos = 0

    def next_code_bit() -> int:
        nonlocal pos
        if pos > n_code + _PRECISION:
            raise ArithDecodeError(
                f"compressed stream truncated: ran out after {n_code} code bits"
            )
        bit = int(code[pos]) if pos < n_code else 0
        pos += 1
        return bit

    value = 0
    for _ in range(_PRECISION):
        value = (value << 1) | next_code_bit()
    low, high = 0, _FULL
    model = _Model()
    out: list[int] = []
    for _ in range(n):
        mid = model.split(low, high)
        if value > mid:
            bit = 1
            low = mid + 1
        else:
            bit = 0
            high = mid
        out.append(bit)
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
                value -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                low -= _QUARTER
                high -= _QUARTER
                value -= _QUARTER
            else:
                break
            low <<= 1
            high = (high << 1) | 1
            value = (value << 1) | next_code_bit()
        model.update(bit)
    return out
