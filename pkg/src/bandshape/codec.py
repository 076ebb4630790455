"""Lexicographic index <-> amplitude-sequence mapping over a trellis.

The same walk serves full and band trellises: at each node the child counts
tell how many sequences start with each candidate amplitude, so an index is
located by skipping whole subtrees in ascending amplitude order. All
arithmetic is integer-exact.

The shaping codebook uses the lexicographically first 2**k sequences, with
bit blocks read MSB-first so that integer order equals bit-string order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import (
    FramingError,
    IndexRangeError,
    InvalidSequenceError,
    OutOfCodebookError,
    ParameterError,
)
from .trellis import Trellis, max_shaping_bits


@dataclass(frozen=True)
class AmplitudeSequence:
    """A fixed-length amplitude tuple with its accumulated energy."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))

    @property
    def energy(self) -> int:
        return sum(v * v for v in self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _values(seq) -> tuple[int, ...]:
    if isinstance(seq, AmplitudeSequence):
        return seq.values
    return tuple(int(v) for v in seq)


def encode_index(trellis: Trellis, index: int) -> AmplitudeSequence:
    """Sequence at position `index` in lexicographic order (0-based)."""
    total = trellis.num_sequences
    if not 0 <= index < total:
        raise IndexRangeError(f"index {index} outside [0, {total})")
    amps = trellis.params.alphabet.amplitudes
    squares = trellis.params.alphabet.squares
    remainder = index
    energy = 0
    out = []
    for n in range(trellis.params.n_amplitudes):
        for a, s in zip(amps, squares):
            count = trellis.back_count(n + 1, energy + s)
            if count == 0:
                continue
            if remainder < count:
                out.append(a)
                energy += s
                break
            remainder -= count
        else:  # pragma: no cover - children always sum to the parent count
            raise AssertionError("count table inconsistent")
    return AmplitudeSequence(tuple(out))


def decode_index(trellis: Trellis, seq) -> int:
    """Inverse of encode_index: sums the counts of all smaller branches."""
    values = _values(seq)
    n_len = trellis.params.n_amplitudes
    if len(values) != n_len:
        raise InvalidSequenceError(f"expected {n_len} amplitudes, got {len(values)}")
    amps = trellis.params.alphabet.amplitudes
    squares = trellis.params.alphabet.squares
    index = 0
    energy = 0
    for n, v in enumerate(values):
        if v not in amps:
            raise InvalidSequenceError(f"amplitude {v} not in alphabet at position {n}")
        for a, s in zip(amps, squares):
            if a == v:
                break
            index += trellis.back_count(n + 1, energy + s)
        energy += v * v
        if not trellis.is_active(n + 1, energy):
            raise InvalidSequenceError(
                f"prefix {values[: n + 1]} leaves the trellis at column {n + 1}"
            )
    return index


def bits_to_index(bits: Sequence[int]) -> int:
    """MSB-first bit block to integer."""
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise ParameterError(f"bit values must be 0 or 1, got {b!r}")
        value = (value << 1) | b
    return value


def index_to_bits(index: int, k: int) -> tuple[int, ...]:
    """Integer to MSB-first bit block of width k."""
    if index < 0 or index >= (1 << k):
        raise ParameterError(f"index {index} does not fit in {k} bits")
    return tuple((index >> (k - 1 - i)) & 1 for i in range(k))


def shape(trellis: Trellis, bits: Sequence[int]) -> AmplitudeSequence:
    """Map one k-bit block to its amplitude sequence."""
    k = max_shaping_bits(trellis)
    bits = tuple(bits)
    if len(bits) != k:
        raise ParameterError(f"block must hold exactly k={k} bits, got {len(bits)}")
    return encode_index(trellis, bits_to_index(bits))


def deshape(trellis: Trellis, seq) -> tuple[int, ...]:
    """Map an amplitude sequence back to its k-bit block."""
    k = max_shaping_bits(trellis)
    index = decode_index(trellis, seq)
    if index >= (1 << k):
        raise OutOfCodebookError(
            f"sequence has index {index} >= 2**{k}; in the trellis but unused"
        )
    return index_to_bits(index, k)


def shape_stream(trellis: Trellis, bit_source: Iterable[int],
                 block_handler: Callable[[AmplitudeSequence], None]) -> int:
    """Partition a bit stream into k-bit blocks and shape each in order.

    Returns the number of blocks emitted. A trailing partial block raises
    FramingError; nothing is padded implicitly.
    """
    k = max_shaping_bits(trellis)
    buffer: list[int] = []
    blocks = 0
    for bit in bit_source:
        buffer.append(bit)
        if len(buffer) == k:
            block_handler(shape(trellis, buffer))
            blocks += 1
            buffer.clear()
    if buffer:
        raise FramingError(
            f"{len(buffer)} trailing bits do not fill a k={k} block"
        )
    return blocks
