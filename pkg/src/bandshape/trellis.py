"""Amplitude trellises with exact path counts.

A trellis node (n, e) stands for "n amplitudes consumed, accumulated energy
e". Paths from (0, 0) to the final column are exactly the amplitude
sequences whose total energy stays within the configured limit. Counts are
kept as Python integers so codebooks beyond 2**64 sequences stay exact.

Two constructions are provided: the full energy-sphere trellis, and a
band-restricted variant that keeps only a diagonal strip of nodes so that
admitted sequences accumulate energy near-linearly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    EmptyCodebookError,
    InfeasibleRateError,
    ParameterError,
    TrellisFormatError,
)

_MAGIC = "ESSTRELLIS v1"


@dataclass(frozen=True)
class Alphabet:
    """Ascending positive odd amplitude levels.

    Odd squares are congruent to 1 mod 8, which keeps every column of the
    trellis on an energy grid with spacing 8.
    """

    amplitudes: tuple[int, ...]

    def __post_init__(self):
        amps = tuple(int(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if not amps:
            raise ParameterError("alphabet must be nonempty")
        if any(a <= 0 or a % 2 == 0 for a in amps):
            raise ParameterError(f"amplitudes must be positive odd integers: {amps}")
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ParameterError(f"amplitudes must be strictly ascending: {amps}")

    @property
    def squares(self) -> tuple[int, ...]:
        return tuple(a * a for a in self.amplitudes)

    def __len__(self):
        return len(self.amplitudes)


@dataclass(frozen=True)
class TrellisParams:
    """Sequence length, alphabet, and maximum total energy.

    An off-grid e_max is rounded down to the largest value with
    (e_max - n) divisible by 8; callers that care (the CLI) compare against
    what they asked for and warn.
    """

    n_amplitudes: int
    alphabet: Alphabet
    e_max: int

    def __post_init__(self):
        n = int(self.n_amplitudes)
        e = int(self.e_max)
        object.__setattr__(self, "n_amplitudes", n)
        if n < 1:
            raise ParameterError("n_amplitudes must be >= 1")
        min_energy = n * self.alphabet.squares[0]
        if e < min_energy:
            raise ParameterError(
                f"e_max={e} cannot fit the minimum-energy sequence ({min_energy})"
            )
        e -= (e - n) % 8
        if e < min_energy:
            raise ParameterError(
                f"e_max={self.e_max} snaps to {e}, below the minimum energy {min_energy}"
            )
        object.__setattr__(self, "e_max", e)

    @property
    def num_final_levels(self) -> int:
        """Final-column level count of the full trellis, (e_max - n)/8 + 1."""
        return (self.e_max - self.n_amplitudes) // 8 + 1


@dataclass(frozen=True)
class BandParams:
    """Band geometry: window height in energy levels, and how many final
    transitions ride the full-trellis top."""

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1:
            raise ParameterError("band height must be >= 1")
        if self.width < 0:
            raise ParameterError("band width must be >= 0")


class Trellis:
    """Immutable node set with backward and forward path counts.

    back_count(n, e) is the number of ways to reach the final column from
    (n, e); fwd_count(n, e) the number of ways to arrive at (n, e) from the
    origin. Inactive nodes report 0 for both.
    """

    def __init__(self, params: TrellisParams, band: BandParams | None,
                 back: list[dict[int, int]], fwd: list[dict[int, int]]):
        self.params = params
        self.band = band
        self._back = tuple(back)
        self._fwd = tuple(fwd)
        self._levels = tuple(tuple(sorted(col)) for col in back)

    def levels(self, n: int) -> tuple[int, ...]:
        return self._levels[n]

    def back_count(self, n: int, e: int) -> int:
        return self._back[n].get(e, 0)

    def fwd_count(self, n: int, e: int) -> int:
        return self._fwd[n].get(e, 0)

    def is_active(self, n: int, e: int) -> bool:
        return e in self._back[n]

    @property
    def num_sequences(self) -> int:
        return self._back[0][0]

    def __repr__(self):
        p = self.params
        band = f", band=({self.band.height},{self.band.width})" if self.band else ""
        return (f"Trellis(n={p.n_amplitudes}, alphabet={p.alphabet.amplitudes}, "
                f"e_max={p.e_max}{band}, sequences={self.num_sequences})")


def _band_window(params: TrellisParams, band: BandParams, col: int) -> tuple[int, int]:
    """Active energy window [lo, hi] of the band at a column.

    The upper boundary follows the full-trellis top over the last `width`
    columns; elsewhere it is a straight ramp of slope e_max/n snapped down
    onto the column's mod-8 grid. The lower boundary trails it by
    8*(height-1), floored at the all-ones energy.
    """
    n_len, e_max = params.n_amplitudes, params.e_max
    if col == 0:
        return 0, 0
    if col >= n_len - band.width:
        hi = min(col * params.alphabet.squares[-1], e_max - (n_len - col))
    else:
        cap = max(col, (col * e_max) // n_len)
        hi = cap - ((cap - col) % 8)
    return max(col, hi - 8 * (band.height - 1)), hi


def _reachable_columns(params: TrellisParams, band: BandParams | None):
    """Forward-reachable energy sets per column, restricted to the band and
    to nodes that can still be completed within e_max."""
    n_len, e_max = params.n_amplitudes, params.e_max
    squares = params.alphabet.squares
    min_sq = squares[0]
    windows = None
    if band is not None:
        if band.width > n_len:
            raise ParameterError(f"band width {band.width} exceeds n={n_len}")
        windows = [_band_window(params, band, n) for n in range(n_len + 1)]
    cols: list[set[int]] = [set() for _ in range(n_len + 1)]
    cols[0].add(0)
    for n in range(n_len):
        tail = (n_len - n - 1) * min_sq
        nxt = cols[n + 1]
        window = windows[n + 1] if windows else None
        for e in cols[n]:
            for s in squares:
                child = e + s
                if child + tail > e_max:
                    break
                if window and not window[0] <= child <= window[1]:
                    continue
                nxt.add(child)
        if not nxt:
            raise EmptyCodebookError(
                f"no admissible node at column {n + 1}; band too narrow"
            )
    return cols


def _backward_counts(params: TrellisParams, cols) -> list[dict[int, int]]:
    """Paths-to-final per node; nodes with no completion are dropped."""
    n_len = params.n_amplitudes
    squares = params.alphabet.squares
    back: list[dict[int, int]] = [dict() for _ in range(n_len + 1)]
    back[n_len] = {e: 1 for e in sorted(cols[n_len])}
    for n in range(n_len - 1, -1, -1):
        nxt = back[n + 1]
        cur = back[n]
        for e in sorted(cols[n]):
            c = 0
            for s in squares:
                c += nxt.get(e + s, 0)
            if c:
                cur[e] = c
    return back


def _forward_counts(params: TrellisParams, back) -> list[dict[int, int]]:
    n_len = params.n_amplitudes
    squares = params.alphabet.squares
    fwd: list[dict[int, int]] = [dict() for _ in range(n_len + 1)]
    fwd[0][0] = 1
    for n in range(n_len):
        alive = back[n + 1]
        nxt = fwd[n + 1]
        for e, paths in fwd[n].items():
            for s in squares:
                child = e + s
                if child in alive:
                    nxt[child] = nxt.get(child, 0) + paths
    return fwd


def _build(params: TrellisParams, band: BandParams | None) -> Trellis:
    cols = _reachable_columns(params, band)
    back = _backward_counts(params, cols)
    if 0 not in back[0]:
        raise EmptyCodebookError("band admits no complete sequence")
    fwd = _forward_counts(params, back)
    # backward pruning cannot orphan a survivor, so the two node sets agree
    assert all(set(fwd[n]) == set(back[n]) for n in range(params.n_amplitudes + 1))
    return Trellis(params, band, back, fwd)


def build_full_trellis(params: TrellisParams) -> Trellis:
    """Trellis over every sequence with total energy <= e_max."""
    return _build(params, None)


def build_band_trellis(params: TrellisParams, band: BandParams) -> Trellis:
    """Band-restricted trellis; raises EmptyCodebookError if nothing survives."""
    return _build(params, band)


def num_sequences(trellis: Trellis) -> int:
    """Codebook size: the path count stored at the origin node."""
    return trellis.num_sequences


def max_shaping_bits(trellis: Trellis) -> int:
    """Largest k with 2**k <= num_sequences."""
    return trellis.num_sequences.bit_length() - 1


def _count_only(params: TrellisParams, band: BandParams | None) -> int:
    """Sequence count without building forward counts; 0 for an empty band."""
    try:
        cols = _reachable_columns(params, band)
    except EmptyCodebookError:
        return 0
    return _backward_counts(params, cols)[0].get(0, 0)


def min_emax_for_bits(n_amplitudes: int, alphabet: Alphabet, k: int,
                      band: BandParams | None = None,
                      scan_from: int | None = None) -> int:
    """Smallest grid e_max whose trellis holds at least 2**k sequences.

    The full-trellis count grows monotonically with e_max, so that case is a
    binary search. A band trellis shifts its whole window as e_max grows and
    its count is not monotone, so the band case scans the grid from the
    bottom and returns the first hit. scan_from, when given, must be a known
    lower bound on the answer (the full-trellis minimum always is, since a
    band never holds more sequences than its sphere).
    """
    if k < 0:
        raise ParameterError("k must be >= 0")
    squares = Alphabet(alphabet.amplitudes).squares
    lo = n_amplitudes * squares[0]
    hi = n_amplitudes * squares[-1]
    target = 1 << k
    if len(alphabet) ** n_amplitudes < target:
        raise InfeasibleRateError(
            f"k={k} exceeds the {len(alphabet)}-ary cube of length {n_amplitudes}"
        )
    if band is None:
        # invariant: count(hi) = |alphabet|**n >= target
        lo_idx, hi_idx = 0, (hi - lo) // 8
        while lo_idx < hi_idx:
            mid = (lo_idx + hi_idx) // 2
            e = lo + 8 * mid
            if _count_only(TrellisParams(n_amplitudes, alphabet, e), None) >= target:
                hi_idx = mid
            else:
                lo_idx = mid + 1
        return lo + 8 * lo_idx
    if scan_from is not None:
        lo = max(lo, scan_from)
    for e in range(lo, hi + 1, 8):
        if _count_only(TrellisParams(n_amplitudes, alphabet, e), band) >= target:
            return e
    raise InfeasibleRateError(
        f"band h={band.height}, w={band.width} never reaches k={k}"
    )


def serialize(trellis: Trellis) -> str:
    """Versioned line format: header, params, one `n e T F` line per node,
    and an END line carrying the total count as a checksum."""
    p = trellis.params
    band = trellis.band
    alphabet = ",".join(str(a) for a in p.alphabet.amplitudes)
    band_txt = f"{band.height},{band.width}" if band else "none"
    lines = [
        _MAGIC,
        f"N={p.n_amplitudes} ALPHABET={alphabet} EMAX={p.e_max} BAND={band_txt}",
    ]
    for n in range(p.n_amplitudes + 1):
        for e in trellis.levels(n):
            lines.append(f"{n} {e} {trellis.back_count(n, e)} {trellis.fwd_count(n, e)}")
    lines.append(f"END {trellis.num_sequences}")
    return "\n".join(lines) + "\n"


def _parse_params_line(line: str):
    fields = {}
    for token in line.split():
        key, _, value = token.partition("=")
        if not value:
            raise TrellisFormatError(f"bad parameter token {token!r}")
        fields[key] = value
    try:
        n = int(fields["N"])
        alphabet = Alphabet(tuple(int(a) for a in fields["ALPHABET"].split(",")))
        e_max = int(fields["EMAX"])
        band_txt = fields["BAND"]
    except (KeyError, ValueError) as exc:
        raise TrellisFormatError(f"bad parameter line: {line!r}") from exc
    band = None
    if band_txt != "none":
        try:
            h, w = (int(x) for x in band_txt.split(","))
            band = BandParams(h, w)
        except (ValueError, ParameterError) as exc:
            raise TrellisFormatError(f"bad band spec {band_txt!r}") from exc
    try:
        params = TrellisParams(n, alphabet, e_max)
    except ParameterError as exc:
        raise TrellisFormatError(str(exc)) from exc
    if params.e_max != e_max:
        raise TrellisFormatError(f"EMAX={e_max} is not on the energy grid")
    return params, band


def deserialize(data: str | bytes) -> Trellis:
    """Parse and fully verify a serialized trellis.

    Verification recomputes both count recurrences and the conservation sum,
    so a tampered table fails even when the END checksum was fixed up.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="strict")
    lines = data.splitlines()
    if not lines or lines[0] != _MAGIC:
        got = lines[0] if lines else "<empty>"
        raise TrellisFormatError(f"unsupported header {got!r}, expected {_MAGIC!r}")
    if len(lines) < 3:
        raise TrellisFormatError("truncated stream")
    params, band = _parse_params_line(lines[1])
    n_len = params.n_amplitudes
    back: list[dict[int, int]] = [dict() for _ in range(n_len + 1)]
    fwd: list[dict[int, int]] = [dict() for _ in range(n_len + 1)]
    checksum = None
    for line in lines[2:]:
        if line.startswith("END"):
            try:
                checksum = int(line.split()[1])
            except (IndexError, ValueError) as exc:
                raise TrellisFormatError(f"bad END line: {line!r}") from exc
            break
        parts = line.split()
        if len(parts) != 4:
            raise TrellisFormatError(f"bad node line: {line!r}")
        try:
            n, e, t_cnt, f_cnt = (int(x) for x in parts)
        except ValueError as exc:
            raise TrellisFormatError(f"malformed counts in line: {line!r}") from exc
        if not 0 <= n <= n_len or e < 0 or t_cnt < 1 or f_cnt < 1:
            raise TrellisFormatError(f"node out of range: {line!r}")
        if e in back[n]:
            raise TrellisFormatError(f"duplicate node ({n}, {e})")
        back[n][e] = t_cnt
        fwd[n][e] = f_cnt
    if checksum is None:
        raise TrellisFormatError("truncated stream: no END line")
    if back[0].get(0) is None or fwd[0] != {0: 1}:
        raise TrellisFormatError("origin node (0,0) missing or malformed")
    if checksum != back[0][0]:
        raise TrellisFormatError(
            f"checksum failure: END says {checksum}, table says {back[0][0]}"
        )
    squares = params.alphabet.squares
    for e, t_cnt in back[n_len].items():
        if t_cnt != 1:
            raise TrellisFormatError(f"final node ({n_len}, {e}) must count 1")
    for n in range(n_len):
        for e, t_cnt in back[n].items():
            if t_cnt != sum(back[n + 1].get(e + s, 0) for s in squares):
                raise TrellisFormatError(f"count recurrence broken at ({n}, {e})")
        for e, f_cnt in fwd[n + 1].items():
            if f_cnt != sum(fwd[n].get(e - s, 0) for s in squares):
                raise TrellisFormatError(f"count recurrence broken at ({n + 1}, {e})")
    if sum(fwd[n_len].values()) != back[0][0]:
        raise TrellisFormatError("conservation check failed")
    return Trellis(params, band, back, fwd)


def save_trellis(trellis: Trellis, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(trellis))


def load_trellis(path) -> Trellis:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())
