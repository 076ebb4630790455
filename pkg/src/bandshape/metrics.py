"""Shaping-ensemble statistics: amplitude distributions, energy moments,
per-sequence energy variability, and dB comparisons between codebooks.

Exact metrics run over all sequences of a trellis with uniform sequence
weighting; the occurrence count of amplitude a feeding position n is
fwd(n, e) * back(n+1, e + a^2) summed over active nodes. Accumulation stays
in integer/rational arithmetic until the final float conversion so that
large-count trellises do not drift.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .codec import encode_index
from .errors import InfeasibleRateError, ParameterError
from .trellis import (
    Alphabet,
    BandParams,
    Trellis,
    TrellisParams,
    build_band_trellis,
    build_full_trellis,
    max_shaping_bits,
    min_emax_for_bits,
)


@dataclass(frozen=True)
class ShapingMetrics:
    """Per-symbol distribution and pooled moments of an ensemble."""

    alphabet: tuple[int, ...]
    p_amp: tuple[float, ...]
    e2: float
    e4: float
    var_e: float
    kurtosis: float


@dataclass(frozen=True)
class SampledMetrics(ShapingMetrics):
    """Monte-Carlo estimate over the used 2**k index subset."""

    num_samples: int
    seed: int
    exhaustive: bool
    se_e2: float


@dataclass(frozen=True)
class SequenceEnergyStats:
    """Population mean/variance of squared amplitudes of one sequence."""

    mean_e: float
    var_e: float
    profile: tuple[int, ...]


def _metrics_from_occurrences(alphabet, occ, total) -> tuple:
    p = [Fraction(occ[a], total) for a in alphabet]
    e2 = sum(pa * a * a for pa, a in zip(p, alphabet))
    e4 = sum(pa * a**4 for pa, a in zip(p, alphabet))
    var_e = e4 - e2 * e2
    kurtosis = e4 / (e2 * e2)
    return (
        tuple(float(x) for x in p),
        float(e2),
        float(e4),
        float(var_e),
        float(kurtosis),
    )


def exact_metrics(trellis: Trellis) -> ShapingMetrics:
    """Exact statistics over every sequence in the trellis."""
    amps = trellis.params.alphabet.amplitudes
    squares = trellis.params.alphabet.squares
    n_len = trellis.params.n_amplitudes
    occ = {a: 0 for a in amps}
    for n in range(n_len):
        for e in trellis.levels(n):
            paths_in = trellis.fwd_count(n, e)
            for a, s in zip(amps, squares):
                paths_out = trellis.back_count(n + 1, e + s)
                if paths_out:
                    occ[a] += paths_in * paths_out
    total = n_len * trellis.num_sequences
    p, e2, e4, var_e, kurtosis = _metrics_from_occurrences(amps, occ, total)
    return ShapingMetrics(amps, p, e2, e4, var_e, kurtosis)


def sampled_metrics(trellis: Trellis, k: int, num_samples: int, seed: int,
                    exhaustive: bool = False) -> SampledMetrics:
    """Statistics of the used subset (indices below 2**k).

    Monte Carlo with a seeded uniform index stream, or, with
    exhaustive=True, a sweep of all 2**k indices (num_samples is ignored).
    """
    k_max = max_shaping_bits(trellis)
    if k > k_max:
        raise ParameterError(f"k={k} exceeds the trellis capacity {k_max}")
    if not exhaustive and num_samples < 1:
        raise ParameterError("num_samples must be >= 1")
    amps = trellis.params.alphabet.amplitudes
    n_len = trellis.params.n_amplitudes
    if exhaustive:
        indices = range(1 << k)
    else:
        rng = random.Random(seed)
        if k == 0:
            indices = [0] * num_samples
        else:
            indices = (rng.getrandbits(k) for _ in range(num_samples))
    occ = {a: 0 for a in amps}
    count = 0
    sum_e2 = 0.0
    sum_e2_sq = 0.0
    for i in indices:
        values = encode_index(trellis, i).values
        for a in amps:
            occ[a] += values.count(a)
        seq_e2 = sum(v * v for v in values) / n_len
        sum_e2 += seq_e2
        sum_e2_sq += seq_e2 * seq_e2
        count += 1
    p, e2, e4, var_e, kurtosis = _metrics_from_occurrences(
        amps, occ, count * n_len
    )
    if count > 1:
        sample_var = max(0.0, (sum_e2_sq - sum_e2**2 / count) / (count - 1))
        se_e2 = math.sqrt(sample_var / count)
    else:
        se_e2 = float("inf")
    return SampledMetrics(amps, p, e2, e4, var_e, kurtosis,
                          num_samples=count, seed=seed, exhaustive=exhaustive,
                          se_e2=se_e2)


def sequence_energy_stats(seq) -> SequenceEnergyStats:
    """Population (divide-by-n) statistics of one sequence's squared values."""
    values = tuple(int(v) for v in seq)
    if not values:
        raise ParameterError("sequence must be nonempty")
    sq = [v * v for v in values]
    n = len(sq)
    mean = sum(sq) / n
    var = sum((x - mean) ** 2 for x in sq) / n
    profile = [0]
    for x in sq:
        profile.append(profile[-1] + x)
    return SequenceEnergyStats(mean, var, tuple(profile))


def windowed_energy_deviation(seq, window_len: int):
    """Sliding-window (stride 1) energy sums and their population deviation."""
    values = tuple(int(v) for v in seq)
    if not 1 <= window_len <= len(values):
        raise ParameterError(
            f"window_len must be in [1, {len(values)}], got {window_len}"
        )
    sq = [v * v for v in values]
    sums = []
    acc = sum(sq[:window_len])
    sums.append(acc)
    for i in range(window_len, len(sq)):
        acc += sq[i] - sq[i - window_len]
        sums.append(acc)
    mean = sum(sums) / len(sums)
    dev = math.sqrt(sum((s - mean) ** 2 for s in sums) / len(sums))
    return tuple(sums), dev


def compare_db(x, y) -> float:
    """10*log10(x/y); both arguments must be positive."""
    if x <= 0 or y <= 0:
        raise ParameterError(f"dB comparison needs positive values, got {x}, {y}")
    return 10.0 * math.log10(x / y)


def compare_trellises(a: Trellis, b: Trellis) -> dict:
    """Side-by-side exact metrics with dB deltas (b relative to a)."""
    if a.params.n_amplitudes != b.params.n_amplitudes:
        raise ParameterError("trellises differ in sequence length")
    if a.params.alphabet != b.params.alphabet:
        raise ParameterError("trellises differ in alphabet")
    ma, mb = exact_metrics(a), exact_metrics(b)
    same_var = ma.var_e == mb.var_e
    return {
        "n": a.params.n_amplitudes,
        "alphabet": a.params.alphabet.amplitudes,
        "e2_a": ma.e2,
        "e2_b": mb.e2,
        "var_a": ma.var_e,
        "var_b": mb.var_e,
        "kurtosis_a": ma.kurtosis,
        "kurtosis_b": mb.kurtosis,
        "delta_e2_db": compare_db(mb.e2, ma.e2),
        "delta_var_db": 0.0 if same_var else compare_db(mb.var_e, ma.var_e),
        "kurtosis_ratio": mb.kurtosis / ma.kurtosis,
    }


@dataclass(frozen=True)
class BandOperatingPoint:
    """Result of a band-geometry search against trade-off targets."""

    band: BandParams
    e_max: int
    ess_e_max: int
    ess: ShapingMetrics
    banded: ShapingMetrics
    delta_e2_db: float
    delta_var_db: float
    kurtosis_ratio: float
    score: float


def find_band_operating_point(n_amplitudes: int, alphabet: Alphabet, k: int,
                              target_e2_db: float = 0.44,
                              target_var_db: float = -0.67,
                              tol_e2_db: float = 0.15,
                              tol_var_db: float = 0.20,
                              heights=range(2, 17),
                              widths=range(0, 3)) -> BandOperatingPoint:
    """Search band geometries holding 2**k sequences for the one whose
    energy/variance trade-off against the full-sphere codebook lands closest
    to the requested dB targets, each axis scaled by its tolerance.
    Candidates with kurtosis at or above the full-sphere value are rejected
    outright.
    """
    ess_e_max = min_emax_for_bits(n_amplitudes, alphabet, k)
    ess = exact_metrics(
        build_full_trellis(TrellisParams(n_amplitudes, alphabet, ess_e_max))
    )
    best = None
    for h in heights:
        for w in widths:
            band = BandParams(h, w)
            try:
                e_max = min_emax_for_bits(
                    n_amplitudes, alphabet, k, band=band, scan_from=ess_e_max
                )
            except InfeasibleRateError:
                continue
            banded = exact_metrics(
                build_band_trellis(TrellisParams(n_amplitudes, alphabet, e_max), band)
            )
            if banded.kurtosis >= ess.kurtosis or banded.var_e == 0.0:
                continue
            delta_e2 = compare_db(banded.e2, ess.e2)
            delta_var = compare_db(banded.var_e, ess.var_e)
            score = math.hypot((delta_e2 - target_e2_db) / tol_e2_db,
                               (delta_var - target_var_db) / tol_var_db)
            if best is None or score < best.score:
                best = BandOperatingPoint(
                    band, e_max, ess_e_max, ess, banded,
                    delta_e2, delta_var, banded.kurtosis / ess.kurtosis, score,
                )
    if best is None:
        raise InfeasibleRateError(
            f"no band in the search grid reaches k={k} with reduced kurtosis"
        )
    return best
