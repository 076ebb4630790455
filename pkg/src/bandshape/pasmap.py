"""Amplitude-to-symbol mapping: sign application, QAM assembly, power
normalization, and symbol file formats.

Sign bits here come from a seeded uniform generator; in a full transmitter
they would be FEC parity. Normalization always uses the measured stream
power so differently shaped codebooks launch at identical average power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_MAGIC = b"SYMF64v1"


@dataclass(frozen=True)
class SymbolStream:
    """Unit-power complex symbols plus the power measured before scaling."""

    symbols: np.ndarray
    avg_power: float


def map_ask(amplitudes, sign_bits) -> np.ndarray:
    """Apply sign bits to amplitudes: s = (2b - 1) * a."""
    amps = np.asarray(amplitudes, dtype=float)
    bits = np.asarray(sign_bits)
    if amps.shape != bits.shape:
        raise ParameterError(
            f"length mismatch: {amps.shape} amplitudes vs {bits.shape} sign bits"
        )
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ParameterError("sign bits must be 0 or 1")
    return (2.0 * bits - 1.0) * amps


def map_qam(ask_i, ask_q) -> np.ndarray:
    """Combine two ASK rails into complex symbols."""
    i = np.asarray(ask_i, dtype=float)
    q = np.asarray(ask_q, dtype=float)
    if i.shape != q.shape:
        raise ParameterError(f"rail length mismatch: {i.shape} vs {q.shape}")
    return i + 1j * q


def normalize(symbols) -> SymbolStream:
    """Scale to unit mean power, recording the power that was measured."""
    sym = np.asarray(symbols, dtype=complex)
    if sym.size == 0:
        raise ParameterError("cannot normalize an empty stream")
    power = float(np.mean(np.abs(sym) ** 2))
    if power == 0.0:
        raise ParameterError("cannot normalize an all-zero stream")
    return SymbolStream(sym / np.sqrt(power), power)


def random_sign_bits(n: int, seed) -> np.ndarray:
    """Seeded uniform sign bits (stand-in for FEC parity)."""
    return np.random.default_rng(seed).integers(0, 2, size=n)


def write_symbols_binary(path, symbols) -> None:
    """Magic header + interleaved little-endian float64 (re, im)."""
    sym = np.asarray(symbols, dtype=complex)
    inter = np.empty(2 * sym.size, dtype="<f8")
    inter[0::2] = sym.real
    inter[1::2] = sym.imag
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(inter.tobytes())


def read_symbols_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ParameterError(f"bad symbol file magic {magic!r}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size % 2:
        raise ParameterError("truncated symbol file (odd float count)")
    return raw[0::2] + 1j * raw[1::2]


def write_symbols_csv(path, symbols) -> None:
    sym = np.asarray(symbols, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        for s in sym:
            fh.write(f"{float(s.real)!r},{float(s.imag)!r}\n")


def read_symbols_csv(path) -> np.ndarray:
    re, im = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            a, b = line.split(",")
            re.append(float(a))
            im.append(float(b))
    return np.asarray(re) + 1j * np.asarray(im)
