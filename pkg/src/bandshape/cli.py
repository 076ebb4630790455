"""Command-line interface.

Subcommands: trellis build/info, shape, deshape, stats, compare, simulate.
Machine-readable results go to files or stdout; warnings and progress go to
stderr. CSV outputs start with '# key=value' lines echoing the effective
configuration (readers should skip '#' lines).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .codec import AmplitudeSequence, deshape, shape_stream
from .errors import BandshapeError, ParameterError
from .fibersim import FiberParams, LinkParams, run_sweep
from .metrics import compare_trellises, exact_metrics, sampled_metrics
from .trellis import (
    Alphabet,
    BandParams,
    Trellis,
    TrellisParams,
    build_band_trellis,
    build_full_trellis,
    load_trellis,
    max_shaping_bits,
    min_emax_for_bits,
    save_trellis,
)

DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 12345


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def bytes_to_bits(data: bytes):
    """MSB-first bit stream of a byte string."""
    for byte in data:
        for shift in range(7, -1, -1):
            yield (byte >> shift) & 1


def bits_to_bytes(bits) -> bytes:
    """Pack MSB-first; the final byte is zero-padded if needed."""
    out = bytearray()
    acc = 0
    fill = 0
    for b in bits:
        acc = (acc << 1) | b
        fill += 1
        if fill == 8:
            out.append(acc)
            acc = 0
            fill = 0
    if fill:
        out.append(acc << (8 - fill))
    return bytes(out)


def _parse_alphabet(text: str) -> Alphabet:
    try:
        return Alphabet(tuple(int(a) for a in text.split(",")))
    except ValueError as exc:
        raise ParameterError(f"bad alphabet {text!r}") from exc


def _parse_band(text: str) -> BandParams:
    try:
        h, w = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise ParameterError(f"bad band spec {text!r}, expected H,W") from exc
    return BandParams(h, w)


def _parse_powers(text: str) -> list[float]:
    """start:step:stop inclusive, or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ParameterError(f"bad power sweep {text!r}, expected start:step:stop")
    start, step, stop = (float(x) for x in parts)
    if step <= 0:
        raise ParameterError("power sweep step must be positive")
    count = int(round((stop - start) / step)) + 1
    if count < 1:
        raise ParameterError(f"empty power sweep {text!r}")
    return [start + i * step for i in range(count)]


def _summary_lines(trellis: Trellis) -> list[str]:
    p = trellis.params
    band = f"{trellis.band.height},{trellis.band.width}" if trellis.band else "none"
    return [
        f"n={p.n_amplitudes}",
        f"alphabet={','.join(str(a) for a in p.alphabet.amplitudes)}",
        f"emax={p.e_max}",
        f"band={band}",
        f"final_levels={p.num_final_levels}",
        f"sequences={trellis.num_sequences}",
        f"bits={max_shaping_bits(trellis)}",
    ]


def cmd_trellis(args) -> int:
    if args.action == "info":
        trellis = load_trellis(args.file)
        for line in _summary_lines(trellis):
            print(line)
        m = exact_metrics(trellis)
        for a, pa in zip(m.alphabet, m.p_amp):
            print(f"p_{a}={pa!r}")
        print(f"e2={m.e2!r}")
        print(f"e4={m.e4!r}")
        print(f"var_e={m.var_e!r}")
        print(f"kurtosis={m.kurtosis!r}")
        return 0
    alphabet = _parse_alphabet(args.alphabet)
    band = _parse_band(args.band) if args.band else None
    if args.bits is not None:
        e_max = min_emax_for_bits(args.n, alphabet, args.bits, band=band)
    else:
        e_max = args.emax
    params = TrellisParams(args.n, alphabet, e_max)
    if params.e_max != e_max:
        _log(f"warning: e_max={e_max} is off the energy grid, snapped down "
             f"to {params.e_max}")
    trellis = (build_band_trellis(params, band) if band
               else build_full_trellis(params))
    save_trellis(trellis, args.out)
    _log(f"wrote {args.out}")
    for line in _summary_lines(trellis):
        print(line)
    return 0


def cmd_shape(args) -> int:
    trellis = load_trellis(args.trellis)
    with open(args.infile, "rb") as fh:
        payload = fh.read()
    with open(args.out, "w", encoding="utf-8") as fh:
        def emit(seq: AmplitudeSequence) -> None:
            fh.write(" ".join(str(v) for v in seq.values) + "\n")

        blocks = shape_stream(trellis, bytes_to_bits(payload), emit)
    _log(f"shaped {blocks} blocks from {len(payload)} bytes")
    return 0


def cmd_deshape(args) -> int:
    trellis = load_trellis(args.trellis)
    k = max_shaping_bits(trellis)
    bits: list[int] = []
    with open(args.infile, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                seq = tuple(int(v) for v in line.split())
                bits.extend(deshape(trellis, seq))
            except (ValueError, BandshapeError) as exc:
                raise ParameterError(f"line {lineno}: {exc}") from exc
    with open(args.out, "wb") as fh:
        fh.write(bits_to_bytes(bits))
    if len(bits) % 8:
        _log(f"note: {len(bits)} bits zero-padded to a byte boundary")
    _log(f"deshaped {len(bits) // k if k else 0} sequences")
    return 0


def cmd_stats(args) -> int:
    trellis = load_trellis(args.trellis)
    k = max_shaping_bits(trellis)
    exact = exact_metrics(trellis)
    sampled = sampled_metrics(trellis, k, args.samples, args.seed,
                              exhaustive=args.exhaustive)
    print(f"sequences={trellis.num_sequences}")
    print(f"bits={k}")
    for a, pa in zip(exact.alphabet, exact.p_amp):
        print(f"exact_p_{a}={pa!r}")
    print(f"exact_e2={exact.e2!r}")
    print(f"exact_e4={exact.e4!r}")
    print(f"exact_var_e={exact.var_e!r}")
    print(f"exact_kurtosis={exact.kurtosis!r}")
    for a, pa in zip(sampled.alphabet, sampled.p_amp):
        print(f"sampled_p_{a}={pa!r}")
    print(f"sampled_e2={sampled.e2!r}")
    print(f"sampled_e4={sampled.e4!r}")
    print(f"sampled_var_e={sampled.var_e!r}")
    print(f"sampled_kurtosis={sampled.kurtosis!r}")
    print(f"sampled_se_e2={sampled.se_e2!r}")
    print(f"sampled_num_samples={sampled.num_samples}")
    print(f"sampled_seed={sampled.seed}")
    print(f"sampled_exhaustive={sampled.exhaustive}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(f"# trellis={args.trellis} samples={sampled.num_samples} "
                     f"seed={sampled.seed} exhaustive={sampled.exhaustive}\n")
            fh.write("row,v1,v2,v3,v4\n")
            for a, pe, ps in zip(exact.alphabet, exact.p_amp, sampled.p_amp):
                fh.write(f"p,{a},{pe!r},{ps!r}\n")
            fh.write(f"moments,{exact.e2!r},{exact.e4!r},{exact.var_e!r},"
                     f"{exact.kurtosis!r}\n")
    return 0


def cmd_compare(args) -> int:
    a = load_trellis(args.a)
    b = load_trellis(args.b)
    report = compare_trellises(a, b)
    for key, value in report.items():
        if key == "alphabet":
            value = ",".join(str(x) for x in value)
        print(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    if args.csv:
        keys = [k for k in report if k != "alphabet"]
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(f"# a={args.a} b={args.b}\n")
            fh.write(",".join(keys) + "\n")
            fh.write(",".join(repr(float(report[k])) for k in keys) + "\n")
    return 0


_SIM_DEFAULTS = {
    "baud": 50.0, "rolloff": 0.1, "nf": 5.0, "sps": 16, "step_km": 0.1,
    "burst": 16384, "guard": 512, "filter_span": 64, "alpha": 0.2,
    "dispersion": 17.0, "gamma": 1.3, "length": 205.0, "wavelength": 1550.0,
    "seed": 0, "seeds": 1,
}


def cmd_simulate(args) -> int:
    cfg = dict(_SIM_DEFAULTS)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(cfg)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(overrides)
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    if not schemes:
        raise ParameterError("no schemes requested")
    trellis_by_scheme: dict[str, Trellis] = {}
    for scheme in schemes:
        path = getattr(args, f"trellis_{scheme}", None)
        if path is None:
            raise ParameterError(
                f"scheme {scheme!r} needs --trellis-{scheme} (known: ess, bess)"
            )
        trellis_by_scheme[scheme] = load_trellis(path)
    powers = _parse_powers(args.powers)
    link = LinkParams(
        baud_rate_gbd=float(cfg["baud"]), rrc_rolloff=float(cfg["rolloff"]),
        edfa_nf_db=float(cfg["nf"]), launch_power_dbm=powers[0],
        sps=int(cfg["sps"]), step_km=float(cfg["step_km"]),
        seed=int(cfg["seed"]), burst_symbols=int(cfg["burst"]),
        filter_span_symbols=int(cfg["filter_span"]),
        guard_symbols=int(cfg["guard"]),
    )
    fiber = FiberParams(
        alpha_db_per_km=float(cfg["alpha"]),
        dispersion_ps_nm_km=float(cfg["dispersion"]),
        gamma_per_w_km=float(cfg["gamma"]), length_km=float(cfg["length"]),
        ref_wavelength_nm=float(cfg["wavelength"]),
    )
    _log(f"sweep: schemes={schemes} powers={powers} seeds={cfg['seeds']}")
    rows = run_sweep(trellis_by_scheme, powers, int(cfg["seeds"]), link, fiber)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w",
                                                          encoding="utf-8")
    try:
        for key in sorted(cfg):
            out.write(f"# {key}={cfg[key]}\n")
        out.write(f"# schemes={','.join(schemes)} "
                  f"powers={args.powers}\n")
        out.write("scheme,launch_power_dbm,snr_db,seed,step_km,sps,burst_symbols\n")
        for r in rows:
            out.write(f"{r['scheme']},{r['launch_power_dbm']!r},{r['snr_db']!r},"
                      f"{r['seed']},{r['step_km']!r},{r['sps']},"
                      f"{r['burst_symbols']}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bandshape",
        description="Sphere-shaping codec (full and band-restricted trellises) "
                    "with a desk-scale single-span fiber simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    trellis = sub.add_parser("trellis", help="build or inspect trellis files")
    tsub = trellis.add_subparsers(dest="action", required=True)
    build = tsub.add_parser("build", help="construct a trellis and write it out")
    build.add_argument("--n", type=int, required=True, help="sequence length")
    build.add_argument("--alphabet", required=True,
                       help="comma-separated odd amplitudes, e.g. 1,3,5")
    group = build.add_mutually_exclusive_group(required=True)
    group.add_argument("--emax", type=int, help="maximum sequence energy")
    group.add_argument("--bits", type=int,
                       help="pick the smallest e_max reaching this many bits")
    build.add_argument("--band", help="band restriction HEIGHT,WIDTH")
    build.add_argument("--out", required=True, help="output trellis file")
    info = tsub.add_parser("info", help="print parameters, counts, and metrics")
    info.add_argument("file")

    shape_p = sub.add_parser("shape", help="bit file -> amplitude file")
    shape_p.add_argument("--trellis", required=True)
    shape_p.add_argument("--in", dest="infile", required=True)
    shape_p.add_argument("--out", required=True)

    deshape_p = sub.add_parser("deshape", help="amplitude file -> bit file")
    deshape_p.add_argument("--trellis", required=True)
    deshape_p.add_argument("--in", dest="infile", required=True)
    deshape_p.add_argument("--out", required=True)

    stats = sub.add_parser("stats", help="exact and sampled shaping metrics")
    stats.add_argument("--trellis", required=True)
    stats.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    stats.add_argument("--seed", type=int, default=DEFAULT_SEED)
    stats.add_argument("--exhaustive", action="store_true",
                       help="sweep all 2^k used indices instead of sampling")
    stats.add_argument("--csv", help="also write a CSV report")

    compare = sub.add_parser("compare", help="side-by-side metrics of two trellises")
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True)
    compare.add_argument("--csv", help="also write a CSV report")

    simulate = sub.add_parser("simulate", help="launch-power sweep over the fiber")
    simulate.add_argument("--trellis-ess", dest="trellis_ess")
    simulate.add_argument("--trellis-bess", dest="trellis_bess")
    simulate.add_argument("--schemes", default="ess",
                          help="comma list drawn from: ess, bess")
    simulate.add_argument("--powers", default="-2:1:8",
                          help="launch power dBm sweep start:step:stop, inclusive "
                               "(write --powers=-2:1:8 when start is negative)")
    simulate.add_argument("--config", help="JSON file with parameter defaults "
                                           "(flags still win)")
    simulate.add_argument("--out", help="CSV output path (default stdout)")
    for key, default in _SIM_DEFAULTS.items():
        flag = "--" + key.replace("_", "-")
        simulate.add_argument(flag, dest=key, type=type(default), default=None,
                              help=f"default {default}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "trellis": cmd_trellis,
        "shape": cmd_shape,
        "deshape": cmd_deshape,
        "stats": cmd_stats,
        "compare": cmd_compare,
        "simulate": cmd_simulate,
    }
    try:
        return handlers[args.command](args)
    except BandshapeError as exc:
        _log(f"error: {exc}")
        return 2
    except OSError as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
