"""Command-line front end: matrix validation/generation, simulation sweeps,
fixed/float comparison, and noise-word dumps.

Exit codes: 0 success, 1 runtime failure, 2 input/validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import defaults
from .channel import (ChannelParams, STREAM_CHANNEL, STREAM_DECODER,
                      frame_rng, gaussian_unit_sixteenths,
                      quantize_channel_sixteenths)
from .code import (AlistFormatError, build_rs_ldpc, count_four_cycles,
                   gf2_rank, parse_alist, serialize_alist, validate_regular)
from .defaults import (DEFAULT_CLOCK_HZ, DEFAULT_ETA, DEFAULT_RATE, DEFAULT_T,
                       DEFAULT_THETA, DEFAULT_W, NOISE_REGISTER_COUNT)
from .fixedpoint import FixedSM7
from .hardware import (HardwareDecoder, HwConfig, decode_fixed_emulation,
                       hw_config_from_float, nuu_load, read_noise_file,
                       write_noise_file)
from .harness import (StoppingRule, run_ber_point, run_sweep, uncoded_bpsk_ber,
                      write_csv, write_json)
from .reference import NgdbfParams, decode

MATRIX_ENV_VAR = "NGDBF_MATRIX"


class CliInputError(Exception):
    """Bad flags, unreadable/invalid inputs — reported with exit code 2."""


def _load_matrix(source: str | None):
    if source is None:
        source = os.environ.get(MATRIX_ENV_VAR, "builtin")
    if source == "builtin":
        return build_rs_ldpc()
    try:
        with open(source) as f:
            return parse_alist(f)
    except OSError as e:
        raise CliInputError(f"cannot read matrix {source!r}: {e}") from None
    except AlistFormatError as e:
        raise CliInputError(f"matrix {source!r}: {e}") from None


def parse_snr_grid(text: str) -> list[float]:
    """Grid syntax: a single value, a comma list, or start:stop:step
    (endpoints included within half a step)."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            grid = []
            k = 0
            while start + k * step <= stop + step / 2:
                grid.append(round(start + k * step, 10))
                k += 1
            return grid
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise CliInputError(f"bad SNR grid {text!r}; use DB, DB,DB,..., "
                            "or start:stop:step") from None


def _print_provenance(decoder: str, params: NgdbfParams, rate: float,
                      workers: int, matrix: str | None, out=None) -> None:
    # Resolve the stream at call time so redirected stdout is honored.
    if out is None:
        out = sys.stdout
    print(f"# defaults: w={DEFAULT_W:.9g} theta={DEFAULT_THETA} "
          f"theta_q=-0.5625 T={DEFAULT_T} f_clock={DEFAULT_CLOCK_HZ:.9g}Hz",
          file=out)
    print(f"# run: decoder={decoder} w={params.w:.9g} theta={params.theta} "
          f"eta={params.eta} T={params.t_max} seed={params.seed} "
          f"rate={rate} workers={workers} "
          f"sample_reuse={params.sample_reuse} "
          f"matrix={matrix or os.environ.get(MATRIX_ENV_VAR, 'builtin')}",
          file=out)


def _params_from_args(args) -> NgdbfParams:
    try:
        return NgdbfParams(w=args.w, theta=args.theta, eta=args.eta,
                           t_max=args.t_max, seed=args.seed,
                           sample_reuse=getattr(args, "sample_reuse", False))
    except ValueError as e:
        raise CliInputError(str(e)) from None


def _decoder_kind(args) -> str:
    return {"ref": "reference", "hw": "hardware"}[args.decoder]


# ---------------------------------------------------------------------------
# Commands


def cmd_code_validate(args) -> int:
    H = _load_matrix(args.matrix)
    rep = validate_regular(H, args.dv, args.dc)
    rank = gf2_rank(H)
    rate = (H.n - rank) / H.n
    print(f"matrix: {H.m} checks x {H.n} symbols")
    print(f"symbol degrees: {int(H.symbol_degrees.min())}"
          f"..{int(H.symbol_degrees.max())} (expected {args.dv})")
    print(f"check degrees: {int(H.check_degrees.min())}"
          f"..{int(H.check_degrees.max())} (expected {args.dc})")
    print(f"4-cycles: {rep.four_cycles}")
    print(f"gf2 rank: {rank}  ->  rate {rate:.6f} (k={H.n - rank})")
    ok = rep.ok
    if args.expect_802_3an:
        ok = ok and H.m == 384 and H.n == 2048 and args.dv == 6 and args.dc == 32
        print("802.3an-class expectations:", "pass" if ok else "FAIL")
    if args.json:
        doc = rep.to_dict()
        doc.update({"rank": rank, "rate": rate})
        with open(args.json, "w") as f:
            json.dump(doc, f, indent=2)
            f.write("\n")
    if args.expect_802_3an and not ok:
        return 2
    return 0


def cmd_code_gen(args) -> int:
    H = build_rs_ldpc()
    text = serialize_alist(H)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
        print(f"wrote {H.m}x{H.n} matrix to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _run_points(args, grid) -> int:
    H = _load_matrix(args.matrix)
    params = _params_from_args(args)
    decoder = _decoder_kind(args)
    try:
        rule = StoppingRule(min_frame_errors=args.min_errors,
                            max_frames=args.max_frames, max_bits=args.max_bits)
    except ValueError as e:
        raise CliInputError(str(e)) from None
    _print_provenance(decoder, params, args.rate, args.workers, args.matrix)
    report = run_sweep(H, decoder, params, grid, rule, rate=args.rate,
                       workers=args.workers, block_frames=args.block_frames,
                       noiseless=args.noiseless)
    print(f"{'ebn0_db':>8} {'frames':>9} {'bit_err':>9} {'frame_err':>9} "
          f"{'ber':>12} {'fer':>12} {'avg_iters':>10} {'thr_gbps':>9}")
    for p in report.points:
        print(f"{p.ebn0_db:8.2f} {p.frames:9d} {p.bit_errors:9d} "
              f"{p.frame_errors:9d} {p.ber:12.4e} {p.fer:12.4e} "
              f"{p.avg_iterations:10.2f} {p.modeled_throughput_gbps:9.3f}")
        print(f"# uncoded bpsk ber at {p.ebn0_db:.2f} dB: "
              f"{uncoded_bpsk_ber(p.ebn0_db):.4e}")
    if args.csv:
        with open(args.csv, "w") as f:
            write_csv(report.points, f)
    if getattr(args, "json", None):
        with open(args.json, "w") as f:
            write_json(report, f)
    return 0


def cmd_simulate(args) -> int:
    return _run_points(args, [args.snr])


def cmd_sweep(args) -> int:
    return _run_points(args, parse_snr_grid(args.snr))


def cmd_compare(args) -> int:
    if args.frames < 0:
        raise CliInputError("frame count must be non-negative")
    H = _load_matrix(args.matrix)
    ch = ChannelParams(args.snr, args.rate)
    cfg = hw_config_from_float(args.eta, ch.noise_sigma, args.theta,
                               args.t_max, args.seed, args.mul_mode)
    report: dict = {"mode": args.mode, "frames": args.frames,
                    "ebn0_db": args.snr, "seed": args.seed}
    shared = None
    if args.shared_file and args.frames:
        shared = HardwareDecoder(H, cfg)
    equal = 0
    hw_bits = 0
    ref_bits = 0
    drops = 0
    params = NgdbfParams(w=args.w, theta=args.theta, eta=args.eta, n0=ch.n0,
                         t_max=args.t_max, seed=args.seed)
    for f in range(args.frames):
        z = frame_rng(args.seed, f, STREAM_CHANNEL).standard_normal(H.n)
        y = 1.0 + ch.noise_sigma * z
        y16 = quantize_channel_sixteenths(y)
        if shared is not None:
            dec = shared
        else:
            samples = gaussian_unit_sixteenths(
                NOISE_REGISTER_COUNT, frame_rng(args.seed, f, STREAM_DECODER))
            dec = HardwareDecoder(H, cfg, samples)
        drops += dec.file.msb_drop_count
        offset = dec.file.offset
        words = dec.file.base_sixteenths
        out_hw = dec.decode_frame(y16, trace=args.mode == "emulation")
        hw_bits += int(np.count_nonzero(out_hw.decisions != 1))
        if args.mode == "emulation":
            out_em = decode_fixed_emulation(y16, H, words, args.t_max,
                                            start_offset=offset, trace=True)
            same = (len(out_hw.trajectory) == len(out_em.trajectory) and
                    all(np.array_equal(a, b) for a, b in
                        zip(out_hw.trajectory, out_em.trajectory)))
            equal += same
        else:
            out_ref = decode(y, H, params,
                             rng=frame_rng(args.seed, f, STREAM_DECODER))
            ref_bits += int(np.count_nonzero(out_ref.decisions != 1))
    bits = args.frames * H.n
    if args.mode == "emulation":
        report["equal_trajectories"] = equal
        report["hw_bit_errors"] = hw_bits
        report["msb_drops_per_load"] = (drops / args.frames) if args.frames else 0
        print(f"trajectory equality: {equal}/{args.frames}")
    else:
        report["hw_bit_errors"] = hw_bits
        report["float_bit_errors"] = ref_bits
        report["hw_ber"] = hw_bits / bits if bits else 0.0
        report["float_ber"] = ref_bits / bits if bits else 0.0
        print(f"hw ber {report['hw_ber']:.4e}  float ber {report['float_ber']:.4e}"
              f"  over {args.frames} frames")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(report, f, indent=2)
            f.write("\n")
    return 0


def cmd_noise_dump(args) -> int:
    rng = np.random.default_rng(args.seed)
    samples = gaussian_unit_sixteenths(NOISE_REGISTER_COUNT, rng)
    if args.raw:
        values = samples
    else:
        if args.std_dev is None:
            if args.snr is None:
                raise CliInputError("need --std-dev or --snr to scale words")
            args.std_dev = args.eta * ChannelParams(args.snr, args.rate).noise_sigma
        try:
            cfg = HwConfig(theta_q=FixedSM7.from_float(args.theta),
                           std_dev_q=FixedSM7.from_float(args.std_dev),
                           seed=args.seed, mul_mode=args.mul_mode)
        except ValueError as e:
            raise CliInputError(str(e)) from None
        file = nuu_load(samples, cfg)
        values = file.contents_sixteenths()
        print(f"# msb drops: {file.msb_drop_count}", file=sys.stderr)
    if args.output:
        with open(args.output, "w") as f:
            write_noise_file(f, values)
    else:
        write_noise_file(sys.stdout, values)
    return 0


# ---------------------------------------------------------------------------
# Argument wiring


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", default=None,
                   help="alist path or 'builtin' (env %s overrides the default)"
                   % MATRIX_ENV_VAR)
    p.add_argument("--seed", type=int, default=0)


def _add_decode_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--decoder", choices=("ref", "hw"), default="ref")
    p.add_argument("--w", type=float, default=DEFAULT_W)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--t-max", type=int, default=DEFAULT_T)
    p.add_argument("--rate", type=float, default=DEFAULT_RATE)
    p.add_argument("--sample-reuse", action="store_true",
                   help="cyclic noise reuse in the reference decoder")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-frames", type=int, default=None)
    p.add_argument("--max-bits", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--block-frames", type=int, default=256)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ngdbf",
        description="Gradient-descent bit-flip LDPC decoding testbench "
                    "(floating-point reference, bit-accurate datapath model, "
                    "Monte Carlo harness)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code-validate", help="profile and validate a matrix")
    _add_common(p)
    p.add_argument("--dv", type=int, default=6)
    p.add_argument("--dc", type=int, default=32)
    p.add_argument("--expect-802.3an", dest="expect_802_3an",
                   action="store_true",
                   help="exit nonzero unless the 384x2048 (6,32) profile holds")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_code_validate)

    p = sub.add_parser("code-gen", help="emit the built-in matrix as alist")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_code_gen)

    p = sub.add_parser("simulate", help="measure one SNR point")
    _add_common(p)
    _add_decode_params(p)
    _add_run_flags(p)
    p.add_argument("--snr", type=float, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="measure a grid of SNR points")
    _add_common(p)
    _add_decode_params(p)
    _add_run_flags(p)
    p.add_argument("--snr", required=True,
                   help="DB, comma list, or start:stop:step")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare",
                       help="fixed-point datapath vs reference decoding")
    _add_common(p)
    p.add_argument("--frames", type=int, default=100)
    p.add_argument("--snr", type=float, default=4.0)
    p.add_argument("--mode", choices=("emulation", "float"), default="emulation")
    p.add_argument("--shared-file", action="store_true",
                   help="one register file circulating across all frames")
    p.add_argument("--w", type=float, default=DEFAULT_W)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--t-max", type=int, default=DEFAULT_T)
    p.add_argument("--rate", type=float, default=DEFAULT_RATE)
    p.add_argument("--mul-mode", choices=("round", "truncate"), default="round")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("noise-dump",
                       help="emit 2648 noise words (or raw samples)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw", action="store_true",
                   help="dump quantized unit-normal samples before the NUU")
    p.add_argument("--std-dev", type=float, default=None)
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--rate", type=float, default=DEFAULT_RATE)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--mul-mode", choices=("round", "truncate"), default="round")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_noise_dump)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o failure: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # anything else is a runtime failure
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
