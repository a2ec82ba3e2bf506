"""Monte Carlo BER/FER measurement, sweep orchestration, and throughput model.

Frames carry the all-zero codeword (valid for linear codes on this
symmetric channel because the decoder family is sign-symmetric; the
even check degrees make a global sign flip of y mirror the whole
trajectory with the same perturbation stream).  Every frame gets its own
generators keyed by ``(seed, frame_index, stream)``, and frames are
scheduled in fixed-size blocks, so counters are identical for any worker
count: aggregation is a pure fold.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (ChannelParams, STREAM_CHANNEL, STREAM_DECODER,
                      frame_rng, gaussian_unit_sixteenths,
                      quantize_channel_sixteenths)
from .code import ParityCheckMatrix
from .defaults import DEFAULT_CLOCK_HZ, DEFAULT_RATE, NOISE_REGISTER_COUNT
from .hardware import hw_config_from_float, decode_hw
from .reference import NgdbfParams, decode_batch

CSV_HEADER = "ebn0_db,frames,bit_errors,frame_errors,ber,fer,avg_iters,ci95_ber,throughput_gbps"


def uncoded_bpsk_ber(ebn0_db: float) -> float:
    """Closed-form uncoded BPSK bit error rate Q(sqrt(2*Eb/N0))."""
    return 0.5 * math.erfc(math.sqrt(10.0 ** (ebn0_db / 10.0)))


def throughput_model(f_hz: float, n: int, avg_iterations: float) -> float:
    """Decoded Gbps at clock ``f_hz`` for code length ``n``: f*n/t, one
    iteration per cycle."""
    if avg_iterations <= 0:
        raise ValueError("average iterations must be positive; "
                         "converged-at-0 frames are floored to 1 cycle upstream")
    return f_hz * n / avg_iterations / 1e9


@dataclass(frozen=True)
class StoppingRule:
    """Frame-accumulation bounds; at least one must bind."""

    min_frame_errors: int = 100
    max_frames: int | None = None
    max_bits: int | None = None

    def __post_init__(self) -> None:
        bounded = (self.min_frame_errors > 0
                   or (self.max_frames is not None and self.max_frames > 0)
                   or (self.max_bits is not None and self.max_bits > 0))
        if not bounded:
            raise ValueError("stopping rule needs a positive bound")
        if self.min_frame_errors < 0:
            raise ValueError("min_frame_errors must be non-negative")


@dataclass
class Counters:
    """Per-run integer accumulators; merging is plain addition."""

    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    iteration_sum: int = 0
    iteration_sq_sum: int = 0
    cycle_sum: int = 0
    silent_nonconverged: int = 0

    def __iadd__(self, other: "Counters") -> "Counters":
        self.frames += other.frames
        self.bit_errors += other.bit_errors
        self.frame_errors += other.frame_errors
        self.iteration_sum += other.iteration_sum
        self.iteration_sq_sum += other.iteration_sq_sum
        self.cycle_sum += other.cycle_sum
        self.silent_nonconverged += other.silent_nonconverged
        return self


@dataclass
class BerPoint:
    """Measured operating point plus the modeled decoder throughput."""

    ebn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    avg_iterations: float
    ci95_ber: float
    modeled_throughput_gbps: float
    avg_cycles: float = 0.0
    ci95_avg_iterations: float = 0.0
    silent_nonconverged: int = 0
    elapsed_s: float = 0.0

    @classmethod
    def from_counters(cls, ebn0_db: float, c: Counters, n: int,
                      f_clock_hz: float, elapsed_s: float = 0.0) -> "BerPoint":
        bits = c.frames * n
        ber = c.bit_errors / bits if bits else 0.0
        fer = c.frame_errors / c.frames if c.frames else 0.0
        avg_it = c.iteration_sum / c.frames if c.frames else 0.0
        avg_cy = c.cycle_sum / c.frames if c.frames else 1.0
        ci_ber = 1.96 * math.sqrt(ber * (1.0 - ber) / bits) if bits else 0.0
        ci_it = 0.0
        if c.frames > 1:
            var = (c.iteration_sq_sum - c.iteration_sum ** 2 / c.frames) / (c.frames - 1)
            ci_it = 1.96 * math.sqrt(max(var, 0.0) / c.frames)
        thr = throughput_model(f_clock_hz, n, max(avg_cy, 1e-12)) if c.frames else 0.0
        return cls(ebn0_db, c.frames, c.bit_errors, c.frame_errors, ber, fer,
                   avg_it, ci_ber, thr, avg_cy, ci_it, c.silent_nonconverged,
                   elapsed_s)

    def to_dict(self) -> dict:
        return {
            "ebn0_db": _r9(self.ebn0_db),
            "frames": self.frames,
            "bit_errors": self.bit_errors,
            "frame_errors": self.frame_errors,
            "ber": _r9(self.ber),
            "fer": _r9(self.fer),
            "avg_iterations": _r9(self.avg_iterations),
            "ci95_ber": _r9(self.ci95_ber),
            "modeled_throughput_gbps": _r9(self.modeled_throughput_gbps),
            "avg_cycles": _r9(self.avg_cycles),
            "ci95_avg_iterations": _r9(self.ci95_avg_iterations),
            "silent_nonconverged": self.silent_nonconverged,
            "elapsed_s": _r9(self.elapsed_s),
        }


@dataclass
class SweepReport:
    decoder: str
    params: dict
    seed: int
    points: list[BerPoint] = field(default_factory=list)
    started_utc: str = ""
    elapsed_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "decoder": self.decoder,
            "params": self.params,
            "seed": self.seed,
            "started_utc": self.started_utc,
            "elapsed_s": _r9(self.elapsed_s),
            "points": [p.to_dict() for p in self.points],
        }


def _r9(x: float) -> float:
    """Round a float to 9 significant digits for serialization."""
    return float(f"{float(x):.9g}")


# ---------------------------------------------------------------------------
# Frame execution

_WORKER_H: ParityCheckMatrix | None = None


def _init_worker(H: ParityCheckMatrix) -> None:
    global _WORKER_H
    _WORKER_H = H


def _decode_block(H: ParityCheckMatrix, decoder: str, params: NgdbfParams,
                  ebn0_db: float, rate: float, lo: int, hi: int,
                  noiseless: bool, zero_iter_cycles: int = 1) -> Counters:
    """Decode frames [lo, hi) and fold their statistics."""
    c = Counters()
    if hi <= lo:
        return c
    seed = params.seed
    if noiseless:
        sigma = 0.0
        params = replace(params, eta=0.0, n0=None)
    else:
        ch = ChannelParams(ebn0_db, rate)
        sigma = ch.noise_sigma
        params = replace(params, n0=ch.n0)

    outcomes = []
    if decoder == "reference":
        Y = np.empty((hi - lo, H.n))
        for i, f in enumerate(range(lo, hi)):
            z = frame_rng(seed, f, STREAM_CHANNEL).standard_normal(H.n)
            Y[i] = 1.0 + sigma * z
        rngs = [frame_rng(seed, f, STREAM_DECODER) for f in range(lo, hi)]
        outcomes = decode_batch(Y, H, params, rngs)
    elif decoder == "hardware":
        cfg = hw_config_from_float(params.eta, sigma, params.theta,
                                   params.t_max, seed)
        for f in range(lo, hi):
            z = frame_rng(seed, f, STREAM_CHANNEL).standard_normal(H.n)
            y16 = quantize_channel_sixteenths(1.0 + sigma * z)
            samples = gaussian_unit_sixteenths(NOISE_REGISTER_COUNT,
                                               frame_rng(seed, f, STREAM_DECODER))
            outcomes.append(decode_hw(y16, H, cfg, samples))
    else:
        raise ValueError(f"unknown decoder kind {decoder!r}")

    for out in outcomes:
        nerr = int(np.count_nonzero(out.decisions != 1))
        c.frames += 1
        c.bit_errors += nerr
        c.frame_errors += nerr > 0
        c.iteration_sum += out.iterations
        c.iteration_sq_sum += out.iterations ** 2
        # A frame that converges without flipping still occupies the
        # pipeline for its load/check cycles.
        c.cycle_sum += max(zero_iter_cycles, out.iterations)
        c.silent_nonconverged += (not out.converged) and nerr == 0
    return c


def _decode_block_worker(args) -> Counters:
    decoder, params, ebn0_db, rate, lo, hi, noiseless, zero_iter_cycles = args
    return _decode_block(_WORKER_H, decoder, params, ebn0_db, rate, lo, hi,
                         noiseless, zero_iter_cycles)


def run_ber_point(H: ParityCheckMatrix, decoder: str, params: NgdbfParams,
                  ebn0_db: float, rule: StoppingRule, *,
                  rate: float = DEFAULT_RATE, workers: int = 1,
                  block_frames: int = 512, noiseless: bool = False,
                  f_clock_hz: float = DEFAULT_CLOCK_HZ,
                  zero_iter_cycles: int = 1,
                  executor: ProcessPoolExecutor | None = None) -> BerPoint:
    """Accumulate all-zero-codeword frames at one SNR until ``rule`` binds.

    Frames are consumed in blocks of ``block_frames``; the rule is checked
    only at block boundaries, so the processed frame set (and therefore
    every counter) does not depend on ``workers``.
    """
    if block_frames < 1:
        raise ValueError("block size must be positive")
    start = time.monotonic()
    totals = Counters()
    own_pool = None
    pool = executor
    if workers > 1 and pool is None:
        own_pool = ProcessPoolExecutor(max_workers=workers,
                                       initializer=_init_worker, initargs=(H,))
        pool = own_pool
    try:
        base = 0
        while True:
            block = block_frames
            if rule.max_frames is not None:
                block = min(block, rule.max_frames - totals.frames)
            if rule.max_bits is not None:
                remaining = rule.max_bits - totals.frames * H.n
                block = min(block, -(-remaining // H.n))
            if block <= 0:
                break
            if pool is None:
                totals += _decode_block(H, decoder, params, ebn0_db, rate,
                                        base, base + block, noiseless,
                                        zero_iter_cycles)
            else:
                step = -(-block // workers)
                tasks = [(decoder, params, ebn0_db, rate,
                          base + i * step, min(base + (i + 1) * step, base + block),
                          noiseless, zero_iter_cycles) for i in range(workers)]
                for part in pool.map(_decode_block_worker, tasks):
                    totals += part
            base += block
            if rule.min_frame_errors > 0 and totals.frame_errors >= rule.min_frame_errors:
                break
            if rule.max_frames is not None and totals.frames >= rule.max_frames:
                break
            if rule.max_bits is not None and totals.frames * H.n >= rule.max_bits:
                break
    finally:
        if own_pool is not None:
            own_pool.shutdown()
    return BerPoint.from_counters(ebn0_db, totals, H.n, f_clock_hz,
                                  time.monotonic() - start)


def run_sweep(H: ParityCheckMatrix, decoder: str, params: NgdbfParams,
              grid, rule: StoppingRule, *, rate: float = DEFAULT_RATE,
              workers: int = 1, block_frames: int = 512,
              noiseless: bool = False,
              f_clock_hz: float = DEFAULT_CLOCK_HZ,
              zero_iter_cycles: int = 1,
              csv_path: str | None = None,
              json_path: str | None = None) -> SweepReport:
    """One BerPoint per grid SNR, lowest first, under a shared seed schedule.

    ``csv_path``/``json_path`` capture the finished table in the table and
    report formats of :func:`write_csv` and :func:`write_json`.
    """
    grid = sorted(set(float(g) for g in grid))
    if not grid:
        raise ValueError("empty SNR grid")
    report = SweepReport(
        decoder=decoder,
        params={
            "w": _r9(params.w), "theta": _r9(params.theta),
            "eta": _r9(params.eta), "t_max": params.t_max,
            "sample_reuse": params.sample_reuse, "rate": _r9(rate),
            "f_clock_hz": _r9(f_clock_hz), "block_frames": block_frames,
            "rule": {"min_frame_errors": rule.min_frame_errors,
                     "max_frames": rule.max_frames, "max_bits": rule.max_bits},
        },
        seed=params.seed,
        started_utc=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )
    start = time.monotonic()
    pool = None
    try:
        if workers > 1:
            pool = ProcessPoolExecutor(max_workers=workers,
                                       initializer=_init_worker, initargs=(H,))
        for db in grid:
            report.points.append(run_ber_point(
                H, decoder, params, db, rule, rate=rate, workers=workers,
                block_frames=block_frames, noiseless=noiseless,
                f_clock_hz=f_clock_hz, zero_iter_cycles=zero_iter_cycles,
                executor=pool))
    finally:
        if pool is not None:
            pool.shutdown()
    report.elapsed_s = time.monotonic() - start
    if csv_path is not None:
        with open(csv_path, "w") as f:
            write_csv(report.points, f)
    if json_path is not None:
        with open(json_path, "w") as f:
            write_json(report, f)
    return report


# ---------------------------------------------------------------------------
# Serialization


def write_csv(points, f) -> None:
    """Emit the sweep table with the fixed 9-column schema."""
    f.write(CSV_HEADER + "\n")
    for p in points:
        f.write(",".join([
            f"{p.ebn0_db:.9g}", str(p.frames), str(p.bit_errors),
            str(p.frame_errors), f"{p.ber:.9g}", f"{p.fer:.9g}",
            f"{p.avg_iterations:.9g}", f"{p.ci95_ber:.9g}",
            f"{p.modeled_throughput_gbps:.9g}",
        ]) + "\n")


def write_json(report: SweepReport, f) -> None:
    json.dump(report.to_dict(), f, indent=2)
    f.write("\n")
