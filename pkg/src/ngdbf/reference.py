"""Floating-point gradient-descent bit-flip decoding with threshold noise.

Decisions start at the channel hard decision ``x(0) = sign(y)`` (with
``sign(0) = +1``).  Each iteration computes, for every symbol ``k``, the
inversion metric

    E_k = x_k * y_k + w * sum of adjacent bipolar syndromes + q_k,

where ``q_k`` is zero-mean Gaussian perturbation with standard deviation
``eta * sigma`` (``sigma`` = channel noise sigma), and flips every symbol
with ``E_k`` strictly below the negative threshold ``theta``.  Decoding
stops as soon as the syndrome clears or after ``t_max`` flip rounds.

``eta = 0`` gives the deterministic gradient-descent bit-flip rule, which
stalls on oscillatory error patterns; the perturbation exists to break
those cycles.  ``sample_reuse`` models the hardware's circulating store of
pre-drawn samples instead of fresh draws every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .code import ParityCheckMatrix
from .channel import ChannelParams, frame_rng, STREAM_CHANNEL, STREAM_DECODER
from .defaults import (DEFAULT_ETA, DEFAULT_RATE, DEFAULT_T, DEFAULT_THETA,
                       DEFAULT_W, NOISE_REGISTER_COUNT)


@dataclass(frozen=True)
class NgdbfParams:
    """Flip-rule parameters for the floating-point decoder.

    ``n0`` is the one-sided channel noise density (2 * sigma^2); the
    threshold perturbation q_k then has variance ``eta^2 * n0 / 2``.  It
    may stay unset when ``eta == 0``.
    """

    w: float = DEFAULT_W
    theta: float = DEFAULT_THETA
    eta: float = DEFAULT_ETA
    n0: float | None = None
    t_max: int = DEFAULT_T
    seed: int = 0
    sample_reuse: bool = False

    def __post_init__(self) -> None:
        if not self.w > 0:
            raise ValueError("syndrome weight w must be positive")
        if not self.theta < 0:
            raise ValueError("flip threshold theta must be negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("noise scale eta must lie in [0, 1]")
        if self.t_max < 1:
            raise ValueError("iteration cap must be at least 1")
        if self.n0 is not None and not self.n0 > 0:
            raise ValueError("noise density n0 must be positive")


@dataclass
class DecodeOutcome:
    """Result of one decoding attempt.

    ``iterations`` counts executed flip rounds when convergence was
    detected, so a frame whose hard decision already satisfies all checks
    reports 0.  ``trajectory`` (when tracing) holds the 0/1 decision vector
    before any flips and after every flip round.
    """

    decisions: np.ndarray
    converged: bool
    iterations: int
    trajectory: list[np.ndarray] | None = None


def bits_to_bipolar(bits: np.ndarray) -> np.ndarray:
    return (1 - 2 * np.asarray(bits, dtype=np.int8)).astype(np.int8)


def objective(x: np.ndarray, y: np.ndarray, H: ParityCheckMatrix) -> float:
    """The ascent objective: channel correlation plus the syndrome sum.

    Maximized exactly when x is the hard decision of y and all checks are
    satisfied; the decoder climbs it through local flips.
    """
    from .code import syndrome
    x = np.asarray(x)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("decision/sample length mismatch")
    return float(np.dot(x.astype(np.float64), y) +
                 np.sum(syndrome(H, x.astype(np.int8))))


def inversion_metric(x_k: float, y_k: float, syndromes, w: float,
                     q_k: float = 0.0) -> float:
    """Per-symbol flip metric; lower means more likely to be wrong."""
    return float(x_k * y_k + w * np.sum(syndromes) + q_k)


def _noise_std(params: NgdbfParams) -> float:
    if params.eta == 0.0:
        return 0.0
    if params.n0 is None:
        raise ValueError("params.n0 is required when eta > 0")
    return params.eta * float(np.sqrt(params.n0 / 2.0))


def decode(y: np.ndarray, H: ParityCheckMatrix, params: NgdbfParams,
           rng: np.random.Generator | None = None,
           trace: bool = False) -> DecodeOutcome:
    """Decode one frame of channel observations ``y``.

    ``rng`` supplies the threshold perturbation stream and defaults to a
    fresh generator seeded from ``params.seed``.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (H.n,):
        raise ValueError(f"expected {H.n} samples, got shape {y.shape}")
    sigma_q = _noise_std(params)
    if rng is None:
        rng = np.random.default_rng(params.seed)

    xb = (y < 0).astype(np.uint8)
    traj = [xb.copy()] if trace else None
    pool = None
    if params.sample_reuse and sigma_q > 0.0:
        pool = rng.standard_normal(NOISE_REGISTER_COUNT) * sigma_q
    taps = np.arange(H.n)
    rect = H.row_rect
    # The flip metric is evaluated in fixed stages (t1, +w*deg, -2w*c, +q)
    # shared verbatim with decode_batch so trajectories match bit for bit.
    wdeg = params.w * H.symbol_degrees.astype(np.float64)
    w2 = 2.0 * params.w

    converged = False
    iterations = params.t_max
    for t in range(1, params.t_max + 2):
        if rect is not None:
            syn = np.bitwise_xor.reduce(xb[rect], axis=1)
        else:
            syn = np.add.reduceat(xb[H.row_flat], H.row_starts).astype(np.uint8) & 1
        if not syn.any():
            converged = True
            iterations = t - 1
            break
        if t == params.t_max + 1:
            break
        if H.col_rect is not None:
            c = syn[H.col_rect].sum(axis=1, dtype=np.float64)
        else:
            c = np.add.reduceat(syn[H.col_flat].astype(np.float64), H.col_starts)
        g = (1.0 - 2.0 * xb) * y
        g += wdeg
        g -= w2 * c
        if sigma_q > 0.0:
            if pool is not None:
                g += pool[(taps - (t - 1)) % NOISE_REGISTER_COUNT]
            else:
                g += rng.standard_normal(H.n) * sigma_q
        xb ^= g < params.theta
        if trace:
            traj.append(xb.copy())

    return DecodeOutcome(bits_to_bipolar(xb), converged, iterations, traj)


def decode_batch(Y: np.ndarray, H: ParityCheckMatrix, params: NgdbfParams,
                 frame_rngs: list | None = None) -> list[DecodeOutcome]:
    """Decode ``B`` frames together; trajectory-identical to :func:`decode`.

    Frames are removed from the working set as they converge, so the cost
    per frame tracks its own iteration count.  ``frame_rngs`` supplies one
    generator per frame; arithmetic and draw order per frame match the
    single-frame path exactly.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != H.n:
        raise ValueError(f"expected (B, {H.n}) samples, got shape {Y.shape}")
    B = Y.shape[0]
    sigma_q = _noise_std(params)
    if frame_rngs is None:
        frame_rngs = [np.random.default_rng([params.seed, i]) for i in range(B)]
    if len(frame_rngs) != B:
        raise ValueError("need one generator per frame")

    # Frames live along the LAST axis so that check/symbol gathers copy
    # contiguous runs and the small reductions vectorize across frames.
    YT = np.ascontiguousarray(Y.T)
    XB = (YT < 0).astype(np.uint8)
    pools = None
    rngs = list(frame_rngs)
    if sigma_q > 0.0 and params.sample_reuse:
        pools = np.empty((NOISE_REGISTER_COUNT, B))
        for i, r in enumerate(rngs):
            pools[:, i] = r.standard_normal(NOISE_REGISTER_COUNT)
        pools *= sigma_q
        pools = np.ascontiguousarray(pools)
    taps = np.arange(H.n)
    rect = H.row_rect
    regular = rect is not None and H.col_rect is not None
    wdeg = (params.w * H.symbol_degrees.astype(np.float64))[:, None]
    w2 = 2.0 * params.w
    outcomes: list[DecodeOutcome | None] = [None] * B
    active = np.arange(B)
    # Finished frames are marked dead and dropped lazily once they make up
    # a quarter of the batch; copying every column set on every
    # convergence costs more than carrying a few idle columns.
    alive = np.ones(B, dtype=bool)
    # Fused loops cover the hot configuration (regular code, circulating
    # noise store); they are decision-identical to the numpy stages below.
    fused = _kernels.HAVE_NUMBA and regular and pools is not None
    if fused:
        rect = np.ascontiguousarray(rect)
        col_rect = np.ascontiguousarray(H.col_rect)
        wdeg1 = np.ascontiguousarray(wdeg[:, 0])

    for t in range(1, params.t_max + 2):
        if fused:
            syn = np.empty((H.m, XB.shape[1]), dtype=np.uint8)
            done = np.empty(XB.shape[1], dtype=np.bool_)
            _kernels.syndrome_select(XB, rect, syn, done)
            fresh_done = done & alive
        elif regular:
            syn = np.bitwise_xor.reduce(XB[rect], axis=1)
            fresh_done = ~syn.any(axis=0) & alive
        else:
            syn = (np.add.reduceat(XB[H.row_flat], H.row_starts,
                                   axis=0) & 1).astype(np.uint8)
            fresh_done = ~syn.any(axis=0) & alive
        if fresh_done.any():
            for r in np.flatnonzero(fresh_done):
                outcomes[active[r]] = DecodeOutcome(
                    bits_to_bipolar(XB[:, r]), True, t - 1)
            alive &= ~fresh_done
            if not alive.any():
                break
            ndead = active.size - int(alive.sum())
            if ndead >= max(8, active.size // 4):
                XB = np.ascontiguousarray(XB[:, alive])
                YT = np.ascontiguousarray(YT[:, alive])
                syn = np.ascontiguousarray(syn[:, alive])
                if pools is not None:
                    pools = np.ascontiguousarray(pools[:, alive])
                else:
                    rngs = [r for r, k in zip(rngs, alive) if k]
                active = active[alive]
                alive = np.ones(active.size, dtype=bool)
        if t == params.t_max + 1:
            for r in np.flatnonzero(alive):
                outcomes[active[r]] = DecodeOutcome(
                    bits_to_bipolar(XB[:, r]), False, params.t_max)
            break
        if fused:
            _kernels.count_flip(XB, YT, syn, col_rect, wdeg1, w2, params.theta,
                                pools, (t - 1) % NOISE_REGISTER_COUNT)
            continue
        if regular:
            c = syn[H.col_rect].sum(axis=1, dtype=np.uint8).astype(np.float64)
        else:
            c = np.add.reduceat(syn[H.col_flat].astype(np.float64),
                                H.col_starts, axis=0)
        g = (1.0 - 2.0 * XB) * YT
        g += wdeg
        np.multiply(c, w2, out=c)
        g -= c
        if sigma_q > 0.0:
            if pools is not None:
                g += pools[(taps - (t - 1)) % NOISE_REGISTER_COUNT]
            else:
                for r in range(active.size):
                    g[:, r] += rngs[r].standard_normal(H.n) * sigma_q
        XB ^= g < params.theta

    return outcomes


# ---------------------------------------------------------------------------
# Noise-scale calibration


@dataclass
class EtaPoint:
    eta: float
    frames: int
    bits: int
    bit_errors: int
    frame_errors: int
    avg_iterations: float

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ci95_ber(self) -> float:
        """95% normal-approximation half-width on the bit error rate."""
        if not self.bits:
            return 0.0
        p = self.ber
        return 1.96 * float(np.sqrt(p * (1.0 - p) / self.bits))


@dataclass
class EtaCalibration:
    ebn0_db: float
    frames_per_point: int
    seed: int
    points: list[EtaPoint]

    @property
    def best_eta(self) -> float:
        """Grid value with the lowest bit error count (first on ties)."""
        best = min(self.points, key=lambda p: p.bit_errors)
        return best.eta


def calibrate_eta(H: ParityCheckMatrix, ebn0_db: float, etas=None,
                  frames: int = 500, rate: float = DEFAULT_RATE,
                  w: float = DEFAULT_W, theta: float = DEFAULT_THETA,
                  t_max: int = DEFAULT_T, seed: int = 0,
                  sample_reuse: bool = False, block: int = 512) -> EtaCalibration:
    """Sweep the noise scale on all-zero-codeword frames and rank by BER.

    The same per-frame channel noise and decoder generator seeds are used
    for every grid value (common random numbers), so grid points differ
    only through the decoder's noise scale.
    """
    if etas is None:
        etas = [0.0] + [round(0.4 + 0.1 * i, 2) for i in range(7)]
    ch = ChannelParams(ebn0_db, rate)
    points = []
    for eta in etas:
        params = NgdbfParams(w=w, theta=theta, eta=eta, n0=ch.n0, t_max=t_max,
                             seed=seed, sample_reuse=sample_reuse)
        bit_err = 0
        frame_err = 0
        iters = 0
        for lo in range(0, frames, block):
            hi = min(lo + block, frames)
            Y = np.empty((hi - lo, H.n))
            for i, f in enumerate(range(lo, hi)):
                Y[i] = 1.0 + ch.noise_sigma * frame_rng(seed, f, STREAM_CHANNEL).standard_normal(H.n)
            dec_rngs = [frame_rng(seed, f, STREAM_DECODER) for f in range(lo, hi)]
            for out in decode_batch(Y, H, params, dec_rngs):
                nerr = int(np.sum(out.decisions != 1))
                bit_err += nerr
                frame_err += nerr > 0
                iters += out.iterations
        points.append(EtaPoint(eta, frames, frames * H.n, bit_err, frame_err,
                               iters / frames))
    return EtaCalibration(ebn0_db, frames, seed, points)
