"""BPSK/AWGN channel model and the front-end sample quantizer.

Eb/N0 is converted to noise variance through the code rate: with unit
symbol energy, ``sigma^2 = 1 / (2 * R * 10**(EbN0_dB / 10))``.  Received
samples are clipped to +/-2.95 before quantization, which makes +/-2.9375
(47 sixteenths) the largest magnitudes the Q2.4 front end ever produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .defaults import DEFAULT_RATE
from .fixedpoint import CHANNEL_SAT_MAG, FixedSM7, SCALE

CHANNEL_CLIP = 2.95

# Sub-stream identifiers for per-frame seeding.  Every frame of a run gets
# independent generators keyed by (master seed, frame index, stream), which
# makes results invariant to batching and worker layout.
STREAM_CHANNEL = 0
STREAM_DECODER = 1


def frame_rng(seed: int, frame: int, stream: int) -> np.random.Generator:
    """Deterministic per-frame, per-purpose generator."""
    return np.random.default_rng([seed, frame, stream])


@dataclass(frozen=True)
class ChannelParams:
    """Operating point of the AWGN channel."""

    ebn0_db: float
    rate: float = DEFAULT_RATE
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.ebn0_db):
            raise ValueError("Eb/N0 must be finite")
        if not 0.0 < self.rate < 1.0:
            raise ValueError("rate must lie in (0, 1)")

    @property
    def noise_variance(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))

    @property
    def noise_sigma(self) -> float:
        return float(np.sqrt(self.noise_variance))

    @property
    def n0(self) -> float:
        """One-sided noise density for unit symbol energy (2 * sigma^2)."""
        return 2.0 * self.noise_variance


def bpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Map bits {0,1} to symbols {+1,-1}."""
    bits = np.asarray(bits)
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0/1")
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def transmit(symbols: np.ndarray, params: ChannelParams,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Add white Gaussian noise to +/-1 symbols."""
    symbols = np.asarray(symbols, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    return symbols + params.noise_sigma * rng.standard_normal(symbols.size)


def quantize_sixteenths(y: np.ndarray, max_mag: int) -> np.ndarray:
    """Vectorized sign-magnitude quantization to signed integer sixteenths.

    Rounds half away from zero and saturates the magnitude at ``max_mag``.
    The tie test compares the scaled magnitude against its floor instead of
    adding 0.5, which stays exact for every float input.
    """
    y = np.asarray(y, dtype=np.float64)
    scaled = np.abs(y) * SCALE
    base = np.floor(scaled)
    mag = (base + (scaled - base >= 0.5)).astype(np.int64)
    np.minimum(mag, max_mag, out=mag)
    return np.where(y < 0, -mag, mag).astype(np.int16)


def quantize_channel_sixteenths(y: np.ndarray) -> np.ndarray:
    """Channel-sample quantization (clip at 2.95, then Q2.4 round)."""
    y = np.clip(np.asarray(y, dtype=np.float64), -CHANNEL_CLIP, CHANNEL_CLIP)
    return quantize_sixteenths(y, CHANNEL_SAT_MAG)


def quantize_channel(y: float) -> FixedSM7:
    """Scalar convenience wrapper around :func:`quantize_channel_sixteenths`."""
    return FixedSM7.from_sixteenths(int(quantize_channel_sixteenths(np.array([y]))[0]))


def gaussian_unit_sixteenths(count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-normal draws quantized exactly like channel samples.

    These model the external N(0,1) source feeding the noise update unit;
    scaling by the working standard deviation happens downstream in the
    datapath, not here.
    """
    return quantize_channel_sixteenths(rng.standard_normal(count))


def gaussian_unit_samples(count: int, seed: int = 0) -> list[FixedSM7]:
    rng = np.random.default_rng(seed)
    return [FixedSM7.from_sixteenths(int(v)) for v in gaussian_unit_sixteenths(count, rng)]
