"""Bit-accurate functional model of the fixed-point decoder datapath.

The model covers the noise update unit (NUU) that preloads 2648 processed
6-bit words into a circulating register file, the symbol-node arithmetic
(sign-magnitude product term, Table-driven scaled syndrome sum, saturating
7-bit add, sign-only comparison against the stored noise word), XOR check
nodes, the early-termination OR (ETU), and the two-phase controller.  One
decoding iteration corresponds to one simulated cycle.

Scalar operations mirror the gate-level structure and are used by tests;
``HardwareDecoder`` evaluates the identical semantics with array code.
``decode_fixed_emulation`` is a separately-formulated integer model (no
saturating intermediate) used as an equivalence oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import gaussian_unit_sixteenths
from .code import ParityCheckMatrix
from .defaults import DEFAULT_T, DEFAULT_THETA, NOISE_REGISTER_COUNT
from .fixedpoint import (FixedSM7, NOISE_MAX_MAG, NoiseWord6, Q24_MAX_MAG,
                         drop_integer_msb, sm_add_saturating, sm_multiply)
from .reference import DecodeOutcome, bits_to_bipolar

# Scaled syndrome sum: count of unsatisfied checks (0..6) -> output word.
# The bit patterns are authoritative (sign, two integer bits, four fraction
# bits); counts 1,2,4,5 are truncations of +/-2/3 and +/-1/3, not roundings.
LUT_BITS = ("0010000", "0001010", "0000101", "0000000",
            "1000101", "1001010", "1010000")
LUT_SIXTEENTHS = tuple(
    (-1 if b[0] == "1" else 1) * int(b[1:], 2) for b in LUT_BITS)

# Default quantized threshold: Q2.4 round of -0.55.
THETA_Q_DEFAULT = FixedSM7(-1, 9)


@dataclass(frozen=True)
class HwConfig:
    """Static ports of the datapath: quantized threshold and StdDev input."""

    theta_q: FixedSM7 = THETA_Q_DEFAULT
    std_dev_q: FixedSM7 = FixedSM7(1, 0)
    t_max: int = DEFAULT_T
    seed: int = 0
    mul_mode: str = "round"

    def __post_init__(self) -> None:
        if self.theta_q.sixteenths >= 0:
            raise ValueError("quantized threshold must be negative")
        if self.std_dev_q.sign < 0:
            raise ValueError("StdDev must be non-negative")
        if self.t_max < 1:
            raise ValueError("iteration cap must be at least 1")
        if self.mul_mode not in ("round", "truncate"):
            raise ValueError(f"unknown multiplier mode {self.mul_mode!r}")


def hw_config_from_float(eta: float, noise_sigma: float,
                         theta: float = DEFAULT_THETA,
                         t_max: int = DEFAULT_T, seed: int = 0,
                         mul_mode: str = "round") -> HwConfig:
    """Quantize a floating-point operating point onto the datapath ports."""
    return HwConfig(theta_q=FixedSM7.from_float(theta),
                    std_dev_q=FixedSM7.from_float(eta * noise_sigma),
                    t_max=t_max, seed=seed, mul_mode=mul_mode)


# ---------------------------------------------------------------------------
# NUU


def nuu_process_sample(q: FixedSM7, cfg: HwConfig) -> NoiseWord6:
    """Process one unit-normal sample into a stored register word.

    Computes ``p = q * StdDev`` on the sign-magnitude multiplier, adds the
    (negated) threshold on the saturating 7-bit adder so the word carries
    ``q*sigma_q - theta``, then drops the magnitude MSB to six bits.
    """
    word, _ = _nuu_process(q, cfg)
    return word


def _nuu_process(q: FixedSM7, cfg: HwConfig) -> tuple[NoiseWord6, int]:
    p = sm_multiply(q, cfg.std_dev_q, cfg.mul_mode)
    u = sm_add_saturating(p, -cfg.theta_q)
    return drop_integer_msb(u)


def nuu_words_sixteenths(q16: np.ndarray, cfg: HwConfig) -> tuple[np.ndarray, int]:
    """Array form of :func:`nuu_process_sample` over signed sixteenths.

    Returns the stored words and the number of samples whose dropped
    magnitude MSB was 1 (the wrap diagnostic).
    """
    q16 = np.asarray(q16, dtype=np.int64)
    raw = np.abs(q16) * cfg.std_dev_q.mag          # units of 1/256
    if cfg.mul_mode == "round":
        mag = (raw + 8) // 16
    else:
        mag = raw // 16
    np.minimum(mag, Q24_MAX_MAG, out=mag)
    p16 = np.where(q16 < 0, -mag, mag)
    u16 = np.clip(p16 + (-cfg.theta_q).sixteenths, -Q24_MAX_MAG, Q24_MAX_MAG)
    umag = np.abs(u16)
    dropped = int(np.count_nonzero(umag >> 5))
    wmag = umag & NOISE_MAX_MAG
    return np.where(u16 < 0, -wmag, wmag).astype(np.int16), dropped


class NoiseRegisterFile:
    """The 2648-word circulating store of processed noise words.

    A shift moves every word from register ``r`` to ``r+1`` (top to bottom)
    with wraparound; symbol node ``k`` always taps register ``k``.  Shifting
    is modeled as a moving read offset, so the multiset of contents never
    changes.
    """

    def __init__(self, words):
        if isinstance(words, np.ndarray):
            arr = words.astype(np.int16)
        else:
            arr = np.array([w.sixteenths if isinstance(w, FixedSM7) else int(w)
                            for w in words], dtype=np.int16)
        if arr.shape != (NOISE_REGISTER_COUNT,):
            raise ValueError(
                f"register file holds exactly {NOISE_REGISTER_COUNT} words, got {arr.size}")
        if np.any(np.abs(arr) > NOISE_MAX_MAG):
            raise ValueError("register word magnitude exceeds 6-bit range")
        self._base = arr
        self._base.flags.writeable = False
        self.offset = 0
        self.msb_drop_count = 0

    def __len__(self) -> int:
        return NOISE_REGISTER_COUNT

    @property
    def base_sixteenths(self) -> np.ndarray:
        """The loaded word image in load order (ignores the shift offset)."""
        return self._base

    def shift(self) -> None:
        self.offset = (self.offset + 1) % NOISE_REGISTER_COUNT

    def contents_sixteenths(self) -> np.ndarray:
        """Current contents in register order (index 0 = register 1)."""
        idx = (np.arange(NOISE_REGISTER_COUNT) - self.offset) % NOISE_REGISTER_COUNT
        return self._base[idx]

    def taps(self, count: int) -> np.ndarray:
        """Sixteenths seen by symbol nodes 0..count-1 this cycle."""
        if not 1 <= count <= NOISE_REGISTER_COUNT:
            raise ValueError("tap count outside register file")
        idx = (np.arange(count) - self.offset) % NOISE_REGISTER_COUNT
        return self._base[idx]

    def word(self, k: int) -> NoiseWord6:
        """Current word in register ``k`` (0-based)."""
        v = int(self._base[(k - self.offset) % NOISE_REGISTER_COUNT])
        return NoiseWord6(1 if v >= 0 else -1, abs(v))


def nuu_load(samples, cfg: HwConfig,
             phase: "PhaseController | None" = None) -> NoiseRegisterFile:
    """Startup phase: process 2648 samples, one per cycle, into the file.

    ``samples`` may be FixedSM7 objects or signed sixteenths.  The returned
    file records how often the dropped magnitude MSB was set.
    """
    if isinstance(samples, np.ndarray):
        q16 = samples.astype(np.int64)
    else:
        q16 = np.array([s.sixteenths if isinstance(s, FixedSM7) else int(s)
                        for s in samples], dtype=np.int64)
    if q16.shape != (NOISE_REGISTER_COUNT,):
        raise ValueError(
            f"startup consumes exactly {NOISE_REGISTER_COUNT} samples, got {q16.size}")
    if np.any(np.abs(q16) > Q24_MAX_MAG):
        raise ValueError("noise sample outside Q2.4 range")
    words, dropped = nuu_words_sixteenths(q16, cfg)
    if phase is not None:
        for _ in range(NOISE_REGISTER_COUNT):
            phase.startup_cycle()
    file = NoiseRegisterFile(words)
    file.msb_drop_count = dropped
    return file


# ---------------------------------------------------------------------------
# Symbol node building blocks


def _full_adder(a: int, b: int, cin: int) -> tuple[int, int]:
    return a ^ b ^ cin, (a & b) | (cin & (a ^ b))


def _half_adder(a: int, b: int) -> tuple[int, int]:
    return a ^ b, a & b


def popcount6(bits) -> int:
    """Count set bits among six syndrome inputs via the adder tree.

    Three full adders and a half adder produce a 3-bit count C2 C1 C0.
    """
    b = [int(x) for x in bits]
    if len(b) != 6 or any(x not in (0, 1) for x in b):
        raise ValueError("popcount6 takes exactly six bits")
    s1, c1 = _full_adder(b[0], b[1], b[2])
    s2, c2 = _full_adder(b[3], b[4], b[5])
    c0, c3 = _half_adder(s1, s2)
    c1_out, c2_out = _full_adder(c1, c2, c3)
    return c0 + 2 * c1_out + 4 * c2_out


def syndrome_scale_lut(count: int) -> FixedSM7:
    """Scaled syndrome sum word for a given unsatisfied-check count."""
    if not 0 <= count <= 6:
        raise ValueError("count must lie in 0..6")
    return FixedSM7.from_sixteenths(LUT_SIXTEENTHS[count])


def sign_compute(t12: FixedSM7, word: NoiseWord6) -> bool:
    """Sign of ``t12 + word``; True means strictly negative (flip).

    Only the sign is needed, so a tie at exactly zero reports False
    (no flip), matching the strict threshold comparison.
    """
    return t12.sixteenths + word.sixteenths < 0


def symbol_node_update(x_bit: int, y_q: FixedSM7, syndromes, word: NoiseWord6) -> int:
    """One symbol node cycle: returns the new decision bit.

    ``t1`` applies the current decision's sign to the channel magnitude,
    ``t2`` is the Table-driven scaled syndrome sum; their saturating 7-bit
    sum goes to sign-compute together with the node's register word, and
    the decision is XORed with the resulting flip indicator.
    """
    if x_bit not in (0, 1):
        raise ValueError("decision bit must be 0 or 1")
    s = y_q.sign * (1 - 2 * x_bit)
    t1 = FixedSM7(1 if y_q.mag == 0 else s, y_q.mag)
    t2 = syndrome_scale_lut(popcount6(syndromes))
    t12 = sm_add_saturating(t1, t2)
    flip = sign_compute(t12, word)
    return x_bit ^ int(flip)


def check_node(decisions) -> int:
    """32-input XOR: returns the syndrome bit (1 = unsatisfied)."""
    b = [int(x) for x in decisions]
    if len(b) != 32 or any(x not in (0, 1) for x in b):
        raise ValueError("check node takes exactly 32 decision bits")
    out = 0
    for x in b:
        out ^= x
    return out


def etu(syndrome_bits) -> bool:
    """Early termination: converged when the OR over all syndromes is 0."""
    bits = np.asarray(syndrome_bits)
    if bits.size == 0:
        raise ValueError("ETU needs at least one syndrome bit")
    return not bool(np.any(bits != 0))


# ---------------------------------------------------------------------------
# Phase control


@dataclass
class PhaseState:
    phase: str
    cycle: int
    first_frame: int
    enable: int


class PhaseController:
    """Tracks the two-phase control flags.

    Flag rows: (FirstFrame, Enable) = (0,0) during startup, (1,1) on the
    cycle a new frame is loaded, (1,0) on each decoding iteration cycle.
    Startup lasts exactly 2648 cycles.
    """

    def __init__(self) -> None:
        self.state = PhaseState("startup", 0, 0, 0)

    def startup_cycle(self) -> None:
        if self.state.phase != "startup":
            raise RuntimeError("startup cycles only occur in phase 1")
        self.state.cycle += 1
        if self.state.cycle == NOISE_REGISTER_COUNT:
            self.state.phase = "decode"

    def load_frame(self) -> None:
        if self.state.phase != "decode":
            raise RuntimeError("frames load only after startup completes")
        self.state.first_frame, self.state.enable = 1, 1
        self.state.cycle += 1

    def iteration_cycle(self) -> None:
        if self.state.phase != "decode":
            raise RuntimeError("iterations only occur in phase 2")
        self.state.first_frame, self.state.enable = 1, 0
        self.state.cycle += 1


# ---------------------------------------------------------------------------
# Whole-datapath decoding


class HardwareDecoder:
    """Cycle-level functional model owning one noise register file.

    As in the silicon, startup runs once per instance; the register file
    keeps circulating across frames.  Use a fresh instance (or
    :func:`decode_hw`) for per-frame-reload experiments.
    """

    def __init__(self, H: ParityCheckMatrix, cfg: HwConfig, noise_samples=None):
        if H.n > NOISE_REGISTER_COUNT:
            raise ValueError("more symbols than noise registers")
        self.H = H
        self.cfg = cfg
        self.phase = PhaseController()
        if noise_samples is None:
            rng = np.random.default_rng(cfg.seed)
            noise_samples = gaussian_unit_sixteenths(NOISE_REGISTER_COUNT, rng)
        self.file = nuu_load(noise_samples, cfg, phase=self.phase)

    def decode_frame(self, y_q, trace: bool = False) -> DecodeOutcome:
        """Decode one frame of quantized samples (FixedSM7 or sixteenths)."""
        H = self.H
        if isinstance(y_q, np.ndarray):
            y16 = y_q.astype(np.int64)
        else:
            y16 = np.array([v.sixteenths if isinstance(v, FixedSM7) else int(v)
                            for v in y_q], dtype=np.int64)
        if y16.shape != (H.n,):
            raise ValueError(f"expected {H.n} samples, got {y16.size}")
        if np.any(np.abs(y16) > Q24_MAX_MAG):
            raise ValueError("channel sample outside Q2.4 range")

        self.phase.load_frame()
        xb = (y16 < 0).astype(np.uint8)
        traj = [xb.copy()] if trace else None
        lut = np.array(LUT_SIXTEENTHS, dtype=np.int64)
        rect = H.row_rect
        converged = False
        iterations = self.cfg.t_max

        for t in range(1, self.cfg.t_max + 2):
            if rect is not None:
                syn = np.bitwise_xor.reduce(xb[rect], axis=1)
            else:
                syn = np.add.reduceat(xb[H.row_flat], H.row_starts).astype(np.uint8) & 1
            if etu(syn):
                converged = True
                iterations = t - 1
                break
            if t == self.cfg.t_max + 1:
                break
            self.phase.iteration_cycle()
            if H.col_rect is not None:
                c = syn[H.col_rect].sum(axis=1, dtype=np.int64)
            else:
                c = np.add.reduceat(syn[H.col_flat].astype(np.int64), H.col_starts)
            t1 = (1 - 2 * xb.astype(np.int64)) * y16
            t12 = np.clip(t1 + lut[c], -Q24_MAX_MAG, Q24_MAX_MAG)
            total = t12 + self.file.taps(H.n)
            xb ^= total < 0
            self.file.shift()
            if trace:
                traj.append(xb.copy())

        return DecodeOutcome(bits_to_bipolar(xb), converged, iterations, traj)


def decode_hw(y_q, H: ParityCheckMatrix, cfg: HwConfig, noise_samples,
              trace: bool = False) -> DecodeOutcome:
    """One frame through a freshly loaded datapath (startup + decode)."""
    return HardwareDecoder(H, cfg, noise_samples).decode_frame(y_q, trace=trace)


def decode_fixed_emulation(y16, H: ParityCheckMatrix, words16,
                           t_max: int = DEFAULT_T, start_offset: int = 0,
                           trace: bool = False) -> DecodeOutcome:
    """Reference decoder re-run in the fixed-point value system.

    Works directly on integer sixteenths with exact (unsaturated)
    arithmetic: flip when ``x*y + lut + word < 0``, where the words already
    carry ``-theta``.  Because stored magnitudes never exceed 31 while any
    saturated intermediate is at least 32 from zero, the saturating adder
    in the datapath can never change the sign, so this independent
    formulation must match the datapath bit for bit.
    """
    y16 = np.asarray(y16, dtype=np.int64)
    words = np.asarray(words16, dtype=np.int64)
    if words.shape != (NOISE_REGISTER_COUNT,):
        raise ValueError("expected a full register image")
    lut = np.array(LUT_SIXTEENTHS, dtype=np.int64)
    xb = (y16 < 0).astype(np.uint8)
    traj = [xb.copy()] if trace else None
    taps = np.arange(H.n)
    rect = H.row_rect
    converged = False
    iterations = t_max

    for t in range(1, t_max + 2):
        if rect is not None:
            syn = np.bitwise_xor.reduce(xb[rect], axis=1)
        else:
            syn = np.add.reduceat(xb[H.row_flat], H.row_starts).astype(np.uint8) & 1
        if not syn.any():
            converged = True
            iterations = t - 1
            break
        if t == t_max + 1:
            break
        if H.col_rect is not None:
            c = syn[H.col_rect].sum(axis=1, dtype=np.int64)
        else:
            c = np.add.reduceat(syn[H.col_flat].astype(np.int64), H.col_starts)
        word = words[(taps - (t - 1 + start_offset)) % NOISE_REGISTER_COUNT]
        total = (1 - 2 * xb.astype(np.int64)) * y16 + lut[c] + word
        xb ^= total < 0
        if trace:
            traj.append(xb.copy())

    return DecodeOutcome(bits_to_bipolar(xb), converged, iterations, traj)


# ---------------------------------------------------------------------------
# Noise word file I/O (one signed-sixteenths value per line)


def write_noise_file(f, values16) -> None:
    """Write words/samples as signed decimal sixteenths, one per line."""
    for v in np.asarray(values16):
        f.write(f"{int(v)}\n")


def read_noise_file(f, max_mag: int = Q24_MAX_MAG) -> np.ndarray:
    """Read a 2648-line sixteenths file, validating count and range."""
    vals = []
    for lineno, line in enumerate(f, start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = int(s)
        except ValueError:
            raise ValueError(f"line {lineno}: {s!r} is not an integer") from None
        if abs(v) > max_mag:
            raise ValueError(f"line {lineno}: magnitude {abs(v)} exceeds {max_mag}")
        vals.append(v)
    if len(vals) != NOISE_REGISTER_COUNT:
        raise ValueError(
            f"expected {NOISE_REGISTER_COUNT} values, got {len(vals)}")
    return np.array(vals, dtype=np.int16)
