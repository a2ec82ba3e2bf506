"""Sign-magnitude fixed-point types and exact Q2.4 arithmetic.

The decoder datapath carries values in a 7-bit sign-magnitude format: one
sign bit, two integer bits, four fraction bits, so the resolution is 1/16
and magnitudes span 0..63 sixteenths (0..3.9375).  Noise words stored in
the circulating register file drop the magnitude MSB and keep six bits
(magnitude 0..31 sixteenths).

All arithmetic in this module is exact integer arithmetic on magnitudes
expressed in sixteenths; floats only appear at the quantization boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

SCALE = 16                # sixteenths per unit (four fraction bits)
Q24_MAX_MAG = 63          # six magnitude bits
NOISE_MAX_MAG = 31        # five magnitude bits (integer MSB dropped)
CHANNEL_SAT_MAG = 47      # channel clip 2.95 -> largest representable below it


def round_half_away_sixteenths(mag: float) -> int:
    """Round a non-negative magnitude (in units) to integer sixteenths.

    Ties (exact half-sixteenth) round away from zero.  The comparison is done
    against the true scaled value rather than via ``floor(x + 0.5)``, which
    can misround when ``x + 0.5`` is not representable.
    """
    if mag < 0:
        raise ValueError("magnitude must be non-negative")
    scaled = mag * SCALE
    base = int(scaled)
    if scaled - base >= 0.5:
        base += 1
    return base


def quantize_magnitude(mag: float, max_mag: int) -> int:
    """Round ``mag`` (units) to sixteenths and saturate at ``max_mag``."""
    return min(round_half_away_sixteenths(mag), max_mag)


@dataclass(frozen=True)
class FixedSM7:
    """A 7-bit sign-magnitude Q2.4 value: ``sign * mag / 16``.

    ``sign`` is +1 or -1 and ``mag`` is an integer in 0..63.  Zero is
    canonical: ``mag == 0`` forces ``sign == +1``.
    """

    sign: int
    mag: int

    MAX_MAG = Q24_MAX_MAG

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not 0 <= self.mag <= self.MAX_MAG:
            raise ValueError(f"magnitude {self.mag} outside 0..{self.MAX_MAG}")
        if self.mag == 0 and self.sign != 1:
            raise ValueError("zero must carry a + sign")

    @property
    def value(self) -> float:
        return self.sign * self.mag / SCALE

    @property
    def sixteenths(self) -> int:
        """Signed integer value in sixteenths."""
        return self.sign * self.mag

    def bits(self) -> str:
        """Bit pattern, sign bit first then magnitude MSB..LSB."""
        return ("1" if self.sign < 0 else "0") + format(self.mag, "06b")

    def __neg__(self) -> "FixedSM7":
        if self.mag == 0:
            return self
        return type(self)(-self.sign, self.mag)

    @classmethod
    def from_sixteenths(cls, v: int) -> "FixedSM7":
        return cls(1 if v >= 0 else -1, abs(v))

    @classmethod
    def from_float(cls, x: float, max_mag: int | None = None) -> "FixedSM7":
        """Quantize ``x`` with round-half-away-from-zero, saturating."""
        cap = cls.MAX_MAG if max_mag is None else max_mag
        mag = quantize_magnitude(abs(x), cap)
        if mag == 0:
            return cls(1, 0)
        return cls(1 if x >= 0 else -1, mag)


@dataclass(frozen=True)
class NoiseWord6(FixedSM7):
    """A 6-bit sign-magnitude register word (one integer bit, magnitude 0..31)."""

    MAX_MAG = NOISE_MAX_MAG

    def bits(self) -> str:
        return ("1" if self.sign < 0 else "0") + format(self.mag, "05b")


def sm_multiply(a: FixedSM7, b: FixedSM7, mode: str = "round") -> FixedSM7:
    """Multiply two Q2.4 sign-magnitude values back into Q2.4.

    The raw magnitude product has eight fraction bits; ``mode`` selects how
    the low four are removed ("round" = half away from zero, "truncate" =
    drop).  The result saturates at the Q2.4 maximum.
    """
    raw = a.mag * b.mag  # units of 1/256
    if mode == "round":
        mag = (raw + SCALE // 2) // SCALE
    elif mode == "truncate":
        mag = raw // SCALE
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    mag = min(mag, Q24_MAX_MAG)
    if mag == 0:
        return FixedSM7(1, 0)
    return FixedSM7(a.sign * b.sign, mag)


def sm_add_saturating(a: FixedSM7, b: FixedSM7) -> FixedSM7:
    """Signed addition with symmetric saturation at +/-63 sixteenths."""
    s = a.sixteenths + b.sixteenths
    s = max(-Q24_MAX_MAG, min(Q24_MAX_MAG, s))
    return FixedSM7.from_sixteenths(s)


def drop_integer_msb(u: FixedSM7) -> tuple[NoiseWord6, int]:
    """Narrow a Q2.4 value to a 6-bit register word by dropping magnitude bit 5.

    Returns the narrowed word and the dropped bit.  When the dropped bit is 1
    the magnitude wraps (mod 32); callers count those events as a diagnostic
    since the operating point is chosen so the bit is almost always 0.
    """
    dropped = (u.mag >> 5) & 1
    mag = u.mag & NOISE_MAX_MAG
    sign = 1 if mag == 0 else u.sign
    return NoiseWord6(sign, mag), dropped
