"""Default operating parameters shared across the package.

Values marked "calibrated" were produced by :func:`ngdbf.reference.calibrate_eta`
on the built-in parity-check matrix; the calibration record below is enough to
reproduce the run exactly.
"""

from __future__ import annotations

# Gradient-descent objective / flip-rule parameters.
DEFAULT_W = 1.0 / 6.0       # check-to-symbol weight (1/dv for the dv=6 code)
DEFAULT_THETA = -0.55       # flip threshold (must be negative)
DEFAULT_T = 600             # iteration cap

# Code-class constants.
DEFAULT_RATE = 0.841        # information rate used for Eb/N0 <-> sigma conversion

# Decoder clock used by the throughput model.
DEFAULT_CLOCK_HZ = 133.33e6

# Number of 6-bit noise registers in the circulating file.  Larger than the
# 2048 symbol nodes so consecutive reuse of a stored sample by the same node
# only happens after a full circulation.
NOISE_REGISTER_COUNT = 2648

# Noise scale eta (q_k has standard deviation eta * sqrt(N0/2)).  Calibrated
# by minimizing BER at 4.0 dB over the grid below; see CALIBRATION.  The
# recorded run measured BER 9.888e-5 at eta=0.90 against 1.227e-4 (0.85)
# and 1.362e-4 (0.95), a gap beyond the 95% counting interval.
DEFAULT_ETA = 0.9

CALIBRATION = {
    "eta": DEFAULT_ETA,
    "ebn0_db": 4.0,
    "grid": [0.0] + [round(0.4 + 0.05 * i, 2) for i in range(13)],
    "frames_per_point": 4000,
    "seed": 20260823,
    "sample_reuse": True,
}
