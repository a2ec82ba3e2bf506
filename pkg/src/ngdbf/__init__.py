"""Gradient-descent bit-flip LDPC decoding testbench.

Floating-point reference decoder, a bit-accurate model of the fixed-point
decoder datapath, and a Monte Carlo AWGN simulation harness for the
(6,32)-regular 2048-bit code class used by 10GBASE-T.
"""

from .channel import (ChannelParams, bpsk_modulate, gaussian_unit_samples,
                      quantize_channel, transmit)
from .code import (AlistFormatError, ParityCheckMatrix, build_rs_ldpc,
                   gf2_rank, parse_alist, serialize_alist, syndrome,
                   validate_regular)
from .defaults import (DEFAULT_ETA, DEFAULT_RATE, DEFAULT_T, DEFAULT_THETA,
                       DEFAULT_W, NOISE_REGISTER_COUNT)
from .fixedpoint import FixedSM7, NoiseWord6
from .hardware import (HardwareDecoder, HwConfig, NoiseRegisterFile,
                       decode_fixed_emulation, decode_hw, hw_config_from_float,
                       nuu_load, nuu_process_sample, popcount6,
                       syndrome_scale_lut)
from .harness import (BerPoint, StoppingRule, SweepReport, run_ber_point,
                      run_sweep, throughput_model, uncoded_bpsk_ber)
from .reference import (DecodeOutcome, NgdbfParams, calibrate_eta, decode,
                        decode_batch, inversion_metric, objective)

__version__ = "0.1.0"
