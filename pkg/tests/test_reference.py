"""Floating-point decoder: objective/metric arithmetic, convergence
semantics, trajectory equality against a scalar pure-Python oracle, and
the batch path's bit-for-bit agreement with single-frame decoding."""

import math

import numpy as np
import pytest

from ngdbf.channel import (ChannelParams, STREAM_CHANNEL, STREAM_DECODER,
                           bpsk_modulate, frame_rng)
from ngdbf.code import ParityCheckMatrix, build_rs_ldpc, syndrome
from ngdbf.defaults import NOISE_REGISTER_COUNT
from ngdbf.reference import (DecodeOutcome, NgdbfParams, bits_to_bipolar,
                             calibrate_eta, decode, decode_batch,
                             inversion_metric, objective)


def small_matrix() -> ParityCheckMatrix:
    return ParityCheckMatrix.from_columns(2, 4, [[0], [0, 1], [0, 1], [1]])


def small_regular() -> ParityCheckMatrix:
    """(3,5)-regular 48x80 code via the field construction over GF(16)."""
    return build_rs_ldpc(row_blocks=3, col_blocks=5, field_bits=4,
                         primitive_poly=0b10011)


# ---------------------------------------------------------------------------
# Objective and per-symbol metric


def test_objective_hand_example():
    H = small_matrix()
    x = np.array([1, 1, 1, 1])
    y = np.array([0.5, -0.2, 1.0, 0.3])
    assert math.isclose(objective(x, y, H), 3.6, rel_tol=1e-12)


def test_objective_maximum_at_agreeing_codeword():
    H = small_matrix()
    rng = np.random.default_rng(0)
    y = np.abs(rng.standard_normal(H.n)) + 0.01   # all positive
    x = np.sign(y).astype(int)                    # all +1: both checks pass
    assert math.isclose(objective(x, y, H), np.sum(np.abs(y)) + H.m,
                        rel_tol=1e-12)


def test_objective_single_flip_delta_identity():
    H = small_regular()
    rng = np.random.default_rng(1)
    y = rng.standard_normal(H.n)
    x = rng.choice([-1, 1], H.n)
    base = objective(x, y, H)
    for k in map(int, rng.choice(H.n, 8, replace=False)):
        s_k = syndrome(H, x)[H.col_nbrs[k]]
        x2 = x.copy()
        x2[k] = -x2[k]
        delta = -2.0 * x[k] * y[k] - 2.0 * np.sum(s_k)
        assert math.isclose(objective(x2, y, H), base + delta, rel_tol=1e-9)


def test_objective_rejects_length_mismatch():
    with pytest.raises(ValueError):
        objective(np.ones(3), np.ones(4), small_matrix())


def test_inversion_metric_examples():
    assert inversion_metric(1.0, 1.0, [1] * 6, w=1 / 6) == pytest.approx(2.0)
    assert inversion_metric(1.0, -0.8, [-1] * 6, w=1 / 6) == pytest.approx(-1.8)
    assert inversion_metric(1.0, 0.3, [1, 1, -1, 1, 1, 1], w=1 / 6,
                            q_k=0.25) == pytest.approx(0.3 + 4 / 6 + 0.25)


# ---------------------------------------------------------------------------
# Parameter validation


def test_params_validation():
    with pytest.raises(ValueError):
        NgdbfParams(w=0.0)
    with pytest.raises(ValueError):
        NgdbfParams(theta=0.0)
    with pytest.raises(ValueError):
        NgdbfParams(eta=1.5)
    with pytest.raises(ValueError):
        NgdbfParams(eta=-0.1)
    with pytest.raises(ValueError):
        NgdbfParams(t_max=0)
    with pytest.raises(ValueError):
        NgdbfParams(n0=0.0)
    NgdbfParams(eta=0.0)          # noiseless needs no n0


def test_noise_requires_density():
    H = small_matrix()
    params = NgdbfParams(eta=0.5, n0=None)
    with pytest.raises(ValueError, match="n0"):
        decode(np.array([1.0, -1.0, 1.0, 1.0]), H, params)


def test_decode_rejects_length_mismatch():
    with pytest.raises(ValueError, match="expected 4"):
        decode(np.ones(5), small_matrix(), NgdbfParams(eta=0.0))


# ---------------------------------------------------------------------------
# Convergence semantics


def test_clean_codewords_cost_zero_iterations():
    H = small_matrix()
    for bits in ([0, 0, 0, 0], [1, 1, 0, 1], [0, 1, 1, 0]):
        y = bpsk_modulate(np.array(bits)).astype(float) * 0.9
        out = decode(y, H, NgdbfParams(eta=0.0))
        assert out.converged
        assert out.iterations == 0
        np.testing.assert_array_equal(out.decisions, bpsk_modulate(np.array(bits)))


def test_unreachable_threshold_freezes_hard_decision():
    H = small_regular()
    rng = np.random.default_rng(2)
    y = rng.standard_normal(H.n)
    params = NgdbfParams(eta=0.0, theta=-1e3, t_max=5)
    out = decode(y, H, params, trace=True)
    hard = np.where(y < 0, -1, 1)
    np.testing.assert_array_equal(out.decisions, hard)
    assert not out.converged
    assert out.iterations == 5
    # Every traced state equals the initial one: a fixed point.
    for state in out.trajectory:
        np.testing.assert_array_equal(bits_to_bipolar(state), hard)
    assert len(out.trajectory) == 6


def test_noiseless_decode_ignores_seed():
    H = small_regular()
    y = np.random.default_rng(3).standard_normal(H.n)
    a = decode(y, H, NgdbfParams(eta=0.0, seed=1))
    b = decode(y, H, NgdbfParams(eta=0.0, seed=999))
    np.testing.assert_array_equal(a.decisions, b.decisions)
    assert a.iterations == b.iterations


def test_converged_flag_is_honest():
    H = small_regular()
    ch = ChannelParams(3.0, 0.5)
    params = NgdbfParams(eta=0.9, n0=ch.n0, t_max=40)
    rng = np.random.default_rng(4)
    seen_both = set()
    for f in range(30):
        y = 1.0 + ch.noise_sigma * rng.standard_normal(H.n)
        out = decode(y, H, params, rng=np.random.default_rng(f))
        valid = not np.any(syndrome(H, out.decisions) == -1)
        assert out.converged == valid
        assert out.iterations <= params.t_max
        seen_both.add(out.converged)
    assert seen_both == {True, False}   # the operating point exercises both


def test_single_error_with_small_magnitude_corrects_in_one_iteration():
    H = build_rs_ldpc()
    c = np.ones(H.n)                     # all-zero codeword, modulated
    y = c.copy()
    y[123] = -0.3                        # flipped sign, |y| < 0.45
    out = decode(y, H, NgdbfParams(eta=0.0))
    assert out.converged
    assert out.iterations == 1
    np.testing.assert_array_equal(out.decisions, np.ones(H.n, dtype=np.int8))


def test_global_sign_flip_mirrors_trajectory_on_even_degrees():
    # Both degree classes of the built code are even, so negating y negates
    # the hard decision, keeps every syndrome, and reproduces the identical
    # flip pattern when the same perturbation draws are applied.
    H = build_rs_ldpc()
    ch = ChannelParams(4.0, 0.841)
    params = NgdbfParams(eta=0.9, n0=ch.n0, t_max=80)
    y = 1.0 + ch.noise_sigma * np.random.default_rng(5).standard_normal(H.n)
    a = decode(y, H, params, rng=np.random.default_rng(17), trace=True)
    b = decode(-y, H, params, rng=np.random.default_rng(17), trace=True)
    assert a.iterations == b.iterations
    assert a.converged == b.converged
    np.testing.assert_array_equal(a.decisions, -b.decisions)
    for sa, sb in zip(a.trajectory, b.trajectory):
        np.testing.assert_array_equal(sa, 1 - sb)


# ---------------------------------------------------------------------------
# Scalar oracle equality


def _decode_oracle(y, H, params, rng):
    """Line-by-line scalar re-implementation used as a trajectory oracle.

    Arithmetic is staged exactly like the production path (hard-decision
    term, +w*degree, -2w*count, +noise) so float results are identical,
    but all indexing is plain Python loops.
    """
    n = H.n
    sigma_q = params.eta * math.sqrt(params.n0 / 2.0) if params.eta else 0.0
    xb = [1 if y[k] < 0 else 0 for k in range(n)]
    traj = [list(xb)]
    pool = None
    if params.sample_reuse and sigma_q > 0.0:
        pool = rng.standard_normal(NOISE_REGISTER_COUNT) * sigma_q
    for t in range(1, params.t_max + 2):
        syn = [0] * H.m
        for i in range(H.m):
            p = 0
            for j in H.row_nbrs[i]:
                p ^= xb[j]
            syn[i] = p
        if not any(syn):
            return xb, True, t - 1, traj
        if t == params.t_max + 1:
            return xb, False, params.t_max, traj
        q = None
        if sigma_q > 0.0 and pool is None:
            q = rng.standard_normal(n) * sigma_q
        new = list(xb)
        for k in range(n):
            c = sum(syn[i] for i in H.col_nbrs[k])
            g = (1.0 - 2.0 * xb[k]) * y[k]
            g += params.w * float(H.symbol_degrees[k])
            g -= (2.0 * params.w) * float(c)
            if sigma_q > 0.0:
                if pool is not None:
                    g += pool[(k - (t - 1)) % NOISE_REGISTER_COUNT]
                else:
                    g += q[k]
            if g < params.theta:
                new[k] = 1 - new[k]
        xb = new
        traj.append(list(xb))
    raise AssertionError("unreachable")


@pytest.mark.parametrize("reuse", [False, True])
@pytest.mark.parametrize("matrix", ["regular", "irregular"])
def test_decode_matches_scalar_oracle(reuse, matrix):
    H = small_regular() if matrix == "regular" else small_matrix()
    ch = ChannelParams(4.0, 0.5)
    params = NgdbfParams(eta=0.8, n0=ch.n0, t_max=30, sample_reuse=reuse)
    for trial in range(4):
        rng = np.random.default_rng(trial)
        y = 1.0 + ch.noise_sigma * rng.standard_normal(H.n)
        got = decode(y, H, params, rng=np.random.default_rng(100 + trial),
                     trace=True)
        bits, conv, iters, traj = _decode_oracle(
            y, H, params, np.random.default_rng(100 + trial))
        assert got.converged == conv
        assert got.iterations == iters
        np.testing.assert_array_equal(got.decisions, bits_to_bipolar(np.array(bits)))
        assert len(got.trajectory) == len(traj)
        for a, b in zip(got.trajectory, traj):
            np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# Batch path


@pytest.mark.parametrize("reuse", [False, True])
def test_batch_matches_single_frame_decoding(reuse):
    H = build_rs_ldpc()
    ch = ChannelParams(4.0, 0.841)
    params = NgdbfParams(eta=0.9, n0=ch.n0, sample_reuse=reuse, t_max=200)
    B = 24
    Y = np.empty((B, H.n))
    for f in range(B):
        Y[f] = 1.0 + ch.noise_sigma * frame_rng(1, f, STREAM_CHANNEL).standard_normal(H.n)
    outs = decode_batch(Y, H, params,
                        [frame_rng(1, f, STREAM_DECODER) for f in range(B)])
    for f in range(B):
        one = decode(Y[f], H, params, rng=frame_rng(1, f, STREAM_DECODER))
        assert outs[f].converged == one.converged
        assert outs[f].iterations == one.iterations
        np.testing.assert_array_equal(outs[f].decisions, one.decisions)


def test_batch_handles_mass_convergence_compaction():
    # Many clean frames finishing at once exercises the lazy column drop.
    H = small_regular()
    B = 16
    Y = np.ones((B, H.n))
    rng = np.random.default_rng(9)
    dirty = [3, 11]
    for f in dirty:
        Y[f] = 1.0 + 0.8 * rng.standard_normal(H.n)
    params = NgdbfParams(eta=0.6, n0=1.0, t_max=50)
    outs = decode_batch(Y, H, params,
                        [np.random.default_rng(f) for f in range(B)])
    for f in range(B):
        one = decode(Y[f], H, params, rng=np.random.default_rng(f))
        assert (outs[f].converged, outs[f].iterations) == (one.converged, one.iterations)
        np.testing.assert_array_equal(outs[f].decisions, one.decisions)
    for f in range(B):
        if f not in dirty:
            assert outs[f].iterations == 0


def test_batch_validates_inputs():
    H = small_matrix()
    params = NgdbfParams(eta=0.0)
    with pytest.raises(ValueError, match="expected"):
        decode_batch(np.ones((2, 3)), H, params)
    with pytest.raises(ValueError, match="one generator"):
        decode_batch(np.ones((2, 4)), H, params,
                     [np.random.default_rng(0)])


# ---------------------------------------------------------------------------
# Noise scale


def test_perturbation_variance_algebra():
    from ngdbf.reference import _noise_std
    p = NgdbfParams(eta=0.8, n0=0.5)
    assert _noise_std(p) == 0.8 * math.sqrt(0.25)
    assert _noise_std(NgdbfParams(eta=0.0)) == 0.0
    draws = np.random.default_rng(0).standard_normal(200_000) * _noise_std(p)
    assert abs(draws.var() - 0.8 ** 2 * 0.5 / 2) < 0.01


def test_calibration_structure_and_determinism():
    H = small_regular()
    cal = calibrate_eta(H, 4.0, etas=[0.7], frames=12, rate=0.5, seed=3,
                        t_max=50)
    assert cal.best_eta == 0.7
    assert len(cal.points) == 1
    p = cal.points[0]
    assert p.frames == 12
    assert p.bits == 12 * H.n
    assert 0.0 <= p.fer <= 1.0
    cal2 = calibrate_eta(H, 4.0, etas=[0.7], frames=12, rate=0.5, seed=3,
                         t_max=50)
    assert cal2.points[0].bit_errors == p.bit_errors
    assert cal2.points[0].avg_iterations == p.avg_iterations


def test_calibration_prefers_noise_over_pure_descent():
    # Deterministic descent stalls at this operating point, so the noisy
    # variants win by orders of magnitude, never by luck.
    H = build_rs_ldpc()
    grid = [0.0] + [round(0.4 + 0.1 * i, 1) for i in range(7)]
    cal = calibrate_eta(H, 4.0, etas=grid, frames=80, seed=5,
                        sample_reuse=True)
    assert cal.best_eta != 0.0
    by_eta = {p.eta: p for p in cal.points}
    zero, best = by_eta[0.0], by_eta[cal.best_eta]
    # The gap dwarfs the 95% counting interval on both sides.
    assert zero.ber - zero.ci95_ber > best.ber + best.ci95_ber


def test_calibration_argmin_stable_across_seeds():
    H = build_rs_ldpc()
    picks = []
    for seed in (21, 22):
        cal = calibrate_eta(H, 4.0, etas=[0.0, 0.9], frames=60, seed=seed,
                            sample_reuse=True)
        by_eta = {p.eta: p for p in cal.points}
        gap = by_eta[0.0].ber - by_eta[0.9].ber
        assert gap > by_eta[0.0].ci95_ber + by_eta[0.9].ci95_ber
        picks.append(cal.best_eta)
    assert picks == [0.9, 0.9]


def test_sample_reuse_tracks_fresh_draw_error_rate():
    # The circulating-pool approximation trades fresh Gaussian draws for a
    # cyclically shifted pool; its operating BER must stay within 2x of
    # fresh draws at the calibrated point.
    from ngdbf.harness import StoppingRule, run_ber_point
    H = build_rs_ldpc()
    rule = StoppingRule(0, 4096)
    bers = []
    for reuse in (True, False):
        p = run_ber_point(H, "reference",
                          NgdbfParams(eta=0.9, seed=13, sample_reuse=reuse),
                          4.0, rule)
        assert p.bit_errors >= 100
        bers.append(p.ber)
    ratio = max(bers) / min(bers)
    assert ratio < 2.0, bers
