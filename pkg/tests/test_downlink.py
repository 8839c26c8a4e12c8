import itertools

import numpy as np
import pytest

from relaysim.channel import DownlinkChannels, RandomStream, sample_complex_gaussian, sample_downlink
from relaysim.downlink import (
    SchemeId,
    alamouti_combine,
    alamouti_decode,
    alamouti_encode,
    maxmin_select,
    maxmin_transmit,
    node_receive_bnc,
    node_receive_tb,
    ostbc_effective_snr,
    stbc_equivalent_gain,
    tb_precode,
    tb_weights,
)
from relaysim.exceptions import DegenerateChannelError
from relaysim.modulation import build_constellation, xor_combine


def random_downlink(N, n, seed=0):
    return sample_downlink(N, 1.0, RandomStream(seed, np.arange(n)))


def two_pass_oracle(hA, hB):
    # weakest node per antenna, then the antenna whose weakest link is strongest
    worst = []
    for i in range(len(hA)):
        k = 0 if abs(hA[i]) <= abs(hB[i]) else 1
        worst.append(abs((hA[i], hB[i])[k]))
    return max(range(len(worst)), key=lambda i: (worst[i], -i))


def test_maxmin_example():
    d = DownlinkChannels(np.array([0.9, 0.5]), np.array([0.3, 0.6]))
    assert maxmin_select(d) == 1  # second antenna, zero-based


def test_maxmin_single_antenna():
    d = random_downlink(1, 100)
    np.testing.assert_array_equal(maxmin_select(d), 0)


def test_maxmin_matches_oracle():
    d = random_downlink(4, 10**4, seed=9)
    got = maxmin_select(d)
    want = [two_pass_oracle(a, b) for a, b in zip(d.h_RA, d.h_RB)]
    np.testing.assert_array_equal(got, want)


def test_maxmin_tie_smallest_index():
    d = DownlinkChannels(np.array([0.5, 0.5, 0.5]), np.array([0.7, 0.5, 0.9]))
    assert maxmin_select(d) == 0


def test_maxmin_symmetry_and_permutation(rng):
    d = random_downlink(4, 2000, seed=2)
    np.testing.assert_array_equal(maxmin_select(d), maxmin_select(d.swapped()))
    perm = rng.permutation(4)
    permuted = DownlinkChannels(d.h_RA[:, perm], d.h_RB[:, perm])
    np.testing.assert_array_equal(perm[maxmin_select(permuted)], maxmin_select(d))


def test_maxmin_transmit_power(qpsk):
    s_R = maxmin_transmit(np.array([0, 1, 2, 3]), np.array([2, 0, 1, 2]), 3, qpsk)
    np.testing.assert_allclose(np.sum(np.abs(s_R) ** 2, axis=1), 1.0, atol=1e-12)
    assert s_R[0, 2] == 1 and s_R[1, 0] == 1j


def test_tb_single_antenna_unit_gains(qpsk):
    d = DownlinkChannels(np.ones(1, complex), np.ones(1, complex))
    for a, b in itertools.product(range(4), repeat=2):
        s_R = tb_precode(a, b, d, qpsk)
        np.testing.assert_allclose(s_R, [(qpsk.points[a] + qpsk.points[b]) / np.sqrt(2)], atol=1e-15)


def test_tb_orthogonal_channels_no_interference(qpsk):
    d = DownlinkChannels(np.array([1.0, 1j]), np.array([1j, 1.0]))
    # h_RA^T v_B = 0 here, so only s_B reaches node A
    _, v_B = tb_weights(d)
    assert abs(np.sum(d.h_RA * v_B)) < 1e-15


def test_tb_weights_and_receive_amplitude():
    d = random_downlink(4, 1, seed=4)
    d = DownlinkChannels(d.h_RA[0], d.h_RB[0])
    v_A, v_B = tb_weights(d)
    assert np.linalg.norm(v_A) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(v_B) == pytest.approx(1.0, abs=1e-12)
    c = build_constellation(4)
    # drop the s_A term by sending the same s_A through with zero weight check
    y_sB_only = np.sum(d.h_RA * v_A) / np.sqrt(2)
    assert y_sB_only == pytest.approx(np.linalg.norm(d.h_RA) / np.sqrt(2), abs=1e-12)
    s_R = tb_precode(0, 1, d, c) - tb_precode(0, 0, d, c)
    np.testing.assert_allclose(np.sum(d.h_RA * s_R), np.linalg.norm(d.h_RA) / np.sqrt(2) * (c.points[1] - c.points[0]),
                               atol=1e-12)


def test_tb_average_power_exact():
    c = build_constellation(8)
    d = random_downlink(3, 50, seed=6)
    powers = []
    for a, b in itertools.product(range(8), repeat=2):
        powers.append(np.sum(np.abs(tb_precode(np.full(50, a), np.full(50, b), d, c)) ** 2, axis=1))
    np.testing.assert_allclose(np.mean(powers, axis=0), 1.0, atol=1e-12)


def test_tb_zero_norm_raises(qpsk):
    d = DownlinkChannels(np.zeros(2, complex), np.ones(2, complex))
    with pytest.raises(DegenerateChannelError):
        tb_precode(0, 0, d, qpsk)


def test_tb_noiseless_chain_and_cancellation(qpsk):
    d = random_downlink(3, 1000, seed=12)
    s = np.arange(1000)
    sA, sB = s % 4, (s // 4) % 4
    y = np.sum(d.h_RA * tb_precode(sA, sB, d, qpsk), axis=1)
    np.testing.assert_array_equal(node_receive_tb(y, d, sA, qpsk), sB)
    # the residual after cancellation carries no trace of s_A
    v_A, v_B = tb_weights(d)
    for a in range(4):
        y_a = np.sum(d.h_RA * tb_precode(np.full(1000, a), sB, d, qpsk), axis=1)
        resid = y_a - np.sum(d.h_RA * v_B, axis=1) * qpsk.points[a] / np.sqrt(2)
        np.testing.assert_allclose(resid, np.linalg.norm(d.h_RA, axis=1) * qpsk.points[sB] / np.sqrt(2), atol=1e-12)


def test_tb_post_cancellation_snr(qpsk):
    d = DownlinkChannels(np.array([0.3 + 0.4j, -1.1j, 0.7]), np.array([1.0, 0.2j, -0.5]))
    zeta = 10.0
    n = sample_complex_gaussian(10**5, 1 / zeta, RandomStream(1, 0))
    y = np.sum(d.h_RA * tb_precode(2, 1, d, qpsk)) + n
    _, v_B = tb_weights(d)
    resid = y - np.sum(d.h_RA * v_B) * qpsk.points[2] / np.sqrt(2)
    signal = np.linalg.norm(d.h_RA) / np.sqrt(2) * qpsk.points[1]
    measured = abs(signal) ** 2 / np.mean(np.abs(resid - signal) ** 2)
    assert measured == pytest.approx(np.linalg.norm(d.h_RA) ** 2 * zeta / 2, rel=0.02)


def test_alamouti_structure():
    S = alamouti_encode(1 + 2j, 3 - 1j)
    np.testing.assert_array_equal(S, [[1 + 2j, -(3 + 1j)], [3 - 1j, 1 - 2j]])
    # orthogonal columns: S S^H = (|x1|^2 + |x2|^2) I
    np.testing.assert_allclose(S @ S.conj().T, 15 * np.eye(2), atol=1e-12)


def test_alamouti_noiseless_recovery():
    c = build_constellation(8)
    h = sample_complex_gaussian(2, 1.0, RandomStream(2, np.arange(500)))
    x1, x2 = np.arange(500) % 8, (np.arange(500) // 8) % 8
    y = np.einsum("bn,bnt->bt", h, alamouti_encode(c.points[x1], c.points[x2])) / np.sqrt(2)
    a, b = alamouti_decode(y, h, c)
    np.testing.assert_array_equal(a, x1)
    np.testing.assert_array_equal(b, x2)


def test_alamouti_combining_amplitude():
    h = np.array([0.4 - 0.9j, 1.3 + 0.2j])
    x1, x2 = np.exp(0.3j), np.exp(-2.0j)
    y = h @ alamouti_encode(x1, x2) / np.sqrt(2)
    z1, z2 = alamouti_combine(y, h)
    g = np.sum(np.abs(h) ** 2) / np.sqrt(2)
    assert z1 == pytest.approx(g * x1, abs=1e-12)
    assert z2 == pytest.approx(g * x2, abs=1e-12)


def test_alamouti_swapped_slots_break_decoding():
    c = build_constellation(4)
    h = np.array([0.8 + 0.3j, -0.2 + 1.1j])
    mism = 0
    for x1, x2 in itertools.product(range(4), repeat=2):
        y = h @ alamouti_encode(c.points[x1], c.points[x2]) / np.sqrt(2)
        if alamouti_decode(y[::-1], h, c) != (x1, x2):
            mism += 1
    assert mism > 0


def test_alamouti_wrong_shape():
    with pytest.raises(ValueError):
        alamouti_combine(np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        alamouti_encode(np.ones(2), np.ones(3))


def test_alamouti_snr_matches_effective_snr():
    c = build_constellation(4)
    h = np.array([0.6 + 0.1j, -0.3 + 0.9j])
    zeta = 20.0
    n = sample_complex_gaussian(2 * 10**5, 1 / zeta, RandomStream(3, 0)).reshape(-1, 2)
    y = h @ alamouti_encode(c.points[1], c.points[3]) / np.sqrt(2) + n
    z1, _ = alamouti_combine(y, np.broadcast_to(h, y.shape))
    g = np.sum(np.abs(h) ** 2) / np.sqrt(2)
    measured = g**2 / np.mean(np.abs(z1 - g * c.points[1]) ** 2)
    assert measured == pytest.approx(ostbc_effective_snr(h, zeta), rel=0.02)


def test_ostbc_effective_snr():
    assert ostbc_effective_snr(np.zeros(3), 10.0) == 0
    assert ostbc_effective_snr(np.array([0.5 + 0.5j]), 4.0) == pytest.approx(2.0)
    assert ostbc_effective_snr(np.array([1.0, 1j, 1.0]), 6.0) == pytest.approx(6.0)
    assert stbc_equivalent_gain(np.array([1.0, 1.0, 1.0, 1.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("N", [2, 3])
def test_bnc_noiseless_chains(N):
    c = build_constellation(4)
    d = random_downlink(N, 400, seed=N)
    s = np.arange(400)
    sA, sB = s % 4, (s // 4) % 4
    x = xor_combine(sA, sB, c)
    j = maxmin_select(d)
    y = np.sum(d.h_RA * maxmin_transmit(x, j, N, c), axis=1)
    np.testing.assert_array_equal(node_receive_bnc(y, SchemeId.MAXMIN_AS_BNC, d, sA, c), sB)
    if N == 2:
        sA2, sB2 = np.stack([sA, sA[::-1]], 1), np.stack([sB, sB[::-1]], 1)
        x2 = xor_combine(sA2, sB2, c)
        y = np.einsum("bn,bnt->bt", d.h_RA, alamouti_encode(c.points[x2[:, 0]], c.points[x2[:, 1]])) / np.sqrt(2)
        np.testing.assert_array_equal(node_receive_bnc(y, SchemeId.STBC_BNC, d, sA2, c), sB2)
    else:
        y = stbc_equivalent_gain(d.h_RA) * c.points[x]
        np.testing.assert_array_equal(node_receive_bnc(y, SchemeId.STBC_BNC, d, sA, c), sB)


def test_maxmin_receive_snr(qpsk):
    d = DownlinkChannels(np.array([0.3 + 0.2j, 1.2 - 0.4j]), np.array([0.9j, 0.8]))
    j = maxmin_select(d)
    assert j == 1
    zeta = 10.0
    n = sample_complex_gaussian(10**5, 1 / zeta, RandomStream(4, 0))
    y = np.sum(d.h_RA * maxmin_transmit(2, j, 2, qpsk)) + n
    signal = d.h_RA[j] * qpsk.points[2]
    measured = abs(signal) ** 2 / np.mean(np.abs(y - signal) ** 2)
    assert measured == pytest.approx(abs(d.h_RA[j]) ** 2 * zeta, rel=0.02)


def test_receive_bnc_rejects_tb(qpsk):
    d = random_downlink(2, 1)
    with pytest.raises(ValueError):
        node_receive_bnc(np.zeros(1), SchemeId.TB, d, np.zeros(1, int), qpsk)


def test_scheme_parse():
    assert SchemeId.parse("tb") is SchemeId.TB
    assert SchemeId.parse("MAXMIN_AS_BNC") is SchemeId.MAXMIN_AS_BNC
    assert SchemeId.parse(SchemeId.STBC_BNC) is SchemeId.STBC_BNC
    with pytest.raises(ValueError):
        SchemeId.parse("zf")
