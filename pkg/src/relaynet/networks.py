"""Constructors for the small reference networks shipped as bundled specs."""
from __future__ import annotations

import itertools

import numpy as np

from .pmf import Channel, FactoredNetworkDistribution, degenerate_alphabets

ERASED = 2


def _bec_row(x: int, erasure: float) -> np.ndarray:
    row = np.zeros(3)
    row[x] = 1.0 - erasure
    row[ERASED] = erasure
    return row


def point_to_point(p_y0_x0, p_x0=None) -> FactoredNetworkDistribution:
    """Idle relays, singleton auxiliaries; only p(y0|x0) matters."""
    p = np.asarray(p_y0_x0, dtype=float)
    nx0 = p.shape[0]
    px0 = np.full(nx0, 1.0 / nx0) if p_x0 is None else np.asarray(p_x0, float)
    one = np.ones(1)
    return FactoredNetworkDistribution.from_arrays(
        one, one, np.ones((1, 1)), np.ones((1, 1)), px0.reshape(1, 1, nx0),
        Channel.from_receiver_only(p), np.ones((1, 1, 1, 1)), np.ones((1, 1, 1, 1)))


def noiseless_p2p() -> FactoredNetworkDistribution:
    return point_to_point(np.eye(2))


def useless_receiver() -> FactoredNetworkDistribution:
    """Y0 is uniform and independent of every input."""
    return point_to_point(np.full((2, 2), 0.5))


def erasure_relay_channel(direct: float, relay: float) -> Channel:
    """Binary inputs; Y0 = (erased X0, X1, X2), Y_k = independently erased X0.

    The receiver sees the relay inputs over a clean side link, so the relays
    can forward compressions of their erasure-channel observations.
    ``y0`` is encoded as ``3-ary symbol * 4 + 2 * x1 + x2``.
    """
    ch = np.zeros((2, 2, 2, 12, 3, 3))
    for x0, x1, x2 in itertools.product(range(2), repeat=3):
        p0 = _bec_row(x0, direct)
        pr = np.outer(_bec_row(x0, relay), _bec_row(x0, relay))
        for sym in range(3):
            ch[x0, x1, x2, sym * 4 + 2 * x1 + x2] = p0[sym] * pr
    return Channel(ch)


def erasure_compression(extra: float) -> np.ndarray:
    """q(yh | y, x, v) that erases an unerased ``y`` with probability ``extra``."""
    q = np.zeros((3, 2, 1, 3))
    for y in range(3):
        q[y, :, 0] = _bec_row(y, extra) if y != ERASED else np.eye(3)[ERASED]
    return q


def symmetric_two_relay(direct: float = 0.5, relay: float = 0.1,
                        compression: float = 0.6) -> FactoredNetworkDistribution:
    """Mirror-image relays, uniform inputs, no cooperation auxiliaries."""
    q = erasure_compression(compression)
    half = np.full((1, 2), 0.5)
    return FactoredNetworkDistribution.from_arrays(
        np.ones(1), np.ones(1), half, half, np.full((1, 1, 2), 0.5),
        erasure_relay_channel(direct, relay), q, q)


def p2p_alphabets(nx0: int, ny0: int) -> dict[str, int]:
    return degenerate_alphabets(x0=nx0, y0=ny0)


def swap_relays_channel(channel: Channel) -> Channel:
    """The same network with relay 1 and relay 2 relabeled."""
    return Channel(np.transpose(channel.probs, (0, 2, 1, 3, 5, 4)))


def swap_relays(dist: FactoredNetworkDistribution) -> FactoredNetworkDistribution:
    return FactoredNetworkDistribution.from_arrays(
        dist.p_v2.probs, dist.p_v1.probs, dist.p_x2.probs, dist.p_x1.probs,
        np.transpose(dist.p_x0.probs, (1, 0, 2)), swap_relays_channel(dist.channel),
        dist.q2.probs, dist.q1.probs)


def uniform_output_channel(channel: Channel) -> Channel:
    """Outputs uniform and independent of the inputs, same alphabets."""
    shape = channel.probs.shape
    return Channel(np.full(shape, 1.0 / np.prod(shape[3:])))
