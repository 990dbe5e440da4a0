"""Searching over input distributions.

With both relays idle the network is a plain channel, so the best rate the
search finds must equal that channel's capacity. A short Blahut-Arimoto loop
supplies the reference. The same search is then run on the two-relay
erasure network, where the relays do help.
"""
import numpy as np

from relaynet import networks, region
from relaynet.optimizer import (OptimizerConfig, default_alphabets, degenerate_dist,
                                maximize_rate)
from relaynet.pmf import Channel, degenerate_alphabets


def capacity(p, iters=2000):
    r = np.full(p.shape[0], 1 / p.shape[0])
    for _ in range(iters):
        q = r[:, None] * p
        q /= q.sum(axis=0)
        w = np.exp((p * np.log(np.where(q > 0, q, 1))).sum(axis=1))
        r = w / w.sum()
    py = r @ p
    ratio = np.where(p > 0, p / py, 1)
    return float((r[:, None] * p * np.log2(ratio)).sum())


p = np.array([[0.52776158, 0.28088216, 0.19135626],
              [0.07041972, 0.0671079, 0.86247238],
              [0.43976794, 0.42904784, 0.13118422]])
res = maximize_rate(Channel.from_receiver_only(p), degenerate_alphabets(x0=3, y0=3),
                    OptimizerConfig(seed=1))
print(f"idle relays: search {res.rate:.8f}  capacity {capacity(p):.8f}")
print("  best input", np.round(res.dist.p_x0.probs.ravel(), 4))

d = networks.symmetric_two_relay()
alpha = default_alphabets(d.channel, v1=1, v2=1)
res = maximize_rate(d.channel, alpha, OptimizerConfig(restarts=2, iterations=300, seed=3))
idle = region.theorem1_verdict(degenerate_dist(alpha, d.channel)).achieved_rate
print(f"\nerasure network, relays idle: {idle:.4f}")
print(f"erasure network, searched: {res.rate:.4f} (per restart {np.round(res.restart_rates, 4)})")
print(f"erasure network, bundled operating point: {region.theorem1_verdict(d).achieved_rate:.4f}")
