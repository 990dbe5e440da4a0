"""Small shared builders for the test modules."""
import numpy as np

from relaynet.optimizer import random_network
from relaynet.pmf import (LABELS, Channel, ConditionalTable, FactoredNetworkDistribution,
                          degenerate_alphabets)

BINARY = {lab: 2 for lab in LABELS}


def random_binary_network(seed):
    return random_network(BINARY, seed)


def useless_receiver_copying_relay():
    """Y0 and Y1 are pure noise; relay 1 forwards an exact copy of Y1."""
    a = degenerate_alphabets(x0=2, y0=2, y1=2, yh1=2)
    ch = np.full((2, 1, 1, 2, 2, 1), 0.25)
    one = np.ones(1)
    q1 = np.zeros((2, 1, 1, 2))
    q1[0, 0, 0, 0] = q1[1, 0, 0, 1] = 1.0
    d = FactoredNetworkDistribution.from_arrays(
        one, one, np.ones((1, 1)), np.ones((1, 1)), np.full((1, 1, 2), 0.5), Channel(ch),
        q1, np.ones((1, 1, 1, 1)))
    assert d.alphabets == a
    return d


def softened_binary_network(seed):
    """Random binary network whose compressions lean toward a constant.

    Fully random compressions are almost always too fine for the relay
    links, so this family supplies the feasible cases.
    """
    d = random_binary_network(seed)
    rng = np.random.default_rng([seed, 1])
    changes = {}
    for name in ("q1", "q2"):
        t = getattr(d, name)
        u = rng.uniform(0.6, 1.0)
        point = np.zeros_like(t.probs)
        point[..., 0] = 1.0
        changes[name] = ConditionalTable(t.output, t.given, (1 - u) * t.probs + u * point)
    return d.replace(**changes)
