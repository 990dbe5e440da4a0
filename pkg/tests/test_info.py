import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaynet.info import (Entropies, InformationError, entropy,
                           mutual_info)
from relaynet.pmf import LABELS, JointPmf, build_joint

import oracles
from helpers import random_binary_network


def _bsc_joint(flip):
    t = 0.5 * np.array([[1 - flip, flip], [flip, 1 - flip]])
    return JointPmf(("x", "y"), t)


def test_point_mass_entropy_zero():
    assert entropy(JointPmf(("a",), np.array([0.0, 1.0, 0.0])), "a") == 0.0


def test_uniform_binary_entropy_one():
    assert entropy(JointPmf(("a",), np.array([0.5, 0.5])), "a") == pytest.approx(1.0, abs=1e-15)


def test_skewed_binary_entropy():
    j = JointPmf(("a",), np.array([0.11, 0.89]))
    want = oracles.binary_entropy(0.11)
    assert entropy(j, "a") == pytest.approx(want, abs=1e-12)
    assert entropy(j, "a") == pytest.approx(0.499916, abs=1e-5)


def test_bsc_mutual_information():
    want = 1 - oracles.binary_entropy(0.11)
    got = mutual_info(_bsc_joint(0.11), "x", "y")
    assert got == pytest.approx(want, abs=1e-12)
    assert got == pytest.approx(0.500084, abs=1e-5)


def test_independent_groups_zero():
    t = np.einsum("i,j->ij", [0.3, 0.7], [0.2, 0.8])
    assert mutual_info(JointPmf(("a", "b"), t), "a", "b") == pytest.approx(0, abs=1e-12)


def test_copy_carries_one_bit():
    j = JointPmf(("x", "xc"), np.diag([0.5, 0.5]))
    assert mutual_info(j, "x", "xc") == pytest.approx(1.0, abs=1e-12)


def test_conditioning_on_a_copy_kills_information():
    rng = np.random.default_rng(0)
    ab = rng.dirichlet(np.ones(4)).reshape(2, 2)
    t = np.zeros((2, 2, 2))
    for a in range(2):
        t[a, a, :] = ab[a]
    j = JointPmf(("a", "acopy", "b"), t)
    assert mutual_info(j, "a", "b") > 0 or ab.prod() == 0
    assert mutual_info(j, "a", "b", "acopy") == pytest.approx(0, abs=1e-12)


def test_overlapping_groups_rejected():
    j = build_joint(random_binary_network(1))
    with pytest.raises(ValueError):
        mutual_info(j, {"x0", "x1"}, {"x1"})
    with pytest.raises(ValueError):
        mutual_info(j, "x0", "y0", "x0")
    with pytest.raises(KeyError):
        entropy(j, "q")


def test_clearly_negative_value_raises():
    class Rigged(Entropies):
        def raw_mi(self, a, b, given=()):
            return -1e-6

    with pytest.raises(InformationError):
        Rigged(build_joint(random_binary_network(2))).mi("x0", "y0")


def test_tiny_negative_clamped():
    class Rigged(Entropies):
        def raw_mi(self, a, b, given=()):
            return -1e-13

    assert Rigged(build_joint(random_binary_network(2))).mi("x0", "y0") == 0.0


def _disjoint_groups(rng):
    perm = list(rng.permutation(LABELS))
    cuts = sorted(rng.choice(range(1, 10), size=3, replace=False))
    a, b, c, g = (perm[:cuts[0]], perm[cuts[0]:cuts[1]], perm[cuts[1]:cuts[2]],
                  perm[cuts[2]:])
    return a, b, c, g


@pytest.mark.parametrize("seed", range(10))
def test_terms_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = random_binary_network(seed)
    j = build_joint(d)
    ref = oracles.loop_joint(d)
    for _ in range(5):
        a, b, c, g = _disjoint_groups(rng)
        assert entropy(j, a) == pytest.approx(oracles.entropy(ref, LABELS, a), abs=1e-10)
        got = mutual_info(j, a, b, g)
        assert got == pytest.approx(oracles.mutual_info(ref, LABELS, a, b, g), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_chain_rule_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    e = Entropies(build_joint(random_binary_network(seed)))
    a, b, c, g = map(set, _disjoint_groups(rng))
    lhs = e.raw_mi(a, b | c, g)
    rhs = e.raw_mi(a, b, g) + e.raw_mi(a, c, b | g)
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert lhs >= e.raw_mi(a, b, g) - 1e-10
    assert min(lhs, e.raw_mi(a, b, g), e.raw_mi(a, c, b | g)) >= -1e-12
