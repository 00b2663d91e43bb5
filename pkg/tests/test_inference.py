"""Inference engines: oracle, polytree propagation, cutset conditioning."""

import math
import random

import pytest

from knet.errors import ImpossibleEvidence, InvalidState, NotInstantiable, NotPolytree, TooLarge, UnknownNode
from knet.inference import (
    find_loop_cutset,
    infer,
    oracle_joint,
    propagate_polytree,
    validate_findings,
)
from knet.model import ChanceNode, Cpt, Network, NetworkKind, is_polytree

from netgen import random_findings, random_multiply_connected, random_polytree

TOL = 1e-9


def bnode(nid, parents=(), rows=((0.5, 0.5),), states=("t", "f")):
    return ChanceNode(nid, states, tuple(parents), Cpt.of(rows))


def bnet(*nodes, name="test"):
    return Network(name, NetworkKind.BELIEF, tuple(nodes))


def max_belief_diff(a, b):
    return max(abs(x - y) for nid in a for x, y in zip(a[nid], b[nid]))


@pytest.fixture
def chain():
    return bnet(
        bnode("A", rows=[(0.2, 0.8)]),
        bnode("B", parents=("A",), rows=[(0.9, 0.1), (0.1, 0.9)]),
    )


class TestOracle:
    def test_independent_roots(self):
        net = bnet(bnode("A"), bnode("B"))
        result = oracle_joint(net, {})
        assert result.beliefs == {"A": (0.5, 0.5), "B": (0.5, 0.5)}
        assert result.p_evidence == 1.0

    def test_chain_posterior_matches_hand_bayes(self, chain):
        # joint: P(A=t,B=t)=0.2*0.9, P(A=f,B=t)=0.8*0.1
        p_tt, p_ft = 0.2 * 0.9, 0.8 * 0.1
        expected = p_tt / (p_tt + p_ft)
        result = oracle_joint(chain, {"B": 0})
        assert result.beliefs["A"][0] == pytest.approx(expected, abs=1e-12)
        assert result.p_evidence == pytest.approx(0.26, abs=1e-12)
        assert result.beliefs["B"] == (1.0, 0.0)

    def test_contradiction_raises(self):
        net = bnet(
            bnode("A", rows=[(0.4, 0.6)]),
            bnode("B", parents=("A",), rows=[(1.0, 0.0), (0.5, 0.5)]),
        )
        with pytest.raises(ImpossibleEvidence):
            oracle_joint(net, {"A": 0, "B": 1})

    def test_too_large(self, chain):
        with pytest.raises(TooLarge):
            oracle_joint(chain, {}, max_states=3)

    def test_decision_network_uses_uniform_decisions(self, figure1_net):
        result = oracle_joint(figure1_net, {})
        assert set(result.beliefs) == {"disease", "lab_test", "patho_state"}
        assert result.p_evidence == pytest.approx(1.0, abs=1e-12)


class TestFindingsValidation:
    def test_errors(self, chain, figure1_net):
        with pytest.raises(UnknownNode):
            validate_findings(chain, {"zz": 0})
        with pytest.raises(InvalidState):
            validate_findings(chain, {"A": 2})
        with pytest.raises(NotInstantiable):
            validate_findings(figure1_net, {"value": 0})


class TestPolytreePropagation:
    def test_prior_passthrough(self):
        net = bnet(bnode("A", rows=[(0.2, 0.8)]))
        result = propagate_polytree(net, {})
        assert result.beliefs["A"] == (0.2, 0.8)
        assert result.p_evidence == 1.0

    def test_deterministic_copy(self):
        net = bnet(
            bnode("A", rows=[(0.2, 0.8)]),
            bnode("B", parents=("A",), rows=[(1.0, 0.0), (0.0, 1.0)]),
        )
        assert propagate_polytree(net, {"A": 0}).beliefs["B"] == (1.0, 0.0)

    def test_chain_matches_oracle_value(self, chain):
        result = propagate_polytree(chain, {"B": 0})
        oracle = oracle_joint(chain, {"B": 0})
        assert result.beliefs["A"] == pytest.approx(oracle.beliefs["A"], abs=TOL)
        assert result.beliefs["A"][0] == pytest.approx(0.6923077, abs=1e-6)

    def test_rejects_multiply_connected(self, diamond_net):
        with pytest.raises(NotPolytree):
            propagate_polytree(diamond_net, {})

    def test_no_evidence_lambda_all_ones(self, chain):
        # exactly-normalized rows give exact ones; random rows are off by
        # at most accumulated roundoff
        for nid, lam in propagate_polytree(chain, {}).support.lam.items():
            assert lam == (1.0,) * len(lam)
        rng = random.Random(3)
        for _ in range(20):
            net = random_polytree(rng, max_nodes=8, cap=2**10)
            support = propagate_polytree(net, {}).support
            for nid, lam in support.lam.items():
                assert max(abs(v - 1.0) for v in lam) <= 1e-12

    def test_matches_oracle_on_random_polytrees(self):
        rng = random.Random(17)
        for _ in range(60):
            net = random_polytree(rng, max_nodes=10, cap=2**12)
            findings = random_findings(rng, net, max_n=3)
            got = propagate_polytree(net, findings)
            want = oracle_joint(net, findings)
            assert max_belief_diff(got.beliefs, want.beliefs) < TOL
            assert abs(got.p_evidence - want.p_evidence) < 1e-12

    def test_impossible_findings(self):
        net = bnet(
            bnode("A", rows=[(1.0, 0.0)]),
            bnode("B", parents=("A",), rows=[(1.0, 0.0), (0.5, 0.5)]),
        )
        with pytest.raises(ImpossibleEvidence):
            propagate_polytree(net, {"B": 1})

    def test_support_product_is_belief(self, chain):
        result = propagate_polytree(chain, {"B": 0})
        for nid in ("A", "B"):
            prod = [p * l for p, l in zip(result.support.pi[nid], result.support.lam[nid])]
            norm = sum(prod)
            assert tuple(v / norm for v in prod) == pytest.approx(result.beliefs[nid], abs=1e-12)


class TestLoopCutset:
    def test_polytree_has_empty_cutset(self, chain_net):
        assert find_loop_cutset(chain_net) == frozenset()

    def test_diamond_singleton_leaves_polytree(self, diamond_net):
        cutset = find_loop_cutset(diamond_net)
        assert len(cutset) == 1
        assert _residual_is_polytree(diamond_net, cutset)

    def test_two_disjoint_diamonds(self):
        def diamond(prefix):
            return [
                bnode(f"{prefix}a", rows=[(0.3, 0.7)]),
                bnode(f"{prefix}b", parents=(f"{prefix}a",), rows=[(0.8, 0.2), (0.3, 0.7)]),
                bnode(f"{prefix}c", parents=(f"{prefix}a",), rows=[(0.6, 0.4), (0.2, 0.8)]),
                bnode(f"{prefix}d", parents=(f"{prefix}b", f"{prefix}c"),
                      rows=[(0.9, 0.1), (0.7, 0.3), (0.5, 0.5), (0.1, 0.9)]),
            ]

        net = bnet(*(diamond("x") + diamond("y")))
        cutset = find_loop_cutset(net)
        assert len(cutset) == 2
        assert len({c[0] for c in cutset}) == 2  # one per component
        assert _residual_is_polytree(net, cutset)

    def test_deterministic(self, diamond_net):
        assert find_loop_cutset(diamond_net) == find_loop_cutset(diamond_net)

    def test_random_cutsets_leave_polytrees(self):
        rng = random.Random(23)
        for _ in range(40):
            net = random_multiply_connected(rng, max_nodes=10, cap=2**12)
            cutset = find_loop_cutset(net)
            assert cutset
            assert _residual_is_polytree(net, cutset)


def _residual_is_polytree(net, cutset):
    """Independent check: delete the cutset nodes, union-find the skeleton."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            x = parent[x]
        return x

    for node in net.chance_nodes:
        if node.id in cutset:
            continue
        for p in node.parents:
            if p in cutset:
                continue
            ru, rv = find(p), find(node.id)
            if ru == rv:
                return False
            parent[ru] = rv
    return True


class TestInfer:
    def test_uniform_diamond_stays_uniform(self):
        half = [(0.5, 0.5)]
        net = bnet(
            bnode("A", rows=half),
            bnode("B", parents=("A",), rows=half * 2),
            bnode("C", parents=("A",), rows=half * 2),
            bnode("D", parents=("B", "C"), rows=half * 4),
        )
        result = infer(net, {})
        for vec in result.beliefs.values():
            assert vec == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_diamond_matches_oracle(self, diamond_net):
        got = infer(diamond_net, {"D": 0})
        want = oracle_joint(diamond_net, {"D": 0})
        assert max_belief_diff(got.beliefs, want.beliefs) < TOL
        assert abs(got.p_evidence - want.p_evidence) < TOL

    def test_polytree_dispatch_is_bit_identical(self, chain_net):
        via_infer = infer(chain_net, {"B": 0})
        direct = propagate_polytree(chain_net, {"B": 0})
        assert via_infer.beliefs == direct.beliefs
        assert via_infer.p_evidence == direct.p_evidence

    def test_impossible_evidence_through_cutset(self, diamond_net):
        # D's CPT row for (B=f, C=f) is deterministic (0, 1)
        with pytest.raises(ImpossibleEvidence):
            infer(diamond_net, {"B": 1, "C": 1, "D": 0})

    def test_cutset_limit(self, diamond_net):
        with pytest.raises(TooLarge):
            infer(diamond_net, {}, max_cutset_configs=1)

    def test_evidence_order_does_not_matter(self, diamond_net):
        first = infer(diamond_net, {"B": 0, "D": 1})
        second = infer(diamond_net, {"D": 1, "B": 0})
        assert first.beliefs == second.beliefs
        assert first.p_evidence == second.p_evidence

    def test_observed_nodes_have_indicator_beliefs(self, diamond_net):
        result = infer(diamond_net, {"B": 1, "D": 0})
        assert result.beliefs["B"] == (0.0, 1.0)
        assert result.beliefs["D"] == (1.0, 0.0)

    def test_belief_vectors_normalized(self):
        rng = random.Random(31)
        for _ in range(30):
            net = random_multiply_connected(rng, max_nodes=9, cap=2**10)
            findings = random_findings(rng, net, max_n=3)
            result = infer(net, findings)
            for vec in result.beliefs.values():
                assert abs(sum(vec) - 1.0) <= 1e-9

    def test_matches_oracle_on_random_loopy_networks(self):
        rng = random.Random(41)
        for _ in range(40):
            net = random_multiply_connected(rng, max_nodes=10, cap=2**12)
            findings = random_findings(rng, net, max_n=3)
            got = infer(net, findings)
            want = oracle_joint(net, findings)
            assert max_belief_diff(got.beliefs, want.beliefs) < TOL
            assert abs(got.p_evidence - want.p_evidence) < TOL

    def test_decision_network_findings_on_decision_node(self, figure1_net):
        result = infer(figure1_net, {"treat": 0, "lab_test": 1})
        assert set(result.beliefs) == {"disease", "lab_test", "patho_state"}
        assert result.beliefs["lab_test"] == (0.0, 1.0)
