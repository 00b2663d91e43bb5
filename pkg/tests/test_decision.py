"""Decision evaluation: transform, expected utility, recommendation."""

import random

import pytest

from knet.errors import ImpossibleEvidence, MalformedDecisionNetwork, TooManyConfigurations
from knet.decision import utility_proxy_transform, expected_utility, recommend
from knet.model import (
    ChanceNode,
    Cpt,
    DecisionNode,
    Network,
    NetworkKind,
    ValueNode,
    validate,
)

from netgen import (
    affine_utilities,
    eu_bruteforce,
    eu_via_oracle,
    random_decision_network,
    random_findings,
)

TOL = 1e-9


def dnet(*nodes, name="d"):
    return Network(name, NetworkKind.DECISION, tuple(nodes))


@pytest.fixture
def pure_choice():
    """Value depends only on the decision: u(d1)=10, u(d2)=4."""
    return dnet(
        ChanceNode("noise", ("t", "f"), (), Cpt.of([[0.5, 0.5]])),
        DecisionNode("D", ("d1", "d2"), ()),
        ValueNode("V", ("D",), (10.0, 4.0)),
    )


class TestTransform:
    def test_endpoint_utilities(self):
        net = dnet(
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("D",), (0.0, 100.0)),
            ChanceNode("C", ("t", "f"), (), Cpt.of([[0.5, 0.5]])),
        )
        tr = utility_proxy_transform(net)
        assert tr.network.node("V").cpt.rows == ((0.0, 1.0), (1.0, 0.0))
        assert (tr.u_min, tr.u_max, tr.proxy_id) == (0.0, 100.0, "V")

    def test_constant_utilities_give_half(self):
        net = dnet(
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("D",), (5.0, 5.0)),
            ChanceNode("C", ("t", "f"), (), Cpt.of([[0.5, 0.5]])),
        )
        rows = utility_proxy_transform(net).network.node("V").cpt.rows
        assert rows == ((0.5, 0.5), (0.5, 0.5))

    def test_decision_becomes_uniform_chance(self):
        net = dnet(
            DecisionNode("D", ("a", "b", "c"), ()),
            ValueNode("V", ("D",), (1.0, 2.0, 3.0)),
            ChanceNode("C", ("t", "f"), (), Cpt.of([[0.5, 0.5]])),
        )
        node = utility_proxy_transform(net).network.node("D")
        assert node.kind.value == "chance"
        assert node.cpt.rows == ((1 / 3, 1 / 3, 1 / 3),)
        assert node.states == ("a", "b", "c")

    def test_output_is_valid_belief_network(self, figure1_net):
        tr = utility_proxy_transform(figure1_net)
        assert tr.network.kind is NetworkKind.BELIEF
        assert validate(tr.network) == []

    def test_random_transforms_validate(self):
        rng = random.Random(13)
        for _ in range(20):
            tr = utility_proxy_transform(random_decision_network(rng))
            assert validate(tr.network) == []

    def test_rejects_belief_network(self, chain_net):
        with pytest.raises(MalformedDecisionNetwork):
            utility_proxy_transform(chain_net)


class TestExpectedUtility:
    def test_no_uncertainty(self, pure_choice):
        assert expected_utility(pure_choice, {}, {"D": 0}) == 10.0
        assert expected_utility(pure_choice, {}, {"D": 1}) == 4.0

    def test_figure1_against_both_oracles(self, figure1_net):
        for findings in ({}, {"lab_test": 0}, {"disease": 1}):
            for config in ({"treat": 0}, {"treat": 1}):
                got = expected_utility(figure1_net, findings, config)
                assert got == pytest.approx(eu_bruteforce(figure1_net, findings, config), abs=TOL)
                assert got == pytest.approx(eu_via_oracle(figure1_net, findings, config), abs=TOL)

    def test_figure1_hand_values(self, figure1_net):
        # P(abnormal) = 0.05*0.95 + 0.95*0.2 = 0.2375
        # EU(treat)   = 0.2375*70 + 0.7625*80 = 77.625
        # EU(no)      = 0.2375*20 + 0.7625*100 = 81.0
        assert expected_utility(figure1_net, {}, {"treat": 0}) == pytest.approx(77.625, abs=TOL)
        assert expected_utility(figure1_net, {}, {"treat": 1}) == pytest.approx(81.0, abs=TOL)

    def test_constant_utilities(self):
        net = dnet(
            ChanceNode("C", ("t", "f"), (), Cpt.of([[0.3, 0.7]])),
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("C", "D"), (7.0, 7.0, 7.0, 7.0)),
        )
        assert expected_utility(net, {}, {"D": 0}) == 7.0
        assert expected_utility(net, {}, {"D": 1}) == 7.0

    def test_config_must_cover_free_decisions(self, figure1_net):
        with pytest.raises(ValueError):
            expected_utility(figure1_net, {}, {})
        with pytest.raises(ValueError):
            expected_utility(figure1_net, {"treat": 0}, {"treat": 1})

    def test_impossible_combination(self):
        net = dnet(
            ChanceNode("C", ("t", "f"), ("D",), Cpt.of([[1.0, 0.0], [0.0, 1.0]])),
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("C",), (1.0, 0.0)),
        )
        with pytest.raises(ImpossibleEvidence):
            expected_utility(net, {"C": 0}, {"D": 1})


class TestRecommend:
    def test_best_is_argmax(self, pure_choice):
        rec = recommend(pure_choice, {})
        assert rec.best.configuration == {"D": 0}
        assert rec.best.expected_utility == 10.0
        assert [e.configuration["D"] for e in rec.ranking] == [0, 1]

    def test_affine_transform_preserves_ranking(self, figure1_net):
        base = recommend(figure1_net, {"lab_test": 0})
        mapped = recommend(affine_utilities(figure1_net, 3.0, 7.0), {"lab_test": 0})
        assert [e.configuration for e in mapped.ranking] == [e.configuration for e in base.ranking]
        for got, want in zip(mapped.ranking, base.ranking):
            assert got.expected_utility == pytest.approx(3.0 * want.expected_utility + 7.0, abs=TOL)

    def test_exact_tie_goes_to_lower_configuration_index(self):
        net = dnet(
            ChanceNode("C", ("t", "f"), (), Cpt.of([[0.5, 0.5]])),
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("D",), (3.0, 3.0)),
        )
        rec = recommend(net, {})
        assert rec.best.configuration == {"D": 0}

    def test_decision_fixed_by_findings_is_excluded(self, figure1_net):
        rec = recommend(figure1_net, {"treat": 0})
        assert rec.ranking == (rec.best,)
        assert rec.best.configuration == {}

    def test_impossible_configurations_flagged_and_ranked_last(self):
        net = dnet(
            ChanceNode("C", ("t", "f"), ("D",), Cpt.of([[1.0, 0.0], [0.0, 1.0]])),
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("C", "D"), (9.0, 1.0, 2.0, 8.0)),
        )
        rec = recommend(net, {"C": 0})
        assert rec.best.configuration == {"D": 0}
        last = rec.ranking[-1]
        assert last.configuration == {"D": 1}
        assert not last.feasible and last.expected_utility is None

    def test_all_impossible_raises(self):
        net = dnet(
            ChanceNode("C", ("t", "f"), ("D",), Cpt.of([[1.0, 0.0], [1.0, 0.0]])),
            DecisionNode("D", ("a", "b"), ()),
            ValueNode("V", ("C",), (1.0, 0.0)),
        )
        with pytest.raises(ImpossibleEvidence):
            recommend(net, {"C": 1})

    def test_config_limit(self, figure1_net):
        with pytest.raises(TooManyConfigurations):
            recommend(figure1_net, {}, max_configs=1)

    def test_score_invariant(self):
        rng = random.Random(37)
        for _ in range(15):
            net = random_decision_network(rng, max_chance=5)
            rec = recommend(net, {})
            tr = utility_proxy_transform(net)
            previous = None
            for ev in rec.ranking:
                assert 0.0 <= ev.normalized_score <= 1.0
                if tr.span > 0:
                    assert ev.expected_utility == pytest.approx(
                        tr.u_min + ev.normalized_score * tr.span, abs=TOL
                    )
                if previous is not None:
                    assert ev.normalized_score <= previous + 1e-15
                previous = ev.normalized_score

    def test_random_networks_match_bruteforce_oracle(self):
        rng = random.Random(53)
        for _ in range(20):
            net = random_decision_network(rng, max_chance=5, cap=2**8)
            findings = random_findings(rng, net, max_n=2)
            rec = recommend(net, findings)
            for ev in rec.ranking:
                if not ev.feasible:
                    continue
                want = eu_bruteforce(net, findings, ev.configuration)
                assert ev.expected_utility == pytest.approx(want, abs=TOL)
            feasible = [e for e in rec.ranking if e.feasible]
            eus = [e.expected_utility for e in feasible]
            assert eus == sorted(eus, reverse=True)
