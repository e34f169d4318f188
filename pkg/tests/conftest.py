import numpy as np
import pytest

from jtprop.model import BayesianNetwork, Variable, make_cpt
from jtprop.synth import GenSpec, gen_network


def build_net(cards, edges_and_tables):
    """Network from {child: (parents, flat table)} over the given cardinalities."""
    variables = [
        Variable(i, chr(ord("A") + i), int(c)) for i, c in enumerate(cards)
    ]
    cpts = [
        make_cpt(cards, child, parents, table)
        for child, (parents, table) in sorted(edges_and_tables.items())
    ]
    return BayesianNetwork(variables, cpts)


def random_cpt_rows(rng, n_rows, card):
    rows = rng.uniform(0.05, 1.0, size=(n_rows, card))
    return (rows / rows.sum(axis=1, keepdims=True)).ravel()


@pytest.fixture
def one_var_net():
    return build_net([2], {0: ([], [0.3, 0.7])})


@pytest.fixture
def chain_net():
    # A -> B -> C
    return build_net(
        [2, 2, 2],
        {
            0: ([], [0.6, 0.4]),
            1: ([0], [0.7, 0.3, 0.2, 0.8]),
            2: ([1], [0.1, 0.9, 0.5, 0.5]),
        },
    )


@pytest.fixture
def collider_net():
    # A -> C <- B
    return build_net(
        [2, 2, 2],
        {
            0: ([], [0.3, 0.7]),
            1: ([], [0.6, 0.4]),
            2: ([0, 1], [0.1, 0.9, 0.4, 0.6, 0.8, 0.2, 0.5, 0.5]),
        },
    )


@pytest.fixture
def diamond_net():
    # A -> B, A -> C, B -> D, C -> D
    rng = np.random.default_rng(7)
    return build_net(
        [2, 2, 2, 2],
        {
            0: ([], [0.4, 0.6]),
            1: ([0], random_cpt_rows(rng, 2, 2)),
            2: ([0], random_cpt_rows(rng, 2, 2)),
            3: ([1, 2], random_cpt_rows(rng, 4, 2)),
        },
    )


@pytest.fixture
def two_clique_net():
    # A -> D, B -> D, B -> C: junction tree {A,B,D} -- {B} -- {B,C}
    return build_net(
        [2, 2, 2, 2],
        {
            0: ([], [0.6, 0.4]),
            1: ([], [0.5, 0.5]),
            2: ([1], [0.1, 0.9, 0.8, 0.2]),
            3: ([0, 1], [0.3, 0.7, 0.2, 0.8, 0.9, 0.1, 0.5, 0.5]),
        },
    )


@pytest.fixture
def mixed_card_net():
    # cards (2, 3, 4): A -> B -> C
    rng = np.random.default_rng(11)
    return build_net(
        [2, 3, 4],
        {
            0: ([], random_cpt_rows(rng, 1, 2)),
            1: ([0], random_cpt_rows(rng, 2, 3)),
            2: ([1], random_cpt_rows(rng, 3, 4)),
        },
    )


@pytest.fixture
def disconnected_net():
    # two independent components: A -> B, C -> D
    rng = np.random.default_rng(13)
    return build_net(
        [2, 3, 2, 2],
        {
            0: ([], random_cpt_rows(rng, 1, 2)),
            1: ([0], random_cpt_rows(rng, 2, 3)),
            2: ([], random_cpt_rows(rng, 1, 2)),
            3: ([2], random_cpt_rows(rng, 2, 2)),
        },
    )


def corpus_networks():
    """Deterministic mix of hand-built and generated networks."""
    rng = np.random.default_rng(3)
    nets = [
        ("one_var", build_net([2], {0: ([], [0.3, 0.7])})),
        (
            "chain",
            build_net(
                [2, 2, 2],
                {
                    0: ([], [0.6, 0.4]),
                    1: ([0], [0.7, 0.3, 0.2, 0.8]),
                    2: ([1], [0.1, 0.9, 0.5, 0.5]),
                },
            ),
        ),
        (
            "two_clique",
            build_net(
                [2, 2, 2, 2],
                {
                    0: ([], [0.6, 0.4]),
                    1: ([], [0.5, 0.5]),
                    2: ([1], [0.1, 0.9, 0.8, 0.2]),
                    3: ([0, 1], [0.3, 0.7, 0.2, 0.8, 0.9, 0.1, 0.5, 0.5]),
                },
            ),
        ),
        (
            "disconnected",
            build_net(
                [2, 3, 2, 2],
                {
                    0: ([], random_cpt_rows(rng, 1, 2)),
                    1: ([0], random_cpt_rows(rng, 2, 3)),
                    2: ([], random_cpt_rows(rng, 1, 2)),
                    3: ([2], random_cpt_rows(rng, 2, 2)),
                },
            ),
        ),
    ]
    for seed in (101, 202, 303, 404):
        spec = GenSpec(seed=seed, n_variables=int(rng.integers(5, 11)), max_parents=3)
        nets.append((f"gen{seed}", gen_network(spec)))
    return nets


@pytest.fixture(params=corpus_networks(), ids=lambda p: p[0])
def corpus_net(request):
    return request.param[1]
