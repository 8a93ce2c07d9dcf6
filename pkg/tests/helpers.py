"""Shared fixtures: seeded jump laws and small reference graphs."""

from __future__ import annotations

import numpy as np

from anisowalk import (
    AnisotropyVector,
    identity_involution,
    make_alphabet,
    pairing_involution,
    uniform_vector,
)
from anisowalk.schreier_graphs import SchreierGraph, from_permutations, is_simple, random_schreier

ALPHA3 = make_alphabet(3, identity_involution(3))
ALPHA4 = make_alphabet(4, (2, 1, 4, 3))
P3_UNIFORM = uniform_vector(ALPHA3)
P4_ASYM = AnisotropyVector(ALPHA4, np.array([0.5, 0.0, 0.5, 0.0]))
P4_ANISO = AnisotropyVector(ALPHA4, np.array([0.35, 0.35, 0.15, 0.15]))


def seeded_laws(count: int, seed: int = 2024, dims=(3, 4, 5)):
    """Deterministic stream of strictly positive jump laws over both
    involution shapes."""
    rng = np.random.default_rng(seed)
    out = []
    for trial in range(count):
        d = dims[trial % len(dims)]
        inv = identity_involution(d) if trial % 2 == 0 else pairing_involution(d)
        alphabet = make_alphabet(d, inv)
        m = rng.exponential(size=d)
        out.append(AnisotropyVector(alphabet, m / m.sum()))
    return out


def k4_graph() -> SchreierGraph:
    """K4 as the union of its three perfect matchings."""
    return from_permutations(ALPHA3, [[1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])


def two_state_loop_graph() -> SchreierGraph:
    """n=2, d=3 identity involution, one loop letter and two swaps."""
    return from_permutations(ALPHA3, [[0, 1], [1, 0], [1, 0]])


def petersen_graph() -> SchreierGraph:
    """Petersen graph: matching letter + a two-factor rotation pair (girth 5)."""
    alphabet = make_alphabet(3, (1, 3, 2))
    sigma = [(i + 1) % 5 for i in range(5)] + [5 + (j + 2) % 5 for j in range(5)]
    sigma_inv = [0] * 10
    for x, y in enumerate(sigma):
        sigma_inv[y] = x
    match = [i + 5 for i in range(5)] + [j for j in range(5)]
    return from_permutations(alphabet, [match, sigma, sigma_inv])


def simple_random_cubic(n: int, count: int, seed_start: int = 0):
    """First ``count`` seeds giving simple random 3-regular Schreier graphs."""
    graphs = []
    seed = seed_start
    while len(graphs) < count:
        g = random_schreier(ALPHA3, n, seed)
        if is_simple(g):
            graphs.append((seed, g))
        seed += 1
    return graphs


def random_word(alphabet, rng, max_len: int = 10):
    from anisowalk import ReducedWord

    letters = []
    for _ in range(int(rng.integers(0, max_len + 1))):
        options = [i for i in alphabet.letters()
                   if not letters or i != alphabet.star(letters[-1])]
        letters.append(int(rng.choice(options)))
    return ReducedWord(alphabet, tuple(letters))
