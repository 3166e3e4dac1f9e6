"""Shared builders for tests: random presentations and explicit expansions."""

from __future__ import annotations

import random
from typing import List

from oracles import expand
from sibtrees.finite_tree import FiniteRootedTree
from sibtrees.presentation import Arm, Generated, Periodic, TreePresentation

SMALL_DECORATIONS = ["()", "(())", "(()())", "((()))"]


def random_periodic(rng: random.Random, name: str = "R") -> TreePresentation:
    n = rng.randint(1, 3)
    verts = [f"c{i}" for i in range(n)]
    edges = [(verts[i], verts[rng.randrange(i)]) for i in range(1, n)]
    arms: List[Arm] = []
    for k in range(rng.randint(0, 3)):
        prefix = tuple(
            FiniteRootedTree.from_parens(rng.choice(SMALL_DECORATIONS)) for _ in range(rng.randint(0, 1))
        )
        period = tuple(
            FiniteRootedTree.from_parens(rng.choice(SMALL_DECORATIONS)) for _ in range(rng.randint(1, 2))
        )
        arms.append(Arm("ABC"[k], rng.choice(verts), Periodic(prefix, period)))
    return TreePresentation(tuple(verts), tuple(edges), verts[0], tuple(arms), name)


def explicit(p: TreePresentation, spine_length: int):
    """networkx graph of ``p`` cut after ``spine_length`` spine vertices per arm,
    built from the raw decoration data only."""
    arms = [(a.name, a.attach, (lambda n, seq=a.seq: seq.at(n).to_parens())) for a in p.arms]
    return expand(p.core_vertices, p.core_edges, arms, spine_length)


def adjacency(graph) -> dict:
    return {v: list(graph[v]) for v in graph}


def bfs_order(graph, root: str) -> list:
    import networkx as nx

    return [root] + [v for _, v in nx.bfs_edges(graph, root)]


def embedding_pool(seed: int = 0, size: int = 50):
    """Valid self-embeddings drawn from fixtures, random periodic presentations
    and compositions of fixture shifts."""
    from sibtrees.embedding import compose, power, search_embeddings
    from sibtrees.fixtures import NAMES, document

    rng = random.Random(seed)
    pool = []
    for name in NAMES:
        doc = document(name)
        p = doc.presentation(name)
        pool.extend(f for f in doc.embeddings.values() if f.is_valid())
        pool.extend(search_embeddings(p, shift_bound=2, patch_radius=rng.randint(1, 2)))
    shifts = [document(n).embeddings["shift"] for n in ("RAY", "COMB", "DRAY", "HALFCOMB", "DCOMB")]
    for f in shifts:
        pool.append(power(f, rng.randint(2, 3)))
    d = document("DRAY").embeddings
    pool.append(compose(d["reflect"], d["shift"]))
    pool.append(compose(d["back"], d["reflect"]))
    for i in range(30):
        p = random_periodic(rng, f"R{i}")
        pool.extend(search_embeddings(p, shift_bound=1))
    rng.shuffle(pool)
    return pool[:size]
