"""Brute-force reference implementations, kept independent of the package.

Nothing here calls canonical codes, the matching-based embedder or the
presentation geometry; the tests compare those against these.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

Parent = Tuple[int, ...]


# -- rooted tree generation (Beyer-Hedetniemi level sequences) ----------------------


def level_sequences(n: int) -> Iterator[List[int]]:
    """Canonical level sequences of all rooted trees on ``n`` vertices,
    each isomorphism class exactly once."""
    if n == 1:
        yield [0]
        return
    seq = list(range(n))
    while True:
        yield list(seq)
        p = max((i for i in range(n) if seq[i] > 1), default=0)
        if p == 0:
            return
        q = max(i for i in range(p) if seq[i] == seq[p] - 1)
        for i in range(p, n):
            seq[i] = seq[i - (p - q)]


def level_to_parent(levels: Sequence[int]) -> Parent:
    parent = [-1] * len(levels)
    last_at: Dict[int, int] = {}
    for i, lev in enumerate(levels):
        if lev > 0:
            parent[i] = last_at[lev - 1]
        last_at[lev] = i
    return tuple(parent)


def rooted_trees(max_n: int) -> List[Parent]:
    return [level_to_parent(s) for n in range(1, max_n + 1) for s in level_sequences(n)]


# -- brute-force isomorphism and embedding --------------------------------------------


def _children(parent: Parent) -> List[List[int]]:
    kids: List[List[int]] = [[] for _ in parent]
    for v, p in enumerate(parent):
        if p >= 0:
            kids[p].append(v)
    return kids


def _depths(parent: Parent) -> List[int]:
    d = [0] * len(parent)
    for v in range(len(parent)):
        u, k = v, 0
        while parent[u] >= 0:
            u, k = parent[u], k + 1
        d[v] = k
    return d


def _root(parent: Parent) -> int:
    return parent.index(-1)


def _bfs_order(parent: Parent) -> List[int]:
    kids = _children(parent)
    order = [_root(parent)]
    for u in order:
        order.extend(kids[u])
    return order


def brute_rooted_embeddings(a: Parent, b: Parent, bijective: bool = False) -> Iterator[Dict[int, int]]:
    """Every root-preserving injective map ``a -> b`` sending each child to a child."""
    if len(a) > len(b) or (bijective and len(a) != len(b)):
        return
    kids_b = _children(b)
    order = _bfs_order(a)
    assign: Dict[int, int] = {}
    used = set()

    def go(i: int) -> Iterator[Dict[int, int]]:
        if i == len(order):
            yield dict(assign)
            return
        u = order[i]
        cands = [_root(b)] if i == 0 else kids_b[assign[a[u]]]
        for c in cands:
            if c in used:
                continue
            assign[u] = c
            used.add(c)
            yield from go(i + 1)
            used.discard(c)
            del assign[u]

    yield from go(0)


def brute_embeds_rooted(a: Parent, b: Parent) -> bool:
    return next(brute_rooted_embeddings(a, b), None) is not None


def brute_iso_rooted(a: Parent, b: Parent) -> bool:
    """A bijection mapping children to children is a rooted isomorphism."""
    if len(a) != len(b) or sorted(_depths(a)) != sorted(_depths(b)):
        return False
    return next(brute_rooted_embeddings(a, b, bijective=True), None) is not None


def brute_embeds_unrooted(a: Parent, b: Parent) -> bool:
    """Exhaustive search over injective maps preserving adjacency."""
    ea = [(v, p) for v, p in enumerate(a) if p >= 0]
    eb = {frozenset((v, p)) for v, p in enumerate(b) if p >= 0}
    for image in itertools.permutations(range(len(b)), len(a)):
        if all(frozenset((image[u], image[v])) in eb for u, v in ea):
            return True
    return False


def relabel(parent: Parent, perm: Sequence[int]) -> Parent:
    """Same tree with vertex ``v`` renamed ``perm[v]``."""
    out = [0] * len(parent)
    for v, p in enumerate(parent):
        out[perm[v]] = -1 if p < 0 else perm[p]
    return tuple(out)


# -- explicit expansion of presented trees ------------------------------------------


def parens_to_parent(text: str) -> Parent:
    parent: List[int] = []
    stack: List[int] = []
    for ch in text:
        if ch == "(":
            parent.append(stack[-1] if stack else -1)
            stack.append(len(parent) - 1)
        elif ch == ")":
            stack.pop()
    return tuple(parent)


def expand(
    core_vertices: Sequence[str],
    core_edges: Sequence[Tuple[str, str]],
    arms: Sequence[Tuple[str, str, Callable[[int], str]]],
    spine_length: int,
) -> nx.Graph:
    """Explicit graph: the core plus ``spine_length`` spine vertices per arm,
    each with its decoration (given in parenthesis text by position)."""
    g = nx.Graph()
    g.add_nodes_from(core_vertices)
    g.add_edges_from(core_edges)
    for name, attach, deco in arms:
        prev = attach
        for n in range(spine_length):
            s = f"{name}.{n}"
            g.add_edge(prev, s)
            parent = parens_to_parent(deco(n))
            ids = [s] + [f"{s}.{x}" for x in range(1, len(parent))]
            for x, p in enumerate(parent):
                if p >= 0:
                    g.add_edge(ids[p], ids[x])
            prev = s
    return g


def skeleton_ball(g: nx.Graph, root: str, depth: int) -> nx.Graph:
    """Skeleton vertices (names with at most one dot) within ``depth`` of the
    root along the skeleton, plus everything hanging off them."""
    skeleton = [v for v in g if v.count(".") <= 1]
    sk = g.subgraph(skeleton)
    dist = nx.single_source_shortest_path_length(sk, root, cutoff=depth)
    keep = set(dist)
    for v in g:
        if v.count(".") == 2 and v.rsplit(".", 1)[0] in keep:
            keep.add(v)
    return g.subgraph(keep).copy()


def metric_ball(g: nx.Graph, center: str, radius: int) -> nx.Graph:
    dist = nx.single_source_shortest_path_length(g, center, cutoff=radius)
    return g.subgraph(dist).copy()


def rooted_iso(g: nx.Graph, gr: str, h: nx.Graph, hr: str) -> bool:
    g = g.copy()
    h = h.copy()
    nx.set_node_attributes(g, {v: v == gr for v in g}, "root")
    nx.set_node_attributes(h, {v: v == hr for v in h}, "root")
    return nx.is_isomorphic(g, h, node_match=lambda x, y: x["root"] == y["root"])


def bfs_distances(neighbors: Callable, start, limit: int) -> Dict:
    seen = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if seen[u] == limit:
            continue
        for w in neighbors(u):
            if w not in seen:
                seen[w] = seen[u] + 1
                queue.append(w)
    return seen


# rooted trees by vertex count, n = 1..8 (OEIS A000081)
ROOTED_TREE_COUNTS = [1, 1, 2, 4, 9, 20, 48, 115]


def graph_embeddings(
    g: Dict[str, List[str]],
    h: Dict[str, List[str]],
    order: Sequence[str],
    fixed: Optional[Dict[str, str]] = None,
) -> Iterator[Dict[str, str]]:
    """All injective adjacency-preserving maps ``g -> h`` (adjacency dicts).

    ``order`` must list ``g``'s vertices so that each one after the first is
    adjacent to an earlier one. ``fixed`` pins some images in advance.
    """
    fixed = fixed or {}
    pos = {v: i for i, v in enumerate(order)}
    anchor = {v: next((w for w in g[v] if pos[w] < pos[v]), None) for v in order}
    assign: Dict[str, str] = {}
    used = set()

    def go(i: int) -> Iterator[Dict[str, str]]:
        if i == len(order):
            yield dict(assign)
            return
        v = order[i]
        a = anchor[v]
        cands = list(h) if a is None else h[assign[a]]
        if v in fixed:
            cands = [fixed[v]] if fixed[v] in cands else []
        for c in cands:
            if c in used:
                continue
            if any(w in assign and assign[w] not in h[c] for w in g[v]):
                continue
            assign[v] = c
            used.add(c)
            yield from go(i + 1)
            used.discard(c)
            del assign[v]

    yield from go(0)
