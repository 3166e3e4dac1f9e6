"""Finite rooted trees: canonical codes, isomorphism and subtree embedding.

Everything about the infinite presented trees eventually reduces to questions
about finite rooted trees, so this module is kept small and exhaustively
tested against brute-force oracles.

Trees are written in balanced-parenthesis form: ``"()"`` is a single vertex,
``"(()())"`` a root with two leaf children.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = [
    "FiniteRootedTree",
    "canonical_code",
    "is_isomorphic_rooted",
    "embeds_rooted",
    "embeds_unrooted",
    "is_embedding",
    "max_bipartite_matching",
    "path_tree",
    "star_tree",
    "TRIVIAL",
]

VertexMap = Dict[int, int]


@dataclass(frozen=True)
class FiniteRootedTree:
    """A finite rooted tree on vertices ``0 .. n-1``.

    ``parent[v]`` is the parent of ``v``; the root is the unique vertex with
    parent ``-1``. Child order carries no meaning.
    """

    parent: Tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.parent)
        if n == 0:
            raise ValueError("a tree needs at least one vertex")
        roots = [v for v, p in enumerate(self.parent) if p == -1]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        for v, p in enumerate(self.parent):
            if p != -1 and not 0 <= p < n:
                raise ValueError(f"parent of {v} out of range: {p}")
        # every vertex must reach the root without revisiting
        seen_ok = {roots[0]}
        for v in range(n):
            trail = []
            u = v
            while u not in seen_ok:
                if u in trail:
                    raise ValueError("parent relation contains a cycle")
                trail.append(u)
                u = self.parent[u]
            seen_ok.update(trail)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_parens(cls, text: str) -> "FiniteRootedTree":
        """Parse balanced-parenthesis text; vertices are numbered in preorder."""
        s = "".join(text.split())
        if not s or s[0] != "(":
            raise ValueError(f"not a tree encoding: {text!r}")
        parent: List[int] = []
        stack: List[int] = []
        for i, ch in enumerate(s):
            if ch == "(":
                if not stack and parent:
                    raise ValueError(f"more than one root in {text!r}")
                parent.append(stack[-1] if stack else -1)
                stack.append(len(parent) - 1)
            elif ch == ")":
                if not stack:
                    raise ValueError(f"unbalanced ')' at offset {i} in {text!r}")
                stack.pop()
            else:
                raise ValueError(f"unexpected character {ch!r} in {text!r}")
        if stack:
            raise ValueError(f"unbalanced '(' in {text!r}")
        return cls(tuple(parent))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]], root: int = 0) -> "FiniteRootedTree":
        """Build from an undirected edge list on ``0 .. n-1``, keeping vertex ids."""
        adj: List[List[int]] = [[] for _ in range(n)]
        count = 0
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
            count += 1
        if count != n - 1:
            raise ValueError(f"a tree on {n} vertices has {n - 1} edges, got {count}")
        parent = [-2] * n
        parent[root] = -1
        stack = [root]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if parent[w] == -2:
                    parent[w] = u
                    stack.append(w)
                elif w != parent[u]:
                    raise ValueError("edge list contains a cycle")
        if -2 in parent:
            raise ValueError("edge list is disconnected")
        return cls(tuple(parent))

    # -- structure --------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.parent)

    @cached_property
    def root(self) -> int:
        return self.parent.index(-1)

    @cached_property
    def children(self) -> Tuple[Tuple[int, ...], ...]:
        kids: List[List[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(v)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        adj = [list(k) for k in self.children]
        for v, p in enumerate(self.parent):
            if p >= 0:
                adj[v].append(p)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def depths(self) -> Tuple[int, ...]:
        depth = [0] * self.size
        for v in self.preorder:
            p = self.parent[v]
            if p >= 0:
                depth[v] = depth[p] + 1
        return tuple(depth)

    @cached_property
    def preorder(self) -> Tuple[int, ...]:
        order = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            order.append(u)
            stack.extend(reversed(self.children[u]))
        return tuple(order)

    @property
    def height(self) -> int:
        return max(self.depths)

    def edges(self) -> List[Tuple[int, int]]:
        return [(p, v) for v, p in enumerate(self.parent) if p >= 0]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def is_trivial(self) -> bool:
        return self.size == 1

    def to_parens(self) -> str:
        """Serialize preserving the stored child order (not canonical)."""
        out: List[str] = []
        stack: List[Tuple[int, bool]] = [(self.root, False)]
        while stack:
            u, closing = stack.pop()
            if closing:
                out.append(")")
                continue
            out.append("(")
            stack.append((u, True))
            for c in reversed(self.children[u]):
                stack.append((c, False))
        return "".join(out)

    def canonical(self) -> "FiniteRootedTree":
        """The preorder-numbered tree of the canonical code."""
        return FiniteRootedTree.from_parens(canonical_code(self))

    def __str__(self) -> str:
        return self.to_parens()


TRIVIAL = FiniteRootedTree((-1,))


def path_tree(edges: int) -> FiniteRootedTree:
    """Path with ``edges`` edges rooted at an end (``path_tree(0)`` is trivial)."""
    return FiniteRootedTree(tuple(range(-1, edges)))


def star_tree(leaves: int) -> FiniteRootedTree:
    """Root with ``leaves`` leaf children."""
    return FiniteRootedTree((-1,) + (0,) * leaves)


# -- canonical forms --------------------------------------------------------


def _subtree_codes(t: FiniteRootedTree) -> List[str]:
    codes: List[str] = [""] * t.size
    for u in reversed(t.preorder):
        codes[u] = "(" + "".join(sorted(codes[c] for c in t.children[u])) + ")"
    return codes


def canonical_code(t: FiniteRootedTree) -> str:
    """AHU code: children codes sorted lexicographically, wrapped in parens.

    >>> canonical_code(FiniteRootedTree.from_parens("(()(()))"))
    '((())())'
    """
    return _subtree_codes(t)[t.root]


def is_isomorphic_rooted(a: FiniteRootedTree, b: FiniteRootedTree) -> bool:
    if a.size != b.size:
        return False
    return canonical_code(a) == canonical_code(b)


# -- matching ---------------------------------------------------------------


def max_bipartite_matching(left: Sequence[int], edges: Dict[int, Sequence[int]]) -> Dict[int, int]:
    """Maximum matching by augmenting paths (Kuhn). Returns left -> right."""
    match_right: Dict[int, int] = {}

    def augment(u: int, visited: set) -> bool:
        for w in edges.get(u, ()):
            if w in visited:
                continue
            visited.add(w)
            if w not in match_right or augment(match_right[w], visited):
                match_right[w] = u
                return True
        return False

    for u in left:
        augment(u, set())
    return {u: w for w, u in match_right.items()}


# -- embeddings -------------------------------------------------------------


class _Embedder:
    """Decides ``a`` (hanging below ``u`` away from ``pu``) into ``b`` likewise.

    Works on adjacency lists so the same recursion serves the rooted case
    (both parents ``-1``) and the anchored unrooted case.
    """

    def __init__(self, a: FiniteRootedTree, b: FiniteRootedTree) -> None:
        self.adj_a = a.adjacency
        self.adj_b = b.adjacency
        self.memo: Dict[Tuple[int, int, int, int], Optional[Dict[int, int]]] = {}

    def assign(self, u: int, pu: int, v: int, pv: int) -> Optional[Dict[int, int]]:
        """Children of u matched to children of v, or None if impossible."""
        key = (u, pu, v, pv)
        if key in self.memo:
            return self.memo[key]
        kids_a = [c for c in self.adj_a[u] if c != pu]
        kids_b = [c for c in self.adj_b[v] if c != pv]
        result: Optional[Dict[int, int]] = None
        if len(kids_a) <= len(kids_b):
            feasible = {
                c: [d for d in kids_b if self.assign(c, u, d, v) is not None] for c in kids_a
            }
            if all(feasible[c] for c in kids_a):
                matching = max_bipartite_matching(kids_a, feasible)
                if len(matching) == len(kids_a):
                    result = matching
        self.memo[key] = result
        return result

    def build(self, u: int, pu: int, v: int, pv: int) -> Dict[int, int]:
        out = {u: v}
        stack = [(u, pu, v, pv)]
        while stack:
            x, px, y, py = stack.pop()
            matching = self.assign(x, px, y, py)
            assert matching is not None
            for c, d in matching.items():
                out[c] = d
                stack.append((c, x, d, y))
        return out


def embeds_rooted(a: FiniteRootedTree, b: FiniteRootedTree) -> Optional[VertexMap]:
    """Root-preserving injective adjacency-preserving map ``a -> b``, if any."""
    if a.size > b.size or a.height > b.height:
        return None
    emb = _Embedder(a, b)
    if emb.assign(a.root, -1, b.root, -1) is None:
        return None
    return emb.build(a.root, -1, b.root, -1)


def embeds_unrooted(a: FiniteRootedTree, b: FiniteRootedTree) -> Optional[VertexMap]:
    """Injective adjacency-preserving map ``a -> b`` ignoring both roots.

    The root of ``a`` has to land somewhere, so it suffices to anchor it at
    every vertex of ``b`` in turn.
    """
    if a.size > b.size:
        return None
    emb = _Embedder(a, b)
    for y in range(b.size):
        if emb.assign(a.root, -1, y, -1) is not None:
            return emb.build(a.root, -1, y, -1)
    return None


def is_embedding(a: FiniteRootedTree, b: FiniteRootedTree, mapping: VertexMap, rooted: bool = True) -> bool:
    """Check a candidate map edge by edge."""
    if set(mapping) != set(range(a.size)):
        return False
    if len(set(mapping.values())) != a.size:
        return False
    if not all(0 <= w < b.size for w in mapping.values()):
        return False
    if rooted and mapping[a.root] != b.root:
        return False
    return all(mapping[u] in b.adjacency[mapping[v]] for u, v in a.edges())
