"""Finite presentations of infinite locally finite trees.

A presentation is a finite *core* tree plus finitely many *arms*. Arm ``A``
attached at core vertex ``c`` contributes a spine ``A.0, A.1, ...`` with
``A.0`` adjacent to ``c``, and at every spine vertex ``A.n`` a finite rooted
*decoration* is glued by its root. Decorations along an arm are either
eventually periodic or generated by an affine size rule on a path or star
shape. Every presented tree is locally finite, scattered, and has exactly one
end per arm.

Vertices of the infinite tree are plain tuples:

* ``("c", name)``           core vertex,
* ``("s", arm, n)``         spine vertex ``arm.n``,
* ``("d", arm, n, x)``      vertex ``x >= 1`` of the decoration at ``arm.n``
  (decorations are stored in canonical preorder numbering, root ``0``).

Textually these read ``name``, ``arm.n`` and ``arm.n.x``.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

from .finite_tree import (
    TRIVIAL,
    FiniteRootedTree,
    canonical_code,
    embeds_rooted,
    path_tree,
    star_tree,
)

Vertex = Tuple

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class PresentationError(ValueError):
    """Raised for malformed presentations."""


class Unsupported(Exception):
    """The request refers to an infinite branch that is only recorded, not built."""


# -- vertices -----------------------------------------------------------------


def core(name: str) -> Vertex:
    return ("c", name)


def spine(arm: str, n: int) -> Vertex:
    return ("s", arm, n)


def deco(arm: str, n: int, x: int) -> Vertex:
    return ("d", arm, n, x) if x else ("s", arm, n)


def format_vertex(v: Vertex) -> str:
    if v[0] == "c":
        return v[1]
    if v[0] == "s":
        return f"{v[1]}.{v[2]}"
    return f"{v[1]}.{v[2]}.{v[3]}"


def parse_vertex(text: str) -> Vertex:
    parts = text.strip().split(".")
    if not all(parts) or not _IDENT.match(parts[0]):
        raise ValueError(f"bad vertex reference {text!r}")
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"bad vertex reference {text!r}") from None
    if any(k < 0 for k in nums) or len(nums) > 2:
        raise ValueError(f"bad vertex reference {text!r}")
    if not nums:
        return core(parts[0])
    if len(nums) == 1:
        return spine(parts[0], nums[0])
    return deco(parts[0], nums[0], nums[1])


def vertex_key(v: Vertex) -> Tuple:
    """Total order on vertices (used for deterministic output)."""
    return (("c", "s", "d").index(v[0]),) + tuple(v[1:])


# -- decoration sequences -----------------------------------------------------


@dataclass(frozen=True)
class Periodic:
    """Decorations ``prefix[0], ..., prefix[k-1]`` then ``period`` repeated."""

    prefix: Tuple[FiniteRootedTree, ...]
    period: Tuple[FiniteRootedTree, ...]

    def __post_init__(self) -> None:
        if not self.period:
            raise PresentationError("period must be nonempty")
        object.__setattr__(self, "prefix", tuple(t.canonical() for t in self.prefix))
        object.__setattr__(self, "period", tuple(t.canonical() for t in self.period))

    def at(self, n: int) -> FiniteRootedTree:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.period[(n - len(self.prefix)) % len(self.period)]

    @property
    def prefix_len(self) -> int:
        return len(self.prefix)

    @property
    def period_len(self) -> int:
        return len(self.period)

    def distinct(self) -> List[FiniteRootedTree]:
        return list({canonical_code(t): t for t in self.prefix + self.period}.values())

    def describe(self) -> str:
        pre = ", ".join(str(t) for t in self.prefix)
        per = ", ".join(str(t) for t in self.period)
        return f"prefix [{pre}]; period [{per}]"


@dataclass(frozen=True)
class Generated:
    """Decoration ``shape(slope * n + offset)`` at position ``n``."""

    shape: str
    slope: int
    offset: int

    def __post_init__(self) -> None:
        if self.shape not in ("path", "star"):
            raise PresentationError(f"unknown generated shape {self.shape!r}")
        if self.slope < 0 or self.offset < 0:
            raise PresentationError("affine rule needs nonnegative coefficients")

    def size_param(self, n: int) -> int:
        return self.slope * n + self.offset

    def at(self, n: int) -> FiniteRootedTree:
        m = self.size_param(n)
        return path_tree(m) if self.shape == "path" else star_tree(m)

    @property
    def prefix_len(self) -> int:
        return 0

    @property
    def period_len(self) -> int:
        return 1

    def describe(self) -> str:
        return f"family {self.shape} {self.slope} n + {self.offset}"


DecorationSeq = Union[Periodic, Generated]


def normalize_seq(seq: DecorationSeq) -> DecorationSeq:
    """Generated rules with slope 0 are constant, hence periodic."""
    if isinstance(seq, Generated) and seq.slope == 0:
        return Periodic((), (seq.at(0),))
    return seq


# -- presentations --------------------------------------------------------------


@dataclass(frozen=True)
class Arm:
    name: str
    attach: str
    seq: DecorationSeq

    def __post_init__(self) -> None:
        object.__setattr__(self, "seq", normalize_seq(self.seq))


@dataclass(frozen=True)
class End:
    arm: str

    def __str__(self) -> str:
        return self.arm


@dataclass(frozen=True)
class TreePresentation:
    core_vertices: Tuple[str, ...]
    core_edges: Tuple[Tuple[str, str], ...]
    basepoint: str
    arms: Tuple[Arm, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "core_vertices", tuple(self.core_vertices))
        object.__setattr__(self, "core_edges", tuple(tuple(e) for e in self.core_edges))
        object.__setattr__(self, "arms", tuple(self.arms))
        names = self.core_vertices
        if not names:
            raise PresentationError("core must be nonempty")
        if len(set(names)) != len(names):
            raise PresentationError("duplicate core vertex")
        for v in names:
            if not _IDENT.match(v):
                raise PresentationError(f"bad core vertex name {v!r}")
        known = set(names)
        for u, v in self.core_edges:
            for w in (u, v):
                if w not in known:
                    raise PresentationError(f"edge {u}-{v} refers to undeclared vertex {w}")
        if len(self.core_edges) != len(names) - 1:
            raise PresentationError("core must be a tree (|E| = |V| - 1)")
        if self.basepoint not in known:
            raise PresentationError(f"basepoint {self.basepoint} is not a core vertex")
        if len(self._core_bfs[0]) != len(names):
            raise PresentationError("core is disconnected")
        arm_names = [a.name for a in self.arms]
        if len(set(arm_names)) != len(arm_names):
            raise PresentationError("duplicate arm name")
        for a in self.arms:
            if not _IDENT.match(a.name):
                raise PresentationError(f"bad arm name {a.name!r}")
            if a.attach not in known:
                raise PresentationError(f"arm {a.name} attaches at unknown vertex {a.attach}")

    # -- core geometry --------------------------------------------------------

    @cached_property
    def _core_adj(self) -> Dict[str, List[str]]:
        adj: Dict[str, List[str]] = {v: [] for v in self.core_vertices}
        for u, v in self.core_edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    @cached_property
    def _core_bfs(self) -> Tuple[Dict[str, Optional[str]], Dict[str, int]]:
        parent: Dict[str, Optional[str]] = {self.basepoint: None}
        depth = {self.basepoint: 0}
        queue = deque([self.basepoint])
        while queue:
            u = queue.popleft()
            for w in self._core_adj[u]:
                if w not in parent:
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    queue.append(w)
        return parent, depth

    @cached_property
    def _core_dist(self) -> Dict[Tuple[str, str], int]:
        dist = {}
        for s in self.core_vertices:
            seen = {s: 0}
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for w in self._core_adj[u]:
                    if w not in seen:
                        seen[w] = seen[u] + 1
                        queue.append(w)
            for t, d in seen.items():
                dist[s, t] = d
        return dist

    @cached_property
    def _arms(self) -> Dict[str, Arm]:
        return {a.name: a for a in self.arms}

    @cached_property
    def _arms_at(self) -> Dict[str, List[str]]:
        at: Dict[str, List[str]] = {v: [] for v in self.core_vertices}
        for a in self.arms:
            at[a.attach].append(a.name)
        return at

    @property
    def core_diameter(self) -> int:
        return max(self._core_dist.values())

    def arm(self, name: str) -> Arm:
        try:
            return self._arms[name]
        except KeyError:
            raise KeyError(f"no arm named {name!r}") from None

    @property
    def arm_names(self) -> List[str]:
        return [a.name for a in self.arms]

    def decoration(self, arm: str, n: int) -> FiniteRootedTree:
        return self.arm(arm).seq.at(n)

    def has_generated(self) -> bool:
        return any(isinstance(a.seq, Generated) for a in self.arms)

    @property
    def period_lcm(self) -> int:
        return reduce(math.lcm, (a.seq.period_len for a in self.arms), 1)

    @property
    def max_prefix(self) -> int:
        return max((a.seq.prefix_len for a in self.arms), default=0)

    # -- vertices ---------------------------------------------------------

    def is_vertex(self, v: Vertex) -> bool:
        try:
            if v[0] == "c":
                return len(v) == 2 and v[1] in self._core_adj
            if v[0] == "s":
                return len(v) == 3 and v[1] in self._arms and isinstance(v[2], int) and v[2] >= 0
            if v[0] == "d":
                return (
                    len(v) == 4
                    and v[1] in self._arms
                    and isinstance(v[2], int)
                    and v[2] >= 0
                    and 1 <= v[3] < self.decoration(v[1], v[2]).size
                )
        except (TypeError, IndexError):
            return False
        return False

    def neighbors(self, v: Vertex) -> List[Vertex]:
        kind = v[0]
        if kind == "c":
            out = [core(w) for w in self._core_adj[v[1]]]
            out.extend(spine(a, 0) for a in self._arms_at[v[1]])
            return out
        if kind == "s":
            _, a, n = v
            prev = core(self.arm(a).attach) if n == 0 else spine(a, n - 1)
            dec = self.decoration(a, n)
            return [prev, spine(a, n + 1)] + [deco(a, n, c) for c in dec.children[0]]
        _, a, n, x = v
        dec = self.decoration(a, n)
        return [deco(a, n, dec.parent[x])] + [deco(a, n, c) for c in dec.children[x]]

    def degree(self, v: Vertex) -> int:
        return len(self.neighbors(v))

    def up(self, v: Vertex) -> Optional[Vertex]:
        """Neighbor of ``v`` toward the basepoint."""
        if v[0] == "c":
            p = self._core_bfs[0][v[1]]
            return None if p is None else core(p)
        if v[0] == "s":
            return core(self.arm(v[1]).attach) if v[2] == 0 else spine(v[1], v[2] - 1)
        return deco(v[1], v[2], self.decoration(v[1], v[2]).parent[v[3]])

    def skeleton_of(self, v: Vertex) -> Tuple[Vertex, int]:
        """Skeleton vertex carrying ``v`` and the depth of ``v`` below it."""
        if v[0] == "d":
            return spine(v[1], v[2]), self.decoration(v[1], v[2]).depths[v[3]]
        return v, 0

    def _skeleton_distance(self, u: Vertex, v: Vertex) -> int:
        def anchor(w: Vertex) -> Tuple[str, int, Optional[str], int]:
            if w[0] == "c":
                return w[1], 0, None, -1
            return self.arm(w[1]).attach, w[2] + 1, w[1], w[2]

        cu, hu, au, nu = anchor(u)
        cv, hv, av, nv = anchor(v)
        if au is not None and au == av:
            return abs(nu - nv)
        return hu + hv + self._core_dist[cu, cv]

    def distance(self, u: Vertex, v: Vertex) -> int:
        su, du = self.skeleton_of(u)
        sv, dv = self.skeleton_of(v)
        if su == sv and u[0] == "d" and v[0] == "d":
            dec = self.decoration(u[1], u[2])
            x, y = u[3], v[3]
            depth = dec.depths
            steps = 0
            while x != y:
                if depth[x] >= depth[y]:
                    x = dec.parent[x]
                else:
                    y = dec.parent[y]
                steps += 1
            return steps
        return du + dv + self._skeleton_distance(su, sv)

    def depth(self, v: Vertex) -> int:
        return self.distance(core(self.basepoint), v)

    def path(self, u: Vertex, v: Vertex) -> List[Vertex]:
        """Vertices of the unique path from ``u`` to ``v``."""
        left, right = [u], [v]
        du, dv = self.depth(u), self.depth(v)
        while du > dv:
            left.append(self.up(left[-1]))
            du -= 1
        while dv > du:
            right.append(self.up(right[-1]))
            dv -= 1
        while left[-1] != right[-1]:
            left.append(self.up(left[-1]))
            right.append(self.up(right[-1]))
        return left + right[-2::-1]

    def position(self, v: Vertex) -> int:
        """Spine position carrying ``v`` (``-1`` on the core)."""
        return -1 if v[0] == "c" else v[2]

    def far_point(self, arm: str, *vertices: Vertex) -> Vertex:
        """A spine vertex of ``arm`` beyond every given vertex."""
        reach = max((self.position(v) for v in vertices), default=0)
        return spine(arm, reach + 2)

    def on_ray(self, x: Vertex, arm: str, y: Vertex) -> bool:
        """Whether ``y`` lies on the ray from ``x`` into the end of ``arm``."""
        far = self.far_point(arm, x, y)
        return self.distance(x, y) + self.distance(y, far) == self.distance(x, far)

    def ray(self, x: Vertex, arm: str, length: int) -> List[Vertex]:
        """First ``length`` vertices of the ray from ``x`` into ``arm``'s end."""
        out = list(self.path(x, self.far_point(arm, x)))
        n = out[-1][2]
        while len(out) < length:
            n += 1
            out.append(spine(arm, n))
        return out[:length]

    def ball(self, center: Vertex, radius: int) -> List[Vertex]:
        """Vertices within graph distance ``radius`` of ``center`` (BFS order)."""
        seen = {center: 0}
        order = [center]
        queue = deque([center])
        while queue:
            u = queue.popleft()
            if seen[u] == radius:
                continue
            for w in self.neighbors(u):
                if w not in seen:
                    seen[w] = seen[u] + 1
                    order.append(w)
                    queue.append(w)
        return order

    def skeleton_depth(self, v: Vertex) -> int:
        s, _ = self.skeleton_of(v)
        return self._skeleton_distance(core(self.basepoint), s)

    def decorated_ball(self, radius: int) -> List[Vertex]:
        """Skeleton vertices within ``radius`` of the basepoint, each with its
        whole decoration (BFS order from the basepoint)."""
        start = core(self.basepoint)
        seen = {start}
        order = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self.neighbors(u):
                if w in seen:
                    continue
                if w[0] != "d" and self.skeleton_depth(w) > radius:
                    continue
                seen.add(w)
                order.append(w)
                queue.append(w)
        return order

    def __str__(self) -> str:
        return self.name or "<presentation>"


# -- truncation -----------------------------------------------------------------


@dataclass(frozen=True)
class Truncation:
    """A finite piece of a presented tree with its vertex labels."""

    vertices: Tuple[Vertex, ...]
    tree: FiniteRootedTree

    @cached_property
    def index(self) -> Dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def labels(self) -> List[str]:
        return [format_vertex(v) for v in self.vertices]

    def to_dot(self, name: str = "T") -> str:
        lines = [f"graph {name} {{"]
        for i, v in enumerate(self.vertices):
            lines.append(f'  n{i} [label="{format_vertex(v)}"];')
        for p, c in sorted(self.tree.edges(), key=lambda e: (min(e), max(e))):
            lines.append(f"  n{p} -- n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _rooted_piece(p: TreePresentation, vertices: Sequence[Vertex]) -> Truncation:
    index = {v: i for i, v in enumerate(vertices)}
    parent = [-1] * len(vertices)
    # vertices come in BFS order from vertices[0], so the first seen neighbor is the parent
    for i, v in enumerate(vertices[1:], start=1):
        parent[i] = min(index[w] for w in p.neighbors(v) if w in index and index[w] < i)
    return Truncation(tuple(vertices), FiniteRootedTree(tuple(parent)))


def truncation(p: TreePresentation, depth: int) -> Truncation:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    return _rooted_piece(p, p.decorated_ball(depth))


def truncate(p: TreePresentation, depth: int) -> FiniteRootedTree:
    """Finite shadow of ``p``: skeleton vertices within ``depth`` of the
    basepoint together with their decorations, rooted at the basepoint."""
    return truncation(p, depth).tree


def ball_tree(p: TreePresentation, center: Vertex, radius: int) -> FiniteRootedTree:
    """Metric ball around ``center`` rooted at ``center``."""
    return _rooted_piece(p, p.ball(center, radius)).tree


# -- ends, rakes, regularity ---------------------------------------------------


def ends(p: TreePresentation) -> List[End]:
    return [End(a.name) for a in p.arms]


@dataclass(frozen=True)
class RakeWitness:
    """Teeth at spine positions ``start, start + stride, ...`` of ``arm``."""

    arm: str
    start: int
    stride: int
    rule: str = ""

    def positions(self, count: int) -> List[int]:
        return [self.start + k * self.stride for k in range(count)]


@dataclass(frozen=True)
class NearlyFiniteVerdict:
    nearly_finite: bool
    rake: Optional[RakeWitness] = None

    def __bool__(self) -> bool:
        return self.nearly_finite


def find_rake(p: TreePresentation) -> Optional[RakeWitness]:
    """A rake inside ``p``: a spine carrying infinitely many nontrivial decorations.

    A nontrivial decoration gives its spine vertex a third neighbor, so the
    spine plus one child per such position is a rake.
    """
    for a in p.arms:
        seq = a.seq
        if isinstance(seq, Generated):
            # slope >= 1 after normalization, so sizes are positive from here on
            first = 0 if seq.offset > 0 else 1
            return RakeWitness(a.name, first, 1, f"{seq.shape}({seq.slope}n+{seq.offset})")
        for t, dec in enumerate(seq.period):
            if not dec.is_trivial():
                return RakeWitness(a.name, seq.prefix_len + t, seq.period_len, "period")
    return None


def is_nearly_finite(p: TreePresentation) -> NearlyFiniteVerdict:
    """Only finitely many vertices of degree at least three.

    Decided symbolically: the core and the decorations are finite, so only
    the periodic tail (or the generating rule) of an arm can contribute
    infinitely many branch points.
    """
    rake = find_rake(p)
    return NearlyFiniteVerdict(rake is None, rake)


def is_ray(p: TreePresentation) -> bool:
    """The presented tree is a one-way infinite path."""
    if len(p.arms) != 1:
        return False
    seq = p.arms[0].seq
    if isinstance(seq, Generated) or not all(t.is_trivial() for t in seq.prefix + seq.period):
        return False
    return all(p.degree(core(v)) <= 2 for v in p.core_vertices)


def branch_subtree(p: TreePresentation, arm: str, n: int) -> FiniteRootedTree:
    """The branch hanging at ``arm.n`` off the arm's spine (its decoration)."""
    if n < 1:
        raise Unsupported(f"branch at {arm}.{n} includes the core side and is infinite")
    return p.decoration(arm, n)


@dataclass(frozen=True)
class Regular:
    class_count: int


@dataclass(frozen=True)
class NonRegular:
    """Positions ``pairs[k] = (n_k, n_{k+1})`` with non-equimorphic branches;
    the family continues by ``rule``."""

    pairs: Tuple[Tuple[int, int], ...]
    rule: str


def end_regularity(p: TreePresentation, arm: str, sample: int = 6) -> Union[Regular, NonRegular]:
    """Regularity of the spine ray of ``arm``.

    Branches are compared as trees rooted at their spine vertex; for finite
    rooted trees mutual embeddability is isomorphism, so canonical codes
    count the classes. The branch at position 0 contains the core side and
    counts as one class of its own.
    """
    seq = p.arm(arm).seq
    if isinstance(seq, Periodic):
        return Regular(1 + len(seq.distinct()))
    pairs = []
    for k in range(1, sample + 1):
        small, big = seq.at(k), seq.at(k + 1)
        # bigger decoration cannot go into the smaller one
        assert embeds_rooted(big, small) is None
        pairs.append((k, k + 1))
    return NonRegular(tuple(pairs), f"n_k = k, sizes {seq.shape}({seq.slope}n+{seq.offset})")


# -- presentation isomorphism -----------------------------------------------------


@dataclass(frozen=True)
class IsoVerdict:
    """``Isomorphic`` (trusting the certified depth), ``Distinct`` (proved at
    ``depth``) or ``DistinctUpToDepth`` (nothing told them apart through
    ``depth``; undecided)."""

    kind: str
    depth: int

    def __str__(self) -> str:
        return f"{self.kind}({self.depth})" if self.kind != "Isomorphic" else "Isomorphic"


def certified_depth(p: TreePresentation, q: TreePresentation) -> int:
    lcm = math.lcm(p.period_lcm, q.period_lcm)
    decos = [t for r in (p, q) for a in r.arms if isinstance(a.seq, Periodic) for t in a.seq.distinct()]
    max_deco = max((t.height for t in decos), default=0)
    return len(p.core_vertices) + len(q.core_vertices) + max(p.max_prefix, q.max_prefix) + 2 * lcm + max_deco + 2


def _center_candidates(q: TreePresentation, radius: int, size_cap: int) -> Iterator[Vertex]:
    """Vertices of ``q`` whose radius-``radius`` balls realise every ball type
    that could match a ball with at most ``size_cap`` vertices."""
    for v in q.core_vertices:
        yield core(v)
    for a in q.arms:
        seq = a.seq
        if isinstance(seq, Periodic):
            limit = seq.prefix_len + seq.period_len + radius + 1
        else:
            limit = 3 * radius + 4 + size_cap
        for n in range(limit):
            yield spine(a.name, n)
            for x in range(1, q.decoration(a.name, n).size):
                yield deco(a.name, n, x)


def _ball_codes(q: TreePresentation, radius: int, size_cap: int) -> Set[str]:
    codes = set()
    for y in _center_candidates(q, radius, size_cap):
        ball = q.ball(y, radius)
        if len(ball) <= size_cap:
            codes.add(canonical_code(_rooted_piece(q, ball).tree))
    return codes


def basepoint_code(p: TreePresentation, radius: int) -> str:
    return canonical_code(ball_tree(p, core(p.basepoint), radius))


def distinguishes(p: TreePresentation, q: TreePresentation, radius: int) -> bool:
    """No vertex of ``q`` has the basepoint ball of ``p`` (or vice versa)."""
    for a, b in ((p, q), (q, p)):
        tree = ball_tree(a, core(a.basepoint), radius)
        if canonical_code(tree) not in _ball_codes(b, radius, tree.size):
            return True
    return False


def is_isomorphic_presentation(
    p: TreePresentation, q: TreePresentation, max_depth: Optional[int] = None
) -> IsoVerdict:
    """Compare metric balls up to the certified depth.

    An isomorphism sends the basepoint of ``p`` to some vertex of ``q`` and
    preserves balls around it, so a ball type of ``p`` missing from ``q``
    proves the trees distinct. Agreement through the certified depth is
    reported as ``Isomorphic`` for purely periodic inputs; that step is a
    heuristic bound, not a proof.
    """
    bound = certified_depth(p, q)
    generated = p.has_generated() or q.has_generated()
    if generated:
        bound = min(bound, 10)
    if max_depth is not None:
        bound = min(bound, max_depth)
    for d in range(bound + 1):
        if distinguishes(p, q, d):
            return IsoVerdict("Distinct", d)
    if generated or (max_depth is not None and bound < certified_depth(p, q)):
        return IsoVerdict("DistinctUpToDepth", bound)
    return IsoVerdict("Isomorphic", bound)
