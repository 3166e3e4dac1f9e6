"""Siblings: difference forests, the S_k construction, equimorphy checks and
the sibling-number certificate ladder.

Two trees are siblings when each embeds into the other. ``Sib(T)`` counts
the isomorphism classes of siblings of ``T``. For trees in the presentation
class the ladder below decides ``Sib(T)`` to be one or infinite in every case
except one direction with only hyperbolic embeddings and regular ends, which
is reported as open.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .embedding import (
    EmbeddingError,
    NotValidated,
    PresentedEmbedding,
    classify,
    directions_set,
    make_embedding,
    power,
    preserves_backward,
    preserves_forward,
    retarget,
    search_embeddings,
)
from .finite_tree import TRIVIAL, embeds_rooted
from .presentation import (
    Arm,
    Generated,
    NonRegular,
    Periodic,
    TreePresentation,
    Unsupported,
    Vertex,
    core,
    end_regularity,
    find_rake,
    format_vertex,
    is_isomorphic_presentation,
    is_ray,
    vertex_key,
)


class NotParabolic(EmbeddingError):
    pass


class IsRay(EmbeddingError):
    pass


class NonRegularDirection(EmbeddingError):
    pass


class TooManyDirections(EmbeddingError):
    pass


# -- difference forests ------------------------------------------------------------


@dataclass(frozen=True)
class UnboundedComponents:
    """Along ``arm`` the decoration at ``n + shift`` strictly exceeds the one
    at ``n`` for infinitely many ``n``, so every such position leaves part of
    a decoration outside the image."""

    arm: str
    shift: int
    rule: str

    def to_dict(self) -> dict:
        return {"arm": self.arm, "shift": self.shift, "rule": self.rule}


@dataclass(frozen=True)
class DifferenceForestReport:
    counts: Tuple[Tuple[int, int], ...]
    components: Tuple[Tuple[Vertex, ...], ...]
    nearly_finite: Tuple[bool, ...]
    certificate: Optional[UnboundedComponents]

    def count(self, depth: int) -> int:
        return dict(self.counts)[depth]


def _strictly_exceeds(small, big) -> bool:
    return embeds_rooted(small, big) is not None and embeds_rooted(big, small) is None


def infinite_components_certificate(f: PresentedEmbedding) -> Optional[UnboundedComponents]:
    """Symbolic witness that ``T \\ f(T)`` has infinitely many components.

    For periodic arms the certificate never exists: along a self-rule the
    decorations at ``n`` and ``n + shift`` run through one cycle of mutual
    embeddings, and finite rooted trees that embed both ways are isomorphic.
    """
    c = classify(f)
    if c.is_elliptic:
        return None
    p = f.source
    for r in f.rules:
        if r.source != r.target or r.shift == 0:
            continue
        seq = p.arm(r.source).seq
        if isinstance(seq, Generated):
            if r.shift > 0:
                return UnboundedComponents(
                    r.source, r.shift, f"{seq.shape}({seq.slope}n+{seq.offset}) strictly grows"
                )
            continue
        first = max(r.start, seq.prefix_len, seq.prefix_len - r.shift)
        for n in range(first, first + seq.period_len):
            if _strictly_exceeds(seq.at(n), seq.at(n + r.shift)):
                return UnboundedComponents(r.source, r.shift, f"positions {n} + {seq.period_len}k")
    return None


def _components(p: TreePresentation, vertices: Iterable[Vertex], keep) -> List[List[Vertex]]:
    members = [v for v in vertices if keep(v)]
    member_set = set(members)
    seen = set()
    out = []
    for v in members:
        if v in seen:
            continue
        comp = [v]
        seen.add(v)
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in p.neighbors(u):
                if w in member_set and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        out.append(sorted(comp, key=vertex_key))
    return out


def difference_forest(f: PresentedEmbedding, depths: Sequence[int]) -> DifferenceForestReport:
    """Components of the truncation at each depth minus the image of ``f``.

    Components reaching the truncation boundary are only counted when the
    symbolic certificate is present; otherwise they might merge further out.
    """
    if not f.is_self_map:
        raise EmbeddingError("difference forest needs a self-embedding")
    if f.violations:
        raise NotValidated(f.violations)
    p = f.source
    cert = infinite_components_certificate(f)
    counts = []
    last: List[List[Vertex]] = []
    flags: List[bool] = []
    for d in sorted(depths):
        ball = p.decorated_ball(d)
        inside = set(ball)
        comps = _components(p, ball, lambda v: f.preimage(v) is None)
        kept = []
        kept_flags = []
        for comp in comps:
            open_ends = {w[1] for v in comp for w in p.neighbors(v) if w not in inside}
            if open_ends and cert is None:
                continue
            kept.append(comp)
            # a finite component is nearly finite; an open one is unless it runs out along a rake
            kept_flags.append(all(_arm_is_bare_eventually(p, a) for a in open_ends))
        counts.append((d, len(kept)))
        last, flags = kept, kept_flags
    return DifferenceForestReport(
        tuple(counts), tuple(tuple(c) for c in last), tuple(flags), cert
    )


def _arm_is_bare_eventually(p: TreePresentation, arm: str) -> bool:
    seq = p.arm(arm).seq
    return isinstance(seq, Periodic) and all(t.is_trivial() for t in seq.period)


# -- the S_k construction -----------------------------------------------------------


def _first_branch_vertex(f: PresentedEmbedding, limit: int) -> Vertex:
    c = classify(f)
    p = f.source
    for v in c.ray.vertices(p, limit):
        if p.degree(v) >= 3:
            return v
    raise EmbeddingError(f"no vertex of degree 3 within {limit} steps along the invariant ray")


def _trivialize(p: TreePresentation, v: Vertex, ray: Sequence[Vertex]) -> TreePresentation:
    """Replace the branch hanging at ``v`` off the invariant ray by a single vertex."""
    if v[0] == "d":
        raise Unsupported(f"{format_vertex(v)} lies inside a decoration")
    if v[0] == "s":
        arm = p.arm(v[1])
        seq = arm.seq
        on_ray = set(ray)
        if ("s", v[1], v[2] + 1) not in on_ray:
            raise Unsupported(f"the branch at {format_vertex(v)} contains the rest of arm {v[1]}")
        if isinstance(seq, Generated):
            raise Unsupported(f"arm {v[1]} has generated decorations")
        n = v[2]
        prefix = [seq.at(i) for i in range(max(seq.prefix_len, n + 1))]
        prefix[n] = TRIVIAL
        # the period keeps its phase: it restarts where the old one stood at the new prefix end
        shift = (len(prefix) - seq.prefix_len) % seq.period_len
        period = seq.period[shift:] + seq.period[:shift]
        arms = tuple(
            Arm(a.name, a.attach, Periodic(tuple(prefix), period)) if a.name == v[1] else a for a in p.arms
        )
        return replace(p, arms=arms)
    # core vertex: drop every core branch at v away from the ray
    on_ray = set(ray)
    drop = set()
    for w in p.neighbors(v):
        if w in on_ray:
            continue
        if w[0] != "c":
            raise Unsupported(f"the branch at {format_vertex(v)} contains arm {w[1]}")
        queue = deque([w])
        drop.add(w[1])
        while queue:
            u = queue.popleft()
            for x in p.neighbors(u):
                if x == v or (x[0] == "c" and x[1] in drop):
                    continue
                if x[0] != "c":
                    raise Unsupported(f"the branch at {format_vertex(v)} contains arm {x[1]}")
                drop.add(x[1])
                queue.append(x)
    keep = tuple(u for u in p.core_vertices if u not in drop)
    edges = tuple(e for e in p.core_edges if e[0] not in drop and e[1] not in drop)
    return replace(p, core_vertices=keep, core_edges=edges)


def inclusion(sub: TreePresentation, sup: TreePresentation) -> PresentedEmbedding:
    """The identity on vertex names, read as a map ``sub -> sup``."""
    return make_embedding(
        sub,
        {core(v): core(v) for v in sub.core_vertices},
        [(a, a, 0, 0) for a in sub.arm_names],
        target=sup,
        name="incl",
    )


def _check_sk(f: PresentedEmbedding, k: int):
    p = f.source
    c = classify(f)
    if c.kind != "parabolic":
        raise NotParabolic(f"{f.name or 'embedding'} is {c.kind}")
    if is_ray(p):
        raise IsRay("the tree is a ray")
    if isinstance(end_regularity(p, c.direction), NonRegular):
        raise NonRegularDirection(f"direction {c.direction} is non-regular")
    if k < 1:
        raise ValueError("k must be at least 1")
    return c


def _sk_chain(f: PresentedEmbedding, k: int) -> List[TreePresentation]:
    c = _check_sk(f, k)
    p = f.source
    limit = len(p.core_vertices) + p.max_prefix + p.period_lcm + 4 * len(f.region()) + 4
    s = _first_branch_vertex(f, limit)
    out = []
    current = p
    image = s
    for j in range(1, k + 1):
        image = f(image)
        ray = c.ray.vertices(p, p.position(image) + len(p.core_vertices) + 3)
        current = _trivialize(current, image, ray)
        out.append(replace(current, name=f"{p.name or 'P'}_S{j}"))
    return out


def construct_sibling_sk(f: PresentedEmbedding, k: int) -> TreePresentation:
    """The sibling obtained by trivializing the branches at ``f(s) .. f^k(s)``,
    where ``s`` is the first vertex of degree at least three on the invariant ray.

    Checks on the way out that the result sits inside the previous member and
    that ``f^(k+1)`` embeds the original tree into it.
    """
    chain = _sk_chain(f, k)
    sk = chain[-1]
    prev = chain[-2] if k > 1 else f.source
    bad = inclusion(sk, prev).violations or retarget(power(f, k + 1), sk).violations
    if bad:
        raise EmbeddingError(f"S_{k} postcondition failed: {bad[0]}")
    return sk


@dataclass(frozen=True)
class SiblingFamily:
    base: TreePresentation
    embedding: PresentedEmbedding
    members: Tuple[TreePresentation, ...]
    inclusions: Tuple[PresentedEmbedding, ...]
    powers: Tuple[PresentedEmbedding, ...]

    def violations(self) -> List[str]:
        out = []
        for j, (inc, pw) in enumerate(zip(self.inclusions, self.powers), start=1):
            for v in inc.violations:
                out.append(f"inclusion S_{j}: {v}")
            for v in pw.violations:
                out.append(f"f^{j + 1} into S_{j}: {v}")
            if inc.source == inc.target:
                out.append(f"S_{j} equals its predecessor")
        return out


def sibling_family(f: PresentedEmbedding, k: int) -> SiblingFamily:
    chain = _sk_chain(f, k)
    prevs = [f.source] + chain[:-1]
    incs = tuple(inclusion(s, prev) for s, prev in zip(chain, prevs))
    pows = tuple(
        replace(retarget(power(f, j + 1), s), name=f"{f.name or 'f'}^{j + 1}") for j, s in enumerate(chain, start=1)
    )
    return SiblingFamily(f.source, f, tuple(chain), incs, pows)


@dataclass(frozen=True)
class PairwiseReport:
    distinct: bool
    depths: Tuple[Tuple[Tuple[str, str], Optional[int]], ...]


def verify_pairwise_noniso(members: Sequence[TreePresentation], depth: int) -> PairwiseReport:
    """Each pair must be told apart by balls of radius at most ``depth``."""
    depths = []
    ok = True
    for (i, a), (j, b) in combinations(enumerate(members), 2):
        v = is_isomorphic_presentation(a, b, max_depth=depth)
        sep = v.depth if v.kind == "Distinct" else None
        ok = ok and sep is not None
        depths.append(((a.name or str(i), b.name or str(j)), sep))
    return PairwiseReport(ok, tuple(depths))


# -- equimorphy ---------------------------------------------------------------------


@dataclass(frozen=True)
class Equimorphy:
    """``MutualEmbeddings``, ``OneWay`` (with the direction that exists and an
    obstruction for the other) or ``Unknown``."""

    kind: str
    forward: Optional[PresentedEmbedding] = None
    backward: Optional[PresentedEmbedding] = None
    obstruction: str = ""

    def __str__(self) -> str:
        if self.kind == "OneWay":
            return f"OneWay ({self.obstruction})"
        return self.kind


def max_degree(p: TreePresentation) -> float:
    if any(isinstance(a.seq, Generated) and a.seq.shape == "star" for a in p.arms):
        return math.inf
    reach = len(p.core_vertices) + p.max_prefix + p.period_lcm + 1
    return max(p.degree(v) for v in p.decorated_ball(reach))


def _obstruction(p: TreePresentation, q: TreePresentation) -> Optional[str]:
    """A reason no embedding ``p -> q`` exists, if an easy one applies."""
    if max_degree(p) > max_degree(q):
        return f"max degree {max_degree(p)} > {max_degree(q)}"
    if len(p.arms) > len(q.arms):
        return f"{len(p.arms)} ends > {len(q.arms)}"
    return None


def default_cross_bound(p: TreePresentation, q: TreePresentation) -> int:
    lcm = math.lcm(p.period_lcm, q.period_lcm)
    return lcm + max(p.max_prefix, q.max_prefix) + max(len(p.core_vertices), len(q.core_vertices)) + 1


def equimorphy_check(
    p: TreePresentation,
    q: TreePresentation,
    shift_bound: Optional[int] = None,
    patch_radius: int = 1,
) -> Equimorphy:
    bound = default_cross_bound(p, q) if shift_bound is None else shift_bound
    there = search_embeddings(p, bound, patch_radius, target=q)
    back = search_embeddings(q, bound, patch_radius, target=p)
    f = there[0] if there else None
    g = back[0] if back else None
    if f and g:
        return Equimorphy("MutualEmbeddings", f, g)
    if f and not g:
        why = _obstruction(q, p)
        if why:
            return Equimorphy("OneWay", forward=f, obstruction=f"no embedding back: {why}")
    if g and not f:
        why = _obstruction(p, q)
        if why:
            return Equimorphy("OneWay", backward=g, obstruction=f"no embedding forward: {why}")
    return Equimorphy("Unknown", f, g)


# -- certificates ------------------------------------------------------------------------

TAG_TEXT = {
    "Classical-Ray": "classical: ray",
    "Prop-Elliptic-Automorphism": "Proposition: no directions",
    "Prop-Two-Directions": "Proposition: two directions",
    "Thm-Parabolic-Infinite": "Theorem: parabolic, non-ray",
    "Cor-NonRegular-End": "Corollary: non-regular end",
    "Open-One-Direction": "one direction, hyperbolic only, regular ends",
}


@dataclass(frozen=True)
class SiblingCertificate:
    verdict: str
    tags: Tuple[str, ...]
    reason: str
    bounds: Tuple[Tuple[str, int], ...] = ()
    directions: Tuple[str, ...] = ()
    embedding: Optional[PresentedEmbedding] = None
    family: Optional[SiblingFamily] = None
    components: Optional[UnboundedComponents] = None
    classical: bool = False

    @property
    def theorem(self) -> str:
        return self.tags[0]

    def summary(self) -> str:
        return f"{self.verdict} ({TAG_TEXT[self.theorem]})"

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "theorem_tag": self.theorem,
            "tags": list(self.tags),
            "summary": self.summary(),
            "reason": self.reason,
            "classical": self.classical,
            "directions": list(self.directions),
            "bounds": dict(self.bounds),
            "witness": {},
        }
        if self.embedding is not None:
            out["witness"]["embedding"] = self.embedding.describe()
            out["witness"]["classification"] = str(classify(self.embedding))
        if self.family is not None:
            out["witness"]["family"] = [m.name for m in self.family.members]
            out["witness"]["sk_presentations"] = [
                {a.name: a.seq.describe() for a in m.arms} for m in self.family.members
            ]
        if self.components is not None:
            out["witness"]["components"] = self.components.to_dict()
        return out


def sibling_number_report(
    p: TreePresentation,
    shift_bound: Optional[int] = None,
    patch_radius: int = 1,
    k: int = 3,
) -> SiblingCertificate:
    """Decide ``Sib(T)`` from the embeddings found within the search bounds."""
    embs = search_embeddings(p, shift_bound, patch_radius)
    bound = shift_bound if shift_bound is not None else max(1, p.period_lcm)
    bounds = (("shift_bound", bound), ("patch_radius", patch_radius))
    if is_ray(p):
        return SiblingCertificate(
            "ExactlyOne",
            ("Classical-Ray",),
            "every sibling of a ray is a ray; classical fact, not derived here",
            bounds,
            ("A",) if p.arms else (),
            classical=True,
        )
    dirs = directions_set(p, embeddings=embs)
    names = tuple(str(e) for e in dirs.directions)
    if len(dirs) > 2:
        raise TooManyDirections(f"found {len(dirs)} directions; a tree has zero, one, two or infinitely many")
    if len(dirs) == 0:
        return SiblingCertificate(
            "ExactlyOne",
            ("Prop-Elliptic-Automorphism",),
            "every embedding found is elliptic, hence an automorphism",
            bounds,
        )
    if len(dirs) == 2:
        return SiblingCertificate(
            "ExactlyOne",
            ("Prop-Two-Directions",),
            f"two directions {names[0]} and {names[1]}",
            bounds,
            names,
            embedding=dirs.witness(names[0]),
        )
    kinds = [(f, classify(f)) for f in embs]
    parabolic = [f for f, c in kinds if c.kind == "parabolic"]
    if parabolic:
        f = min(parabolic, key=lambda g: (classify(g).periodicity, g.schema_key()))
        arm = classify(f).direction
        if not isinstance(end_regularity(p, arm), NonRegular):
            fam = sibling_family(f, k)
            return SiblingCertificate(
                "Infinite",
                ("Thm-Parabolic-Infinite",),
                f"parabolic embedding with regular direction {arm}; S_1..S_{k} are pairwise distinct siblings",
                bounds + (("k", k),),
                names,
                embedding=f,
                family=fam,
            )
        return SiblingCertificate(
            "Infinite",
            ("Cor-NonRegular-End", "Thm-Parabolic-Infinite"),
            f"parabolic embedding preserving the non-regular end {arm} forward",
            bounds,
            names,
            embedding=f,
            components=infinite_components_certificate(f),
        )
    for f, c in kinds:
        if c.is_elliptic:
            continue
        for a in p.arm_names:
            if (preserves_forward(f, a) or preserves_backward(f, a)) and isinstance(end_regularity(p, a), NonRegular):
                return SiblingCertificate(
                    "Infinite",
                    ("Cor-NonRegular-End",),
                    f"non-elliptic embedding preserving the non-regular end {a}",
                    bounds,
                    names,
                    embedding=f,
                    components=infinite_components_certificate(f),
                )
    witness = next((f for f, c in kinds if not c.is_elliptic), None)
    return SiblingCertificate(
        "OpenCase",
        ("Open-One-Direction",),
        "one direction, only hyperbolic embeddings, regular ends: Sib is 1 or infinite, undecided",
        bounds,
        names,
        embedding=witness,
    )
