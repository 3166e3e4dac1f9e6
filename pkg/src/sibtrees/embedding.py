"""Self-embeddings of presented trees.

An embedding is stored in *tail-regular* form: a finite patch (explicit
vertex pairs) on the core and the first few positions of every arm, and one
:class:`TailRule` per arm saying that from position ``start`` on, spine vertex
``A.n`` goes to ``B.(n + shift)`` and the decoration at ``A.n`` goes into the
decoration at ``B.(n + shift)`` by a rooted embedding. Every embedding of a
presented tree has this form: a spine image is a path, and far out it can only
run along the spine of some arm.

Decoration maps are certified finitely. For two periodic sequences the map
table repeats after one common period. When a generated (path or star)
sequence is involved the map is the inclusion ``x -> x`` of canonical
preorder numberings, and feasibility reduces to comparing affine sizes.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .finite_tree import FiniteRootedTree, embeds_rooted, is_embedding
from .presentation import (
    DecorationSeq,
    End,
    Generated,
    Periodic,
    TreePresentation,
    Vertex,
    core,
    deco,
    format_vertex,
    spine,
    vertex_key,
)

VertexMapTuple = Tuple[int, ...]


class EmbeddingError(Exception):
    pass


class NotValidated(EmbeddingError):
    def __init__(self, violations: Sequence["Violation"]) -> None:
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


class IsElliptic(EmbeddingError):
    pass


# -- decoration witnesses ---------------------------------------------------------


@dataclass(frozen=True)
class DecorationWitness:
    """Rooted decoration maps for positions ``n >= start``.

    ``head[k]`` serves position ``start + k``; afterwards ``loop`` repeats.
    An empty ``loop`` means the inclusion ``x -> x`` past the head.
    """

    start: int
    head: Tuple[VertexMapTuple, ...] = ()
    loop: Tuple[VertexMapTuple, ...] = ()

    @property
    def is_inclusion(self) -> bool:
        return not self.loop

    def at(self, n: int) -> Optional[VertexMapTuple]:
        k = n - self.start
        if k < 0:
            raise ValueError(f"position {n} precedes witness start {self.start}")
        if k < len(self.head):
            return self.head[k]
        if not self.loop:
            return None
        return self.loop[(k - len(self.head)) % len(self.loop)]

    def image(self, n: int, x: int) -> int:
        table = self.at(n)
        return x if table is None else table[x]

    def preimage(self, n: int, y: int, source_size: int) -> Optional[int]:
        table = self.at(n)
        if table is None:
            return y if y < source_size else None
        try:
            return table.index(y)
        except ValueError:
            return None


def _inclusion_ok(a: FiniteRootedTree, b: FiniteRootedTree) -> bool:
    return a.size <= b.size and a.parent == b.parent[: a.size]


def _shape_compatible(t: FiniteRootedTree, shape: str) -> bool:
    if shape == "path":
        return all(len(k) <= 1 for k in t.children) and t.parent == tuple(range(-1, t.size - 1))
    return t.height <= 1


def _cert_failure_generated(src: DecorationSeq, tgt: DecorationSeq, start: int, shift: int) -> Optional[int]:
    """First failing position of the inclusion certificate, or None if it holds
    for every ``n >= start``."""
    if isinstance(src, Generated) and isinstance(tgt, Generated):
        if src.shape == tgt.shape:
            if src.slope <= tgt.slope:
                return None if src.size_param(start) <= tgt.size_param(start + shift) else start
            # sizes cross once and stay crossed
            n = start
            while src.size_param(n) <= tgt.size_param(n + shift):
                n += 1
            return n
        n = start
        while _inclusion_ok(src.at(n), tgt.at(n + shift)):
            n += 1
        return n
    if isinstance(src, Generated):
        cap = max(t.size for t in tgt.prefix + tgt.period)
        n = start
        while src.at(n).size <= cap and _inclusion_ok(src.at(n), tgt.at(n + shift)):
            n += 1
        return n
    # periodic into generated: targets only grow, so one pass per residue suffices
    for n in range(start, max(start, src.prefix_len) + src.period_len):
        if not _inclusion_ok(src.at(n), tgt.at(n + shift)):
            return n
    return None


def certify(src: DecorationSeq, tgt: DecorationSeq, start: int, shift: int) -> Tuple[Optional[DecorationWitness], Optional[int]]:
    """Witness that ``src(n)`` embeds rooted into ``tgt(n + shift)`` for all
    ``n >= start``; otherwise ``(None, first failing n)``."""
    if start + shift < 0:
        return None, start
    if isinstance(src, Periodic) and isinstance(tgt, Periodic):
        head_len = max(0, src.prefix_len - start, tgt.prefix_len - shift - start)
        cycle = math.lcm(src.period_len, tgt.period_len)
        maps = []
        for k in range(head_len + cycle):
            n = start + k
            a = src.at(n)
            m = embeds_rooted(a, tgt.at(n + shift))
            if m is None:
                return None, n
            maps.append(tuple(m[x] for x in range(a.size)))
        return DecorationWitness(start, tuple(maps[:head_len]), tuple(maps[head_len:])), None
    fail = _cert_failure_generated(src, tgt, start, shift)
    if fail is not None:
        return None, fail
    return DecorationWitness(start), None


def minimal_start(src: DecorationSeq, tgt: DecorationSeq, shift: int) -> Optional[int]:
    """Least ``start`` from which a decoration certificate exists, if any."""
    lo = max(0, -shift)
    if isinstance(src, Periodic) and isinstance(tgt, Periodic):
        hi = max(lo, src.prefix_len, tgt.prefix_len - shift)
        last_fail = lo - 1
        for n in range(lo, hi + math.lcm(src.period_len, tgt.period_len)):
            if embeds_rooted(src.at(n), tgt.at(n + shift)) is None:
                if n >= hi:
                    return None
                last_fail = n
        return last_fail + 1
    if isinstance(src, Generated) and isinstance(tgt, Periodic):
        return None
    if isinstance(src, Generated):
        if src.shape != tgt.shape or src.slope > tgt.slope:
            return None
        if src.slope == tgt.slope:
            return lo if src.offset <= tgt.size_param(shift) else None
        gap = src.offset - tgt.size_param(shift)
        return max(lo, -(-gap // (tgt.slope - src.slope)))
    if not all(_shape_compatible(t, tgt.shape) for t in src.period):
        return None
    biggest = max(t.size for t in src.prefix + src.period)
    last_fail = lo - 1
    for n in range(lo, max(lo, src.prefix_len) + src.period_len + biggest + abs(shift) + 1):
        if not _inclusion_ok(src.at(n), tgt.at(n + shift)):
            last_fail = n
    return last_fail + 1


# -- embeddings -------------------------------------------------------------------


@dataclass(frozen=True)
class TailRule:
    source: str
    target: str
    shift: int
    start: int
    witness: Optional[DecorationWitness] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.source} -> {self.target} shift {self.shift} from {self.start}"


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def _pairs(patch: Union[Dict[Vertex, Vertex], Iterable[Tuple[Vertex, Vertex]]]) -> Tuple[Tuple[Vertex, Vertex], ...]:
    items = patch.items() if isinstance(patch, dict) else patch
    return tuple(sorted(items, key=lambda kv: vertex_key(kv[0])))


@dataclass(frozen=True)
class PresentedEmbedding:
    """An embedding ``source -> target`` in tail-regular form."""

    source: TreePresentation
    target: TreePresentation
    patch: Tuple[Tuple[Vertex, Vertex], ...]
    rules: Tuple[TailRule, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "patch", _pairs(self.patch))
        filled = []
        for r in self.rules:
            if r.witness is None:
                try:
                    w, _ = certify(
                        self.source.arm(r.source).seq, self.target.arm(r.target).seq, r.start, r.shift
                    )
                except KeyError:
                    w = None
                r = replace(r, witness=w)
            filled.append(r)
        object.__setattr__(self, "rules", tuple(sorted(filled, key=lambda r: r.source)))

    @cached_property
    def patch_map(self) -> Dict[Vertex, Vertex]:
        return dict(self.patch)

    @cached_property
    def _rules(self) -> Dict[str, TailRule]:
        return {r.source: r for r in self.rules}

    @cached_property
    def _rules_by_target(self) -> Dict[str, TailRule]:
        return {r.target: r for r in self.rules}

    def rule_for(self, arm: str) -> TailRule:
        return self._rules[arm]

    @property
    def is_self_map(self) -> bool:
        return self.source == self.target

    def region(self) -> List[Vertex]:
        """Source vertices covered by the patch rather than by a rule."""
        out = [core(v) for v in self.source.core_vertices]
        for a in self.source.arms:
            for n in range(self._rules[a.name].start if a.name in self._rules else 0):
                out.append(spine(a.name, n))
                out.extend(deco(a.name, n, x) for x in range(1, a.seq.at(n).size))
        return out

    def _rule_image(self, v: Vertex) -> Optional[Vertex]:
        if v[0] == "c":
            return None
        r = self._rules.get(v[1])
        if r is None or r.witness is None or v[2] < r.start:
            return None
        m = v[2] + r.shift
        if v[0] == "s":
            return spine(r.target, m)
        return deco(r.target, m, r.witness.image(v[2], v[3]))

    def __call__(self, v: Vertex) -> Vertex:
        w = self.patch_map.get(v)
        if w is None:
            w = self._rule_image(v)
        if w is None:
            raise KeyError(f"{format_vertex(v)} has no image")
        return w

    def rule_preimage(self, w: Vertex) -> Optional[Vertex]:
        if w[0] == "c":
            return None
        r = self._rules_by_target.get(w[1])
        if r is None or r.witness is None:
            return None
        n = w[2] - r.shift
        if n < r.start:
            return None
        if w[0] == "s":
            return spine(r.source, n)
        x = r.witness.preimage(n, w[3], self.source.decoration(r.source, n).size)
        return None if x is None else deco(r.source, n, x)

    @cached_property
    def _patch_inverse(self) -> Dict[Vertex, Vertex]:
        return {w: v for v, w in self.patch}

    def preimage(self, w: Vertex) -> Optional[Vertex]:
        """The vertex mapped to ``w``, if any."""
        v = self._patch_inverse.get(w)
        if v is not None:
            return v
        v = self.rule_preimage(w)
        if v is not None and v in self.patch_map:
            return None
        return v

    @cached_property
    def violations(self) -> Tuple[Violation, ...]:
        return tuple(_validate(self))

    def is_valid(self) -> bool:
        return not self.violations

    @property
    def max_shift(self) -> int:
        return max((abs(r.shift) for r in self.rules), default=0)

    @property
    def patch_radius(self) -> int:
        return max((r.start for r in self.rules), default=0)

    def schema_key(self) -> Tuple:
        return (
            tuple((r.source, r.target, r.shift, r.start) for r in self.rules),
            tuple((vertex_key(v), vertex_key(w)) for v, w in self.patch),
        )

    def describe(self) -> str:
        patch = ", ".join(f"{format_vertex(v)} -> {format_vertex(w)}" for v, w in self.patch)
        rules = "; ".join(str(r) for r in self.rules)
        return f"patch {{{patch}}} rules {{{rules}}}"


def make_embedding(
    source: TreePresentation,
    patch: Dict[Vertex, Vertex],
    rules: Iterable[Tuple[str, str, int, int]],
    target: Optional[TreePresentation] = None,
    name: str = "",
) -> PresentedEmbedding:
    """Convenience constructor; ``rules`` are ``(source, target, shift, start)``."""
    return PresentedEmbedding(
        source, target or source, _pairs(patch), tuple(TailRule(*r) for r in rules), name
    )


def identity(p: TreePresentation) -> PresentedEmbedding:
    return make_embedding(
        p, {core(v): core(v) for v in p.core_vertices}, [(a, a, 0, 0) for a in p.arm_names], name="id"
    )


# -- validation -------------------------------------------------------------------


def _check_witness(f: PresentedEmbedding, r: TailRule) -> Optional[int]:
    """First position where the rule's decoration witness is not an embedding."""
    src = f.source.arm(r.source).seq
    tgt = f.target.arm(r.target).seq
    w = r.witness
    if w is None:
        return certify(src, tgt, r.start, r.shift)[1]
    if w.start != r.start:
        return r.start
    periodic = isinstance(src, Periodic) and isinstance(tgt, Periodic)
    if w.is_inclusion and not periodic:
        for k, table in enumerate(w.head):
            n = r.start + k
            if not is_embedding(src.at(n), tgt.at(n + r.shift), dict(enumerate(table))):
                return n
        return _cert_failure_generated(src, tgt, r.start + len(w.head), r.shift)
    if not periodic:
        return r.start
    settled = max(r.start + len(w.head), src.prefix_len, tgt.prefix_len - r.shift)
    cycle = math.lcm(src.period_len, tgt.period_len, len(w.loop) or 1)
    for n in range(r.start, settled + cycle):
        a = src.at(n)
        table = w.at(n) or tuple(range(a.size))
        if len(table) != a.size or not is_embedding(a, tgt.at(n + r.shift), dict(enumerate(table))):
            return n
    return None


def _validate(f: PresentedEmbedding) -> List[Violation]:
    p, q = f.source, f.target
    out: List[Violation] = []
    for name in p.arm_names:
        if name not in f._rules:
            out.append(Violation("BadRule", f"no rule for arm {name}"))
    targets: Dict[str, str] = {}
    for r in f.rules:
        if r.source not in p.arm_names:
            out.append(Violation("BadRule", f"rule for unknown arm {r.source}"))
            continue
        if r.target not in q.arm_names:
            out.append(Violation("BadRule", f"rule targets unknown arm {r.target}"))
            continue
        if r.start < 0:
            out.append(Violation("BadRule", f"{r}: negative start"))
            continue
        if r.target in targets:
            out.append(Violation("NotInjective", f"arms {targets[r.target]} and {r.source} both map into arm {r.target}"))
        targets[r.target] = r.source
        n = _check_witness(f, r)
        if n is not None:
            out.append(Violation("CertificateFails", f"arm {r.source} at position {n}"))
    if out:
        return out

    region = f.region()
    region_set = set(region)
    pm = f.patch_map
    for v in region:
        if v not in pm:
            out.append(Violation("Undefined", f"{format_vertex(v)} has no image"))
    for v, w in f.patch:
        if not p.is_vertex(v):
            out.append(Violation("Undefined", f"patch maps nonexistent vertex {format_vertex(v)}"))
        elif not q.is_vertex(w):
            out.append(Violation("Undefined", f"{format_vertex(v)} maps to nonexistent {format_vertex(w)}"))
        elif v not in region_set and f._rule_image(v) != w:
            out.append(Violation("BoundaryMismatch", f"patch sends {format_vertex(v)} to {format_vertex(w)}, rule disagrees"))
    if out:
        return out

    for u in region:
        fu = f(u)
        nbrs = set(q.neighbors(fu))
        for w in p.neighbors(u):
            if w in region_set and vertex_key(w) < vertex_key(u):
                continue
            if f(w) not in nbrs:
                out.append(Violation("AdjacencyBroken", f"edge {format_vertex(u)}-{format_vertex(w)}"))

    seen: Dict[Vertex, Vertex] = {}
    for u in region:
        w = f(u)
        if w in seen:
            out.append(Violation("NotInjective", f"{format_vertex(seen[w])} and {format_vertex(u)} both map to {format_vertex(w)}"))
        seen[w] = u
        other = f.rule_preimage(w)
        if other is not None and other not in region_set:
            out.append(Violation("NotInjective", f"{format_vertex(u)} and {format_vertex(other)} both map to {format_vertex(w)}"))
    return out


def validate(f: PresentedEmbedding) -> List[Violation]:
    """Empty list when ``f`` is a valid embedding of its source into its target."""
    return list(f.violations)


# -- composition --------------------------------------------------------------------


def _compose_witness(
    wf: DecorationWitness, wg: DecorationWitness, shift_f: int, start: int, size_at: Callable[[int], int]
) -> DecorationWitness:
    if wf.is_inclusion and wg.is_inclusion and not wf.head and not wg.head:
        return DecorationWitness(start)
    settled = max(start, wf.start + len(wf.head), wg.start + len(wg.head) - shift_f)
    cycle = math.lcm(len(wf.loop) or 1, len(wg.loop) or 1)
    maps = []
    for n in range(start, settled + cycle):
        maps.append(tuple(wg.image(n + shift_f, wf.image(n, x)) for x in range(size_at(n))))
    head_len = settled - start
    return DecorationWitness(start, tuple(maps[:head_len]), tuple(maps[head_len:]))


def compose(g: PresentedEmbedding, f: PresentedEmbedding) -> PresentedEmbedding:
    """The embedding ``g o f`` (apply ``f`` first)."""
    if f.target != g.source:
        raise EmbeddingError("cannot compose: target of f is not the source of g")
    rules = []
    for rf in f.rules:
        rg = g.rule_for(rf.target)
        start = max(rf.start, rg.start - rf.shift)
        seq = f.source.arm(rf.source).seq
        w = _compose_witness(rf.witness, rg.witness, rf.shift, start, lambda n, seq=seq: seq.at(n).size)
        rules.append(TailRule(rf.source, rg.target, rf.shift + rg.shift, start, w))
    draft = PresentedEmbedding(f.source, g.target, (), tuple(rules))
    patch = {v: g(f(v)) for v in draft.region()}
    name = f"{g.name}*{f.name}" if f.name and g.name else ""
    return PresentedEmbedding(f.source, g.target, _pairs(patch), tuple(rules), name)


def power(f: PresentedEmbedding, k: int) -> PresentedEmbedding:
    if k < 0:
        raise ValueError("negative power")
    out = identity(f.source)
    for _ in range(k):
        out = compose(f, out)
    if f.name:
        out = replace(out, name=f"{f.name}^{k}")
    return out


def retarget(f: PresentedEmbedding, target: TreePresentation) -> PresentedEmbedding:
    """Reread ``f`` as a map into ``target`` (same vertex names)."""
    return PresentedEmbedding(f.source, target, f.patch, f.rules, f.name)


# -- classification -------------------------------------------------------------------


@dataclass(frozen=True)
class FixedRay:
    """Ray from ``start`` into the end of ``arm``."""

    start: Vertex
    arm: str

    def vertices(self, p: TreePresentation, k: int) -> List[Vertex]:
        return p.ray(self.start, self.arm, k)

    def contains(self, p: TreePresentation, v: Vertex) -> bool:
        return p.on_ray(self.start, self.arm, v)

    def __str__(self) -> str:
        return f"ray from {format_vertex(self.start)} toward {self.arm}"


@dataclass(frozen=True)
class FixedDoubleRay:
    """Double ray between the ends of ``backward`` and ``forward``."""

    backward: str
    forward: str

    def vertices(self, p: TreePresentation, k: int) -> List[Vertex]:
        """The double ray from ``backward.(k-1)`` to ``forward.(k-1)``."""
        return p.path(spine(self.backward, k - 1), spine(self.forward, k - 1))

    def contains(self, p: TreePresentation, v: Vertex) -> bool:
        a = p.far_point(self.backward, v)
        b = p.far_point(self.forward, v)
        return p.distance(a, v) + p.distance(v, b) == p.distance(a, b)

    def __str__(self) -> str:
        return f"double ray {self.backward} <-> {self.forward}"


@dataclass(frozen=True)
class Classification:
    kind: str
    fixed_vertex: Optional[Vertex] = None
    fixed_edge: Optional[Tuple[Vertex, Vertex]] = None
    ray: Optional[FixedRay] = None
    double_ray: Optional[FixedDoubleRay] = None
    direction: Optional[str] = None
    backward: Optional[str] = None
    periodicity: Optional[int] = None

    @property
    def is_elliptic(self) -> bool:
        return self.kind == "elliptic"

    def __str__(self) -> str:
        if self.kind == "elliptic":
            if self.fixed_vertex is not None:
                return f"elliptic, fixes vertex {format_vertex(self.fixed_vertex)}"
            u, v = self.fixed_edge
            return f"elliptic, fixes edge {format_vertex(u)}-{format_vertex(v)}"
        if self.kind == "parabolic":
            return f"parabolic, direction {self.direction}, {self.ray}, periodicity {self.periodicity}"
        return (
            f"hyperbolic, direction {self.direction}, backward end {self.backward}, "
            f"periodicity {self.periodicity}"
        )


def _require_valid_self_map(f: PresentedEmbedding) -> None:
    if not f.is_self_map:
        raise EmbeddingError("classification needs a self-embedding")
    if f.violations:
        raise NotValidated(f.violations)


def classify(f: PresentedEmbedding) -> Classification:
    """Elliptic, parabolic or hyperbolic, with the fixed structure.

    Outside the patch region a rule moves every vertex to another arm or along
    its own arm, so fixed vertices and inverted edges can only occur in the
    region (or on a self-rule with shift 0). Without them, the ends fixed by
    ``f`` are the arms with self-rules; the one shifted outward is the
    direction and an inward-shifted one is the backward end.
    """
    _require_valid_self_map(f)
    cached = _CLASSIFY_CACHE.get(f)
    if cached is not None:
        return cached
    result = _classify(f)
    _CLASSIFY_CACHE[f] = result
    return result


_CLASSIFY_CACHE: Dict[PresentedEmbedding, Classification] = {}


def _classify(f: PresentedEmbedding) -> Classification:
    p = f.source
    base = core(p.basepoint)
    region = f.region()
    fixed = [v for v in region if f(v) == v]
    for r in f.rules:
        if r.source == r.target and r.shift == 0:
            fixed.append(spine(r.source, r.start))
    if fixed:
        best = min(fixed, key=lambda v: (p.distance(base, v), vertex_key(v)))
        return Classification("elliptic", fixed_vertex=best)
    for u in region:
        fu = f(u)
        if fu in p.neighbors(u) and f(fu) == u:
            edge = tuple(sorted((u, fu), key=vertex_key))
            return Classification("elliptic", fixed_edge=edge)

    forward = [r for r in f.rules if r.source == r.target and r.shift > 0]
    backward = [r for r in f.rules if r.source == r.target and r.shift < 0]
    if not forward:
        raise EmbeddingError(f"no fixed vertex, edge or forward end found for {f.describe()}")
    if len(forward) > 1 or len(backward) > 1:
        raise EmbeddingError("a valid embedding cannot preserve two ends forward")
    fwd = forward[0]
    if backward:
        back = backward[0]
        if back.shift != -fwd.shift:
            raise EmbeddingError("shifts along the invariant double ray disagree")
        return Classification(
            "hyperbolic",
            double_ray=FixedDoubleRay(back.source, fwd.source),
            direction=fwd.source,
            backward=back.source,
            periodicity=fwd.shift,
        )
    arm = fwd.source
    candidates = region + [spine(arm, n) for n in range(fwd.start, fwd.start + fwd.shift + 1)]
    far = spine(arm, max(p.position(v) for v in candidates) + fwd.shift + 2)
    on_ray = [x for x in candidates if p.on_ray(x, arm, f(x))]
    # the start of the invariant ray is the member of S farthest from the end;
    # members of S all lie on one ray, so distances to the end are distinct
    start = max(on_ray, key=lambda x: p.distance(x, far))
    return Classification(
        "parabolic",
        ray=FixedRay(start, arm),
        direction=arm,
        periodicity=p.distance(start, f(start)),
    )


def fixed_structure(f: PresentedEmbedding) -> Union[Vertex, Tuple[Vertex, Vertex], FixedRay, FixedDoubleRay]:
    c = classify(f)
    if c.kind == "elliptic":
        return c.fixed_vertex if c.fixed_vertex is not None else c.fixed_edge
    return c.ray if c.kind == "parabolic" else c.double_ray


def direction(f: PresentedEmbedding) -> End:
    c = classify(f)
    if c.is_elliptic:
        raise IsElliptic(f"{f.name or 'embedding'} is elliptic")
    return End(c.direction)


def periodicity(f: PresentedEmbedding, checks: int = 10) -> int:
    """Displacement along the invariant (double) ray, checked on ``checks`` vertices."""
    c = classify(f)
    if c.is_elliptic:
        raise IsElliptic(f"{f.name or 'embedding'} is elliptic")
    p = f.source
    if c.kind == "parabolic":
        sample = c.ray.vertices(p, checks)
    else:
        sample = c.double_ray.vertices(p, checks // 2 + 1)[:checks]
    values = {p.distance(r, f(r)) for r in sample}
    if values != {c.periodicity}:
        raise EmbeddingError(f"displacement along the invariant ray is not constant: {sorted(values)}")
    return c.periodicity


def spine_order(f: PresentedEmbedding, s: Vertex, t: Vertex) -> str:
    """``LeftOf`` when ``s <_f t`` on the invariant (double) ray."""
    c = classify(f)
    if c.is_elliptic:
        raise IsElliptic("order is only defined for non-elliptic embeddings")
    p = f.source
    structure = c.ray if c.kind == "parabolic" else c.double_ray
    if not (structure.contains(p, s) and structure.contains(p, t)):
        return "NotOnSpine"
    if s == t:
        return "Equal"
    far = p.far_point(c.direction, s, t)
    return "LeftOf" if p.distance(t, far) < p.distance(s, far) else "RightOf"


def preserves_forward(f: PresentedEmbedding, e: Union[End, str]) -> bool:
    """Some ray of the end is mapped into itself."""
    arm = e.arm if isinstance(e, End) else e
    r = f.rule_for(arm)
    return r.target == arm and r.shift >= 0


def preserves_backward(f: PresentedEmbedding, e: Union[End, str]) -> bool:
    """Some ray of the end is contained in its own image."""
    arm = e.arm if isinstance(e, End) else e
    r = f.rule_for(arm)
    return r.target == arm and r.shift <= 0


# -- search -------------------------------------------------------------------------------


def default_shift_bound(p: TreePresentation, q: Optional[TreePresentation] = None) -> int:
    q = q or p
    return max(1, math.lcm(p.period_lcm, q.period_lcm))


def _order_region(p: TreePresentation, region: List[Vertex], rules: Dict[str, TailRule]) -> List[Tuple[Vertex, Optional[Vertex]]]:
    """Region vertices in BFS order from the rule boundaries, each paired with
    an already placed neighbor (``None`` only for a free starting vertex)."""
    region_set = set(region)
    placed: Set[Vertex] = set()
    order: List[Tuple[Vertex, Optional[Vertex]]] = []
    queue: deque = deque()
    for a in p.arms:
        st = rules[a.name].start
        first = spine(a.name, st - 1) if st > 0 else core(a.attach)
        if first not in placed:
            placed.add(first)
            order.append((first, spine(a.name, st)))
            queue.append(first)
    if not order:
        start = core(p.basepoint)
        placed.add(start)
        order.append((start, None))
        queue.append(start)
    while queue:
        u = queue.popleft()
        for w in p.neighbors(u):
            if w in region_set and w not in placed:
                placed.add(w)
                order.append((w, u))
                queue.append(w)
    return order


def _complete_patch(
    p: TreePresentation,
    q: TreePresentation,
    rules: Tuple[TailRule, ...],
    limit: int,
    free_candidates: Sequence[Vertex],
) -> List[Dict[Vertex, Vertex]]:
    draft = PresentedEmbedding(p, q, (), rules)
    region = draft.region()
    region_set = set(region)
    order = _order_region(p, region, {r.source: r for r in rules})
    assign: Dict[Vertex, Vertex] = {}
    used: Set[Vertex] = set()
    out: List[Dict[Vertex, Vertex]] = []

    def image(v: Vertex) -> Optional[Vertex]:
        if v in region_set:
            return assign.get(v)
        return draft._rule_image(v)

    def natural(u: Vertex) -> Optional[Vertex]:
        if u[0] == "c":
            return u if p is q or q.is_vertex(u) else None
        r = draft._rules[u[1]]
        v = deco(r.target, u[2] + r.shift, u[3] if u[0] == "d" else 0)
        return v if u[2] + r.shift >= 0 and q.is_vertex(v) else None

    def step(i: int) -> None:
        if len(out) >= limit:
            return
        if i == len(order):
            out.append(dict(assign))
            return
        u, anchor = order[i]
        if anchor is None:
            cands = list(free_candidates)
        else:
            cands = q.neighbors(image(anchor))
        pref = natural(u)
        if pref in cands:
            cands = [pref] + [c for c in cands if c != pref]
        placed_nbrs = [image(w) for w in p.neighbors(u)]
        placed_nbrs = [w for w in placed_nbrs if w is not None]
        for c in cands:
            if c in used or draft.rule_preimage(c) is not None:
                continue
            cn = q.neighbors(c)
            if any(w not in cn for w in placed_nbrs):
                continue
            assign[u] = c
            used.add(c)
            step(i + 1)
            del assign[u]
            used.discard(c)
            if len(out) >= limit:
                return

    step(0)
    return out


def _tighten(f: PresentedEmbedding) -> PresentedEmbedding:
    """Move rule starts inward while the patch agrees with the rule."""
    rules = {r.source: r for r in f.rules}
    patch = dict(f.patch)
    for name, r in list(rules.items()):
        src = f.source.arm(name).seq
        tgt = f.target.arm(r.target).seq
        while r.start > 0 and r.start - 1 + r.shift >= 0:
            n = r.start - 1
            w, _ = certify(src, tgt, n, r.shift)
            if w is None:
                break
            size = src.at(n).size
            expect = {deco(name, n, x): deco(r.target, n + r.shift, w.image(n, x)) for x in range(size)}
            if any(patch.get(v) != t for v, t in expect.items()):
                break
            for v in expect:
                del patch[v]
            r = TailRule(name, r.target, r.shift, n, w)
        rules[name] = r
    return PresentedEmbedding(f.source, f.target, _pairs(patch), tuple(rules.values()), f.name)


def search_embeddings(
    p: TreePresentation,
    shift_bound: Optional[int] = None,
    patch_radius: int = 1,
    target: Optional[TreePresentation] = None,
    per_schema: int = 1,
) -> List[PresentedEmbedding]:
    """Tail-regular embeddings ``p -> target`` (default ``p -> p``).

    Schemas are injections of arms into arms with shifts in
    ``[-shift_bound, shift_bound]``; for each, rules start at the least
    certifiable position plus ``patch_radius - 1`` and the patch is completed
    by backtracking outward from the rule boundaries. At most ``per_schema``
    completions are kept per schema. Complete relative to these bounds only.
    """
    if patch_radius < 1:
        raise ValueError("patch_radius must be at least 1")
    q = target or p
    bound = default_shift_bound(p, q) if shift_bound is None else shift_bound
    if bound < 0:
        raise ValueError("shift_bound must be nonnegative")
    options: List[List[TailRule]] = []
    for a in p.arms:
        opts = []
        for b in q.arms:
            for s in range(-bound, bound + 1):
                st = minimal_start(a.seq, b.seq, s)
                if st is None:
                    continue
                st += patch_radius - 1
                w, _ = certify(a.seq, b.seq, st, s)
                if w is not None:
                    opts.append(TailRule(a.name, b.name, s, st, w))
        options.append(opts)
    if p.arms:
        free: List[Vertex] = []
    elif q.arms:
        reach = len(p.core_vertices) + q.max_prefix + q.period_lcm
        free = q.decorated_ball(reach)
    else:
        free = [core(v) for v in q.core_vertices]

    found: Dict[Tuple, PresentedEmbedding] = {}
    for combo in itertools.product(*options):
        if len({r.target for r in combo}) != len(combo):
            continue
        for patch in _complete_patch(p, q, tuple(combo), per_schema, free):
            f = _tighten(PresentedEmbedding(p, q, _pairs(patch), tuple(combo)))
            if f.is_valid():
                found.setdefault(f.schema_key(), f)
    return [found[k] for k in sorted(found)]


# -- directions and limit sets ------------------------------------------------------------


@dataclass(frozen=True)
class DirectionSet:
    """Directions of the non-elliptic embeddings found, with a witness each."""

    witnesses: Tuple[Tuple[str, PresentedEmbedding], ...]

    @property
    def directions(self) -> List[End]:
        return [End(a) for a, _ in self.witnesses]

    def __len__(self) -> int:
        return len(self.witnesses)

    def witness(self, arm: str) -> PresentedEmbedding:
        return dict(self.witnesses)[arm]


def directions_set(
    p: TreePresentation,
    shift_bound: Optional[int] = None,
    patch_radius: int = 1,
    embeddings: Optional[Sequence[PresentedEmbedding]] = None,
) -> DirectionSet:
    if embeddings is None:
        embeddings = search_embeddings(p, shift_bound, patch_radius)
    seen: Dict[str, PresentedEmbedding] = {}
    for f in embeddings:
        c = classify(f)
        if not c.is_elliptic:
            seen.setdefault(c.direction, f)
    return DirectionSet(tuple(sorted(seen.items())))


def orbit(p: TreePresentation, gens: Sequence[PresentedEmbedding], word_length: int, start: Optional[Vertex] = None) -> Set[Vertex]:
    """Images of ``start`` under all words of length at most ``word_length``."""
    frontier = {start or core(p.basepoint)}
    seen = set(frontier)
    for _ in range(word_length):
        frontier = {g(v) for v in frontier for g in gens} - seen
        seen |= frontier
    return seen


def limit_set_sample(p: TreePresentation, gens: Sequence[PresentedEmbedding], word_length: int, depth: int) -> Set[End]:
    """Arms hosting orbit points at distance at least ``depth`` from the
    basepoint: a bounded under-approximation of the limit set."""
    for g in gens:
        if not g.is_self_map or g.violations:
            raise NotValidated(g.violations)
    base = core(p.basepoint)
    return {End(v[1]) for v in orbit(p, gens, word_length) if v[0] != "c" and p.distance(base, v) >= depth}


# -- convergence ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    converges: bool
    separated: Dict[int, Tuple[int, ...]]
    horizon: int


def converges_to(
    p: TreePresentation,
    seq: Callable[[int], Vertex],
    end: Union[End, str],
    bound: int,
    horizon: Optional[int] = None,
) -> ConvergenceReport:
    """Check ``seq -> end`` along the ray ``r_0 r_1 ...`` from the basepoint.

    For each ``n <= bound`` the members ``seq(m)``, ``m <= horizon``, that
    ``r_n`` separates from the end are listed. Convergence is accepted when no
    ray vertex separates members from the upper half of the horizon, which is
    the finite stand-in for "only finitely many".
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    arm = end.arm if isinstance(end, End) else end
    horizon = horizon if horizon is not None else 2 * bound + 2
    members = [seq(m) for m in range(horizon + 1)]
    ray = p.ray(core(p.basepoint), arm, bound + 1)
    separated: Dict[int, Tuple[int, ...]] = {}
    for n, r in enumerate(ray):
        separated[n] = tuple(m for m, x in enumerate(members) if p.on_ray(x, arm, r))
    tail = horizon // 2
    ok = all(all(m <= tail for m in ms) for ms in separated.values())
    return ConvergenceReport(ok, separated, horizon)
