"""Text format for presentations and embeddings.

::

    # a comb: one spine, a tooth at every spine vertex
    presentation COMB {
      core { vertices v0; edges; basepoint v0; }
      arm A at v0 { prefix []; period [(())]; }
    }

    embedding shift on COMB {
      patch { v0 -> A.0; }
      rule A -> A shift 1 from 0;
    }

Arms take either ``prefix [...]; period [...];`` (finite rooted trees in
parenthesis notation) or ``family path|star SLOPE n + OFFSET;``. An embedding
between two presentations is written ``embedding NAME on P into Q { ... }``.
Decoration witnesses are not part of the format; they are recomputed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .embedding import PresentedEmbedding, TailRule
from .finite_tree import FiniteRootedTree
from .presentation import (
    Arm,
    Generated,
    Periodic,
    PresentationError,
    TreePresentation,
    format_vertex,
    parse_vertex,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<tree>[()]+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*(?:\.\d+)*)
  | (?P<int>\d+)
  | (?P<punct>[{};\[\],+\-])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            out.append(_Tok(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class Document:
    presentations: Dict[str, TreePresentation] = field(default_factory=dict)
    embeddings: Dict[str, PresentedEmbedding] = field(default_factory=dict)

    def presentation(self, name: Optional[str] = None) -> TreePresentation:
        """The named presentation, or the only one when ``name`` is omitted."""
        if name is None:
            if len(self.presentations) != 1:
                raise KeyError(f"document holds {len(self.presentations)} presentations; name one")
            return next(iter(self.presentations.values()))
        return self.presentations[name]


class _Parser:
    def __init__(self, text: str, known: Mapping[str, TreePresentation]) -> None:
        self.toks = _tokenize(text)
        self.i = 0
        self.doc = Document()
        self.known = dict(known)

    # -- token helpers --

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[_Tok] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(message, t.line, t.col)

    def take(self, text: Optional[str] = None, kind: Optional[str] = None) -> _Tok:
        t = self.tok
        if (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = repr(text) if text is not None else kind
            got = repr(t.text) if t.text else "end of input"
            raise self.error(f"expected {want}, got {got}")
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text

    def name(self) -> str:
        t = self.take(kind="word")
        if "." in t.text:
            raise self.error(f"expected a plain name, got {t.text!r}", t)
        return t.text

    def integer(self) -> int:
        sign = -1 if self.at("-") else 1
        if sign < 0:
            self.take("-")
        return sign * int(self.take(kind="int").text)

    # -- grammar --

    def document(self) -> Document:
        while self.tok.kind != "eof":
            t = self.tok
            if t.text == "presentation":
                self.presentation()
            elif t.text == "embedding":
                self.embedding()
            else:
                raise self.error(f"expected 'presentation' or 'embedding', got {t.text!r}")
        return self.doc

    def presentation(self) -> None:
        self.take("presentation")
        head = self.tok
        name = self.name()
        if name in self.doc.presentations:
            raise self.error(f"presentation {name} defined twice", head)
        self.take("{")
        vertices: Optional[List[str]] = None
        edges: List[Tuple[str, str]] = []
        basepoint: Optional[str] = None
        arms: List[Arm] = []
        while not self.at("}"):
            t = self.tok
            if t.text == "core":
                if vertices is not None:
                    raise self.error("second core block", t)
                vertices, edges, basepoint = self.core_block()
            elif t.text == "arm":
                arms.append(self.arm())
            else:
                raise self.error(f"expected 'core' or 'arm', got {t.text!r}")
        self.take("}")
        if vertices is None:
            raise self.error(f"presentation {name} has no core", head)
        if basepoint is None:
            basepoint = vertices[0] if vertices else ""
        try:
            p = TreePresentation(tuple(vertices), tuple(edges), basepoint, tuple(arms), name)
        except PresentationError as exc:
            raise self.error(str(exc), head) from None
        self.doc.presentations[name] = p
        self.known[name] = p

    def core_block(self) -> Tuple[List[str], List[Tuple[str, str]], Optional[str]]:
        self.take("core")
        self.take("{")
        vertices: List[str] = []
        edges: List[Tuple[str, str]] = []
        basepoint = None
        endpoints: List[_Tok] = []
        while not self.at("}"):
            key = self.take(kind="word")
            if key.text == "vertices":
                while not self.at(";"):
                    vertices.append(self.name())
            elif key.text == "edges":
                while not self.at(";"):
                    endpoints.append(self.tok)
                    u = self.name()
                    self.take("-")
                    endpoints.append(self.tok)
                    edges.append((u, self.name()))
                    if self.at(","):
                        self.take(",")
            elif key.text == "basepoint":
                basepoint = self.name()
            else:
                raise self.error(f"unknown core field {key.text!r}", key)
            self.take(";")
        self.take("}")
        for t in endpoints:
            if t.text not in vertices:
                raise self.error(f"edge uses undeclared vertex {t.text!r}", t)
        return vertices, edges, basepoint

    def tree_list(self) -> Tuple[FiniteRootedTree, ...]:
        self.take("[")
        out = []
        while not self.at("]"):
            t = self.take(kind="tree")
            try:
                out.append(FiniteRootedTree.from_parens(t.text))
            except ValueError as exc:
                raise self.error(str(exc), t) from None
            if self.at(","):
                self.take(",")
        self.take("]")
        return tuple(out)

    def arm(self) -> Arm:
        self.take("arm")
        head = self.tok
        name = self.name()
        self.take("at")
        attach = self.name()
        self.take("{")
        prefix: Tuple[FiniteRootedTree, ...] = ()
        period: Optional[Tuple[FiniteRootedTree, ...]] = None
        family: Optional[Generated] = None
        while not self.at("}"):
            key = self.take(kind="word")
            if key.text == "prefix":
                prefix = self.tree_list()
            elif key.text == "period":
                period = self.tree_list()
            elif key.text == "family":
                shape = self.take(kind="word")
                if shape.text not in ("path", "star"):
                    raise self.error(f"unknown family shape {shape.text!r}", shape)
                slope = self.integer()
                self.take("n")
                self.take("+")
                offset = self.integer()
                try:
                    family = Generated(shape.text, slope, offset)
                except PresentationError as exc:
                    raise self.error(str(exc), shape) from None
            else:
                raise self.error(f"unknown arm field {key.text!r}", key)
            self.take(";")
        self.take("}")
        if family is not None:
            if period is not None or prefix:
                raise self.error(f"arm {name} mixes a family with explicit decorations", head)
            return Arm(name, attach, family)
        if not period:
            raise self.error(f"arm {name} needs a nonempty period or a family", head)
        return Arm(name, attach, Periodic(prefix, period))

    def embedding(self) -> None:
        self.take("embedding")
        head = self.tok
        name = self.name()
        self.take("on")
        src = self.lookup()
        tgt = src
        if self.at("into"):
            self.take("into")
            tgt = self.lookup()
        self.take("{")
        patch: Dict = {}
        rules: List[TailRule] = []
        while not self.at("}"):
            t = self.tok
            if t.text == "patch":
                self.take("patch")
                self.take("{")
                while not self.at("}"):
                    v = self.vertex()
                    self.take("->")
                    w = self.vertex()
                    if v in patch:
                        raise self.error(f"{format_vertex(v)} mapped twice", t)
                    patch[v] = w
                    self.take(";")
                self.take("}")
            elif t.text == "rule":
                self.take("rule")
                a = self.name()
                self.take("->")
                b = self.name()
                self.take("shift")
                s = self.integer()
                self.take("from")
                n = self.integer()
                self.take(";")
                rules.append(TailRule(a, b, s, n))
            else:
                raise self.error(f"expected 'patch' or 'rule', got {t.text!r}")
        self.take("}")
        if name in self.doc.embeddings:
            raise self.error(f"embedding {name} defined twice", head)
        self.doc.embeddings[name] = PresentedEmbedding(src, tgt, tuple(patch.items()), tuple(rules), name)

    def lookup(self) -> TreePresentation:
        t = self.tok
        n = self.name()
        if n not in self.known:
            raise self.error(f"unknown presentation {n!r}", t)
        return self.known[n]

    def vertex(self):
        t = self.take(kind="word")
        try:
            return parse_vertex(t.text)
        except ValueError as exc:
            raise self.error(str(exc), t) from None


def parse(text: str, known: Optional[Mapping[str, TreePresentation]] = None) -> Document:
    """Parse a document; ``known`` supplies presentations defined elsewhere."""
    return _Parser(text, known or {}).document()


def parse_presentation(text: str) -> TreePresentation:
    return parse(text).presentation()


# -- serialization --------------------------------------------------------------


def _trees(ts) -> str:
    return "[" + ", ".join(str(t) for t in ts) + "]"


def dump_presentation(p: TreePresentation) -> str:
    lines = [f"presentation {p.name or 'P'} {{"]
    edges = ", ".join(f"{u}-{v}" for u, v in p.core_edges)
    lines.append(
        f"  core {{ vertices {' '.join(p.core_vertices)}; edges{' ' + edges if edges else ''}; "
        f"basepoint {p.basepoint}; }}"
    )
    for a in p.arms:
        seq = a.seq
        if isinstance(seq, Generated):
            body = f"family {seq.shape} {seq.slope} n + {seq.offset};"
        else:
            body = f"prefix {_trees(seq.prefix)}; period {_trees(seq.period)};"
        lines.append(f"  arm {a.name} at {a.attach} {{ {body} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_embedding(f: PresentedEmbedding) -> str:
    on = f.source.name or "P"
    if f.target != f.source:
        on += f" into {f.target.name or 'Q'}"
    lines = [f"embedding {f.name or 'f'} on {on} {{"]
    if f.patch:
        lines.append("  patch {")
        lines.extend(f"    {format_vertex(v)} -> {format_vertex(w)};" for v, w in f.patch)
        lines.append("  }")
    lines.extend(f"  rule {r};" for r in f.rules)
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(items: List[Union[TreePresentation, PresentedEmbedding]]) -> str:
    chunks = []
    for item in items:
        if isinstance(item, TreePresentation):
            chunks.append(dump_presentation(item))
        else:
            chunks.append(dump_embedding(item))
    return "\n".join(chunks)
