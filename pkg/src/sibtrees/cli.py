"""Command line front end.

Exit codes: 0 success, 1 analysis error (for example an embedding that fails
validation), 2 bad input (parse errors, missing files, unknown names).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence

from .dsl import Document, ParseError, dump_presentation, parse
from .embedding import (
    EmbeddingError,
    NotValidated,
    classify,
    converges_to,
    directions_set,
    search_embeddings,
)
from .presentation import (
    NonRegular,
    TreePresentation,
    Unsupported,
    end_regularity,
    ends,
    format_vertex,
    is_nearly_finite,
    is_ray,
    parse_vertex,
    truncation,
)
from .finite_tree import canonical_code
from .siblings import (
    difference_forest,
    sibling_family,
    sibling_number_report,
    verify_pairwise_noniso,
)


class InputError(Exception):
    pass


def _load(path: str) -> Document:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return parse(text)
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def _presentation(doc: Document, name: Optional[str]) -> TreePresentation:
    if name is None:
        if not doc.presentations:
            raise InputError("no presentation in input")
        return next(iter(doc.presentations.values()))
    if name not in doc.presentations:
        raise InputError(f"no presentation named {name!r}")
    return doc.presentations[name]


# -- subcommands ----------------------------------------------------------------------


def cmd_analyze(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    out(f"presentation {p.name}")
    out(f"core vertices: {len(p.core_vertices)}")
    out(f"ends: {len(p.arms)} ({', '.join(str(e) for e in ends(p)) or 'none'})")
    out(f"ray: {'yes' if is_ray(p) else 'no'}")
    nf = is_nearly_finite(p)
    if nf:
        out("nearly finite: yes")
    else:
        r = nf.rake
        out(f"nearly finite: no (rake on arm {r.arm}, positions {r.start} + {r.stride}k, {r.rule})")
    for a in p.arms:
        reg = end_regularity(p, a.name)
        if isinstance(reg, NonRegular):
            out(f"arm {a.name}: non-regular ({reg.rule})")
        else:
            out(f"arm {a.name}: regular ({reg.class_count} branch classes)")
    return 0


def cmd_classify(args, out) -> int:
    doc = _load(args.file)
    names = [args.embedding] if args.embedding else list(doc.embeddings)
    if not names:
        raise InputError("no embedding in input")
    status = 0
    for n in names:
        if n not in doc.embeddings:
            raise InputError(f"no embedding named {n!r}")
        f = doc.embeddings[n]
        if f.violations:
            out(f"{n}: invalid")
            for v in f.violations:
                out(f"  {v}")
            status = 1
            continue
        out(f"{n}: {classify(f)}")
    return status


def cmd_search(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    embs = search_embeddings(p, args.shift_bound, args.patch_radius)
    for f in embs:
        out(f"{f.describe()}  =>  {classify(f)}")
    dirs = directions_set(p, embeddings=embs)
    out(f"found {len(embs)} embeddings; directions: {{{', '.join(str(d) for d in dirs.directions)}}} (|D| = {len(dirs)})")
    return 0


def cmd_siblings(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    parabolic = [f for f in search_embeddings(p, args.shift_bound) if classify(f).kind == "parabolic"]
    if not parabolic:
        out("no parabolic embedding found; S_k construction does not apply")
        return 1
    f = min(parabolic, key=lambda g: (classify(g).periodicity, g.schema_key()))
    fam = sibling_family(f, args.k)
    out(f"embedding: {f.describe()}")
    for m in fam.members:
        out(dump_presentation(m).rstrip())
    bad = fam.violations()
    for b in bad:
        out(f"violation: {b}")
    report = verify_pairwise_noniso([p] + list(fam.members), args.depth)
    for (a, b), d in report.depths:
        out(f"{a} vs {b}: " + (f"distinct at depth {d}" if d is not None else f"not separated by depth {args.depth}"))
    return 0 if report.distinct and not bad else 1


def _forest_rows(cert, depth: int):
    f = cert.embedding
    if f is None or classify(f).is_elliptic:
        return []
    rep = difference_forest(f, range(1, depth + 1))
    return list(rep.counts)


def cmd_report(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    cert = sibling_number_report(p, args.shift_bound, args.patch_radius, args.k)
    rows = _forest_rows(cert, args.forest_depth) if args.figures else []
    if args.json:
        data = {"presentation": p.name, **cert.to_dict()}
        if args.figures:
            data["difference_forest"] = [{"depth": d, "components": c} for d, c in rows]
        out(json.dumps(data, indent=2, sort_keys=True))
    else:
        out(f"presentation {p.name}")
        out(f"verdict: {cert.summary()}")
        out(f"tags: {', '.join(cert.tags)}")
        out(f"reason: {cert.reason}")
        out(f"directions: {{{', '.join(cert.directions)}}}")
        out("bounds: " + " ".join(f"{k}={v}" for k, v in cert.bounds))
        if cert.classical:
            out("note: classical result, not derived by this tool")
        if cert.embedding is not None:
            out(f"witness: {cert.embedding.describe()}")
            out(f"witness classification: {classify(cert.embedding)}")
        if cert.family is not None:
            for m in cert.family.members:
                body = "; ".join(f"arm {a.name} {a.seq.describe()}" for a in m.arms)
                out(f"sibling {m.name}: {body}")
        if cert.components is not None:
            c = cert.components
            out(f"unbounded components: arm {c.arm}, shift {c.shift}, {c.rule}")
    if args.figures:
        from .plotting import write_figures

        if rows:
            paths = write_figures(Path(args.figures), p.name or "tree", rows, f"{p.name}: {cert.summary()}")
            if not args.json:
                for path in paths:
                    out(f"wrote {path}")
        elif not args.json:
            out("no non-elliptic witness; no figures written")
    return 0


def cmd_truncate(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    t = truncation(p, args.depth)
    if args.dot:
        out(t.to_dot(p.name or "T").rstrip("\n"))
    else:
        out(f"vertices: {t.tree.size}")
        out(f"edges: {t.tree.size - 1}")
        out(f"code: {canonical_code(t.tree)}")
    return 0


_TEMPLATE = re.compile(r"\{\s*(\d*)\s*n\s*(?:([+-])\s*(\d+))?\s*\}")


def sequence_from_template(template: str, initial: Optional[str] = None) -> Callable[[int], tuple]:
    """``'A.{n-1}.1'`` with ``n`` substituted; ``initial`` overrides ``n = 0``."""
    if not _TEMPLATE.search(template):
        raise InputError(f"sequence template {template!r} has no {{n}} placeholder")

    def at(n: int) -> tuple:
        if n == 0 and initial is not None:
            return parse_vertex(initial)

        def sub(m: re.Match) -> str:
            a = int(m.group(1)) if m.group(1) else 1
            b = int(m.group(3) or 0) * (-1 if m.group(2) == "-" else 1)
            return str(a * n + b)

        return parse_vertex(_TEMPLATE.sub(sub, template))

    return at


def cmd_convergence(args, out) -> int:
    p = _presentation(_load(args.file), args.name)
    seq = sequence_from_template(args.sequence, args.initial)
    try:
        for m in range(2 * args.bound + 3):
            if not p.is_vertex(seq(m)):
                raise InputError(f"sequence member {m} is not a vertex: {format_vertex(seq(m))}")
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rep = converges_to(p, seq, args.arm, args.bound)
    for n, ms in rep.separated.items():
        listed = ", ".join(str(m) for m in ms)
        out(f"r_{n} separates {len(ms)} members: {{{listed}}}")
    out(f"converges to {args.arm}: {'yes' if rep.converges else 'no'} (horizon {rep.horizon})")
    return 0


# -- wiring ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sibtrees", description="Analyze finitely presented infinite trees.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, fn, help: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help)
        sp.add_argument("file", help="input .tree file")
        sp.add_argument("--name", help="presentation to use (default: first in file)")
        sp.set_defaults(fn=fn)
        return sp

    add("analyze", cmd_analyze, "ends, rakes, regularity")
    sp = add("classify", cmd_classify, "validate and classify embeddings")
    sp.add_argument("embedding", nargs="?", help="embedding name (default: all)")
    for name, fn, help in (
        ("search", cmd_search, "search tail-regular self-embeddings"),
        ("siblings", cmd_siblings, "build the S_k sibling family"),
        ("report", cmd_report, "sibling-number certificate"),
    ):
        sp = add(name, fn, help)
        sp.add_argument("--shift-bound", type=int, default=None)
        sp.add_argument("--patch-radius", type=int, default=1)
        if name == "siblings":
            sp.add_argument("--k", type=int, default=3)
            sp.add_argument("--depth", type=int, default=12, help="ball radius for pairwise checks")
        if name == "report":
            sp.add_argument("--k", type=int, default=3)
            sp.add_argument("--json", action="store_true")
            sp.add_argument("--figures", metavar="DIR", help="write difference-forest CSV and PNG here")
            sp.add_argument("--forest-depth", type=int, default=20)
    sp = add("truncate", cmd_truncate, "finite truncation")
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--dot", action="store_true", help="emit Graphviz DOT")
    sp = add("convergence", cmd_convergence, "check a vertex sequence converges to an end")
    sp.add_argument("--arm", required=True)
    sp.add_argument("--sequence", required=True, help="template such as 'A.{n-1}.1'")
    sp.add_argument("--initial", help="vertex for n = 0")
    sp.add_argument("--bound", type=int, default=10)
    return ap


def run(argv: Sequence[str], out: Callable[[str], None] = print, err: Callable[[str], None] = None) -> int:
    err = err or (lambda s: print(s, file=sys.stderr))
    try:
        args = build_parser().parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, out)
    except InputError as exc:
        err(f"error: {exc}")
        return 2
    except NotValidated as exc:
        err("error: embedding failed validation")
        for v in exc.violations:
            err(f"  {v}")
        return 1
    except (EmbeddingError, Unsupported, ValueError, KeyError) as exc:
        err(f"error: {exc}")
        return 1


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
