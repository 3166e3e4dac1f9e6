import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from helpers import explicit, random_periodic
from oracles import metric_ball, rooted_iso, skeleton_ball
from sibtrees.embedding import (
    EmbeddingError,
    classify,
    compose,
    directions_set,
    identity,
    periodicity,
    power,
    search_embeddings,
)
from sibtrees.finite_tree import TRIVIAL, FiniteRootedTree
from sibtrees.fixtures import NAMES, all_fixtures, document, embedding
from sibtrees.presentation import Periodic, format_vertex, parse_vertex, spine
from sibtrees.siblings import (
    IsRay,
    NonRegularDirection,
    construct_sibling_sk,
    difference_forest,
    equimorphy_check,
    inclusion,
    infinite_components_certificate,
    sibling_family,
    sibling_number_report,
    verify_pairwise_noniso,
)

FIX = all_fixtures()
T = FiniteRootedTree.from_parens


# -- difference forests --


def oracle_forest_count(f, d):
    """Components of the depth-``d`` truncation minus the image of ``f``,
    computed on the explicit graph."""
    p = f.source
    g = explicit(p, d + 12)
    image = {format_vertex(f(parse_vertex(v))) for v in skeleton_ball(g, p.basepoint, d + 6)}
    ball = skeleton_ball(g, p.basepoint, d)
    rest = ball.subgraph([v for v in ball if v not in image])
    keep_open = infinite_components_certificate(f) is not None
    closed = lambda c: all(set(g[v]) <= set(ball) for v in c)  # noqa: E731
    return sum(1 for c in nx.connected_components(rest) if keep_open or closed(c))


@pytest.mark.parametrize("name", ["RAY", "DRAY", "COMB", "GROWCOMB", "SPIDER3", "HALFCOMB", "DCOMB"])
def test_difference_forest_matches_explicit_graph(name):
    for emb_name, f in document(name).embeddings.items():
        rep = difference_forest(f, [2, 5, 9])
        for d, count in rep.counts:
            assert count == oracle_forest_count(f, d), (emb_name, d)


def test_identity_forest_is_empty():
    rep = difference_forest(identity(FIX["COMB"]), [1, 4, 8])
    assert all(c == 0 for _, c in rep.counts)


def test_comb_forest_is_bounded():
    rep = difference_forest(embedding("COMB"), [1, 5, 10, 20])
    assert [c for _, c in rep.counts] == [2, 2, 2, 2]
    assert all(rep.nearly_finite)


def test_components_certificate():
    cert = infinite_components_certificate(embedding("GROWCOMB"))
    assert cert is not None and cert.arm == "A"
    assert infinite_components_certificate(embedding("COMB")) is None
    assert infinite_components_certificate(embedding("RAY")) is None


def test_growcomb_forest_grows():
    rep = difference_forest(embedding("GROWCOMB"), [10, 20, 30])
    counts = [c for _, c in rep.counts]
    assert counts == sorted(counts) and len(set(counts)) == 3


# -- the S_k construction --


def test_comb_sk_examples():
    f = embedding("COMB")
    s1 = construct_sibling_sk(f, 1)
    assert s1.arms[0].seq == Periodic((T("(())"), TRIVIAL), (T("(())"),))
    s3 = construct_sibling_sk(f, 3)
    assert s3.arms[0].seq == Periodic((T("(())"),) + (TRIVIAL,) * 3, (T("(())"),))


def test_sk_rejects_rays_and_non_parabolic():
    with pytest.raises(IsRay):
        construct_sibling_sk(embedding("RAY"), 1)
    with pytest.raises(EmbeddingError):
        construct_sibling_sk(embedding("DRAY"), 1)
    with pytest.raises(EmbeddingError):
        construct_sibling_sk(identity(FIX["COMB"]), 1)


def _parabolic(p):
    return next(f for f in search_embeddings(p, shift_bound=2) if classify(f).kind == "parabolic")


@pytest.mark.parametrize("name", ["COMB", "TOOTHED_RAY"])
def test_sibling_family_embeds_both_ways(name):
    fam = sibling_family(_parabolic(FIX[name]), 3)
    assert fam.violations() == []
    assert len(fam.members) == 3


def test_sk_refuses_non_regular_direction():
    with pytest.raises(NonRegularDirection):
        sibling_family(embedding("GROWCOMB"), 2)


def test_inclusion_is_valid_for_sk():
    f = embedding("COMB")
    s2 = construct_sibling_sk(f, 2)
    assert inclusion(s2, FIX["COMB"]).is_valid()


def _oracle_distinct(a, b, radius):
    """Brute force: some side's basepoint ball occurs around no vertex of the other."""
    for x, y in ((a, b), (b, a)):
        reach = radius + len(y.core_vertices) + y.max_prefix + y.period_lcm + 2
        gx = explicit(x, radius + 4)
        gy = explicit(y, reach + radius + 2)
        ball = metric_ball(gx, x.basepoint, radius)
        candidates = [v for v in skeleton_ball(gy, y.basepoint, reach)]
        if not any(rooted_iso(ball, x.basepoint, metric_ball(gy, v, radius), v) for v in candidates):
            return True
    return False


def test_pairwise_noniso_comb_family():
    f = embedding("COMB")
    members = [construct_sibling_sk(f, k) for k in range(1, 6)]
    rep = verify_pairwise_noniso(members, 12)
    assert rep.distinct and len(rep.depths) == 10
    by_name = {m.name: m for m in members}
    for (a, b), d in rep.depths:
        assert _oracle_distinct(by_name[a], by_name[b], d)
        if d > 0:
            assert not _oracle_distinct(by_name[a], by_name[b], d - 1)


def test_pairwise_noniso_needs_distinct_members():
    p = FIX["COMB"]
    assert not verify_pairwise_noniso([p, p], 6).distinct


def test_equimorphy_examples():
    f = embedding("COMB")
    assert equimorphy_check(FIX["COMB"], construct_sibling_sk(f, 2)).kind == "MutualEmbeddings"
    e = equimorphy_check(FIX["COMB"], FIX["RAY"])
    assert e.kind == "OneWay" and e.backward is not None and e.forward is None


# -- the verdict ladder --


EXPECTED = {
    "RAY": ("ExactlyOne", "Classical-Ray"),
    "DRAY": ("ExactlyOne", "Prop-Two-Directions"),
    "COMB": ("Infinite", "Thm-Parabolic-Infinite"),
    "GROWCOMB": ("Infinite", "Cor-NonRegular-End"),
    "SPIDER3": ("ExactlyOne", "Prop-Elliptic-Automorphism"),
    "HALFCOMB": ("OpenCase", "Open-One-Direction"),
    "DCOMB": ("ExactlyOne", "Prop-Two-Directions"),
    "DCOMB_NO_CENTER": ("ExactlyOne", "Prop-Elliptic-Automorphism"),
    "TOOTHED_RAY": ("Infinite", "Thm-Parabolic-Infinite"),
}


@pytest.mark.parametrize("name", NAMES)
def test_report_ladder(name):
    cert = sibling_number_report(FIX[name])
    assert (cert.verdict, cert.tags[0]) == EXPECTED[name]
    assert cert.to_dict()["verdict"] == cert.verdict


def test_growcomb_carries_both_tags():
    cert = sibling_number_report(FIX["GROWCOMB"])
    assert set(cert.tags) == {"Cor-NonRegular-End", "Thm-Parabolic-Infinite"}


def test_ray_verdict_is_flagged_classical():
    assert sibling_number_report(FIX["RAY"]).classical
    assert not sibling_number_report(FIX["COMB"]).classical


def test_infinite_verdict_ships_a_family():
    cert = sibling_number_report(FIX["COMB"], k=4)
    assert cert.family is not None and len(cert.family.members) == 4


# -- two directions --


@pytest.mark.parametrize("name", ["DRAY", "DCOMB"])
@pytest.mark.parametrize("a", [1, 2, 3])
@pytest.mark.parametrize("b", [1, 2, 3])
def test_opposite_translations_cancel_on_spine(name, a, b):
    doc = document(name)
    f = power(doc.embeddings["shift"], a)
    g = power(doc.embeddings["back"], b)
    h = compose(power(g, periodicity(f)), power(f, periodicity(g)))
    p = FIX[name]
    for arm in p.arm_names:
        for n in range(10):
            assert h(spine(arm, n)) == spine(arm, n)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_at_most_two_directions(seed):
    p = random_periodic(random.Random(seed))
    assert len(directions_set(p, shift_bound=2)) in (0, 1, 2)
