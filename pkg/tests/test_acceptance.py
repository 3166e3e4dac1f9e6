"""The ten acceptance criteria, one test each; conftest prints a PASS/FAIL line per criterion."""

import itertools
import random
import time

import pytest

from helpers import embedding_pool, random_periodic
from oracles import ROOTED_TREE_COUNTS, brute_iso_rooted, rooted_trees
from sibtrees.embedding import classify, compose, directions_set, periodicity, power, converges_to
from sibtrees.finite_tree import FiniteRootedTree, canonical_code, embeds_rooted, is_isomorphic_rooted
from sibtrees.fixtures import NAMES, all_fixtures, document, embedding
from sibtrees.presentation import core, deco, spine, truncation
from sibtrees.siblings import sibling_family, sibling_number_report, difference_forest, verify_pairwise_noniso

FIX = all_fixtures()
criterion = pytest.mark.criterion


@criterion(1, "|D| = 1 for RAY and |D| = 2 for DRAY")
def test_ray_and_double_ray_directions():
    start = time.perf_counter()
    assert len(directions_set(FIX["RAY"])) == 1
    assert len(directions_set(FIX["DRAY"])) == 2
    assert time.perf_counter() - start < 1.0


@criterion(2, "canonical codes agree with brute-force isomorphism on all 200 rooted trees up to 8 vertices")
def test_canonical_codes_against_brute_force():
    parents = rooted_trees(8)
    assert len(parents) == sum(ROOTED_TREE_COUNTS) == 200
    trees = [FiniteRootedTree(p) for p in parents]
    codes = [canonical_code(t) for t in trees]
    mismatches = 0
    for i, j in itertools.combinations_with_replacement(range(len(trees)), 2):
        if trees[i].size != trees[j].size:
            # different sizes are never isomorphic, and codes differ in length
            mismatches += codes[i] == codes[j]
            continue
        mismatches += (codes[i] == codes[j]) != brute_iso_rooted(parents[i], parents[j])
    assert mismatches == 0


@criterion(3, "mutual rooted embeddability implies isomorphism up to 7 vertices")
def test_mutual_embeddability_implies_isomorphism():
    trees = [FiniteRootedTree(p) for p in rooted_trees(7)]
    counterexamples = 0
    for a, b in itertools.product(trees, repeat=2):
        if embeds_rooted(a, b) is not None and embeds_rooted(b, a) is not None:
            counterexamples += not is_isomorphic_rooted(a, b)
    assert counterexamples == 0


@criterion(4, "50 random embeddings classified exactly once; elliptic ones bijective on radius-12 balls")
def test_trichotomy_on_random_embeddings():
    pool = embedding_pool(seed=0, size=50)
    assert len(pool) == 50
    violations = 0
    for f in pool:
        assert f.is_valid()
        c = classify(f)
        violations += c.kind not in ("elliptic", "parabolic", "hyperbolic")
        if c.kind == "elliptic":
            p = f.source
            centres = [c.fixed_vertex] if c.fixed_vertex is not None else list(c.fixed_edge)
            ball = set().union(*(p.ball(v, 12) for v in centres))
            violations += {f(v) for v in ball} != ball
    assert violations == 0


@criterion(5, "COMB S_1..S_5 pairwise distinct by depth 12 with valid witnesses, under 5 s")
def test_comb_sibling_family():
    start = time.perf_counter()
    fam = sibling_family(embedding("COMB"), 5)
    assert fam.violations() == []
    assert len(fam.inclusions) == len(fam.powers) == 5
    rep = verify_pairwise_noniso(fam.members, 12)
    assert rep.distinct and len(rep.depths) == 10
    assert all(d is not None and d <= 12 for _, d in rep.depths)
    assert time.perf_counter() - start < 5.0


@criterion(6, "GROWCOMB component counts strictly increase at depths 10, 20, 30 with count(30) >= 25")
def test_growcomb_infinitely_many_components():
    f = embedding("GROWCOMB")
    rep = difference_forest(f, [10, 20, 30])
    c10, c20, c30 = rep.count(10), rep.count(20), rep.count(30)
    assert c10 < c20 < c30 and c30 >= 25
    cert = rep.certificate
    assert cert is not None and cert.arm == "A" and cert.shift == f.rule_for("A").shift


@criterion(7, "DRAY and DCOMB give ExactlyOne and opposite translations cancel on the spine")
def test_two_directions():
    for name in ("DRAY", "DCOMB"):
        assert sibling_number_report(FIX[name]).verdict == "ExactlyOne"
        doc = document(name)
        p = FIX[name]
        spine_vertices = [v for v in truncation(p, 10).vertices if v[0] == "s"]
        for a, b in itertools.product((1, 2, 3), repeat=2):
            f = power(doc.embeddings["shift"], a)
            g = power(doc.embeddings["back"], b)
            h = compose(power(g, periodicity(f)), power(f, periodicity(g)))
            assert all(h(r) == r for r in spine_vertices)


@criterion(8, "ladder verdicts for COMB, GROWCOMB, RAY and HALFCOMB")
def test_case_ladder():
    comb = sibling_number_report(FIX["COMB"])
    assert (comb.verdict, comb.theorem) == ("Infinite", "Thm-Parabolic-Infinite")
    grow = sibling_number_report(FIX["GROWCOMB"])
    assert (grow.verdict, grow.theorem) == ("Infinite", "Cor-NonRegular-End")
    ray = sibling_number_report(FIX["RAY"])
    assert ray.verdict == "ExactlyOne" and ray.classical
    half = sibling_number_report(FIX["HALFCOMB"])
    assert half.verdict == "OpenCase" and len(half.directions) == 1


@criterion(9, "|D| in {0, 1, 2} for every fixture and 100 random periodic presentations")
def test_direction_counts_bounded():
    rng = random.Random(2024)
    presentations = [FIX[n] for n in NAMES] + [random_periodic(rng, f"R{i}") for i in range(100)]
    sizes = [len(directions_set(p)) for p in presentations]
    assert all(s in (0, 1, 2) for s in sizes)


@criterion(10, "TOOTHED_RAY: r_n separates exactly {x_m : m <= n} for n <= 100")
def test_toothed_ray_convergence():
    p = FIX["TOOTHED_RAY"]
    seq = lambda m: core("x0") if m == 0 else deco("A", m - 1, 1)  # noqa: E731
    rep = converges_to(p, seq, "A", 100)
    assert rep.converges
    assert set(range(101)) <= set(rep.separated)
    for n in range(101):
        assert rep.separated[n] == tuple(range(n + 1))
