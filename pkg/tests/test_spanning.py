"""Wilson sampling, leaf weights, identity verification, concentration."""

import math
from fractions import Fraction
from itertools import product

import mpmath as mp
import pytest

from subtree_poly_lab import (
    CapacityError,
    Graph,
    SpanningTree,
    ValidationError,
    concentration_profile,
    degree_profile,
    enumerate_spanning_trees,
    estimate_beta,
    exact_beta,
    generate,
    generate_connected,
    leaf_count_stats,
    leaf_weight,
    spanning_tree_count,
    subtree_counts,
    verify_weight_identity,
    weight_experiment,
    wilson_sample,
)
from subtree_poly_lab.rng import DOMAIN_SAMPLE, stream


def chi2_sf(stat, df):
    """Upper tail of the chi-square distribution via the incomplete gamma."""
    return float(mp.gammainc(mp.mpf(df) / 2, a=mp.mpf(stat) / 2, b=mp.inf, regularized=True))


def star(n):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


# ---------------------------------------------------------------- sampling


def test_wilson_on_tree_returns_it():
    host = generate("random_tree(9)", seed=4)
    tree = wilson_sample(host, stream(0, 0, DOMAIN_SAMPLE))
    assert tree.edges == frozenset(host.edges())


def test_wilson_tree_shape():
    g, _ = generate_connected("gnp(9,0.5)", seed=8)
    for i in range(50):
        tree = wilson_sample(g, stream(3, i, DOMAIN_SAMPLE))
        assert len(tree.edges) == g.n - 1
        assert all(g.has_edge(u, v) for u, v in tree.edges)
        assert 2 <= len(tree.leaf_set) <= g.n - 1


def test_wilson_rejects_disconnected():
    with pytest.raises(ValidationError):
        wilson_sample(Graph.from_edges(4, [(0, 1), (2, 3)]), stream(0, 0))


def test_wilson_uniform_k3():
    # all 3 spanning trees of K_3, chi-square at significance 1e-3
    k3 = generate("complete(3)")
    trees = {t.edges: 0 for t in enumerate_spanning_trees(k3)}
    assert len(trees) == 3
    draws = 100_000
    for i in range(draws):
        trees[wilson_sample(k3, stream(17, i, DOMAIN_SAMPLE)).edges] += 1
    expected = draws / 3
    stat = sum((c - expected) ** 2 / expected for c in trees.values())
    assert chi2_sf(stat, 2) >= 1e-3


def test_wilson_deterministic_per_stream():
    g = generate("complete(6)")
    a = wilson_sample(g, stream(9, 5, DOMAIN_SAMPLE))
    b = wilson_sample(g, stream(9, 5, DOMAIN_SAMPLE))
    assert a.edges == b.edges
    distinct = {wilson_sample(g, stream(9, i, DOMAIN_SAMPLE)).edges for i in range(10)}
    assert len(distinct) > 1  # distinct streams explore distinct trees


# ------------------------------------------------------------- leaf weight


def test_leaf_weight_path_host():
    for n in [2, 5, 9]:
        host = generate(f"path({n})")
        tree = wilson_sample(host, stream(0, 0, DOMAIN_SAMPLE))
        assert leaf_weight(tree, host).weight == Fraction(2)


def test_leaf_weight_k4_star_and_path():
    k4 = generate("complete(4)")
    star_tree = SpanningTree.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert leaf_weight(star_tree, k4).weight == Fraction(1)
    ham_path = SpanningTree.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    sample = leaf_weight(ham_path, k4)
    assert sample.weight == Fraction(2, 3)
    assert sample.leaf_count == 2


def test_leaf_weight_rejects_non_subgraph():
    p4 = generate("path(4)")
    not_subtree = SpanningTree.from_edges(4, [(0, 2), (2, 1), (1, 3)])
    with pytest.raises(ValidationError):
        leaf_weight(not_subtree, p4)


def test_spanning_tree_validation():
    with pytest.raises(ValidationError):
        SpanningTree.from_edges(4, [(0, 1), (1, 2)])  # too few edges
    with pytest.raises(ValidationError):
        SpanningTree.from_edges(4, [(0, 1), (0, 1), (2, 3)])  # duplicate collapses


# ---------------------------------------------------------------- estimates


def test_exact_beta_examples():
    assert exact_beta(subtree_counts(generate("complete(4)"))) == Fraction(3, 4)
    assert exact_beta(subtree_counts(generate("path(3)"))) == Fraction(2)
    assert exact_beta(subtree_counts(generate("complete(3)"))) == Fraction(1)


def test_exact_beta_disconnected():
    counts = subtree_counts(Graph.from_edges(4, [(0, 1), (2, 3)]))
    with pytest.raises(ValidationError):
        exact_beta(counts)


def test_estimate_beta_k3_zero_variance():
    est = estimate_beta(generate("complete(3)"), samples=200, seed=0)
    assert est.mean == Fraction(1)
    assert est.standard_error == 0.0
    assert est.min_weight == est.max_weight == Fraction(1)


def test_estimate_beta_k4_within_4_se():
    est = estimate_beta(generate("complete(4)"), samples=20000, seed=2)
    assert est.bound_violations == 0
    assert abs(float(est.mean) - 0.75) <= 4 * est.standard_error


def test_estimate_beta_two_seeds_k12():
    g = generate("complete(12)")
    exact = exact_beta(__import__("subtree_poly_lab").complete_graph_counts(12))
    a = estimate_beta(g, samples=20000, seed=101)
    b = estimate_beta(g, samples=20000, seed=202)
    # both estimates near the exact value, and near each other
    combined = math.hypot(a.standard_error, b.standard_error)
    assert abs(float(a.mean) - float(exact)) <= 4 * a.standard_error
    assert abs(float(b.mean) - float(exact)) <= 4 * b.standard_error
    assert abs(float(a.mean) - float(b.mean)) <= 5 * combined


def test_estimate_beta_validation():
    with pytest.raises(ValidationError):
        estimate_beta(generate("complete(4)"), samples=0, seed=1)
    with pytest.raises(ValidationError):
        estimate_beta(Graph.from_edges(1, []), samples=5, seed=1)


def test_estimate_thread_count_invariance():
    g = generate("complete(8)")
    serial = estimate_beta(g, samples=600, seed=7, threads=1)
    parallel = estimate_beta(g, samples=600, seed=7, threads=3)
    assert serial == parallel


def test_weight_experiment_matches_components():
    g = generate("complete(8)")
    beta_report, leaf_report, tails = weight_experiment(
        g, samples=500, seed=11, b_grid=[0.2, 0.4], epsilon=0.05
    )
    assert beta_report == estimate_beta(g, 500, 11)
    assert leaf_report == leaf_count_stats(g, 500, 11, epsilon=0.05)
    assert tails == concentration_profile(g, 500, [0.2, 0.4], 11)


# ------------------------------------------------------------ the identity


def test_weight_identity_examples():
    k3 = verify_weight_identity(generate("complete(3)"))
    assert k3.weight_sum == Fraction(3) and k3.s_n_minus_1 == 3 and k3.equal

    p4 = verify_weight_identity(generate("path(4)"))
    assert p4.weight_sum == Fraction(2) and p4.s_n_minus_1 == 2 and p4.equal

    k4 = verify_weight_identity(generate("complete(4)"))
    assert k4.weight_sum == Fraction(12) and k4.equal
    assert k4.tree_count == 16


def test_weight_identity_random_hosts():
    for seed in range(8):
        g, _ = generate_connected("gnp(7,0.5)", seed=300 + seed)
        report = verify_weight_identity(g)
        assert report.equal, f"identity failed on seed {seed}"
        assert report.s_n_minus_1 == subtree_counts(g).s(g.n - 1)


def test_weight_identity_single_vertex():
    report = verify_weight_identity(Graph.from_edges(1, []))
    assert report.equal and report.tree_count == 1


# -------------------------------------------------------------- enumeration


def test_enumeration_matches_matrix_tree():
    for family, seed in [("complete(5)", 0), ("cycle(7)", 0), ("gnp(7,0.6)", 12)]:
        g, _ = generate_connected(family, seed=seed)
        trees = list(enumerate_spanning_trees(g))
        assert len(trees) == spanning_tree_count(g)
        assert len({t.edges for t in trees}) == len(trees)


def test_enumeration_of_tree_host():
    host = generate("random_tree(8)", seed=2)
    trees = list(enumerate_spanning_trees(host))
    assert len(trees) == 1
    assert trees[0].edges == frozenset(host.edges())


def test_enumeration_guards():
    with pytest.raises(ValidationError):
        list(enumerate_spanning_trees(Graph.from_edges(4, [(0, 1), (2, 3)])))
    with pytest.raises(CapacityError):
        list(enumerate_spanning_trees(generate("complete(6)"), cap=100))


# ------------------------------------------------------------- leaf counts


def _leaf_probability_oracle(n):
    """Exact P(vertex 0 is a leaf) by enumerating all Prufer sequences."""
    total = 0
    leaf_hits = 0
    for seq in product(range(n), repeat=n - 2):
        total += 1
        if 0 not in seq:  # a vertex is a leaf iff absent from the sequence
            leaf_hits += 1
    return Fraction(leaf_hits, total)


def test_leaf_probability_closed_form():
    # validates P(leaf) = (1 - 1/n)^(n-2) before it is used at n = 15
    for n in [3, 4, 5, 6]:
        assert _leaf_probability_oracle(n) == Fraction(n - 1, n) ** (n - 2)


def test_leaf_count_stats_path_host():
    stats = leaf_count_stats(generate("path(6)"), samples=50, seed=0)
    assert stats.histogram == ((2, 50),)
    assert stats.mean == Fraction(2)


def test_leaf_count_stats_k3():
    stats = leaf_count_stats(generate("complete(3)"), samples=100, seed=1)
    assert stats.histogram == ((2, 100),)


def test_leaf_count_stats_k15_mean():
    n = 15
    g = generate("complete(15)")
    stats = leaf_count_stats(g, samples=20000, seed=23)
    exact_mean = n * (Fraction(n - 1, n) ** (n - 2))
    se = math.sqrt(stats.variance / stats.samples)
    assert abs(float(stats.mean) - float(exact_mean)) <= 4 * se
    assert stats.bound_violations == 0


def test_leaf_count_tail_probability_field():
    stats = leaf_count_stats(generate("complete(6)"), samples=400, seed=5, epsilon=0.2)
    assert stats.threshold == pytest.approx((math.exp(-1) - 0.2) * 6)
    assert 0.0 <= stats.below_threshold_probability <= 1.0


# ------------------------------------------------------------ concentration


def test_concentration_bound_values():
    # direct substitution: n=15, delta=14, b=0.5
    report = concentration_profile(generate("complete(15)"), 100, [0.5], seed=3)
    assert report.rows[0].bound_min_degree == pytest.approx(
        2 * math.exp(-(14**2) * 0.25 / (32 * 15))
    )
    assert report.rows[0].bound_min_degree == pytest.approx(1.8059, abs=1e-4)
    assert report.rows[0].bound_alpha_form >= report.rows[0].bound_min_degree


def test_concentration_path_host_zero_tail():
    report = concentration_profile(generate("path(7)"), 200, [0.1, 0.5, 1.0], seed=0)
    for row in report.rows:
        assert row.tail_count == 0
        assert row.status_min_degree == "pass"


def test_concentration_no_violations_k8():
    report = concentration_profile(generate("complete(8)"), 5000, [0.2, 0.3, 0.5], seed=9)
    assert not report.any_violation
    assert report.bound_violations == 0


def test_concentration_validation():
    with pytest.raises(ValidationError):
        concentration_profile(generate("complete(4)"), 10, [], seed=0)
    with pytest.raises(ValidationError):
        concentration_profile(generate("complete(4)"), 10, [-0.5], seed=0)


# ------------------------------------------------------------ weight bounds


def test_weight_bounds_exact_on_samples():
    # |l(T)|/n <= w(T) <= 1/alpha, checked in exact rational arithmetic
    for family, seed in [("complete(9)", 0), ("gnp(8,0.6)", 21), ("complete_minus_perfect_matching(8)", 0)]:
        g, _ = generate_connected(family, seed=seed)
        profile = degree_profile(g)
        upper = 1 / profile.alpha
        for i in range(300):
            tree = wilson_sample(g, stream(seed, i, DOMAIN_SAMPLE))
            sample = leaf_weight(tree, g)
            assert Fraction(sample.leaf_count, g.n) <= sample.weight <= upper
