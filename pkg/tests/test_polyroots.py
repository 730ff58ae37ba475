"""Polynomial construction, certified roots, margins, deviations."""

import math
from fractions import Fraction

import mpmath as mp
import pytest

from subtree_poly_lab import (
    Graph,
    ReversedSeries,
    SubtreePolynomial,
    ValidationError,
    build_polynomial,
    complete_graph_counts,
    exact_beta,
    find_roots,
    generate,
    poisson_deviation,
    root_bound,
    rouche_margin,
    subtree_counts,
    tree_root_check,
)
from subtree_poly_lab.polyroots import TREE_ROOT_BOUND


def star(n):
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def _closest(roots, target):
    return min(abs(complex(r) - target) for r in roots)


# ------------------------------------------------------------ construction


def test_build_polynomial_examples():
    assert build_polynomial(subtree_counts(generate("path(3)"))).coefficients == (3, 2, 1)
    assert build_polynomial(subtree_counts(generate("complete(3)"))).coefficients == (3, 3, 3)
    assert build_polynomial(subtree_counts(generate("complete(1)"))).coefficients == (1,)


def test_polynomial_validation():
    with pytest.raises(ValidationError):
        SubtreePolynomial(coefficients=())
    with pytest.raises(ValidationError):
        SubtreePolynomial(coefficients=(0, 1))


def test_reversed_series_invariants():
    counts = complete_graph_counts(9)
    series = ReversedSeries.from_counts(counts)
    assert series.ratios[0] == 1
    assert series.ratios[1] == series.beta == exact_beta(counts)
    assert len(series.ratios) == 9


# ------------------------------------------------------------------- roots


def test_p3_roots_closed_form():
    # x^2 + 2x + 3 = 0 -> -1 +/- i sqrt(2)
    analysis = find_roots(build_polynomial(subtree_counts(generate("path(3)"))))
    assert len(analysis.roots) == 3
    assert _closest(analysis.roots, 0) == 0
    assert _closest(analysis.roots, complex(-1, math.sqrt(2))) < 1e-12
    assert _closest(analysis.roots, complex(-1, -math.sqrt(2))) < 1e-12
    assert analysis.max_modulus == pytest.approx(math.sqrt(3), abs=1e-12)


def test_k3_roots_cube_roots_of_unity():
    analysis = find_roots(build_polynomial(subtree_counts(generate("complete(3)"))))
    w = complex(-0.5, math.sqrt(3) / 2)
    assert _closest(analysis.roots, w) < 1e-12
    assert _closest(analysis.roots, w.conjugate()) < 1e-12
    assert analysis.max_modulus == pytest.approx(1.0, abs=1e-12)


def test_single_vertex_polynomial():
    analysis = find_roots(SubtreePolynomial(coefficients=(1,)))
    assert [complex(r) for r in analysis.roots] == [0j]
    assert analysis.max_modulus == 0.0


def test_p2_roots():
    analysis = find_roots(build_polynomial(subtree_counts(generate("path(2)"))))
    assert _closest(analysis.roots, -2.0) < 1e-14
    assert analysis.max_modulus == pytest.approx(2.0)


def test_disconnected_source_trims_trailing_zeros():
    # 2K_2 has no 3- or 4-vertex subtrees: S = 4x + 2x^2, true degree 2
    counts = subtree_counts(Graph.from_edges(4, [(0, 1), (2, 3)]))
    assert counts.counts == (4, 2, 0, 0)
    analysis = find_roots(build_polynomial(counts))
    assert len(analysis.roots) == 2
    assert _closest(analysis.roots, -2.0) < 1e-14


def test_root_count_and_certification_fields():
    for family in ["cycle(6)", "complete(7)", "path(8)", "gnp(8,0.7)"]:
        counts = subtree_counts(generate(family, seed=3))
        analysis = find_roots(build_polynomial(counts))
        assert len(analysis.roots) == counts.n
        assert all(r <= 1e-20 for r in analysis.residuals)
        assert analysis.vieta_relative_error <= 1e-8
        assert analysis.precision_bits >= 106


def test_conjugate_symmetry():
    for family in ["complete(9)", "cycle(8)", "gnp(9,0.6)"]:
        analysis = find_roots(build_polynomial(subtree_counts(generate(family, seed=5))))
        pool = [complex(r) for r in analysis.roots]
        for r in pool:
            assert min(abs(r.conjugate() - q) for q in pool) < 1e-18


def test_vieta_product_value():
    counts = subtree_counts(generate("complete(6)"))
    analysis = find_roots(build_polynomial(counts))
    target = counts.s(1) / counts.s(6)
    assert analysis.vieta_product == pytest.approx(target, rel=1e-12)


def test_cluster_reporting_total_multiplicity():
    counts = subtree_counts(generate("complete(5)"))
    analysis = find_roots(build_polynomial(counts))
    assert sum(mult for _, mult in analysis.clusters) == counts.n


def test_precision_floor_enforced():
    with pytest.raises(ValidationError):
        find_roots(SubtreePolynomial(coefficients=(3, 2, 1)), precision_bits=64)


def test_aberth_extended_precision_path():
    # the in-mpmath sweep (used when ratios overflow doubles) must agree
    # with the closed form too: 3 + 2y + y^2 has roots -1 +/- i sqrt(2)
    from subtree_poly_lab.polyroots import _aberth

    with mp.workprec(192):
        roots, sweeps = _aberth([mp.mpc(3), mp.mpc(2), mp.mpc(1)], 1e-30, 300)
        target = mp.mpc(-1, mp.sqrt(2))
        best = min(abs(r - target) for r in roots)
        assert best < mp.mpf(10) ** -25
        assert sweeps < 300


# -------------------------------------------------------------- root bound


def test_root_bound_values():
    # frozen by direct substitution into C / (alpha ln n)
    assert root_bound(Fraction(99, 100), 100, 7.0) == pytest.approx(1.5353845320, abs=1e-9)
    assert root_bound(Fraction(3, 4), 4, 7.0) == pytest.approx(6.7325768575, abs=1e-9)


def test_root_bound_monotone_in_n():
    values = [root_bound(Fraction(1, 2), n, 7.0) for n in [10, 20, 40, 80]]
    assert values == sorted(values, reverse=True)


def test_root_bound_validation():
    with pytest.raises(ValidationError):
        root_bound(Fraction(1, 2), 100, 6.0)
    with pytest.raises(ValidationError):
        root_bound(Fraction(1, 2), 1, 7.0)
    with pytest.raises(ValidationError):
        root_bound(Fraction(0), 10, 7.0)


# ------------------------------------------------------------ rouche margin


def test_rouche_margin_k20():
    counts = complete_graph_counts(20)
    report = rouche_margin(counts, Fraction(19, 20), C=7.0, circle_points=256)
    assert 0.0 <= report.max_margin < 1.0
    assert report.witness_ok
    assert report.margin_below_one
    assert report.radius == pytest.approx(float(Fraction(19, 20)) * math.log(20) / 7.0)
    assert report.witness_floor == pytest.approx(20 ** (-1 / 7.0))


def test_rouche_margin_rejects_small_C():
    counts = complete_graph_counts(10)
    with pytest.raises(ValidationError):
        rouche_margin(counts, Fraction(9, 10), C=6.0)


def test_rouche_point_count_includes_axis():
    counts = complete_graph_counts(10)
    a = rouche_margin(counts, Fraction(9, 10), circle_points=8)
    assert a.circle_points == 8  # the 4 axis points ride on top


def test_reversed_series_at_zero_matches_exponential():
    # F(0) = 1 = e^0: the pointwise margin vanishes at the origin
    series = ReversedSeries.from_counts(complete_graph_counts(8))
    f0 = Fraction(0)
    for c in reversed(series.ratios):
        f0 = f0 * 0 + c
    assert f0 == 1
    assert abs(float(f0) - math.exp(0.0)) == 0.0


# --------------------------------------------------------------- deviations


def test_deviation_zero_for_k0_k1():
    for family in ["complete(8)", "cycle(6)", "gnp(9,0.5)"]:
        counts = subtree_counts(generate(family, seed=2))
        devs = poisson_deviation(counts, 1)
        assert devs[0] == 0
        assert devs[1] == 0


def test_deviation_k20_closed_form():
    # independent expression from the closed-form counts of K_20
    counts = complete_graph_counts(20)
    beta = Fraction(20 * 19**17, 20**18)
    expected_dev2 = Fraction(math.comb(20, 2) * 18**16, 20**18) * 2 / beta**2 - 1
    devs = poisson_deviation(counts, 2)
    assert devs[2] == expected_dev2
    assert devs[2] != 0


def test_deviation_validation():
    counts = complete_graph_counts(5)
    with pytest.raises(ValidationError):
        poisson_deviation(counts, 5)
    with pytest.raises(ValidationError):
        poisson_deviation(counts, -1)


def test_poisson_limit_complete_graphs():
    # for K_n the ratio s_{n-k}/s_n approaches e^{-k}/k! as n grows
    counts = complete_graph_counts(200)
    for k in [1, 2, 3]:
        ratio = Fraction(counts.s(200 - k), counts.s(200))
        limit = math.exp(-k) / math.factorial(k)
        assert abs(float(ratio) - limit) / limit < 0.05


def test_deviation_trend_toward_poisson():
    maxdev = []
    for n in [10, 15, 20, 25]:
        devs = poisson_deviation(complete_graph_counts(n), 3)
        maxdev.append(max(abs(d) for d in devs[1:]))
    assert all(a > b for a, b in zip(maxdev, maxdev[1:]))


# -------------------------------------------------------------- tree checks


def test_tree_check_p3():
    report = tree_root_check(generate("path(3)"))
    assert report.within_bound
    assert report.max_modulus == pytest.approx(math.sqrt(3), abs=1e-12)


def test_tree_check_star4_attains_bound():
    # S(K_{1,3}; x)/x = 4 + 3x + 3x^2 + x^3 = (x+1)^3 + 3: the extremal case,
    # with a real root at -(1 + cbrt(3))
    report = tree_root_check(star(4))
    assert report.max_modulus == pytest.approx(TREE_ROOT_BOUND, abs=1e-12)
    assert report.within_bound


def test_tree_check_p2():
    report = tree_root_check(generate("path(2)"))
    assert report.max_modulus == pytest.approx(2.0)
    assert report.within_bound


def test_tree_check_rejects_non_tree():
    with pytest.raises(ValidationError):
        tree_root_check(generate("cycle(5)"))
    with pytest.raises(ValidationError):
        tree_root_check(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_tree_check_annulus_diagnostic_reported():
    for seed in range(5):
        report = tree_root_check(generate("random_tree(8)", seed=seed))
        assert report.within_bound
        assert isinstance(report.annulus_ok, bool)
        assert report.annulus_outer == pytest.approx(0.5 + 7 ** (1 / 7))
