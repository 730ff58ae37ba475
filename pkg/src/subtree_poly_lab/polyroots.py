"""Subtree polynomial: construction, certified roots, and diagnostics.

The polynomial S(x) = sum_{k=1}^n s_k x^k always has the simple forced
root x = 0. The remaining n-1 roots are found on the reversed series

    F(y) = sum_{k=0}^{n-1} (s_{n-k}/s_n) y^k,      S(x) = s_n x^n F(1/x),

whose coefficients are well scaled for dense graphs (they decay roughly
like beta^k/k!), by an Aberth-Ehrlich simultaneous sweep started from a
scaled circle. Each root is then mapped back to x = 1/y and polished
with Newton steps on the exact integer coefficients under extended
precision, and certified by scale-normalized residuals plus a Vieta
product check. Certification failures raise; they are never silent.

Also here: the Rouche margin |F(y) - e^{beta y}| / |e^{beta y}| sampled
on the circle |y| = alpha log(n) / C, the factorial-normalized deviation
diagnostics for the Poisson law, and the contrast checks for tree hosts.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath as mp

from .counting import SubtreeCountVector, subtree_counts
from .errors import CertificationError, ValidationError
from .graphs import Graph, is_connected
from .spanning import exact_beta

DEFAULT_PRECISION_BITS = 192  # >= the 106-bit floor the polish step needs
RESIDUAL_THRESHOLD = 1e-20
VIETA_RELATIVE_TOLERANCE = 1e-8
CLUSTER_TOLERANCE = 1e-7
TREE_ROOT_BOUND = 1.0 + 3.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class SubtreePolynomial:
    """Coefficients s_1..s_n of S(x); no constant term, so 0 is a root."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        if not self.coefficients:
            raise ValidationError("polynomial needs at least the linear coefficient")
        if self.coefficients[0] < 1:
            raise ValidationError("s_1 must be positive (every vertex is a subtree)")
        if any(c < 0 for c in self.coefficients):
            raise ValidationError("subtree polynomial coefficients are nonnegative")

    @property
    def degree(self) -> int:
        return len(self.coefficients)


def build_polynomial(counts: SubtreeCountVector) -> SubtreePolynomial:
    return SubtreePolynomial(coefficients=counts.counts)


@dataclass(frozen=True)
class ReversedSeries:
    """Exact ratios s_{n-k}/s_n for k = 0..n-1; the coefficients of F(y)."""

    ratios: tuple[Fraction, ...]
    beta: Fraction

    @staticmethod
    def from_counts(counts: SubtreeCountVector) -> "ReversedSeries":
        n = counts.n
        sn = counts.s(n)
        if sn == 0:
            raise ValidationError("reversed series undefined for disconnected source")
        ratios = tuple(Fraction(counts.s(n - k), sn) for k in range(n))
        return ReversedSeries(ratios=ratios, beta=exact_beta(counts))


def _aberth(coeffs: list, tol: float, max_sweeps: int):
    """Simultaneous root iteration; works for complex or mpc coefficients."""
    d = len(coeffs) - 1
    lead = coeffs[d]
    radius = abs(coeffs[0] / lead) ** (1.0 / d)
    if radius == 0 or not math.isfinite(float(radius)):
        radius = 1.0
    z = [
        radius * cmath.exp(2j * math.pi * (j + 0.35) / d) * (1 + 0j)
        for j in range(d)
    ]
    if not isinstance(lead, complex):  # mpc path keeps everything in mpmath
        z = [mp.mpc(v.real, v.imag) for v in z]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        worst = 0.0
        for j in range(d):
            zj = z[j]
            p = coeffs[d]
            dp = 0 * zj
            for k in range(d - 1, -1, -1):
                dp = dp * zj + p
                p = p * zj + coeffs[k]
            if p == 0:
                continue
            newton = p / dp if dp != 0 else p
            repulse = 0 * zj
            for k in range(d):
                if k != j:
                    dz = zj - z[k]
                    if dz != 0:
                        repulse += 1 / dz
            denom = 1 - newton * repulse
            step = newton / denom if denom != 0 else newton
            z[j] = zj - step
            rel = float(abs(step)) / max(float(abs(z[j])), 1e-300)
            worst = max(worst, rel)
        if worst < tol:
            break
    return z, sweeps


@dataclass(frozen=True)
class RootAnalysis:
    roots: tuple  # mpc values, n entries, forced 0 first
    residuals: tuple[float, ...]
    max_modulus: float
    iterations: int
    precision_bits: int
    vieta_product: float
    vieta_target: float
    vieta_relative_error: float
    clusters: tuple[tuple[complex, int], ...]  # (center, multiplicity)

    def to_json_dict(self) -> dict:
        return {
            "roots": [[mp.nstr(r.real, 25), mp.nstr(r.imag, 25)] for r in self.roots],
            "residuals": list(self.residuals),
            "max_modulus": self.max_modulus,
            "iterations": self.iterations,
            "precision_bits": self.precision_bits,
            "vieta_product": self.vieta_product,
            "vieta_target": self.vieta_target,
            "vieta_relative_error": self.vieta_relative_error,
            "clusters": [
                [repr(c.real), repr(c.imag), mult] for c, mult in self.clusters
            ],
        }


def _horner_pair(coeffs: Sequence, x):
    """(p(x), p'(x)) with coefficients in ascending order."""
    p = coeffs[-1]
    dp = 0 * x
    for k in range(len(coeffs) - 2, -1, -1):
        dp = dp * x + p
        p = p * x + coeffs[k]
    return p, dp


def find_roots(
    p: SubtreePolynomial,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    max_sweeps: int = 500,
    newton_steps: int = 60,
) -> RootAnalysis:
    """All roots of S(x), certified; the count equals the true degree.

    Trailing zero coefficients (a disconnected source leaves s_n = 0)
    are trimmed first. Raises CertificationError (carrying the best
    iterates and residuals) if any residual stays above threshold or
    the Vieta product check misses, instead of returning dubious roots.
    """
    s = p.coefficients
    n = p.degree
    while n > 1 and s[n - 1] == 0:
        n -= 1
    s = s[:n]
    if precision_bits < 106:
        raise ValidationError("precision_bits must be at least 106")
    # keep the integer coefficients exactly representable during evaluation
    work_bits = max(precision_bits, max(c.bit_length() for c in s) + 64)
    if n == 1:
        zero = mp.mpc(0)
        return RootAnalysis(
            roots=(zero,),
            residuals=(0.0,),
            max_modulus=0.0,
            iterations=0,
            precision_bits=work_bits,
            vieta_product=1.0,
            vieta_target=1.0,
            vieta_relative_error=0.0,
            clusters=((0j, 1),),
        )
    sn = s[-1]
    ratios = [Fraction(s[n - 1 - k], sn) for k in range(n)]  # F(y) coefficients
    try:
        cs = [float(r) for r in ratios]
        finite = all(math.isfinite(c) for c in cs)
    except OverflowError:
        finite = False
    if finite:
        y, sweeps = _aberth([complex(c) for c in cs], 1e-13, max_sweeps)
    else:
        with mp.workprec(work_bits):
            y, sweeps = _aberth([mp.mpc(mp.mpf(r.numerator) / r.denominator) for r in ratios], 1e-30, max_sweeps)

    iterations = sweeps
    roots = [mp.mpc(0)]
    residuals = [0.0]
    with mp.workprec(work_bits):
        q_coeffs = [mp.mpf(c) for c in s]  # Q(x) = S(x)/x, exact at work_bits
        stop = mp.mpf(2) ** (-(work_bits - 16))
        for yy in y:
            yv = mp.mpc(yy)
            if yv == 0:
                x = mp.mpc(1)  # degenerate iterate; let Newton sort it out
            else:
                x = 1 / yv
            for _ in range(newton_steps):
                val, dval = _horner_pair(q_coeffs, x)
                if dval == 0 or val == 0:
                    break
                step = val / dval
                x = x - step
                iterations += 1
                if abs(step) <= abs(x) * stop:
                    break
            roots.append(x)
        # scale-normalized residuals: |S(x)| / S(|x|), cancellation-free scale
        for x in roots[1:]:
            val, _ = _horner_pair(q_coeffs, x)
            s_val = abs(x) * abs(val)
            scale, _ = _horner_pair(q_coeffs, abs(x))
            scale = abs(x) * scale
            residuals.append(float(s_val / scale) if scale > 0 else float(s_val))
        vieta_product = mp.mpf(1)
        for x in roots[1:]:
            vieta_product *= abs(x)
        vieta_target = mp.mpf(s[0]) / mp.mpf(sn)
        vieta_rel = float(abs(vieta_product - vieta_target) / vieta_target)
        pairs = sorted(
            zip(roots[1:], residuals[1:]), key=lambda t: (t[0].real, t[0].imag)
        )
        max_modulus = float(max(abs(x) for x in roots))
    if any(r > RESIDUAL_THRESHOLD for r in residuals) or vieta_rel > VIETA_RELATIVE_TOLERANCE:
        raise CertificationError(
            f"root certification failed: max residual {max(residuals):.3e}, "
            f"Vieta relative error {vieta_rel:.3e}",
            roots=roots,
            residuals=residuals,
        )
    ordered = [roots[0]] + [x for x, _ in pairs]
    ordered_residuals = (0.0,) + tuple(r for _, r in pairs)
    return RootAnalysis(
        roots=tuple(ordered),
        residuals=ordered_residuals,
        max_modulus=max_modulus,
        iterations=iterations,
        precision_bits=work_bits,
        vieta_product=float(vieta_product),
        vieta_target=float(vieta_target),
        vieta_relative_error=vieta_rel,
        clusters=_cluster(ordered),
    )


def _cluster(roots) -> tuple[tuple[complex, int], ...]:
    """Group roots closer than CLUSTER_TOLERANCE; near-multiples stay honest."""
    remaining = [complex(r) for r in roots]
    clusters = []
    used = [False] * len(remaining)
    for i, base in enumerate(remaining):
        if used[i]:
            continue
        members = [base]
        used[i] = True
        for j in range(i + 1, len(remaining)):
            if not used[j] and abs(remaining[j] - base) < CLUSTER_TOLERANCE:
                members.append(remaining[j])
                used[j] = True
        center = sum(members) / len(members)
        clusters.append((center, len(members)))
    return tuple(clusters)


def root_bound(alpha: Fraction, n: int, C: float = 7.0) -> float:
    """The dense-graph root bound C / (alpha log n), natural log."""
    if C <= 6.0:
        raise ValidationError("the root bound requires C > 6")
    if n < 2:
        raise ValidationError("root bound needs n >= 2")
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    return C / (float(alpha) * math.log(n))


@dataclass(frozen=True)
class RoucheReport:
    n: int
    C: float
    radius: float
    beta: Fraction
    circle_points: int
    max_margin: float
    max_margin_index: int
    margin_below_one: bool
    witness_ok: bool  # |e^{beta y}| >= n^(-1/C) at every sampled point
    witness_floor: float
    precision_bits: int
    label: str = "sampled supremum"

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "C": self.C,
            "radius": self.radius,
            "beta": float(self.beta),
            "beta_exact": str(self.beta),
            "circle_points": self.circle_points,
            "max_margin": self.max_margin,
            "max_margin_index": self.max_margin_index,
            "margin_below_one": self.margin_below_one,
            "witness_ok": self.witness_ok,
            "witness_floor": self.witness_floor,
            "precision_bits": self.precision_bits,
            "label": self.label,
        }


def rouche_margin(
    counts: SubtreeCountVector,
    alpha: Fraction,
    C: float = 7.0,
    circle_points: int = 256,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> RoucheReport:
    """Sampled max of |F(y) - e^{beta y}| / |e^{beta y}| on |y| = alpha log(n)/C.

    A finite sample is a falsifiable proxy for the full-circle statement,
    hence the "sampled supremum" label. The four axis points are always
    included on top of the equally spaced ones. Also checks the pointwise
    witness |e^{beta y}| >= n^(-1/C) that the comparison relies on.
    """
    if C <= 6.0:
        raise ValidationError("the Rouche construction requires C > 6")
    if circle_points < 1:
        raise ValidationError("need at least one circle point")
    n = counts.n
    if n < 2:
        raise ValidationError("Rouche margin needs n >= 2")
    if counts.s(n) == 0:
        raise ValidationError("Rouche margin undefined for disconnected source")
    series = ReversedSeries.from_counts(counts)
    beta = series.beta
    work_bits = max(precision_bits, counts.s(n).bit_length() + 64)
    with mp.workprec(work_bits):
        sn = mp.mpf(counts.s(n))
        coeffs = [mp.mpf(counts.s(n - k)) / sn for k in range(n)]
        beta_mp = mp.mpf(beta.numerator) / beta.denominator
        radius = mp.mpf(alpha.numerator) / alpha.denominator * mp.log(n) / mp.mpf(C)
        floor = mp.exp(-mp.log(n) / mp.mpf(C))  # n^(-1/C)
        slack = 1 - mp.mpf(2) ** -50
        points = [
            radius * mp.exp(2j * mp.pi * mp.mpf(j) / circle_points)
            for j in range(circle_points)
        ]
        points += [radius * u for u in (mp.mpc(1), mp.mpc(-1), mp.mpc(0, 1), mp.mpc(0, -1))]
        max_margin = mp.mpf(-1)
        max_index = 0
        witness_ok = True
        for idx, yv in enumerate(points):
            f = coeffs[-1]
            for k in range(n - 2, -1, -1):
                f = f * yv + coeffs[k]
            e = mp.exp(beta_mp * yv)
            mag = abs(e)
            if mag < floor * slack:
                witness_ok = False
            margin = abs(f - e) / mag
            if margin > max_margin:
                max_margin = margin
                max_index = idx
        report = RoucheReport(
            n=n,
            C=float(C),
            radius=float(radius),
            beta=beta,
            circle_points=circle_points,
            max_margin=float(max_margin),
            max_margin_index=max_index,
            margin_below_one=bool(max_margin < 1),
            witness_ok=witness_ok,
            witness_floor=float(floor),
            precision_bits=work_bits,
        )
    return report


def poisson_deviation(counts: SubtreeCountVector, k_max: int) -> list[Fraction]:
    """dev_k = (s_{n-k}/s_n) * k! / beta^k - 1 for k = 0..k_max, exact.

    dev_0 = dev_1 = 0 by construction; higher deviations measure the
    distance from the factorial (Poisson) profile.
    """
    n = counts.n
    if k_max >= n:
        raise ValidationError(f"k_max must be below n = {n}")
    if k_max < 0:
        raise ValidationError("k_max must be nonnegative")
    if counts.s(n) == 0:
        raise ValidationError("deviations undefined for disconnected source")
    beta = exact_beta(counts)
    devs = []
    for k in range(k_max + 1):
        ratio = Fraction(counts.s(n - k), counts.s(n))
        devs.append(ratio * math.factorial(k) / beta**k - 1)
    return devs


@dataclass(frozen=True)
class TreeRootReport:
    n: int
    max_modulus: float
    bound: float
    tolerance: float
    within_bound: bool
    annulus_inner: float
    annulus_outer: float
    annulus_ok: bool  # diagnostic only, never asserted
    analysis: RootAnalysis

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "max_modulus": self.max_modulus,
            "bound": self.bound,
            "tolerance": self.tolerance,
            "within_bound": self.within_bound,
            "annulus_inner": self.annulus_inner,
            "annulus_outer": self.annulus_outer,
            "annulus_ok": self.annulus_ok,
            "analysis": self.analysis.to_json_dict(),
        }


def tree_root_check(tree: Graph, tolerance: float = 1e-9) -> TreeRootReport:
    """Root diagnostics for a tree host.

    Asserts the absolute bound max|x| <= 1 + cbrt(3) (+ tolerance) and
    reports, without asserting, whether all roots lie in the conjectured
    annulus 1/2 <= |x + 1/2| <= 1/2 + (n-1)^(1/(n-1)).
    """
    if tree.m != tree.n - 1 or not is_connected(tree):
        raise ValidationError("tree_root_check needs a tree (connected, m = n - 1)")
    counts = subtree_counts(tree)
    analysis = find_roots(build_polynomial(counts))
    within = analysis.max_modulus <= TREE_ROOT_BOUND + tolerance
    n = tree.n
    if n >= 2:
        outer = 0.5 + (n - 1) ** (1.0 / (n - 1))
    else:
        outer = 0.5
    annulus_ok = all(
        0.5 - 1e-12 <= abs(complex(r) + 0.5) <= outer + 1e-12 for r in analysis.roots
    )
    return TreeRootReport(
        n=n,
        max_modulus=analysis.max_modulus,
        bound=TREE_ROOT_BOUND,
        tolerance=tolerance,
        within_bound=within,
        annulus_inner=0.5,
        annulus_outer=outer,
        annulus_ok=annulus_ok,
        analysis=analysis,
    )
