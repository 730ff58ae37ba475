"""Exact subtree counting.

A k-vertex subtree is a spanning tree of the induced subgraph on its
vertex support, so

    s_k(G) = sum over connected k-subsets W of t(G[W]),

where t(.) is the spanning-tree count. Connected subsets are streamed
duplicate-free by canonical expansion (anchored minimum vertex, frontier
of higher-id neighbors); t(.) is an integer Laplacian cofactor evaluated
by fraction-free Bareiss elimination. Everything here is exact integer or
rational arithmetic; the independent oracles (closed form for complete
graphs, edge-subset brute force) live alongside the production path so
they can disagree loudly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

from .errors import CapacityError, ValidationError
from .graphs import Graph, generate

DEFAULT_ENUMERATION_CAP = 24
BRUTE_FORCE_GUARD = 10**8


@dataclass(frozen=True)
class SubtreeCountVector:
    """Exact counts s_1..s_n; the coefficient list of the subtree polynomial."""

    n: int
    counts: tuple[int, ...]  # counts[k-1] = s_k
    fingerprint: str = ""

    def __post_init__(self):
        if self.n < 1 or len(self.counts) != self.n:
            raise ValidationError("count vector must hold exactly n entries")
        if any(c < 0 for c in self.counts):
            raise ValidationError("subtree counts must be nonnegative")

    def s(self, k: int) -> int:
        """s_k, 1-based; 0 for k outside [1, n]."""
        if 1 <= k <= self.n:
            return self.counts[k - 1]
        return 0

    @property
    def spanning_tree_count(self) -> int:
        return self.counts[-1]

    def to_json_dict(self) -> dict:
        # decimal strings: entries exceed 64-bit range quickly
        return {"n": self.n, "counts": [str(c) for c in self.counts]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(doc: dict) -> "SubtreeCountVector":
        return SubtreeCountVector(
            n=int(doc["n"]), counts=tuple(int(c) for c in doc["counts"])
        )


def _bareiss_determinant(mat: list[list[int]]) -> int:
    """Exact determinant of an integer matrix, destructive on `mat`."""
    size = len(mat)
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for col in range(size - 1):
        pivot_row = next((r for r in range(col, size) if mat[r][col] != 0), None)
        if pivot_row is None:
            return 0
        if pivot_row != col:
            mat[col], mat[pivot_row] = mat[pivot_row], mat[col]
            sign = -sign
        pivot = mat[col][col]
        for r in range(col + 1, size):
            row = mat[r]
            head = row[col]
            top = mat[col]
            for c in range(col + 1, size):
                row[c] = (row[c] * pivot - head * top[c]) // prev
            row[col] = 0
        prev = pivot
    return sign * mat[-1][-1]


def _laplacian_minor(g: Graph, vertices: list[int]) -> list[list[int]]:
    """Laplacian of g[vertices] with the first row and column deleted."""
    k = len(vertices)
    mat = [[0] * (k - 1) for _ in range(k - 1)]
    for i in range(1, k):
        bits_i = g.adjacency_bits[vertices[i]]
        deg = 0
        for j in range(k):
            if i == j:
                continue
            if (bits_i >> vertices[j]) & 1:
                deg += 1
                if j >= 1:
                    mat[i - 1][j - 1] = -1
        mat[i - 1][i - 1] = deg
    return mat


def spanning_tree_count(g: Graph) -> int:
    """Matrix-tree count: any Laplacian cofactor, exact integers.

    Returns 0 iff the graph is disconnected; 1 for a single vertex.
    """
    if g.n == 1:
        return 1
    return _bareiss_determinant(_laplacian_minor(g, list(range(g.n))))


def subset_spanning_tree_count(g: Graph, vertices: list[int]) -> int:
    """Spanning trees of g[vertices], without materializing the subgraph."""
    if len(vertices) == 1:
        return 1
    return _bareiss_determinant(_laplacian_minor(g, vertices))


def enumerate_connected_subsets(g: Graph, k: int) -> Iterator[tuple[int, ...]]:
    """Stream every vertex subset W with |W| = k and g[W] connected, once each.

    Canonical expansion: a subset is grown only from its minimum vertex
    (the anchor), adding higher-id vertices from an extension frontier
    that excludes anything already adjacent to the subset. Deterministic
    order, no seen-set.
    """
    if not 1 <= k <= g.n:
        raise ValidationError(f"subset size {k} out of range [1, {g.n}]")
    if k == 1:
        for v in range(g.n):
            yield (v,)
        return
    adj = g.adjacency_bits

    def extend(sub: tuple[int, ...], ext_bits: int, closed: int, above: int):
        if len(sub) == k - 1:
            ext = ext_bits
            while ext:
                low = ext & -ext
                ext ^= low
                yield sub + (low.bit_length() - 1,)
            return
        ext = ext_bits
        while ext:
            low = ext & -ext
            ext ^= low
            w = low.bit_length() - 1
            grown = ext | (adj[w] & above & ~closed)
            yield from extend(sub + (w,), grown, closed | adj[w] | low, above)

    for anchor in range(g.n):
        above = -1 << (anchor + 1)
        yield from extend(
            (anchor,),
            adj[anchor] & above,
            adj[anchor] | (1 << anchor),
            above,
        )


def subtree_counts(g: Graph, cap: int = DEFAULT_ENUMERATION_CAP) -> SubtreeCountVector:
    """Exact s_1..s_n by summing spanning-tree counts over connected subsets."""
    if g.n > cap:
        raise CapacityError(
            f"subtree_counts on n={g.n} exceeds the enumeration cap {cap}; "
            "raise the cap explicitly if you really want the exponential walk"
        )
    counts = [0] * g.n
    counts[0] = g.n
    for k in range(2, g.n + 1):
        total = 0
        for subset in enumerate_connected_subsets(g, k):
            total += subset_spanning_tree_count(g, list(subset))
        counts[k - 1] = total
    return SubtreeCountVector(n=g.n, counts=tuple(counts), fingerprint=g.fingerprint())


def complete_graph_counts(n: int) -> SubtreeCountVector:
    """Closed-form oracle for complete graphs: s_k = C(n,k) * k^(k-2)."""
    if n < 1:
        raise ValidationError("complete graph needs n >= 1")
    counts = tuple(
        math.comb(n, k) * (k ** (k - 2) if k >= 2 else 1) for k in range(1, n + 1)
    )
    return SubtreeCountVector(
        n=n, counts=counts, fingerprint=generate(f"complete({n})").fingerprint()
    )


def brute_force_subtree_count(g: Graph, k: int) -> int:
    """Independent oracle: count (k-1)-edge subsets forming a tree on k vertices."""
    if not 1 <= k <= g.n:
        raise ValidationError(f"subtree size {k} out of range [1, {g.n}]")
    if k == 1:
        return g.n  # the empty edge set does not pin a vertex; by definition s_1 = n
    if math.comb(g.m, k - 1) > BRUTE_FORCE_GUARD:
        raise CapacityError(
            f"brute force over C({g.m}, {k - 1}) edge subsets exceeds guard {BRUTE_FORCE_GUARD}"
        )
    edges = g.edges()
    count = 0
    for subset in combinations(edges, k - 1):
        vertices = set()
        for u, v in subset:
            vertices.add(u)
            vertices.add(v)
        if len(vertices) != k:
            continue
        parent = {v: v for v in vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for u, v in subset:
            ru, rv = find(u), find(v)
            if ru == rv:
                acyclic = False
                break
            parent[ru] = rv
        if acyclic:
            count += 1
    return count


@dataclass(frozen=True)
class InequalityCheck:
    kind: str  # "ratio" or "partial_sum"
    index: int
    lhs: Fraction
    rhs: Fraction
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "index": self.index,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "passed": self.passed,
        }


@dataclass(frozen=True)
class RatioInequalityReport:
    checks: tuple[InequalityCheck, ...]
    precondition_ok: bool
    all_passed: bool

    def to_json_dict(self) -> dict:
        return {
            "precondition_ok": self.precondition_ok,
            "all_passed": self.all_passed,
            "checks": [c.to_json_dict() for c in self.checks],
        }


def check_ratio_inequalities(
    counts: SubtreeCountVector,
    alpha: Fraction,
    min_degree: int | None = None,
) -> RatioInequalityReport:
    """Exact-rational checks of the two imported count inequalities.

    Ratio bound, for 1 <= k < alpha*n:
        s_{n-k}/s_n <= (1 / (alpha^k k!)) * (1 - k/(alpha n))^(-k)
    Partial-sum bound, for 1 <= r <= n:
        s_1 + ... + s_r <= 2^r s_r

    Both assume a connected source with min degree >= alpha*n; pass
    `min_degree` to have that precondition enforced (counts alone cannot
    carry it). A violated precondition skips the checks rather than
    producing vacuous failures.
    """
    n = counts.n
    alpha_n = alpha * n
    # s_n = 0 means the source was disconnected, outside both bounds' hypotheses
    if counts.s(n) == 0 or (min_degree is not None and alpha_n > min_degree):
        return RatioInequalityReport(checks=(), precondition_ok=False, all_passed=False)
    checks = []
    k = 1
    while Fraction(k) < alpha_n:
        lhs = Fraction(counts.s(n - k), counts.s(n))
        t = 1 - Fraction(k) / alpha_n
        rhs = Fraction(1, 1) / (alpha**k * math.factorial(k)) * t ** (-k)
        checks.append(InequalityCheck("ratio", k, lhs, rhs, passed=lhs <= rhs))
        k += 1
    prefix = 0
    for r in range(1, n + 1):
        prefix += counts.s(r)
        rhs = Fraction(2**r * counts.s(r))
        checks.append(
            InequalityCheck("partial_sum", r, Fraction(prefix), rhs, passed=prefix <= rhs)
        )
    return RatioInequalityReport(
        checks=tuple(checks),
        precondition_ok=True,
        all_passed=all(c.passed for c in checks),
    )
