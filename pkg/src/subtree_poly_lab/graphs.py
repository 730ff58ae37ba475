"""Simple undirected graphs: representation, generators, edge-list ingestion.

Vertices are 0-based contiguous integers. Adjacency is stored twice: as
bitset rows (fast subset intersection during enumeration) and as sorted
neighbor tuples (fast random walks). Graphs are immutable after
construction and safe to share across workers.
"""

from __future__ import annotations

import hashlib
import heapq
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import EdgeListParseError, ValidationError
from .rng import stream

FAMILY_NAMES = (
    "complete",
    "cycle",
    "path",
    "gnp",
    "random_tree",
    "complete_minus_perfect_matching",
)


@dataclass(frozen=True)
class Graph:
    n: int
    m: int
    neighbors: tuple[tuple[int, ...], ...]
    adjacency_bits: tuple[int, ...]

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        """Build a simple graph; rejects self-loops, duplicates, bad ids."""
        if n < 1:
            raise ValidationError("graph must have at least one vertex")
        bits = [0] * n
        m = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"vertex id out of range in edge ({u}, {v})")
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            if (bits[u] >> v) & 1:
                raise ValidationError(f"duplicate edge ({min(u, v)}, {max(u, v)})")
            bits[u] |= 1 << v
            bits[v] |= 1 << u
            m += 1
        neighbors = tuple(
            tuple(v for v in range(n) if (bits[u] >> v) & 1) for u in range(n)
        )
        return Graph(n=n, m=m, neighbors=neighbors, adjacency_bits=tuple(bits))

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(nb) for nb in self.neighbors)

    def has_edge(self, u: int, v: int) -> bool:
        return bool((self.adjacency_bits[u] >> v) & 1)

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) with u < v, lexicographically sorted."""
        return [
            (u, v) for u in range(self.n) for v in self.neighbors[u] if u < v
        ]

    def fingerprint(self) -> str:
        """Stable hash of the labeled graph (vertex count + edge set)."""
        body = f"{self.n};" + ",".join(f"{u}-{v}" for u, v in self.edges())
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DegreeProfile:
    min_degree: int
    max_degree: int
    alpha: Fraction  # min_degree / n, kept exact


def degree_profile(g: Graph) -> DegreeProfile:
    degs = g.degrees
    return DegreeProfile(
        min_degree=min(degs),
        max_degree=max(degs),
        alpha=Fraction(min(degs), g.n),
    )


def is_connected(g: Graph) -> bool:
    """Single-component test; a one-vertex graph counts as connected."""
    seen = 1  # bitset of visited vertices, start at 0
    frontier = 1
    full = (1 << g.n) - 1
    while frontier:
        nxt = 0
        v = frontier
        while v:
            low = v & -v
            nxt |= g.adjacency_bits[low.bit_length() - 1]
            v ^= low
        frontier = nxt & ~seen
        seen |= frontier
    return seen == full


def from_edge_list(text: str) -> Graph:
    """Parse the edge-list document format: header "n m", then m lines "u v".

    Edge lines require 0 <= u < v < n; no duplicates, no comments. Blank
    lines are ignored. Errors carry the offending 1-based line number.
    """
    entries = [
        (i, line.strip())
        for i, line in enumerate(text.splitlines(), start=1)
        if line.strip()
    ]
    if not entries:
        raise EdgeListParseError(1, "empty document, expected header 'n m'")
    header_no, header = entries[0]
    parts = header.split()
    if len(parts) != 2:
        raise EdgeListParseError(header_no, f"header must be 'n m', got {header!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise EdgeListParseError(header_no, f"header must be two integers, got {header!r}")
    if n < 1:
        raise EdgeListParseError(header_no, f"vertex count must be positive, got {n}")
    if m < 0:
        raise EdgeListParseError(header_no, f"edge count must be nonnegative, got {m}")
    if len(entries) - 1 != m:
        raise EdgeListParseError(
            header_no, f"header declares {m} edges but document has {len(entries) - 1} edge lines"
        )
    seen = set()
    edges = []
    for line_no, line in entries[1:]:
        fields = line.split()
        if len(fields) != 2:
            raise EdgeListParseError(line_no, f"edge line must be 'u v', got {line!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError:
            raise EdgeListParseError(line_no, f"edge line must be two integers, got {line!r}")
        if u == v:
            raise EdgeListParseError(line_no, f"self-loop at vertex {u}")
        if not 0 <= u < v:
            raise EdgeListParseError(line_no, f"edge must satisfy 0 <= u < v, got ({u}, {v})")
        if v >= n:
            raise EdgeListParseError(line_no, f"vertex id {v} out of range [0, {n})")
        if (u, v) in seen:
            raise EdgeListParseError(line_no, f"duplicate edge ({u}, {v})")
        seen.add((u, v))
        edges.append((u, v))
    return Graph.from_edges(n, edges)


@dataclass(frozen=True)
class FamilySpec:
    name: str
    args: tuple

    def __str__(self) -> str:
        inner = ",".join(
            str(a) if not isinstance(a, float) else repr(a) for a in self.args
        )
        return f"{self.name}({inner})"


_FAMILY_RE = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^)]*)\s*\)\s*$")


def parse_family(text: str) -> FamilySpec:
    """Parse specs like 'complete(4)' or 'gnp(10,0.5)'."""
    match = _FAMILY_RE.match(text)
    if not match:
        raise ValidationError(f"cannot parse family spec {text!r}, expected name(args)")
    name, raw_args = match.group(1), match.group(2)
    if name not in FAMILY_NAMES:
        raise ValidationError(
            f"unknown family {name!r}, expected one of {', '.join(FAMILY_NAMES)}"
        )
    args = []
    for piece in filter(None, (p.strip() for p in raw_args.split(","))):
        try:
            args.append(int(piece))
        except ValueError:
            try:
                args.append(float(piece))
            except ValueError:
                raise ValidationError(f"bad argument {piece!r} in family spec {text!r}")
    return FamilySpec(name=name, args=tuple(args))


def _require_size(spec: FamilySpec, count: int) -> None:
    if len(spec.args) != count or not isinstance(spec.args[0], int):
        raise ValidationError(f"family {spec.name} expects {count} argument(s), got {spec.args}")
    if spec.args[0] < 1:
        raise ValidationError(f"family {spec.name} needs n >= 1, got {spec.args[0]}")


def generate(spec: FamilySpec | str, seed: int = 0) -> Graph:
    """Deterministic graph from a family spec and a 64-bit seed.

    gnp includes each pair independently with probability p; random_tree is
    uniform over labeled trees via Prufer decoding. Connectedness is not
    enforced here; callers that need it should use generate_connected.
    """
    if isinstance(spec, str):
        spec = parse_family(spec)
    name = spec.name
    if name == "complete":
        _require_size(spec, 1)
        n = spec.args[0]
        return Graph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])
    if name == "path":
        _require_size(spec, 1)
        n = spec.args[0]
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    if name == "cycle":
        _require_size(spec, 1)
        n = spec.args[0]
        if n < 3:
            raise ValidationError("cycle needs n >= 3 to stay a simple graph")
        return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)] + [(0, n - 1)])
    if name == "complete_minus_perfect_matching":
        _require_size(spec, 1)
        n = spec.args[0]
        if n % 2 != 0:
            raise ValidationError("complete_minus_perfect_matching needs even n")
        removed = {(2 * i, 2 * i + 1) for i in range(n // 2)}
        return Graph.from_edges(
            n,
            [
                (u, v)
                for u in range(n)
                for v in range(u + 1, n)
                if (u, v) not in removed
            ],
        )
    if name == "gnp":
        if len(spec.args) != 2 or not isinstance(spec.args[0], int):
            raise ValidationError(f"gnp expects (n, p), got {spec.args}")
        n, p = spec.args[0], float(spec.args[1])
        if n < 1:
            raise ValidationError(f"gnp needs n >= 1, got {n}")
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"gnp needs 0 <= p <= 1, got {p}")
        rs = stream(seed)
        edges = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if rs.uniform() < p
        ]
        return Graph.from_edges(n, edges)
    if name == "random_tree":
        _require_size(spec, 1)
        n = spec.args[0]
        if n == 1:
            return Graph.from_edges(1, [])
        if n == 2:
            return Graph.from_edges(2, [(0, 1)])
        rs = stream(seed)
        prufer = [rs.randint(n) for _ in range(n - 2)]
        return Graph.from_edges(n, _prufer_decode(prufer, n))
    raise ValidationError(f"unknown family {name!r}")


def _prufer_decode(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    """Bijective decode of a Prufer sequence into a labeled tree's edges."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((min(u, v), max(u, v)))
    return edges


def generate_connected(
    spec: FamilySpec | str, seed: int = 0, max_attempts: int = 10_000
) -> tuple[Graph, int]:
    """Resample with incremented seed until connected.

    Returns (graph, rejections). Keeps the generator itself a faithful
    product measure; only the experiment conditions on connectivity.
    """
    if isinstance(spec, str):
        spec = parse_family(spec)
    for attempt in range(max_attempts):
        g = generate(spec, seed + attempt)
        if is_connected(g):
            return g, attempt
    raise ValidationError(
        f"no connected instance of {spec} within {max_attempts} seeds from {seed}"
    )


def induced_subgraph(g: Graph, vertex_subset: Iterable[int]) -> tuple[Graph, tuple[int, ...]]:
    """Subgraph on a vertex subset, relabeled 0..|W|-1.

    Returns (subgraph, label_map) where label_map[new_id] = old_id.
    """
    subset = sorted(set(vertex_subset))
    if not subset:
        raise ValidationError("vertex subset must be nonempty")
    if subset[0] < 0 or subset[-1] >= g.n:
        raise ValidationError(f"vertex ids must lie in [0, {g.n})")
    index = {old: new for new, old in enumerate(subset)}
    edges = [
        (index[u], index[v])
        for u in subset
        for v in g.neighbors[u]
        if u < v and v in index
    ]
    return Graph.from_edges(len(subset), edges), tuple(subset)
