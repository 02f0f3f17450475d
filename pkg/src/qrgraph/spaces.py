"""Finite metric measure spaces as weighted graphs.

A Space is a connected graph with positive edge lengths, nonnegative vertex
masses, and a distance matrix that is either the all-pairs shortest-path
metric of the graph ("path metric") or an explicitly supplied metric over the
same vertex set.  All objects are immutable after construction; every
operation is a pure function.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ._tol import TOL, ge

__all__ = [
    "Space",
    "Continuum",
    "Curve",
    "DoublingResult",
    "path_metric",
    "ball",
    "ball_closed",
    "components",
    "diameter",
    "doubling_constant",
    "bounded_turning_constant",
    "space_to_json",
    "space_from_json",
    "load_space",
]


class ValidationError(ValueError):
    """Raised when a Space/map fails its invariants; carries all findings."""

    def __init__(self, findings: Sequence[str]):
        super().__init__("; ".join(findings))
        self.findings = tuple(findings)


@dataclass(frozen=True)
class Space:
    """Finite metric measure space: graph + vertex masses + distance matrix."""

    ids: tuple[str, ...]
    mass: np.ndarray                      # (n,) nonnegative
    edges: tuple[tuple[int, int, float], ...]  # (i, j, length), i < j
    dist: np.ndarray                      # (n, n) metric
    is_path_metric: bool
    index: Mapping[str, int] = field(repr=False, compare=False, default=None)
    adj: tuple[tuple[tuple[int, int], ...], ...] = field(repr=False, compare=False, default=None)
    edge_index: Mapping[tuple[int, int], int] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "index", {v: k for k, v in enumerate(self.ids)})
        adj: list[list[tuple[int, int]]] = [[] for _ in self.ids]
        eidx: dict[tuple[int, int], int] = {}
        for e, (i, j, _ln) in enumerate(self.edges):
            adj[i].append((j, e))
            adj[j].append((i, e))
            eidx[(i, j)] = e
            eidx[(j, i)] = e
        object.__setattr__(self, "adj", tuple(tuple(sorted(a)) for a in adj))
        object.__setattr__(self, "edge_index", eidx)
        self.mass.setflags(write=False)
        self.dist.setflags(write=False)

    # -- construction ------------------------------------------------------

    @classmethod
    def build(
        cls,
        vertices: Iterable[tuple[str, float]],
        edges: Iterable[tuple[str, str, float]],
        dist: np.ndarray | str = "path",
    ) -> "Space":
        """Build and validate a Space.  ``dist`` is "path" or an explicit matrix."""
        vlist = list(vertices)
        ids = tuple(v for v, _ in vlist)
        index = {v: k for k, v in enumerate(ids)}
        findings: list[str] = []
        if len(set(ids)) != len(ids):
            findings.append("duplicate vertex ids")
        mass = np.array([float(m) for _, m in vlist], dtype=float)
        if np.any(mass < 0):
            findings.append("negative vertex mass")
        elist: list[tuple[int, int, float]] = []
        seen_pairs: set[tuple[int, int]] = set()
        for u, v, ln in edges:
            if u not in index or v not in index:
                findings.append(f"edge endpoint unknown: ({u},{v})")
                continue
            i, j = index[u], index[v]
            if i == j:
                findings.append(f"self-loop at {u}")
                continue
            key = (min(i, j), max(i, j))
            if key in seen_pairs:
                findings.append(f"duplicate edge ({u},{v})")
                continue
            seen_pairs.add(key)
            if not float(ln) > 0:
                findings.append(f"nonpositive edge length on ({u},{v})")
                continue
            elist.append((key[0], key[1], float(ln)))
        if findings:
            raise ValidationError(findings)
        elist.sort()
        is_path = isinstance(dist, str) and dist == "path"
        if is_path:
            dmat = _apsp(len(ids), elist)
            if np.any(np.isinf(dmat)):
                raise ValidationError(["disconnected"])
        else:
            dmat = np.array(dist, dtype=float)
        sp = cls(ids=ids, mass=mass, edges=tuple(elist), dist=dmat,
                 is_path_metric=is_path)
        # a freshly computed shortest-path matrix is a metric by construction
        findings = sp.validate(trust_path_metric=is_path)
        if findings:
            raise ValidationError(findings)
        return sp

    def validate(self, trust_path_metric: bool = False) -> list[str]:
        """Full invariant scan; returns itemized findings (empty = OK)."""
        findings: list[str] = []
        n = len(self.ids)
        d = self.dist
        if d.shape != (n, n):
            return [f"dist shape {d.shape} != ({n},{n})"]
        if np.any(~np.isfinite(d)):
            findings.append("dist has non-finite entries")
            return findings
        if np.abs(d - d.T).max(initial=0.0) > TOL:
            findings.append("dist not symmetric")
        if np.abs(np.diag(d)).max(initial=0.0) > TOL:
            findings.append("dist diagonal not zero")
        if d.min(initial=0.0) < -TOL:
            findings.append("dist has negative entries")
        check_geometry = not (self.is_path_metric and trust_path_metric)
        if check_geometry:
            for k in range(n):
                if np.any(d > d[:, [k]] + d[[k], :] + TOL):
                    findings.append(f"triangle inequality fails through {self.ids[k]}")
                    break
        if not self._connected():
            findings.append("disconnected")
        if self.mass.sum() <= 0:
            findings.append("total mass not positive")
        if self.is_path_metric and check_geometry:
            apsp = _apsp(n, list(self.edges))
            if np.abs(apsp - d).max(initial=0.0) > TOL:
                findings.append("dist does not equal all-pairs shortest-path metric")
        return findings

    # -- basic accessors ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    def i(self, vid: str) -> int:
        if vid not in self.index:
            raise KeyError(f"unknown vertex id: {vid}")
        return self.index[vid]

    def d(self, u: str, v: str) -> float:
        return float(self.dist[self.i(u), self.i(v)])

    def edge_length(self, e: int) -> float:
        return self.edges[e][2]

    def neighbors(self, i: int) -> tuple[tuple[int, int], ...]:
        """(neighbor index, edge index) pairs, sorted by neighbor index."""
        return self.adj[i]

    def mass_of(self, vid: str) -> float:
        return float(self.mass[self.i(vid)])

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def distance_values(self) -> np.ndarray:
        """Sorted distinct positive entries of the distance matrix."""
        vals = np.unique(self.dist[np.triu_indices(self.n, 1)]) if self.n > 1 else np.array([])
        return vals[vals > TOL]

    def ball_radii(self, center: int) -> list[float]:
        """Sweep radii realizing every nontrivial closed ball around ``center``.

        Radius k sits strictly between the k-th and (k+1)-th distinct positive
        distances from the center, so the open ball at that radius equals the
        closed ball at the k-th distance.  The trivial ball {center} has no
        continuum analog and is not represented.
        """
        dvals = np.unique(self.dist[center])
        dvals = dvals[dvals > TOL]
        radii = [float((dvals[k] + dvals[k + 1]) / 2.0) for k in range(len(dvals) - 1)]
        if len(dvals):
            radii.append(float(dvals[-1] + 1.0))
        return radii

    def _connected(self) -> bool:
        if self.n == 0:
            return False
        comp = _components_idx(self, frozenset(range(self.n)))
        return len(comp) == 1

    def subset(self, members: Iterable[str]) -> frozenset[int]:
        return frozenset(self.i(v) for v in members)

    def names(self, members: Iterable[int]) -> list[str]:
        return sorted(self.ids[i] for i in members)


@dataclass(frozen=True)
class Continuum:
    """Vertex set inducing a connected subgraph."""

    space: Space
    members: frozenset[int]

    def __post_init__(self):
        if self.members and len(_components_idx(self.space, self.members)) != 1:
            raise ValidationError(["continuum not connected"])

    def diameter(self) -> float:
        return diameter(self.space, self.members)

    def ids(self) -> list[str]:
        return self.space.names(self.members)


@dataclass(frozen=True)
class Curve:
    """Edge-path: a vertex sequence with every consecutive pair adjacent."""

    space: Space
    vertices: tuple[int, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ValidationError(["empty curve"])
        for a, b in zip(self.vertices, self.vertices[1:]):
            if (a, b) not in self.space.edge_index:
                raise ValidationError(
                    [f"consecutive vertices not adjacent: ({self.space.ids[a]},{self.space.ids[b]})"]
                )

    @classmethod
    def from_ids(cls, space: Space, ids: Sequence[str]) -> "Curve":
        return cls(space, tuple(space.i(v) for v in ids))

    @property
    def length(self) -> float:
        sp = self.space
        return float(sum(sp.edge_length(sp.edge_index[(a, b)])
                         for a, b in zip(self.vertices, self.vertices[1:])))

    def edge_indices(self) -> list[int]:
        sp = self.space
        return [sp.edge_index[(a, b)] for a, b in zip(self.vertices, self.vertices[1:])]

    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)


# -- operations --------------------------------------------------------------


def _apsp(n: int, edges: list[tuple[int, int, float]]) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0))
    if not edges:
        out = np.full((n, n), np.inf)
        np.fill_diagonal(out, 0.0)
        return out
    rows = [e[0] for e in edges] + [e[1] for e in edges]
    cols = [e[1] for e in edges] + [e[0] for e in edges]
    vals = [e[2] for e in edges] * 2
    g = csr_matrix((vals, (rows, cols)), shape=(n, n))
    return shortest_path(g, method="D", directed=False)


def path_metric(space: Space) -> np.ndarray:
    """Exact all-pairs shortest-path distances of the edge graph."""
    d = _apsp(space.n, list(space.edges))
    if np.any(np.isinf(d)):
        raise ValidationError(["disconnected"])
    return d


def ball(space: Space, center: str, r: float) -> frozenset[int]:
    """Open ball {v : d(center, v) < r}."""
    c = space.i(center)
    return frozenset(int(k) for k in np.nonzero(space.dist[c] < r - TOL)[0])


def ball_closed(space: Space, center: str, r: float) -> frozenset[int]:
    """Closed ball {v : d(center, v) <= r}."""
    c = space.i(center)
    return frozenset(int(k) for k in np.nonzero(space.dist[c] <= r + TOL)[0])


def _components_idx(space: Space, members: frozenset[int]) -> list[frozenset[int]]:
    remaining = set(members)
    out: list[frozenset[int]] = []
    while remaining:
        start = min(remaining)
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w, _e in space.adj[v]:
                if w in remaining and w not in comp:
                    comp.add(w)
                    stack.append(w)
        remaining -= comp
        out.append(frozenset(comp))
    return sorted(out, key=min)


def components(space: Space, members: Iterable[int] | Iterable[str]) -> list[Continuum]:
    """Connected components of the induced subgraph, as Continuum values."""
    idx = frozenset(space.i(v) if isinstance(v, str) else int(v) for v in members)
    return [Continuum(space, c) for c in _components_idx(space, idx)]


def diameter(space: Space, members: Iterable[int] | Iterable[str]) -> float:
    idx = [space.i(v) if isinstance(v, str) else int(v) for v in members]
    if not idx:
        raise ValueError("diameter of empty set")
    sub = space.dist[np.ix_(idx, idx)]
    return float(sub.max())


@dataclass(frozen=True)
class DoublingResult:
    value: int
    exact: bool


def _max_separated_exact(d: np.ndarray, pts: list[int], sep: float) -> int:
    """Max size of a pairwise >= sep subset, by branch and bound."""
    pts = sorted(pts)
    best = 0

    def grow(chosen: list[int], cand: list[int]):
        nonlocal best
        if len(chosen) + len(cand) <= best:
            return
        if not cand:
            best = max(best, len(chosen))
            return
        v = cand[0]
        rest = cand[1:]
        # include v
        grow(chosen + [v], [w for w in rest if ge(d[v, w], sep)])
        # exclude v
        grow(chosen, rest)

    grow([], pts)
    return best


def _max_separated_greedy(d: np.ndarray, pts: list[int], sep: float) -> int:
    chosen: list[int] = []
    for v in sorted(pts):
        if all(ge(d[v, w], sep) for w in chosen):
            chosen.append(v)
    return len(chosen)


def doubling_constant(space: Space, exact_cap: int = 16) -> DoublingResult:
    """Max over centers x and candidate radii r of the size of a maximum
    r/2-separated subset of the open ball B(x, r).

    Exact (branch and bound) when the space has at most ``exact_cap``
    vertices, greedy lower bound otherwise (flagged).
    """
    exact = space.n <= exact_cap
    search = _max_separated_exact if exact else _max_separated_greedy
    best = 1 if space.n else 0
    radii = [float(v) for v in space.distance_values()]
    # radii realize all distinct open balls: just above each distance value
    sweep = sorted({(a + b) / 2.0 for a, b in zip(radii, radii[1:])} | {r + 1.0 for r in radii[-1:]})
    for c in range(space.n):
        for r in sweep:
            pts = [int(k) for k in np.nonzero(space.dist[c] < r - TOL)[0]]
            if len(pts) <= best:
                continue
            best = max(best, search(space.dist, pts, r / 2.0))
    return DoublingResult(value=best, exact=exact)


def bounded_turning_constant(space: Space) -> tuple[float, float]:
    """Bracket (lower, upper) for the bounded-turning constant.

    c = max over pairs of (min over connecting continua of diameter) / dist.
    Uses the same minimax-threshold algorithm as the pullback bracket (the
    connecting-continuum infimum is threshold-connectivity in disguise), so
    lower <= c <= upper = 2 * lower.  Path-metric spaces return (1.0, 1.0).
    """
    if not space._connected():
        raise ValidationError(["disconnected"])
    if space.is_path_metric:
        return (1.0, 1.0)
    apsp = _apsp(space.n, list(space.edges))
    if np.abs(apsp - space.dist).max(initial=0.0) <= TOL:
        return (1.0, 1.0)
    worst = 1.0
    for i in range(space.n):
        for j in range(i + 1, space.n):
            dij = space.dist[i, j]
            if dij <= TOL:
                continue
            t = _minimax_threshold(space, space.dist, i, j)
            worst = max(worst, t / dij)
    return (worst, 2.0 * worst)


def _minimax_threshold(space: Space, dmat: np.ndarray, i: int, j: int) -> float:
    """min over graph paths i -> j of max_v max(dmat[v,i], dmat[v,j]).

    This is the smallest threshold D at which i and j lie in the same
    component of {v : dmat[v,i] <= D and dmat[v,j] <= D}.
    """
    key = np.maximum(dmat[:, i], dmat[:, j])
    best = np.full(space.n, np.inf)
    best[i] = key[i]
    heap: list[tuple[float, int]] = [(key[i], i)]
    while heap:
        val, v = heapq.heappop(heap)
        if val > best[v]:
            continue
        if v == j:
            return float(val)
        for w, _e in space.adj[v]:
            cand = max(val, key[w])
            if cand < best[w]:
                best[w] = cand
                heapq.heappush(heap, (cand, w))
    return float("inf")


# -- JSON schema --------------------------------------------------------------

_SPACE_FIELDS = {"vertices", "edges", "dist"}


def space_to_json(space: Space) -> dict:
    return {
        "vertices": [{"id": v, "mass": float(m)} for v, m in zip(space.ids, space.mass)],
        "edges": [{"u": space.ids[i], "v": space.ids[j], "len": ln} for i, j, ln in space.edges],
        "dist": "path" if space.is_path_metric else [[float(x) for x in row] for row in space.dist],
    }


def space_from_json(obj: dict) -> Space:
    if not isinstance(obj, dict):
        raise ValidationError(["space JSON must be an object"])
    unknown = set(obj) - _SPACE_FIELDS
    if unknown:
        raise ValidationError([f"unknown fields: {sorted(unknown)}"])
    missing = _SPACE_FIELDS - set(obj)
    if missing:
        raise ValidationError([f"missing fields: {sorted(missing)}"])
    findings = []
    verts = []
    for rec in obj["vertices"]:
        if set(rec) != {"id", "mass"}:
            findings.append(f"vertex record fields must be exactly id,mass: {rec}")
            continue
        verts.append((rec["id"], rec["mass"]))
    edges = []
    for rec in obj["edges"]:
        if set(rec) != {"u", "v", "len"}:
            findings.append(f"edge record fields must be exactly u,v,len: {rec}")
            continue
        edges.append((rec["u"], rec["v"], rec["len"]))
    if findings:
        raise ValidationError(findings)
    dist = obj["dist"]
    if isinstance(dist, str):
        if dist != "path":
            raise ValidationError([f'dist must be "path" or a matrix, got {dist!r}'])
        return Space.build(verts, edges, "path")
    return Space.build(verts, edges, np.array(dist, dtype=float))


def load_space(path: str) -> Space:
    with open(path) as fh:
        return space_from_json(json.load(fh))
