"""Temporal dependency graph: relative-risk edges and conditional tables.

Vertices are (feature index, period) pairs. An estimated edge
(i, t) -> (j, t') with t < t' is retained when the relative risk
P(dst=1 | src=1) / P(dst=1 | src=0) exceeds the threshold gamma and both
conditioning strata meet the support floor. Same-period edges are never
estimated: they would break the topological order the propagation
operator relies on. Pathway edges from the catalog are always injected,
flagged with source="pathway", regardless of their observed relative
risk.

Each Past/Last vertex also gets a conditional probability table whose
parents are the sources of its incoming edges (capped at the four
highest-RR edges) plus the same feature's vertex in the immediately
preceding period. Table cells are Laplace-smoothed; unobserved parent
patterns fall back to the target's smoothed marginal rate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .catalog import FeatureCatalog
from .cohort import Cohort, Period
from .errors import GraphError

MAX_ESTIMATED_PARENTS = 4


class Vertex(NamedTuple):
    feature: int
    period: Period


@dataclass(frozen=True)
class EdgeCounts:
    n_src1: int
    n_src1_dst1: int
    n_src0: int
    n_src0_dst1: int

    def relative_risk(self) -> float:
        p1 = self.n_src1_dst1 / self.n_src1
        p0 = self.n_src0_dst1 / self.n_src0
        return float("inf") if p0 == 0 else p1 / p0


@dataclass(frozen=True)
class Edge:
    src: Vertex
    dst: Vertex
    relative_risk: float
    counts: EdgeCounts
    source: str = "estimated"  # "estimated" | "pathway"


@dataclass(frozen=True)
class ConditionalTable:
    """Smoothed P(target bit = 1 | parent bit pattern)."""

    target: Vertex
    parents: tuple[Vertex, ...]
    table: dict[tuple[int, ...], float]
    marginal: float
    alpha: float = 1.0


def conditional_probability(theta: ConditionalTable, parent_bits) -> float:
    """Smoothed estimate for a parent pattern; marginal fallback if unseen."""
    bits = tuple(int(b) for b in parent_bits)
    if len(bits) != len(theta.parents):
        raise GraphError(
            f"pattern length {len(bits)} does not match {len(theta.parents)} parents"
        )
    return theta.table.get(bits, theta.marginal)


@dataclass(frozen=True)
class DependencyGraph:
    catalog: FeatureCatalog
    edges: tuple[Edge, ...]
    tables: dict[Vertex, ConditionalTable]
    gamma: float = 2.0
    min_support: int = 25
    _incoming: dict[Vertex, tuple[Edge, ...]] = field(repr=False, compare=False, default_factory=dict)
    _outgoing: dict[Vertex, tuple[Edge, ...]] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        incoming: dict[Vertex, list[Edge]] = {}
        outgoing: dict[Vertex, list[Edge]] = {}
        for e in self.edges:
            if e.dst.period <= e.src.period:
                raise GraphError(f"edge {e.src} -> {e.dst} is not temporally forward")
            incoming.setdefault(e.dst, []).append(e)
            outgoing.setdefault(e.src, []).append(e)
        object.__setattr__(self, "_incoming", {k: tuple(v) for k, v in incoming.items()})
        object.__setattr__(self, "_outgoing", {k: tuple(v) for k, v in outgoing.items()})

    def vertices(self) -> tuple[Vertex, ...]:
        return tuple(Vertex(f, p) for p in Period for f in range(self.catalog.d))

    def incoming(self, v: Vertex) -> tuple[Edge, ...]:
        return self._incoming.get(v, ())

    def outgoing(self, v: Vertex) -> tuple[Edge, ...]:
        return self._outgoing.get(v, ())

    def _check_vertex(self, v: Vertex) -> None:
        if not (0 <= v.feature < self.catalog.d) or v.period not in Period:
            raise GraphError(f"unknown vertex: {v}")

    def ancestors_of(self, v: Vertex) -> set[Vertex]:
        """Transitive closure over reversed edges, excluding v itself."""
        self._check_vertex(v)
        seen: set[Vertex] = set()
        stack = [v]
        while stack:
            node = stack.pop()
            for e in self.incoming(node):
                if e.src not in seen:
                    seen.add(e.src)
                    stack.append(e.src)
        return seen

    def descendants_of(self, v: Vertex) -> set[Vertex]:
        self._check_vertex(v)
        seen: set[Vertex] = set()
        stack = [v]
        while stack:
            node = stack.pop()
            for e in self.outgoing(node):
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return seen


def ancestors_of(graph: DependencyGraph, v: Vertex) -> set[Vertex]:
    return graph.ancestors_of(v)


_PERIOD_PAIRS = (
    (Period.HISTORY, Period.PAST),
    (Period.HISTORY, Period.LAST),
    (Period.PAST, Period.LAST),
)


def estimate_graph(
    cohort: Cohort,
    gamma: float = 2.0,
    min_support: int = 25,
    alpha: float = 1.0,
) -> DependencyGraph:
    """Estimate edges and conditional tables from a cohort."""
    if cohort.n == 0:
        raise GraphError("cannot estimate a dependency graph from an empty cohort")
    catalog = cohort.catalog
    d = catalog.d
    n = cohort.n
    X = cohort.X.astype(np.float64)

    edges: list[Edge] = []
    for t_src, t_dst in _PERIOD_PAIRS:
        A = X[:, t_src, :]  # (n, d) sources
        B = X[:, t_dst, :]  # (n, d) destinations
        n1 = A.sum(axis=0)  # per source feature
        n11 = A.T @ B  # (d_src, d_dst) co-occurrence
        n_dst1 = B.sum(axis=0)
        for i in range(d):
            n_src1 = n1[i]
            n_src0 = n - n_src1
            if n_src1 < min_support or n_src0 < min_support:
                continue
            for j in range(d):
                a = n11[i, j]
                b = n_dst1[j] - a
                p1 = a / n_src1
                p0 = b / n_src0
                if p0 == 0.0:
                    continue  # infinite RR is unusable downstream; skip
                rr = p1 / p0
                if rr > gamma:
                    edges.append(
                        Edge(
                            src=Vertex(i, t_src),
                            dst=Vertex(j, t_dst),
                            relative_risk=rr,
                            counts=EdgeCounts(int(n_src1), int(a), int(n_src0), int(b)),
                        )
                    )

    estimated_pairs = {(e.src, e.dst) for e in edges}
    for pathway in catalog.pathways:
        i = catalog.index_of(pathway.intervention)
        j = catalog.index_of(pathway.target)
        for t_src, t_dst in _PERIOD_PAIRS:
            src, dst = Vertex(i, t_src), Vertex(j, t_dst)
            if (src, dst) in estimated_pairs:
                continue
            a_col = cohort.X[:, t_src, i].astype(bool)
            b_col = cohort.X[:, t_dst, j].astype(bool)
            n_src1 = int(a_col.sum())
            n_src0 = n - n_src1
            a = int((a_col & b_col).sum())
            b = int(b_col.sum()) - a
            counts = EdgeCounts(n_src1, a, n_src0, b)
            rr = counts.relative_risk() if n_src1 and n_src0 else float("nan")
            edges.append(Edge(src=src, dst=dst, relative_risk=rr, counts=counts, source="pathway"))

    edges.sort(key=lambda e: (e.src.period, e.src.feature, e.dst.period, e.dst.feature))
    graph = DependencyGraph(
        catalog=catalog, edges=tuple(edges), tables={}, gamma=gamma, min_support=min_support
    )
    tables = _fit_tables(cohort, graph, alpha)
    return DependencyGraph(
        catalog=catalog,
        edges=tuple(edges),
        tables=tables,
        gamma=gamma,
        min_support=min_support,
    )


def _fit_tables(cohort: Cohort, graph: DependencyGraph, alpha: float) -> dict[Vertex, ConditionalTable]:
    n = cohort.n
    tables: dict[Vertex, ConditionalTable] = {}
    for period in (Period.PAST, Period.LAST):
        for f in range(cohort.catalog.d):
            target = Vertex(f, period)
            incoming = sorted(
                graph.incoming(target),
                key=lambda e: (-(e.relative_risk if np.isfinite(e.relative_risk) else 0.0),
                               e.src.period, e.src.feature),
            )
            parents = [e.src for e in incoming[:MAX_ESTIMATED_PARENTS]]
            own_prev = Vertex(f, Period(period - 1))
            if own_prev not in parents:
                parents.append(own_prev)
            parents = tuple(parents)

            target_col = cohort.X[:, period, f]
            marginal = (float(target_col.sum()) + alpha) / (n + 2 * alpha)
            parent_cols = np.stack(
                [cohort.X[:, p.period, p.feature] for p in parents], axis=1
            )
            # Group rows by parent pattern.
            weights = 1 << np.arange(len(parents))[::-1]
            keys = parent_cols.astype(np.int64) @ weights
            table: dict[tuple[int, ...], float] = {}
            for key in np.unique(keys):
                mask = keys == key
                stratum = int(mask.sum())
                positives = int(target_col[mask].sum())
                bits = tuple(int(b) for b in np.binary_repr(int(key), width=len(parents)))
                table[bits] = (positives + alpha) / (stratum + 2 * alpha)
            tables[target] = ConditionalTable(
                target=target, parents=parents, table=table, marginal=marginal, alpha=alpha
            )
    return tables


# --------------------------------------------------------------------------
# JSON export / import
# --------------------------------------------------------------------------

def _vertex_to_json(v: Vertex, catalog: FeatureCatalog) -> dict:
    return {"code": catalog.features[v.feature].code, "period": Period(v.period).suffix}


def _vertex_from_json(obj: dict, catalog: FeatureCatalog) -> Vertex:
    return Vertex(catalog.index_of(obj["code"]), Period.from_suffix(obj["period"]))


def graph_to_json(graph: DependencyGraph) -> dict:
    catalog = graph.catalog
    return {
        "gamma": graph.gamma,
        "min_support": graph.min_support,
        "vertices": [_vertex_to_json(v, catalog) for v in graph.vertices()],
        "edges": [
            {
                "src": _vertex_to_json(e.src, catalog),
                "dst": _vertex_to_json(e.dst, catalog),
                "relative_risk": e.relative_risk,
                "counts": {
                    "n_src1": e.counts.n_src1,
                    "n_src1_dst1": e.counts.n_src1_dst1,
                    "n_src0": e.counts.n_src0,
                    "n_src0_dst1": e.counts.n_src0_dst1,
                },
                "source": e.source,
            }
            for e in graph.edges
        ],
        "tables": [
            {
                "target": _vertex_to_json(t.target, catalog),
                "parents": [_vertex_to_json(p, catalog) for p in t.parents],
                "marginal": t.marginal,
                "alpha": t.alpha,
                "cells": {"".join(map(str, bits)): p for bits, p in sorted(t.table.items())},
            }
            for _, t in sorted(graph.tables.items())
        ],
    }


def graph_from_json(obj: dict | str, catalog: FeatureCatalog) -> DependencyGraph:
    if isinstance(obj, str):
        obj = json.loads(obj)
    edges = tuple(
        Edge(
            src=_vertex_from_json(e["src"], catalog),
            dst=_vertex_from_json(e["dst"], catalog),
            relative_risk=e["relative_risk"],
            counts=EdgeCounts(**e["counts"]),
            source=e.get("source", "estimated"),
        )
        for e in obj["edges"]
    )
    tables: dict[Vertex, ConditionalTable] = {}
    for t in obj.get("tables", []):
        target = _vertex_from_json(t["target"], catalog)
        parents = tuple(_vertex_from_json(p, catalog) for p in t["parents"])
        cells = {tuple(int(c) for c in key): p for key, p in t["cells"].items()}
        tables[target] = ConditionalTable(
            target=target, parents=parents, table=cells,
            marginal=t["marginal"], alpha=t.get("alpha", 1.0),
        )
    return DependencyGraph(
        catalog=catalog,
        edges=edges,
        tables=tables,
        gamma=obj.get("gamma", 2.0),
        min_support=obj.get("min_support", 25),
    )
