"""
Minimum Cycle Basis
Horton candidate cycles filtered by GF(2) independence
"""

import logging
from typing import Dict, Hashable, List, Tuple

import networkx as nx

from errors import InvalidInputError

logger = logging.getLogger(__name__)

Edge = Tuple[Hashable, Hashable]


def _edge_key(u, v, order: Dict[Hashable, int]) -> Edge:
    return (u, v) if order[u] <= order[v] else (v, u)


def minimum_cycle_basis(graph: nx.Graph) -> List[List[Edge]]:
    """
    E - V + 1 independent cycles of minimum total length

    Candidates are Horton cycles: for every vertex v and edge (x, y), the
    shortest path v..x, the edge, and the shortest path y..v, kept when the two
    paths meet only at v. Candidates are sorted by length then by their sorted
    edge indices, and accepted greedily while independent over GF(2).

    Args:
        graph: connected undirected graph (node labels must be sortable)

    Returns:
        cycles as lists of edges (u, v) in node order, each sorted by edge index
    """
    if graph.number_of_nodes() == 0:
        raise InvalidInputError("cycle basis of an empty graph is undefined")
    if not nx.is_connected(graph):
        raise InvalidInputError("cycle basis requires a connected graph")

    nodes = sorted(graph.nodes())
    order = {v: i for i, v in enumerate(nodes)}
    edges = sorted((_edge_key(u, v, order) for u, v in graph.edges()), key=lambda e: (order[e[0]], order[e[1]]))
    edge_index = {e: i for i, e in enumerate(edges)}
    target = len(edges) - len(nodes) + 1
    if target == 0:
        return []

    # rebuild with sorted adjacency so BFS trees do not depend on insertion order
    ordered = nx.Graph()
    ordered.add_nodes_from(nodes)
    ordered.add_edges_from(edges)

    candidates = set()
    for v in nodes:
        paths = nx.single_source_shortest_path(ordered, v)
        for x, y in edges:
            px, py = paths[x], paths[y]
            if set(px) & set(py) != {v}:
                continue
            cycle_nodes = px + py[::-1][:-1]
            if len(cycle_nodes) < 3:
                continue
            mask = 0
            for a, b in zip(cycle_nodes, cycle_nodes[1:] + cycle_nodes[:1]):
                mask ^= 1 << edge_index[_edge_key(a, b, order)]
            candidates.add(mask)

    def members(mask: int) -> Tuple[int, ...]:
        return tuple(i for i in range(len(edges)) if mask >> i & 1)

    ranked = sorted(candidates, key=lambda m: (bin(m).count("1"), members(m)))
    pivots: Dict[int, int] = {}
    basis: List[int] = []
    for mask in ranked:
        reduced = mask
        while reduced:
            top = reduced.bit_length() - 1
            if top not in pivots:
                pivots[top] = reduced
                basis.append(mask)
                break
            reduced ^= pivots[top]
        if len(basis) == target:
            break
    if len(basis) != target:
        raise InvalidInputError(f"found {len(basis)} independent cycles, expected {target}")
    logger.debug(f"Minimum cycle basis: {target} cycles, total length {sum(bin(m).count('1') for m in basis)}")
    return [[edges[i] for i in members(mask)] for mask in basis]


def symmetric_sum(cycles: List[List[Edge]]) -> List[Edge]:
    """Edges used an odd number of times across the cycles"""
    count: Dict[Edge, int] = {}
    for cycle in cycles:
        for e in cycle:
            count[e] = count.get(e, 0) + 1
    return sorted((e for e, k in count.items() if k % 2), key=lambda e: str(e))
