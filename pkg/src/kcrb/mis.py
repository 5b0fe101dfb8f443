"""Exact maximum independent set on small graphs encoded as int bitsets.

``adj[v]`` is the neighbourhood bitmask of vertex ``v`` (no self loops).
The search branches on the lowest-numbered candidate, include-branch first,
and only records strictly larger sets, so the first maximum found is the
lexicographically smallest one (as a sorted vertex tuple).  Greedy clique
covers give the upper bound used for pruning.
"""

from __future__ import annotations

import sys
from typing import Sequence


def _low(x: int) -> int:
    return (x & -x).bit_length() - 1


def clique_cover_bound(adj: Sequence[int], cand: int, stop: int) -> int:
    """Number of cliques in a greedy cover of ``cand``; stops counting past ``stop``."""
    count = 0
    rest = cand
    while rest:
        count += 1
        if count > stop:
            return count
        v = _low(rest)
        rest &= ~(1 << v)
        common = rest & adj[v]
        while common:
            w = _low(common)
            rest &= ~(1 << w)
            common &= adj[w] & ~(1 << w)
    return count


class _Search:
    def __init__(self, adj: Sequence[int], target: int | None):
        self.adj = adj
        self.best = 0
        self.best_size = -1
        self.target = target
        self.nodes = 0

    def done(self) -> bool:
        return self.target is not None and self.best_size >= self.target

    def expand(self, cur: int, size: int, cand: int) -> None:
        self.nodes += 1
        adj = self.adj
        # Forced inclusions: isolated candidates never hurt and are lex-minimal
        # only if they come first, so peel them off the low end only.
        while cand:
            v = _low(cand)
            if adj[v] & cand:
                break
            cur |= 1 << v
            size += 1
            cand &= ~(1 << v)
        if not cand:
            if size > self.best_size:
                self.best, self.best_size = cur, size
            return
        slack = self.best_size - size
        if cand.bit_count() <= slack:
            return
        if clique_cover_bound(adj, cand, slack) <= slack:
            return
        v = _low(cand)
        bit = 1 << v
        self.expand(cur | bit, size + 1, cand & ~adj[v] & ~bit)
        if self.done():
            return
        self.expand(cur, size, cand & ~bit)


def max_independent_set(adj: Sequence[int], cand: int | None = None,
                        target: int | None = None) -> int:
    """Return the lexicographically smallest maximum independent set of ``cand``.

    With ``target`` the search stops as soon as a set of that size is found;
    the result is then an independent set of size ``>= target`` if one exists.
    """
    if cand is None:
        cand = (1 << len(adj)) - 1
    if not cand:
        return 0
    limit = sys.getrecursionlimit()
    need = cand.bit_count() * 2 + 100
    if need > limit:
        sys.setrecursionlimit(need)
    s = _Search(adj, target)
    s.expand(0, 0, cand)
    return s.best


def independence_number(adj: Sequence[int], cand: int | None = None) -> int:
    return max_independent_set(adj, cand).bit_count()


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        v = _low(mask)
        out.append(v)
        mask &= mask - 1
    return out

