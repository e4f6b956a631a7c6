"""Slow, independent reference implementations used to cross-check the fast paths.

Nothing here shares code with the routines it checks: the search oracle
generates its own moves from the raw boolean array, the matching oracle
enumerates assignments, and the band oracle recomputes perplexity with a
plain sum.
"""

from __future__ import annotations

import heapq
import math
from typing import Iterable, Sequence

import numpy as np

from ._validation import normalize_label
from .scene import Box2D, Cell, OccupancyGrid

_R2 = math.sqrt(2.0)


def ucs_counts(grid: OccupancyGrid, source: Cell) -> dict[Cell, tuple[int, int]]:
    """Uniform-cost search from ``source`` to every reachable cell.

    Returns ``(axial, diagonal)`` step counts of a cheapest path. Diagonal
    steps need both side cells free.
    """
    nav = np.asarray(grid.navigable)
    h, w = nav.shape

    def free(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(nav[r, c])

    if not free(*source):
        return {}
    best: dict[Cell, tuple[int, int]] = {source: (0, 0)}
    heap = [(0.0, 0, 0, source)]
    done: set[Cell] = set()
    while heap:
        _, a, d, (r, c) = heapq.heappop(heap)
        if (r, c) in done:
            continue
        done.add((r, c))
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0 or not free(r + dr, c + dc):
                    continue
                diag = dr != 0 and dc != 0
                if diag and not (free(r + dr, c) and free(r, c + dc)):
                    continue
                na, nd = (a, d + 1) if diag else (a + 1, d)
                nxt = (r + dr, c + dc)
                old = best.get(nxt)
                if old is None or na + nd * _R2 < old[0] + old[1] * _R2 - 1e-9:
                    best[nxt] = (na, nd)
                    heapq.heappush(heap, (na + nd * _R2, na, nd, nxt))
    return best


def exhaustive_matching_total(
    pred: Sequence[tuple[str, Box2D]],
    gt: Sequence[tuple[str, Box2D]],
) -> float:
    """Maximum total IoU over all one-to-one assignments.

    Only pairs with equal normalized labels and positive IoU may be matched.
    Enumerates, for every gt item, each unused candidate prediction or no match.
    """
    cands = [
        [(pi, g[1].iou(p[1])) for pi, p in enumerate(pred) if normalize_label(g[0]) == normalize_label(p[0])]
        for g in gt
    ]
    cands = [[(pi, v) for pi, v in row if v > 0] for row in cands]
    best = 0.0
    used: list[int] = []
    picked: list[float] = []

    def walk(gi: int) -> None:
        nonlocal best
        if gi == len(gt):
            best = max(best, math.fsum(picked))
            return
        walk(gi + 1)  # leave this gt item unmatched
        for pi, v in cands[gi]:
            if pi in used:
                continue
            used.append(pi)
            picked.append(v)
            walk(gi + 1)
            used.pop()
            picked.pop()

    walk(0)
    return best


def brute_perplexity(logprobs: Iterable[float]) -> float:
    lp = list(logprobs)
    total = 0.0
    for v in lp:
        total += v
    return math.exp(-total / len(lp))


def brute_band(items: Sequence[tuple[str, float]], lo: float, hi: float) -> list[str]:
    """Ids whose value lies in the closed interval, sorted."""
    out = []
    for sid, v in items:
        if v >= lo and v <= hi:
            out.append(sid)
    out.sort()
    return out


def reference_bin(theta_deg: float) -> int:
    """Compass bin index by explicit interval lookup (0 = N, clockwise).

    Bin ``i`` owns ``[45 i - 22.5, 45 i + 22.5)``; an exact edge therefore
    belongs to the bin with the larger azimuth.
    """
    t = round(theta_deg % 360.0, 9) % 360.0
    for i in range(8):
        lo = 45.0 * i - 22.5
        hi = 45.0 * i + 22.5
        if lo <= t < hi or lo <= t - 360.0 < hi:
            return i
    raise AssertionError(f"no bin for {theta_deg}")
