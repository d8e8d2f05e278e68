"""Reference evaluators.

Each function folds a bag of effect payloads, in any order, into the query
result a single sequential replica would produce.  They are deliberately
naive (no caching, no logs) and share no code with the replicated
implementations; the simulator and the test suite compare replica query
results against these.
"""

from __future__ import annotations

import heapq
from typing import Any, Iterable

from . import histogram, top_sum, topk_plain, topk_rmv

__all__ = ["topk_rmv_result", "top_sum_result", "topk_result", "histogram_result", "result_for"]


def topk_rmv_result(payloads: Iterable[Any], k: int) -> frozenset:
    adds = []
    covers: dict[Any, dict[int, int]] = {}
    for p in payloads:
        if type(p) is topk_rmv.Rmv:
            cover = covers.setdefault(p.id, {})
            for site, val in p.clock:
                if val > cover.get(site, 0):
                    cover[site] = val
        else:
            adds.append(p)
    best: dict[Any, tuple[int, Any]] = {}
    for p in adds:
        cover = covers.get(p.id)
        if cover is not None and p.ts.val <= cover.get(p.ts.site, 0):
            continue
        key = (-p.score, p.ts)
        cur = best.get(p.id)
        if cur is None or key < cur:
            best[p.id] = key
    entries = [(-negscore, id, ts) for id, (negscore, ts) in best.items()]
    top = heapq.nsmallest(k, entries, key=lambda e: (-e[0], e[1], e[2]))
    return frozenset((id, score) for score, id, _ in top)


def top_sum_result(payloads: Iterable[Any], k: int) -> dict:
    sums: dict[Any, int] = {}
    for p in payloads:
        sums[p.id] = sums.get(p.id, 0) + p.amount
    top = heapq.nsmallest(k, sums.items(), key=lambda e: (-e[1], e[0]))
    return dict(top)


def topk_result(payloads: Iterable[Any], k: int) -> frozenset:
    best: dict[Any, int] = {}
    for p in payloads:
        if p.score > best.get(p.id, p.score - 1):
            best[p.id] = p.score
    top = heapq.nsmallest(k, best.items(), key=lambda e: (-e[1], -e[0]))
    return frozenset(top)


def histogram_result(payloads: Iterable[Any]) -> dict:
    bins: dict[Any, int] = {}
    for p in payloads:
        for b, count in p.bins:
            bins[b] = bins.get(b, 0) + count
    return bins


def result_for(data_type: str, payloads: Iterable[Any], k: int) -> Any:
    if data_type == "topk-rmv":
        return topk_rmv_result(payloads, k)
    if data_type == "top-sum":
        return top_sum_result(payloads, k)
    if data_type == "topk":
        return topk_result(payloads, k)
    if data_type == "histogram":
        return histogram_result(payloads)
    raise ValueError(f"unknown data type {data_type!r}")
