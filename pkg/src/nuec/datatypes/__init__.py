"""Replicated data types and their reference evaluators."""

from __future__ import annotations

from ..contract import NuTypeContract
from .histogram import HistogramContract
from .top_sum import TopSumContract
from .topk_plain import TopKPlainContract
from .topk_rmv import TopKRmvContract

DATA_TYPES = ("topk-rmv", "top-sum", "topk", "histogram")


def make_contract(data_type: str, k: int, n_replicas: int) -> NuTypeContract:
    if data_type == "topk-rmv":
        return TopKRmvContract(k)
    if data_type == "top-sum":
        return TopSumContract(k, n_replicas)
    if data_type == "topk":
        return TopKPlainContract(k)
    if data_type == "histogram":
        return HistogramContract()
    raise ValueError(f"unknown data type {data_type!r}")


__all__ = ["DATA_TYPES", "make_contract", "NuTypeContract"]
