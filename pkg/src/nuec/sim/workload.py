"""Seeded workload generation.

Uniformly random operations assigned to uniformly random live replicas.
Removes (top-k with removals only) target a uniformly chosen previously
added id; a remove drawn before any add degenerates to an add.  The draw
order per operation is fixed (replica, remove branch, arguments) so streams
are reproducible per seed.
"""

from __future__ import annotations

import random
from typing import Sequence

from .config import SimConfig

__all__ = ["WorkloadGen"]


class WorkloadGen:
    def __init__(self, cfg: SimConfig) -> None:
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self._added: list = []
        self._added_ids: set = set()

    def next_op(self, live: Sequence[int]) -> tuple[int, tuple]:
        cfg = self.cfg
        rng = self.rng
        rid = live[rng.randrange(len(live))]
        if cfg.data_type == "histogram":
            return rid, ("add", rng.randint(1, cfg.n_bins))
        if cfg.data_type == "topk-rmv" and cfg.remove_ratio > 0:
            if rng.random() < cfg.remove_ratio and self._added:
                return rid, ("rmv", self._added[rng.randrange(len(self._added))])
        id = rng.randint(1, cfg.n_ids)
        # sums accumulate small awards; scores are one-shot and range wide
        bound = cfg.max_amount if cfg.data_type == "top-sum" else cfg.max_score
        value = rng.randint(1, bound)
        if cfg.data_type == "topk-rmv" and id not in self._added_ids:
            self._added_ids.add(id)
            self._added.append(id)
        return rid, ("add", id, value)
