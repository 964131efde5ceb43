"""Subspace outlier detection: dependence-guided subspace search plus LOF."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from ._parallel import pmap
from .dataset import SampleTable
from .inference import auc
from .kernel import KernelSpec, gram
from .measures import measure_from_grams, normalize_kind

__all__ = [
    "SubspaceCandidate",
    "OutlierResult",
    "apriori_search",
    "lof",
    "standardize",
    "full_space_lof",
    "detect",
    "SEARCH_SUBSAMPLE",
    "LOF_DIST_FLOOR",
]

SEARCH_SUBSAMPLE = 500
LOF_DIST_FLOOR = 1e-12


@dataclass
class SubspaceCandidate:
    columns: tuple
    score: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"columns": list(self.columns), "score": self.score, "degenerate": self.degenerate}


@dataclass
class OutlierResult:
    scores: list
    top_subspaces: list
    auc: Optional[float] = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scores": list(self.scores),
            "top_subspaces": [c.to_dict() for c in self.top_subspaces],
            "auc": self.auc,
            "config": dict(self.config),
        }


def _rank_key(c: SubspaceCandidate):
    # best score first, lexicographic column order on ties
    return (-c.score, c.columns)


def apriori_search(table: SampleTable, measure_kind: str = "NTC", alpha: float = 2.0,
                   spec: KernelSpec = KernelSpec(), beam_width: int = 50, max_dim: int = 5,
                   top_k: int = 10, seed: int = 0, threads: Optional[int] = None) -> list:
    """Levelwise beam search for the most dependent column subsets.

    Level 2 scores every column pair. Each following level extends every
    kept subspace by one new column and keeps the ``beam_width`` best. The
    search ends at ``max_dim`` columns or when no extension scores above
    the parent it came from. Dependence is estimated on at most 500 rows.
    """
    kind = normalize_kind(measure_kind)
    if kind not in ("NTC", "NDTC"):
        raise ValueError(f"subspace search uses NTC or NDTC, got {kind}")
    d = table.d
    if d < 2:
        raise ValueError("subspace search needs at least two columns")
    if top_k < 1 or beam_width < top_k:
        raise ValueError("need top_k >= 1 and beam_width >= top_k")
    max_dim = min(int(max_dim), d)
    if max_dim < 2:
        raise ValueError("max_dim must be at least 2")

    values = np.asarray(table.values)
    if table.n > SEARCH_SUBSAMPLE:
        rng = np.random.default_rng(np.uint64(seed))
        values = values[np.sort(rng.choice(table.n, size=SEARCH_SUBSAMPLE, replace=False))]
    grams = pmap(lambda c: gram(values[:, c], spec), range(d), threads)

    def score(cols):
        rep = measure_from_grams([grams[c] for c in cols], kind, alpha)
        return SubspaceCandidate(tuple(cols), rep.value, rep.degenerate)

    level = [(i, j) for i in range(d) for j in range(i + 1, d)]
    scored = sorted(pmap(score, level, threads), key=_rank_key)
    seen = {c.columns: c for c in scored}
    beam = scored[:beam_width]
    for _ in range(3, max_dim + 1):
        parents = {}
        for cand in beam:
            for c in range(d):
                if c in cand.columns:
                    continue
                child = tuple(sorted(cand.columns + (c,)))
                if child not in seen:
                    parents[child] = max(parents.get(child, -np.inf), cand.score)
        if not parents:
            break
        children = sorted(parents)
        results = pmap(score, children, threads)
        for r in results:
            seen[r.columns] = r
        if not any(r.score > parents[r.columns] for r in results):
            break
        beam = sorted(results, key=_rank_key)[:beam_width]
    return sorted(seen.values(), key=_rank_key)[:top_k]


def lof(points, k: int) -> np.ndarray:
    """Local Outlier Factor with exactly ``k`` neighbours per point.

    Neighbours are the ``k`` nearest other points, ties broken by row index.
    Reachability distances are floored at 1e-12 so duplicated points get a
    finite density.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < N, got k={k}, N={n}")
    dist = cdist(x, x)
    masked = dist.copy()
    np.fill_diagonal(masked, np.inf)
    nbrs = np.argsort(masked, axis=1, kind="stable")[:, :k]
    kdist = dist[np.arange(n), nbrs[:, -1]]
    reach = np.maximum(kdist[nbrs], dist[np.arange(n)[:, None], nbrs])
    lrd = 1.0 / np.maximum(reach.mean(axis=1), LOF_DIST_FLOOR)
    return lrd[nbrs].mean(axis=1) / lrd


def standardize(x) -> np.ndarray:
    """Column z-scores; constant columns are only centred."""
    x = np.asarray(x, dtype=float)
    sd = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def full_space_lof(table: SampleTable, k: int = 20) -> np.ndarray:
    """LOF on all standardized columns (the no-search baseline)."""
    return lof(standardize(table.values), k)


def detect(table: SampleTable, labels=None, measure_kind: str = "NTC", alpha: float = 2.0,
           spec: KernelSpec = KernelSpec(), beam_width: int = 50, max_dim: int = 5,
           top_k: int = 10, lof_k: int = 20, seed: int = 0,
           threads: Optional[int] = None) -> OutlierResult:
    """Search dependent subspaces, score each with LOF, fuse by the maximum."""
    top = apriori_search(table, measure_kind, alpha, spec, beam_width, max_dim, top_k, seed, threads)
    values = np.asarray(table.values)
    per_space = pmap(lambda c: lof(standardize(values[:, list(c.columns)]), lof_k), top, threads)
    fused = np.max(np.vstack(per_space), axis=0)
    result_auc = None
    if labels is not None:
        labels = np.asarray(labels).astype(int)
        if labels.shape != (table.n,):
            raise ValueError("labels must have one entry per row")
        result_auc = auc(fused, labels)
    config = {"measure_kind": normalize_kind(measure_kind), "alpha": alpha, "kernel": spec.describe(),
              "beam_width": beam_width, "max_dim": max_dim, "top_k": top_k, "lof_k": lof_k,
              "seed": seed}
    return OutlierResult([float(s) for s in fused], top, result_auc, config)
