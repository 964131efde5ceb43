"""Undirected gene-network inference from pairwise dependence scores."""

from __future__ import annotations

import csv
import itertools
from pathlib import Path
from typing import Optional

import numpy as np

from ._parallel import pmap
from .dataset import _parse_matrix
from .errors import CsvParseError
from .inference import auc
from .kernel import KernelSpec, gram
from .measures import hsic_from_grams, mutual_information

__all__ = [
    "GRN_KINDS",
    "normalize_grn_kind",
    "score_pairs",
    "edge_labels",
    "evaluate_network",
    "ranked_edges",
    "load_expressions",
    "load_truth",
    "gen_sine_network",
]

GRN_KINDS = ("NMI-max", "HSIC", "pearson-abs")
_ALIASES = {"nmi": "NMI-max", "nmi-max": "NMI-max", "hsic": "HSIC",
            "pearson": "pearson-abs", "pearson-abs": "pearson-abs"}


def normalize_grn_kind(kind: str) -> str:
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown pair score {kind!r}; expected one of {GRN_KINDS}") from None


def _pearson_abs(x, y) -> float:
    x, y = x - x.mean(), y - y.mean()
    den = np.sqrt(np.dot(x, x) * np.dot(y, y))
    return 0.0 if den == 0 else float(min(abs(np.dot(x, y)) / den, 1.0))


def score_pairs(expressions, measure_kind: str = "NMI-max", alpha: float = 2.0,
                spec: KernelSpec = KernelSpec(), threads: Optional[int] = None) -> np.ndarray:
    """Symmetric g x g matrix of pairwise dependence with a zero diagonal.

    Constant genes score 0 against every other gene.
    """
    kind = normalize_grn_kind(measure_kind)
    x = np.asarray(expressions, dtype=float)
    if x.ndim != 2:
        raise ValueError("expressions must be an N x g matrix")
    n, g = x.shape
    if g < 2 or n < 4:
        raise ValueError(f"need at least 2 genes and 4 samples, got {g} and {n}")
    constant = np.ptp(x, axis=0) == 0
    grams = None
    if kind != "pearson-abs":
        grams = pmap(lambda j: None if constant[j] else gram(x[:, j], spec), range(g), threads)

    def pair(ij):
        i, j = ij
        if constant[i] or constant[j]:
            return 0.0
        if kind == "pearson-abs":
            return _pearson_abs(x[:, i], x[:, j])
        if kind == "HSIC":
            return hsic_from_grams(grams[i], grams[j])
        return mutual_information(grams[i], grams[j], alpha, "max").value

    pairs = list(itertools.combinations(range(g), 2))
    out = np.zeros((g, g))
    for (i, j), v in zip(pairs, pmap(pair, pairs, threads)):
        out[i, j] = out[j, i] = v
    return out


def edge_labels(g: int, truth_edges) -> np.ndarray:
    """0/1 label per unordered pair, in ``itertools.combinations`` order."""
    truth = {frozenset(e) for e in truth_edges}
    return np.array([int(frozenset(p) in truth) for p in itertools.combinations(range(g), 2)])


def evaluate_network(scores, truth_edges) -> float:
    """AUC of the upper-triangle scores against undirected true edges."""
    scores = np.asarray(scores, dtype=float)
    g = scores.shape[0]
    labels = edge_labels(g, truth_edges)
    if labels.min() == labels.max():
        raise ValueError("truth must contain at least one edge and one non-edge")
    iu = np.triu_indices(g, k=1)
    return auc(scores[iu], labels)


def ranked_edges(scores, names=None) -> list:
    """Unordered pairs sorted by score, highest first (index order on ties)."""
    scores = np.asarray(scores, dtype=float)
    g = scores.shape[0]
    names = list(names) if names is not None else [str(i) for i in range(g)]
    pairs = list(itertools.combinations(range(g), 2))
    order = sorted(range(len(pairs)), key=lambda k: (-scores[pairs[k]], k))
    return [{"gene_i": names[pairs[k][0]], "gene_j": names[pairs[k][1]],
             "score": float(scores[pairs[k]])} for k in order]


def load_expressions(path):
    """Expression CSV with a gene-name header; returns ``(matrix, names)``.

    Tab-separated files (the DREAM4 distribution format) are accepted too.
    """
    text = Path(path).read_text(encoding="utf-8")
    delim = "\t" if "\t" in text.splitlines()[0] else ","
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(text.splitlines(), delimiter=delim))
            if any(f.strip() for f in r)]
    if len(rows) < 2:
        raise CsvParseError(f"{path}: need a header and at least one data row", None)
    names = [f.strip().strip('"') for f in rows[0][1]]
    return _parse_matrix(rows[1:], len(names)), names


def load_truth(path, names=None) -> set:
    """Gold-standard rows ``gene_i,gene_j,label``; returns the label-1 pairs.

    Gene fields are matched against ``names`` when given, else read as
    integer column indices. Comma or tab delimited.
    """
    index = {n: i for i, n in enumerate(names)} if names is not None else None
    edges = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = [f.strip().strip('"') for f in line.replace("\t", ",").split(",")]
        if len(fields) != 3:
            raise CsvParseError(f"{path}:{lineno}: expected gene_i,gene_j,label", lineno)
        a, b, lab = fields
        if lab not in ("0", "1"):
            if lineno == 1:
                continue  # header row
            raise CsvParseError(f"{path}:{lineno}: label must be 0 or 1", lineno)
        try:
            i, j = (index[a], index[b]) if index is not None else (int(a), int(b))
        except (KeyError, ValueError):
            raise CsvParseError(f"{path}:{lineno}: unknown gene {a!r} or {b!r}", lineno) from None
        if lab == "1" and i != j:
            edges.add(frozenset((i, j)))
    return edges


def gen_sine_network(n: int = 136, noise: float = 0.1, seed: int = 0):
    """Three genes where gene 1 = sin(gene 0) + noise and gene 2 is independent.

    Returns ``(expressions, truth_edges)``.
    """
    rng = np.random.default_rng(np.uint64(seed))
    g0 = rng.uniform(-np.pi, np.pi, n)
    g1 = np.sin(g0) + noise * rng.standard_normal(n)
    g2 = rng.uniform(-np.pi, np.pi, n)
    return np.column_stack([g0, g1, g2]), {frozenset((0, 1))}
