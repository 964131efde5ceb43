"""Kernel Gram matrices normalized to unit trace.

Every Gram matrix returned here is ``A_ij = K_ij / (N sqrt(K_ii K_jj))`` so
that ``tr(A) = 1`` and the diagonal is ``1/N``. Delta-kernel Grams also have
an exact categorical representation, :class:`DeltaGram`, whose spectrum is
the vector of category frequencies; it lets discrete data skip the dense
N x N matrix entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DegenerateBandwidthError

__all__ = [
    "KernelSpec",
    "DeltaGram",
    "select_bandwidth",
    "gram",
    "rbf_gram",
    "delta_gram",
    "joint_gram",
    "as_dense",
    "permute_gram",
    "group_grams",
]

_RBF_NAMES = ("rbf", "gaussian-rbf", "gaussian")
_BANDWIDTH_RULES = ("median", "silverman")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus bandwidth rule.

    ``bandwidth`` is ``"median"``, ``"silverman"`` or a positive float for a
    fixed width. It is ignored by the delta kernel.
    """

    kind: str = "rbf"
    bandwidth: Union[str, float] = "median"

    def __post_init__(self):
        kind = self.kind.lower()
        if kind in _RBF_NAMES:
            kind = "rbf"
        elif kind != "delta":
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        bw = self.bandwidth
        if isinstance(bw, str):
            if bw not in _BANDWIDTH_RULES:
                try:
                    bw = float(bw)
                except ValueError:
                    raise ValueError(f"unknown bandwidth rule {bw!r}") from None
        if not isinstance(bw, str):
            bw = float(bw)
            if not bw > 0:
                raise ValueError("fixed bandwidth must be positive")
        object.__setattr__(self, "bandwidth", bw)

    @property
    def fixed(self) -> bool:
        return not isinstance(self.bandwidth, str)

    def describe(self) -> dict:
        return {"kind": self.kind, "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class DeltaGram:
    """Delta-kernel Gram stored as integer category codes.

    The dense matrix is ``(codes[i] == codes[j]) / N``; it is block-constant,
    so its nonzero eigenvalues are exactly the category frequencies.
    """

    codes: np.ndarray

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def shape(self):
        return (self.n, self.n)

    def frequencies(self) -> np.ndarray:
        return np.bincount(self.codes) / self.n

    def dense(self) -> np.ndarray:
        return (self.codes[:, None] == self.codes[None, :]).astype(float) / self.n

    def permuted(self, perm) -> "DeltaGram":
        return DeltaGram(self.codes[perm])


def _as_2d(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("samples must be a vector or an N x d matrix")
    if x.shape[0] < 2:
        raise ValueError("at least 2 samples are required")
    return x


def select_bandwidth(samples, rule: Union[str, float] = "median") -> float:
    """Kernel width for ``samples`` under ``rule``.

    ``median`` is the median of the nonzero pairwise Euclidean distances;
    ``silverman`` is ``1.06 * s * N**(-1/(4+d))`` with ``s`` the mean
    per-dimension standard deviation.
    """
    if not isinstance(rule, str):
        sigma = float(rule)
        if not sigma > 0:
            raise ValueError("fixed bandwidth must be positive")
        return sigma
    x = _as_2d(samples)
    n, d = x.shape
    if rule == "median":
        dist = pdist(x)
        dist = dist[dist > 0]
        if dist.size == 0:
            raise DegenerateBandwidthError(
                "all samples are identical; the median heuristic is undefined, "
                "use a fixed bandwidth instead")
        return float(np.median(dist))
    if rule == "silverman":
        s = float(np.mean(x.std(axis=0, ddof=1)))
        if s == 0:
            raise DegenerateBandwidthError(
                "zero sample spread; Silverman's rule is undefined, use a fixed bandwidth")
        return 1.06 * s * n ** (-1.0 / (4 + d))
    raise ValueError(f"unknown bandwidth rule {rule!r}")


def rbf_gram(samples, sigma: float) -> np.ndarray:
    """Normalized Gaussian Gram matrix for a fixed width ``sigma``."""
    if not sigma > 0:
        raise ValueError(f"bandwidth must be positive, got {sigma}")
    x = _as_2d(samples)
    sq = squareform(pdist(x, "sqeuclidean"))
    k = np.exp(-sq / (2.0 * sigma * sigma))
    # unit diagonal, so K_ij / sqrt(K_ii K_jj) = K_ij
    return k / x.shape[0]


def _codes(samples) -> np.ndarray:
    x = _as_2d(samples)
    _, inv = np.unique(x, axis=0, return_inverse=True)
    return inv.reshape(-1).astype(np.intp)


def delta_gram(samples) -> DeltaGram:
    """Categorical form of the delta-kernel Gram (exact equality of rows)."""
    return DeltaGram(_codes(samples))


def gram(samples, spec: KernelSpec = KernelSpec()) -> np.ndarray:
    """Dense unit-trace Gram matrix of ``samples`` under ``spec``."""
    if spec.kind == "delta":
        return delta_gram(samples).dense()
    sigma = select_bandwidth(samples, spec.bandwidth)
    return rbf_gram(samples, sigma)


def as_dense(a) -> np.ndarray:
    return a.dense() if isinstance(a, DeltaGram) else np.asarray(a, dtype=float)


def joint_gram(parts: Sequence):
    """Trace-normalized Hadamard product of Gram matrices.

    If every part is a :class:`DeltaGram` the result is one too (the code of
    a row is its tuple of part codes); otherwise a dense matrix is returned.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("joint_gram needs at least one Gram matrix")
    n = parts[0].shape[0]
    for p in parts:
        if p.shape != (n, n):
            raise ValueError(f"Gram shapes differ: {p.shape} vs {(n, n)}")
    if all(isinstance(p, DeltaGram) for p in parts):
        if len(parts) == 1:
            return parts[0]
        stacked = np.column_stack([p.codes for p in parts])
        _, inv = np.unique(stacked, axis=0, return_inverse=True)
        return DeltaGram(inv.reshape(-1).astype(np.intp))
    prod = as_dense(parts[0]).copy()
    for p in parts[1:]:
        prod *= as_dense(p)
    return prod / np.trace(prod)


def permute_gram(a, perm):
    """Gram matrix of the same samples listed in the order ``perm``."""
    if isinstance(a, DeltaGram):
        return a.permuted(perm)
    return a[np.ix_(perm, perm)]


def group_grams(table, spec: KernelSpec = KernelSpec(), dense: bool = False) -> list:
    """One Gram per variable group of a :class:`SampleTable`.

    Delta-kernel groups come back as :class:`DeltaGram` unless ``dense``.
    """
    out = []
    for i in range(table.n_groups):
        x = table.group(i)
        if spec.kind == "delta" and not dense:
            out.append(delta_gram(x))
        else:
            out.append(gram(x, spec))
    return out
