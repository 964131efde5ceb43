"""Total correlation, dual total correlation, mutual information and HSIC.

All information measures work on lists of unit-trace Gram matrices (dense
arrays or :class:`~gramdep.kernel.DeltaGram`). Normalized values are clamped
into [0, 1]; the pre-clamp value is kept on the report as ``raw_value``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dataset import SampleTable
from .entropy import joint_entropy, renyi_entropy
from .kernel import KernelSpec, as_dense, gram, group_grams

log = logging.getLogger(__name__)

__all__ = [
    "KINDS",
    "MeasureReport",
    "normalize_kind",
    "total_correlation",
    "dual_total_correlation",
    "mutual_information",
    "hsic",
    "hsic_from_grams",
    "measure_from_grams",
    "measure_from_table",
    "subsampled_measure",
]

KINDS = ("TC", "NTC", "DTC", "NDTC", "MI", "NMI-max", "NMI-min", "HSIC")
_ALIASES = {
    "tc": "TC", "ntc": "NTC", "dtc": "DTC", "ndtc": "NDTC", "mi": "MI",
    "nmi": "NMI-max", "nmi-max": "NMI-max", "nmi-min": "NMI-min", "hsic": "HSIC",
}
NORMALIZED_KINDS = ("NTC", "NDTC", "NMI-max", "NMI-min")
DEGENERATE_TOL = 1e-12
CLAMP_WARN = 1e-6


def normalize_kind(kind: str) -> str:
    """Canonical measure name for a CLI-style or canonical ``kind``."""
    if kind in KINDS:
        return kind
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown measure kind {kind!r}; expected one of {KINDS}") from None


@dataclass
class MeasureReport:
    kind: str
    alpha: Optional[float]
    value: float
    degenerate: bool
    n: int
    group_dims: Optional[list] = None
    raw_value: Optional[float] = None
    elapsed_seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return asdict(self)


def _finish(kind, alpha, num, den, n, group_dims, normalized):
    if not normalized:
        return MeasureReport(kind, alpha, float(num), False, n, group_dims, float(num))
    if den < DEGENERATE_TOL:
        return MeasureReport(kind, alpha, 0.0, True, n, group_dims, 0.0)
    raw = num / den
    value = min(max(raw, 0.0), 1.0)
    if abs(value - raw) > CLAMP_WARN:
        log.warning("%s clamped from %.3g into [0, 1]", kind, raw)
    return MeasureReport(kind, alpha, float(value), False, n, group_dims, float(raw))


def _check_parts(parts, minimum=2):
    parts = list(parts)
    if len(parts) < minimum:
        raise ValueError(f"at least {minimum} variables are required, got {len(parts)}")
    n = parts[0].shape[0]
    if any(p.shape[0] != n for p in parts):
        raise ValueError("all Gram matrices must have the same size")
    return parts, n


def total_correlation(parts: Sequence, alpha: float = 2.0, normalized: bool = True,
                      group_dims=None) -> MeasureReport:
    """``sum_i S(A_i) - S(A_joint)``, optionally over ``sum_i S(A_i) - max_i S(A_i)``."""
    parts, n = _check_parts(parts)
    marg = [renyi_entropy(p, alpha) for p in parts]
    num = sum(marg) - joint_entropy(parts, alpha)
    den = sum(marg) - max(marg)
    return _finish("NTC" if normalized else "TC", alpha, num, den, n, group_dims, normalized)


def dual_total_correlation(parts: Sequence, alpha: float = 2.0, normalized: bool = True,
                           group_dims=None) -> MeasureReport:
    """``sum_i S(A_{-i}) - (L-1) S(A_joint)``, optionally over ``S(A_joint)``."""
    parts, n = _check_parts(parts)
    L = len(parts)
    joint = joint_entropy(parts, alpha)
    loo = [joint_entropy(parts[:i] + parts[i + 1:], alpha) for i in range(L)]
    num = sum(loo) - (L - 1) * joint
    return _finish("NDTC" if normalized else "DTC", alpha, num, joint, n, group_dims, normalized)


def mutual_information(a, b, alpha: float = 2.0, normalization: str = "max",
                       group_dims=None) -> MeasureReport:
    """``S(A) + S(B) - S(A, B)``; ``normalization`` is none, max or min."""
    (a, b), n = _check_parts([a, b])
    sa, sb = renyi_entropy(a, alpha), renyi_entropy(b, alpha)
    num = sa + sb - joint_entropy([a, b], alpha)
    if normalization in (None, "none"):
        return _finish("MI", alpha, num, 0.0, n, group_dims, False)
    if normalization == "max":
        return _finish("NMI-max", alpha, num, max(sa, sb), n, group_dims, True)
    if normalization == "min":
        return _finish("NMI-min", alpha, num, min(sa, sb), n, group_dims, True)
    raise ValueError(f"unknown normalization {normalization!r}")


def _centered(k: np.ndarray) -> np.ndarray:
    k = k - k.mean(axis=0, keepdims=True)
    return k - k.mean(axis=1, keepdims=True)


def hsic_from_grams(a, b) -> float:
    """Biased HSIC from unit-trace Grams of kernels with unit diagonal.

    Such Grams are ``K / N``, so ``tr(K_X H K_Y H) = N^2 tr(A H B H)``.
    """
    a, b = as_dense(a), as_dense(b)
    n = a.shape[0]
    return float(n * n * np.vdot(_centered(a), b)) / (n - 1) ** 2


def hsic(x, y, spec: KernelSpec = KernelSpec()) -> MeasureReport:
    """Biased HSIC ``tr(K_X H K_Y H) / (N-1)^2`` with unnormalized kernels."""
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    if x.shape[0] != y.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    if x.shape[0] < 4:
        raise ValueError("HSIC needs at least 4 samples")
    value = hsic_from_grams(gram(x, spec), gram(y, spec))
    return MeasureReport("HSIC", None, value, False, x.shape[0],
                         [x.shape[1], y.shape[1]], value)


def measure_from_grams(parts: Sequence, kind: str, alpha: float = 2.0,
                       group_dims=None) -> MeasureReport:
    """Dispatch ``kind`` over a list of per-variable Gram matrices."""
    kind = normalize_kind(kind)
    parts = list(parts)
    if kind in ("TC", "NTC"):
        return total_correlation(parts, alpha, kind == "NTC", group_dims)
    if kind in ("DTC", "NDTC"):
        return dual_total_correlation(parts, alpha, kind == "NDTC", group_dims)
    if len(parts) != 2:
        raise ValueError(f"{kind} is defined for exactly two variables, got {len(parts)}")
    if kind == "HSIC":
        value = hsic_from_grams(*parts)
        return MeasureReport("HSIC", None, value, False, parts[0].shape[0], group_dims, value)
    norm = {"MI": "none", "NMI-max": "max", "NMI-min": "min"}[kind]
    return mutual_information(parts[0], parts[1], alpha, norm, group_dims)


def measure_from_table(table: SampleTable, kind: str, alpha: float = 2.0,
                       spec: KernelSpec = KernelSpec()) -> MeasureReport:
    """Build one Gram per group of ``table`` and evaluate ``kind`` on them."""
    kind = normalize_kind(kind)
    if table.n_groups < 2:
        raise ValueError(f"{kind} needs at least two variable groups, got {table.n_groups}")
    start = time.perf_counter()
    report = measure_from_grams(group_grams(table, spec), kind, alpha, table.group_dims)
    report.elapsed_seconds = time.perf_counter() - start
    return report


def subsampled_measure(table: SampleTable, kind: str, alpha: float = 2.0,
                       spec: KernelSpec = KernelSpec(), subsample_size: int = 100,
                       num_groups: int = 10, seed: int = 0) -> MeasureReport:
    """Average of ``kind`` over ``num_groups`` row subsamples of size K.

    Each subsample is drawn without replacement and shared by all variable
    groups; bandwidths are reselected on every subsample.
    """
    kind = normalize_kind(kind)
    k, m = int(subsample_size), int(num_groups)
    if k > table.n:
        raise ValueError(f"subsample size {k} exceeds sample count {table.n}")
    if k < 4 or m < 1:
        raise ValueError("need subsample_size >= 4 and num_groups >= 1")
    start = time.perf_counter()
    rng = np.random.default_rng(np.uint64(seed))
    reports = []
    for _ in range(m):
        rows = np.sort(rng.choice(table.n, size=k, replace=False))
        reports.append(measure_from_table(table.take_rows(rows), kind, alpha, spec))
    value = float(np.mean([r.value for r in reports]))
    raw = float(np.mean([r.raw_value for r in reports]))
    return MeasureReport(kind, None if kind == "HSIC" else alpha, value,
                         all(r.degenerate for r in reports), k, table.group_dims, raw,
                         time.perf_counter() - start)


