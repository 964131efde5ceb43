"""Permutation independence tests, power curves and AUC."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from ._parallel import pmap
from .dataset import SampleTable, gen_product_pair, gen_rotation_pair
from .kernel import KernelSpec, group_grams, permute_gram
from .measures import measure_from_grams, normalize_kind

__all__ = [
    "PermTestResult",
    "PowerCurve",
    "derive_seed",
    "permutation_test",
    "permutation_test_multi",
    "permutation_test_grams",
    "power_experiment",
    "ROTATION_THETAS",
    "PRODUCT_NS",
    "auc",
]

ROTATION_THETAS = tuple(k * np.pi / 32 for k in range(9))
PRODUCT_NS = (32, 64, 128, 256, 512)


@dataclass
class PermTestResult:
    statistic: float
    threshold: float
    p_value: float
    reject_h0: bool
    num_permutations: int
    tau: float
    kind: str = ""
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PowerCurve:
    scenario: str
    x_values: list
    rates: list
    trials: int
    measure_kind: str
    tau: float
    num_permutations: int
    n: Optional[int] = None
    extra_dims: Optional[int] = None
    rate_meaning: str = field(default="")

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list:
        return [{"x": x, "rate": r} for x, r in zip(self.x_values, self.rates)]


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of nonnegative integers."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def permutation_test_grams(grams: Sequence, kind: str = "NMI-max", alpha: float = 2.0,
                           num_permutations: int = 100, tau: float = 0.05,
                           seed: int = 0, threads: Optional[int] = None) -> PermTestResult:
    """Permutation test on precomputed per-variable Gram matrices.

    Every replica permutes the rows and columns of each Gram after the
    first with its own uniform permutation; the first variable is held
    fixed. The threshold is the linear-interpolation ``1 - tau`` quantile
    of the replica statistics.
    """
    kind = normalize_kind(kind)
    grams = list(grams)
    if len(grams) < 2:
        raise ValueError("a permutation test needs at least two variables")
    if num_permutations < 20:
        raise ValueError("num_permutations must be at least 20")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    n = grams[0].shape[0]
    observed = measure_from_grams(grams, kind, alpha)
    rng = np.random.default_rng(np.uint64(seed))
    perms = [[rng.permutation(n) for _ in grams[1:]] for _ in range(num_permutations)]

    def replica(ps):
        permuted = [grams[0]] + [permute_gram(g, p) for g, p in zip(grams[1:], ps)]
        return measure_from_grams(permuted, kind, alpha).value

    null = np.array(pmap(replica, perms, threads))
    threshold = float(np.quantile(null, 1.0 - tau))
    stat = observed.value
    p_value = (1.0 + float(np.sum(null >= stat))) / (1.0 + num_permutations)
    return PermTestResult(stat, threshold, p_value, bool(stat > threshold),
                          num_permutations, tau, kind, observed.degenerate)


def permutation_test(table: SampleTable, kind: str = "NMI-max", alpha: float = 2.0,
                     spec: KernelSpec = KernelSpec(), num_permutations: int = 100,
                     tau: float = 0.05, seed: int = 0, threads: Optional[int] = None) -> PermTestResult:
    """Two-variable permutation test: rows of the second group are shuffled."""
    if table.n_groups != 2:
        raise ValueError(f"permutation_test needs exactly 2 groups, got {table.n_groups}; "
                         "use permutation_test_multi")
    return permutation_test_grams(group_grams(table, spec), kind, alpha,
                                  num_permutations, tau, seed, threads)


def permutation_test_multi(table: SampleTable, kind: str = "NTC", alpha: float = 2.0,
                           spec: KernelSpec = KernelSpec(), num_permutations: int = 100,
                           tau: float = 0.05, seed: int = 0, threads: Optional[int] = None) -> PermTestResult:
    """L-variable permutation test: every group but the first is shuffled."""
    return permutation_test_grams(group_grams(table, spec), kind, alpha,
                                  num_permutations, tau, seed, threads)


def power_experiment(scenario: str, measure_kind: str = "NMI-max", alpha: float = 2.0,
                     trials: int = 100, num_permutations: int = 100, tau: float = 0.05,
                     seed: int = 0, n: Optional[int] = None, extra_dims: int = 0,
                     x_values: Optional[Sequence] = None, spec: KernelSpec = KernelSpec(),
                     threads: Optional[int] = None) -> PowerCurve:
    """Rejection behaviour of the permutation test over a parameter grid.

    ``rotation`` sweeps the mixing angle at fixed ``n`` (default 512) and
    reports the H0 acceptance rate; ``product`` sweeps the sample size and
    reports the H1 detection rate.
    """
    if trials < 10:
        raise ValueError("trials must be at least 10")
    kind = normalize_kind(measure_kind)
    if scenario in ("rotation", "rotation-sweep"):
        scenario = "rotation"
        n = 512 if n is None else int(n)
        xs = list(ROTATION_THETAS if x_values is None else x_values)

        def make(xi, t, s):
            return gen_rotation_pair(n, xs[xi], extra_dims, s)
    elif scenario in ("product", "product-n-sweep"):
        scenario = "product"
        xs = list(PRODUCT_NS if x_values is None else x_values)

        def make(xi, t, s):
            return gen_product_pair(int(xs[xi]), s)
    else:
        raise ValueError(f"unknown scenario {scenario!r}")

    def trial(job):
        xi, t = job
        data_seed = derive_seed(seed, xi, t, 0)
        test_seed = derive_seed(seed, xi, t, 1)
        res = permutation_test(make(xi, t, data_seed), kind, alpha, spec,
                               num_permutations, tau, test_seed, threads=1)
        return res.reject_h0

    jobs = [(xi, t) for xi in range(len(xs)) for t in range(trials)]
    rejects = np.array(pmap(trial, jobs, threads)).reshape(len(xs), trials)
    reject_rate = rejects.mean(axis=1)
    if scenario == "rotation":
        rates, meaning = 1.0 - reject_rate, "H0 acceptance rate"
    else:
        rates, meaning = reject_rate, "H1 detection rate"
    return PowerCurve(scenario, [float(x) for x in xs], [float(r) for r in rates], trials, kind,
                      tau, num_permutations, n if scenario == "rotation" else None,
                      extra_dims if scenario == "rotation" else None, meaning)


def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) area under the ROC curve; ties count 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    pos = labels == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))
