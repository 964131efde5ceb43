"""Matrix-based Renyi entropy of unit-trace Gram matrices (in bits)."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import NotPSDError
from .kernel import DeltaGram, joint_gram

__all__ = [
    "PSD_TOL",
    "spectrum",
    "entropy_from_spectrum",
    "renyi_entropy",
    "joint_entropy",
    "shearer_gap",
]

PSD_TOL = 1e-10
MAX_SUBSET_GROUPS = 20


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return alpha


def spectrum(a) -> np.ndarray:
    """Eigenvalues of ``a``, nonincreasing, clipped at 0 and summing to 1.

    Eigenvalues below ``N * eps * lambda_max`` are set to zero.
    Raises :class:`NotPSDError` if an eigenvalue is below ``-1e-10``.
    """
    if isinstance(a, DeltaGram):
        lam = np.zeros(a.n)
        freq = np.sort(a.frequencies())[::-1]
        lam[: freq.size] = freq
        return lam
    a = np.asarray(a, dtype=float)
    lam = np.linalg.eigvalsh((a + a.T) / 2.0)[::-1]
    if lam[-1] < -PSD_TOL:
        raise NotPSDError(f"eigenvalue {lam[-1]:.3e} below -{PSD_TOL:g}")
    # eigenvalues under the numerical-rank tolerance are rounding noise;
    # for alpha < 1 they would otherwise inflate sum(lam**alpha)
    lam[lam < lam.size * np.finfo(float).eps * max(lam[0], 0.0)] = 0.0
    return lam / lam.sum()


def entropy_from_spectrum(lam, alpha: float = 2.0) -> float:
    """Renyi entropy of order ``alpha`` of a probability vector (bits).

    ``alpha == 1`` gives the Shannon/von Neumann limit. Zero entries are
    dropped, which is the continuous extension for every ``alpha > 0``.
    """
    alpha = _check_alpha(alpha)
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > 0]
    if alpha == 1.0:
        h = -float(np.sum(lam * np.log2(lam)))
    else:
        h = math.log2(float(np.sum(lam**alpha))) / (1.0 - alpha)
    return max(h, 0.0)


def _frobenius_entropy(a: np.ndarray) -> float:
    # S_2 = -log2 tr(A^2) for symmetric A; trace-normalized for safety
    a = np.asarray(a, dtype=float)
    num = float(np.vdot(a, a))
    return max(-math.log2(num / float(np.trace(a)) ** 2), 0.0)


def renyi_entropy(a, alpha: float = 2.0, method: str = "auto") -> float:
    """Renyi alpha-entropy ``S_alpha(A)`` of a unit-trace Gram matrix.

    ``method`` is ``"eig"`` (eigenvalues), ``"frobenius"`` (alpha = 2 only,
    no decomposition) or ``"auto"``, which takes the Frobenius route at
    alpha = 2 and the eigenvalue route otherwise.
    """
    alpha = _check_alpha(alpha)
    if isinstance(a, DeltaGram):
        return entropy_from_spectrum(a.frequencies(), alpha)
    if method == "auto":
        method = "frobenius" if alpha == 2.0 else "eig"
    if method == "frobenius":
        if alpha != 2.0:
            raise ValueError("the Frobenius route only applies to alpha = 2")
        return _frobenius_entropy(a)
    if method != "eig":
        raise ValueError(f"unknown method {method!r}")
    return entropy_from_spectrum(spectrum(a), alpha)


def joint_entropy(parts: Sequence, alpha: float = 2.0, method: str = "auto") -> float:
    """Entropy of the trace-normalized Hadamard product of ``parts``."""
    return renyi_entropy(joint_gram(parts), alpha, method)


def shearer_gap(parts: Sequence, subset_size: int, alpha: float = 2.0, method: str = "auto") -> float:
    """Gap in Shearer's inequality over all ``subset_size``-subsets.

    With ``k = C(L-1, r-1)`` covers per variable this is
    ``(1/k) sum_S S_alpha(A^S) - S_alpha(A^[L])``; ``r = 1`` gives the total
    correlation and ``r = L-1`` the dual total correlation divided by L-1.
    """
    parts = list(parts)
    L = len(parts)
    r = int(subset_size)
    if L < 2:
        raise ValueError("shearer_gap needs at least two variables")
    if not 1 <= r <= L - 1:
        raise ValueError(f"subset_size must lie in 1..{L - 1}, got {r}")
    if L > MAX_SUBSET_GROUPS and r not in (1, L - 1):
        raise ValueError(f"refusing to enumerate C({L}, {r}) subsets")
    k = math.comb(L - 1, r - 1)
    total = 0.0
    for subset in itertools.combinations(range(L), r):
        total += joint_entropy([parts[i] for i in subset], alpha, method)
    return total / k - joint_entropy(parts, alpha, method)
