"""Analytic gradients of matrix-based entropies with respect to Gram matrices.

Gradients are the unconstrained ones: ``G_ij = d f / d A_ij`` treating every
entry as free. Entropies are in bits, so every formula carries ``1/ln 2``.
For symmetric perturbations ``E = e_i e_j^T + e_j e_i^T`` the directional
derivative is ``G_ij + G_ji``; :func:`numerical_gradient` uses that to
recover ``G`` from central differences taken on the symmetric manifold.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import EigenDegeneracyError, SingularPowerError
from .kernel import KernelSpec, rbf_gram

__all__ = [
    "raw_entropy",
    "raw_joint_entropy",
    "raw_mutual_information",
    "matrix_power_sym",
    "grad_entropy",
    "grad_joint_entropy",
    "grad_mutual_information",
    "grad_nmi_max",
    "grad_eigenvalue",
    "backprop_to_samples",
    "numerical_gradient",
    "relative_error",
    "gradcheck",
]

_LN2 = math.log(2.0)
SINGULAR_TOL = 1e-12
EIGEN_GAP = 1e-8


def _eigh(a):
    a = np.asarray(a, dtype=float)
    lam, vec = np.linalg.eigh((a + a.T) / 2.0)
    return np.clip(lam, 0.0, None), vec


def matrix_power_sym(a, p: float) -> np.ndarray:
    """``A**p`` for symmetric PSD ``A`` through its eigendecomposition.

    Zero eigenvalues map to zero for ``p > 0``; a negative power of a
    singular matrix raises :class:`SingularPowerError`.
    """
    lam, vec = _eigh(a)
    if p < 0:
        if lam.min() < SINGULAR_TOL:
            raise SingularPowerError(f"matrix power {p} of a singular matrix")
        lp = lam**p
    elif p == 0:
        lp = np.ones_like(lam)
    else:
        lp = np.where(lam > 0, lam, 0.0) ** p
    return (vec * lp) @ vec.T


def raw_entropy(a, alpha: float) -> float:
    """``log2(tr(A**alpha)) / (1 - alpha)`` without trace renormalization."""
    lam, _ = _eigh(a)
    return math.log2(float(np.sum(lam**alpha))) / (1.0 - alpha)


def raw_joint_entropy(a, b, alpha: float) -> float:
    c = np.asarray(a) * np.asarray(b)
    return raw_entropy(c / np.trace(c), alpha)


def raw_mutual_information(a, b, alpha: float) -> float:
    return raw_entropy(a, alpha) + raw_entropy(b, alpha) - raw_joint_entropy(a, b, alpha)


def _coef(alpha):
    if alpha == 1.0:
        raise ValueError("analytic gradients need alpha != 1")
    return alpha / ((1.0 - alpha) * _LN2)


def grad_entropy(a, alpha: float = 2.0) -> np.ndarray:
    """``dS_alpha/dA = alpha/((1-alpha) ln2) * A**(alpha-1) / tr(A**alpha)``."""
    alpha = float(alpha)
    c = _coef(alpha)
    power = matrix_power_sym(a, alpha - 1.0)
    lam, _ = _eigh(a)
    return c * power / float(np.sum(lam**alpha))


def grad_joint_entropy(a, b, alpha: float = 2.0) -> np.ndarray:
    """Gradient of ``S_alpha(A o B / tr(A o B))`` with respect to ``A``.

    Swap the arguments for the gradient with respect to ``B``.
    """
    alpha = float(alpha)
    c = _coef(alpha)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    h = a * b
    lam, _ = _eigh(h)
    tr_pow = float(np.sum(lam**alpha))
    first = matrix_power_sym(h, alpha - 1.0) * b / tr_pow
    second = np.diag(np.diag(b)) / np.trace(h)
    return c * (first - second)


def grad_mutual_information(a, b, alpha: float = 2.0):
    """Gradients of ``I = S(A) + S(B) - S(A, B)`` as ``(dI/dA, dI/dB)``."""
    ga = grad_entropy(a, alpha) - grad_joint_entropy(a, b, alpha)
    gb = grad_entropy(b, alpha) - grad_joint_entropy(b, a, alpha)
    return ga, gb


def grad_nmi_max(a, b, alpha: float = 2.0):
    """Value and gradients of ``I / max(S(A), S(B))``.

    The max is differentiated through whichever argument attains it (``A``
    on ties). Returns ``(value, dA, dB)``.
    """
    sa, sb = raw_entropy(a, alpha), raw_entropy(b, alpha)
    mi = sa + sb - raw_joint_entropy(a, b, alpha)
    ga, gb = grad_mutual_information(a, b, alpha)
    den = max(sa, sb)
    da, db = ga / den, gb / den
    scale = mi / den**2
    if sa >= sb:
        da = da - scale * grad_entropy(a, alpha)
    else:
        db = db - scale * grad_entropy(b, alpha)
    return mi / den, da, db


def grad_eigenvalue(a, i: int) -> np.ndarray:
    """``d lambda_i / dA = v_i v_i^T`` with eigenvalues sorted nonincreasing."""
    a = np.asarray(a, dtype=float)
    lam, vec = np.linalg.eigh((a + a.T) / 2.0)
    lam, vec = lam[::-1], vec[:, ::-1]
    n = lam.size
    if not 0 <= i < n:
        raise IndexError(f"eigenvalue index {i} out of range for size {n}")
    gaps = [abs(lam[i] - lam[j]) for j in (i - 1, i + 1) if 0 <= j < n]
    if gaps and min(gaps) <= EIGEN_GAP:
        raise EigenDegeneracyError(f"eigenvalue {i} is repeated; its gradient is undefined")
    v = vec[:, i]
    return np.outer(v, v)


def backprop_to_samples(loss_grad, samples, spec: KernelSpec) -> np.ndarray:
    """Chain ``dLoss/dA`` through a fixed-width normalized RBF Gram to samples.

    ``dLoss/dy_i = sum_j (G_ij + G_ji) A_ij (y_j - y_i) / sigma^2``.
    """
    if spec.kind != "rbf" or not spec.fixed:
        raise ValueError("backprop_to_samples needs an RBF kernel with a fixed bandwidth")
    y = np.asarray(samples, dtype=float)
    vector = y.ndim == 1
    y = y.reshape(len(y), -1)
    sigma = float(spec.bandwidth)
    g = np.asarray(loss_grad, dtype=float)
    w = (g + g.T) * rbf_gram(y, sigma)
    out = (w @ y - w.sum(axis=1)[:, None] * y) / sigma**2
    return out[:, 0] if vector else out


def numerical_gradient(f: Callable, a, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``f`` on symmetric matrices.

    Off-diagonal pairs are perturbed together, so the raw difference is
    ``G_ij + G_ji``; it is halved to match the unconstrained convention.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    out = np.zeros_like(a)
    for i in range(n):
        for j in range(i, n):
            e = np.zeros_like(a)
            e[i, j] = e[j, i] = step
            d = (f(a + e) - f(a - e)) / (2.0 * step)
            if i != j:
                d /= 2.0
            out[i, j] = out[j, i] = d
    return out


def relative_error(approx, exact) -> float:
    approx, exact = np.asarray(approx, dtype=float), np.asarray(exact, dtype=float)
    scale = max(np.linalg.norm(exact), 1e-300)
    return float(np.linalg.norm(approx - exact) / scale)


def _random_gram(rng, n, dim=2):
    # blend with I/n to keep the spectrum away from zero for alpha < 1
    x = rng.standard_normal((n, dim))
    sigma = float(rng.uniform(0.7, 2.0))
    return 0.7 * rbf_gram(x, sigma) + 0.3 * np.eye(n) / n


def gradcheck(n: int = 8, alpha: float = 2.0, seed: int = 0, fixtures: int = 20,
              step: float = 1e-5) -> dict:
    """Max relative error of every analytic gradient against finite differences.

    Each operation is checked on ``fixtures`` random Gram matrices of size
    ``n``; the sample-level check chains an entropy through
    :func:`backprop_to_samples` and perturbs the samples directly.
    """
    alpha = float(alpha)
    rng = np.random.default_rng(np.uint64(seed))
    errs = {k: 0.0 for k in ("grad_entropy", "grad_joint_entropy", "grad_mutual_information",
                             "grad_eigenvalue", "backprop_to_samples")}
    for _ in range(fixtures):
        a, b = _random_gram(rng, n), _random_gram(rng, n, 1)
        num = numerical_gradient(lambda m: raw_entropy(m, alpha), a, step)
        errs["grad_entropy"] = max(errs["grad_entropy"], relative_error(num, grad_entropy(a, alpha)))
        num = numerical_gradient(lambda m: raw_joint_entropy(m, b, alpha), a, step)
        errs["grad_joint_entropy"] = max(errs["grad_joint_entropy"],
                                         relative_error(num, grad_joint_entropy(a, b, alpha)))
        ga, gb = grad_mutual_information(a, b, alpha)
        num_a = numerical_gradient(lambda m: raw_mutual_information(m, b, alpha), a, step)
        num_b = numerical_gradient(lambda m: raw_mutual_information(a, m, alpha), b, step)
        errs["grad_mutual_information"] = max(errs["grad_mutual_information"],
                                              relative_error(num_a, ga), relative_error(num_b, gb))
        m = rng.standard_normal((n, n))
        sym = (m + m.T) / 2.0
        i = int(rng.integers(0, n))
        num = numerical_gradient(lambda s: float(np.sort(np.linalg.eigvalsh(s))[::-1][i]), sym, step)
        errs["grad_eigenvalue"] = max(errs["grad_eigenvalue"], relative_error(num, grad_eigenvalue(sym, i)))
        errs["backprop_to_samples"] = max(errs["backprop_to_samples"],
                                          _sample_gradcheck(rng, n, alpha, step))
    return errs


def _sample_gradcheck(rng, n, alpha, step):
    # jittered grid: no near-duplicate samples, so the Gram stays well conditioned
    y = rng.permutation(n) + rng.uniform(-0.3, 0.3, n)
    spec = KernelSpec("rbf", float(rng.uniform(0.5, 1.0)))

    def loss(v):
        return raw_entropy(rbf_gram(v, spec.bandwidth), alpha)

    analytic = backprop_to_samples(grad_entropy(rbf_gram(y, spec.bandwidth), alpha), y, spec)
    num = np.empty(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        num[k] = (loss(y + e) - loss(y - e)) / (2.0 * step)
    return relative_error(num, analytic)
