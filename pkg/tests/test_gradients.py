import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gramdep.errors import EigenDegeneracyError, SingularPowerError
from gramdep.gradients import (
    backprop_to_samples,
    grad_eigenvalue,
    grad_entropy,
    grad_joint_entropy,
    grad_mutual_information,
    grad_nmi_max,
    gradcheck,
    matrix_power_sym,
    numerical_gradient,
    raw_entropy,
    raw_joint_entropy,
    raw_mutual_information,
    relative_error,
)
from gramdep.kernel import KernelSpec, rbf_gram

LN2 = math.log(2.0)


def _gram(rng, n, dim=2):
    x = rng.standard_normal((n, dim))
    return 0.7 * rbf_gram(x, float(rng.uniform(0.7, 2.0))) + 0.3 * np.eye(n) / n


class TestExamples:
    def test_identity_alpha_two(self):
        n = 5
        g = grad_entropy(np.eye(n) / n, 2.0)
        np.testing.assert_allclose(g, -2.0 / LN2 * np.eye(n), rtol=1e-12)

    def test_alpha_two_closed_form(self, rng):
        a = _gram(rng, 7)
        expected = -2.0 / LN2 * a / np.sum(a * a)
        np.testing.assert_allclose(grad_entropy(a, 2.0), expected, rtol=1e-10)

    def test_constant_partner_removes_joint_dependence(self, rng):
        # with B = ones/N the joint Gram is A / tr(A); only the trace
        # normalization survives, a multiple of I that is blind to unit-trace moves
        a = _gram(rng, 6)
        b = np.ones((6, 6)) / 6
        ga, _ = grad_mutual_information(a, b, 2.0)
        np.testing.assert_allclose(ga, -2.0 / LN2 * np.eye(6), atol=1e-10)

    def test_alpha_one_rejected(self, rng):
        with pytest.raises(ValueError):
            grad_entropy(_gram(rng, 4), 1.0)


class TestFiniteDifferences:
    @pytest.mark.parametrize("alpha", [0.5, 1.5, 2.0, 3.0])
    def test_entropy(self, rng, alpha):
        a = _gram(rng, 6)
        num = numerical_gradient(lambda m: raw_entropy(m, alpha), a)
        assert relative_error(num, grad_entropy(a, alpha)) < 1e-6

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_joint_entropy(self, rng, alpha):
        a, b = _gram(rng, 6), _gram(rng, 6, 1)
        num = numerical_gradient(lambda m: raw_joint_entropy(m, b, alpha), a)
        assert relative_error(num, grad_joint_entropy(a, b, alpha)) < 1e-6

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_mutual_information_both_arguments(self, rng, alpha):
        a, b = _gram(rng, 6), _gram(rng, 6, 1)
        ga, gb = grad_mutual_information(a, b, alpha)
        assert relative_error(numerical_gradient(lambda m: raw_mutual_information(m, b, alpha), a), ga) < 1e-6
        assert relative_error(numerical_gradient(lambda m: raw_mutual_information(a, m, alpha), b), gb) < 1e-6

    def test_nmi_max(self, rng):
        a, b = _gram(rng, 6), _gram(rng, 6, 1)

        def f(ma, mb):
            sa, sb = raw_entropy(ma, 2.0), raw_entropy(mb, 2.0)
            return raw_mutual_information(ma, mb, 2.0) / max(sa, sb)

        value, da, db = grad_nmi_max(a, b, 2.0)
        assert value == pytest.approx(f(a, b), abs=1e-12)
        assert relative_error(numerical_gradient(lambda m: f(m, b), a), da) < 1e-6
        assert relative_error(numerical_gradient(lambda m: f(a, m), b), db) < 1e-6

    def test_gradcheck_report(self):
        errs = gradcheck(n=6, alpha=2.0, seed=1, fixtures=20)
        assert set(errs) == {"grad_entropy", "grad_joint_entropy", "grad_mutual_information",
                             "grad_eigenvalue", "backprop_to_samples"}
        assert max(errs.values()) < 1e-5


class TestStructure:
    def test_symmetric_and_commuting(self, rng):
        a = _gram(rng, 8)
        for alpha in (0.5, 2.0, 3.0):
            g = grad_entropy(a, alpha)
            np.testing.assert_allclose(g, g.T, atol=1e-12)
            assert np.linalg.norm(g @ a - a @ g) < 1e-10 * np.linalg.norm(g)

    def test_mi_swap_symmetry(self, rng):
        a, b = _gram(rng, 6), _gram(rng, 6, 1)
        ga, gb = grad_mutual_information(a, b)
        gb2, ga2 = grad_mutual_information(b, a)
        np.testing.assert_allclose(ga, ga2, atol=1e-12)
        np.testing.assert_allclose(gb, gb2, atol=1e-12)

    def test_eigenvalue_gradients_sum_to_identity(self, rng):
        m = rng.standard_normal((6, 6))
        s = (m + m.T) / 2
        total = sum(grad_eigenvalue(s, i) for i in range(6))
        np.testing.assert_allclose(total, np.eye(6), atol=1e-10)

    def test_eigenvalue_degeneracy_and_index(self):
        with pytest.raises(EigenDegeneracyError):
            grad_eigenvalue(np.eye(3), 1)
        with pytest.raises(IndexError):
            grad_eigenvalue(np.diag([1.0, 2.0]), 2)

    def test_matrix_power(self, rng):
        a = _gram(rng, 5)
        np.testing.assert_allclose(matrix_power_sym(a, 2.0), a @ a, atol=1e-14)
        np.testing.assert_allclose(matrix_power_sym(a, -1.0) @ a, np.eye(5), atol=1e-8)
        with pytest.raises(SingularPowerError):
            matrix_power_sym(np.ones((3, 3)) / 3, -0.5)


class TestBackprop:
    def test_finite_difference(self, rng):
        y = np.arange(8.0) + rng.uniform(-0.3, 0.3, 8)
        spec = KernelSpec("rbf", 0.8)

        def loss(v):
            return raw_entropy(rbf_gram(v, 0.8), 2.0)

        g = backprop_to_samples(grad_entropy(rbf_gram(y, 0.8), 2.0), y, spec)
        num = np.array([(loss(y + e) - loss(y - e)) / 2e-5 for e in np.eye(8) * 1e-5])
        assert relative_error(num, g) < 1e-4

    def test_translation_invariance_rows_sum_to_zero(self, rng):
        y = rng.standard_normal((10, 2))
        a = rbf_gram(y, 1.0)
        g = backprop_to_samples(grad_entropy(a, 2.0), y, KernelSpec("rbf", 1.0))
        np.testing.assert_allclose(g.sum(axis=0), 0.0, atol=1e-12)

    def test_duplicate_samples_share_gradient(self, rng):
        y = rng.standard_normal(6)
        y[4] = y[1]
        a = rbf_gram(y, 1.0)
        a = 0.9 * a + 0.1 * np.eye(6) / 6
        g = backprop_to_samples(grad_entropy(a, 2.0), y, KernelSpec("rbf", 1.0))
        assert g[1] == pytest.approx(g[4], abs=1e-10)

    def test_requires_fixed_rbf(self):
        with pytest.raises(ValueError):
            backprop_to_samples(np.eye(3), np.arange(3.0), KernelSpec())
        with pytest.raises(ValueError):
            backprop_to_samples(np.eye(3), np.arange(3.0), KernelSpec("delta"))


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 3.0]))
def test_entropy_gradient_property(seed, alpha):
    a = _gram(np.random.default_rng(seed), 5)
    num = numerical_gradient(lambda m: raw_entropy(m, alpha), a)
    assert relative_error(num, grad_entropy(a, alpha)) < 1e-5
