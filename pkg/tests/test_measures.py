import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gramdep.dataset import SampleTable, gen_xor
from gramdep.kernel import KernelSpec, delta_gram, gram, group_grams, joint_gram
from gramdep.measures import (
    KINDS,
    dual_total_correlation,
    hsic,
    measure_from_grams,
    measure_from_table,
    mutual_information,
    normalize_kind,
    subsampled_measure,
    total_correlation,
)

from conftest import mixed_grams, random_gram

NORMALIZED = ("NTC", "NDTC", "NMI-max", "NMI-min")


def _pair_table(rng, n=60, strength=0.7):
    x = rng.standard_normal(n)
    y = strength * x + (1 - strength) * rng.standard_normal(n)
    return SampleTable.from_groups(x, y)


class TestExamples:
    def test_identical_discrete_variables(self):
        x = np.array([0, 1, 2, 0, 1, 2, 0, 1.0])
        t = SampleTable.from_groups(x, x.copy())
        delta = KernelSpec("delta")
        assert measure_from_table(t, "NTC", 2, delta).value == pytest.approx(1.0, abs=1e-12)
        assert measure_from_table(t, "NMI-max", 2, delta).value == pytest.approx(1.0, abs=1e-12)

    def test_constant_variable_is_degenerate(self):
        t = SampleTable.from_groups(np.zeros(6), np.zeros(6))
        r = measure_from_table(t, "NTC", 2, KernelSpec("delta"))
        assert r.degenerate and r.value == 0.0

    def test_xor_pairs_independent_triple_dependent(self):
        t = gen_xor(400, seed=3)
        grams = group_grams(t, KernelSpec("delta"))
        assert measure_from_grams(grams[:2], "NMI-max").value < 0.05
        assert measure_from_grams(grams[1:], "NMI-max").value < 0.05
        assert measure_from_grams(grams, "NTC").value > 0.4

    def test_large_clamp_is_logged(self, caplog):
        # two independent samples where the alpha = 2 MI comes out negative
        r = np.random.default_rng(2)
        a, b = random_gram(r, 16), random_gram(r, 16)
        with caplog.at_level("WARNING", logger="gramdep"):
            rep = measure_from_grams([a, b], "NMI-max", 2.0)
        assert rep.raw_value < -1e-3 and rep.value == 0.0
        assert "clamped" in caplog.text

    def test_kind_aliases(self):
        assert normalize_kind("nmi") == "NMI-max"
        assert normalize_kind("ndtc") == "NDTC"
        with pytest.raises(ValueError):
            normalize_kind("cmi")


class TestTwoVariableIdentities:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_numerators_coincide(self, rng, alpha):
        a, b = mixed_grams(rng, 30, 2)
        tc = total_correlation([a, b], alpha, normalized=False).value
        dtc = dual_total_correlation([a, b], alpha, normalized=False).value
        mi = mutual_information(a, b, alpha, "none").value
        assert tc == pytest.approx(mi, abs=1e-10)
        assert dtc == pytest.approx(mi, abs=1e-10)

    def test_ntc_is_nmi_min(self, rng):
        a, b = mixed_grams(rng, 30, 2)
        ntc = total_correlation([a, b], 1.0)
        assert ntc.raw_value == pytest.approx(mutual_information(a, b, 1.0, "min").raw_value, abs=1e-12)


class TestInvariances:
    @pytest.mark.parametrize("kind", ["NTC", "NDTC", "TC", "DTC"])
    def test_variable_reorder(self, rng, kind):
        parts = mixed_grams(rng, 25, 4)
        p = rng.permutation(4)
        a = measure_from_grams(parts, kind).raw_value
        b = measure_from_grams([parts[i] for i in p], kind).raw_value
        assert abs(a - b) < 1e-10

    @pytest.mark.parametrize("kind", KINDS)
    def test_sample_permutation(self, rng, kind):
        t = _pair_table(rng)
        p = rng.permutation(t.n)
        a = measure_from_table(t, kind).value
        b = measure_from_table(t.take_rows(p), kind).value
        assert a == pytest.approx(b, abs=1e-10)

    @pytest.mark.parametrize("kind", KINDS)
    def test_delta_fast_path_matches_dense(self, rng, kind):
        codes = [rng.integers(0, 3, 50).astype(float) for _ in range(2)]
        codes[1] = np.where(rng.random(50) < 0.6, codes[0], codes[1])
        fast = [delta_gram(c) for c in codes]
        dense = [gram(c, KernelSpec("delta")) for c in codes]
        assert measure_from_grams(fast, kind).value == pytest.approx(
            measure_from_grams(dense, kind).value, abs=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.sampled_from(NORMALIZED),
       st.sampled_from([0.5, 1.0, 2.0]))
def test_reported_values_in_unit_interval(seed, L, kind, alpha):
    parts = mixed_grams(np.random.default_rng(seed), 16, 2 if kind.startswith("NMI") else L)
    r = measure_from_grams(parts, kind, alpha)
    assert 0.0 <= r.value <= 1.0
    if 0.0 < r.raw_value < 1.0:
        assert r.value == r.raw_value


@given(st.integers(0, 2**32 - 1), st.integers(3, 4))
def test_dtc_dominates_pairwise_split_at_alpha_one(seed, L):
    # DTC is at least the information between any one variable and the rest
    parts = mixed_grams(np.random.default_rng(seed), 16, L)
    dtc = dual_total_correlation(parts, 1.0, normalized=False).value
    for i in range(L):
        rest = joint_gram(parts[:i] + parts[i + 1:])
        mi = mutual_information(parts[i], rest, 1.0, "none").value
        assert dtc >= mi - 1e-9


class TestHsic:
    def test_constant_is_zero(self, rng):
        x = rng.standard_normal(20)
        assert hsic(x, np.ones(20), KernelSpec("rbf", 1.0)).value == pytest.approx(0.0, abs=1e-14)

    def test_matches_explicit_trace(self, rng):
        x, y = rng.standard_normal((30, 2)), rng.standard_normal(30)
        n = 30
        kx = np.exp(-((x[:, None, :] - x[None, :, :]) ** 2).sum(-1) / 2.0)
        ky = np.exp(-((y[:, None] - y[None, :]) ** 2) / 2.0)
        h = np.eye(n) - np.ones((n, n)) / n
        expected = np.trace(kx @ h @ ky @ h) / (n - 1) ** 2
        assert hsic(x, y, KernelSpec("rbf", 1.0)).value == pytest.approx(expected, rel=1e-12)

    def test_shape_errors(self, rng):
        with pytest.raises(ValueError):
            hsic(np.zeros(5), np.zeros(6))
        with pytest.raises(ValueError):
            hsic(np.arange(3.0), np.arange(3.0))


class TestErrors:
    def test_single_variable(self, rng):
        with pytest.raises(ValueError):
            total_correlation([random_gram(rng, 5)])
        t = SampleTable.from_groups(np.arange(5.0))
        with pytest.raises(ValueError):
            measure_from_table(t, "NTC")

    def test_pairwise_kind_needs_two(self, rng):
        with pytest.raises(ValueError):
            measure_from_grams(mixed_grams(rng, 8, 3), "NMI-max")

    def test_size_mismatch(self, rng):
        with pytest.raises(ValueError):
            total_correlation([random_gram(rng, 5), random_gram(rng, 6)])


class TestSubsampled:
    def test_full_subsample_equals_full_measure(self, rng):
        t = _pair_table(rng, 40)
        full = measure_from_table(t, "NTC")
        sub = subsampled_measure(t, "NTC", subsample_size=40, num_groups=1)
        assert sub.value == pytest.approx(full.value, abs=1e-12)

    def test_deterministic_and_validated(self, rng):
        t = _pair_table(rng, 80)
        a = subsampled_measure(t, "NMI-max", subsample_size=20, num_groups=3, seed=5)
        b = subsampled_measure(t, "NMI-max", subsample_size=20, num_groups=3, seed=5)
        assert a.value == b.value
        with pytest.raises(ValueError):
            subsampled_measure(t, "NTC", subsample_size=81)
