import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gramdep.dataset import (
    SOURCE_DENSITIES,
    SampleTable,
    format_groups,
    gen_data_a,
    gen_data_b,
    gen_planted_subspace_outliers,
    gen_product_pair,
    gen_rotation_pair,
    gen_xor,
    load_csv,
    load_labels,
    parse_groups,
    random_orthogonal,
    write_csv,
)
from gramdep.errors import CsvParseError, LayoutError


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_two_scalar_groups(self, tmp_path):
        t = load_csv(_write(tmp_path, "1,2\n3,4\n5,6\n"), "0;1")
        assert t.n == 3 and t.n_groups == 2 and t.group_dims == [1, 1]
        np.testing.assert_array_equal(t.values, [[1, 2], [3, 4], [5, 6]])

    def test_range_expansion(self, tmp_path):
        t = load_csv(_write(tmp_path, "1,2,3,4\n5,6,7,8\n"), "0-2;3")
        assert t.groups == ((0, 1, 2), (3,))
        assert t.group_dims == [3, 1]

    def test_overlap_rejected(self, tmp_path):
        with pytest.raises(LayoutError):
            load_csv(_write(tmp_path, "1,2\n3,4\n"), "0;0-1")

    def test_missing_column_rejected(self, tmp_path):
        with pytest.raises(LayoutError):
            load_csv(_write(tmp_path, "1,2,3\n3,4,5\n"), "0;1")

    def test_default_layout_one_group_per_column(self, tmp_path):
        t = load_csv(_write(tmp_path, "1,2,3\n3,4,5\n"))
        assert t.groups == ((0,), (1,), (2,))

    def test_header(self, tmp_path):
        t = load_csv(_write(tmp_path, "a,b\n1,2\n3,4\n"), "0;1", has_header=True)
        assert t.column_names == ("a", "b") and t.n == 2

    def test_malformed_row_reports_line_number(self, tmp_path):
        p = _write(tmp_path, "1,2\n\n3,x\n")
        with pytest.raises(CsvParseError) as err:
            load_csv(p)
        assert err.value.row == 3
        assert "row 3" in str(err.value)

    def test_ragged_row(self, tmp_path):
        with pytest.raises(CsvParseError) as err:
            load_csv(_write(tmp_path, "1,2\n3\n"))
        assert err.value.row == 2

    def test_roundtrip(self, tmp_path, rng):
        x = rng.standard_normal((7, 3))
        p = tmp_path / "rt.csv"
        write_csv(p, x)
        np.testing.assert_array_equal(load_csv(p).values, x)

    def test_labels(self, tmp_path):
        np.testing.assert_array_equal(load_labels(_write(tmp_path, "0\n1\n0\n")), [0, 1, 0])
        with pytest.raises(CsvParseError):
            load_labels(_write(tmp_path, "0\n2\n", "bad.csv"))


class TestParseGroups:
    def test_mixed_items(self):
        assert parse_groups("0-2;3;4,5", 6) == ((0, 1, 2), (3,), (4, 5))

    def test_format_roundtrip(self):
        g = parse_groups("0-2;3;4,5", 6)
        assert parse_groups(format_groups(g), 6) == g

    @pytest.mark.parametrize("spec", ["0;7", "0;;1", "a;1", "2-0;1"])
    def test_bad_specs(self, spec):
        with pytest.raises(LayoutError):
            parse_groups(spec, 2)

    def test_empty_spec_is_one_group_per_column(self):
        assert parse_groups("", 2) == ((0,), (1,))


class TestSampleTable:
    def test_invariants(self):
        with pytest.raises(LayoutError):
            SampleTable(np.zeros((1, 2)), ((0,), (1,)))
        with pytest.raises(LayoutError):
            SampleTable(np.zeros((3, 2)), ((0,), ()))

    def test_immutable(self):
        t = SampleTable.from_groups(np.arange(4.0), np.arange(4.0))
        with pytest.raises(ValueError):
            t.values[0, 0] = 1.0

    def test_take_rows_and_groups(self):
        t = SampleTable.from_groups(np.arange(5.0), np.arange(10.0).reshape(5, 2))
        sub = t.take_rows([0, 2])
        assert sub.n == 2 and sub.groups == t.groups
        np.testing.assert_array_equal(t.group(1), np.arange(10.0).reshape(5, 2))


class TestGenerators:
    @pytest.mark.parametrize("gen,args", [
        (gen_rotation_pair, (64, 0.3, 1)),
        (gen_product_pair, (64,)),
        (gen_data_a, (64, 4)),
        (gen_data_b, (64, 4)),
        (gen_xor, (64,)),
    ])
    def test_deterministic(self, gen, args):
        a, b = gen(*args, seed=11), gen(*args, seed=11)
        np.testing.assert_array_equal(a.values, b.values)
        assert not np.array_equal(a.values, gen(*args, seed=12).values)

    def test_rotation_shapes_and_range(self):
        t = gen_rotation_pair(50, np.pi / 8, extra_dims=2, seed=1)
        assert t.group_dims == [3, 3]
        with pytest.raises(ValueError):
            gen_rotation_pair(50, 1.0)
        with pytest.raises(ValueError):
            gen_rotation_pair(50, -0.1)
        with pytest.raises(ValueError):
            gen_rotation_pair(3, 0.1)

    def test_rotation_theta_zero_sources_uncorrelated(self):
        t = gen_rotation_pair(4000, 0.0, seed=3)
        r = np.corrcoef(t.values[:, 0], t.values[:, 1])[0, 1]
        assert abs(r) < 0.06

    @pytest.mark.parametrize("name", sorted(SOURCE_DENSITIES))
    def test_source_densities_standardized(self, name):
        x = SOURCE_DENSITIES[name](np.random.default_rng(0), 200_000)
        assert abs(x.mean()) < 0.02 and abs(x.var() - 1.0) < 0.03

    def test_random_orthogonal(self, rng):
        q = random_orthogonal(5, rng)
        np.testing.assert_allclose(q @ q.T, np.eye(5), atol=1e-12)

    def test_product_pair_uncorrelated(self):
        t = gen_product_pair(5000, seed=0)
        y1, y2 = t.group(0), t.group(1)
        for j in range(5):
            assert abs(np.corrcoef(y1[:, j], y2[:, j])[0, 1]) < 0.05
        assert t.group_dims == [5, 5]

    def test_data_a_powers(self):
        t = gen_data_a(200, 4, seed=2)
        v = t.values
        order = np.argsort(v[:, 0])
        assert np.all(np.diff(v[order], axis=0) >= 0)
        np.testing.assert_allclose(v[:, 2], v[:, 1] * v[:, 0], rtol=1e-12)
        assert v.min() >= 0 and v.max() <= 1

    def test_data_b_definition(self):
        t = gen_data_b(300, 2, seed=2)
        np.testing.assert_allclose(t.values[:, 0], t.values[:, 1] ** 2, rtol=1e-12)
        t5 = gen_data_b(300, 5, seed=2)
        np.testing.assert_allclose(t5.values[:, 0], t5.values[:, 1:].mean(axis=1) ** 2, rtol=1e-12)
        assert t5.values.min() >= 0 and t5.values.max() <= 1

    def test_xor_identity(self):
        v = gen_xor(500, seed=1).values
        assert set(np.unique(v)) <= {0.0, 1.0}
        np.testing.assert_array_equal(v[:, 2], (v[:, 0] + v[:, 1]) % 2)

    def test_planted_outliers(self):
        t, labels = gen_planted_subspace_outliers(seed=4)
        assert t.n == 400 and t.d == 12 and labels.sum() == 10
        x = t.values
        curve = 0.5 + 0.4 * np.sin(2 * np.pi * x[:, 0])
        dev = np.abs(x[:, 1] - curve)
        assert dev[labels == 1].min() > 0.3
        assert np.quantile(dev[labels == 0], 0.99) < 0.2


@given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=2**32))
def test_data_generators_in_unit_cube(d, seed):
    for gen in (gen_data_a, gen_data_b):
        v = gen(20, d, seed=seed).values
        assert v.min() >= 0.0 and v.max() <= 1.0
