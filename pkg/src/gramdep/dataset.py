"""Sample tables, column grouping, CSV I/O and synthetic generators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CsvParseError, LayoutError

__all__ = [
    "SampleTable",
    "parse_groups",
    "format_groups",
    "load_csv",
    "write_csv",
    "load_labels",
    "random_orthogonal",
    "gen_rotation_pair",
    "gen_product_pair",
    "gen_data_a",
    "gen_data_b",
    "gen_xor",
    "gen_planted_subspace_outliers",
    "SOURCE_DENSITIES",
]


@dataclass(frozen=True)
class SampleTable:
    """N x d sample matrix with its columns partitioned into L groups.

    Rows are i.i.d. samples. ``groups`` is an ordered tuple of column-index
    tuples, each group being one (possibly multivariate) variable.
    """

    values: np.ndarray
    groups: tuple
    column_names: Optional[tuple] = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise LayoutError("values must be a 2-D matrix")
        groups = tuple(tuple(int(c) for c in g) for g in self.groups)
        _check_layout(groups, values.shape[1])
        if values.shape[0] < 2:
            raise LayoutError("a sample table needs at least 2 rows")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "groups", groups)
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != values.shape[1]:
                raise LayoutError("column_names length does not match column count")
            object.__setattr__(self, "column_names", names)

    @classmethod
    def from_groups(cls, *blocks, column_names=None):
        """Stack per-variable blocks (1-D or N x d_m) side by side."""
        mats = [np.asarray(b, dtype=float).reshape(len(b), -1) for b in blocks]
        groups, start = [], 0
        for m in mats:
            groups.append(tuple(range(start, start + m.shape[1])))
            start += m.shape[1]
        return cls(np.hstack(mats), tuple(groups), column_names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def group_dims(self) -> list:
        return [len(g) for g in self.groups]

    def group(self, i: int) -> np.ndarray:
        """Samples of the i-th variable as an N x d_i matrix."""
        return self.values[:, list(self.groups[i])]

    def take_rows(self, rows) -> "SampleTable":
        return SampleTable(self.values[np.asarray(rows)], self.groups, self.column_names)

    def select_columns(self, columns: Sequence[int]) -> "SampleTable":
        """Table of the given scalar columns, one group per column."""
        cols = list(columns)
        names = None if self.column_names is None else [self.column_names[c] for c in cols]
        return SampleTable(self.values[:, cols], tuple((i,) for i in range(len(cols))), names)


def _check_layout(groups, d):
    if len(groups) < 1:
        raise LayoutError("at least one group is required")
    seen = {}
    for gi, g in enumerate(groups):
        if len(g) == 0:
            raise LayoutError(f"group {gi} is empty")
        for c in g:
            if c < 0 or c >= d:
                raise LayoutError(f"column {c} out of range for {d} columns")
            if c in seen:
                raise LayoutError(f"column {c} appears in groups {seen[c]} and {gi}")
            seen[c] = gi
    missing = sorted(set(range(d)) - set(seen))
    if missing:
        raise LayoutError(f"columns {missing} are not assigned to any group")


def parse_groups(spec: Optional[str], d: int) -> tuple:
    """Parse a layout string such as ``"0-2;3-5;6"`` into column groups.

    Groups are separated by ``;``; inside a group, items are separated by
    ``,`` and are either single indices or inclusive ranges ``a-b``.
    ``None`` or an empty string puts every column in its own group.
    """
    if spec is None or not spec.strip():
        return tuple((c,) for c in range(d))
    groups = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            raise LayoutError(f"empty group in layout {spec!r}")
        cols = []
        for item in chunk.split(","):
            item = item.strip()
            try:
                if "-" in item:
                    lo, hi = (int(x) for x in item.split("-", 1))
                    if hi < lo:
                        raise LayoutError(f"descending range {item!r}")
                    cols.extend(range(lo, hi + 1))
                else:
                    cols.append(int(item))
            except ValueError as exc:
                if isinstance(exc, LayoutError):
                    raise
                raise LayoutError(f"bad column item {item!r} in layout {spec!r}") from None
        if len(set(cols)) != len(cols):
            raise LayoutError(f"column repeated inside group {chunk!r}")
        groups.append(tuple(cols))
    groups = tuple(groups)
    _check_layout(groups, d)
    return groups


def format_groups(groups) -> str:
    return ";".join(",".join(str(c) for c in g) for g in groups)


def _read_rows(path, has_header):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1)
                if r and any(x.strip() for x in r)]
    header = None
    if has_header:
        if not rows:
            raise CsvParseError(f"{path}: missing header row", row=1)
        header, rows = [h.strip() for h in rows[0][1]], rows[1:]
    return header, rows


def _parse_matrix(rows, width):
    out = np.empty((len(rows), width))
    for i, (rownum, row) in enumerate(rows):
        if len(row) != width:
            raise CsvParseError(f"row {rownum}: expected {width} fields, got {len(row)}", row=rownum)
        try:
            out[i] = [float(x) for x in row]
        except ValueError:
            raise CsvParseError(f"row {rownum}: non-numeric field in {row!r}", row=rownum) from None
    return out


def load_csv(path, group_spec: Optional[str] = None, has_header: bool = False) -> SampleTable:
    """Read a comma-delimited numeric file into a :class:`SampleTable`.

    Row numbers in error messages are 1-based file line numbers.
    """
    header, rows = _read_rows(path, has_header)
    if not rows:
        raise CsvParseError(f"{path}: no data rows", row=None)
    width = len(header) if header is not None else len(rows[0][1])
    values = _parse_matrix(rows, width)
    groups = parse_groups(group_spec, width)
    return SampleTable(values, groups, header)


def write_csv(path, values, header=None) -> None:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header is not None:
            writer.writerow(header)
        for row in values:
            writer.writerow([repr(float(x)) for x in row])


def load_labels(path, has_header: bool = False) -> np.ndarray:
    """Single-column 0/1 label file aligned with data rows."""
    _, rows = _read_rows(path, has_header)
    labels = _parse_matrix(rows, 1)[:, 0]
    if not np.all((labels == 0) | (labels == 1)):
        raise CsvParseError(f"{path}: labels must be 0 or 1")
    return labels.astype(int)


# --- synthetic generators -------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed))


def _uniform(rng, n):
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), n)


def _laplace(rng, n):
    return rng.laplace(0.0, 1.0 / np.sqrt(2.0), n)


def _student5(rng, n):
    return rng.standard_t(5, n) * np.sqrt(3.0 / 5.0)


def _exponential(rng, n):
    return rng.exponential(1.0, n) - 1.0


def _bimodal(rng, n):
    # +-0.9 centres with sd sqrt(1 - 0.81): zero mean, unit variance
    signs = rng.choice([-1.0, 1.0], n)
    return 0.9 * signs + np.sqrt(0.19) * rng.standard_normal(n)


SOURCE_DENSITIES = {
    "uniform": _uniform,
    "laplace": _laplace,
    "student-t5": _student5,
    "exponential": _exponential,
    "bimodal": _bimodal,
}


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d orthogonal matrix (QR with sign fix)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def gen_rotation_pair(n: int, theta: float, extra_dims: int = 0, seed: int = 0) -> SampleTable:
    """Two d-dimensional variables whose dependence grows with ``theta``.

    Two standardized non-Gaussian sources are rotated by ``theta``, each
    mixture is padded with ``extra_dims`` standard-normal dimensions and
    then multiplied by its own random orthogonal matrix.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    if not 0.0 <= theta <= np.pi / 4 + 1e-12:
        raise ValueError(f"theta={theta} outside [0, pi/4]")
    if extra_dims < 0:
        raise ValueError("extra_dims must be nonnegative")
    rng = _rng(seed)
    names = list(SOURCE_DENSITIES)
    picks = rng.integers(0, len(names), size=2)
    sources = np.column_stack([SOURCE_DENSITIES[names[k]](rng, n) for k in picks])
    sources = (sources - sources.mean(axis=0)) / sources.std(axis=0)
    c, s = np.cos(theta), np.sin(theta)
    mixed = sources @ np.array([[c, -s], [s, c]]).T
    d = extra_dims + 1
    blocks = []
    for j in range(2):
        block = np.column_stack([mixed[:, j], rng.standard_normal((n, extra_dims))])
        blocks.append(block @ random_orthogonal(d, rng).T)
    return SampleTable.from_groups(*blocks)


def gen_product_pair(n: int, seed: int = 0) -> SampleTable:
    """Y2 = Y1 * eps elementwise: uncorrelated but dependent 5-d pair."""
    if n < 4:
        raise ValueError("n must be at least 4")
    rng = _rng(seed)
    y1 = rng.standard_normal((n, 5))
    eps = rng.standard_normal((n, 5))
    return SampleTable.from_groups(y1, y1 * eps)


def gen_data_a(n: int, d: int, seed: int = 0) -> SampleTable:
    """y1 ~ U[0,1] and y_i = y1**i for i = 2..d."""
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = _rng(seed)
    y1 = rng.uniform(0.0, 1.0, n)
    cols = [y1] + [y1**i for i in range(2, d + 1)]
    return SampleTable.from_groups(*cols)


def gen_data_b(n: int, d: int, seed: int = 0) -> SampleTable:
    """y2..yd ~ U[0,1] independent, y1 = mean(y2..yd)**2."""
    if d < 2:
        raise ValueError("d must be at least 2")
    rng = _rng(seed)
    rest = rng.uniform(0.0, 1.0, (n, d - 1))
    y1 = rest.mean(axis=1) ** 2
    return SampleTable.from_groups(y1, *rest.T)


def gen_xor(n: int, seed: int = 0) -> SampleTable:
    """Binary x1, x2 ~ Bernoulli(0.5) and y = x1 XOR x2."""
    if n < 4:
        raise ValueError("n must be at least 4")
    rng = _rng(seed)
    x = rng.integers(0, 2, size=(n, 2))
    y = np.bitwise_xor(x[:, 0], x[:, 1])
    return SampleTable.from_groups(x[:, 0], x[:, 1], y)


def gen_planted_subspace_outliers(n: int = 400, d: int = 12, n_outliers: int = 10,
                                  noise: float = 0.05, seed: int = 0):
    """Uniform noise columns plus one strongly dependent column pair.

    Inliers have column 1 close to a smooth function of column 0; the
    ``n_outliers`` planted points keep ordinary marginals in both columns
    but sit far from that curve, so they only stand out in the {0, 1}
    subspace. Returns ``(table, labels)`` with label 1 on planted rows.
    """
    if d < 2 or n_outliers >= n:
        raise ValueError("need d >= 2 and fewer outliers than rows")
    rng = _rng(seed)
    values = rng.uniform(0.0, 1.0, (n, d))
    x = values[:, 0]
    values[:, 1] = 0.5 + 0.4 * np.sin(2 * np.pi * x) + noise * rng.standard_normal(n)
    out = rng.choice(n, size=n_outliers, replace=False)
    curve = 0.5 + 0.4 * np.sin(2 * np.pi * x[out])
    # shift towards the centre so the marginal range of column 1 is kept
    values[out, 1] = curve + np.where(curve < 0.5, 0.35, -0.35)
    labels = np.zeros(n, dtype=int)
    labels[out] = 1
    return SampleTable(values, tuple((c,) for c in range(d))), labels
