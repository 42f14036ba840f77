"""LibSVM ingestion, label flipping, train/validation splits, trace CSV.

The two stable on-disk formats live here: LibSVM text lines
("label idx:val idx:val ...", indices 1-based strictly increasing) and the
trace CSV with header ``passes,objective,grad_norm_sq,wall_seconds,epoch``.
Floats are written with ``repr`` so a round trip through text is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import RandomSource, SparseFeatures

TRACE_HEADER = "passes,objective,grad_norm_sq,wall_seconds,epoch"


def bundled_dataset_path(name: str = "a9a_like_2000") -> Path:
    """Path of a sample dataset shipped with the package (tests/demos only;
    fetch full-size datasets from the LibSVM site yourself)."""
    path = resources.files("svrgkit").joinpath(f"data/{name}.libsvm")
    return Path(str(path))


class LibsvmFormatError(ValueError):
    """Malformed LibSVM input; message names the offending line."""


@dataclass
class TraceRecord:
    """One convergence checkpoint of an optimizer run."""

    passes: float
    objective: float
    grad_norm_sq: float
    wall_seconds: float
    epoch: int


class Dataset:
    """Labeled sparse examples backing a finite-sum objective.

    Binary datasets carry labels in {-1, +1}; multiclass ones in {1..C}.
    Feature storage is CSR-style (indptr/indices/values) with 0-based
    internal indices; per-example access returns 1-based SparseFeatures.
    """

    def __init__(self, examples, dim: int | None = None, binary: bool = True):
        examples = list(examples)
        indptr = [0]
        idx_parts, val_parts, labels = [], [], []
        max_idx = 0
        for feats, label in examples:
            if not isinstance(feats, SparseFeatures):
                feats = SparseFeatures.from_pairs(feats)
            idx_parts.append(feats.idx0)
            val_parts.append(feats.values)
            indptr.append(indptr[-1] + len(feats))
            max_idx = max(max_idx, feats.max_index())
            labels.append(int(label))
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.col_idx = (np.concatenate(idx_parts) if idx_parts
                        else np.empty(0, dtype=np.int64))
        self.val = (np.concatenate(val_parts) if val_parts
                    else np.empty(0, dtype=np.float64))
        self.labels = np.asarray(labels, dtype=np.int64)
        self.binary = bool(binary)
        if dim is None:
            dim = max_idx
        elif dim < max_idx:
            raise ValueError(f"dim {dim} below max feature index {max_idx}")
        self.dim = int(dim)
        self._check_labels()

    def _check_labels(self):
        if self.binary:
            if not np.all(np.isin(self.labels, (-1, 1))):
                raise ValueError("binary dataset labels must be in {-1,+1}")
        elif self.labels.size and self.labels.min() < 1:
            raise ValueError("multiclass labels must be >= 1")

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def n(self) -> int:
        return len(self)

    def features(self, i: int) -> SparseFeatures:
        """1-based example index -> that example's SparseFeatures."""
        lo, hi = self.indptr[i - 1], self.indptr[i]
        return SparseFeatures(self.col_idx[lo:hi] + 1, self.val[lo:hi])

    def example(self, i: int) -> tuple[SparseFeatures, int]:
        return self.features(i), int(self.labels[i - 1])

    def subset(self, rows0: np.ndarray) -> "Dataset":
        """New dataset from 0-based row positions, preserving dim/mode."""
        return Dataset(
            [(self.features(int(r) + 1), int(self.labels[r])) for r in rows0],
            dim=self.dim, binary=self.binary)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        """New dataset sharing this one's features but with new labels."""
        out = Dataset.__new__(Dataset)
        out.indptr, out.col_idx, out.val = self.indptr, self.col_idx, self.val
        out.labels = np.asarray(labels, dtype=np.int64)
        out.binary = self.binary
        out.dim = self.dim
        out._check_labels()
        return out

    def class_count(self) -> int:
        if self.binary:
            return 2
        return int(self.labels.max()) if self.labels.size else 0


def _parse_label(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise LibsvmFormatError(f"line {lineno}: unparsable label {tok!r}") from None


def _remap_labels(raw: list[float], binary: bool, label_map: dict | None,
                  ) -> list[int]:
    if label_map is not None:
        try:
            return [int(label_map[v]) for v in raw]
        except KeyError as e:
            raise LibsvmFormatError(f"label {e.args[0]!r} missing from label_map")
    distinct = sorted(set(raw))
    if binary:
        if set(distinct) <= {-1.0, 1.0}:
            return [int(v) for v in raw]
        if len(distinct) != 2:
            raise LibsvmFormatError(
                f"binary mode needs exactly 2 distinct labels, got {distinct}")
        # Two observed labels map to {-1,+1} by sort order.
        mapping = {distinct[0]: -1, distinct[1]: 1}
        return [mapping[v] for v in raw]
    if all(v == int(v) and v >= 1 for v in distinct):
        return [int(v) for v in raw]
    # Observed labels map to {1..C} by sort order.
    mapping = {v: c + 1 for c, v in enumerate(distinct)}
    return [mapping[v] for v in raw]


def parse_libsvm(source, binary: bool = True, label_map: dict | None = None,
                 dim: int | None = None) -> Dataset:
    """Parse LibSVM text (path, file object, or iterable of lines).

    Labels outside the declared mode's range are remapped by ``label_map``
    or, by default, by sort order of the distinct observed labels.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r") as fh:
            return parse_libsvm(fh, binary=binary, label_map=label_map, dim=dim)

    raw_labels: list[float] = []
    examples: list[tuple[SparseFeatures, int]] = []
    for lineno, line in enumerate(source, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        raw_labels.append(_parse_label(toks[0], lineno))
        indices, values = [], []
        prev = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise LibsvmFormatError(f"line {lineno}: malformed token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise LibsvmFormatError(
                    f"line {lineno}: malformed token {tok!r}") from None
            if idx < 1:
                raise LibsvmFormatError(f"line {lineno}: index {idx} < 1")
            if idx <= prev:
                raise LibsvmFormatError(
                    f"line {lineno}: indices not strictly increasing at {idx}")
            prev = idx
            indices.append(idx)
            values.append(val)
        examples.append((SparseFeatures(indices, values), 0))

    labels = _remap_labels(raw_labels, binary, label_map)
    examples = [(f, l) for (f, _), l in zip(examples, labels)]
    return Dataset(examples, dim=dim, binary=binary)


def write_libsvm(ds: Dataset, sink) -> None:
    """Write a dataset back out as LibSVM text."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w") as fh:
            write_libsvm(ds, fh)
            return
    for i in range(1, len(ds) + 1):
        feats, label = ds.example(i)
        parts = [f"{label:+d}" if ds.binary else str(label)]
        parts += [f"{idx}:{repr(val)}" for idx, val in feats.pairs()]
        sink.write(" ".join(parts) + "\n")


def round_half_up(x: float) -> int:
    """Platform-independent rounding for counts (0.5 always rounds up)."""
    return int(np.floor(x + 0.5))


def flip_labels(ds: Dataset, fraction: float, rng: RandomSource) -> Dataset:
    """Negate the labels of round(fraction*n) examples chosen uniformly.

    Binary datasets only; the input dataset is left unmodified.
    """
    if not ds.binary:
        raise ValueError("label flipping needs a binary dataset")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0,1], got {fraction}")
    k = round_half_up(fraction * len(ds))
    chosen = rng.sample_without_replacement(len(ds), k)
    labels = ds.labels.copy()
    labels[chosen] = -labels[chosen]
    return ds.with_labels(labels)


def split(ds: Dataset, train_fraction: float, rng: RandomSource,
          ) -> tuple[Dataset, Dataset]:
    """Random partition into (train, validation) of sizes round(f*n), rest."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0,1), got {train_fraction}")
    if len(ds) < 2:
        raise ValueError("need at least 2 examples to split")
    n_train = round_half_up(train_fraction * len(ds))
    n_train = min(max(n_train, 1), len(ds) - 1)
    perm = rng.permutation(len(ds))
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


def write_trace(records, sink, header_comments: list[str] | None = None) -> None:
    """Emit trace CSV; raises if the passes column is not non-decreasing."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w") as fh:
            write_trace(records, fh, header_comments)
            return
    records = list(records)
    passes = [r.passes for r in records]
    if any(b < a for a, b in zip(passes, passes[1:])):
        raise ValueError("trace passes column must be non-decreasing")
    for line in header_comments or ():
        sink.write(f"# {line}\n")
    sink.write(TRACE_HEADER + "\n")
    for r in records:
        sink.write(f"{r.passes!r},{r.objective!r},{r.grad_norm_sq!r},"
                   f"{r.wall_seconds!r},{r.epoch}\n")


def read_trace(source) -> list[TraceRecord]:
    """Parse a trace CSV produced by :func:`write_trace`."""
    if isinstance(source, (str, Path)):
        with open(source, "r") as fh:
            return read_trace(fh)
    records = []
    saw_header = False
    for line in source:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not saw_header:
            if line != TRACE_HEADER:
                raise ValueError(f"unexpected trace header {line!r}")
            saw_header = True
            continue
        p, o, g, w, e = line.split(",")
        records.append(TraceRecord(float(p), float(o), float(g), float(w), int(e)))
    return records
