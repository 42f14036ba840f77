"""Dense/sparse vector primitives and the deterministic random-number contract.

All arithmetic is 64-bit floating point.  Parameter vectors are plain 1-D
``numpy.float64`` arrays; :class:`SparseFeatures` holds one example's feature
pairs with 1-based indices (LibSVM convention), converted to 0-based exactly
once, at construction.  :class:`RandomSource` wraps numpy's Philox bit
generator (counter-based) so that identical seed + identical call sequence
reproduces identical output streams bit-exactly, and child streams for
parallel runs are derived from (seed, child_id) alone.
"""

from __future__ import annotations

import numpy as np


class DimensionMismatch(ValueError):
    """Operands disagree on the coordinate dimension."""


def as_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 array, validating its length."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


def zeros(dim: int) -> np.ndarray:
    return np.zeros(int(dim), dtype=np.float64)


class SparseFeatures:
    """One example's features as (index, value) pairs with 1-based indices.

    Indices are strictly increasing and >= 1; explicit zeros are dropped.
    """

    __slots__ = ("indices", "values", "idx0")

    def __init__(self, indices, values):
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-D and the same length")
        if idx.size and idx[0] < 1:
            raise ValueError("feature indices are 1-based; got index < 1")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise ValueError("feature indices must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        keep = val != 0.0
        if not keep.all():
            idx, val = idx[keep], val[keep]
        self.indices = idx
        self.values = val
        # The single 1-based -> 0-based conversion point.
        self.idx0 = idx - 1

    @classmethod
    def from_pairs(cls, pairs) -> "SparseFeatures":
        pairs = list(pairs)
        return cls([i for i, _ in pairs], [v for _, v in pairs])

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def max_index(self) -> int:
        return int(self.indices[-1]) if self.indices.size else 0

    def norm_sq(self) -> float:
        return float(np.dot(self.values, self.values))

    def to_dense(self, dim: int) -> np.ndarray:
        if self.max_index() > dim:
            raise DimensionMismatch(
                f"sparse index {self.max_index()} exceeds dimension {dim}")
        out = zeros(dim)
        out[self.idx0] = self.values
        return out

    def __len__(self) -> int:
        return int(self.indices.size)

    def __repr__(self) -> str:
        return f"SparseFeatures({self.pairs()!r})"


def dot(u, v: np.ndarray) -> float:
    """Inner product <u, v> for a dense or sparse left operand."""
    if isinstance(u, SparseFeatures):
        if u.max_index() > v.shape[0]:
            raise DimensionMismatch(
                f"sparse index {u.max_index()} exceeds dimension {v.shape[0]}")
        return float(np.dot(u.values, v[u.idx0]))
    u = np.asarray(u, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    return float(np.dot(u, v))


def axpy(alpha: float, u, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Return v + alpha*u; writes into ``out`` (may alias v) when given."""
    if out is None:
        out = v.copy()
    elif out is not v:
        np.copyto(out, v)
    if isinstance(u, SparseFeatures):
        if u.max_index() > v.shape[0]:
            raise DimensionMismatch(
                f"sparse index {u.max_index()} exceeds dimension {v.shape[0]}")
        out[u.idx0] += alpha * u.values
        return out
    u = np.asarray(u, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    out += alpha * u
    return out


def sq_norm(v: np.ndarray) -> float:
    """Squared Euclidean norm; equals dot(v, v) exactly."""
    return float(np.dot(v, v))


class RandomSource:
    """Seeded, replayable random stream.

    Backed by numpy's Philox generator (counter-based): a given (seed,
    spawn_key) pair plus a fixed call sequence yields a bit-identical output
    stream.  Parallel work forks children with :meth:`fork`; child streams
    are statistically independent and fully determined by (seed, child_id).
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in _spawn_key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def fork(self, child_id: int) -> "RandomSource":
        """Derive an independent child stream for run ``child_id``."""
        return RandomSource(self.seed, self.spawn_key + (int(child_id),))

    def draw_index(self, n: int) -> int:
        """Uniform 1-based index in {1..n}."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        return int(self._gen.integers(1, n + 1))

    def draw_indices(self, n: int, size: int) -> np.ndarray:
        """Batch of ``size`` uniform 1-based indices in {1..n}."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        return self._gen.integers(1, n + 1, size=size)

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def normals(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def sample_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct 0-based positions drawn uniformly from {0..n-1}."""
        if not 0 <= k <= n:
            raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
        return self._gen.permutation(n)[:k]

    def choice_weighted(self, probs: np.ndarray) -> int:
        """0-based index drawn with the given probabilities (must sum to 1)."""
        cum = np.cumsum(probs)
        u = self.uniform() * cum[-1]
        return int(np.searchsorted(cum, u, side="right").clip(0, len(probs) - 1))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, spawn_key={self.spawn_key})"


def draw_index(rng: RandomSource, n: int) -> int:
    """Uniform 1-based index in {1..n}, advancing ``rng`` deterministically."""
    return rng.draw_index(n)
