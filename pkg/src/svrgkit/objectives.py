"""Concrete finite-sum objectives: linear ERM, a two-layer softplus network,
and analytic quadratic instances for verification.

Every objective exposes the same surface: component count ``n``, parameter
dimension ``dim``, a smoothness constant ``smoothness`` (Lipschitz bound on
every component gradient), 1-based per-component value/gradient, the exact
full average, and snapshot caches for variance-reduced estimators.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .core import RandomSource, SparseFeatures, as_vector, sq_norm, zeros
from .dataio import Dataset
from .losses import LossKind, eval_loss, loss_smoothness, make_scalar_derivative


class SnapshotCache:
    """Frozen reference point for variance-reduced gradient estimators.

    ``mode`` is 'stored' when per-component gradients at the reference are
    reconstructible without touching the data again (linear ERM keeps the n
    scalar loss derivatives), and 'recompute' when they must be re-evaluated
    (pass accounting differs between the two).
    """

    def __init__(self, obj, x_ref, full_grad, value, residuals=None):
        self.obj = obj
        self.x_ref = x_ref.copy()
        self.full_grad = full_grad
        self.value = value
        self.residuals = residuals
        self.mode = "stored" if residuals is not None else "recompute"

    def ref_component_grad(self, i: int) -> np.ndarray:
        """Gradient of component i at the reference point."""
        if self.mode == "stored":
            return self.obj._grad_from_residual(self.residuals[i - 1], i,
                                                self.x_ref)
        return self.obj.component(i, self.x_ref)[1]


class FiniteSumObjective:
    """Base class fixing the finite-sum contract; subclasses fill in
    ``component`` and may override the batched paths for speed."""

    n: int
    dim: int
    smoothness: float

    def component(self, i: int, x: np.ndarray) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def component_value(self, i: int, x: np.ndarray) -> float:
        return self.component(i, x)[0]

    def full_value_and_gradient(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Exact average of component values/gradients (one data pass)."""
        if self.n == 0:
            raise ValueError("objective has no components")
        total = 0.0
        grad = zeros(self.dim)
        for i in range(1, self.n + 1):
            v, g = self.component(i, x)
            total += v
            grad += g
        return total / self.n, grad / self.n

    def batch_mean_grad(self, idx, x: np.ndarray) -> np.ndarray:
        """Mean gradient over 1-based component indices ``idx``."""
        grad = zeros(self.dim)
        for i in idx:
            grad += self.component(int(i), x)[1]
        return grad / len(idx)

    def build_snapshot(self, x: np.ndarray, mode: str = "auto") -> SnapshotCache:
        """Evaluate the full gradient at x and freeze it as a snapshot.

        ``mode='stored'`` is only available where reconstruction is exact
        and free (overridden by linear ERM); the default here recomputes.
        """
        if mode == "stored":
            raise ValueError(f"{type(self).__name__} has no stored-residual mode")
        value, grad = self.full_value_and_gradient(x)
        return SnapshotCache(self, x, grad, value)


class QuadraticObjective(FiniteSumObjective):
    """Components f_i(x) = a_i/2 ||x||^2 + <b_i, x>; analytic test bed."""

    def __init__(self, curvatures, offsets=None, dim: int = 1):
        self.curv = np.asarray(curvatures, dtype=np.float64)
        self.n = int(self.curv.size)
        self.dim = int(dim)
        if offsets is None:
            offsets = np.zeros((self.n, self.dim))
        self.offs = np.asarray(offsets, dtype=np.float64).reshape(self.n, self.dim)
        self.smoothness = float(np.abs(self.curv).max()) if self.n else 0.0

    def component(self, i, x):
        a, b = self.curv[i - 1], self.offs[i - 1]
        return 0.5 * a * sq_norm(x) + float(b @ x), a * x + b

    def full_value_and_gradient(self, x):
        if self.n == 0:
            raise ValueError("objective has no components")
        a_bar = self.curv.mean()
        b_bar = self.offs.mean(axis=0)
        return 0.5 * a_bar * sq_norm(x) + float(b_bar @ x), a_bar * x + b_bar


class ErmObjective(FiniteSumObjective):
    """l2-regularized linear ERM over a margin loss.

    Components are f_i(x) = loss(l_i <a_i, x>) + lam/2 ||x||^2.  The
    smoothness constant is the conservative per-component bound
    L_loss * max_i ||a_i||^2 + lam.  Features may be a Dataset (sparse) or a
    dense (n, d) matrix with a label vector.
    """

    def __init__(self, data, loss: LossKind, lam: float = 0.0, labels=None):
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        self.loss = loss
        self.lam = float(lam)
        self._deriv1 = make_scalar_derivative(loss)
        if isinstance(data, Dataset):
            if not data.binary:
                raise ValueError("linear ERM needs a binary dataset")
            if len(data) == 0:
                raise ValueError("empty dataset")
            self.dataset = data
            self.n = len(data)
            self.dim = data.dim
            self.labels = data.labels.astype(np.float64)
            self._X = sp.csr_matrix(
                (data.val, data.col_idx, data.indptr), shape=(self.n, self.dim))
            self._dense = None
            row_norms = np.asarray(self._X.multiply(self._X).sum(axis=1)).ravel()
        else:
            self.dataset = None
            self._dense = np.asarray(data, dtype=np.float64)
            if self._dense.ndim != 2 or self._dense.shape[0] == 0:
                raise ValueError("dense features must be a non-empty 2-D array")
            self.n, self.dim = self._dense.shape
            self.labels = np.asarray(labels, dtype=np.float64)
            if self.labels.shape != (self.n,):
                raise ValueError("labels must match the feature row count")
            self._X = None
            row_norms = (self._dense ** 2).sum(axis=1)
        self.max_row_norm_sq = float(row_norms.max())
        self.smoothness = loss_smoothness(loss) * self.max_row_norm_sq + self.lam

    # -- row access (0-based internals) ------------------------------------

    def _row_dot(self, i0: int, x: np.ndarray) -> float:
        if self._dense is not None:
            return float(self._dense[i0] @ x)
        lo, hi = self._X.indptr[i0], self._X.indptr[i0 + 1]
        return float(np.dot(self._X.data[lo:hi], x[self._X.indices[lo:hi]]))

    def _add_row(self, out: np.ndarray, i0: int, coef: float) -> None:
        if self._dense is not None:
            out += coef * self._dense[i0]
        else:
            lo, hi = self._X.indptr[i0], self._X.indptr[i0 + 1]
            out[self._X.indices[lo:hi]] += coef * self._X.data[lo:hi]

    def margins(self, x: np.ndarray) -> np.ndarray:
        prod = self._dense @ x if self._dense is not None else self._X @ x
        return self.labels * prod

    # -- finite-sum surface -------------------------------------------------

    def component(self, i: int, x: np.ndarray) -> tuple[float, np.ndarray]:
        if not 1 <= i <= self.n:
            raise IndexError(f"component index {i} out of range 1..{self.n}")
        t = self.labels[i - 1] * self._row_dot(i - 1, x)
        value, deriv = eval_loss(self.loss, t)
        grad = self.lam * x if self.lam else zeros(self.dim)
        if self.lam:
            value = value + 0.5 * self.lam * sq_norm(x)
        self._add_row(grad, i - 1, deriv * self.labels[i - 1])
        return value, grad

    def full_value_and_gradient(self, x):
        t = self.margins(x)
        values, derivs = eval_loss(self.loss, t)
        coefs = derivs * self.labels / self.n
        if self._dense is not None:
            grad = self._dense.T @ coefs
        else:
            grad = self._X.T @ coefs
        value = float(values.mean())
        if self.lam:
            grad = grad + self.lam * x
            value += 0.5 * self.lam * sq_norm(x)
        return value, grad

    def batch_mean_grad(self, idx, x):
        grad = self.lam * x if self.lam else zeros(self.dim)
        scale = 1.0 / len(idx)
        for i in idx:
            i0 = int(i) - 1
            label = self.labels[i0]
            deriv = self._deriv1(label * self._row_dot(i0, x))
            self._add_row(grad, i0, scale * deriv * label)
        return grad

    def build_snapshot(self, x, mode: str = "auto"):
        value, grad = self.full_value_and_gradient(x)
        if mode == "recompute":
            return SnapshotCache(self, x, grad, value)
        residuals = eval_loss(self.loss, self.margins(x)).derivative
        return SnapshotCache(self, x, grad, value, residuals=residuals)

    def _grad_from_residual(self, residual: float, i: int, x_ref):
        grad = self.lam * x_ref if self.lam else zeros(self.dim)
        self._add_row(grad, i - 1, residual * self.labels[i - 1])
        return grad

    def fused_svrg_estimator(self, cache: SnapshotCache, x, idx) -> np.ndarray:
        """mu + mean_i(grad_i(x) - grad_i(x_ref)) without per-row allocs."""
        if self.lam:
            est = cache.full_grad + self.lam * (x - cache.x_ref)
        else:
            est = cache.full_grad.copy()
        scale = 1.0 / len(idx)
        residuals = cache.residuals
        for i in idx:
            i0 = int(i) - 1
            label = self.labels[i0]
            deriv = self._deriv1(label * self._row_dot(i0, x))
            ref = (residuals[i0] if residuals is not None
                   else self._deriv1(label * self._row_dot(i0, cache.x_ref)))
            self._add_row(est, i0, scale * (deriv - ref) * label)
        return est

    def accuracy(self, x: np.ndarray) -> float:
        """Fraction of examples with sign(<a, x>) matching the label."""
        pred = np.where((self._dense @ x if self._dense is not None
                         else self._X @ x) >= 0, 1.0, -1.0)
        return float((pred == self.labels).mean())


def erm_smoothness(obj: ErmObjective) -> float:
    """Conservative Lipschitz bound L_loss * max_i ||a_i||^2 + lambda."""
    return obj.smoothness


class TwoLayerNet(FiniteSumObjective):
    """Two-layer softplus network with multiclass cross-entropy loss.

    First layer is dense by default; ``connectivity`` (hidden x fan_in,
    0-based input indices) restricts each hidden unit to a patch of inputs.
    Parameters are flattened as [W1, b1, W2, b2]; the l2 regularizer covers
    all parameters including biases.  No closed-form global smoothness
    exists; ``smoothness`` is user-supplied or probed empirically and is
    flagged as a heuristic via ``smoothness_is_estimate``.
    """

    def __init__(self, dataset: Dataset, hidden_dim: int = 64,
                 class_count: int = 10, connectivity=None, lam: float = 0.0,
                 smoothness: float | None = None):
        if dataset.binary:
            raise ValueError("network objective needs a multiclass dataset")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        if dataset.labels.size and dataset.labels.max() > class_count:
            raise ValueError("dataset labels exceed class_count")
        self.dataset = dataset
        self.n = len(dataset)
        self.input_dim = dataset.dim
        self.hidden_dim = int(hidden_dim)
        self.class_count = int(class_count)
        self.lam = float(lam)
        if connectivity is not None:
            connectivity = np.asarray(connectivity, dtype=np.int64)
            if connectivity.shape[0] != self.hidden_dim:
                raise ValueError("connectivity must have one row per hidden unit")
            if connectivity.min() < 0 or connectivity.max() >= self.input_dim:
                raise ValueError("connectivity indices out of input range")
        self.connectivity = connectivity
        self.fan_in = (self.input_dim if connectivity is None
                       else connectivity.shape[1])
        self.dim = (self.hidden_dim * (self.fan_in + 1)
                    + self.class_count * (self.hidden_dim + 1))
        self._smoothness = smoothness
        self.smoothness_is_estimate = False
        # flat layout offsets: [W1 | b1 | W2 | b2]
        h, f, c = self.hidden_dim, self.fan_in, self.class_count
        self._o_b1 = h * f
        self._o_w2 = self._o_b1 + h
        self._o_b2 = self._o_w2 + c * h

    @property
    def smoothness(self) -> float:
        if self._smoothness is None:
            raise ValueError(
                "network smoothness is not known in closed form; supply one "
                "or call estimate_smoothness()")
        return self._smoothness

    @smoothness.setter
    def smoothness(self, value: float):
        self._smoothness = float(value)
        self.smoothness_is_estimate = False

    def estimate_smoothness(self, trials: int, rng: RandomSource,
                            scale: float = 1.0, safety: float = 2.0) -> float:
        """Empirical Lipschitz estimate from random gradient-difference
        ratios, inflated by ``safety``; heuristic, not a guarantee."""
        worst = 0.0
        for _ in range(trials):
            i = rng.draw_index(self.n)
            x = scale * rng.normals(self.dim)
            y = x + scale * 0.1 * rng.normals(self.dim)
            gx = self.component(i, x)[1]
            gy = self.component(i, y)[1]
            dist = np.sqrt(sq_norm(x - y))
            if dist > 0:
                worst = max(worst, np.sqrt(sq_norm(gx - gy)) / dist)
        self._smoothness = safety * worst
        self.smoothness_is_estimate = True
        return self._smoothness

    def unpack(self, params: np.ndarray):
        h, f, c = self.hidden_dim, self.fan_in, self.class_count
        w1 = params[:self._o_b1].reshape(h, f)
        b1 = params[self._o_b1:self._o_w2]
        w2 = params[self._o_w2:self._o_b2].reshape(c, h)
        b2 = params[self._o_b2:]
        return w1, b1, w2, b2

    def component(self, i: int, params: np.ndarray) -> tuple[float, np.ndarray]:
        if not 1 <= i <= self.n:
            raise IndexError(f"component index {i} out of range 1..{self.n}")
        feats, label = self.dataset.example(i)
        return self.component_on(feats, label, params)

    def component_on(self, feats: SparseFeatures, label: int,
                     params: np.ndarray) -> tuple[float, np.ndarray]:
        """Loss and gradient for a single (features, class label) example."""
        if not 1 <= label <= self.class_count:
            raise ValueError(f"label {label} out of range 1..{self.class_count}")
        w1, b1, w2, b2 = self.unpack(params)
        x_in = feats.to_dense(self.input_dim)
        if self.connectivity is None:
            gathered = x_in
            z1 = w1 @ x_in + b1
        else:
            gathered = x_in[self.connectivity]          # (hidden, fan_in)
            z1 = (w1 * gathered).sum(axis=1) + b1
        a1 = np.logaddexp(0.0, z1)                      # softplus
        s1 = expit(z1)                                  # softplus derivative
        z2 = w2 @ a1 + b2
        zmax = z2.max()
        logsum = zmax + np.log(np.exp(z2 - zmax).sum())
        value = logsum - z2[label - 1]

        dz2 = np.exp(z2 - logsum)
        dz2[label - 1] -= 1.0
        da1 = w2.T @ dz2
        dz1 = da1 * s1

        grad = np.empty_like(params)
        gw1 = grad[:self._o_b1].reshape(self.hidden_dim, self.fan_in)
        if self.connectivity is None:
            np.outer(dz1, x_in, out=gw1)
        else:
            gw1[:] = dz1[:, None] * gathered
        grad[self._o_b1:self._o_w2] = dz1
        np.outer(dz2, a1, out=grad[self._o_w2:self._o_b2].reshape(
            self.class_count, self.hidden_dim))
        grad[self._o_b2:] = dz2
        if self.lam:
            value = value + 0.5 * self.lam * sq_norm(params)
            grad += self.lam * params
        return float(value), grad

    def predict(self, feats: SparseFeatures, params: np.ndarray) -> int:
        """1-based argmax class for one example."""
        w1, b1, w2, b2 = self.unpack(params)
        x_in = feats.to_dense(self.input_dim)
        if self.connectivity is None:
            z1 = w1 @ x_in + b1
        else:
            z1 = (w1 * x_in[self.connectivity]).sum(axis=1) + b1
        z2 = w2 @ np.logaddexp(0.0, z1) + b2
        return int(np.argmax(z2)) + 1

    def accuracy(self, params: np.ndarray) -> float:
        hits = sum(self.predict(self.dataset.features(i), params)
                   == int(self.dataset.labels[i - 1])
                   for i in range(1, self.n + 1))
        return hits / self.n


def net_component(net: TwoLayerNet, example, params) -> tuple[float, np.ndarray]:
    """Functional form of TwoLayerNet.component_on."""
    feats, label = example
    return net.component_on(feats, label, params)


def erm_component(obj: ErmObjective, i: int, x) -> tuple[float, np.ndarray]:
    """Functional form of ErmObjective.component."""
    return obj.component(i, as_vector(x, obj.dim))


def full_value_and_gradient(obj: FiniteSumObjective, x) -> tuple[float, np.ndarray]:
    """Exact finite-sum average at x; counts as one data pass."""
    return obj.full_value_and_gradient(np.asarray(x, dtype=np.float64))


def build_snapshot(obj: FiniteSumObjective, x, mode: str = "auto") -> SnapshotCache:
    """Functional form of FiniteSumObjective.build_snapshot."""
    return obj.build_snapshot(np.asarray(x, dtype=np.float64), mode=mode)


def make_synthetic(n: int, d: int, seed: int, loss: LossKind | None = None,
                   lam: float = 1e-3, normalize: bool = True,
                   mean_shift: float = 1.0, noise_scale: float = 0.5,
                   positive_fraction: float = 0.75) -> ErmObjective:
    """Deterministic synthetic ERM instance: Gaussian features, random +-1
    labels, sigmoid loss by default.

    The Gaussian has a nonzero mean along the first axis and the label coin
    is biased, so the landscape carries an order-one gradient and genuine
    loss curvature along the descent path from the origin; otherwise (zero
    mean, fair coin) every margin starts at the sigmoid's inflection point
    and desk-scale runs never leave the flat region.  Rows are scaled to
    unit norm so the smoothness constant is exactly L_loss + lam.
    """
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = RandomSource(seed)
    feats = noise_scale * rng.normals((n, d))
    feats[:, 0] += mean_shift
    if normalize:
        norms = np.linalg.norm(feats, axis=1)
        norms[norms == 0] = 1.0
        feats /= norms[:, None]
    labels = np.where(rng.uniforms(n) < positive_fraction, 1.0, -1.0)
    return ErmObjective(feats, loss or LossKind.sigmoid(), lam=lam, labels=labels)
