"""Optimization algorithms for finite-sum objectives.

Implements plain gradient descent, mini-batch SGD with constant/polynomial/
AdaGrad learning rates, and two variance-reduced runners:

* :func:`svrg_simple_run` - epochs of m inner iterations; each epoch's
  snapshot and starting point is the previous epoch's last iterate; the
  returned point is drawn uniformly from all post-update iterates.
* :func:`svrg_full_run` - additionally draws a weighted stopping index
  m_s in {m-m0+1..m} at each epoch end (weights built from the geometric
  sub-epoch coefficients), restarts the next epoch from that iterate, and
  returns a uniform draw from the union of all eligible iterates
  {x_0..x_{m_s-1}} across epochs, realized by reservoir sampling so no
  iterate history is kept.

Per-epoch RNG consumption order is fixed (component indices, reservoir
uniforms, stopping draw, late-iterate reservoir uniforms), so a run is a
pure function of (objective, config, seed).

Pass accounting follows the stored-snapshot convention: a snapshot costs 1
pass and an inner iteration with batch b costs b/n passes when reference
gradients are reconstructed from cached residuals, or 2b/n when they are
recomputed.  Exact-evaluation checkpoints requested beyond the free
snapshot ones are charged honestly.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import RandomSource, sq_norm
from .dataio import TraceRecord
from .objectives import FiniteSumObjective, SnapshotCache

log = logging.getLogger(__name__)

# Objective blow-up factor treated as divergence.
_DIVERGE_FACTOR = 1e12
# Iterations between cheap non-finite guards inside hot loops.
_GUARD_STRIDE = 256


class DivergenceError(RuntimeError):
    """A run produced a non-finite or exploding objective/iterate."""


# ---------------------------------------------------------------------------
# schedules and learning rates
# ---------------------------------------------------------------------------


def beta_weights(m0: int) -> np.ndarray:
    """Geometric sub-epoch weights [1, r^-1, ..., r^-(m0-1)], r = 1 + 1/m0.

    Every entry lies in [1/e, 1].
    """
    if m0 < 1:
        raise ValueError(f"need m0 >= 1, got {m0}")
    if m0 == 1:
        return np.ones(1)
    # cumprod of the constant ratio; error stays ~m0*eps, far inside the
    # tolerances used anywhere downstream, and is ~5x faster than power().
    out = np.empty(m0)
    out[0] = 1.0
    out[1:] = np.cumprod(np.full(m0 - 1, 1.0 / (1.0 + 1.0 / m0)))
    return out


def epoch_end_weights(m0: int, betas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw weights and probabilities for the epoch-end stopping draw.

    Entry j corresponds to stopping at iterate m - j: weight for j=0 is
    betas[m0-1]; for j >= 1 it is (10/9) * (betas[m0-j] + ... + betas[m0-1]).
    """
    betas = np.asarray(betas, dtype=np.float64)
    if betas.shape != (m0,):
        raise ValueError(f"betas length {betas.shape} does not match m0={m0}")
    weights = np.empty(m0)
    weights[0] = betas[m0 - 1]
    if m0 > 1:
        suffix = np.cumsum(betas[::-1])  # suffix[j-1] = sum of last j betas
        weights[1:] = (10.0 / 9.0) * suffix[: m0 - 1]
    probs = weights / weights.sum()
    return weights, probs


@dataclass
class SvrgSchedule:
    """Epoch geometry and step length for the variance-reduced runners."""

    m: int
    m0: int
    d_sub: int
    eta: float
    betas: np.ndarray
    end_weights: np.ndarray
    end_probs: np.ndarray
    theory_ok: bool

    def __post_init__(self):
        if self.m < 1 or self.m0 < 1:
            raise ValueError("m and m0 must be >= 1")
        if self.d_sub * self.m0 != self.m:
            raise ValueError(
                f"d_sub*m0 must equal m ({self.d_sub}*{self.m0} != {self.m})")
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"step length must be positive, got {self.eta}")


def _smallest_cube_ge(v: int) -> int:
    c = max(1, round(v ** (1.0 / 3.0)))
    while c ** 3 >= v:
        c -= 1
    while c ** 3 < v:
        c += 1
    return c


def default_svrg_params(n: int, L: float, m_override: int | None = None,
                        m0_override: int | None = None,
                        eta_override: float | None = None,
                        theory_constant: int = 54) -> SvrgSchedule:
    """Theory-default schedule: m = n, smallest m0 with m0^3 >= C m^2,
    eta = 1/(m0*L); m is rounded up so m0 divides it.

    C defaults to the formal-proof constant 54; the looser sketch value 12
    yields shorter sub-epochs (larger step) and is selectable for speedup
    experiments.  For tiny m the cube condition cannot hold below m; then
    m0 is clamped to m (one sub-epoch) and ``theory_ok`` is False.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not (L > 0 and math.isfinite(L)):
        raise ValueError(f"smoothness constant must be positive and finite, "
                         f"got {L} (all-zero features or empty data?)")
    m = int(m_override) if m_override else int(n)
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if m0_override:
        m0 = int(m0_override)
        d = -(-m // m0)
        m = d * m0
        theory_ok = m0 ** 3 >= theory_constant * m * m
    else:
        m0_star = _smallest_cube_ge(theory_constant * m * m)
        if m0_star >= m:
            m0, d, theory_ok = m, 1, False
            log.warning(
                "m=%d too small for the sub-epoch cube condition; clamping "
                "m0=m (single sub-epoch, theory_ok=False)", m)
        else:
            d = m // m0_star
            m0 = -(-m // d)
            m = d * m0
            theory_ok = m0 ** 3 >= theory_constant * m * m
    eta = float(eta_override) if eta_override else 1.0 / (m0 * L)
    betas = beta_weights(m0)
    weights, probs = epoch_end_weights(m0, betas)
    return SvrgSchedule(m, m0, d, eta, betas, weights, probs, theory_ok)


@dataclass(frozen=True)
class ConstantRate:
    eta: float

    def value(self, k: int, n: int) -> float:
        return self.eta


@dataclass(frozen=True)
class PolynomialRate:
    """eta_k = alpha * (1 + k/n)^(-beta) with beta >= 0 (decaying).

    ``grow=True`` flips the exponent sign for experimentation.
    """

    alpha: float
    beta: float
    grow: bool = False

    def value(self, k: int, n: int) -> float:
        expo = self.beta if self.grow else -self.beta
        return self.alpha * (1.0 + k / n) ** expo


@dataclass(frozen=True)
class AdaGradRate:
    """Per-coordinate adaptive scaling; delta guards the first divisions."""

    alpha: float
    delta: float = 1e-8


class AdaGradState:
    """Running sum of squared gradients, one cell per coordinate."""

    def __init__(self, dim: int | None = None):
        self.acc = np.zeros(dim) if dim is not None else None


def adagrad_step(state: AdaGradState, g: np.ndarray, alpha: float,
                 delta: float = 1e-8) -> np.ndarray:
    """Accumulate g*g into the state and return alpha*g/sqrt(acc + delta)."""
    if state.acc is None:
        state.acc = np.zeros_like(g)
    if state.acc.shape != g.shape:
        raise ValueError(f"accumulator shape {state.acc.shape} does not match "
                         f"gradient shape {g.shape}")
    state.acc += g * g
    denom = np.sqrt(state.acc + delta)
    denom[denom == 0.0] = 1.0
    return alpha * g / denom


def parse_rate(text: str):
    """Parse 'constant:ETA', 'poly:ALPHA,BETA[,grow]', 'adagrad:ALPHA[,DELTA]'."""
    name, _, args = text.strip().partition(":")
    parts = [p for p in args.split(",") if p] if args else []
    if name == "constant":
        (eta,) = parts
        return ConstantRate(float(eta))
    if name == "poly":
        grow = False
        if parts and parts[-1] == "grow":
            grow = True
            parts = parts[:-1]
        alpha, beta = parts
        return PolynomialRate(float(alpha), float(beta), grow=grow)
    if name == "adagrad":
        alpha = float(parts[0])
        delta = float(parts[1]) if len(parts) > 1 else 1e-8
        return AdaGradRate(alpha, delta)
    raise ValueError(f"unknown learning-rate spec {text!r}")


# ---------------------------------------------------------------------------
# run results
# ---------------------------------------------------------------------------


@dataclass
class ProbeSample:
    """One oracle measurement of the exact squared gradient norm."""

    epoch: int
    k: int
    grad_norm_sq: float
    evals: int            # component evaluations spent when the point existed
    eligible: bool = True


@dataclass
class RunResult:
    """Outcome of one optimizer run."""

    output: np.ndarray
    trace: list[TraceRecord]
    grad_evals: int
    seed: int
    final_value: float = math.nan
    final_grad_norm_sq: float = math.nan
    probe_evals: int = 0
    probe_samples: list[ProbeSample] = field(default_factory=list)
    epoch_stops: list[int] = field(default_factory=list)
    evals_to_target: int | None = None
    epoch_iterates: list[np.ndarray] | None = None
    round_values: list[float] | None = None

    @property
    def passes(self) -> float:
        return self.trace[-1].passes if self.trace else 0.0

    def stationarity(self) -> float:
        """Mean exact squared gradient norm over eligible probed iterates."""
        vals = [s.grad_norm_sq for s in self.probe_samples if s.eligible]
        if not vals:
            raise ValueError("run was not probed; pass probe_stride")
        return float(np.mean(vals))


class _Reservoir:
    """Size-1 uniform reservoir over a stream of vectors."""

    def __init__(self):
        self.count = 0
        self.pick = None

    def feed(self, x: np.ndarray, u: float):
        self.count += 1
        if u * self.count < 1.0:
            self.pick = x.copy()


def _check_finite_value(value: float, initial: float, where: str,
                        grad_norm_sq: float = 0.0):
    if not math.isfinite(value) or abs(value) > _DIVERGE_FACTOR * max(
            1.0, abs(initial)):
        raise DivergenceError(
            f"objective {value!r} at {where} (initial {initial!r})")
    if not math.isfinite(grad_norm_sq):
        raise DivergenceError(f"gradient norm {grad_norm_sq!r} at {where}")


# ---------------------------------------------------------------------------
# SVRG runners
# ---------------------------------------------------------------------------


def _generic_estimator(cache: SnapshotCache, obj, x, batch) -> np.ndarray:
    est = cache.full_grad.copy()
    inv = 1.0 / len(batch)
    for i in batch:
        est += inv * (obj.component(int(i), x)[1]
                      - cache.ref_component_grad(int(i)))
    return est


def _resolve_estimator(cache: SnapshotCache, obj):
    fused = getattr(obj, "fused_svrg_estimator", None)
    if fused is not None and cache.obj is obj:
        return fused
    return lambda c, x, batch: _generic_estimator(c, obj, x, batch)


def svrg_estimator(cache: SnapshotCache, obj: FiniteSumObjective,
                   x: np.ndarray, batch) -> np.ndarray:
    """Variance-reduced gradient estimate at x for the given 1-based batch:
    full_grad(ref) + mean_i(grad_i(x) - grad_i(ref)).

    Averaged over all singleton batches this is exactly the full gradient.
    """
    batch = np.atleast_1d(np.asarray(batch, dtype=np.int64))
    if batch.size == 0:
        raise ValueError("batch must be non-empty")
    if batch.min() < 1 or batch.max() > obj.n:
        raise IndexError("batch index out of range")
    return _resolve_estimator(cache, obj)(cache, x, batch)


def draw_epoch_stop(rng: RandomSource, schedule: SvrgSchedule) -> int:
    """Weighted draw of the epoch stopping index m_s in {m-m0+1 .. m}."""
    j = rng.choice_weighted(schedule.end_probs)
    return schedule.m - j


def _svrg_engine(obj, x_start, schedule, epochs, batch_size, rng, lr=None,
                 variant="full", accounting="auto", probe_stride=None,
                 record_iterates=False, target_grad_sq=None,
                 eval_every_epochs=None) -> RunResult:
    if epochs < 1:
        raise ValueError("need at least one epoch")
    if not 1 <= batch_size <= obj.n:
        raise ValueError(f"batch size must be in 1..{obj.n}")
    if variant not in ("simple", "full"):
        raise ValueError(variant)
    adagrad = lr if isinstance(lr, AdaGradRate) else None
    ada_state = AdaGradState(obj.dim) if adagrad else None
    if record_iterates and (schedule.m + 1) * obj.dim > 1_000_000:
        raise ValueError("iterate recording is desk-scale only")

    m, m0, b = schedule.m, schedule.m0, batch_size
    n = obj.n
    x = np.array(x_start, dtype=np.float64)
    t0 = time.perf_counter()
    evals = 0
    probe_evals = 0
    trace: list[TraceRecord] = []
    probes: list[ProbeSample] = []
    stops: list[int] = []
    iterates: list[np.ndarray] | None = [] if record_iterates else None
    reservoir = _Reservoir()
    initial_value = None
    k_global = 0

    def exact_grad_sq(point) -> float:
        nonlocal probe_evals
        probe_evals += n
        return sq_norm(obj.full_value_and_gradient(point)[1])

    estimate = None
    for s in range(1, epochs + 1):
        cache = obj.build_snapshot(x, mode=accounting)
        evals += n
        if estimate is None:
            estimate = _resolve_estimator(cache, obj)
        if initial_value is None:
            initial_value = cache.value
        gns = sq_norm(cache.full_grad)
        _check_finite_value(cache.value, initial_value,
                            f"epoch {s} snapshot", gns)
        trace.append(TraceRecord(evals / n, cache.value, gns,
                                 time.perf_counter() - t0, s - 1))
        if target_grad_sq is not None and gns <= target_grad_sq:
            # The certifying evaluation is not part of producing the point.
            return _finish(obj, x, trace, evals, rng, reservoir, probes,
                           stops, iterates, probe_evals, t0,
                           evals_to_target=evals - n, final=(cache.value, gns))
        inner_cost = b if cache.mode == "stored" else 2 * b

        idx = rng.draw_indices(n, size=m * b).reshape(m, b)
        us = rng.uniforms((m - m0 + 1) if variant == "full" else m)
        ring = [None] * (m0 + 1) if variant == "full" else None
        epoch_rows = np.empty((m + 1, obj.dim)) if record_iterates else None

        for k in range(m):
            if variant == "full" and k <= m - m0:
                reservoir.feed(x, us[k])
            if ring is not None and k >= m - m0:
                ring[k - (m - m0)] = x.copy()
            if record_iterates:
                epoch_rows[k] = x
            if probe_stride and k % probe_stride == 0:
                g2 = gns if k == 0 else exact_grad_sq(x)
                probes.append(ProbeSample(s, k, g2, evals + k * inner_cost,
                                          eligible=(k <= m - m0)))
                if target_grad_sq is not None and g2 <= target_grad_sq:
                    return _finish(obj, x, trace, evals + k * inner_cost, rng,
                                   reservoir, probes, stops, iterates,
                                   probe_evals, t0,
                                   evals_to_target=evals + k * inner_cost)
            est = estimate(cache, x, idx[k])
            if adagrad:
                x -= adagrad_step(ada_state, est, adagrad.alpha, adagrad.delta)
            else:
                eta = schedule.eta if lr is None else lr.value(k_global, n)
                x -= eta * est
            if variant == "simple":
                reservoir.feed(x, us[k])
            k_global += 1
            if k % _GUARD_STRIDE == 0 and not np.all(np.isfinite(x)):
                raise DivergenceError(f"non-finite iterate at epoch {s}, k={k}")
        evals += m * inner_cost

        if record_iterates:
            epoch_rows[m] = x
            iterates.append(epoch_rows)

        if variant == "full":
            ring[m0] = x.copy()
            m_s = draw_epoch_stop(rng, schedule)
            stops.append(m_s)
            # Iterates past the always-eligible prefix join the reservoir
            # only up to the stopping index.
            n_late = m_s - (m - m0) - 1
            if n_late > 0:
                late_us = rng.uniforms(n_late)
                for j in range(n_late):
                    reservoir.feed(ring[j + 1], late_us[j])
            x = ring[m_s - (m - m0)].copy()

        if eval_every_epochs and s % eval_every_epochs == 0 and s < epochs:
            value, grad = obj.full_value_and_gradient(x)
            evals += n
            _check_finite_value(value, initial_value, f"epoch {s} checkpoint")
            trace.append(TraceRecord(evals / n, value, sq_norm(grad),
                                     time.perf_counter() - t0, s))

    return _finish(obj, x, trace, evals, rng, reservoir, probes, stops,
                   iterates, probe_evals, t0)


def _finish(obj, x, trace, evals, rng, reservoir, probes, stops, iterates,
            probe_evals, t0, evals_to_target=None, final=None) -> RunResult:
    if final is None:
        value, grad = obj.full_value_and_gradient(x)
        evals += obj.n
        gns = sq_norm(grad)
        epoch = trace[-1].epoch + 1 if trace else 0
        trace.append(TraceRecord(evals / obj.n, value, gns,
                                 time.perf_counter() - t0, epoch))
    else:
        value, gns = final
    output = reservoir.pick if reservoir.pick is not None else x.copy()
    return RunResult(output=output, trace=trace, grad_evals=evals,
                     seed=rng.seed, final_value=value, final_grad_norm_sq=gns,
                     probe_evals=probe_evals, probe_samples=probes,
                     epoch_stops=stops, evals_to_target=evals_to_target,
                     epoch_iterates=iterates)


def svrg_simple_run(obj, x_start, schedule: SvrgSchedule, epochs: int,
                    batch_size: int, rng: RandomSource, lr=None,
                    accounting: str = "auto", probe_stride=None,
                    record_iterates: bool = False, target_grad_sq=None,
                    eval_every_epochs=None) -> RunResult:
    """Variance-reduced epochs restarting at the last iterate; the returned
    point is uniform over all post-update iterates."""
    return _svrg_engine(obj, x_start, schedule, epochs, batch_size, rng,
                        lr=lr, variant="simple", accounting=accounting,
                        probe_stride=probe_stride,
                        record_iterates=record_iterates,
                        target_grad_sq=target_grad_sq,
                        eval_every_epochs=eval_every_epochs)


def svrg_full_run(obj, x_start, schedule: SvrgSchedule, epochs: int,
                  batch_size: int, rng: RandomSource, lr=None,
                  accounting: str = "auto", probe_stride=None,
                  record_iterates: bool = False, target_grad_sq=None,
                  eval_every_epochs=None) -> RunResult:
    """Variance-reduced epochs with the weighted epoch-end stopping draw and
    a uniform reservoir output over all eligible iterates."""
    return _svrg_engine(obj, x_start, schedule, epochs, batch_size, rng,
                        lr=lr, variant="full", accounting=accounting,
                        probe_stride=probe_stride,
                        record_iterates=record_iterates,
                        target_grad_sq=target_grad_sq,
                        eval_every_epochs=eval_every_epochs)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def gd_run(obj, x_start, steps: int, step: float | None = None,
           target_grad_sq: float | None = None) -> RunResult:
    """Deterministic full-gradient descent with fixed step 1/L by default.

    Each step costs one data pass.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    if step is None:
        step = 1.0 / obj.smoothness
    x = np.array(x_start, dtype=np.float64)
    t0 = time.perf_counter()
    evals = 0
    trace: list[TraceRecord] = []
    initial_value = None
    for k in range(steps):
        value, grad = obj.full_value_and_gradient(x)
        evals += obj.n
        if initial_value is None:
            initial_value = value
        gns = sq_norm(grad)
        _check_finite_value(value, initial_value, f"step {k}", gns)
        trace.append(TraceRecord(evals / obj.n, value, gns,
                                 time.perf_counter() - t0, k))
        if target_grad_sq is not None and gns <= target_grad_sq:
            return RunResult(output=x, trace=trace, grad_evals=evals, seed=0,
                             final_value=value, final_grad_norm_sq=gns,
                             evals_to_target=evals - obj.n)
        x = x - step * grad
    value, grad = obj.full_value_and_gradient(x)
    evals += obj.n
    _check_finite_value(value, initial_value, "final point")
    gns = sq_norm(grad)
    trace.append(TraceRecord(evals / obj.n, value, gns,
                             time.perf_counter() - t0, steps))
    return RunResult(output=x, trace=trace, grad_evals=evals, seed=0,
                     final_value=value, final_grad_norm_sq=gns)


def sgd_run(obj, x_start, iterations: int, batch_size: int, rng: RandomSource,
            lr, output: str = "final", eval_every: int | None = None,
            target_grad_sq: float | None = None) -> RunResult:
    """Mini-batch stochastic gradient descent.

    ``lr`` is a ConstantRate, PolynomialRate, or AdaGradRate.  Each
    iteration costs batch_size/n passes; exact-evaluation checkpoints
    (every ``eval_every`` iterations, plus the final one) cost one full
    pass each and are logged as such.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if not 1 <= batch_size <= obj.n:
        raise ValueError(f"batch size must be in 1..{obj.n}")
    if output not in ("final", "random"):
        raise ValueError(output)
    adagrad = lr if isinstance(lr, AdaGradRate) else None
    ada_state = AdaGradState(obj.dim) if adagrad else None
    n, b = obj.n, batch_size
    x = np.array(x_start, dtype=np.float64)
    t0 = time.perf_counter()
    evals = 0
    trace: list[TraceRecord] = []
    reservoir = _Reservoir()
    initial_value = None

    def checkpoint(k_done: int) -> tuple[float, float]:
        nonlocal evals, initial_value
        value, grad = obj.full_value_and_gradient(x)
        evals += n
        if initial_value is None:
            initial_value = value
        gns = sq_norm(grad)
        _check_finite_value(value, initial_value, f"iteration {k_done}", gns)
        trace.append(TraceRecord(evals / n, value, gns,
                                 time.perf_counter() - t0, k_done))
        return value, gns

    chunk = 8192
    for base in range(0, iterations, chunk):
        count = min(chunk, iterations - base)
        idx = rng.draw_indices(n, size=count * b).reshape(count, b)
        us = rng.uniforms(count) if output == "random" else None
        for j in range(count):
            k = base + j
            grad = obj.batch_mean_grad(idx[j], x)
            evals += b
            if adagrad:
                x -= adagrad_step(ada_state, grad, adagrad.alpha, adagrad.delta)
            else:
                x -= lr.value(k, n) * grad
            if output == "random":
                reservoir.feed(x, us[j])
            if k % _GUARD_STRIDE == 0 and not np.all(np.isfinite(x)):
                raise DivergenceError(f"non-finite iterate at iteration {k}")
            if eval_every and (k + 1) % eval_every == 0 and k + 1 < iterations:
                value, gns = checkpoint(k + 1)
                if target_grad_sq is not None and gns <= target_grad_sq:
                    out = reservoir.pick if output == "random" else x
                    return RunResult(output=out, trace=trace, grad_evals=evals,
                                     seed=rng.seed, final_value=value,
                                     final_grad_norm_sq=gns,
                                     evals_to_target=evals - n)
    value, gns = checkpoint(iterations)
    out = reservoir.pick if (output == "random" and reservoir.pick is not None
                             ) else x
    return RunResult(output=out, trace=trace, grad_evals=evals, seed=rng.seed,
                     final_value=value, final_grad_norm_sq=gns)


def grad_dominated_drive(obj, x_start, tau: float, rounds: int,
                         rng: RandomSource, batch_size: int = 1,
                         schedule: SvrgSchedule | None = None,
                         epochs_per_round: int | None = None) -> RunResult:
    """Restart driver for gradient-dominated objectives: repeated full SVRG
    runs, each seeded at the previous output, each round sized so the
    expected optimality gap halves.

    With f(x) - min f <= tau * ||grad f(x)||^2 everywhere, a round that
    drives the expected squared gradient norm below gap/(2*tau) halves the
    gap; the per-round epoch count follows from the 1/S stationarity decay
    with m0*L/m step normalization.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    if not tau > 0:
        raise ValueError("tau must be positive")
    if schedule is None:
        schedule = default_svrg_params(obj.n, obj.smoothness)
    if epochs_per_round is None:
        epochs_per_round = max(
            1, math.ceil(12.0 * tau * obj.smoothness * schedule.m0 / schedule.m))
    x = np.array(x_start, dtype=np.float64)
    trace: list[TraceRecord] = []
    evals = 0
    pass_base = 0.0
    round_values: list[float] = []
    result = None
    for r in range(rounds):
        result = svrg_full_run(obj, x, schedule, epochs_per_round, batch_size,
                               rng.fork(r))
        x = result.output
        for rec in result.trace:
            trace.append(TraceRecord(pass_base + rec.passes, rec.objective,
                                     rec.grad_norm_sq, rec.wall_seconds,
                                     len(round_values)))
        pass_base += result.trace[-1].passes
        evals += result.grad_evals
        round_values.append(result.final_value)
    return RunResult(output=x, trace=trace, grad_evals=evals, seed=rng.seed,
                     final_value=result.final_value,
                     final_grad_norm_sq=result.final_grad_norm_sq,
                     round_values=round_values)
