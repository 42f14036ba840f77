"""Benchmark harness CLI.

Subcommands:

  train    run one configured optimizer and write a trace CSV
  tune     hyperparameter search: seeded train/validation split, per-lambda
           step-size selection at a fixed pass budget, lambda selection by
           validation accuracy, optional held-out test report
  verify   run the numerical invariant gate (estimator unbiasedness,
           variance bounds, smoothness, weight normalization, gradient
           finite-difference checks)
  flip     negate a random fraction of a LibSVM file's labels
  split    partition a LibSVM file into train/validation files
  synth    write a synthetic instance as a LibSVM file

Exit codes: 0 ok, 1 config error, 2 divergence, 3 every grid cell diverged,
4 verification failure.

Config files are JSON; every flag overrides its config key.  The effective
config is echoed into the trace file as '#' comments.  Trace files are
byte-reproducible for a fixed config and seed; measured wall times go to
stdout and enter the CSV only with --wall-clock.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RandomSource, sq_norm
from .dataio import (Dataset, LibsvmFormatError, flip_labels, parse_libsvm,
                     split, write_libsvm, write_trace)
from .losses import ALL_ERM_LOSSES, LossKind
from .objectives import ErmObjective, TwoLayerNet, make_synthetic
from .optim import (AdaGradRate, ConstantRate, DivergenceError,
                    PolynomialRate, RunResult, beta_weights,
                    default_svrg_params, epoch_end_weights, gd_run,
                    parse_rate, sgd_run, svrg_estimator, svrg_full_run,
                    svrg_simple_run)
from .verify import (epoch_variance_aggregate, exact_variance, fd_gradient,
                     smoothness_probe)

OPTIMIZERS = ("gd", "sgd", "svrg1", "svrg2", "svrg3", "svrg4")


class ConfigError(ValueError):
    """Bad configuration; maps to exit code 1."""


class AllDivergedError(RuntimeError):
    """Every cell of a tuning grid diverged; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """One training run, resolved from config file + flags."""

    dataset: str | None = None
    synthetic: dict | None = None
    objective: str = "erm"
    loss: str = "sigmoid"
    lam: float = 0.0
    flip_fraction: float = 0.0
    optimizer: str = "svrg1"
    batch_size: int | None = None
    passes: float | None = None
    epochs: int | None = None
    iterations: int | None = None
    steps: int | None = None
    m: str | int | None = None
    m0: int | None = None
    eta: float | None = None
    lr: str | None = None
    seed: int = 0
    accounting: str = "auto"
    smoothness: float | None = None
    eval_every: int | None = None
    net: dict = field(default_factory=dict)
    out: str | None = None
    wall_clock: bool = False

    def __post_init__(self):
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigError("exactly one of dataset / synthetic is required")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.objective not in ("erm", "net"):
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.accounting not in ("auto", "stored", "recompute"):
            raise ConfigError(f"unknown accounting mode {self.accounting!r}")
        if self.flip_fraction and not 0 <= self.flip_fraction <= 1:
            raise ConfigError("flip_fraction must be in [0,1]")
        if self.batch_size is None:
            self.batch_size = 16 if self.optimizer == "svrg4" else 100

    def effective(self) -> dict:
        """Run semantics for the trace header: everything that changes the
        numbers, nothing that doesn't (output location, wall-clock flag)."""
        out = {k: v for k, v in self.__dict__.items() if v not in (None, {})}
        out.pop("wall_clock", None)
        out.pop("out", None)
        return out


_CONFIG_KEYS = {
    "dataset", "synthetic", "objective", "loss", "lambda", "flip_fraction",
    "optimizer", "batch_size", "passes", "epochs", "iterations", "steps",
    "m", "m0", "eta", "lr", "seed", "accounting", "smoothness", "eval_every",
    "net", "out", "tune",
}


def load_config(args) -> tuple[RunConfig, dict]:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("dataset", "objective", "loss", "optimizer", "lr", "m",
                "accounting", "out"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            raw[key] = val
    for key in ("flip_fraction", "eta", "smoothness"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if getattr(args, "lam", None) is not None:
        raw["lambda"] = args.lam
    for key in ("batch_size", "epochs", "iterations", "steps", "seed", "m0",
                "eval_every"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = int(val)
    if getattr(args, "passes", None) is not None:
        raw["passes"] = float(args.passes)
    if getattr(args, "synthetic", None):
        n, d, seed = (int(v) for v in args.synthetic.split(","))
        raw["synthetic"] = {"n": n, "d": d, "seed": seed}
        raw.pop("dataset", None)
    tune = raw.pop("tune", {})
    raw["lam"] = raw.pop("lambda", raw.pop("lam", 0.0))
    wall = bool(getattr(args, "wall_clock", False))
    try:
        cfg = RunConfig(wall_clock=wall, **raw)
    except TypeError as e:
        raise ConfigError(str(e))
    return cfg, tune


def _parse_m(expr, n: int, b: int) -> int:
    """m may be an int or one of the expressions 'n', '2n', '5n/b', ..."""
    if expr is None:
        return n
    if isinstance(expr, (int, float)):
        return int(expr)
    text = str(expr).strip()
    if text.isdigit():
        return int(text)
    match = re.fullmatch(r"(\d*)n(/b)?", text)
    if not match:
        raise ConfigError(f"cannot parse m expression {expr!r}")
    coef = int(match.group(1)) if match.group(1) else 1
    m = coef * n / (b if match.group(2) else 1)
    return max(1, round(m))


def build_objective(cfg: RunConfig, rng: RandomSource):
    if cfg.synthetic is not None:
        spec = dict(cfg.synthetic)
        obj = make_synthetic(spec["n"], spec["d"], spec["seed"],
                             loss=LossKind.parse(cfg.loss), lam=cfg.lam)
        if cfg.flip_fraction:
            raise ConfigError("flip_fraction applies to dataset inputs only")
        return obj
    ds = parse_libsvm(cfg.dataset, binary=(cfg.objective == "erm"))
    if cfg.flip_fraction:
        ds = flip_labels(ds, cfg.flip_fraction, rng.fork(7))
    if cfg.objective == "erm":
        return ErmObjective(ds, LossKind.parse(cfg.loss), lam=cfg.lam)
    net_cfg = dict(cfg.net)
    net = TwoLayerNet(ds, hidden_dim=net_cfg.get("hidden", 64),
                      class_count=net_cfg.get("classes", ds.class_count()),
                      lam=cfg.lam, smoothness=cfg.smoothness)
    return net


def _objective_smoothness(cfg: RunConfig, obj, rng: RandomSource) -> float:
    if cfg.smoothness is not None:
        return cfg.smoothness
    if isinstance(obj, TwoLayerNet) and obj._smoothness is None:
        return obj.estimate_smoothness(200, rng.fork(13))
    return obj.smoothness


def run_configured(cfg: RunConfig) -> tuple[RunResult, dict]:
    """Dispatch one run; returns the result and schedule/metadata echo."""
    rng = RandomSource(cfg.seed)
    obj = build_objective(cfg, rng)
    n, b = obj.n, cfg.batch_size
    if cfg.optimizer != "gd" and b > n:
        raise ConfigError(f"batch_size {b} exceeds n={n}")
    lr = parse_rate(cfg.lr) if cfg.lr else None
    meta: dict = {"n": n, "dim": obj.dim, "batch_size": b}
    x0 = np.zeros(obj.dim)

    if cfg.optimizer == "gd":
        steps = cfg.steps or cfg.epochs or (round(cfg.passes) if cfg.passes
                                            else None)
        if not steps:
            raise ConfigError("gd needs steps/epochs/passes")
        L = _objective_smoothness(cfg, obj, rng)
        meta["step"] = cfg.eta or 1.0 / L
        result = gd_run(obj, x0, steps, step=cfg.eta)
    elif cfg.optimizer == "sgd":
        iters = cfg.iterations or (round(cfg.passes * n / b) if cfg.passes
                                   else None)
        if not iters:
            raise ConfigError("sgd needs iterations or passes")
        if lr is None:
            raise ConfigError("sgd needs an lr spec")
        result = sgd_run(obj, x0, iters, b, rng, lr,
                         eval_every=cfg.eval_every)
        meta["iterations"] = iters
    else:
        L = _objective_smoothness(cfg, obj, rng)
        default_m = "5n/b" if cfg.objective == "net" else "n"
        m = _parse_m(cfg.m if cfg.m is not None else default_m, n, b)
        schedule = default_svrg_params(n, L, m_override=m,
                                       m0_override=cfg.m0,
                                       eta_override=cfg.eta)
        meta.update(m=schedule.m, m0=schedule.m0, d_sub=schedule.d_sub,
                    eta=schedule.eta, theory_ok=schedule.theory_ok)
        per_epoch = 1.0 + schedule.m * b / n * (
            2.0 if cfg.accounting == "recompute" else 1.0)
        epochs = cfg.epochs or (max(1, int(cfg.passes // per_epoch))
                                if cfg.passes else None)
        if not epochs:
            raise ConfigError("svrg needs epochs or passes")
        meta["epochs"] = epochs
        if cfg.optimizer in ("svrg3", "svrg4"):
            if lr is None:
                lr = AdaGradRate(alpha=1.0 / L)
            elif not isinstance(lr, AdaGradRate):
                raise ConfigError(f"{cfg.optimizer} scales its estimator "
                                  "adaptively; lr must be adagrad:...")
        runner = svrg_simple_run if cfg.optimizer == "svrg1" else svrg_full_run
        result = runner(obj, x0, schedule, epochs, b, rng, lr=lr,
                        accounting=cfg.accounting,
                        eval_every_epochs=cfg.eval_every)
    return result, meta


def cmd_train(args) -> int:
    cfg, _ = load_config(args)
    t0 = time.perf_counter()
    result, meta = run_configured(cfg)
    wall = time.perf_counter() - t0
    if cfg.out:
        records = result.trace
        if not cfg.wall_clock:
            records = [type(r)(r.passes, r.objective, r.grad_norm_sq, 0.0,
                               r.epoch) for r in records]
        comments = ["config: " + json.dumps(cfg.effective(), sort_keys=True),
                    "schedule: " + json.dumps(meta, sort_keys=True)]
        write_trace(records, cfg.out, header_comments=comments)
    print(f"optimizer={cfg.optimizer} seed={cfg.seed}")
    print(f"final_objective={result.final_value!r}")
    print(f"final_grad_norm_sq={result.final_grad_norm_sq!r}")
    print(f"passes={result.passes!r} grad_evals={result.grad_evals}")
    print(f"wall_seconds={wall:.3f}")
    return 0


# ---------------------------------------------------------------------------
# tuning (steps I-IV)
# ---------------------------------------------------------------------------


@dataclass
class TuneCell:
    cell_id: int
    lam: float
    alpha: float
    beta: float | None
    final_objective: float = math.inf
    final_stationarity: float = math.inf
    diverged: bool = False
    val_accuracy: float | None = None


def _run_cell(payload: dict) -> dict:
    """Worker for one grid cell; payload is picklable."""
    ds_args = payload["data"]
    ds = parse_libsvm(ds_args["path"])
    if ds_args.get("rows") is not None:
        ds = ds.subset(np.asarray(ds_args["rows"]))
    obj = ErmObjective(ds, LossKind.parse(payload["loss"]),
                       lam=payload["lam"])
    beta = payload["beta"]
    if beta is None or beta == 0.0:
        lr = ConstantRate(payload["alpha"])
    else:
        lr = PolynomialRate(payload["alpha"], beta)
    rng = RandomSource(payload["seed"], tuple(payload["spawn"]))
    x0 = np.zeros(obj.dim)
    n, b = obj.n, payload["batch_size"]
    out: dict = {"cell_id": payload["cell_id"]}
    try:
        if payload["optimizer"] == "sgd":
            result = sgd_run(obj, x0, round(payload["passes"] * n / b), b,
                             rng, lr)
        else:
            sched = default_svrg_params(n, obj.smoothness,
                                        m_override=payload["m"])
            per_epoch = 1.0 + sched.m * b / n
            epochs = max(1, int(payload["passes"] // per_epoch))
            runner = (svrg_simple_run if payload["optimizer"] == "svrg1"
                      else svrg_full_run)
            result = runner(obj, x0, sched, epochs, b, rng, lr=lr)
        out["final_objective"] = result.final_value
        out["final_stationarity"] = result.final_grad_norm_sq
        out["x"] = result.output.tolist()
        out["diverged"] = False
    except DivergenceError:
        out["diverged"] = True
    return out


def select_step_winners(cells: list[TuneCell]) -> dict[float, "TuneCell"]:
    """Per-lambda winner: lowest training objective among non-diverged
    cells; ties break toward the smaller step size, then the smaller beta
    (cells are scanned in ascending (lambda, alpha, beta) order with a
    strict comparison, so the first of a tie wins)."""
    winners: dict[float, TuneCell] = {}
    order = sorted(cells, key=lambda c: (c.lam, c.alpha,
                                         -1.0 if c.beta is None else c.beta))
    for cell in order:
        if cell.diverged:
            continue
        cur = winners.get(cell.lam)
        if cur is None or cell.final_objective < cur.final_objective:
            winners[cell.lam] = cell
    return winners


def default_alpha_grid(L: float, count: int = 10, decades: float = 4.0,
                       ) -> list[float]:
    center = math.log10(1.0 / L)
    return list(np.logspace(center - decades / 2, center + decades / 2,
                            count))


def default_lambda_grid(count: int = 10, lo: float = 1e-6, hi: float = 1e-1,
                        ) -> list[float]:
    return list(np.logspace(math.log10(lo), math.log10(hi), count))


def cmd_tune(args) -> int:
    cfg, tune = load_config(args)
    if cfg.synthetic is not None or cfg.objective != "erm":
        raise ConfigError("tune drives LibSVM-backed linear ERM runs")
    rng = RandomSource(cfg.seed)
    full = parse_libsvm(cfg.dataset)
    if cfg.flip_fraction:
        # Flips hit the full training pool before the split.
        full = flip_labels(full, cfg.flip_fraction, rng.fork(7))
    train_fraction = tune.get("train_fraction", 0.8)
    train_rows, val_rows = _split_rows(len(full), train_fraction, rng.fork(0))
    train = full.subset(train_rows)
    passes = tune.get("passes", 50.0)
    b = min(cfg.batch_size, len(train))

    loss = LossKind.parse(cfg.loss)
    lambdas = tune.get("lambdas") or default_lambda_grid()
    probe_obj = ErmObjective(train, loss, lam=float(np.median(lambdas)))
    alphas = tune.get("alphas") or default_alpha_grid(probe_obj.smoothness)
    betas = (tune.get("betas") if tune.get("betas") is not None
             else ([round(0.1 * i, 1) for i in range(11)]
                   if cfg.optimizer == "sgd" else [None]))
    m = _parse_m(cfg.m if cfg.m is not None else "2n", len(train), b)

    cells: list[TuneCell] = []
    payloads = []
    cell_id = 0
    for lam in sorted(float(l) for l in lambdas):
        for alpha in sorted(float(a) for a in alphas):
            for beta in betas:
                cells.append(TuneCell(cell_id, lam, alpha, beta))
                payloads.append({
                    "cell_id": cell_id,
                    "data": {"path": str(cfg.dataset),
                             "rows": train_rows.tolist()},
                    "loss": cfg.loss, "lam": lam, "alpha": alpha,
                    "beta": beta, "optimizer": cfg.optimizer,
                    "batch_size": b, "passes": passes, "m": m,
                    "seed": cfg.seed, "spawn": (1, cell_id),
                })
                cell_id += 1

    results = {}
    if args.threads and args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            for out in pool.map(_run_cell, payloads):
                results[out["cell_id"]] = out
    else:
        for payload in payloads:
            out = _run_cell(payload)
            results[out["cell_id"]] = out
    xs = {}
    for cell in cells:
        out = results[cell.cell_id]
        cell.diverged = out["diverged"]
        if not cell.diverged:
            cell.final_objective = out["final_objective"]
            cell.final_stationarity = out["final_stationarity"]
            xs[cell.cell_id] = np.asarray(out["x"])
    if all(c.diverged for c in cells):
        raise AllDivergedError("every tuning cell diverged")

    validation = full.subset(val_rows)
    winners = select_step_winners(cells)
    for lam in sorted(winners):
        cell = winners[lam]
        val_obj = ErmObjective(validation, loss, lam=lam)
        cell.val_accuracy = val_obj.accuracy(xs[cell.cell_id])
    # accuracy decides lambda; ties break to the smaller step, then lambda
    chosen = min(winners.values(),
                 key=lambda c: (-c.val_accuracy, c.alpha, c.lam))

    # Step IV: held-out test report if a test file is configured.
    test_accuracy = None
    if tune.get("test_dataset"):
        test_ds = parse_libsvm(tune["test_dataset"])
        test_obj = ErmObjective(test_ds, loss, lam=chosen.lam)
        test_accuracy = test_obj.accuracy(xs[chosen.cell_id])

    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write("cell_id,lambda,alpha,beta,final_objective,"
                     "final_stationarity,diverged,val_accuracy\n")
            for c in cells:
                beta = "" if c.beta is None else repr(float(c.beta))
                acc = "" if c.val_accuracy is None else repr(c.val_accuracy)
                fh.write(f"{c.cell_id},{c.lam!r},{c.alpha!r},{beta},"
                         f"{c.final_objective!r},{c.final_stationarity!r},"
                         f"{int(c.diverged)},{acc}\n")
    print(f"cells={len(cells)} diverged={sum(c.diverged for c in cells)}")
    print(f"best lambda={chosen.lam!r} alpha={chosen.alpha!r} "
          f"beta={chosen.beta!r}")
    print(f"best final_objective={chosen.final_objective!r}")
    print(f"best val_accuracy={chosen.val_accuracy!r}")
    if test_accuracy is not None:
        print(f"test_accuracy={test_accuracy!r}")
    return 0


def _split_rows(n: int, train_fraction: float, rng: RandomSource,
                ) -> tuple[np.ndarray, np.ndarray]:
    from .dataio import round_half_up

    n_train = min(max(round_half_up(train_fraction * n), 1), n - 1)
    perm = rng.permutation(n)
    return perm[:n_train], perm[n_train:]


# ---------------------------------------------------------------------------
# verification gate
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


class _PerturbedGradObjective:
    """Fault-injection wrapper: gradients scaled, declared constant not."""

    def __init__(self, inner, factor: float):
        self._inner = inner
        self._factor = factor
        self.n = inner.n
        self.dim = inner.dim
        self.smoothness = inner.smoothness

    def component(self, i, x):
        v, g = self._inner.component(i, x)
        return v, self._factor * g


def run_verification(seed: int = 0, fault: str | None = None,
                     ) -> list[CheckResult]:
    rng = RandomSource(seed)
    checks: list[CheckResult] = []

    def record(name, passed, detail):
        checks.append(CheckResult(name, bool(passed), detail))

    # estimator unbiasedness over all singleton batches
    worst = 0.0
    for trial in range(10):
        obj = make_synthetic(rng.draw_index(40) + 5, rng.draw_index(8) + 1,
                             seed=trial, lam=1e-2)
        x = rng.normals(obj.dim)
        ref = rng.normals(obj.dim)
        cache = obj.build_snapshot(ref)
        avg = np.mean([svrg_estimator(cache, obj, x, [i])
                       for i in range(1, obj.n + 1)], axis=0)
        grad = obj.full_value_and_gradient(x)[1]
        worst = max(worst, np.sqrt(sq_norm(avg - grad) /
                                   max(sq_norm(grad), 1e-300)))
    record("estimator-unbiasedness", worst <= 1e-12, f"max rel err {worst:.2e}")

    # variance bound
    worst = -math.inf
    for trial in range(20):
        obj = make_synthetic(30, 6, seed=100 + trial, lam=1e-3)
        x, ref = rng.normals(6), rng.normals(6)
        var, bound = exact_variance(obj, x, ref)
        worst = max(worst, var - bound)
    record("variance-bound", worst <= 1e-9, f"max excess {worst:.2e}")

    # per-epoch aggregate variance bound along recorded runs (several
    # sub-epochs per epoch so the chained-distance bound is exercised)
    worst = -math.inf
    for trial in range(3):
        obj = make_synthetic(24, 4, seed=200 + trial, lam=1e-3)
        sched = default_svrg_params(obj.n, obj.smoothness, m0_override=6)
        res = svrg_simple_run(obj, np.zeros(obj.dim), sched, 1, 1,
                              RandomSource(trial), record_iterates=True)
        var, bound = epoch_variance_aggregate(obj, res.epoch_iterates[0],
                                              sched.m0)
        worst = max(worst, var - bound)
    record("epoch-variance-aggregate", worst <= 1e-6,
           f"max excess {worst:.2e}")

    # smoothness probes across losses (fault injection lands here)
    worst = -math.inf
    factor = 2.0 if fault == "sigmoid-scale" else 1.0
    for li, loss in enumerate(ALL_ERM_LOSSES):
        obj = make_synthetic(40, 6, seed=7, loss=loss, lam=1e-2)
        probed = obj if (factor == 1.0 or loss.name != "sigmoid") else \
            _PerturbedGradObjective(obj, factor)
        ratio = smoothness_probe(probed, 200, rng.fork(50 + li))
        worst = max(worst, ratio - obj.smoothness)
    record("component-smoothness", worst <= 1e-9, f"max excess {worst:.2e}")

    # sub-epoch weight bounds and stopping distribution normalization
    ok = True
    for m0 in range(1, 2001):
        betas = beta_weights(m0)
        if not (betas[0] == 1.0 and betas.min() >= 1.0 / math.e
                and betas.max() <= 1.0):
            ok = False
            break
    record("subepoch-weight-bounds", ok, "m0 in 1..2000")
    ok = True
    worst = 0.0
    for m0 in (1, 2, 3, 7, 64, 500):
        _, probs = epoch_end_weights(m0, beta_weights(m0))
        worst = max(worst, abs(probs.sum() - 1.0))
        ok = ok and probs.min() > 0
    record("stop-distribution-normalized", ok and worst <= 1e-12,
           f"max |sum-1| {worst:.2e}")

    # finite-difference gradient checks
    worst = 0.0
    for loss in ALL_ERM_LOSSES:
        obj = make_synthetic(15, 5, seed=11, loss=loss, lam=1e-2)
        for _ in range(3):
            x = rng.normals(5)
            grad = obj.full_value_and_gradient(x)[1]
            fd = fd_gradient(lambda p: obj.full_value_and_gradient(p)[0], x)
            worst = max(worst, np.sqrt(sq_norm(fd - grad))
                        / (1.0 + np.sqrt(sq_norm(grad))))
    record("gradient-fd-erm", worst <= 1e-5, f"max rel err {worst:.2e}")

    ds = Dataset([(list(zip(range(1, 4), rng.normals(3))), 1 + (i % 2))
                  for i in range(6)], binary=False)
    net = TwoLayerNet(ds, hidden_dim=4, class_count=2, lam=1e-2)
    worst = 0.0
    for _ in range(3):
        p = 0.5 * rng.normals(net.dim)
        grad = net.full_value_and_gradient(p)[1]
        fd = fd_gradient(lambda q: net.full_value_and_gradient(q)[0], p)
        worst = max(worst, np.sqrt(sq_norm(fd - grad))
                    / (1.0 + np.sqrt(sq_norm(grad))))
    record("gradient-fd-net", worst <= 1e-5, f"max rel err {worst:.2e}")

    return checks


def cmd_verify(args) -> int:
    checks = run_verification(seed=args.seed or 0, fault=args.inject_fault)
    failures = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    summary = {"checks": len(checks), "failures": [c.name for c in failures],
               "details": {c.name: c.detail for c in checks}}
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps({"checks": len(checks),
                      "failures": [c.name for c in failures]}))
    if failures:
        return 4
    return 0


# ---------------------------------------------------------------------------
# dataset utilities
# ---------------------------------------------------------------------------


def cmd_flip(args) -> int:
    if not args.out:
        raise ConfigError("flip needs --out")
    ds = parse_libsvm(args.dataset)
    out = flip_labels(ds, args.fraction, RandomSource(args.seed or 0))
    write_libsvm(out, args.out)
    print(f"wrote {args.out} ({len(out)} examples)")
    return 0


def cmd_split(args) -> int:
    ds = parse_libsvm(args.dataset)
    train, val = split(ds, args.train_fraction, RandomSource(args.seed or 0))
    write_libsvm(train, args.out_train)
    write_libsvm(val, args.out_validation)
    print(f"wrote {args.out_train} ({len(train)}) and "
          f"{args.out_validation} ({len(val)})")
    return 0


def cmd_synth(args) -> int:
    if not args.out:
        raise ConfigError("synth needs --out")
    obj = make_synthetic(args.n, args.d, args.seed or 0)
    examples = []
    for i in range(obj.n):
        pairs = [(j + 1, float(v)) for j, v in enumerate(obj._dense[i])
                 if v != 0.0]
        examples.append((pairs, int(obj.labels[i])))
    write_libsvm(Dataset(examples, dim=obj.dim), args.out)
    print(f"wrote {args.out} ({obj.n} examples, dim {obj.dim})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="svrgkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--threads", type=int, default=1)

    p_train = sub.add_parser("train", help="run one optimizer")
    add_common(p_train)
    p_train.add_argument("--dataset")
    p_train.add_argument("--synthetic", metavar="N,D,SEED")
    p_train.add_argument("--objective", choices=("erm", "net"))
    p_train.add_argument("--loss")
    p_train.add_argument("--lambda", dest="lam", type=float)
    p_train.add_argument("--flip-fraction", dest="flip_fraction", type=float)
    p_train.add_argument("--optimizer", choices=OPTIMIZERS)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--passes", type=float)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--iterations", type=int)
    p_train.add_argument("--steps", type=int)
    p_train.add_argument("--m")
    p_train.add_argument("--m0", type=int)
    p_train.add_argument("--eta", type=float)
    p_train.add_argument("--lr")
    p_train.add_argument("--accounting",
                         choices=("auto", "stored", "recompute"))
    p_train.add_argument("--smoothness", type=float)
    p_train.add_argument("--eval-every", dest="eval_every", type=int)
    p_train.add_argument("--wall-clock", dest="wall_clock",
                         action="store_true",
                         help="write measured wall times into the trace "
                              "(breaks byte-reproducibility)")
    p_train.set_defaults(func=cmd_train)

    p_tune = sub.add_parser("tune", help="steps I-IV hyperparameter search")
    add_common(p_tune)
    p_tune.add_argument("--dataset")
    p_tune.add_argument("--loss")
    p_tune.add_argument("--optimizer", choices=("sgd", "svrg1", "svrg2"))
    p_tune.add_argument("--batch-size", dest="batch_size", type=int)
    p_tune.add_argument("--flip-fraction", dest="flip_fraction", type=float)
    p_tune.add_argument("--m")
    p_tune.set_defaults(func=cmd_tune)

    p_verify = sub.add_parser("verify", help="numerical invariant gate")
    add_common(p_verify)
    p_verify.add_argument("--inject-fault", choices=("sigmoid-scale",),
                          help="deliberately break a check (gate self-test)")
    p_verify.set_defaults(func=cmd_verify)

    p_flip = sub.add_parser("flip", help="negate a fraction of labels")
    add_common(p_flip)
    p_flip.add_argument("dataset")
    p_flip.add_argument("--fraction", type=float, required=True)
    p_flip.set_defaults(func=cmd_flip)

    p_split = sub.add_parser("split", help="train/validation partition")
    add_common(p_split)
    p_split.add_argument("dataset")
    p_split.add_argument("--train-fraction", dest="train_fraction",
                         type=float, default=0.8)
    p_split.add_argument("--out-train", required=True)
    p_split.add_argument("--out-validation", required=True)
    p_split.set_defaults(func=cmd_split)

    p_synth = sub.add_parser("synth", help="write a synthetic LibSVM file")
    add_common(p_synth)
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--d", type=int, required=True)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, LibsvmFormatError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except DivergenceError as e:
        print(f"divergence: {e}", file=sys.stderr)
        return 2
    except AllDivergedError as e:
        print(f"grid failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
