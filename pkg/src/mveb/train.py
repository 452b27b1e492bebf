"""Training loop, beta sweeps and metrics for the desk-scale harness.

One step: draw a two-view batch, embed both views (wiring-dependent),
estimate per-branch scores on the detached embeddings, assemble the loss,
push gradients through the encoder by hand, take an SGD step, then (in
momentum-target mode) EMA-update the target branch.

Wirings:
  symmetric        both views through the online encoder (weight sharing)
  momentum_target  alignment against the EMA target's view-2 embedding;
                   the view-2 entropy term still uses an online pass of
                   view 2 so it keeps training the parameters

Everything is deterministic given the config: rng streams are spawned from
the seed, and metrics lines are formatted with repr so two identical runs
produce bitwise-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .data import (
    GenConfig,
    ViewPairGenerator,
    embedding_spread,
    linear_probe,
    uniformity_metric,
)
from .encoder import EncoderModel, SgdOptimizer, TargetBranch, ema_update
from .entropy import entropy_surrogate, entropy_surrogate_grad
from .kernels import MEDIAN, VMF, KernelSpec
from .losses import (
    BaselineConfig,
    LossTerms,
    alignment,
    decorrelation_grads,
    decorrelation_loss,
    infonce_grads,
    infonce_loss,
    mveb_loss,
)
from .stein import SteinConfig, stein_estimate

__all__ = [
    "TrainConfig",
    "MetricsRecord",
    "TrainResult",
    "TrainingDiverged",
    "train",
    "beta_sweep",
    "format_metrics",
    "format_summary",
]

SYMMETRIC = "symmetric"
MOMENTUM_TARGET = "momentum_target"

MVEB = "mveb"
INFONCE = "infonce"
DECORRELATION = "decorrelation"

TRAIN_BANDWIDTH_FLOOR = 0.05  # keeps exp(1/delta) representable near collapse

EVAL_TRAIN_SIZE = 2048
EVAL_TEST_SIZE = 1024


def default_stein_config() -> SteinConfig:
    return SteinConfig(
        kernel=KernelSpec(
            family=VMF, bandwidth=None, bandwidth_mode=MEDIAN, bandwidth_floor=TRAIN_BANDWIDTH_FLOOR
        )
    )


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, detail: str):
        super().__init__(f"training diverged at step {step}: {detail}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    beta: float = 0.01
    batch_size: int = 256
    steps: int = 2000
    lr: float = 0.05
    sgd_momentum: float = 0.9
    weight_decay: float = 0.0
    wiring: str = SYMMETRIC
    ema_base: float = 0.996
    loss_kind: str = MVEB
    seed: int = 0
    embed_dim: int = 16
    hidden_dims: tuple[int, ...] = (64, 64)
    log_every: int = 100
    probe_every: int = 500
    stein: SteinConfig = field(default_factory=default_stein_config)
    data: GenConfig = field(default_factory=GenConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.wiring not in (SYMMETRIC, MOMENTUM_TARGET):
            raise ValueError(f"unknown wiring {self.wiring!r}")
        if self.loss_kind not in (MVEB, INFONCE, DECORRELATION):
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if not 0.0 <= self.ema_base <= 1.0:
            raise ValueError(f"ema_base must be in [0, 1], got {self.ema_base}")
        if self.log_every < 1 or self.probe_every < 1:
            raise ValueError("log_every and probe_every must be >= 1")
        if self.embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")


@dataclass(frozen=True)
class MetricsRecord:
    step: int
    loss_total: float
    alignment: float
    entropy_surr_1: float
    entropy_surr_2: float
    beta: float
    uniformity: float
    spread: float
    resolved_bandwidth_1: float | None
    resolved_bandwidth_2: float | None
    probe_accuracy: float | None

    FIELDS = (
        "step",
        "loss_total",
        "alignment",
        "entropy_surr_1",
        "entropy_surr_2",
        "beta",
        "uniformity",
        "spread",
        "resolved_bandwidth_1",
        "resolved_bandwidth_2",
        "probe_accuracy",
    )

    def to_line(self) -> str:
        return " ".join(f"{name}={_fmt(getattr(self, name))}" for name in self.FIELDS)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class TrainResult:
    model: EncoderModel
    target: TargetBranch | None
    records: list[MetricsRecord]

    @property
    def final(self) -> MetricsRecord:
        return self.records[-1]


def _loss_and_grads(cfg, z1, z2_align, z2_entropy):
    """Assemble the step's loss terms and embedding gradients.

    Returns (terms, bw1, bw2, dz1, dz2, dz2_entropy): dz2 is the gradient for
    a shared online view-2 pass (symmetric wiring), dz2_entropy the gradient
    for the online entropy-only pass (momentum-target wiring); each is None
    when that pass does not receive gradients.
    """
    M = z1.shape[0]
    if cfg.loss_kind == MVEB:
        if cfg.beta > 0:
            s1 = stein_estimate(z1, cfg.stein)
            s2 = stein_estimate(z2_entropy, cfg.stein)
            s1v, s2v, bw1, bw2 = s1.values, s2.values, s1.resolved_bandwidth, s2.resolved_bandwidth
        else:
            # entropy term inert at beta = 0; skip the estimator entirely
            s1v = np.zeros_like(z1)
            s2v = np.zeros_like(z2_entropy)
            bw1 = bw2 = None
        dz1 = -z2_align / M + 0.5 * cfg.beta * entropy_surrogate_grad(s1v, M)
        dz2_entropy = 0.5 * cfg.beta * entropy_surrogate_grad(s2v, M)
        if cfg.wiring == SYMMETRIC:
            # z2 plays both roles through the same pass
            terms = mveb_loss(z1, z2_align, s1v, s2v, cfg.beta)
            dz2 = -z1 / M + dz2_entropy
            return terms, bw1, bw2, dz1, dz2, None
        # alignment reads the target branch, the entropy term the online pass;
        # report exactly the scalar whose gradient is applied
        a = alignment(z1, z2_align)
        e1 = entropy_surrogate(z1, s1v).value
        e2 = entropy_surrogate(z2_entropy, s2v).value
        terms = LossTerms(
            alignment=a,
            entropy_surr_1=e1,
            entropy_surr_2=e2,
            total=-a + 0.5 * cfg.beta * (e1 + e2),
            beta=cfg.beta,
        )
        return terms, bw1, bw2, dz1, None, dz2_entropy

    if cfg.loss_kind == INFONCE:
        total = infonce_loss(z1, z2_align, cfg.baseline.temperature)
        dz1, dz2 = infonce_grads(z1, z2_align, cfg.baseline.temperature)
    else:
        total = decorrelation_loss(z1, z2_align, cfg.baseline.decorrelation_lambda)
        dz1, dz2 = decorrelation_grads(z1, z2_align, cfg.baseline.decorrelation_lambda)
    terms = LossTerms(
        alignment=alignment(z1, z2_align),
        entropy_surr_1=0.0,
        entropy_surr_2=0.0,
        total=total,
        beta=0.0,
    )
    if cfg.wiring == SYMMETRIC:
        return terms, None, None, dz1, dz2, None
    return terms, None, None, dz1, None, None


def train(cfg: TrainConfig) -> TrainResult:
    """Run the loop; raises TrainingDiverged on a non-finite loss.

    BLAS is pinned to one thread for the duration: the batch matrices are
    small enough that thread teams only add sync overhead, and a fixed thread
    count keeps the metrics stream bitwise-reproducible.
    """
    with threadpool_limits(limits=1):
        return _train_single_thread(cfg)


def _train_single_thread(cfg: TrainConfig) -> TrainResult:
    init_ss, batch_ss, eval_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    gen = ViewPairGenerator(cfg.data)
    batch_rng = np.random.default_rng(batch_ss)
    eval_rng = np.random.default_rng(eval_ss)

    dims = (cfg.data.input_dim, *cfg.hidden_dims, cfg.embed_dim)
    model = EncoderModel.init(dims, np.random.default_rng(init_ss))
    target = None
    if cfg.wiring == MOMENTUM_TARGET:
        target = TargetBranch(model=model.copy(), momentum=cfg.ema_base)
    opt = SgdOptimizer(lr=cfg.lr, momentum=cfg.sgd_momentum, weight_decay=cfg.weight_decay)

    eval_train = gen.batch(EVAL_TRAIN_SIZE, eval_rng)
    eval_test = gen.batch(EVAL_TEST_SIZE, eval_rng)

    def probe_accuracy() -> float:
        emb_train, _ = model.forward(eval_train.v1)
        emb_test, _ = model.forward(eval_test.v1)
        return linear_probe(emb_train, eval_train.labels, emb_test, eval_test.labels)

    records: list[MetricsRecord] = []
    for step in range(cfg.steps):
        batch = gen.batch(cfg.batch_size, batch_rng)
        z1, cache1 = model.forward(batch.v1)
        need_online_v2 = cfg.wiring == SYMMETRIC or (cfg.loss_kind == MVEB and cfg.beta > 0)
        if cfg.wiring == SYMMETRIC:
            z2, cache2 = model.forward(batch.v2)
            z2_align, z2_entropy = z2, z2
        else:
            z2_align, _ = target.model.forward(batch.v2)
            if need_online_v2:
                z2_entropy, cache2 = model.forward(batch.v2)
            else:
                z2_entropy, cache2 = z2_align, None
        if not (np.all(np.isfinite(z1)) and np.all(np.isfinite(z2_align)) and np.all(np.isfinite(z2_entropy))):
            raise TrainingDiverged(step, "non-finite embeddings")

        terms, bw1, bw2, dz1, dz2, dz2_entropy = _loss_and_grads(cfg, z1, z2_align, z2_entropy)
        if not math.isfinite(terms.total):
            raise TrainingDiverged(step, f"loss = {terms.total!r}")

        tape = model.backward(cache1, dz1)
        if dz2 is not None:
            tape.add_(model.backward(cache2, dz2))
        elif dz2_entropy is not None and cache2 is not None:
            tape.add_(model.backward(cache2, dz2_entropy))
        opt.step(model, tape)
        if target is not None:
            ema_update(target, model, step, cfg.steps)

        last = step == cfg.steps - 1
        if (step + 1) % cfg.log_every == 0 or last:
            probe = probe_accuracy() if ((step + 1) % cfg.probe_every == 0 or last) else None
            records.append(
                MetricsRecord(
                    step=step + 1,
                    loss_total=terms.total,
                    alignment=terms.alignment,
                    entropy_surr_1=terms.entropy_surr_1,
                    entropy_surr_2=terms.entropy_surr_2,
                    beta=terms.beta,
                    uniformity=uniformity_metric(z1),
                    spread=embedding_spread(z1),
                    resolved_bandwidth_1=bw1,
                    resolved_bandwidth_2=bw2,
                    probe_accuracy=probe,
                )
            )
    return TrainResult(model=model, target=target, records=records)


@dataclass(frozen=True)
class SweepRow:
    beta: float
    final: MetricsRecord


def beta_sweep(cfg: TrainConfig, betas) -> list[SweepRow]:
    """Train once per beta with the shared seed; duplicates yield identical rows."""
    betas = list(betas)
    if not betas:
        raise ValueError("betas must be nonempty")
    rows = []
    for b in betas:
        result = train(replace(cfg, beta=float(b)))
        rows.append(SweepRow(beta=float(b), final=result.final))
    return rows


def format_metrics(records) -> str:
    return "\n".join(r.to_line() for r in records)


def format_summary(records) -> str:
    """Delimiter-separated summary: header plus one row per record."""
    header = "\t".join(MetricsRecord.FIELDS)
    rows = ["\t".join(_fmt(getattr(r, name)) for name in MetricsRecord.FIELDS) for r in records]
    return "\n".join([header, *rows])
