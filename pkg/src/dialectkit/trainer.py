"""Training loop for the linear target-encoder adapter.

Runs the full recipe: seeded shuffling, batches of N prompt pairs, the three
losses combined per step, one AdamW update per batch with a cosine-annealed
per-epoch learning rate, epoch-end validation, and best-checkpoint selection
by lowest validation total (ties go to the earliest epoch).

The whole run is a pure function of (config, inputs): reductions are
fixed-order, the shuffle generator is seeded, so two runs produce
bit-identical histories and checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .adapter import LinearAdapter
from .losses import LossBreakdown
from .optim import NumericalError, OptimizerState, adamw_step, cosine_annealed_lr
from .store import AnchorSet, EmbeddingMatrix, EmbeddingStore, KIND_TEXT


class TrainingDataError(Exception):
    """Raised for inconsistent or incomplete training inputs."""


@dataclass(frozen=True)
class TrainerConfig:
    """All training hyperparameters; defaults follow the training recipe
    the method ships with (AdamW at 1e-4 over 30 epochs, batch 32, 1024
    reference anchors)."""

    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    epochs: int = 30
    batch_size: int = 32
    anchor_count: int = 1024
    kl_anchor_batch_size: int | None = None  # None = all anchors every step
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    temperature: float = 1.0
    use_image_anchors: bool = False
    seed: int = 0
    lr_min: float = 0.0
    allow_anchor_truncation: bool = False

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.weight_decay < 0 or self.lr_min < 0:
            raise ValueError("weight_decay and lr_min must be nonnegative")
        if min(self.epochs, self.batch_size, self.anchor_count) < 1:
            raise ValueError("epochs, batch_size and anchor_count must be >= 1")
        if self.kl_anchor_batch_size is not None and self.kl_anchor_batch_size < 1:
            raise ValueError("kl_anchor_batch_size must be >= 1 when set")
        if any(w < 0 for w in self.loss_weights):
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class PairEmbeddings:
    """Frozen-encoder embeddings of one prompt pair (and optional polysemy prompt)."""

    pair_id: str
    sae: np.ndarray
    dialect: np.ndarray
    polysemy: np.ndarray | None = None

    def __post_init__(self):
        for name in ("sae", "dialect", "polysemy"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=np.float64)
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise TrainingDataError(f"pair {self.pair_id}: bad {name} embedding")
            object.__setattr__(self, name, v)
        if self.sae.shape != self.dialect.shape or (
            self.polysemy is not None and self.polysemy.shape != self.sae.shape
        ):
            raise TrainingDataError(f"pair {self.pair_id}: embedding dims differ")


@dataclass(frozen=True)
class TrainingData:
    """Per-split pair embeddings."""

    train: tuple[PairEmbeddings, ...]
    val: tuple[PairEmbeddings, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "val", tuple(self.val))
        dims = {p.sae.shape[0] for p in self.train + self.val}
        if len(dims) > 1:
            raise TrainingDataError(f"mixed embedding dims {sorted(dims)}")

    @property
    def dim(self) -> int:
        return (self.train + self.val)[0].sae.shape[0]


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    train: LossBreakdown
    val: LossBreakdown


@dataclass(frozen=True)
class TrainResult:
    best_adapter: LinearAdapter
    best_epoch: int
    history: tuple[EpochRecord, ...]


HISTORY_HEADER = (
    "epoch,lr,train_dl,train_pc,train_kl,train_total,val_dl,val_pc,val_kl,val_total"
)


def history_csv(result: TrainResult) -> str:
    """Render the per-epoch history in the fixed CSV schema (full precision)."""
    lines = [HISTORY_HEADER]
    for rec in result.history:
        vals = [
            rec.train.l_dl, rec.train.l_pc, rec.train.l_kl, rec.train.total,
            rec.val.l_dl, rec.val.l_pc, rec.val.l_kl, rec.val.total,
        ]
        lines.append(",".join([str(rec.epoch), repr(float(rec.lr))] + [repr(float(v)) for v in vals]))
    return "\n".join(lines) + "\n"


def _prepare_anchors(anchors: AnchorSet, config: TrainerConfig) -> AnchorSet:
    if anchors.m < config.anchor_count:
        raise TrainingDataError(
            f"anchor set has {anchors.m} rows, config wants {config.anchor_count}"
        )
    if anchors.m == config.anchor_count:
        return anchors
    if not config.allow_anchor_truncation:
        raise TrainingDataError(
            f"anchor set has {anchors.m} rows but config wants {config.anchor_count}; "
            "set allow_anchor_truncation to use the first rows"
        )
    m = config.anchor_count
    caps = EmbeddingStore(
        EmbeddingMatrix(anchors.captions.matrix.rows[:m], KIND_TEXT),
        anchors.captions.ids[:m],
    )
    imgs = None
    if anchors.images is not None:
        imgs = EmbeddingStore(
            EmbeddingMatrix(anchors.images.matrix.rows[:m], anchors.images.matrix.kind),
            anchors.images.ids[:m],
        )
    return AnchorSet(caps, imgs)


def _batch_losses(
    adapter: LinearAdapter,
    pairs: list[PairEmbeddings] | tuple[PairEmbeddings, ...],
    anchors: AnchorSet,
    cache: np.ndarray,
    config: TrainerConfig,
    kl_rows: np.ndarray | None = None,
    want_grads: bool = True,
):
    """Loss breakdown over one batch of pairs, plus (dW, db) if requested.

    ``kl_rows`` selects the caption indices the KL term runs over this step;
    None means all of them.  A zero component weight skips that component.
    """
    w1, w2, w3 = config.loss_weights
    dw = np.zeros_like(adapter.w) if want_grads else None
    db = np.zeros_like(adapter.b) if want_grads else None

    def accumulate(weight, grad, inputs):
        if want_grads and weight:
            dw[...] += weight * (grad.T @ inputs)
            db[...] += weight * grad.sum(axis=0)

    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        l_dl = 0.0
        if w1 and pairs:
            xd = np.stack([p.dialect for p in pairs])
            fs = np.stack([p.sae for p in pairs])
            l_dl, g = losses.dialect_learning_loss(adapter.forward(xd), fs)
            accumulate(w1, g, xd)

        l_pc = 0.0
        poly = [p for p in pairs if p.polysemy is not None]
        if w2 and poly:
            xm = np.stack([p.polysemy for p in poly])
            l_pc, g = losses.polysemy_control_loss(adapter.forward(xm), xm)
            accumulate(w2, g, xm)

        l_kl = 0.0
        if w3:
            caps = anchors.captions.matrix.rows
            if kl_rows is not None:
                caps = caps[kl_rows]
                sub_cache = cache[kl_rows]
            else:
                sub_cache = cache
            l_kl, g = losses.kl_regularization_loss(
                adapter.forward(caps),
                sub_cache,
                anchors,
                use_images=config.use_image_anchors,
                temperature=config.temperature,
            )
            accumulate(w3, g, caps)

    for name, value in (("dialect", l_dl), ("polysemy", l_pc), ("kl", l_kl)):
        if not np.isfinite(value):
            raise NumericalError(f"non-finite {name} loss")
    breakdown = losses.total_loss(l_dl, l_pc, l_kl, config.loss_weights)
    return breakdown, dw, db


def evaluate_losses(
    adapter: LinearAdapter,
    pairs,
    anchors: AnchorSet,
    config: TrainerConfig,
    cache: np.ndarray | None = None,
) -> LossBreakdown:
    """Loss breakdown of an adapter over a full pair list and anchor set.

    The dialect term averages over all pairs, the polysemy term over the
    pairs that carry a polysemy embedding, and the KL term over every anchor
    caption regardless of the step-level anchor batching mode.
    """
    if cache is None:
        cache = losses.frozen_logit_cache(
            anchors, config.use_image_anchors, config.temperature
        )
    breakdown, _, _ = _batch_losses(
        adapter, tuple(pairs), anchors, cache, config, want_grads=False
    )
    return breakdown


def train(
    config: TrainerConfig,
    data: TrainingData,
    anchors: AnchorSet,
    val_anchors: AnchorSet | None = None,
) -> TrainResult:
    """Run the full training recipe and return the best checkpoint.

    ``val_anchors`` lets validation use its own reference bank (the recipe
    samples separate train/validation anchor pools); when omitted, the
    training anchors are reused.  Validation totals include all three
    components, mirroring the training objective.
    """
    if not data.train or not data.val:
        raise TrainingDataError("train and val splits must both be nonempty")
    anchors = _prepare_anchors(anchors, config)
    if anchors.dim != data.dim:
        raise TrainingDataError(
            f"anchor dim {anchors.dim} != pair embedding dim {data.dim}"
        )
    if config.use_image_anchors and anchors.images is None:
        raise TrainingDataError("config wants image anchors but the set has none")

    cache = losses.frozen_logit_cache(anchors, config.use_image_anchors, config.temperature)
    if val_anchors is not None:
        if config.use_image_anchors and val_anchors.images is None:
            raise TrainingDataError("validation anchor set lacks image rows")
        val_cache = losses.frozen_logit_cache(
            val_anchors, config.use_image_anchors, config.temperature
        )
    else:
        val_anchors, val_cache = anchors, cache

    rng = np.random.default_rng(config.seed)
    adapter = LinearAdapter(data.dim)
    state = OptimizerState.for_params({"w": adapter.w, "b": adapter.b})

    n = len(data.train)
    m = anchors.m
    kl_size = config.kl_anchor_batch_size
    if kl_size is not None:
        kl_size = min(kl_size, m)
    kl_order = np.arange(m)
    kl_cursor = m  # forces a reshuffle before first use

    history: list[EpochRecord] = []
    best_epoch = -1
    best_total = np.inf
    best_adapter = adapter.copy()

    for epoch in range(config.epochs):
        lr = cosine_annealed_lr(epoch, config.epochs, config.learning_rate, config.lr_min)
        perm = rng.permutation(n)
        sums = np.zeros(4)
        steps = 0
        for start in range(0, n, config.batch_size):
            batch = [data.train[i] for i in perm[start : start + config.batch_size]]
            kl_rows = None
            if kl_size is not None:
                if kl_cursor + kl_size > m:
                    kl_order = rng.permutation(m)
                    kl_cursor = 0
                kl_rows = kl_order[kl_cursor : kl_cursor + kl_size]
                kl_cursor += kl_size
            try:
                breakdown, dw, db = _batch_losses(
                    adapter, batch, anchors, cache, config, kl_rows=kl_rows
                )
            except NumericalError as e:
                raise NumericalError(f"{e} at epoch {epoch} step {steps}") from e
            adamw_step(
                {"w": adapter.w, "b": adapter.b},
                {"w": dw, "b": db},
                state,
                lr,
                beta1=config.beta1,
                beta2=config.beta2,
                epsilon=config.epsilon,
                weight_decay=config.weight_decay,
            )
            sums += (breakdown.l_dl, breakdown.l_pc, breakdown.l_kl, breakdown.total)
            steps += 1

        train_mean = losses.total_loss(
            sums[0] / steps, sums[1] / steps, sums[2] / steps, config.loss_weights
        )
        val_breakdown = evaluate_losses(adapter, data.val, val_anchors, config, val_cache)
        if not np.isfinite(val_breakdown.total):
            raise NumericalError(f"non-finite validation loss at epoch {epoch}")
        history.append(EpochRecord(epoch, lr, train_mean, val_breakdown))
        if val_breakdown.total < best_total:
            best_total = val_breakdown.total
            best_epoch = epoch
            best_adapter = adapter.copy()

    return TrainResult(best_adapter, best_epoch, tuple(history))


def assemble_training_data(store: EmbeddingStore, assignment) -> TrainingData:
    """Build per-split pair embeddings from a prompt store and a split assignment.

    The store names rows ``<pair_id>#sae``, ``<pair_id>#dialect`` and
    optionally ``<pair_id>#polysemy``.  Raises naming the first missing id.
    """
    buckets: dict[str, list[PairEmbeddings]] = {"train": [], "val": [], "test": []}
    for pair_id in sorted(assignment.mapping):
        split = assignment.mapping[pair_id]
        rows = {}
        for part in ("sae", "dialect"):
            key = f"{pair_id}#{part}"
            if key not in store:
                raise TrainingDataError(f"missing embedding id {key!r}")
            rows[part] = store.row(key)
        poly_key = f"{pair_id}#polysemy"
        poly = store.row(poly_key) if poly_key in store else None
        buckets[split].append(PairEmbeddings(pair_id, rows["sae"], rows["dialect"], poly))
    return TrainingData(tuple(buckets["train"]), tuple(buckets["val"]))


# ---------------------------------------------------------------------------
# Gradient checking


@dataclass(frozen=True)
class GradCheckResult:
    per_component: dict[str, float]
    max_rel_error: float


def _gradcheck_instance(dim: int, n_pairs: int, m_anchors: int, rng):
    """Random small instance: adapter off identity, frozen batches, anchors."""
    w = np.eye(dim) + 0.15 * rng.standard_normal((dim, dim)) / np.sqrt(dim)
    b = 0.05 * rng.standard_normal(dim)
    xd = rng.standard_normal((n_pairs, dim))
    fs = rng.standard_normal((n_pairs, dim))
    poly_count = max(1, n_pairs // 2)
    xm = rng.standard_normal((poly_count, dim))
    caps = rng.standard_normal((m_anchors, dim))
    imgs = caps + 0.5 * rng.standard_normal((m_anchors, dim))
    ids = tuple(f"a{i}" for i in range(m_anchors))
    anchors = AnchorSet(
        EmbeddingStore(EmbeddingMatrix(caps, "text"), ids),
        EmbeddingStore(EmbeddingMatrix(imgs, "image"), ids),
    )
    return w, b, xd, fs, xm, anchors


COMPONENT_WEIGHTS = {
    "dl": (1.0, 0.0, 0.0),
    "pc": (0.0, 1.0, 0.0),
    "kl_text": (0.0, 0.0, 1.0),
    "kl_image": (0.0, 0.0, 1.0),
    "combined": (1.0, 1.0, 1.0),
}


def finite_difference_gradcheck(
    dim: int = 8,
    n_pairs: int = 4,
    m_anchors: int = 6,
    seed: int = 7,
    step: float = 1e-5,
    components: tuple[str, ...] = ("dl", "pc", "kl_text", "kl_image", "combined"),
    temperature: float = 0.8,
    _corrupt: float = 0.0,
) -> GradCheckResult:
    """Compare analytic gradients of each loss against central differences.

    Perturbs every entry of W and b with step h and reports the maximum
    relative error per component.  Sizes are capped to keep the O(dim^2)
    perturbation sweep cheap.  ``_corrupt`` offsets the analytic gradient
    and exists only so detector tests can prove the check would fire.
    """
    if dim > 16 or n_pairs > 8 or m_anchors > 8:
        raise ValueError("gradcheck sizes capped at dim 16, 8 pairs, 8 anchors")
    rng = np.random.default_rng(seed)
    w0, b0, xd, fs, xm, anchors = _gradcheck_instance(dim, n_pairs, m_anchors, rng)

    results: dict[str, float] = {}
    for comp in components:
        weights = COMPONENT_WEIGHTS[comp]
        use_images = comp == "kl_image"
        config = TrainerConfig(
            loss_weights=weights,
            temperature=temperature,
            use_image_anchors=use_images,
            anchor_count=m_anchors,
        )
        cache = losses.frozen_logit_cache(anchors, use_images, temperature)
        pairs = [
            PairEmbeddings(
                f"p{i}", fs[i], xd[i], xm[i] if i < xm.shape[0] else None
            )
            for i in range(n_pairs)
        ]

        def loss_at(w, b):
            adapter = LinearAdapter(dim, w, b)
            breakdown, _, _ = _batch_losses(
                adapter, pairs, anchors, cache, config, want_grads=False
            )
            return breakdown.total

        adapter = LinearAdapter(dim, w0.copy(), b0.copy())
        _, dw, db = _batch_losses(adapter, pairs, anchors, cache, config)
        if _corrupt:
            dw = dw.copy()
            dw[0, 0] += _corrupt
        analytic = np.concatenate([dw.ravel(), db.ravel()])
        if not np.all(np.isfinite(analytic)):
            raise NumericalError("non-finite analytic gradient")

        fd = np.empty_like(analytic)
        theta = np.concatenate([w0.ravel(), b0.ravel()])
        for k in range(theta.size):
            plus = theta.copy()
            minus = theta.copy()
            plus[k] += step
            minus[k] -= step
            lp = loss_at(plus[: dim * dim].reshape(dim, dim), plus[dim * dim :])
            lm = loss_at(minus[: dim * dim].reshape(dim, dim), minus[dim * dim :])
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise NumericalError("non-finite loss during perturbation")
            fd[k] = (lp - lm) / (2.0 * step)

        scale = max(1.0, float(np.abs(analytic).max()))
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-6 * scale)
        results[comp] = float(np.max(np.abs(analytic - fd) / denom))

    return GradCheckResult(results, max(results.values()))


# ---------------------------------------------------------------------------
# Synthetic alignment task


def make_synthetic_alignment_task(
    dim: int = 32,
    n_pairs: int = 200,
    n_anchors: int = 64,
    seed: int = 1234,
    noise: float = 0.20,
    polysemy_every: int = 5,
    polysemy_feature_weight: float = 0.10,
    hard_anchor_count: int = 32,
    hard_anchor_weight: float = 0.8,
):
    """Build the self-contained training task used for convergence checks.

    The frozen standard-prompt embeddings live orthogonal to one shared
    "dialect feature" direction; each frozen dialect embedding is its partner
    unit-normalized after a ``noise`` kick along that direction, so an
    adapter can close the gap by suppressing the feature direction.  Polysemy
    embeddings and a subset of anchors carry deliberate components along the
    same direction, so over-suppressing it costs the regularizers.  The kick
    magnitude is sized so the gap is closable within the small per-step
    movement an Adam run at the default learning rate allows.  Returns
    (TrainingData, AnchorSet).
    """
    rng = np.random.default_rng(seed)
    u = rng.choice([-1.0, 1.0], size=dim) / np.sqrt(dim)

    def unit(v):
        return v / np.linalg.norm(v)

    def orthogonal_unit():
        g = rng.standard_normal(dim)
        g -= (g @ u) * u
        return unit(g)

    pairs = []
    for i in range(n_pairs):
        s = orthogonal_unit()
        d = unit(s + noise * u)
        poly = None
        if i % polysemy_every == 0:
            poly = unit(
                orthogonal_unit()
                + polysemy_feature_weight * rng.choice([-1.0, 1.0]) * u
            )
        pairs.append(PairEmbeddings(f"syn-{i:04d}", s, d, poly))

    order = rng.permutation(n_pairs)
    n_val = n_pairs // 10
    n_test = n_pairs // 10
    n_train = n_pairs - n_val - n_test
    train = tuple(pairs[i] for i in order[:n_train])
    val = tuple(pairs[i] for i in order[n_train : n_train + n_val])

    caps = np.empty((n_anchors, dim))
    for j in range(n_anchors):
        c = unit(rng.standard_normal(dim))
        if j >= n_anchors - hard_anchor_count:
            c = unit(c + hard_anchor_weight * rng.choice([-1.0, 1.0]) * u)
        caps[j] = c
    anchors = AnchorSet(
        EmbeddingStore(
            EmbeddingMatrix(caps, "text"), tuple(f"anchor-{j:03d}" for j in range(n_anchors))
        )
    )
    return TrainingData(train, val), anchors


def mean_pair_cosine(adapter: LinearAdapter, pairs) -> float:
    """Mean cos(adapter(dialect), frozen sae) over a pair list."""
    xd = np.stack([p.dialect for p in pairs])
    fs = np.stack([p.sae for p in pairs])
    t = adapter.forward(xd)
    num = np.einsum("ij,ij->i", t, fs)
    den = np.linalg.norm(t, axis=1) * np.linalg.norm(fs, axis=1)
    return float(np.mean(num / den))


def mean_anchor_cosine(adapter: LinearAdapter, anchors: AnchorSet) -> float:
    """Mean cos(adapter(caption), caption) over the anchor captions."""
    c = anchors.captions.matrix.rows
    t = adapter.forward(c)
    num = np.einsum("ij,ij->i", t, c)
    den = np.linalg.norm(t, axis=1) * np.linalg.norm(c, axis=1)
    return float(np.mean(num / den))
