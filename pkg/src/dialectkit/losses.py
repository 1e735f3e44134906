"""Differentiable loss kernels for encoder-alignment training.

Three losses shape the trainable encoder's output space:

* dialect learning   -- pull the embedding of each dialect prompt toward the
  frozen embedding of its synonymous standard prompt (cosine distance).
* polysemy control   -- keep embeddings of polysemous standard-sense prompts
  where the frozen encoder put them (cosine distance to the frozen output).
* KL regularization  -- keep the distribution of similarities against a bank
  of reference anchors close to the frozen encoder's distribution.  Cosine
  similarities against the anchors act as surrogate logits; softmax turns
  them into distributions compared with forward KL.

Every kernel is pure and returns both the scalar value and the analytic
gradient with respect to the *target-encoder* outputs it consumes; the
frozen branch is a constant.  Reductions run in fixed index order so equal
inputs give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .store import AnchorSet, ZERO_NORM_EPS


class LossError(Exception):
    """Raised on malformed loss inputs (shape mismatches, zero vectors)."""


@dataclass(frozen=True)
class SurrogateLogits:
    """Cosine similarities of one embedding against every anchor, over temperature."""

    values: np.ndarray
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise LossError("temperature must be positive")
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        raw = values * self.temperature
        if raw.size and (raw.min() < -1.0 - 1e-9 or raw.max() > 1.0 + 1e-9):
            raise LossError("raw similarities must lie in [-1, 1]")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-step component values and their weighted total."""

    l_dl: float
    l_pc: float
    l_kl: float
    total: float
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)


def _as_batch(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise LossError(f"{name} must be a 2-D batch, got shape {x.shape}")
    return x


def _checked_norms(x: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms <= ZERO_NORM_EPS):
        bad = int(np.argmin(norms))
        raise LossError(f"zero vector at index {bad} in {name}")
    return norms


def _cosine_batch(t: np.ndarray, f: np.ndarray, name_t: str, name_f: str):
    """Row-wise cosine of two aligned batches plus the gradient wrt ``t``.

    Returns (cos, grad) where grad[i] = d cos_i / d t_i.
    """
    nt = _checked_norms(t, name_t)
    nf = _checked_norms(f, name_f)
    dots = np.einsum("ij,ij->i", t, f)
    cos = dots / (nt * nf)
    # d cos / d t = f_hat / |t| - cos * t / |t|^2
    grad = f / (nt * nf)[:, None] - (cos / nt**2)[:, None] * t
    return np.clip(cos, -1.0, 1.0), grad


def dialect_learning_loss(target_dialect_embs, frozen_sae_embs):
    """Mean cosine distance between target dialect embeddings and their
    frozen standard-prompt partners, with the gradient wrt each target row.

    Value is (1/N) * sum_i (1 - cos(t_i, f_i)), always in [0, 2].
    """
    t = _as_batch(target_dialect_embs, "target batch")
    f = _as_batch(frozen_sae_embs, "frozen batch")
    if t.shape != f.shape:
        raise LossError(f"batch shape mismatch: {t.shape} vs {f.shape}")
    if t.shape[0] == 0:
        raise LossError("empty batch")
    cos, dcos = _cosine_batch(t, f, "target batch", "frozen batch")
    n = t.shape[0]
    value = float(np.sum(1.0 - cos) / n)
    grad = -dcos / n
    return value, grad


def polysemy_control_loss(target_polysemy_embs, frozen_polysemy_embs):
    """Mean cosine distance between target and frozen embeddings of the same
    polysemous prompts.  Same form and bounds as the dialect learning loss;
    the pairing is (target output, frozen output) of identical inputs."""
    return dialect_learning_loss(target_polysemy_embs, frozen_polysemy_embs)


def surrogate_logits(
    embedding,
    anchors: AnchorSet,
    use_images: bool = False,
    temperature: float = 1.0,
) -> SurrogateLogits:
    """Similarities of one embedding against every anchor, scaled by 1/temperature.

    Image anchors compare against the anchor image rows; text anchors use the
    frozen caption rows as proxies.
    """
    if temperature <= 0:
        raise LossError("temperature must be positive")
    e = np.asarray(embedding, dtype=np.float64)
    if e.ndim != 1:
        raise LossError(f"embedding must be 1-D, got shape {e.shape}")
    rows = anchors.anchor_rows(use_images)
    if rows.shape[1] != e.shape[0]:
        raise LossError(
            f"dimension mismatch: embedding {e.shape[0]}, anchors {rows.shape[1]}"
        )
    ne = np.linalg.norm(e)
    if ne <= ZERO_NORM_EPS:
        raise LossError("zero-norm embedding")
    na = _checked_norms(rows, "anchors")
    cos = np.clip((rows @ e) / (na * ne), -1.0, 1.0)
    return SurrogateLogits(cos / temperature, temperature)


def softmax(v) -> np.ndarray:
    """Numerically stable softmax (max-subtracted)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise LossError("softmax expects a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise LossError("softmax input must be finite")
    z = np.exp(v - v.max())
    return z / z.sum()


def kl_divergence(p, q) -> float:
    """Forward KL divergence sum_i p_i ln(p_i / q_i), with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise LossError(f"length mismatch: {p.shape} vs {q.shape}")
    if np.any(q <= 0.0):
        raise LossError("q entries must be strictly positive")
    if np.any(p < 0.0):
        raise LossError("p entries must be nonnegative")
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def frozen_logit_cache(
    anchors: AnchorSet,
    use_images: bool = False,
    temperature: float = 1.0,
) -> np.ndarray:
    """Surrogate logits of every frozen anchor caption, as an (M, M) array.

    Row i holds the logits of caption i against all anchors.  Computed once
    at startup: the frozen branch never depends on trainable parameters.
    """
    caps = anchors.captions.matrix.rows
    return _logit_matrix(caps, anchors, use_images, temperature)


def _logit_matrix(embs, anchors, use_images, temperature):
    if temperature <= 0:
        raise LossError("temperature must be positive")
    rows = anchors.anchor_rows(use_images)
    if rows.shape[1] != embs.shape[1]:
        raise LossError(
            f"dimension mismatch: embeddings {embs.shape[1]}, anchors {rows.shape[1]}"
        )
    ne = _checked_norms(embs, "caption embeddings")
    na = _checked_norms(rows, "anchors")
    cos = np.clip((embs @ rows.T) / np.outer(ne, na), -1.0, 1.0)
    return cos / temperature


def kl_regularization_loss(
    target_caption_embs,
    frozen_logit_cache,
    anchors: AnchorSet,
    use_images: bool = False,
    temperature: float = 1.0,
):
    """Mean forward KL between target and frozen anchor-similarity distributions.

    ``target_caption_embs[i]`` is the target encoder's output for the same
    caption whose frozen logits sit in ``frozen_logit_cache`` row i.  Value is
    (1/B) * sum_i KL(softmax(s_i) || softmax(s0_i)); the gradient chains
    analytically through the softmax and the cosine logits back to each
    target row.
    """
    t = _as_batch(target_caption_embs, "target caption batch")
    if isinstance(frozen_logit_cache, (list, tuple)):
        frozen = np.stack([np.asarray(s.values, dtype=np.float64) for s in frozen_logit_cache])
    else:
        frozen = np.asarray(frozen_logit_cache, dtype=np.float64)
    if frozen.ndim != 2 or frozen.shape[0] != t.shape[0]:
        raise LossError(
            f"cache/batch length mismatch: {frozen.shape} vs batch {t.shape[0]}"
        )
    if t.shape[0] == 0:
        raise LossError("empty batch")
    rows = anchors.anchor_rows(use_images)
    if frozen.shape[1] != rows.shape[0]:
        raise LossError(
            f"cache width {frozen.shape[1]} != anchor count {rows.shape[0]}"
        )

    b = t.shape[0]
    logits = _logit_matrix(t, anchors, use_images, temperature)  # (B, M)
    nt = np.linalg.norm(t, axis=1)
    na = np.linalg.norm(rows, axis=1)

    # softmax rows for target (p) and frozen (q)
    p = np.exp(logits - logits.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    q = np.exp(frozen - frozen.max(axis=1, keepdims=True))
    q /= q.sum(axis=1, keepdims=True)

    log_ratio = np.log(p) - np.log(q)
    kl_per = np.einsum("ij,ij->i", p, log_ratio)
    value = float(kl_per.sum() / b)

    # dKL_i/ds_ij = p_ij (log_ratio_ij - KL_i); ds_ij/dt_i chains the cosine.
    ds = p * (log_ratio - kl_per[:, None])  # (B, M)
    cos = logits * temperature
    # d cos_ij / d t_i = a_j / (|t_i||a_j|) - cos_ij t_i / |t_i|^2
    coeff = ds / (temperature * np.outer(nt, na))  # (B, M)
    grad = coeff @ rows - ((ds * cos).sum(axis=1) / (temperature * nt**2))[:, None] * t
    grad /= b
    return value, grad


def total_loss(
    l_dl: float,
    l_pc: float,
    l_kl: float,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> LossBreakdown:
    """Weighted sum of the three components (default weights 1, 1, 1).

    Weights must be nonnegative; a zero weight ablates that component.
    """
    w1, w2, w3 = (float(w) for w in weights)
    if w1 < 0 or w2 < 0 or w3 < 0:
        raise LossError("loss weights must be nonnegative")
    parts = (float(l_dl), float(l_pc), float(l_kl))
    if not all(np.isfinite(parts)):
        raise LossError("loss components must be finite")
    total = w1 * parts[0] + w2 * parts[1] + w3 * parts[2]
    return LossBreakdown(parts[0], parts[1], parts[2], total, (w1, w2, w3))
