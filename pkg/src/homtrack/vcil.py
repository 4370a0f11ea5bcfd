"""Forward-only view-centric ID feature updating.

A slot-attention variant whose slot queries are warped by the inter-frame
homography before attention, followed by cross-frame slot correlation and a
residual cross-attention update of the detection embeddings. Weights are
seeded and untrained; everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyFeatureSet

QK_DIM = 3  # slot queries live in homogeneous-coordinate space


def softmax(x: np.ndarray, axis: int) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass(frozen=True)
class VcilWeights:
    """Seeded projection and decoder weights, uniform in [-1/sqrt(C), 1/sqrt(C)]."""

    q_proj: np.ndarray  # (C, 3)
    k_proj: np.ndarray  # (C, 3)
    v_proj: np.ndarray  # (C, C)
    dec1: np.ndarray    # (C, C)
    dec2: np.ndarray    # (C, C)
    seed: int

    @property
    def dim(self) -> int:
        return self.q_proj.shape[0]


def init_weights(C: int = 64, seed: int = 0) -> VcilWeights:
    if C < 4 or C % 4 != 0:
        raise ValueError(f"feature dimension must be a positive multiple of 4, got {C}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(C)
    u = lambda shape: rng.uniform(-bound, bound, shape)
    return VcilWeights(
        q_proj=u((C, QK_DIM)),
        k_proj=u((C, QK_DIM)),
        v_proj=u((C, C)),
        dec1=u((C, C)),
        dec2=u((C, C)),
        seed=seed,
    )


def init_slots(n_slots: int, C: int, seed: int = 0) -> np.ndarray:
    """Seeded unit-normalized slot bank of shape (n_slots, C)."""
    if n_slots < 1:
        raise ValueError("need at least one slot")
    if C < 4:
        raise ValueError("feature dimension must be >= 4")
    rng = np.random.default_rng(seed)
    slots = rng.standard_normal((n_slots, C))
    return slots / np.linalg.norm(slots, axis=1, keepdims=True)


def decode(slots: np.ndarray, w: VcilWeights) -> np.ndarray:
    """Two-layer perceptron reconstructing features from slots."""
    return np.maximum(slots @ w.dec1, 0.0) @ w.dec2


def hsa_forward(
    features: np.ndarray, slots: np.ndarray, H: np.ndarray, w: VcilWeights
) -> np.ndarray:
    """One homographic slot-attention iteration.

    Slot queries are projected to 3-vectors, warped by H, and matched
    against feature keys; the softmax runs across slots so features compete
    for slots, and each slot becomes the attention-weighted mean of the
    projected features.
    """
    features = np.asarray(features, dtype=float)
    slots = np.asarray(slots, dtype=float)
    if features.shape[0] == 0:
        return slots
    C = w.dim
    if features.shape[1] != C or slots.shape[1] != C:
        raise DimensionMismatch(
            f"expected feature dimension {C}, got {features.shape[1]}/{slots.shape[1]}"
        )
    keys = features @ w.k_proj                  # (N_f, 3)
    queries = H @ (slots @ w.q_proj).T          # (3, N_s)
    logits = keys @ queries / np.sqrt(C)        # (N_f, N_s)
    attn = softmax(logits, axis=1)
    weights = attn / attn.sum(axis=0, keepdims=True)
    return weights.T @ (features @ w.v_proj)    # (N_s, C)


def correlate_slots(slots_a: np.ndarray, slots_b: np.ndarray) -> np.ndarray:
    """Cross-frame slot mixing: rows of slots_a attend over slots_b."""
    slots_a = np.asarray(slots_a, dtype=float)
    slots_b = np.asarray(slots_b, dtype=float)
    if slots_a.shape != slots_b.shape:
        raise DimensionMismatch(
            f"slot banks differ in shape: {slots_a.shape} vs {slots_b.shape}"
        )
    C = slots_a.shape[1]
    attn = softmax(slots_a @ slots_b.T / np.sqrt(C), axis=1)
    return attn @ slots_b


def update_id_features(
    features: np.ndarray, slots: np.ndarray, w: VcilWeights
) -> np.ndarray:
    """Residual cross-attention of current features onto decoded slots.

    Each feature attends over the reconstruction rows, adds the attended
    value, and is re-normalized to unit length.
    """
    features = np.asarray(features, dtype=float)
    if features.shape[0] == 0:
        raise EmptyFeatureSet("no input features")
    C = w.dim
    if features.shape[1] != C:
        raise DimensionMismatch(f"expected feature dimension {C}")
    recon = decode(np.asarray(slots, dtype=float), w)   # (N_s, C)
    attn = softmax(features @ recon.T / np.sqrt(C), axis=1)
    updated = features + attn @ recon
    return updated / np.linalg.norm(updated, axis=1, keepdims=True)


class VcilUpdater:
    """Per-sequence driver applying the full update between adjacent frames."""

    def __init__(self, n_slots: int = 4, C: int = 64, seed: int = 0, iterations: int = 1):
        self.weights = init_weights(C, seed)
        self.n_slots = n_slots
        self.C = C
        self.seed = seed
        self.iterations = iterations

    def update(
        self,
        features_prev: np.ndarray,
        features_cur: np.ndarray,
        H_prev_cur: np.ndarray,
    ) -> np.ndarray:
        """Return view-corrected embeddings for the current frame.

        ``H_prev_cur`` maps current-frame coordinates into the previous
        frame; the current frame's slot pass uses its inverse.
        """
        if len(features_prev) == 0 or len(features_cur) == 0:
            return np.asarray(features_cur, dtype=float)
        slots = init_slots(self.n_slots, self.C, self.seed)
        s_prev, s_cur = slots, slots
        H_cur_prev = np.linalg.inv(H_prev_cur)
        for _ in range(self.iterations):
            s_prev = hsa_forward(features_prev, s_prev, H_prev_cur, self.weights)
            s_cur = hsa_forward(features_cur, s_cur, H_cur_prev, self.weights)
        correlated = correlate_slots(s_prev, s_cur)
        return update_id_features(features_cur, correlated, self.weights)
