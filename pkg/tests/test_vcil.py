"""Tests for the view-centric ID feature update path."""

import numpy as np
import pytest

from homtrack import vcil
from homtrack.errors import DimensionMismatch, EmptyFeatureSet


class TestSoftmax:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((5, 7))
        s = vcil.softmax(x, axis=1)
        assert np.allclose(s.sum(axis=1), 1.0, atol=1e-12)
        assert (s > 0).all()

    def test_columns_sum_to_one_on_axis_zero(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((4, 3))
        s = vcil.softmax(x, axis=0)
        assert np.allclose(s.sum(axis=0), 1.0, atol=1e-12)

    def test_shift_invariance(self):
        x = np.array([[1.0, 2.0, 3.0]])
        assert np.allclose(vcil.softmax(x, 1), vcil.softmax(x + 100.0, 1))

    def test_large_values_stable(self):
        x = np.array([[1000.0, 1001.0]])
        s = vcil.softmax(x, 1)
        assert np.isfinite(s).all()


class TestInit:
    def test_weights_bounds_and_shapes(self):
        w = vcil.init_weights(C=8, seed=3)
        bound = 1.0 / np.sqrt(8)
        for arr, shape in [
            (w.q_proj, (8, 3)),
            (w.k_proj, (8, 3)),
            (w.v_proj, (8, 8)),
            (w.dec1, (8, 8)),
            (w.dec2, (8, 8)),
        ]:
            assert arr.shape == shape
            assert (np.abs(arr) <= bound).all()

    def test_weights_deterministic(self):
        a = vcil.init_weights(C=8, seed=5)
        b = vcil.init_weights(C=8, seed=5)
        assert np.array_equal(a.q_proj, b.q_proj)
        assert np.array_equal(a.dec2, b.dec2)

    def test_weights_vary_with_seed(self):
        a = vcil.init_weights(C=8, seed=5)
        b = vcil.init_weights(C=8, seed=6)
        assert not np.array_equal(a.q_proj, b.q_proj)

    @pytest.mark.parametrize("bad", [0, 3, 5, -4])
    def test_weights_rejects_bad_dimension(self, bad):
        with pytest.raises(ValueError):
            vcil.init_weights(C=bad)

    def test_slots_unit_norm_and_deterministic(self):
        s = vcil.init_slots(4, 16, seed=2)
        assert s.shape == (4, 16)
        assert np.allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-12)
        assert np.array_equal(s, vcil.init_slots(4, 16, seed=2))

    def test_slots_rejects_empty_bank(self):
        with pytest.raises(ValueError):
            vcil.init_slots(0, 16)


def _hsa_loops(features, slots, H, w):
    """Scalar-loop re-implementation of one attention pass."""
    n_f, n_s = features.shape[0], slots.shape[0]
    C = w.dim
    logits = np.zeros((n_f, n_s))
    for i in range(n_f):
        key = np.zeros(3)
        for a in range(3):
            key[a] = sum(features[i, c] * w.k_proj[c, a] for c in range(C))
        for j in range(n_s):
            q = np.zeros(3)
            for a in range(3):
                q[a] = sum(slots[j, c] * w.q_proj[c, a] for c in range(C))
            warped = np.zeros(3)
            for a in range(3):
                warped[a] = sum(H[a, b] * q[b] for b in range(3))
            logits[i, j] = sum(key[a] * warped[a] for a in range(3)) / np.sqrt(C)
    attn = np.zeros_like(logits)
    for i in range(n_f):
        m = logits[i].max()
        row = np.exp(logits[i] - m)
        attn[i] = row / row.sum()
    out = np.zeros((n_s, C))
    for j in range(n_s):
        col = attn[:, j] / attn[:, j].sum()
        for i in range(n_f):
            proj = np.array(
                [sum(features[i, c] * w.v_proj[c, d] for c in range(C)) for d in range(C)]
            )
            out[j] += col[i] * proj
    return out


class TestHsaForward:
    def test_matches_scalar_oracle_at_c4(self):
        w = vcil.init_weights(C=4, seed=9)
        rng = np.random.default_rng(9)
        features = rng.standard_normal((3, 4))
        slots = vcil.init_slots(2, 4, seed=9)
        H = np.array([[1.0, 0.1, 5.0], [0.0, 1.1, -2.0], [1e-4, 0.0, 1.0]])
        got = vcil.hsa_forward(features, slots, H, w)
        want = _hsa_loops(features, slots, H, w)
        assert np.allclose(got, want, atol=1e-9)

    def test_empty_features_returns_slots_unchanged(self):
        w = vcil.init_weights(C=8, seed=0)
        slots = vcil.init_slots(3, 8, seed=0)
        out = vcil.hsa_forward(np.zeros((0, 8)), slots, np.eye(3), w)
        assert np.array_equal(out, slots)

    def test_identity_homography_matches_plain_slot_attention(self):
        w = vcil.init_weights(C=16, seed=4)
        rng = np.random.default_rng(4)
        features = rng.standard_normal((6, 16))
        slots = vcil.init_slots(4, 16, seed=4)
        got = vcil.hsa_forward(features, slots, np.eye(3), w)
        # plain variant: no homography warp on the slot queries
        logits = (features @ w.k_proj) @ (slots @ w.q_proj).T / np.sqrt(16)
        attn = vcil.softmax(logits, axis=1)
        weights = attn / attn.sum(axis=0, keepdims=True)
        plain = weights.T @ (features @ w.v_proj)
        assert np.array_equal(got, plain)

    def test_slot_permutation_equivariance(self):
        w = vcil.init_weights(C=8, seed=7)
        rng = np.random.default_rng(7)
        features = rng.standard_normal((5, 8))
        slots = vcil.init_slots(4, 8, seed=7)
        H = np.eye(3) + 0.01 * rng.standard_normal((3, 3))
        perm = rng.permutation(4)
        base = vcil.hsa_forward(features, slots, H, w)
        permuted = vcil.hsa_forward(features, slots[perm], H, w)
        assert np.allclose(permuted, base[perm], atol=1e-12)

    def test_feature_permutation_invariance(self):
        w = vcil.init_weights(C=8, seed=8)
        rng = np.random.default_rng(8)
        features = rng.standard_normal((6, 8))
        slots = vcil.init_slots(3, 8, seed=8)
        H = np.eye(3) + 0.01 * rng.standard_normal((3, 3))
        base = vcil.hsa_forward(features, slots, H, w)
        shuffled = vcil.hsa_forward(features[rng.permutation(6)], slots, H, w)
        assert np.allclose(shuffled, base, atol=1e-12)

    def test_identical_features_collapse(self):
        # every slot is a convex combination of projected features, so a
        # constant feature bank forces every output slot to the same vector
        w = vcil.init_weights(C=8, seed=1)
        f = np.tile(np.arange(8.0), (5, 1))
        slots = vcil.init_slots(3, 8, seed=1)
        out = vcil.hsa_forward(f, slots, np.eye(3), w)
        assert np.allclose(out, f[0] @ w.v_proj, atol=1e-12)

    def test_dimension_mismatch_raises(self):
        w = vcil.init_weights(C=8, seed=0)
        with pytest.raises(DimensionMismatch):
            vcil.hsa_forward(np.zeros((2, 12)), vcil.init_slots(2, 8), np.eye(3), w)


class TestCorrelateAndUpdate:
    def test_correlate_brute_force(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 8))
        b = rng.standard_normal((4, 8))
        got = vcil.correlate_slots(a, b)
        attn = vcil.softmax(a @ b.T / np.sqrt(8), axis=1)
        assert np.allclose(got, attn @ b, atol=1e-12)
        assert got.shape == (4, 8)

    def test_correlate_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            vcil.correlate_slots(np.zeros((3, 8)), np.zeros((4, 8)))

    def test_update_outputs_unit_norm(self):
        w = vcil.init_weights(C=16, seed=2)
        rng = np.random.default_rng(2)
        f = rng.standard_normal((5, 16))
        f /= np.linalg.norm(f, axis=1, keepdims=True)
        out = vcil.update_id_features(f, vcil.init_slots(4, 16, seed=2), w)
        assert out.shape == f.shape
        assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)

    def test_update_rejects_empty(self):
        w = vcil.init_weights(C=8, seed=0)
        with pytest.raises(EmptyFeatureSet):
            vcil.update_id_features(np.zeros((0, 8)), vcil.init_slots(2, 8), w)

    def test_update_dimension_mismatch(self):
        w = vcil.init_weights(C=8, seed=0)
        with pytest.raises(DimensionMismatch):
            vcil.update_id_features(np.zeros((2, 6)), vcil.init_slots(2, 8), w)


class TestUpdater:
    def test_deterministic(self):
        rng = np.random.default_rng(6)
        prev = rng.standard_normal((4, 8))
        cur = rng.standard_normal((5, 8))
        H = np.eye(3) + 0.01 * rng.standard_normal((3, 3))
        a = vcil.VcilUpdater(n_slots=3, C=8, seed=1).update(prev, cur, H)
        b = vcil.VcilUpdater(n_slots=3, C=8, seed=1).update(prev, cur, H)
        assert np.array_equal(a, b)
        assert a.shape == (5, 8)
        assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)

    def test_empty_prev_passes_through(self):
        cur = np.ones((2, 8))
        out = vcil.VcilUpdater(n_slots=2, C=8, seed=0).update(np.zeros((0, 8)), cur, np.eye(3))
        assert np.array_equal(out, cur)

    def test_empty_cur_passes_through(self):
        out = vcil.VcilUpdater(n_slots=2, C=8, seed=0).update(
            np.ones((2, 8)), np.zeros((0, 8)), np.eye(3)
        )
        assert out.shape == (0, 8)
