import numpy as np
import pytest

from enscomp import (ConfigError, ProbabilityCache, ShapeError, acc_gain,
                     fuse_soft, softmax_rows, standalone_accuracy)

from helpers import make_model, make_registry, naive_softmax_fusion, random_registry


class TestSoftmax:
    def test_known_row(self):
        out = softmax_rows(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(
            out[0], [0.0900305731704, 0.2447284710548, 0.6652409557749],
            rtol=0, atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        out = softmax_rows(rng.standard_normal((50, 7)))
        np.testing.assert_allclose(out.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert np.all(out > 0)

    def test_large_logits_stable(self):
        out = softmax_rows(np.array([[1000.0, 1000.0, 999.0]]))
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out[0, 0], out[0, 1])

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((10, 4))
        shift = rng.standard_normal((10, 1))
        np.testing.assert_allclose(softmax_rows(x + shift), softmax_rows(x),
                                   rtol=1e-12, atol=1e-15)


class TestStandaloneAccuracy:
    def test_basic(self):
        reg = make_registry([[[2.0, 1.0], [0.0, 1.0], [3.0, 0.0]]], [0, 1, 1])
        assert standalone_accuracy(reg.models[0], reg.labels) == pytest.approx(2 / 3)

    def test_argmax_tie_takes_lowest_index(self):
        reg = make_registry([[[1.0, 1.0, 0.0]]], [0])
        assert standalone_accuracy(reg.models[0], reg.labels) == 1.0
        reg2 = make_registry([[[0.0, 1.0, 1.0]]], [2])
        assert standalone_accuracy(reg2.models[0], reg2.labels) == 0.0


class TestAccGain:
    def test_positive_and_negative(self):
        assert acc_gain(0.9, [0.8, 0.85]) == pytest.approx(0.05)
        assert acc_gain(0.8, [0.85, 0.7]) == pytest.approx(-0.05)

    def test_empty_members(self):
        with pytest.raises(ConfigError):
            acc_gain(0.9, [])


class TestFuseSoft:
    def test_hand_fixture(self):
        # model A wins samples 0-1 after fusion, B drags sample 2 to class 0
        a = np.array([[3.0, 0.0, 0.0], [1.0, 0.5, 0.0], [0.0, 0.0, 1.0]])
        b = np.array([[0.0, 1.0, 0.0], [0.0, 2.0, 0.0], [2.0, 0.0, 1.0]])
        reg = make_registry([a, b], [0, 1, 2])
        score = fuse_soft(list(reg), reg.labels, keep_predictions=True)
        np.testing.assert_array_equal(score.fused_predictions, [0, 1, 0])
        assert score.soft_acc == pytest.approx(2 / 3)
        naive_preds, naive_acc = naive_softmax_fusion([a, b], [0, 1, 2])
        np.testing.assert_array_equal(score.fused_predictions, naive_preds)
        assert score.soft_acc == pytest.approx(naive_acc)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            reg = random_registry(rng, n_models=int(rng.integers(2, 5)),
                                  n_samples=int(rng.integers(5, 30)),
                                  n_classes=int(rng.integers(2, 6)))
            score = fuse_soft(list(reg), reg.labels, keep_predictions=True)
            naive_preds, naive_acc = naive_softmax_fusion(
                [m.scores for m in reg], reg.labels.labels)
            np.testing.assert_array_equal(score.fused_predictions, naive_preds)
            assert score.soft_acc == pytest.approx(naive_acc, abs=1e-12)

    def test_member_permutation_bitwise_invariant(self):
        rng = np.random.default_rng(3)
        reg = random_registry(rng, n_models=4, n_samples=40, n_classes=5)
        members = list(reg)
        base = fuse_soft(members, reg.labels, keep_predictions=True)
        for perm in ([2, 0, 3, 1], [3, 2, 1, 0], [1, 3, 0, 2]):
            other = fuse_soft([members[i] for i in perm], reg.labels,
                              keep_predictions=True)
            assert other.soft_acc == base.soft_acc  # bitwise, not approx
            np.testing.assert_array_equal(other.fused_predictions,
                                          base.fused_predictions)

    def test_needs_two_members(self):
        reg = make_registry([np.ones((3, 2))], [0, 1, 0])
        with pytest.raises(ConfigError):
            fuse_soft(list(reg), reg.labels)

    def test_shape_mismatch(self):
        a = make_model(0, np.ones((4, 3)))
        b = make_model(1, np.ones((5, 3)))
        reg = make_registry([np.ones((4, 3)), np.zeros((4, 3))], [0, 1, 2, 0])
        with pytest.raises(ShapeError):
            fuse_soft([a, b], reg.labels)

    def test_duplicate_triple_gain_is_zero(self):
        rng = np.random.default_rng(5)
        reg = random_registry(rng, n_models=1, n_samples=30, n_classes=4)
        m = reg.models[0]
        acc = standalone_accuracy(m, reg.labels)
        score = fuse_soft([m, m, m], reg.labels, member_accs=[acc, acc, acc])
        assert score.soft_acc == acc
        assert score.acc_gain == 0.0

    def test_probs_mode_skips_softmax(self):
        rng = np.random.default_rng(11)
        logits = [rng.standard_normal((20, 3)) for _ in range(2)]
        labels = rng.integers(0, 3, size=20)
        reg_logits = make_registry(logits, labels, scores_are="logits")
        probs = [softmax_rows(s) for s in logits]
        reg_probs = make_registry(probs, labels, scores_are="probs")
        a = fuse_soft(list(reg_logits), reg_logits.labels,
                      cache=ProbabilityCache.for_registry(reg_logits),
                      keep_predictions=True)
        b = fuse_soft(list(reg_probs), reg_probs.labels,
                      cache=ProbabilityCache.for_registry(reg_probs),
                      keep_predictions=True)
        np.testing.assert_array_equal(a.fused_predictions, b.fused_predictions)


class TestProbabilityCache:
    def test_caches_by_id(self):
        rng = np.random.default_rng(2)
        reg = random_registry(rng, n_models=2)
        cache = ProbabilityCache.for_registry(reg)
        first = cache.get(reg.models[0])
        assert cache.get(reg.models[0]) is first

    def test_probs_returned_untouched(self):
        probs = np.full((4, 2), 0.5)
        reg = make_registry([probs], [0, 1, 0, 1], scores_are="probs")
        cache = ProbabilityCache.for_registry(reg)
        np.testing.assert_array_equal(cache.get(reg.models[0]), probs)
