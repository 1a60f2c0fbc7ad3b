import numpy as np
import pytest
import torch

from adaptation.models import PseudoLabeledSet
from adaptation.services import (
    confidence_mask,
    gradual_self_train,
    keep_count,
    pseudo_label,
    self_train,
    weighted_self_train,
)
from learners.models import ClassifierSpec, OptimizerConfig
from learners.services import accuracy, fit_targets, init_params, train_supervised, zero_params
from numerics.models import ParamVector
from streams.models import LabeledSet, UnlabeledSet
from streams.services import gen_rotated_gaussians
from utils.exceptions import ContractException

# =========================================================
# FIXTURES
# =========================================================

@pytest.fixture
def boundary_at_zero():
    """1-D logistic teacher: class 1 iff x > 0."""
    params = zero_params(ClassifierSpec(input_dim=1, num_classes=2, hidden_dims=()))
    return params.with_vector(ParamVector.from_segments([
        ("head.weight", [[-1.0, 1.0]]),
        ("head.bias", [0.0, 0.0]),
    ]))


@pytest.fixture
def small_pool():
    return UnlabeledSet(np.random.default_rng(4).normal(size=(10, 2)))


# =========================================================
# 1. pseudo-labels & confidence filter
# =========================================================

class TestPseudoLabel:

    @pytest.mark.parametrize("n, frac, expected", [
        (10, 0.9, 9),
        (10, 0.91, 10),
        (7, 0.5, 4),
        (3, 1.0, 3),
    ])
    def test_keep_count_is_ceiling(self, n, frac, expected):
        assert keep_count(n, frac) == expected

    @pytest.mark.parametrize("frac", [0.0, -0.5, 1.5])
    def test_keep_frac_out_of_range(self, frac):
        with pytest.raises(ContractException):
            keep_count(10, frac)

    def test_ties_go_to_lower_index(self):
        mask = confidence_mask(np.array([0.5, 0.9, 0.5, 0.5]), 0.5)
        assert mask.tolist() == [True, True, False, False]

    def test_full_keep_frac_keeps_everything(self, boundary_at_zero):
        labeled = pseudo_label(boundary_at_zero, UnlabeledSet(np.linspace(-1, 1, 9).reshape(-1, 1)), 1.0)
        assert labeled.kept_mask.all()
        assert labeled.labels.tolist() == [0, 0, 0, 0, 0, 1, 1, 1, 1]

    def test_filter_drops_least_confident(self, boundary_at_zero):
        pool = UnlabeledSet(np.array([[-2.0], [0.1], [3.0], [-0.05]]))
        labeled = pseudo_label(boundary_at_zero, pool, 0.5)
        assert labeled.kept_mask.tolist() == [True, False, True, False]

    def test_from_labeled_uses_true_labels(self):
        anchor = PseudoLabeledSet.from_labeled(LabeledSet(np.zeros((3, 2)), [2, 0, 1]), num_classes=3)
        assert anchor.labels.tolist() == [2, 0, 1]
        assert anchor.num_kept == 3

    def test_rejects_non_one_hot(self):
        with pytest.raises(ContractException):
            PseudoLabeledSet(np.zeros((2, 1)), [[1, 1], [0, 1]], [True, True], [1.0, 1.0])


# =========================================================
# 2. self_train
# =========================================================

class TestSelfTrain:

    def test_zero_lr_returns_teacher(self, source_params, small_stream):
        student = self_train(source_params, small_stream.intermediate, 0.9, OptimizerConfig(lr=0.0, epochs=2), seed=0)
        assert torch.equal(student.vector.values, source_params.vector.values)

    def test_same_distribution_keeps_accuracy(self, two_blobs):
        spec = ClassifierSpec(input_dim=2, num_classes=2)
        opt = OptimizerConfig(lr=0.1, epochs=10, batch_size=32)
        teacher = train_supervised(spec, two_blobs, opt, seed=0)

        rng = np.random.default_rng(11)
        held_out = LabeledSet(
            np.vstack([rng.normal((-3, 0), 0.5, (200, 2)), rng.normal((3, 0), 0.5, (200, 2))]),
            np.repeat([0, 1], 200),
        )
        pool = UnlabeledSet(np.vstack([rng.normal((-3, 0), 0.5, (100, 2)), rng.normal((3, 0), 0.5, (100, 2))]))
        student = self_train(teacher, pool, 0.9, opt, seed=1)

        assert abs(accuracy(student, held_out) - accuracy(teacher, held_out)) <= 0.01

    def test_small_shift_is_absorbed(self, boundary_at_zero):
        rng = np.random.default_rng(5)
        X = np.concatenate([rng.normal(-1.0, 0.1, 50), rng.normal(1.0, 0.1, 50)]) + 0.3
        shifted = LabeledSet(X.reshape(-1, 1), np.repeat([0, 1], 50))
        student = self_train(
            boundary_at_zero, shifted.unlabeled(), 1.0, OptimizerConfig(lr=0.5, epochs=20, batch_size=20), seed=0
        )
        assert accuracy(student, shifted) == 1.0

    def test_teacher_is_frozen(self, source_params, small_stream):
        opt = OptimizerConfig(lr=0.1, epochs=2, batch_size=16)
        labeled = pseudo_label(source_params, small_stream.intermediate, 0.8).kept()
        expected = fit_targets(source_params, labeled.features, labeled.labels, opt, seed=3)
        assert self_train(source_params, small_stream.intermediate, 0.8, opt, seed=3).equal(expected)

    def test_empty_pool(self, source_params):
        with pytest.raises(ContractException):
            self_train(source_params, UnlabeledSet(np.zeros((0, 2))), 0.9, OptimizerConfig(), seed=0)


# =========================================================
# 3. weighted_self_train
# =========================================================

class TestWeightedSelfTrain:

    @pytest.fixture
    def teacher(self):
        return init_params(ClassifierSpec(input_dim=2, num_classes=2, hidden_dims=(4,)), seed=0)

    def test_zero_weights_return_teacher(self, teacher, small_pool):
        student = weighted_self_train(teacher, small_pool, np.zeros(10), OptimizerConfig(lr=0.5, epochs=3), seed=0)
        assert torch.equal(student.vector.values, teacher.vector.values)

    def test_indicator_matches_restricted_training(self, teacher, small_pool):
        subset = np.array([1, 4, 5, 8])
        q = np.zeros(10)
        q[subset] = 1.0
        weighted = weighted_self_train(teacher, small_pool, q, OptimizerConfig(lr=0.5, epochs=3, batch_size=10), 0)
        # restricted run uses 1/|A| per batch instead of 1/N, so its lr is scaled by |A|/N
        restricted = self_train(
            teacher, small_pool.subset(subset), 1.0, OptimizerConfig(lr=0.5 * 4 / 10, epochs=3, batch_size=10), 0
        )
        assert np.allclose(weighted.vector.numpy(), restricted.vector.numpy(), atol=1e-12)

    def test_doubling_weights_and_halving_lr(self, teacher, small_pool):
        q = np.random.default_rng(1).uniform(size=10)
        one = weighted_self_train(teacher, small_pool, q, OptimizerConfig(lr=0.4, epochs=1, batch_size=10), 0)
        two = weighted_self_train(teacher, small_pool, 2 * q, OptimizerConfig(lr=0.2, epochs=1, batch_size=10), 0)
        assert torch.equal(one.vector.values, two.vector.values)

    def test_negative_weight_rejected(self, teacher, small_pool):
        q = np.ones(10)
        q[3] = -0.1
        with pytest.raises(ContractException):
            weighted_self_train(teacher, small_pool, q, OptimizerConfig(), seed=0)

    def test_length_mismatch_rejected(self, teacher, small_pool):
        with pytest.raises(ContractException):
            weighted_self_train(teacher, small_pool, np.ones(9), OptimizerConfig(), seed=0)


# =========================================================
# 4. gradual_self_train
# =========================================================

class TestGradualSelfTrain:

    def test_target_only_equals_self_train(self, source_params, small_stream, train_opt):
        target = small_stream.target.unlabeled()
        gradual, log = gradual_self_train(source_params, [], target, 0.9, train_opt, seed=2)
        direct = self_train(source_params, target, 0.9, train_opt, seed=2)
        assert gradual.equal(direct)
        assert len(log) == 1

    def test_each_step_is_a_self_train(self, source_params, small_stream, train_opt):
        first = small_stream.intermediate.subset(np.flatnonzero(small_stream.truth_index == small_stream.truth_index.min()))
        target = small_stream.target.unlabeled()
        gradual, _ = gradual_self_train(source_params, [first], target, 0.8, train_opt, seed=4)

        stepped = self_train(source_params, first, 0.8, train_opt, seed=4)
        stepped = self_train(stepped, target, 0.8, train_opt, seed=5)
        assert gradual.equal(stepped)

    def test_log_has_one_row_per_step(self, source_params, small_stream, train_opt):
        domains = [small_stream.intermediate.subset(np.flatnonzero(small_stream.truth_index == angle))
                   for angle in np.unique(small_stream.truth_index)]
        _, log = gradual_self_train(
            source_params, domains, small_stream.target.unlabeled(), 0.9, train_opt, seed=0,
            evaluation=small_stream.target,
        )
        assert [row.step for row in log] == [1, 2, 3, 4, 5]
        assert all(0.0 <= row.target_accuracy <= 1.0 for row in log)
        assert [row.kept for row in log] == [27, 27, 27, 27, 27]

    @pytest.mark.slow
    def test_gradual_beats_direct_on_rotation(self):
        spec = ClassifierSpec(input_dim=2, num_classes=3, hidden_dims=(32,))
        opt = OptimizerConfig(lr=0.1, epochs=20, batch_size=32)
        gradual_acc, direct_acc = [], []
        for seed in range(5):
            stream = gen_rotated_gaussians(3, 150, 9, 120.0, 0.15, seed=seed)
            source = train_supervised(spec, stream.source, opt, seed=seed)
            domains = [stream.intermediate.subset(np.flatnonzero(stream.truth_index == angle))
                       for angle in np.unique(stream.truth_index)]
            target = stream.target.unlabeled()
            gradual, _ = gradual_self_train(source, domains, target, 0.9, opt, seed=seed)
            direct = self_train(source, target, 0.9, opt, seed=seed)
            gradual_acc.append(accuracy(gradual, stream.target))
            direct_acc.append(accuracy(direct, stream.target))
        assert np.mean(gradual_acc) > np.mean(direct_acc)

    @pytest.mark.slow
    def test_repeating_a_domain_changes_little(self, source_params, small_stream, train_opt):
        domains = [small_stream.intermediate.subset(np.flatnonzero(small_stream.truth_index == angle))
                   for angle in np.unique(small_stream.truth_index)]
        once, _ = gradual_self_train(source_params, domains, small_stream.target.unlabeled(), 0.9, train_opt, 0)
        twice, _ = gradual_self_train(
            source_params, [domains[0], *domains], small_stream.target.unlabeled(), 0.9, train_opt, 0
        )
        assert abs(accuracy(once, small_stream.target) - accuracy(twice, small_stream.target)) < 0.02
