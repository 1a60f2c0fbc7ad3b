import logging

import numpy as np
import pytest
from scipy.stats import spearmanr

from learners.models import ClassifierSpec, DiscriminatorSpec, OptimizerConfig
from learners.services import init_discriminator, init_params, train_discriminator, zero_discriminator
from numerics.models import ParamVector
from scoring.models import ScoredPool, order_by_scores
from scoring.services import (
    DISTANCE_EPS,
    manifold_distance_ratio,
    score_confidence_iterative,
    score_discriminator,
    score_manifold,
    score_progressive,
    score_random,
)
from streams.models import UnlabeledSet
from utils.exceptions import ContractException

# =========================================================
# FIXTURES
# =========================================================

@pytest.fixture
def line_sets():
    """Separable 1-D source (negative side) and target (positive side) with a pool spanning the gap."""
    source = UnlabeledSet(np.linspace(-3.0, -2.0, 20).reshape(-1, 1))
    target = UnlabeledSet(np.linspace(2.0, 3.0, 20).reshape(-1, 1))
    positions = np.random.default_rng(0).permutation(np.linspace(-1.9, 1.9, 40))
    return source, target, UnlabeledSet(positions.reshape(-1, 1)), positions


LINE_SPEC = DiscriminatorSpec(input_dim=1, hidden_dims=())
LINE_OPT = OptimizerConfig(lr=0.5, epochs=50, batch_size=20)


# =========================================================
# 1. ordering
# =========================================================

class TestOrderByScores:

    def test_descending_with_index_ties(self):
        assert order_by_scores([0.2, 0.9, 0.2, 0.5]).tolist() == [1, 3, 0, 2]

    def test_invariant_under_increasing_transform(self):
        q = np.random.default_rng(1).normal(size=50)
        assert np.array_equal(order_by_scores(q), order_by_scores(np.exp(3 * q) + 7))


# =========================================================
# 2. iterative confidence
# =========================================================

class TestConfidenceScorer:

    def test_five_domains_give_four_levels(self, source_params, small_stream):
        pool = small_stream.intermediate.subset(np.arange(8))
        scored = score_confidence_iterative(source_params, pool, M=5, opt=OptimizerConfig(epochs=1), seed=0)
        levels, counts = np.unique(scored.scores, return_counts=True)
        assert np.allclose(levels, [0.0, 1 / 3, 2 / 3, 1.0])
        assert counts.tolist() == [2, 2, 2, 2]
        assert sorted(set(scored.rounds.tolist())) == [1, 2, 3, 4]

    def test_three_domains_give_endpoints(self, source_params, small_stream):
        scored = score_confidence_iterative(
            source_params, small_stream.intermediate, M=3, opt=OptimizerConfig(epochs=1), seed=0
        )
        assert set(scored.scores.tolist()) == {0.0, 1.0}

    def test_first_round_is_most_confident(self, source_params, small_stream):
        from learners.services import confidence, predict

        pool = small_stream.intermediate
        scored = score_confidence_iterative(source_params, pool, M=4, opt=OptimizerConfig(epochs=1), seed=0)
        conf = confidence(predict(source_params, pool.features))
        first = scored.rounds == 1
        assert conf[first].min() >= conf[~first].max()

    def test_needs_three_domains(self, source_params, small_stream):
        with pytest.raises(ContractException):
            score_confidence_iterative(source_params, small_stream.intermediate, M=2, opt=OptimizerConfig(), seed=0)


# =========================================================
# 3. manifold distance
# =========================================================

class TestManifold:

    def test_distance_ratio_arithmetic(self):
        q = manifold_distance_ratio([[0.0, 0.0]], [[0.0, 1.0]], [[0.0, 3.0]])
        assert q[0] == pytest.approx((1e-8 + 3) / (1e-8 + 1))

    def test_equidistant_point(self):
        assert manifold_distance_ratio([[0.0, 0.0]], [[1.0, 0.0]], [[-1.0, 0.0]])[0] == pytest.approx(1.0)

    def test_coincident_source_point_is_finite_and_largest(self):
        points = [[0.0, 1.0], [0.0, 2.0], [0.0, 0.5]]
        q = manifold_distance_ratio(points, [[0.0, 1.0]], [[0.0, 3.0]])
        assert q[0] == pytest.approx((DISTANCE_EPS + 2.0) / DISTANCE_EPS)
        assert np.isfinite(q).all()
        assert np.argmax(q) == 0

    def test_scores_every_pool_example(self, source_params, small_stream):
        scored = score_manifold(
            source_params, small_stream.source.unlabeled(), small_stream.target.unlabeled(), small_stream.intermediate
        )
        assert len(scored) == len(small_stream.intermediate)
        assert np.all(scored.scores > 0)

    def test_embed_dim_above_feature_dim(self, small_stream):
        narrow = init_params(ClassifierSpec(input_dim=2, num_classes=3, hidden_dims=(1,)), seed=0)
        with pytest.raises(ContractException):
            score_manifold(
                narrow, small_stream.source.unlabeled(), small_stream.target.unlabeled(),
                small_stream.intermediate, embed_dim=2,
            )


# =========================================================
# 4. discriminator scorers
# =========================================================

class TestDiscriminatorScorer:

    def test_zero_params_score_half(self, small_stream):
        scored = score_discriminator(zero_discriminator(DiscriminatorSpec(input_dim=2)), small_stream.intermediate)
        assert np.all(scored.scores == 0.5)

    def test_source_side_point_scores_high(self):
        phi = train_discriminator(
            UnlabeledSet([[2.0], [3.0]]), UnlabeledSet([[-2.0], [-3.0]]),
            OptimizerConfig(lr=1.0, epochs=300, batch_size=2), seed=0, spec=LINE_SPEC,
        )
        assert score_discriminator(phi, UnlabeledSet([[2.5]])).scores[0] > 0.9

    def test_ordering_survives_feature_duplication(self, small_stream):
        spec = DiscriminatorSpec(input_dim=2, hidden_dims=(6,))
        phi = init_discriminator(spec, seed=3)
        seg = phi.vector.segments()
        doubled_spec = DiscriminatorSpec(input_dim=4, hidden_dims=(6,))
        doubled = init_discriminator(doubled_spec, seed=0).with_vector(ParamVector.from_segments([
            ("hidden0.weight", np.vstack([seg["hidden0.weight"].numpy() / 2] * 2)),
            ("hidden0.bias", seg["hidden0.bias"]),
            ("head.weight", seg["head.weight"]),
            ("head.bias", seg["head.bias"]),
        ]))
        pool = small_stream.intermediate
        wide = UnlabeledSet(np.hstack([pool.features, pool.features]))
        assert np.array_equal(score_discriminator(phi, pool).order(), score_discriminator(doubled, wide).order())


class TestProgressive:

    def test_two_rounds_on_eight(self, line_sets):
        source, target, _, _ = line_sets
        pool = UnlabeledSet(np.linspace(-1.5, 1.5, 8).reshape(-1, 1))
        scored = score_progressive(source, target, pool, K=2, opt=LINE_OPT, seed=0, spec=LINE_SPEC)
        levels, counts = np.unique(scored.scores, return_counts=True)
        assert levels.tolist() == [0.25, 0.5, 0.75]
        assert counts.tolist() == [2, 4, 2]
        assert np.all(scored.rounds > 0)

    def test_leftovers_get_half(self, line_sets):
        source, target, _, _ = line_sets
        pool = UnlabeledSet(np.linspace(-1.5, 1.5, 9).reshape(-1, 1))
        scored = score_progressive(source, target, pool, K=2, opt=LINE_OPT, seed=0, spec=LINE_SPEC)
        assert np.sum(scored.rounds == 0) == 1
        assert scored.scores[scored.rounds == 0].tolist() == [0.5]

    def test_recovers_line_position(self, line_sets):
        source, target, pool, positions = line_sets
        scored = score_progressive(source, target, pool, K=5, opt=LINE_OPT, seed=0, spec=LINE_SPEC)
        rho, _ = spearmanr(scored.scores, -positions)
        assert rho >= 0.9

    def test_single_round_warns(self, line_sets, caplog):
        source, target, pool, _ = line_sets
        with caplog.at_level(logging.WARNING):
            scored = score_progressive(source, target, pool, K=1, opt=LINE_OPT, seed=0, spec=LINE_SPEC)
        assert "K=1" in caplog.text
        assert set(scored.scores.tolist()) == {0.5}

    def test_pool_too_small(self, line_sets):
        source, target, _, _ = line_sets
        with pytest.raises(ContractException):
            score_progressive(source, target, UnlabeledSet([[0.0], [0.1], [0.2]]), K=2, opt=LINE_OPT, seed=0)


# =========================================================
# 5. random scores & CSV
# =========================================================

class TestRandomAndCsv:

    def test_random_is_a_seeded_permutation(self, small_stream):
        a = score_random(small_stream.intermediate, seed=1)
        b = score_random(small_stream.intermediate, seed=1)
        assert np.array_equal(a.scores, b.scores)
        assert len(np.unique(a.scores)) == len(small_stream.intermediate)

    def test_csv_round_trip(self, small_stream, tmp_path):
        scored = score_random(small_stream.intermediate, seed=2)
        path = scored.write_csv(tmp_path / "scores.csv")
        loaded = ScoredPool.read_csv(path, small_stream.intermediate)
        assert np.array_equal(loaded.scores, scored.scores)
        assert loaded.scorer_id == "random"

    def test_csv_must_cover_pool(self, small_stream, tmp_path):
        scored = score_random(small_stream.intermediate.subset(np.arange(5)), seed=2)
        path = scored.write_csv(tmp_path / "scores.csv")
        with pytest.raises(ContractException):
            ScoredPool.read_csv(path, small_stream.intermediate)

    def test_scores_must_align(self, small_stream):
        with pytest.raises(ContractException):
            ScoredPool(small_stream.intermediate, np.zeros(3), "random")
