import numpy as np
import pytest

from benchmark import synthetic_scene
from errors import ProbECError
from event_model import STA_FUNCTORS, EventAtom, FactKind, ProbFact, index_narrative
from noise_lab import (
    SWEEP_GAMMA_MEANS,
    NoiseConfig,
    NoiseLevel,
    filter_for_crisp,
    gamma_probs,
    inject,
    is_spurious,
    noise_spawn_key,
    occurrence_counts,
)


@pytest.fixture(scope="module")
def scene():
    narrative, _ = synthetic_scene(episodes=1)
    return narrative


def bodies(narrative):
    return {fact.body for fact in narrative}


class TestNoiseConfig:
    def test_rejects_non_positive_mean(self):
        with pytest.raises(ProbECError):
            NoiseConfig(NoiseLevel.SMOOTH, 0.0)

    def test_rejects_bad_fraction(self):
        with pytest.raises(ProbECError):
            NoiseConfig(NoiseLevel.STRONG, 1.0, spurious_fraction=1.5)

    def test_level_from_string(self):
        assert NoiseConfig("strong", 1.0).level is NoiseLevel.STRONG

    def test_sweep_means(self):
        assert SWEEP_GAMMA_MEANS[0] == 0.5
        assert SWEEP_GAMMA_MEANS[-1] == 8.0
        assert len(SWEEP_GAMMA_MEANS) == 16


class TestInject:
    def test_smooth_touches_only_sta(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.SMOOTH, 2.0, seed=1))
        assert bodies(noisy) == bodies(scene)
        for fact in noisy:
            if fact.kind is FactKind.HAPPENS and fact.functor in STA_FUNCTORS:
                assert 0.0 < fact.prob <= 1.0
            else:
                assert fact.prob == 1.0

    def test_intermediate_touches_spatial(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.INTERMEDIATE, 2.0, seed=1))
        assert bodies(noisy) == bodies(scene)
        coords = [f for f in noisy if f.functor == "coord"]
        assert any(f.prob < 1.0 for f in coords)
        tracking = [f for f in noisy if f.functor in ("appear", "disappear")]
        assert all(f.prob == 1.0 for f in tracking)

    def test_strong_adds_spurious_walkers(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.STRONG, 2.0, spurious_fraction=0.5, seed=1))
        real = [f for f in noisy if not is_spurious(f)]
        ghosts = [f for f in noisy if is_spurious(f)]
        assert {f.body for f in real} == bodies(scene)
        walking_frames = {f.time for f in scene if f.functor == "walking"}
        ghost_walks = [f for f in ghosts if f.functor == "walking"]
        assert len(ghost_walks) == round(0.5 * len(walking_frames))
        assert {f.time for f in ghost_walks} <= walking_frames

    def test_spurious_probability_complements_walker(self):
        facts = [ProbFact(FactKind.HAPPENS, EventAtom("walking", ("mike",)), 3)]
        narrative = index_narrative(facts)
        noisy = inject(narrative, NoiseConfig(NoiseLevel.STRONG, 3.0, spurious_fraction=1.0, seed=4))
        walker = next(f for f in noisy if f.atom.args == ("mike",))
        ghost = next(f for f in noisy if is_spurious(f))
        assert ghost.atom.args == ("ghost0",)
        assert ghost.prob == pytest.approx(1.0 - walker.prob)

    def test_deterministic(self, scene):
        cfg = NoiseConfig(NoiseLevel.STRONG, 4.0, seed=11)
        assert inject(scene, cfg).facts == inject(scene, cfg).facts

    def test_tiny_mean_keeps_clean_probabilities(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.INTERMEDIATE, 1e-9, seed=2))
        assert min(f.prob for f in noisy) > 1 - 1e-6

    def test_higher_mean_lowers_probabilities(self):
        draws = np.array([0.5, 1.0, 2.0])
        assert np.all(gamma_probs(draws, 4.0) < gamma_probs(draws, 1.0))


class TestFilterForCrisp:
    def test_keeps_above_threshold(self):
        facts = [
            ProbFact(FactKind.HAPPENS, EventAtom("walking", ("a",)), 1, 0.7),
            ProbFact(FactKind.HAPPENS, EventAtom("walking", ("a",)), 2, 0.3),
        ]
        filtered = filter_for_crisp(index_narrative(facts), 0.5)
        assert [(f.time, f.prob) for f in filtered] == [(1, 1.0)]

    def test_lower_threshold_keeps_superset(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.STRONG, 2.0, seed=5))
        assert bodies(filter_for_crisp(noisy, 0.7)) <= bodies(filter_for_crisp(noisy, 0.3))

    def test_clean_narrative_unchanged(self, scene):
        assert filter_for_crisp(scene, 0.9).facts == scene.facts

    def test_subset_of_original_and_spurious(self, scene):
        noisy = inject(scene, NoiseConfig(NoiseLevel.STRONG, 3.0, seed=6))
        allowed = bodies(scene) | {f.body for f in noisy if is_spurious(f)}
        assert bodies(filter_for_crisp(noisy, 0.5)) <= allowed


class TestSpawnKeys:
    @staticmethod
    def above(noisy, threshold=0.5):
        return {
            f.body for f in noisy
            if f.kind is FactKind.HAPPENS and f.functor in STA_FUNCTORS and f.prob > threshold
        }

    def noisy(self, scene, mean_index, mean, common):
        key = noise_spawn_key(0, mean_index, 0, common)
        return inject(scene, NoiseConfig(NoiseLevel.SMOOTH, mean, seed=3, spawn_key=key))

    def test_keys_differ_per_mean(self):
        assert noise_spawn_key(0, 1, 2) == (0, 1, 2)
        assert noise_spawn_key(0, 1, 2) != noise_spawn_key(0, 2, 2)
        assert noise_spawn_key(0, 1, 2, common_random_numbers=True) == noise_spawn_key(0, 5, 2, True)

    def test_common_draws_nest_erasures(self):
        scene, _ = synthetic_scene(episodes=5)
        assert self.above(self.noisy(scene, 1, 6.5, True)) <= self.above(self.noisy(scene, 0, 6.0, True))

    def test_independent_draws_can_restore_a_fact(self):
        scene, _ = synthetic_scene(episodes=5)
        restored = self.above(self.noisy(scene, 1, 6.5, False)) - self.above(self.noisy(scene, 0, 6.0, False))
        assert restored


class TestOccurrenceCounts:
    DOUBLING = (0.5, 1.0, 2.0, 4.0, 8.0)

    @pytest.fixture(scope="class")
    def ten_episodes(self):
        narrative, _ = synthetic_scene(episodes=10)
        return narrative

    def totals(self, narrative, means, common=False):
        table = occurrence_counts(
            narrative, means, seed=0, runs=5, spurious_fraction=1.0, common_random_numbers=common,
        )
        return table.groupby("gamma_mean").sum(numeric_only=True)

    def test_real_counts_decrease_over_seeds(self, ten_episodes):
        totals = self.totals(ten_episodes, self.DOUBLING)
        assert np.all(np.diff(totals.real_above.to_numpy()) < 0)
        assert totals.real_above.loc[0.5] >= 10 * totals.real_above.loc[8.0]

    def test_spurious_counts_increase_over_seeds(self, ten_episodes):
        totals = self.totals(ten_episodes, self.DOUBLING)
        assert np.all(np.diff(totals.spurious_above.to_numpy()) > 0)

    def test_full_grid_trend(self, ten_episodes):
        totals = self.totals(ten_episodes, SWEEP_GAMMA_MEANS)
        means = totals.index.to_series()
        assert means.corr(totals.real_above, method="spearman") < -0.95
        assert means.corr(totals.spurious_above, method="spearman") > 0.95

    def test_common_draws_strictly_monotone(self, ten_episodes):
        totals = self.totals(ten_episodes, SWEEP_GAMMA_MEANS, common=True)
        assert np.all(np.diff(totals.real_above.to_numpy()) < 0)

    def test_common_draws_spurious_strictly_increase(self):
        narrative, _ = synthetic_scene(episodes=20)
        totals = self.totals(narrative, SWEEP_GAMMA_MEANS, common=True)
        assert np.all(np.diff(totals.spurious_above.to_numpy()) > 0)

    def test_one_row_per_run_and_mean(self, scene):
        table = occurrence_counts(scene, (1.0, 2.0), runs=3)
        assert len(table) == 6
        assert list(table.columns) == ["gamma_mean", "run", "real_above", "walking_above", "spurious_above"]
