"""
Tests of the baseline allocation policies and of the evaluation summaries.
"""
import unittest

import numpy as np

from algorithms.maddpg.agent import Agent
from algorithms.maddpg.baselines import (BaselinePolicy, over_allocation_policy, random_policy,
                                         static_share_action, static_slicing_policy)
from algorithms.maddpg.evaluate import (EvalSummary, MaddpgPolicy, comparison_table, evaluate,
                                        rollout, summarize, summarize_seeds)
from gym_mec_slicing.envs import SlicingEnv
from gym_mec_slicing.utils import ConfigError, ScenarioMismatchError


def granted(env, actions):
    """ Steps env once and returns the outcome of the slot """
    _, _, _, _, info = env.step(actions)
    return info['outcome']


class TestBaselines(unittest.TestCase):
    def test_random_policy(self):
        first = BaselinePolicy('random', 4, rng=np.random.default_rng(0))
        second = BaselinePolicy('random', 4, rng=np.random.default_rng(0))
        actions = np.array([first() for _ in range(5000)])
        self.assertEqual(actions.shape, (5000, 4, 5))
        self.assertTrue(np.all((actions >= 0.0) & (actions <= 1.0)))
        np.testing.assert_array_equal(actions[0], second())
        # mean claim is half the per-slice cap: 20 GHz of J = 100
        self.assertAlmostEqual(np.mean(actions) * 0.4 * 100.0, 20.0, delta=0.2)
        self.assertEqual(random_policy(0, np.random.default_rng(1)).shape, (5,))

    def test_over_allocation_claims_the_caps(self):
        np.testing.assert_array_equal(over_allocation_policy(3), np.ones(5))
        env = SlicingEnv(seed=0)
        env.reset()
        outcome = granted(env, BaselinePolicy('over', 4)())
        # three slices share MEC 2 and the third one overdraws it
        np.testing.assert_array_equal(outcome.served, [True, True, False, True])
        for grant in outcome.grants:
            np.testing.assert_array_equal(grant.compute_alloc, 40.0)
            np.testing.assert_array_equal(grant.bandwidth_alloc, 4.0)

    def test_static_equal_partition(self):
        self.assertEqual(static_share_action(0.25), 0.625)
        self.assertEqual(static_share_action(0.5), 1.0)
        np.testing.assert_array_equal(static_slicing_policy(1, 2), np.ones(5))

        env = SlicingEnv(seed=0)
        env.reset()
        actions = BaselinePolicy('static', 4)()
        np.testing.assert_array_equal(actions, 0.625)
        outcome = granted(env, actions)
        self.assertTrue(np.all(outcome.served))
        for grant in outcome.grants:
            np.testing.assert_array_equal(grant.compute_alloc, 25.0)
            np.testing.assert_array_equal(grant.bandwidth_alloc, 2.5)

        env = SlicingEnv(num_slices=2, seed=0)
        env.reset()
        outcome = granted(env, BaselinePolicy('static', 2)())
        for grant in outcome.grants:
            np.testing.assert_array_equal(grant.compute_alloc, 40.0)

    def test_static_share_table(self):
        policy = BaselinePolicy('static', 4, shares=[0.1, 0.2, 0.3, 0.4])
        np.testing.assert_allclose(policy()[:, 0], [0.25, 0.5, 0.75, 1.0])
        for shares in ([0.5, 0.5], [0.5, 0.5, 0.5, -0.5], [0.3, 0.3, 0.3, 0.3],
                       [0.0, 0.5, 0.25, 0.25]):
            with self.assertRaises(ConfigError):
                BaselinePolicy('static', 4, shares=shares)
        with self.assertRaises(ConfigError):
            BaselinePolicy('greedy', 4)
        with self.assertRaises(ConfigError):
            static_slicing_policy(0, 0)


class TestEvaluate(unittest.TestCase):
    def test_summarize(self):
        summary = summarize([0.0, 0.5, 1.0], 'static', seed=3)
        self.assertEqual((summary.maximum, summary.minimum, summary.average), (1.0, 0.0, 0.5))
        self.assertAlmostEqual(summary.variance, 1.0 / 6.0, places=15)
        self.assertEqual(summary.num_slots, 3)
        self.assertEqual(EvalSummary.from_dict(summary.to_dict()), summary)

    def test_summarize_seeds(self):
        per_seed = {0: [0.2, 0.4, 0.9], 1: [0.1, 0.6, 0.5], 2: [0.3, 0.3, 0.8]}
        summaries = [summarize(utilities, 'maddpg', seed=seed, scenario_hash='abc')
                     for seed, utilities in per_seed.items()]
        pooled = summarize_seeds(summaries[::-1])
        everything = np.concatenate(list(per_seed.values()))
        self.assertEqual(pooled.num_slots, 9)
        self.assertEqual((pooled.maximum, pooled.minimum), (0.9, 0.1))
        self.assertAlmostEqual(pooled.average, np.mean(everything), places=14)
        self.assertAlmostEqual(pooled.variance, np.var(everything), places=14)
        self.assertIsNone(pooled.seed)
        self.assertEqual(list(pooled.per_seed), ['0', '1', '2'])
        self.assertEqual(pooled.per_seed['1']['maximum'], 0.6)
        self.assertAlmostEqual(pooled.per_seed['2']['average'], 1.4 / 3.0, places=14)
        self.assertEqual(EvalSummary.from_dict(pooled.to_dict()), pooled)

    def test_summarize_seeds_errors(self):
        first = summarize([0.5, 0.5], 'static', seed=0, scenario_hash='abc')
        with self.assertRaises(ConfigError):
            summarize_seeds([])
        with self.assertRaises(ConfigError):
            summarize_seeds([first, summarize([0.5, 0.5], 'over', seed=1, scenario_hash='abc')])
        with self.assertRaises(ConfigError):
            summarize_seeds([first, first])
        with self.assertRaises(ScenarioMismatchError):
            summarize_seeds([first, summarize([0.5], 'static', seed=1, scenario_hash='abc')])

    def test_rollout_of_failing_policy(self):
        env = SlicingEnv(seed=0)
        env.reset()
        frame = rollout(env, lambda obs: np.zeros((4, 5)), 10)
        self.assertEqual(list(frame['slot']), list(range(10)))
        np.testing.assert_array_equal(frame['utility'], 0.0)
        np.testing.assert_array_equal(frame['reward'], -1.0)
        np.testing.assert_array_equal(frame['failed'], 4)

    def test_evaluate_maddpg_policy(self):
        env = SlicingEnv(seed=0)
        env.reset()
        rng = np.random.default_rng(0)
        agents = [Agent(i, 10, env.global_dim, rng=rng) for i in range(4)]
        frame, summary = evaluate(env, MaddpgPolicy(agents), 30, 'maddpg', seed=0)
        self.assertEqual(summary.num_slots, 30)
        self.assertAlmostEqual(summary.average, frame['utility'].mean(), places=12)
        self.assertTrue(0.0 <= summary.minimum <= summary.average <= summary.maximum <= 1.0)
        # greedy agents never touch their exploration noise
        for agent in agents:
            np.testing.assert_array_equal(agent.noise.state, 0.0)

    def test_comparison_table(self):
        summaries = [summarize([0.4, 0.5], name) for name in ('static', 'maddpg', 'over',
                                                               'random')]
        table = comparison_table(summaries)
        self.assertEqual(list(table['policy']), ['random', 'over', 'maddpg', 'static'])
        np.testing.assert_array_equal(table['ratio_to_static'], 1.0)

        table = comparison_table([summarize([0.6], 'maddpg'), summarize([0.4], 'static')])
        self.assertAlmostEqual(table.loc[0, 'ratio_to_static'], 1.5)
        self.assertAlmostEqual(table.loc[1, 'ratio_to_maddpg'], 2.0 / 3.0)


if __name__ == '__main__':
    unittest.main()
