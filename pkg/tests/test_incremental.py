"""
Tests of parameter averaging, growing and shrinking the agent population and the scaled fine
tuning schedule.
"""
import unittest

import numpy as np

from algorithms.maddpg.agent import Agent
from algorithms.maddpg.incremental import (NETWORKS, average_params, grow, incremental_train,
                                           scale_schedule, shrink, transition)
from algorithms.maddpg.memory import ReplayMemory
from algorithms.maddpg.optim import adam_step
from algorithms.maddpg.train import TrainSchedule
from gym_mec_slicing.envs import SlicingEnv
from gym_mec_slicing.utils import ConfigError, CountError, DimensionMismatchError

GLOBAL_DIM = 53


def make_population(count, seed=0, global_dim=GLOBAL_DIM):
    rng = np.random.default_rng(seed)
    agents = [Agent(i, 10, global_dim, rng=rng) for i in range(count)]
    for agent in agents:
        # targets differ from their mains, as they do after training
        agent.target_actor.params[:] = rng.normal(size=agent.target_actor.num_params)
        agent.target_critic.params[:] = rng.normal(size=agent.target_critic.num_params)
    return agents


def snapshot(agents):
    return [{name: getattr(agent, name).get_params() for name in NETWORKS} for agent in agents]


def population_mean(agents, name):
    return np.mean([getattr(agent, name).params for agent in agents], axis=0)


class TestAverage(unittest.TestCase):
    def test_two_agents(self):
        agents = make_population(2)
        agents[0].actor.params[:2] = [0.2, 0.4]
        agents[1].actor.params[:2] = [0.6, 0.8]
        generalized = average_params(agents)
        np.testing.assert_allclose(generalized.actor[:2], [0.4, 0.6], rtol=1e-15)
        self.assertEqual(generalized.source_count, 2)

    def test_matches_elementwise_mean(self):
        agents = make_population(4)
        generalized = average_params(agents, provenance={'base': 'results/base_4'})
        for name in NETWORKS:
            np.testing.assert_allclose(getattr(generalized, name), population_mean(agents, name),
                                       rtol=1e-12, atol=1e-15)
        self.assertEqual(generalized.provenance, {'base': 'results/base_4'})

    def test_identity(self):
        agent = make_population(1)[0]
        generalized = average_params([agent])
        for name in NETWORKS:
            np.testing.assert_array_equal(getattr(generalized, name), getattr(agent, name).params)

        clones = make_population(3)
        for clone in clones[1:]:
            for name in NETWORKS:
                getattr(clone, name).set_params(getattr(clones[0], name).params)
        generalized = average_params(clones)
        for name in NETWORKS:
            np.testing.assert_allclose(getattr(generalized, name),
                                       getattr(clones[0], name).params, rtol=1e-14, atol=1e-15)

    def test_average_is_a_copy(self):
        agents = make_population(1)
        generalized = average_params(agents)
        agents[0].actor.params[:] = 0.0
        self.assertTrue(np.any(generalized.actor))

    def test_errors(self):
        with self.assertRaises(CountError):
            average_params([])
        mixed = make_population(2) + make_population(1, global_dim=58)
        with self.assertRaises(DimensionMismatchError):
            average_params(mixed)
        with self.assertRaises(ConfigError):
            average_params(make_population(2)).networks('latest')


class TestGrowShrink(unittest.TestCase):
    def assert_generalized(self, agent, generalized, targets_from='mains'):
        expected = generalized.networks(targets_from)
        for name, params in zip(NETWORKS, expected):
            np.testing.assert_array_equal(getattr(agent, name).params, params)

    def test_grow_by_one(self):
        agents = make_population(4)
        before = snapshot(agents)
        generalized = average_params(agents)
        grown = grow(agents, 5, generalized, max_slices=8)
        self.assertEqual(len(grown), 5)
        self.assertEqual([agent.slice_id for agent in grown], [0, 1, 2, 3, 4])
        for agent, saved in zip(grown[:4], before):
            for name in NETWORKS:
                np.testing.assert_array_equal(getattr(agent, name).params, saved[name])
        self.assert_generalized(grown[4], generalized)
        # new target networks start from the averaged mains
        np.testing.assert_array_equal(grown[4].target_actor.params, generalized.actor)

    def test_grow_skipping_a_step(self):
        agents = make_population(4)
        generalized = average_params(agents)
        grown = grow(agents, 6, generalized, max_slices=8, targets_from='targets')
        self.assertEqual(len(grown), 6)
        for agent in grown[4:]:
            self.assert_generalized(agent, generalized, 'targets')
        np.testing.assert_array_equal(grown[5].target_actor.params, generalized.target_actor)
        self.assertIsNot(grown[4].actor, grown[5].actor)

    def test_grown_population_keeps_the_mean(self):
        agents = make_population(4)
        generalized = average_params(agents)
        grown = grow(agents, 6, generalized, max_slices=8)
        np.testing.assert_allclose(population_mean(grown, 'actor'), generalized.actor,
                                   rtol=1e-12, atol=1e-15)

    def test_grow_errors(self):
        agents = make_population(4)
        generalized = average_params(agents)
        for count in (4, 3, 9):
            with self.assertRaises(CountError):
                grow(agents, count, generalized, max_slices=8)

    def test_shrink(self):
        agents = make_population(4)
        generalized = average_params(agents)
        shrunk = shrink(agents, 3, generalized)
        self.assertEqual([agent.slice_id for agent in shrunk], [0, 1, 2])
        for agent in shrunk:
            self.assert_generalized(agent, generalized)

        single = shrink(make_population(4, seed=1), 1, generalized, targets_from='targets')
        self.assertEqual(len(single), 1)
        self.assert_generalized(single[0], generalized, 'targets')

        for count in (0, 4, 5):
            with self.assertRaises(CountError):
                shrink(make_population(4), count, generalized)

    def test_shrink_identical_agents(self):
        agents = make_population(4)
        for agent in agents[1:]:
            for name in NETWORKS:
                getattr(agent, name).set_params(getattr(agents[0], name).params)
        before = snapshot(agents[:1])[0]
        shrunk, _ = transition(agents, 2, max_slices=8, targets_from='targets')
        for agent in shrunk:
            for name in NETWORKS:
                np.testing.assert_allclose(getattr(agent, name).params, before[name],
                                           rtol=1e-14, atol=1e-15)

    def test_grow_then_shrink_round_trip(self):
        agents = make_population(4)
        grown, _ = transition(agents, 5, max_slices=8)
        expected = {name: population_mean(grown, name) for name in ('actor', 'critic')}
        shrunk, generalized = transition(grown, 4, max_slices=8)
        self.assertEqual(generalized.source_count, 5)
        self.assertEqual(len(shrunk), 4)
        for agent in shrunk:
            np.testing.assert_allclose(agent.actor.params, expected['actor'], rtol=1e-12,
                                       atol=1e-15)
            np.testing.assert_allclose(agent.critic.params, expected['critic'], rtol=1e-12,
                                       atol=1e-15)
            np.testing.assert_array_equal(agent.target_actor.params, agent.actor.params)

    def test_optimizers_reset(self):
        agents = make_population(4)
        for agent in agents:
            adam_step(agent.actor_optim, agent.actor.params, np.ones(agent.actor.num_params))
            adam_step(agent.critic_optim, agent.critic.params, np.ones(agent.critic.num_params))
        grown, _ = transition(agents, 5, max_slices=8)
        for agent in grown:
            self.assertEqual(agent.actor_optim.step_count, 0)
            self.assertEqual(agent.critic_optim.step_count, 0)
            self.assertFalse(np.any(agent.critic_optim.m))

        shrunk, _ = transition(make_population(4), 2, max_slices=8)
        self.assertTrue(all(agent.actor_optim.step_count == 0 for agent in shrunk))


class TestIncrementalTrain(unittest.TestCase):
    def test_scale_schedule(self):
        base = TrainSchedule(k1=300, k2=2000, k3=2000, batch_size=300, gamma=0.95, tau=0.05)
        scaled = scale_schedule(base, 0.12, 200)
        self.assertEqual((scaled.k1, scaled.k2, scaled.k3), (36, 240, 240))
        self.assertEqual(scaled.batch_size, 200)
        self.assertEqual((scaled.gamma, scaled.tau), (0.95, 0.05))

        same = scale_schedule(base, 1.0, 300)
        self.assertEqual(same, base)
        for fraction in (0.0, 1.5):
            with self.assertRaises(ConfigError):
                scale_schedule(base, fraction)

    def test_fine_tuning_starts_from_empty_memory(self):
        env = SlicingEnv(num_slices=5, seed=0)
        env.reset()
        agents, _ = transition(make_population(4), 5, max_slices=env.max_slices)
        memory = ReplayMemory(1000, rng=np.random.default_rng(0))
        for _ in range(30):
            # transitions of the old population would not stack with the new ones
            memory.append(np.zeros(GLOBAL_DIM), np.zeros((4, 10)), np.zeros((4, 5)),
                          np.zeros(4), np.zeros(GLOBAL_DIM), np.zeros((4, 10)))

        base = TrainSchedule(k1=50, k2=50, k3=50, batch_size=300)
        agents, trace = incremental_train(env, agents, base, memory, np.random.default_rng(1),
                                          fraction=0.12, batch_size=4, log_interval=0)
        self.assertEqual(len(agents), 5)
        self.assertEqual(len(trace), 18)
        self.assertEqual(len(memory), 18)
        self.assertIn('reward_4', trace.columns)
        self.assertEqual(trace['step'][trace['loss_4'].notna()].iloc[0], 7)


if __name__ == '__main__':
    unittest.main()
