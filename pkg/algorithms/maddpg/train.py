"""
Three stage MADDPG training loop on the slicing environment.

Stage 1 (k1 steps) fills the replay memory with uniformly random actions. Stage 2 (k2 steps) acts
with the actors plus OU noise whose scale decays linearly from its initial value to 0. Stage 3
(k3 steps) acts greedily. From the first stage 2/3 step at which the memory holds a full batch,
every step samples one batch and runs, for each agent in slice order, a critic update, an actor
update and a soft update of both target networks.
"""
import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from algorithms.maddpg.agent import soft_update, update_actor, update_critic
from gym_mec_slicing.utils import ConfigError, CountError

logger = logging.getLogger(__name__)


@dataclass
class TrainSchedule:
    k1: int = 300
    k2: int = 2000
    k3: int = 2000
    batch_size: int = 300
    gamma: float = 0.99
    tau: float = 0.1

    @property
    def total_steps(self):
        return self.k1 + self.k2 + self.k3

    def validate(self):
        if min(self.k1, self.k2, self.k3) < 0:
            raise ConfigError('k1, k2 and k3 must be non-negative, got {}'.format(
                (self.k1, self.k2, self.k3)))
        if self.batch_size < 1:
            raise ConfigError('batch_size must be at least 1, got {}'.format(self.batch_size))
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError('gamma must lie in [0, 1), got {}'.format(self.gamma))
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError('tau must lie in (0, 1], got {}'.format(self.tau))
        return self

    def to_dict(self):
        return asdict(self)


def exploration_scale(step, schedule, initial_scale=1.0):
    """
    Noise scale used at a global step (0-based). During stage 2 it is
    initial_scale * (k2 - f) / k2 with f the number of exploration steps already taken.
    """
    if step < schedule.k1:
        return initial_scale
    f = step - schedule.k1
    if f < schedule.k2:
        return initial_scale * (schedule.k2 - f) / schedule.k2
    return 0.0


def stage_of(step, schedule):
    if step < schedule.k1:
        return 1
    if step < schedule.k1 + schedule.k2:
        return 2
    return 3


def check_schedule(schedule, memory):
    schedule.validate()
    if schedule.k2 + schedule.k3 > 0:
        if schedule.total_steps < schedule.batch_size:
            raise ConfigError('Batch size {} can never be filled in {} steps'.format(
                schedule.batch_size, schedule.total_steps))
        if memory.capacity < schedule.batch_size:
            raise ConfigError('Replay capacity {} is smaller than the batch size {}'.format(
                memory.capacity, schedule.batch_size))


def train(env, agents, schedule, memory, rng, initial_noise_scale=1.0, log_interval=100):
    """
    Runs the whole schedule from the environment's current state.

    :param env:      (SlicingEnv)   Already reset; one agent per active slice
    :param agents:   (list)         Agent of every active slice, in slice order
    :param schedule: (TrainSchedule)
    :param memory:   (ReplayMemory) Shared replay memory
    :param rng:      (np.random.Generator) Draws the stage 1 random actions
    :return: (tuple) the agents and a per step trace DataFrame
    """
    check_schedule(schedule, memory)
    if len(agents) != env.num_slices:
        raise CountError('{} agents for {} active slices'.format(len(agents), env.num_slices))

    num_agents = len(agents)
    action_shape = env.action_space.shape
    obs = env.observe()
    rows = []
    interval_rewards = []
    for step in range(schedule.total_steps):
        stage = stage_of(step, schedule)
        scale = exploration_scale(step, schedule, initial_noise_scale)
        if stage == 1:
            actions = rng.uniform(0.0, 1.0, size=action_shape)
        else:
            actions = np.array([agent.act(obs['local'][idx], scale)
                                for idx, agent in enumerate(agents)]).reshape(action_shape)

        next_obs, reward, _, _, info = env.step(actions)
        outcome = info['outcome']
        memory.append(obs['global'], obs['local'], actions, outcome.rewards, next_obs['global'],
                      next_obs['local'])

        losses = np.full(num_agents, np.nan)
        mean_qs = np.full(num_agents, np.nan)
        if stage > 1 and len(memory) >= schedule.batch_size:
            batch = memory.sample(schedule.batch_size)
            for idx, agent in enumerate(agents):
                losses[idx] = update_critic(agent, batch, idx, schedule.gamma)
                mean_qs[idx] = update_actor(agent, batch, idx)
                soft_update(agent.actor, agent.target_actor, schedule.tau)
                soft_update(agent.critic, agent.target_critic, schedule.tau)

        row = {'step': step + 1, 'stage': stage, 'epsilon': scale, 'reward': reward}
        for idx in range(num_agents):
            row['reward_{}'.format(idx)] = outcome.rewards[idx]
            row['loss_{}'.format(idx)] = losses[idx]
            row['mean_q_{}'.format(idx)] = mean_qs[idx]
        rows.append(row)

        interval_rewards.append(reward)
        if log_interval and (step + 1) % log_interval == 0:
            logger.info('step = %d / %d | stage %d | epsilon %.3f | avg. reward %.4f',
                        step + 1, schedule.total_steps, stage, scale, np.mean(interval_rewards))
            interval_rewards = []
        obs = next_obs

    return agents, pd.DataFrame(rows)
