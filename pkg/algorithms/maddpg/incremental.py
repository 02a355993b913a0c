"""
Changing the number of slices at runtime. The parameters of the current agents are averaged into a
generalized model. Growing loads it into the new agents and keeps the existing ones; shrinking keeps
the first new_count agents and loads the generalized model into all of them. A short fine tuning
run with a scaled schedule and an emptied replay memory follows.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from algorithms.maddpg.agent import Agent
from algorithms.maddpg.train import TrainSchedule, train
from gym_mec_slicing.utils import ConfigError, CountError, DimensionMismatchError

logger = logging.getLogger(__name__)

NETWORKS = ('actor', 'critic', 'target_actor', 'target_critic')
TARGET_SOURCES = ('mains', 'targets')


@dataclass
class GeneralizedModel:
    actor: np.ndarray
    critic: np.ndarray
    target_actor: np.ndarray
    target_critic: np.ndarray
    source_count: int
    provenance: dict = field(default_factory=dict)

    def networks(self, targets_from='mains'):
        """ Parameter vectors to load as (actor, critic, target_actor, target_critic) """
        if targets_from not in TARGET_SOURCES:
            raise ConfigError('targets_from must be one of {}, got {}'.format(TARGET_SOURCES,
                                                                           targets_from))
        if targets_from == 'mains':
            return self.actor, self.critic, self.actor, self.critic
        return self.actor, self.critic, self.target_actor, self.target_critic


def average_params(agents, provenance=None):
    """ Elementwise mean over the agents of each of their four networks """
    if not agents:
        raise CountError('Cannot average the parameters of zero agents')
    reference = agents[0]
    for agent in agents[1:]:
        for name in NETWORKS:
            if not getattr(agent, name).same_shape(getattr(reference, name)):
                raise DimensionMismatchError('Network {} of agent {} differs in shape from agent '
                                             '{}'.format(name, agent.slice_id, reference.slice_id))
    averaged = {name: np.sum([getattr(agent, name).params for agent in agents], axis=0) /
                len(agents) for name in NETWORKS}
    return GeneralizedModel(source_count=len(agents), provenance=dict(provenance or {}),
                            **averaged)


def _spawn(template, slice_id, generalized, targets_from, noise_params, noise_rng):
    agent = Agent(slice_id, template.local_dim, template.global_dim,
                  action_dim=template.action_dim, lr=template.lr,
                  noise_params=noise_params, noise_rng=noise_rng)
    agent.load_networks(*generalized.networks(targets_from))
    return agent


def grow(agents, new_count, generalized, max_slices, targets_from='mains', noise_params=None,
         noise_rng=None):
    """
    Appends new_count - len(agents) agents carrying the generalized model. Existing agents keep
    their parameters; every agent starts with fresh optimizer moments.
    """
    if not len(agents) < new_count <= max_slices:
        raise CountError('Cannot grow from {} to {} agents (max_slices={})'.format(
            len(agents), new_count, max_slices))
    grown = list(agents)
    for slice_id in range(len(agents), new_count):
        grown.append(_spawn(agents[0], slice_id, generalized, targets_from, noise_params,
                            noise_rng))
    for agent in grown:
        agent.reset_optimizers()
    logger.info('Grew from %d to %d agents', len(agents), new_count)
    return grown


def shrink(agents, new_count, generalized, targets_from='mains'):
    """ Keeps the first new_count agents, all set to the generalized model """
    if not 1 <= new_count < len(agents):
        raise CountError('Cannot shrink from {} to {} agents'.format(len(agents), new_count))
    shrunk = list(agents[:new_count])
    for agent in shrunk:
        agent.load_networks(*generalized.networks(targets_from))
        agent.reset_optimizers()
    logger.info('Shrank from %d to %d agents', len(agents), new_count)
    return shrunk


def transition(agents, new_count, max_slices, targets_from='mains', noise_params=None,
               noise_rng=None, provenance=None):
    """ Averages the current agents and grows or shrinks to new_count """
    generalized = average_params(agents, provenance)
    if new_count > len(agents):
        return grow(agents, new_count, generalized, max_slices, targets_from, noise_params,
                    noise_rng), generalized
    return shrink(agents, new_count, generalized, targets_from), generalized


def scale_schedule(schedule, fraction=0.12, batch_size=200):
    """ Base schedule with k1, k2 and k3 scaled by fraction and rounded to the nearest step """
    if not 0.0 < fraction <= 1.0:
        raise ConfigError('fraction must lie in (0, 1], got {}'.format(fraction))

    def scaled(k):
        return int(np.floor(k * fraction + 0.5))

    return TrainSchedule(k1=scaled(schedule.k1), k2=scaled(schedule.k2), k3=scaled(schedule.k3),
                         batch_size=batch_size, gamma=schedule.gamma, tau=schedule.tau)


def incremental_train(env, agents, schedule, memory, rng, fraction=0.12, batch_size=200,
                      initial_noise_scale=1.0, log_interval=100):
    """
    Fine tunes transitioned agents on the reconfigured environment with the scaled schedule,
    starting from an empty replay memory.
    """
    memory.clear()
    scaled = scale_schedule(schedule, fraction, batch_size)
    logger.info('Fine tuning %d agents with schedule (%d, %d, %d), batch %d', len(agents),
                scaled.k1, scaled.k2, scaled.k3, scaled.batch_size)
    return train(env, agents, scaled, memory, rng, initial_noise_scale, log_interval)
