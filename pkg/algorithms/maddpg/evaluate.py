"""
Evaluation of trained agents or a baseline: the environment is rolled for a fixed horizon without
exploration noise and the utility of every slot is recorded. Failed slices count 0 towards the
utility instead of the training penalty.
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from gym_mec_slicing.system_model import eval_utility
from gym_mec_slicing.utils import ConfigError, ScenarioMismatchError

logger = logging.getLogger(__name__)

TABLE_ORDER = ('random', 'over', 'maddpg', 'static')


class MaddpgPolicy:
    """ Greedy actions of every agent from its local state """
    def __init__(self, agents):
        self.agents = agents

    def __call__(self, observation):
        return np.array([agent.act(observation['local'][idx], 0.0)
                         for idx, agent in enumerate(self.agents)])


@dataclass
class EvalSummary:
    policy: str
    num_slots: int
    maximum: float
    minimum: float
    average: float
    variance: float
    seed: int = None
    config_hash: str = None
    scenario_hash: str = None
    per_seed: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def summarize(utilities, policy, **kwargs):
    """ Maximum, minimum, average and population variance of per slot utilities """
    utilities = np.asarray(utilities, dtype=np.float64)
    return EvalSummary(policy=policy, num_slots=len(utilities), maximum=float(np.max(utilities)),
                       minimum=float(np.min(utilities)), average=float(np.mean(utilities)),
                       variance=float(np.var(utilities)), **kwargs)


def summarize_seeds(summaries):
    """
    Pools the summaries of one policy evaluated on several seeds of the same scenario. The pooled
    statistics are those of all slots of all seeds together; per_seed keeps the statistics of
    every seed.

    :param summaries: (list) EvalSummary of one policy, one per seed
    :return: (EvalSummary) pooled summary with seed None
    """
    if not summaries:
        raise ConfigError('No summaries to pool')
    policies = {s.policy for s in summaries}
    if len(policies) > 1:
        raise ConfigError('Cannot pool summaries of different policies: {}'.format(
            sorted(policies)))
    scenarios = {(s.scenario_hash, s.num_slots) for s in summaries}
    if len(scenarios) > 1:
        raise ScenarioMismatchError('Seeds were evaluated on different scenarios: {}'.format(
            sorted(scenarios, key=str)))
    seeds = [s.seed for s in summaries]
    if None in seeds or len(set(seeds)) != len(seeds):
        raise ConfigError('Pooled summaries need distinct seeds, got {}'.format(seeds))

    counts = np.array([s.num_slots for s in summaries], dtype=np.float64)
    averages = np.array([s.average for s in summaries])
    variances = np.array([s.variance for s in summaries])
    average = float(np.sum(counts * averages) / np.sum(counts))
    # within seed variance plus the spread of the seed averages
    variance = float(np.sum(counts * (variances + (averages - average) ** 2)) / np.sum(counts))

    per_seed = {str(s.seed): {'maximum': s.maximum, 'minimum': s.minimum, 'average': s.average,
                              'variance': s.variance, 'num_slots': s.num_slots}
                for s in sorted(summaries, key=lambda s: s.seed)}
    hashes = {s.config_hash for s in summaries}
    return EvalSummary(policy=summaries[0].policy, num_slots=int(np.sum(counts)),
                       maximum=max(s.maximum for s in summaries),
                       minimum=min(s.minimum for s in summaries),
                       average=average, variance=variance,
                       config_hash=hashes.pop() if len(hashes) == 1 else None,
                       scenario_hash=summaries[0].scenario_hash, per_seed=per_seed)


def rollout(env, policy, horizon):
    """
    Steps env for horizon slots from its current state.

    :return: (pd.DataFrame) one row per slot with slot, utility, reward and failed slice count
    """
    obs = env.observe()
    rows = []
    for _ in range(horizon):
        obs, reward, _, _, info = env.step(policy(obs))
        outcome = info['outcome']
        rows.append({'slot': outcome.slot, 'utility': eval_utility(outcome), 'reward': reward,
                     'failed': int(np.sum(outcome.failed))})
    return pd.DataFrame(rows, columns=['slot', 'utility', 'reward', 'failed'])


def evaluate(env, policy, horizon, policy_name, **summary_kwargs):
    frame = rollout(env, policy, horizon)
    summary = summarize(frame['utility'].to_numpy(), policy_name, **summary_kwargs)
    logger.info('%s over %d slots | max %.4f | min %.4f | avg. %.4f | var %.4f', policy_name,
                summary.num_slots, summary.maximum, summary.minimum, summary.average,
                summary.variance)
    return frame, summary


def comparison_table(summaries):
    """
    One row per policy in table order with the summary statistics and the ratio of its average
    utility to the average of every other policy.
    """
    order = {name: rank for rank, name in enumerate(TABLE_ORDER)}
    ordered = sorted(summaries, key=lambda s: (order.get(s.policy, len(order)), s.policy))
    rows = []
    for summary in ordered:
        row = {'policy': summary.policy, 'maximum': summary.maximum, 'minimum': summary.minimum,
               'average': summary.average, 'variance': summary.variance,
               'num_slots': summary.num_slots}
        for other in ordered:
            row['ratio_to_{}'.format(other.policy)] = summary.average / other.average \
                if other.average != 0 else np.nan
        rows.append(row)
    return pd.DataFrame(rows)
