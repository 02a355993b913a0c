"""
Experiment runner: builds seeded scenarios from an experiment config, trains, evaluates,
transitions agent counts and compares policies, writing every result under
<output_dir>/seed_<seed>/. Summaries pooled over seeds and their comparison sit in <output_dir>.

All randomness of a run comes from one root seed split into the named streams of
gym_mec_slicing.utils.seed_streams, so (config, seed) always reproduces the same files.
"""
import copy
import json
import logging
import os
import tempfile
from multiprocessing import Pool

import numpy as np

from algorithms.maddpg.agent import Agent
from algorithms.maddpg.baselines import BaselinePolicy
from algorithms.maddpg.evaluate import (EvalSummary, MaddpgPolicy, comparison_table, evaluate,
                                        summarize_seeds)
from algorithms.maddpg.incremental import TARGET_SOURCES, incremental_train, transition
from algorithms.maddpg.memory import ReplayMemory
from algorithms.maddpg.train import TrainSchedule, train
from gym_mec_slicing.envs import SlicingEnv
from gym_mec_slicing.envs.slicing_env import ACTION_DIM, LOCAL_DIM
from gym_mec_slicing.utils import (CheckpointMismatchError, ConfigError, CountError,
                                   OutputError, ScenarioMismatchError, SlicingError, config_hash,
                                   merge_config, read_config, seed_streams, stream_seed)

logger = logging.getLogger(__name__)

POLICIES = ('maddpg', 'random', 'over', 'static')
FLOAT_FORMAT = '%.17g'

DEFAULT_EXPERIMENT = {
    'env_config_file': 'config_files/default_env.json',
    'env': {},
    'num_slices': 4,
    'max_slices': 8,
    'policy': 'maddpg',
    'schedule': {'k1': 300, 'k2': 2000, 'k3': 2000, 'batch_size': 300, 'gamma': 0.99,
                 'tau': 0.1, 'lr': 1e-3, 'buffer_capacity': 50000},
    'noise': {'scale': 1.0, 'mu': 0.0, 'sigma': 0.1, 'beta': 0.9},
    'incremental': {'target_slices': None, 'fraction': 0.12, 'batch_size': 200,
                    'targets_from': 'mains'},
    'static_shares': None,
    'seeds': [0],
    'eval_horizon': 30,
    'long_horizon': 1000,
    'output_dir': 'results',
    'log_interval': 100
}
# keys that do not change any result
UNHASHED_KEYS = ('output_dir', 'log_interval')


class ExperimentConfig:
    """
    Experiment settings on top of an environment config file. Sections missing from the JSON file
    take the values of DEFAULT_EXPERIMENT.
    """
    def __init__(self, settings):
        self.settings = settings
        self.env_config = self._resolve_env()

    @classmethod
    def from_file(cls, config_path, config_dict=None):
        """
        :param config_path: (str)  Experiment JSON, absolute or relative to the gym_mec_slicing
                                   package like every other config file
        :param config_dict: (dict) Overrides, reported with a warning when they change a value
        """
        settings = copy.deepcopy(DEFAULT_EXPERIMENT)
        for key, value in read_config(config_path).items():
            if isinstance(value, dict) and isinstance(settings.get(key), dict):
                settings[key].update(value)
            else:
                settings[key] = value
        if config_dict:
            merge_config(settings, config_dict)
        return cls(settings)

    def _resolve_env(self):
        env_config = read_config(self.settings['env_config_file'])
        env_config['num_slices'] = self.settings['num_slices']
        env_config['max_slices'] = self.settings['max_slices']
        if self.settings['env']:
            merge_config(env_config, self.settings['env'])
        return env_config

    def __getitem__(self, key):
        return self.settings[key]

    @property
    def num_slices(self):
        return int(self.settings['num_slices'])

    @property
    def max_slices(self):
        return int(self.settings['max_slices'])

    @property
    def seeds(self):
        return list(self.settings['seeds'])

    def schedule(self):
        section = self.settings['schedule']
        return TrainSchedule(k1=int(section['k1']), k2=int(section['k2']), k3=int(section['k3']),
                             batch_size=int(section['batch_size']),
                             gamma=float(section['gamma']), tau=float(section['tau']))

    def noise_params(self):
        noise = self.settings['noise']
        return {'mu': noise['mu'], 'sigma': noise['sigma'], 'beta': noise['beta']}

    def resolved(self):
        hashed = {key: value for key, value in self.settings.items()
                  if key not in UNHASHED_KEYS}
        return {'experiment': hashed, 'env': self.env_config}

    def hash(self):
        return config_hash(self.resolved())

    def scenario_hash(self, num_slices, horizon):
        """ Identifies what a policy is evaluated on, whatever the policy """
        env_config = dict(self.env_config, num_slices=num_slices)
        return config_hash({'env': env_config, 'horizon': horizon})

    def make_env(self, num_slices=None):
        return SlicingEnv(config_file=None, config_dict=self.env_config, num_slices=num_slices)

    def validate(self):
        s = self.settings
        schedule, noise, inc = s['schedule'], s['noise'], s['incremental']
        try:
            self.schedule().validate()
            checks = [
                (s['policy'] in POLICIES, 'policy must be one of {}'.format(POLICIES)),
                (float(schedule['lr']) > 0, 'lr must be positive'),
                (int(schedule['buffer_capacity']) >= 1, 'buffer_capacity must be at least 1'),
                (1 <= self.num_slices <= self.max_slices,
                 'num_slices must lie in [1, max_slices={}]'.format(self.max_slices)),
                (int(s['eval_horizon']) >= 1 and int(s['long_horizon']) >= 1,
                 'evaluation horizons must be at least 1'),
                (0.0 <= float(noise['scale']) <= 1.0, 'noise scale must lie in [0, 1]'),
                (float(noise['sigma']) >= 0.0, 'noise sigma must be non-negative'),
                (0.0 <= float(noise['beta']) <= 1.0, 'noise beta must lie in [0, 1]'),
                (0.0 < float(inc['fraction']) <= 1.0, 'incremental fraction must lie in (0, 1]'),
                (int(inc['batch_size']) >= 1, 'incremental batch_size must be at least 1'),
                (inc['targets_from'] in TARGET_SOURCES,
                 'targets_from must be one of {}'.format(TARGET_SOURCES)),
                (inc['target_slices'] is None or 1 <= int(inc['target_slices']) <= self.max_slices,
                 'target_slices must lie in [1, max_slices={}]'.format(self.max_slices)),
                (isinstance(s['seeds'], list) and len(s['seeds']) > 0 and
                 all(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0
                     for seed in s['seeds']), 'seeds must be a non-empty list of integers >= 0'),
            ]
            for ok, message in checks:
                if not ok:
                    raise ConfigError(message)
            self.make_env()
            if s['static_shares'] is not None:
                BaselinePolicy('static', self.num_slices, shares=s['static_shares'])
        except SlicingError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError('Invalid experiment config: {!r}'.format(e))
        return self


def seed_dir(output_dir, seed):
    return os.path.join(output_dir, 'seed_{}'.format(seed))


def _atomic_write(path, write):
    directory = os.path.dirname(path) or '.'
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.tmp_')
        try:
            with os.fdopen(fd, 'w', newline='') as f:
                write(f)
            os.replace(tmp_path, path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
    except OSError as e:
        raise OutputError('Could not write {}: {}'.format(path, e))
    logger.info('Wrote %s', path)


def write_json(path, data):
    _atomic_write(path, lambda f: json.dump(data, f, indent=2, sort_keys=True))


def write_frame(path, frame, hash_value):
    frame = frame.copy()
    frame['config_hash'] = hash_value
    _atomic_write(path, lambda f: frame.to_csv(f, index=False, float_format=FLOAT_FORMAT))


def read_json(path, error=CheckpointMismatchError):
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise error('Could not read {}: {}'.format(path, e))


def make_agents(env, config, init_rng, noise_rng):
    lr = float(config['schedule']['lr'])
    return [Agent(slice_id, LOCAL_DIM, env.global_dim, ACTION_DIM, lr=lr, rng=init_rng,
                  noise_params=config.noise_params(), noise_rng=noise_rng)
            for slice_id in range(env.num_slices)]


def save_agents(directory, agents, hash_value):
    for agent in agents:
        write_json(os.path.join(directory, 'agent_{}.json'.format(agent.slice_id)),
                   dict(agent.to_dict(), config_hash=hash_value))


def load_agents(directory, env, config, noise_rng=None):
    """
    Reads agent_<i>.json for every active slice of env and checks they fit its dimensions and the
    max_slices of config.
    """
    manifest_path = os.path.join(directory, 'manifest.json')
    if os.path.exists(manifest_path):
        manifest = read_json(manifest_path)
        if manifest.get('max_slices') != config.max_slices:
            raise CheckpointMismatchError('Checkpoints in {} were trained with max_slices={}, '
                                          'config has {}'.format(directory,
                                                                 manifest.get('max_slices'),
                                                                 config.max_slices))
    if os.path.exists(os.path.join(directory, 'agent_{}.json'.format(env.num_slices))):
        raise CheckpointMismatchError('{} holds more agents than the {} active slices'.format(
            directory, env.num_slices))
    agents = []
    for slice_id in range(env.num_slices):
        path = os.path.join(directory, 'agent_{}.json'.format(slice_id))
        if not os.path.exists(path):
            raise CheckpointMismatchError('Missing checkpoint {}'.format(path))
        agent = Agent.from_dict(read_json(path), lr=float(config['schedule']['lr']),
                                noise_params=config.noise_params(), noise_rng=noise_rng)
        if agent.local_dim != LOCAL_DIM or agent.global_dim != env.global_dim or \
                agent.action_dim != ACTION_DIM:
            raise CheckpointMismatchError('Agent {} expects inputs ({}, {}), environment gives '
                                          '({}, {})'.format(slice_id, agent.local_dim,
                                                            agent.global_dim, LOCAL_DIM,
                                                            env.global_dim))
        agents.append(agent)
    return agents


def _manifest(config, seed, kind, num_slices, agents, schedule, provenance=None):
    return {'kind': kind,
            'seed': seed,
            'config_hash': config.hash(),
            'config': config.resolved(),
            'num_slices': num_slices,
            'max_slices': config.max_slices,
            'schedule': schedule.to_dict(),
            'agents': ['agent_{}.json'.format(agent.slice_id) for agent in agents],
            'trace': 'trace.csv',
            'provenance': provenance or {}}


def run_train(config, seed, output_dir=None):
    """ Trains one agent per slice from scratch and writes checkpoints, trace and manifest """
    config.validate()
    output_dir = output_dir or config['output_dir']
    streams = seed_streams(seed)
    env = config.make_env()
    env.reset(seed=stream_seed(streams['requests']))
    noise_rng = np.random.default_rng(streams['noise'])
    agents = make_agents(env, config, np.random.default_rng(streams['init']), noise_rng)
    memory = ReplayMemory(int(config['schedule']['buffer_capacity']),
                          rng=np.random.default_rng(streams['replay']))
    schedule = config.schedule()
    logger.info('Training %d agents, seed %d, schedule (%d, %d, %d)', len(agents), seed,
                schedule.k1, schedule.k2, schedule.k3)
    agents, trace = train(env, agents, schedule, memory, noise_rng,
                          float(config['noise']['scale']), config['log_interval'])

    cell = seed_dir(output_dir, seed)
    save_agents(cell, agents, config.hash())
    write_frame(os.path.join(cell, 'trace.csv'), trace, config.hash())
    write_json(os.path.join(cell, 'manifest.json'),
               _manifest(config, seed, 'train', env.num_slices, agents, schedule))
    return agents, trace


def run_eval(config, seed, output_dir=None, policy=None, horizon=None, checkpoint_dir=None):
    """
    Rolls the environment with a policy and no exploration, writing eval_<policy>.csv (per slot
    utility), env_trace_<policy>.csv (per slot and slice outcomes) and summary_<policy>.json.
    Requests are drawn from their own stream, not the one training saw.

    :param checkpoint_dir: (str) Directory of agent_<i>.json files for the maddpg policy, by
                                 default the seed directory of output_dir
    """
    config.validate()
    output_dir = output_dir or config['output_dir']
    policy = policy or config['policy']
    if policy not in POLICIES:
        raise ConfigError('policy must be one of {}, got {}'.format(POLICIES, policy))
    horizon = int(horizon or config['eval_horizon'])
    streams = seed_streams(seed)
    cell = seed_dir(output_dir, seed)
    env = config.make_env()
    env.record_trace = True
    env.reset(seed=stream_seed(streams['eval']))
    if policy == 'maddpg':
        act = MaddpgPolicy(load_agents(checkpoint_dir or cell, env, config))
    else:
        act = BaselinePolicy(policy, env.num_slices, rng=np.random.default_rng(streams['noise']),
                             shares=config['static_shares'] if policy == 'static' else None,
                             slice_cap_fraction=env.slice_cap_fraction)
    frame, summary = evaluate(env, act, horizon, policy, seed=seed, config_hash=config.hash(),
                              scenario_hash=config.scenario_hash(env.num_slices, horizon))
    write_frame(os.path.join(cell, 'eval_{}.csv'.format(policy)), frame, config.hash())
    write_frame(os.path.join(cell, 'env_trace_{}.csv'.format(policy)), env.trace_frame(),
                config.hash())
    write_json(os.path.join(cell, 'summary_{}.json'.format(policy)), summary.to_dict())
    return summary


def run_incremental(config, seed, base_dir, output_dir=None, target_slices=None):
    """
    Moves the agents trained for config's num_slices (read from base_dir/seed_<seed>) to
    target_slices slices and fine tunes them with the scaled schedule.
    """
    config.validate()
    output_dir = output_dir or config['output_dir']
    inc = config['incremental']
    target = target_slices if target_slices is not None else inc['target_slices']
    if target is None:
        raise ConfigError('No target slice count given for the transition')
    target = int(target)
    if target == config.num_slices or not 1 <= target <= config.max_slices:
        raise CountError('Cannot move from {} to {} slices (max_slices={})'.format(
            config.num_slices, target, config.max_slices))

    streams = seed_streams(seed)
    base_cell = seed_dir(base_dir, seed)
    noise_rng = np.random.default_rng(streams['noise'])
    base_agents = load_agents(base_cell, config.make_env(), config, noise_rng)
    base_manifest = read_json(os.path.join(base_cell, 'manifest.json'))

    env = config.make_env(num_slices=target)
    env.reset(seed=stream_seed(streams['requests']))
    provenance = {'base_dir': base_cell,
                  'base_config_hash': base_manifest.get('config_hash'),
                  'base_provenance': base_manifest.get('provenance', {}),
                  'from_slices': config.num_slices,
                  'to_slices': target,
                  'fraction': inc['fraction'],
                  'batch_size': inc['batch_size'],
                  'targets_from': inc['targets_from'],
                  'seed': seed}
    agents, _ = transition(base_agents, target, config.max_slices, inc['targets_from'],
                           config.noise_params(), noise_rng, provenance)
    memory = ReplayMemory(int(config['schedule']['buffer_capacity']),
                          rng=np.random.default_rng(streams['replay']))
    agents, trace = incremental_train(env, agents, config.schedule(), memory, noise_rng,
                                      fraction=float(inc['fraction']),
                                      batch_size=int(inc['batch_size']),
                                      initial_noise_scale=float(config['noise']['scale']),
                                      log_interval=config['log_interval'])

    kind = 'increment' if target > config.num_slices else 'decrement'
    cell = seed_dir(output_dir, seed)
    save_agents(cell, agents, config.hash())
    write_frame(os.path.join(cell, 'trace.csv'), trace, config.hash())
    write_json(os.path.join(cell, 'manifest.json'),
               _manifest(config, seed, kind, target, agents, config.schedule(), provenance))
    return agents, trace


def load_summary(path):
    return EvalSummary.from_dict(read_json(path, error=ConfigError))


def compare(summaries, output_path=None, hash_value=None):
    """ Comparison table of summaries of the same scenario, written to output_path if given """
    if len(summaries) < 2:
        raise ConfigError('Need at least 2 summaries to compare, got {}'.format(len(summaries)))
    scenarios = {(s.scenario_hash, s.num_slots) for s in summaries}
    if len(scenarios) > 1:
        raise ScenarioMismatchError('Summaries come from different scenarios: {}'.format(
            sorted(scenarios, key=str)))
    table = comparison_table(summaries)
    if output_path:
        write_frame(output_path, table, hash_value or summaries[0].scenario_hash)
    return table


def run_compare(config, seed, output_dir=None):
    """ Compares every summary_<policy>.json found in the seed directory """
    output_dir = output_dir or config['output_dir']
    cell = seed_dir(output_dir, seed)
    paths = [os.path.join(cell, 'summary_{}.json'.format(policy)) for policy in POLICIES]
    summaries = [load_summary(path) for path in paths if os.path.exists(path)]
    return compare(summaries, os.path.join(cell, 'comparison.csv'), config.hash())


def run_compare_seeds(config, seeds, output_dir=None):
    """
    Pools the summaries of every policy over seeds into <output_dir>/summary_<policy>.json and
    compares the pooled summaries in <output_dir>/comparison.csv. Policies missing from any seed
    are left out.
    """
    output_dir = output_dir or config['output_dir']
    pooled = []
    for policy in POLICIES:
        paths = [os.path.join(seed_dir(output_dir, seed), 'summary_{}.json'.format(policy))
                 for seed in seeds]
        found = [path for path in paths if os.path.exists(path)]
        if not found:
            continue
        if len(found) < len(paths):
            logger.warning('Leaving %s out of the comparison: evaluated on %d of %d seeds',
                           policy, len(found), len(paths))
            continue
        summary = summarize_seeds([load_summary(path) for path in found])
        write_json(os.path.join(output_dir, 'summary_{}.json'.format(policy)), summary.to_dict())
        pooled.append(summary)
    return compare(pooled, os.path.join(output_dir, 'comparison.csv'), config.hash())


def run_cells(function, seeds, num_processes=1, **kwargs):
    """ Runs function(seed=..., **kwargs) for every seed, in a process pool if asked to """
    if num_processes > 1 and len(seeds) > 1:
        with Pool(num_processes) as pool:
            results = [pool.apply_async(function, kwds=dict(kwargs, seed=seed)) for seed in seeds]
            return [result.get() for result in results]
    return [function(seed=seed, **kwargs) for seed in seeds]
