"""
MEC network slicing environment with an openAI gym interface. Every slot each active slice issues a
request, its agent chooses how much compute (on the 3 MECs of its path) and bandwidth (on the 2
links of its path) to claim, and the environment checks the claims against the remaining URLLC
resources, computes latency, energy and rewards and finally releases what completed requests held.
"""
import copy
import logging
import math
from dataclasses import dataclass, field

import gym
import numpy as np
import pandas as pd
from gym import spaces
from gym.utils import seeding

from gym_mec_slicing.resources import (AllocationGrant, LINKS_PER_SLICE, MECS_PER_SLICE,
                                       NormalizationWindow, ResourceLedger, SliceRequest, Topology)
from gym_mec_slicing.system_model import (PowerModel, compute_energy, compute_latency,
                                          compute_reward, eval_utility, is_servable,
                                          served_score)
from gym_mec_slicing.utils import (ConfigError, CountError, DimensionMismatchError, DomainError,
                                   UnknownSliceError, read_config)

logger = logging.getLogger(__name__)

ACTION_DIM = MECS_PER_SLICE + LINKS_PER_SLICE
LOCAL_DIM = 2 * ACTION_DIM
REQUEST_BLOCK = ACTION_DIM
OCCUPANCY_MODES = ('duration', 'one_slot')


@dataclass
class StepOutcome:
    """
    Result of one slot. Arrays hold one entry per active slice. A slice without a request this slot
    is neither served nor failed: its reward and utility are 0 and its latency/energy are NaN.
    """
    slot: int
    requested: np.ndarray
    served: np.ndarray
    latency: np.ndarray
    computing_latency: np.ndarray
    transmission_latency: np.ndarray
    energy: np.ndarray
    rewards: np.ndarray
    utility: np.ndarray
    grants: list = field(default_factory=list)

    @property
    def failed(self):
        return self.requested & ~self.served

    @property
    def shared_reward(self):
        return float(np.sum(self.rewards))

    @property
    def total_utility(self):
        return eval_utility(self)


class SlicingEnv(gym.Env):
    """
    Discrete time slicing environment. Actions are a (num_slices, 5) array in [0, 1]: the first 3
    columns scale the per-slice compute cap on the path MECs, the last 2 the bandwidth cap on the
    path links. Observations are a dict with the critic state under "global" and the stacked actor
    states under "local".
    """
    metadata = {'render_modes': []}

    def __init__(self, config_file='config_files/default_env.json', config_dict=None,
                 num_slices=None, seed=None):
        """
        :param config_file: (str)  Path to environment configuration file. Either absolute or
                                   relative path to the root of this package. When None,
                                   config_dict is taken as the complete configuration.
        :param config_dict: (dict) Overrides specific fields from the input configuration file.
        :param num_slices:  (int)  Number of active slices, defaults to the config value
        :param seed:        (int)  Seed used by the first reset when it is not given one
        """
        # Loads config settings from file
        if config_file is None:
            self.config = copy.deepcopy(config_dict)
        else:
            self.config = read_config(config_file, config_dict)

        # Slice settings
        self.max_slices = int(self.config['max_slices'])
        self.num_slices = int(self.config['num_slices'] if num_slices is None else num_slices)
        if not 0 <= self.num_slices <= self.max_slices:
            raise CountError('num_slices must be within [0, {}], got {}'.format(
                self.max_slices, self.num_slices))
        self.topology = Topology.from_config(self.config['topology'], self.max_slices)

        # Request settings
        demand = self.config['demand']
        self.compute_range = tuple(float(x) for x in demand['compute_range'])
        self.data_range = tuple(float(x) for x in demand['data_range'])
        self.arrival_prob = float(demand.get('arrival_prob', 1.0))
        if not (0 <= self.compute_range[0] <= self.compute_range[1] and
                0 <= self.data_range[0] <= self.data_range[1] and
                self.compute_range[1] > 0 and self.data_range[1] > 0):
            raise ConfigError('Demand ranges must be ordered, non-negative and not all zero')
        if not 0.0 <= self.arrival_prob <= 1.0:
            raise ConfigError('arrival_prob must lie in [0, 1], got {}'.format(self.arrival_prob))

        # Occupancy settings
        occupancy = self.config.get('occupancy', {})
        self.occupancy_mode = occupancy.get('mode', 'duration')
        self.slot_length = float(occupancy.get('slot_length', 1.0))
        self.max_occupancy = int(occupancy.get('max_occupancy', 5))
        if self.occupancy_mode not in OCCUPANCY_MODES:
            raise ConfigError('Unknown occupancy mode {}. Choose from {}'.format(
                self.occupancy_mode, OCCUPANCY_MODES))
        if self.slot_length <= 0 or self.max_occupancy < 1:
            raise ConfigError('slot_length must be positive and max_occupancy at least 1')

        # Reward settings
        self.power_model = PowerModel(**self.config.get('power_model', {}))
        self.slice_cap_fraction = float(self.config.get('slice_cap_fraction', 0.4))
        self.epsilon_min = float(self.config.get('epsilon_min', 1e-6))
        if not 0 < self.slice_cap_fraction <= 1:
            raise ConfigError('slice_cap_fraction must lie in (0, 1]')
        self.record_trace = bool(self.config.get('record_trace', False))

        # Resource bookkeeping
        self.ledger = ResourceLedger(self.topology)
        self.window = NormalizationWindow(self.config.get('window_length', 500))

        # Observation and action settings
        self.global_dim = self.topology.num_mecs + self.topology.num_links + \
            REQUEST_BLOCK * self.max_slices
        self.observation_space = spaces.Dict({
            'global': spaces.Box(low=0.0, high=1.0, shape=(self.global_dim,), dtype=np.float64),
            'local': spaces.Box(low=0.0, high=1.0, shape=(self.num_slices, LOCAL_DIM),
                                dtype=np.float64)})
        self.action_space = spaces.Box(low=0.0, high=1.0, shape=(self.num_slices, ACTION_DIM),
                                       dtype=np.float64)

        # Randomness settings
        self._initial_seed = seed
        self._seeded = False

        # Slot state, set by reset
        self.slot = 0
        self.requests = [None] * self.num_slices
        self.trace = []

    def seed(self, seed=None):
        self.np_random, seed1 = seeding.np_random(seed)
        return seed1

    def reset(self, *, seed=None, options=None):
        if seed is None and not self._seeded:
            seed = self._initial_seed
        if seed is not None or not self._seeded:
            self.seed(seed)
            self._seeded = True
        self.ledger.reset()
        self.window.reset()
        self.slot = 0
        self.trace = []
        self._generate_requests()
        return self.observe(), {'slot': self.slot}

    def step(self, actions):
        """
        Runs one slot. Releases of completed requests and the requests of the next slot are
        processed at the end, so the returned observation is the one the agents act on next.
        """
        actions = self._check_actions(actions)
        num = self.num_slices
        requested = np.array([request is not None for request in self.requests], dtype=bool)
        served = np.zeros(num, dtype=bool)
        grants = [None] * num

        # scale actions to grants and claim resources in ascending slice order
        compute_cap = self.slice_cap_fraction * self.topology.urllc_compute_cap
        bandwidth_cap = self.slice_cap_fraction * self.topology.urllc_bandwidth_cap
        for slice_id in range(num):
            if not requested[slice_id]:
                continue
            path = self.topology.slice_paths[slice_id]
            grant = AllocationGrant(slice_id=slice_id,
                                    compute_alloc=actions[slice_id, :MECS_PER_SLICE] * compute_cap,
                                    bandwidth_alloc=actions[slice_id, MECS_PER_SLICE:] *
                                    bandwidth_cap,
                                    slot_created=self.slot, mecs=path.mecs, links=path.links)
            if not is_servable(grant, self.topology, self.epsilon_min, self.slice_cap_fraction):
                continue
            if not self.ledger.fits(grant):
                logger.debug('Slot %d: slice %d overdraws its path', self.slot, slice_id)
                continue
            self.ledger.allocate(grant)
            grants[slice_id] = grant
            served[slice_id] = True

        latency = np.full(num, np.nan)
        computing = np.full(num, np.nan)
        transmission = np.full(num, np.nan)
        energy = np.full(num, np.nan)
        for slice_id in np.flatnonzero(served):
            request, grant = self.requests[slice_id], grants[slice_id]
            latency[slice_id], computing[slice_id], transmission[slice_id] = compute_latency(
                request, grant, self.topology, self.epsilon_min, self.slice_cap_fraction)
            energy[slice_id] = compute_energy(request, grant, self.ledger, self.topology,
                                              self.power_model, self.epsilon_min,
                                              self.slice_cap_fraction)

        # the current slot enters the window before the rewards are normalised
        self.window.push(latency[served], energy[served])

        rewards = np.zeros(num)
        utility = np.zeros(num)
        for slice_id in np.flatnonzero(requested):
            rewards[slice_id] = compute_reward(served[slice_id], latency[slice_id],
                                               energy[slice_id], self.window, num)
            if served[slice_id]:
                utility[slice_id] = served_score(latency[slice_id], energy[slice_id],
                                                 self.window, num)

        for slice_id in np.flatnonzero(served):
            grants[slice_id].hold_for(self._occupancy(latency[slice_id]))

        outcome = StepOutcome(slot=self.slot, requested=requested, served=served, latency=latency,
                              computing_latency=computing, transmission_latency=transmission,
                              energy=energy, rewards=rewards, utility=utility,
                              grants=[grant for grant in grants if grant is not None])
        if self.record_trace:
            self.trace.append(self._trace_row(outcome))

        self.slot += 1
        self.ledger.tick()
        self._generate_requests()
        return self.observe(), outcome.shared_reward, False, False, {'outcome': outcome}

    def _check_actions(self, actions):
        actions = np.asarray(actions, dtype=np.float64)
        if actions.shape != (self.num_slices, ACTION_DIM):
            raise DimensionMismatchError('Expected actions of shape {}, got {}'.format(
                (self.num_slices, ACTION_DIM), actions.shape))
        if not np.all(np.isfinite(actions)):
            raise DomainError('Actions must be finite')
        return np.clip(actions, 0.0, 1.0)

    def _occupancy(self, latency):
        if self.occupancy_mode == 'one_slot':
            return 1
        slots = math.ceil(latency / self.slot_length)
        return int(min(max(slots, 1), self.max_occupancy))

    def _generate_requests(self):
        self.requests = []
        for slice_id in range(self.num_slices):
            arrives = self.np_random.random() < self.arrival_prob
            compute = self.np_random.uniform(*self.compute_range, size=MECS_PER_SLICE)
            data = self.np_random.uniform(*self.data_range, size=LINKS_PER_SLICE)
            self.requests.append(SliceRequest(slice_id, compute, data, self.slot)
                                 if arrives else None)

    def _request_block(self, slice_id):
        request = self.requests[slice_id]
        if request is None:
            return np.zeros(REQUEST_BLOCK)
        return np.concatenate([request.compute_demand / self.compute_range[1],
                               request.data_size / self.data_range[1]])

    def observe_global(self):
        """
        Critic state: remaining compute of every MEC over J, remaining bandwidth of every link over
        B and one request block per slice up to max_slices, zero padded.
        """
        blocks = np.zeros((self.max_slices, REQUEST_BLOCK))
        for slice_id in range(self.num_slices):
            blocks[slice_id] = self._request_block(slice_id)
        return np.concatenate([self.ledger.remaining_compute / self.topology.urllc_compute_cap,
                               self.ledger.remaining_bandwidth /
                               self.topology.urllc_bandwidth_cap,
                               blocks.ravel()])

    def observe_local(self, slice_id):
        """
        Actor state of one slice: remaining resources of its 3 MECs and 2 links followed by its
        normalised compute demands and data sizes.
        """
        if not 0 <= slice_id < self.num_slices:
            raise UnknownSliceError('Slice {} is not active (num_slices={})'.format(
                slice_id, self.num_slices))
        path = self.topology.slice_paths[slice_id]
        mecs = self.ledger.remaining_compute[list(path.mecs)] / self.topology.urllc_compute_cap
        links = self.ledger.remaining_bandwidth[list(path.links)] / \
            self.topology.urllc_bandwidth_cap
        return np.concatenate([mecs, links, self._request_block(slice_id)])

    def observe(self):
        local = np.array([self.observe_local(slice_id) for slice_id in range(self.num_slices)])
        return {'global': self.observe_global(), 'local': local.reshape(self.num_slices, LOCAL_DIM)}

    def _trace_row(self, outcome):
        row = {'slot': outcome.slot}
        for slice_id in range(self.num_slices):
            row['served_{}'.format(slice_id)] = bool(outcome.served[slice_id])
            row['latency_{}'.format(slice_id)] = outcome.latency[slice_id]
            row['energy_{}'.format(slice_id)] = outcome.energy[slice_id]
            row['reward_{}'.format(slice_id)] = outcome.rewards[slice_id]
        row['reward'] = outcome.shared_reward
        row['utility'] = outcome.total_utility
        return row

    def trace_frame(self):
        """ Per slot trace recorded since the last reset, one row per slot """
        return pd.DataFrame(self.trace)

    def render(self, mode='human'):
        raise NotImplementedError

    def close(self):
        pass
