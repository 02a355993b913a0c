"""
Replay memory shared by all slice agents. One transition holds the step of every agent, so a
single sampled batch feeds the updates of all of them.
"""
from collections import deque, namedtuple

import numpy as np

from gym_mec_slicing.utils import ConfigError, DimensionMismatchError

Transition = namedtuple('Transition', ('global_state', 'local_states', 'actions', 'rewards',
                                       'next_global_state', 'next_local_states'))
Batch = namedtuple('Batch', ('global_states', 'local_states', 'actions', 'rewards',
                             'next_global_states', 'next_local_states'))


class ReplayMemory:
    def __init__(self, capacity=50000, rng=None):
        if capacity < 1:
            raise ConfigError('Replay capacity must be at least 1, got {}'.format(capacity))
        self.capacity = int(capacity)
        self.memory = deque(maxlen=self.capacity)
        self.rng = rng if rng is not None else np.random.default_rng()

    def __len__(self):
        return len(self.memory)

    def append(self, global_state, local_states, actions, rewards, next_global_state,
               next_local_states):
        """
        Stores one step. local_states/actions/rewards hold one row per active agent; the actions are
        the clipped, noisy values that were actually executed.
        """
        local_states = np.array(local_states, dtype=np.float64)
        actions = np.array(actions, dtype=np.float64)
        rewards = np.array(rewards, dtype=np.float64)
        if not (len(local_states) == len(actions) == len(rewards) == len(next_local_states)):
            raise DimensionMismatchError('Transition needs one entry per agent, got {}/{}/{}/{}'
                                         .format(len(local_states), len(actions), len(rewards),
                                                 len(next_local_states)))
        self.memory.append(Transition(np.array(global_state, dtype=np.float64), local_states,
                                      actions, rewards,
                                      np.array(next_global_state, dtype=np.float64),
                                      np.array(next_local_states, dtype=np.float64)))

    def sample_indices(self, batch_size):
        if batch_size > len(self.memory):
            raise ValueError('Cannot sample {} transitions from a memory of {}'.format(
                batch_size, len(self.memory)))
        return self.rng.integers(0, len(self.memory), size=batch_size)

    def sample(self, batch_size):
        """ Uniform sample with replacement, stacked field by field """
        transitions = [self.memory[idx] for idx in self.sample_indices(batch_size)]
        return Batch(*(np.stack(column) for column in zip(*transitions)))

    def clear(self):
        self.memory.clear()
