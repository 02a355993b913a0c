"""
Non learning allocation policies with the same interface as the actors: one action in [0, 1]^5 per
slice, scaled downstream by the per-slice caps.

    random  uniform random share of the per-slice caps every slot
    over    always the full per-slice caps
    static  a fixed partition of J and B, equal shares unless a share table is given
"""
import numpy as np

from gym_mec_slicing.utils import ConfigError

ACTION_DIM = 5


def random_policy(slice_id, rng, action_dim=ACTION_DIM):
    return rng.uniform(0.0, 1.0, size=action_dim)


def over_allocation_policy(slice_id, action_dim=ACTION_DIM):
    return np.ones(action_dim)


def static_share_action(share, slice_cap_fraction=0.4):
    """ Action granting share * J (and share * B), limited by the per-slice cap """
    return min(share / slice_cap_fraction, 1.0)


def static_slicing_policy(slice_id, num_slices, shares=None, slice_cap_fraction=0.4,
                          action_dim=ACTION_DIM):
    if num_slices < 1:
        raise ConfigError('Static slicing needs at least one slice')
    share = 1.0 / num_slices if shares is None else shares[slice_id]
    return np.full(action_dim, static_share_action(share, slice_cap_fraction))


class BaselinePolicy:
    """
    Callable producing the (num_slices, 5) action array of one slot from an observation.
    """
    KINDS = ('random', 'over', 'static')

    def __init__(self, kind, num_slices, rng=None, shares=None, slice_cap_fraction=0.4):
        if kind not in self.KINDS:
            raise ConfigError('Unknown baseline {}. Choose from {}'.format(kind, self.KINDS))
        if shares is not None:
            shares = [float(share) for share in shares]
            if len(shares) != num_slices or any(share <= 0 for share in shares) or \
                    sum(shares) > 1.0 + 1e-12:
                raise ConfigError('Static shares must be {} positive values summing to at '
                                  'most 1, got {}'.format(num_slices, shares))
        self.kind = kind
        self.num_slices = num_slices
        self.rng = rng if rng is not None else np.random.default_rng()
        self.shares = shares
        self.slice_cap_fraction = slice_cap_fraction

    def __call__(self, observation=None):
        if self.kind == 'random':
            actions = [random_policy(i, self.rng) for i in range(self.num_slices)]
        elif self.kind == 'over':
            actions = [over_allocation_policy(i) for i in range(self.num_slices)]
        else:
            actions = [static_slicing_policy(i, self.num_slices, self.shares,
                                             self.slice_cap_fraction)
                       for i in range(self.num_slices)]
        return np.array(actions).reshape(self.num_slices, ACTION_DIM)
