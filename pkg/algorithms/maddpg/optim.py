"""
Adam on flat parameter vectors. The same state object serves both the critic, which descends its
TD loss, and the actor, which ascends the critic's value.
"""
import numpy as np

from gym_mec_slicing.utils import DimensionMismatchError

DESCENT = 'descent'
ASCENT = 'ascent'


class AdamState:
    def __init__(self, num_params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.m = np.zeros(num_params)
        self.v = np.zeros(num_params)
        self.step_count = 0

    def reset(self):
        self.m[...] = 0.0
        self.v[...] = 0.0
        self.step_count = 0


def adam_step(state, params, grads, direction=DESCENT):
    """
    One bias corrected Adam update of params (in place), also returned for convenience.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise DimensionMismatchError('Adam shapes differ: params {}, grads {}, moments {}'.format(
            params.shape, grads.shape, state.m.shape))
    if direction not in (DESCENT, ASCENT):
        raise ValueError('direction must be {} or {}'.format(DESCENT, ASCENT))

    state.step_count += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grads * grads

    bias_correction1 = 1.0 - state.beta1 ** state.step_count
    bias_correction2 = 1.0 - state.beta2 ** state.step_count
    denom = np.sqrt(state.v) / np.sqrt(bias_correction2) + state.eps
    update = (state.lr / bias_correction1) * state.m / denom
    if direction == DESCENT:
        params -= update
    else:
        params += update
    return params
