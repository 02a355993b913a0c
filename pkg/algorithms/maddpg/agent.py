"""
DDPG agent of one slice and the update rules applied to it. Each critic sees the global state plus
its own agent's action only, which keeps every network shape independent of the number of active
slices.
"""
import numpy as np

from algorithms.maddpg.model import Mlp, build_actor, build_critic
from algorithms.maddpg.noise import OUNoise
from algorithms.maddpg.optim import ASCENT, DESCENT, AdamState, adam_step
from gym_mec_slicing.utils import CheckpointMismatchError, DimensionMismatchError

AGENT_CHECKPOINT_VERSION = 1


class Agent:
    """
    Actor, critic and their target networks for one slice, with one Adam state per main network
    and the agent's own OU process.
    """
    def __init__(self, slice_id, local_dim, global_dim, action_dim=5, lr=1e-3, rng=None,
                 noise_params=None, noise_rng=None):
        """
        :param slice_id:     (int)   Index of the slice this agent controls
        :param local_dim:    (int)   Width of the actor input
        :param global_dim:   (int)   Width of the global state (critic input minus the action)
        :param rng:          (np.random.Generator) Used to initialise the main networks
        :param noise_params: (dict)  mu, sigma and beta of the OU process
        """
        self.slice_id = slice_id
        self.local_dim = local_dim
        self.global_dim = global_dim
        self.action_dim = action_dim
        self.lr = lr
        rng = rng if rng is not None else np.random.default_rng()
        self.actor = build_actor(local_dim, action_dim, rng=rng)
        self.critic = build_critic(global_dim, action_dim, rng=rng)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_optim = AdamState(self.actor.num_params, lr=lr)
        self.critic_optim = AdamState(self.critic.num_params, lr=lr)
        self.noise = OUNoise(action_dim, rng=noise_rng, **(noise_params or {}))

    def act(self, local_state, noise_scale=0.0):
        return act(self, local_state, noise_scale)

    def reset_optimizers(self):
        self.actor_optim.reset()
        self.critic_optim.reset()

    def load_networks(self, actor, critic, target_actor, target_critic):
        """ Copies parameter vectors into the four networks """
        self.actor.set_params(actor)
        self.critic.set_params(critic)
        self.target_actor.set_params(target_actor)
        self.target_critic.set_params(target_critic)

    def to_dict(self):
        return {'version': AGENT_CHECKPOINT_VERSION,
                'slice_id': self.slice_id,
                'actor': self.actor.to_dict(),
                'critic': self.critic.to_dict(),
                'target_actor': self.target_actor.to_dict(),
                'target_critic': self.target_critic.to_dict()}

    @classmethod
    def from_dict(cls, data, lr=1e-3, noise_params=None, noise_rng=None):
        if data.get('version') != AGENT_CHECKPOINT_VERSION:
            raise CheckpointMismatchError('Unsupported agent checkpoint version {}'.format(
                data.get('version')))
        actor = Mlp.from_dict(data['actor'])
        critic = Mlp.from_dict(data['critic'])
        action_dim = actor.output_size
        agent = cls(data['slice_id'], actor.input_size, critic.input_size - action_dim,
                    action_dim=action_dim, lr=lr, noise_params=noise_params, noise_rng=noise_rng)
        for name in ('actor', 'critic', 'target_actor', 'target_critic'):
            net = Mlp.from_dict(data[name])
            if not net.same_shape(getattr(agent, name)):
                raise CheckpointMismatchError('Network {} of agent {} has layers {}, expected {}'
                                              .format(name, data['slice_id'], net.layer_sizes,
                                                      getattr(agent, name).layer_sizes))
            getattr(agent, name).set_params(net.params)
        return agent


def act(agent, local_state, noise_scale=0.0):
    """ clip(actor(s_i) + scale * OU, 0, 1). The OU process only evolves when scale > 0. """
    action = agent.actor.predict(local_state)
    if noise_scale > 0.0:
        return agent.noise.add(action, noise_scale)
    return np.clip(action, 0.0, 1.0)


def critic_input(global_state, action):
    """ [s_t, own action], for a single step or a batch """
    global_state = np.asarray(global_state, dtype=np.float64)
    action = np.asarray(action, dtype=np.float64)
    if global_state.ndim != action.ndim or global_state.shape[:-1] != action.shape[:-1]:
        raise DimensionMismatchError('Global state {} and action {} do not line up'.format(
            global_state.shape, action.shape))
    return np.concatenate([global_state, action], axis=-1)


def td_target(rewards, next_global_states, next_local_states, agent, gamma):
    """ y = r + gamma * Q'(s', pi'(s'_i)); the task is continuing so nothing is masked """
    next_actions = agent.target_actor.predict(next_local_states)
    next_q = agent.target_critic.predict(critic_input(next_global_states, next_actions))
    return np.asarray(rewards, dtype=np.float64) + gamma * next_q[..., 0]


def critic_loss_gradient(agent, batch, agent_index, gamma):
    """
    Mean squared TD error of the batch and its gradient w.r.t. the critic parameters. The TD
    targets come from the target networks and are held fixed.
    """
    y = td_target(batch.rewards[:, agent_index], batch.next_global_states,
                  batch.next_local_states[:, agent_index], agent, gamma)
    q, cache = agent.critic.forward(critic_input(batch.global_states,
                                                 batch.actions[:, agent_index]))
    error = q[:, 0] - y
    grad_q = (2.0 / len(error)) * error[:, None]
    param_grad, _ = agent.critic.backward(cache, grad_q)
    return float(np.mean(error ** 2)), param_grad


def update_critic(agent, batch, agent_index, gamma):
    """
    One descent step on the mean squared TD error of the batch.

    :return: (float) the loss before the update
    """
    loss, param_grad = critic_loss_gradient(agent, batch, agent_index, gamma)
    adam_step(agent.critic_optim, agent.critic.params, param_grad, DESCENT)
    return loss


def actor_gradient(agent, global_states, local_states):
    """
    Gradient of the batch mean of Q(s, pi(s_i)) w.r.t. the actor parameters, chaining the
    critic's input gradient on the action columns through the actor.

    :return: (tuple) parameter gradient and the batch mean Q
    """
    actions, actor_cache = agent.actor.forward(local_states)
    q, critic_cache = agent.critic.forward(critic_input(global_states, actions))
    grad_q = np.full_like(q, 1.0 / len(q))
    _, input_grad = agent.critic.backward(critic_cache, grad_q)
    action_grad = input_grad[:, -agent.action_dim:]
    param_grad, _ = agent.actor.backward(actor_cache, action_grad)
    return param_grad, float(np.mean(q))


def update_actor(agent, batch, agent_index):
    """
    One ascent step of the actor along the deterministic policy gradient.

    :return: (float) the batch mean Q before the update
    """
    param_grad, mean_q = actor_gradient(agent, batch.global_states,
                                        batch.local_states[:, agent_index])
    adam_step(agent.actor_optim, agent.actor.params, param_grad, ASCENT)
    return mean_q


def soft_update(main, target, tau):
    """ target <- tau * main + (1 - tau) * target """
    if main.num_params != target.num_params:
        raise DimensionMismatchError('Cannot soft update {} parameters from {}'.format(
            target.num_params, main.num_params))
    target.set_params(tau * main.params + (1.0 - tau) * target.params)
    return target
