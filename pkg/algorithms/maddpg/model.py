"""
Dense networks for the actor and critic of every slice agent, written directly in numpy so the
parameters live in one flat vector. Soft target updates and parameter averaging then become plain
vector arithmetic.

Per layer the flat vector holds the weight matrix W (out x in, row major) followed by the bias b.
"""
import numpy as np

from gym_mec_slicing.utils import CheckpointMismatchError, DimensionMismatchError

CHECKPOINT_VERSION = 1

ACTIVATIONS = ('relu', 'sigmoid', 'tanh', 'identity')

ACTOR_HIDDEN = (32, 32)
CRITIC_HIDDEN = (64, 64)


def _activate(name, z):
    if name == 'relu':
        return np.maximum(z, 0.0)
    if name == 'sigmoid':
        # tanh form does not overflow for large |z|
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if name == 'tanh':
        return np.tanh(z)
    return z


def _activation_grad(name, z, a):
    """ Derivative of the activation at pre-activation z, with a its output """
    if name == 'relu':
        return (z > 0.0).astype(np.float64)
    if name == 'sigmoid':
        return a * (1.0 - a)
    if name == 'tanh':
        return 1.0 - a * a
    return np.ones_like(z)


class Mlp:
    """
    Fully connected network. layer_sizes lists every width from the input to the output, so a
    network with n weight layers has n + 1 sizes and n activations.
    """
    def __init__(self, layer_sizes, activations, params=None, rng=None):
        self.layer_sizes = [int(size) for size in layer_sizes]
        self.activations = list(activations)
        if len(self.layer_sizes) < 2 or any(size < 1 for size in self.layer_sizes):
            raise DimensionMismatchError('Need at least an input and an output width, '
                                         'got {}'.format(self.layer_sizes))
        if len(self.activations) != len(self.layer_sizes) - 1:
            raise DimensionMismatchError('{} activations for {} layers'.format(
                len(self.activations), len(self.layer_sizes) - 1))
        for name in self.activations:
            if name not in ACTIVATIONS:
                raise ValueError('Unknown activation {}. Choose from {}'.format(name, ACTIVATIONS))

        self.shapes = list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))
        self.num_params = sum((fan_in + 1) * fan_out for fan_out, fan_in in self.shapes)
        self.params = np.zeros(self.num_params)
        self._bind_views()
        if params is not None:
            self.set_params(params)
        elif rng is not None:
            self.init_params(rng)

    def _bind_views(self):
        """ W and b of every layer as views into the flat parameter vector """
        self.weights, self.biases = [], []
        offset = 0
        for fan_out, fan_in in self.shapes:
            self.weights.append(self.params[offset:offset + fan_out * fan_in].reshape(fan_out,
                                                                                   fan_in))
            offset += fan_out * fan_in
            self.biases.append(self.params[offset:offset + fan_out])
            offset += fan_out

    @property
    def input_size(self):
        return self.layer_sizes[0]

    @property
    def output_size(self):
        return self.layer_sizes[-1]

    def init_params(self, rng):
        """ Uniform in +-1/sqrt(fan_in) for weights and biases of every layer """
        for weight, bias in zip(self.weights, self.biases):
            bound = 1.0 / np.sqrt(weight.shape[1])
            weight[...] = rng.uniform(-bound, bound, size=weight.shape)
            bias[...] = rng.uniform(-bound, bound, size=bias.shape)

    def get_params(self):
        return self.params.copy()

    def set_params(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.num_params,):
            raise DimensionMismatchError('Expected {} parameters, got shape {}'.format(
                self.num_params, params.shape))
        self.params[...] = params

    def same_shape(self, other):
        return self.layer_sizes == other.layer_sizes and self.activations == other.activations

    def copy(self):
        return Mlp(self.layer_sizes, self.activations, params=self.params)

    def forward(self, inputs):
        """
        :param inputs: (np.ndarray) one input vector or a batch of them, shape (in,) or (B, in)
        :return: (tuple) outputs with the batch layout of inputs and the cache for backward
        """
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.shape[-1:] != (self.input_size,) or inputs.ndim > 2:
            raise DimensionMismatchError('Expected input of width {}, got shape {}'.format(
                self.input_size, inputs.shape))
        squeeze = inputs.ndim == 1
        x = np.atleast_2d(inputs)
        layer_inputs, pre_activations, outputs = [], [], []
        for weight, bias, name in zip(self.weights, self.biases, self.activations):
            layer_inputs.append(x)
            z = x @ weight.T + bias
            x = _activate(name, z)
            pre_activations.append(z)
            outputs.append(x)
        cache = {'inputs': layer_inputs, 'pre_activations': pre_activations, 'outputs': outputs,
                 'squeeze': squeeze}
        return (x[0] if squeeze else x), cache

    def predict(self, inputs):
        return self.forward(inputs)[0]

    def backward(self, cache, output_grad):
        """
        Reverse pass of sum(output * output_grad), summed over the batch.

        :return: (tuple) gradient w.r.t. the flat parameter vector and w.r.t. the inputs (same
                         batch layout as the forward inputs)
        """
        output_grad = np.asarray(output_grad, dtype=np.float64)
        expected = cache['outputs'][-1].shape
        delta = output_grad[None, :] if cache['squeeze'] else output_grad
        if delta.shape != expected:
            raise DimensionMismatchError('Expected output gradient of shape {}, got {}'.format(
                expected[1:] if cache['squeeze'] else expected, output_grad.shape))

        param_grad = np.zeros(self.num_params)
        weight_grads, bias_grads = [], []
        offset = 0
        for fan_out, fan_in in self.shapes:
            weight_grads.append(param_grad[offset:offset + fan_out * fan_in].reshape(fan_out,
                                                                                    fan_in))
            offset += fan_out * fan_in
            bias_grads.append(param_grad[offset:offset + fan_out])
            offset += fan_out

        for layer in reversed(range(len(self.shapes))):
            z = cache['pre_activations'][layer]
            a = cache['outputs'][layer]
            dz = delta * _activation_grad(self.activations[layer], z, a)
            weight_grads[layer][...] = dz.T @ cache['inputs'][layer]
            bias_grads[layer][...] = dz.sum(axis=0)
            delta = dz @ self.weights[layer]
        return param_grad, (delta[0] if cache['squeeze'] else delta)

    def to_dict(self):
        return {'version': CHECKPOINT_VERSION,
                'layer_sizes': list(self.layer_sizes),
                'activations': list(self.activations),
                'params': self.params.tolist()}

    @classmethod
    def from_dict(cls, data):
        if data.get('version') != CHECKPOINT_VERSION:
            raise CheckpointMismatchError('Unsupported network checkpoint version {}'.format(
                data.get('version')))
        return cls(data['layer_sizes'], data['activations'], params=data['params'])


def get_params(net):
    return net.get_params()


def set_params(net, params):
    net.set_params(params)


def build_actor(local_dim, action_dim, rng=None, hidden=ACTOR_HIDDEN):
    """ Actor: local state -> 32 -> 32 -> action, sigmoid head so actions lie in (0, 1) """
    sizes = [local_dim] + list(hidden) + [action_dim]
    return Mlp(sizes, ['relu'] * len(hidden) + ['sigmoid'], rng=rng)


def build_critic(global_dim, action_dim, rng=None, hidden=CRITIC_HIDDEN):
    """ Critic: [global state, own action] -> 64 -> 64 -> 1, tanh head matching r_t in [-1, 1] """
    sizes = [global_dim + action_dim] + list(hidden) + [1]
    return Mlp(sizes, ['relu'] * len(hidden) + ['tanh'], rng=rng)
