"""
Ornstein-Uhlenbeck exploration noise with a unit time step:

    x <- x + beta * (mu - x) + sigma * N(0, 1)

The executed action is clip(actor(s) + scale * x, 0, 1).
"""
import numpy as np


class OUNoise:
    def __init__(self, action_size, mu=0.0, sigma=0.1, beta=0.9, rng=None):
        self.action_size = action_size
        self.mu = mu
        self.sigma = sigma
        self.beta = beta
        self.rng = rng if rng is not None else np.random.default_rng()
        self.reset()

    def reset(self):
        self.state = np.ones(self.action_size) * self.mu

    def evolve_state(self):
        x = self.state
        dx = self.beta * (self.mu - x) + self.sigma * self.rng.standard_normal(self.action_size)
        self.state = x + dx
        return self.state

    def add(self, action, scale=1.0):
        """ Evolves the process and returns the noisy action, clipped to [0, 1] """
        ou_state = self.evolve_state()
        return np.clip(action + scale * ou_state, 0.0, 1.0)
