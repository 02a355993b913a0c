"""
Latency, energy and reward model of a slice served over its MECs and links.

    rate        = bandwidth * log2(1 + snr)                    per link
    mec_time    = compute_demand / compute_alloc               per path MEC
    computing   = max(mec_time)                                VNFs run in parallel
    transmit    = sum(data_size / rate)                        over the path links
    latency     = computing + transmit
    energy      = sum(power(utilization) * mec_time)
    reward      = (min_latency / latency + min_energy / energy) / (2 * num_slices)
    reward      = -1 / num_slices                              slice that could not be served

min_latency and min_energy are the minima of the normalisation window.
"""
from dataclasses import dataclass

import numpy as np

from gym_mec_slicing.utils import DomainError, UnservableError

DEFAULT_EPSILON_MIN = 1e-6


def compute_data_rate(bandwidth, snr):
    """ Shannon rate in Gbps of a link given its allocated bandwidth (Gbps) and linear SNR """
    return bandwidth * np.log2(1.0 + snr)


@dataclass(frozen=True)
class PowerModel:
    """
    Affine server power draw f(U) = p_static + p_dynamic * U, in normalised power units. Only
    ratios against the window minimum enter the reward, so the absolute scale does not matter.
    """
    p_static: float = 0.6
    p_dynamic: float = 0.4

    def __call__(self, utilization):
        return power_draw(utilization, self.p_static, self.p_dynamic)


def power_draw(utilization, p_static=0.6, p_dynamic=0.4):
    utilization = np.asarray(utilization, dtype=np.float64)
    if np.any(utilization < 0.0) or np.any(utilization > 1.0):
        raise DomainError('Utilization must lie in [0, 1], got {}'.format(utilization))
    return p_static + p_dynamic * utilization


def is_servable(grant, topology, epsilon_min=DEFAULT_EPSILON_MIN, slice_cap_fraction=0.4):
    """
    A grant serves its request only if every allocation reaches epsilon_min of the per-slice cap
    (slice_cap_fraction * J for compute, slice_cap_fraction * B for bandwidth).
    """
    compute_floor = epsilon_min * slice_cap_fraction * topology.urllc_compute_cap
    bandwidth_floor = epsilon_min * slice_cap_fraction * topology.urllc_bandwidth_cap
    return not (np.any(grant.compute_alloc <= 0.0) or np.any(grant.bandwidth_alloc <= 0.0) or
                np.any(grant.compute_alloc < compute_floor) or
                np.any(grant.bandwidth_alloc < bandwidth_floor))


def compute_times(request, grant, topology, epsilon_min=DEFAULT_EPSILON_MIN,
                  slice_cap_fraction=0.4):
    """ Per-MEC computing times and per-link transmission times of a request """
    if not is_servable(grant, topology, epsilon_min, slice_cap_fraction):
        raise UnservableError('Allocation of slice {} is below the service floor'.format(
            grant.slice_id))
    per_mec = request.compute_demand / grant.compute_alloc
    per_link = request.data_size / compute_data_rate(grant.bandwidth_alloc, topology.snr)
    return per_mec, per_link


def compute_latency(request, grant, topology, epsilon_min=DEFAULT_EPSILON_MIN,
                    slice_cap_fraction=0.4):
    """
    :return: (tuple) overall, computing and transmission latency, all in seconds
    """
    per_mec, per_link = compute_times(request, grant, topology, epsilon_min, slice_cap_fraction)
    computing = float(np.max(per_mec))
    transmission = float(np.sum(per_link))
    return transmission + computing, computing, transmission


def compute_energy(request, grant, ledger, topology, power_model=PowerModel(),
                   epsilon_min=DEFAULT_EPSILON_MIN, slice_cap_fraction=0.4):
    """
    Energy cost of a served request: power draw of every path MEC at its current utilisation
    (grant already applied to the ledger) times the computing time spent on it.
    """
    per_mec, _ = compute_times(request, grant, topology, epsilon_min, slice_cap_fraction)
    utilization = ledger.utilization()[list(grant.mecs)]
    return float(np.sum(power_model(utilization) * per_mec))


def served_score(latency, energy, window, num_slices):
    """ (min_latency / latency + min_energy / energy) / (2 * num_slices) """
    return (window.min_latency / latency + window.min_energy / energy) / (2.0 * num_slices)


def compute_reward(served, latency, energy, window, num_slices):
    """
    Reward of one agent. The window must already contain the current slot so that the minima never
    exceed latency and energy, which bounds a served reward by 1 / num_slices.
    """
    if not served:
        return -1.0 / num_slices
    return served_score(latency, energy, window, num_slices)


def eval_utility(outcome):
    """ Objective value of a slot: scores of served slices, failures counted as 0 """
    return float(np.sum(outcome.utility))
