"""
Network resources of the MEC slicing environment: the topology, the per-slot requests and grants of
each slice, the ledger that keeps track of what is still free and the sliding window used to
normalise rewards.

Allocated amounts are tracked as integer quanta of QUANTUM GHz (or Gbps). Every grant is snapped
down to that grid when it is created, which keeps the ledger arithmetic exact: after any sequence
of allocations and releases, used + remaining == capacity holds bit for bit.
"""
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from gym_mec_slicing.utils import ConfigError, DomainError

QUANTUM = 2.0 ** -30
MECS_PER_SLICE = 3
LINKS_PER_SLICE = 2


def to_quanta(amount):
    """ Largest number of quanta that does not exceed amount (array or scalar) """
    return np.floor(np.asarray(amount, dtype=np.float64) / QUANTUM).astype(np.int64)


def from_quanta(quanta):
    return np.asarray(quanta, dtype=np.int64).astype(np.float64) * QUANTUM


@dataclass(frozen=True)
class SlicePath:
    mecs: tuple
    links: tuple


@dataclass(eq=False)
class Topology:
    """
    Physical edge network: capacity of every MEC (GHz) and link (Gbps), the share J/B of each one
    reserved for URLLC slices, the link SNR (linear) and the fixed path of every slice.
    """
    mec_capacity: np.ndarray
    urllc_compute_cap: float
    link_capacity: np.ndarray
    urllc_bandwidth_cap: float
    snr: float
    slice_paths: list
    link_endpoints: list = field(default_factory=list)

    def __post_init__(self):
        self.mec_capacity = np.asarray(self.mec_capacity, dtype=np.float64)
        self.link_capacity = np.asarray(self.link_capacity, dtype=np.float64)
        self.urllc_compute_cap = float(self.urllc_compute_cap)
        self.urllc_bandwidth_cap = float(self.urllc_bandwidth_cap)
        self.snr = float(self.snr)
        self.slice_paths = [path if isinstance(path, SlicePath)
                            else SlicePath(tuple(path['mecs']), tuple(path['links']))
                            for path in self.slice_paths]
        self.validate()

    @property
    def num_mecs(self):
        return len(self.mec_capacity)

    @property
    def num_links(self):
        return len(self.link_capacity)

    def validate(self):
        if self.num_mecs == 0 or self.num_links == 0:
            raise ConfigError('Topology needs at least one MEC and one link')
        if np.any(self.mec_capacity <= 0) or np.any(self.link_capacity <= 0) \
                or self.urllc_compute_cap <= 0 or self.urllc_bandwidth_cap <= 0:
            raise ConfigError('All capacities must be positive')
        if np.any(self.urllc_compute_cap > self.mec_capacity):
            raise ConfigError('URLLC compute cap J={} exceeds the capacity of a MEC {}'.format(
                self.urllc_compute_cap, self.mec_capacity.tolist()))
        if np.any(self.urllc_bandwidth_cap > self.link_capacity):
            raise ConfigError('URLLC bandwidth cap B={} exceeds the capacity of a link {}'.format(
                self.urllc_bandwidth_cap, self.link_capacity.tolist()))
        if self.snr < 0:
            raise ConfigError('SNR must be non-negative, got {}'.format(self.snr))
        for slice_id, path in enumerate(self.slice_paths):
            if len(path.mecs) != MECS_PER_SLICE or len(path.links) != LINKS_PER_SLICE:
                raise ConfigError('Path of slice {} must use exactly {} MECs and {} links'.format(
                    slice_id, MECS_PER_SLICE, LINKS_PER_SLICE))
            if len(set(path.mecs)) != MECS_PER_SLICE or len(set(path.links)) != LINKS_PER_SLICE:
                raise ConfigError('Path of slice {} repeats a MEC or link'.format(slice_id))
            if not all(0 <= m < self.num_mecs for m in path.mecs) or \
                    not all(0 <= l < self.num_links for l in path.links):
                raise ConfigError('Path of slice {} references an unknown MEC or link: {}'.format(
                    slice_id, path))

    @classmethod
    def from_config(cls, config, max_slices):
        """
        Builds the topology from the "topology" section of an environment config. MEC and link
        capacities may be given as one number for all of them or one value each. Without explicit
        "slice_paths", slice i uses MECs {i, i+1, i+2} (mod number of MECs) and the two ring links
        joining them, where ring link k joins MEC k and MEC k+1.
        """
        num_mecs = int(config['num_mecs'])
        link_endpoints = [tuple(link) for link in config['links']]
        num_links = len(link_endpoints)
        mec_capacity = np.broadcast_to(np.asarray(config['mec_capacity'], dtype=np.float64),
                                       (num_mecs,)).copy()
        link_capacity = np.broadcast_to(np.asarray(config['link_capacity'], dtype=np.float64),
                                        (num_links,)).copy()
        if config.get('slice_paths'):
            slice_paths = config['slice_paths']
        else:
            slice_paths = default_slice_paths(num_mecs, link_endpoints, max_slices)
        if len(slice_paths) < max_slices:
            raise ConfigError('{} slice paths defined but max_slices is {}'.format(
                len(slice_paths), max_slices))
        return cls(mec_capacity=mec_capacity,
                   urllc_compute_cap=config['urllc_compute_cap'],
                   link_capacity=link_capacity,
                   urllc_bandwidth_cap=config['urllc_bandwidth_cap'],
                   snr=config['snr'],
                   slice_paths=slice_paths,
                   link_endpoints=link_endpoints)


def default_slice_paths(num_mecs, link_endpoints, num_paths):
    paths = []
    for slice_id in range(num_paths):
        first = slice_id % num_mecs
        mecs = tuple((first + k) % num_mecs for k in range(MECS_PER_SLICE))
        links = []
        for a, b in zip(mecs[:-1], mecs[1:]):
            matches = [idx for idx, ends in enumerate(link_endpoints) if set(ends) == {a, b}]
            if not matches:
                raise ConfigError('No link joins MEC {} and MEC {} for the default path of '
                                  'slice {}'.format(a, b, slice_id))
            links.append(matches[0])
        paths.append(SlicePath(mecs, tuple(links)))
    return paths


@dataclass(eq=False)
class SliceRequest:
    """ Demand of one slice in one slot: Gcycles per used MEC and Gb per used link """
    slice_id: int
    compute_demand: np.ndarray
    data_size: np.ndarray
    slot: int = 0

    def __post_init__(self):
        self.compute_demand = np.asarray(self.compute_demand, dtype=np.float64)
        self.data_size = np.asarray(self.data_size, dtype=np.float64)
        if np.any(self.compute_demand < 0) or np.any(self.data_size < 0):
            raise DomainError('Request demands must be non-negative')


@dataclass(eq=False)
class AllocationGrant:
    """
    Resources given to one slice for one request. Amounts are snapped down to the ledger grid on
    creation. remaining_slots counts down the slots left before the ledger releases the grant.
    """
    slice_id: int
    compute_alloc: np.ndarray
    bandwidth_alloc: np.ndarray
    occupancy_slots: int = 1
    slot_created: int = 0
    mecs: tuple = ()
    links: tuple = ()

    def __post_init__(self):
        compute = np.asarray(self.compute_alloc, dtype=np.float64)
        bandwidth = np.asarray(self.bandwidth_alloc, dtype=np.float64)
        if np.any(compute < 0) or np.any(bandwidth < 0):
            raise DomainError('Allocations must be non-negative')
        self.compute_quanta = to_quanta(compute)
        self.bandwidth_quanta = to_quanta(bandwidth)
        self.compute_alloc = from_quanta(self.compute_quanta)
        self.bandwidth_alloc = from_quanta(self.bandwidth_quanta)
        self.mecs = tuple(self.mecs)
        self.links = tuple(self.links)
        self.remaining_slots = self.occupancy_slots

    def hold_for(self, slots):
        self.occupancy_slots = int(slots)
        self.remaining_slots = int(slots)


class ResourceLedger:
    """
    Remaining URLLC compute (J per MEC) and bandwidth (B per link) plus the grants holding them.
    """
    def __init__(self, topology):
        self.topology = topology
        self.compute_total = np.full(topology.num_mecs, to_quanta(topology.urllc_compute_cap),
                                     dtype=np.int64)
        self.bandwidth_total = np.full(topology.num_links,
                                       to_quanta(topology.urllc_bandwidth_cap), dtype=np.int64)
        self.reset()

    def reset(self):
        self.compute_used = np.zeros_like(self.compute_total)
        self.bandwidth_used = np.zeros_like(self.bandwidth_total)
        self.active_grants = []

    @property
    def remaining_compute(self):
        return from_quanta(self.compute_total - self.compute_used)

    @property
    def remaining_bandwidth(self):
        return from_quanta(self.bandwidth_total - self.bandwidth_used)

    def _claims(self, grant):
        compute = np.zeros_like(self.compute_used)
        bandwidth = np.zeros_like(self.bandwidth_used)
        np.add.at(compute, list(grant.mecs), grant.compute_quanta)
        np.add.at(bandwidth, list(grant.links), grant.bandwidth_quanta)
        return compute, bandwidth

    def fits(self, grant):
        """ True if the grant overdraws none of its MECs and links """
        compute, bandwidth = self._claims(grant)
        return bool(np.all(self.compute_used + compute <= self.compute_total) and
                    np.all(self.bandwidth_used + bandwidth <= self.bandwidth_total))

    def allocate(self, grant):
        if not self.fits(grant):
            raise DomainError('Grant of slice {} overdraws the ledger'.format(grant.slice_id))
        compute, bandwidth = self._claims(grant)
        self.compute_used += compute
        self.bandwidth_used += bandwidth
        self.active_grants.append(grant)

    def release(self, grant):
        compute, bandwidth = self._claims(grant)
        self.compute_used -= compute
        self.bandwidth_used -= bandwidth
        self.active_grants.remove(grant)

    def tick(self):
        """ Decrements every occupancy counter and releases the grants that expire. """
        released = []
        for grant in list(self.active_grants):
            grant.remaining_slots -= 1
            if grant.remaining_slots <= 0:
                self.release(grant)
                released.append(grant)
        return released

    def utilization(self):
        """ Compute allocated on every MEC over its total capacity """
        return from_quanta(self.compute_used) / self.topology.mec_capacity

    def is_conserved(self):
        """ Used amounts equal the sum of active grants exactly and never exceed the caps """
        compute = np.zeros_like(self.compute_used)
        bandwidth = np.zeros_like(self.bandwidth_used)
        for grant in self.active_grants:
            grant_compute, grant_bandwidth = self._claims(grant)
            compute += grant_compute
            bandwidth += grant_bandwidth
        return bool(np.array_equal(compute, self.compute_used) and
                    np.array_equal(bandwidth, self.bandwidth_used) and
                    np.all(self.compute_used <= self.compute_total) and
                    np.all(self.bandwidth_used <= self.bandwidth_total) and
                    np.all(self.compute_used >= 0) and np.all(self.bandwidth_used >= 0))


class NormalizationWindow:
    """
    Sliding record of the latencies and energy costs of served requests over the latest `length`
    slots. Every slot enters as one entry, even when nothing was served in it, so the window spans
    the same number of slots whatever the slice count. min_latency and min_energy are the minima of
    every request held, None while the window holds no served request.
    """
    def __init__(self, length=500):
        self.length = int(length)
        # per slot minima, inf for a slot without served requests
        self.latency_history = deque(maxlen=self.length)
        self.energy_history = deque(maxlen=self.length)
        self.min_latency = None
        self.min_energy = None

    def __len__(self):
        return len(self.latency_history)

    def push(self, latencies, energies):
        """
        Records one slot.

        :param latencies: (float or array) latency of every request served in the slot
        :param energies:  (float or array) energy cost of the same requests
        """
        latencies = np.atleast_1d(np.asarray(latencies, dtype=np.float64))
        energies = np.atleast_1d(np.asarray(energies, dtype=np.float64))
        if latencies.shape != energies.shape:
            raise DomainError('{} latencies for {} energy costs'.format(latencies.size,
                                                                        energies.size))
        self.latency_history.append(float(np.min(latencies, initial=np.inf)))
        self.energy_history.append(float(np.min(energies, initial=np.inf)))
        min_latency = min(self.latency_history)
        min_energy = min(self.energy_history)
        self.min_latency = min_latency if np.isfinite(min_latency) else None
        self.min_energy = min_energy if np.isfinite(min_energy) else None

    def reset(self):
        self.latency_history.clear()
        self.energy_history.clear()
        self.min_latency = None
        self.min_energy = None
