"""
Tests of the latency, energy and reward formulas and of the resource bookkeeping.
"""
import unittest

import numpy as np

from gym_mec_slicing.resources import (AllocationGrant, NormalizationWindow, QUANTUM,
                                       ResourceLedger, SliceRequest, Topology,
                                       default_slice_paths)
from gym_mec_slicing.envs.slicing_env import StepOutcome
from gym_mec_slicing.system_model import (PowerModel, compute_data_rate, compute_energy,
                                          compute_latency, compute_reward, eval_utility,
                                          is_servable, power_draw)
from gym_mec_slicing.utils import (ConfigError, DomainError, UnservableError, read_config,
                                   config_hash, seed_streams)

RING_AND_CHORD = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]


def make_topology(mec_capacity=150.0):
    return Topology(mec_capacity=[mec_capacity] * 6, urllc_compute_cap=100.0,
                    link_capacity=[10.0] * 7, urllc_bandwidth_cap=10.0, snr=10.0,
                    slice_paths=default_slice_paths(6, RING_AND_CHORD, 8),
                    link_endpoints=RING_AND_CHORD)


def make_grant(compute, bandwidth, slice_id=0, topology=None):
    path = (topology or make_topology()).slice_paths[slice_id]
    return AllocationGrant(slice_id, compute, bandwidth, mecs=path.mecs, links=path.links)


class TestSystemModel(unittest.TestCase):
    def test_data_rate(self):
        self.assertAlmostEqual(compute_data_rate(10, 10), 34.5943, places=4)
        self.assertEqual(compute_data_rate(0, 10), 0)
        self.assertAlmostEqual(compute_data_rate(4, 10), 13.8377, places=4)

    def test_latency_examples(self):
        topology = make_topology()
        request = SliceRequest(0, [10, 10, 20], [2, 2])
        total, computing, transmission = compute_latency(request, make_grant([10, 10, 10], [4, 4]),
                                                         topology)
        self.assertAlmostEqual(computing, 2.0, places=12)
        self.assertAlmostEqual(transmission, 0.28907, delta=1e-5)
        self.assertAlmostEqual(total, 2.28907, delta=1e-5)

        request = SliceRequest(0, [10, 10, 10], [0, 0])
        total, computing, transmission = compute_latency(request, make_grant([10, 10, 10], [3, 7]),
                                                         topology)
        self.assertEqual(transmission, 0.0)
        self.assertAlmostEqual(total, 1.0, places=12)

        request = SliceRequest(0, [20, 20, 20], [2, 2])
        total, _, _ = compute_latency(request, make_grant([40, 40, 40], [4, 4]), topology)
        self.assertAlmostEqual(total, 0.78907, delta=1e-5)

    def test_unservable_allocation(self):
        topology = make_topology()
        request = SliceRequest(0, [10, 10, 10], [1, 1])
        with self.assertRaises(UnservableError):
            compute_latency(request, make_grant([10, 0, 10], [4, 4]), topology)
        with self.assertRaises(UnservableError):
            compute_latency(request, make_grant([10, 10, 10], [4, 1e-9]), topology)
        self.assertFalse(is_servable(make_grant([1e-8, 10, 10], [4, 4]), topology))
        self.assertTrue(is_servable(make_grant([1e-3, 10, 10], [4, 4]), topology))

    def test_latency_monotonic_in_allocation(self):
        topology = make_topology()
        rng = np.random.default_rng(3)
        for _ in range(200):
            request = SliceRequest(0, rng.uniform(10, 20, 3), rng.uniform(1, 2, 2))
            compute = rng.uniform(1, 40, 3)
            bandwidth = rng.uniform(0.5, 4, 2)
            _, computing, transmission = compute_latency(request, make_grant(compute, bandwidth),
                                                         topology)
            mec, link = rng.integers(3), rng.integers(2)
            more_compute = compute.copy()
            more_compute[mec] += rng.uniform(0, 5)
            more_bandwidth = bandwidth.copy()
            more_bandwidth[link] += rng.uniform(0, 5)
            _, computing2, transmission2 = compute_latency(
                request, make_grant(more_compute, more_bandwidth), topology)
            self.assertLessEqual(computing2, computing)
            self.assertLessEqual(transmission2, transmission)

    def test_power_draw(self):
        self.assertAlmostEqual(power_draw(0.0), 0.6)
        self.assertAlmostEqual(power_draw(1.0), 1.0)
        self.assertAlmostEqual(power_draw(0.5), 0.8)
        self.assertAlmostEqual(PowerModel(p_static=0.5, p_dynamic=0.5)(0.5), 0.75)
        with self.assertRaises(DomainError):
            power_draw(1.2)
        with self.assertRaises(DomainError):
            power_draw(-0.1)

    def test_energy(self):
        self.assertAlmostEqual(PowerModel()(0.5) * 2.0, 1.6)
        topology = make_topology(mec_capacity=100.0)
        ledger = ResourceLedger(topology)
        grant = make_grant([20, 20, 20], [4, 4], topology=topology)
        ledger.allocate(grant)
        np.testing.assert_allclose(ledger.utilization()[:3], [0.2, 0.2, 0.2])
        energy = compute_energy(SliceRequest(0, [20, 20, 40], [1, 1]), grant, ledger, topology)
        self.assertAlmostEqual(energy, 2.72, places=12)
        self.assertEqual(compute_energy(SliceRequest(0, [0, 0, 0], [1, 1]), grant, ledger,
                                        topology), 0.0)

    def test_reward(self):
        window = NormalizationWindow()
        self.assertEqual(compute_reward(False, np.nan, np.nan, window, 4), -0.25)

        window.push(1.5, 0.9)
        self.assertEqual(compute_reward(True, 1.5, 0.9, window, 4), 0.25)

        window = NormalizationWindow()
        window.push(2.0, 0.8)
        window.push(2.28907, 1.0)
        self.assertAlmostEqual(compute_reward(True, 2.28907, 1.0, window, 4), 0.20922,
                               delta=1e-5)

    def test_eval_utility(self):
        def outcome(utility, served):
            n = len(utility)
            nans = np.full(n, np.nan)
            return StepOutcome(slot=0, requested=np.ones(n, dtype=bool),
                               served=np.array(served), latency=nans, computing_latency=nans,
                               transmission_latency=nans, energy=nans, rewards=np.zeros(n),
                               utility=np.array(utility, dtype=np.float64))

        self.assertEqual(eval_utility(outcome([0, 0, 0, 0], [False] * 4)), 0.0)
        self.assertEqual(eval_utility(outcome([0.25] * 4, [True] * 4)), 1.0)
        self.assertAlmostEqual(eval_utility(outcome([0.2, 0.2, 0, 0],
                                                    [True, True, False, False])), 0.4)


class TestResources(unittest.TestCase):
    def test_default_topology_from_config(self):
        config = read_config('config_files/default_env.json')
        topology = Topology.from_config(config['topology'], config['max_slices'])
        self.assertEqual((topology.num_mecs, topology.num_links), (6, 7))
        self.assertEqual(len(topology.slice_paths), 8)
        self.assertEqual(topology.slice_paths[0].mecs, (0, 1, 2))
        self.assertEqual(topology.slice_paths[0].links, (0, 1))
        self.assertEqual(topology.slice_paths[5].mecs, (5, 0, 1))
        self.assertEqual(topology.slice_paths[5].links, (5, 0))

    def test_topology_invariants(self):
        with self.assertRaises(ConfigError):
            Topology(mec_capacity=[50.0] * 6, urllc_compute_cap=100.0, link_capacity=[10.0] * 7,
                     urllc_bandwidth_cap=10.0, snr=10.0, slice_paths=[])
        with self.assertRaises(ConfigError):
            Topology(mec_capacity=[150.0] * 6, urllc_compute_cap=100.0, link_capacity=[10.0] * 7,
                     urllc_bandwidth_cap=10.0, snr=10.0,
                     slice_paths=[{'mecs': [0, 1], 'links': [0, 1]}])
        with self.assertRaises(ConfigError):
            Topology(mec_capacity=[150.0] * 6, urllc_compute_cap=100.0, link_capacity=[10.0] * 7,
                     urllc_bandwidth_cap=10.0, snr=10.0,
                     slice_paths=[{'mecs': [0, 1, 9], 'links': [0, 1]}])
        with self.assertRaises(ConfigError):
            Topology(mec_capacity=[150.0] * 6, urllc_compute_cap=100.0, link_capacity=[0.0] * 7,
                     urllc_bandwidth_cap=10.0, snr=10.0, slice_paths=[])

    def test_grant_domain(self):
        with self.assertRaises(DomainError):
            AllocationGrant(0, [-1, 1, 1], [1, 1])
        with self.assertRaises(DomainError):
            SliceRequest(0, [1, 1, 1], [-1, 1])
        grant = AllocationGrant(0, [0.1, 0.2, 0.3], [1, 1])
        self.assertTrue(np.all(grant.compute_alloc <= [0.1, 0.2, 0.3]))
        self.assertTrue(np.all([0.1, 0.2, 0.3] - grant.compute_alloc < QUANTUM))

    def test_ledger_conservation(self):
        topology = make_topology()
        ledger = ResourceLedger(topology)
        first = make_grant([40, 40, 40], [4, 4], slice_id=0)
        second = make_grant([40, 40, 40], [4, 4], slice_id=1)
        third = make_grant([40, 40, 40], [4, 4], slice_id=2)
        ledger.allocate(first)
        ledger.allocate(second)
        self.assertFalse(ledger.fits(third))
        with self.assertRaises(DomainError):
            ledger.allocate(third)
        self.assertTrue(ledger.is_conserved())
        np.testing.assert_array_equal(ledger.remaining_compute, [60, 20, 20, 60, 100, 100])
        ledger.release(first)
        self.assertTrue(ledger.is_conserved())
        self.assertTrue(ledger.fits(third))

    def test_ledger_tick_releases_expired(self):
        ledger = ResourceLedger(make_topology())
        short = make_grant([1, 2, 3], [0.5, 0.5], slice_id=0)
        long = make_grant([3, 2, 1], [0.5, 0.5], slice_id=1)
        ledger.allocate(short)
        ledger.allocate(long)
        short.hold_for(1)
        long.hold_for(3)
        self.assertEqual(ledger.tick(), [short])
        self.assertEqual(ledger.active_grants, [long])
        self.assertEqual(ledger.tick(), [])
        self.assertEqual(ledger.tick(), [long])
        np.testing.assert_array_equal(ledger.compute_used, 0)
        np.testing.assert_array_equal(ledger.remaining_compute, 100.0)
        np.testing.assert_array_equal(ledger.remaining_bandwidth, 10.0)

    def test_window_minima_and_eviction(self):
        window = NormalizationWindow(length=3)
        for latency, energy in [(3.0, 1.0), (2.0, 4.0), (5.0, 2.0)]:
            window.push(latency, energy)
        self.assertEqual((window.min_latency, window.min_energy), (2.0, 1.0))
        window.push(6.0, 6.0)
        self.assertEqual((window.min_latency, window.min_energy), (2.0, 2.0))
        window.push(7.0, 7.0)
        self.assertEqual(len(window), 3)
        self.assertEqual((window.min_latency, window.min_energy), (5.0, 2.0))
        window.reset()
        self.assertEqual(len(window), 0)
        self.assertIsNone(window.min_latency)

    def test_window_spans_slots_not_requests(self):
        window = NormalizationWindow(length=500)
        window.push([1.0, 3.0, 3.0, 3.0], [0.5, 2.0, 2.0, 2.0])
        for slot in range(1, 500):
            window.push(np.full(4, 3.0), np.full(4, 2.0))
            self.assertEqual((window.min_latency, window.min_energy), (1.0, 0.5))
        self.assertEqual(len(window), 500)
        # slot 500 pushes the first slot out
        window.push(np.full(4, 3.0), np.full(4, 2.0))
        self.assertEqual((window.min_latency, window.min_energy), (3.0, 2.0))

    def test_window_slots_without_requests(self):
        window = NormalizationWindow(length=2)
        window.push([], [])
        self.assertEqual(len(window), 1)
        self.assertIsNone(window.min_latency)
        window.push([2.0, 4.0], [1.0, 3.0])
        window.push([], [])
        self.assertEqual((window.min_latency, window.min_energy), (2.0, 1.0))
        window.push([], [])
        self.assertIsNone(window.min_energy)
        with self.assertRaises(DomainError):
            window.push([1.0, 2.0], [1.0])


class TestUtils(unittest.TestCase):
    def test_config_hash_is_stable(self):
        self.assertEqual(config_hash({'a': 1, 'b': [1, 2]}), config_hash({'b': [1, 2], 'a': 1}))
        self.assertNotEqual(config_hash({'a': 1}), config_hash({'a': 2}))
        self.assertEqual(len(config_hash({})), 16)

    def test_seed_streams_are_reproducible(self):
        first = {name: np.random.default_rng(ss).random() for name, ss in seed_streams(7).items()}
        second = {name: np.random.default_rng(ss).random() for name, ss in seed_streams(7).items()}
        self.assertEqual(first, second)
        self.assertEqual(len(set(first.values())), 5)
        # evaluation never replays the requests seen in training
        self.assertNotEqual(first['eval'], first['requests'])

    def test_read_config_override_warns(self):
        with self.assertWarns(UserWarning):
            config = read_config('config_files/default_env.json', {'topology': {'snr': 20.0}})
        self.assertEqual(config['topology']['snr'], 20.0)
        self.assertEqual(config['topology']['num_mecs'], 6)
        with self.assertRaises(ConfigError):
            read_config('config_files/does_not_exist.json')


if __name__ == '__main__':
    unittest.main()
