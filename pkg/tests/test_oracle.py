#!/usr/bin/python
##
# Description: Tests the exact two channel enumeration, the frozen weight
# Monte Carlo estimate and the fixed point scan
##
from __future__ import print_function, division
import os
import shutil
import tempfile
import unittest
import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
#
from hebbpy.neuron import NeuronState
from hebbpy.inputs import RateSpec
from hebbpy.trace import read_csv
from hebbpy.oracle import EnumerationConfig, EnumerationLengthError, NoOutputError, \
    enumerate_p1, monte_carlo_p, fixed_point_scan, classify_crossings, refine_crossings, \
    STABLE, UNSTABLE, ABSORBING, DROP


class TestEnumeration(unittest.TestCase):
    def test_trivial_weights(self):
        self.assertEqual(enumerate_p1(EnumerationConfig([1.0, 0.0])), 1.0)
        self.assertEqual(enumerate_p1(EnumerationConfig([0.0, 1.0])), 0.0)

    def test_symmetric_point(self):
        for d in (0.0, 0.1, 0.2):
            cfg = EnumerationConfig([0.5, 0.5], decay=d, rate=0.9, unresolved=DROP)
            self.assertAlmostEqual(enumerate_p1(cfg), 0.5, places=12)

    def test_two_spike_regime(self):
        # every pair of spikes crosses, a single one never does
        cfg = EnumerationConfig([0.52, 0.48], max_sequence_length=4)
        self.assertAlmostEqual(enumerate_p1(cfg), 0.5, places=12)
        # 2,2 falls short and needs a third spike: 1/4 + 1/4 + 1/8
        cfg = EnumerationConfig([0.6, 0.4], max_sequence_length=4)
        self.assertAlmostEqual(enumerate_p1(cfg), 0.625, places=12)

    def test_bias(self):
        # with w_1 >= theta a channel 1 spike always fires at once
        cfg = EnumerationConfig([0.95, 0.05], max_sequence_length=6, bias=0.8, unresolved=DROP)
        self.assertGreater(enumerate_p1(cfg), 0.99)
        lo = enumerate_p1(EnumerationConfig([0.6, 0.4], bias=0.3))
        hi = enumerate_p1(EnumerationConfig([0.6, 0.4], bias=0.7))
        self.assertLess(lo, hi)

    def test_unresolved_raises(self):
        cfg = EnumerationConfig([0.1, 0.9], max_sequence_length=5)
        with self.assertRaises(EnumerationLengthError) as ctx:
            enumerate_p1(cfg)
        self.assertEqual(ctx.exception.sequence, (1, 1, 1, 1, 1))
        p = enumerate_p1(cfg.replace(unresolved=DROP))
        self.assertTrue(0.0 <= p < 0.5)

    @given(st.floats(min_value=0.3, max_value=0.7))
    @settings(max_examples=30, deadline=None)
    def test_mirror_symmetry(self, w1):
        cfg = EnumerationConfig([w1, 1.0 - w1], decay=0.1, max_sequence_length=10,
                                unresolved=DROP)
        a = enumerate_p1(cfg)
        b = enumerate_p1(cfg.with_w1(1.0 - w1))
        self.assertAlmostEqual(a + b, 1.0, places=9)

    def test_seed_spread(self):
        vals = [enumerate_p1(EnumerationConfig([0.6, 0.4], decay=0.2, seed=s)) for s in range(5)]
        self.assertLess(np.max(vals) - np.min(vals), 0.01)


class TestMonteCarlo(unittest.TestCase):
    def test_symmetric(self):
        p = monte_carlo_p([0.5, 0.5], NeuronState(), RateSpec([0.9, 0.9]), 20000, seed=1)
        self.assertAlmostEqual(np.sum(p), 1.0, places=12)
        self.assertAlmostEqual(p[0], 0.5, delta=0.02)

    def test_agrees_with_enumeration(self):
        rates = RateSpec.biased(1.8, [0.5, 0.5])
        for d in (0.0, 0.2):
            for w1 in (0.35, 0.6, 0.8):
                cfg = EnumerationConfig([w1, 1.0 - w1], decay=d, unresolved=DROP)
                p_mc = monte_carlo_p([w1, 1.0 - w1], NeuronState(0.0, 0.94, d, 0.0), rates, 30000,
                                     seed=2)
                self.assertAlmostEqual(enumerate_p1(cfg), p_mc[0], delta=0.02,
                                       msg="d=%g w1=%g" % (d, w1))

    def test_window_counts(self):
        p, counts = monte_carlo_p([0.5, 0.5], NeuronState(), RateSpec([0.9, 0.9]), 2000, seed=3,
                                  window=0.5, return_counts=True)
        # the triggering spike is always counted
        self.assertGreaterEqual(np.sum(counts), 2000)

    def test_no_output(self):
        with self.assertRaises(NoOutputError):
            monte_carlo_p([0.5, 0.5], NeuronState(0.0, 0.94, 50.0, 0.0), RateSpec([0.01, 0.01]),
                          10, seed=0, max_events=200)


class TestFixedPointScan(unittest.TestCase):
    def test_classify(self):
        grid = np.linspace(0.0, 1.0, 11)
        flat = np.array([0.0, 0.3, 0.4, 0.45, 0.48, 0.5, 0.52, 0.55, 0.6, 0.7, 1.0])
        out = classify_crossings(grid, flat)
        self.assertEqual([c[2] for c in out], [ABSORBING, STABLE, ABSORBING])
        self.assertAlmostEqual(out[1][0], 0.5, places=12)
        steep = np.array([0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9, 0.95, 1.0])
        out = classify_crossings(grid, steep)
        self.assertEqual([c[2] for c in out], [ABSORBING, UNSTABLE, ABSORBING])
        # interpolated crossing between grid points
        out = classify_crossings([0.0, 0.4, 0.8, 1.0], [0.0, 0.6, 0.6, 1.0])
        self.assertEqual(out[1][2], STABLE)
        self.assertAlmostEqual(out[1][0], 0.6, places=12)

    def test_degenerate_grid(self):
        res = fixed_point_scan(EnumerationConfig([0.5, 0.5]), 2)
        self.assertEqual([c[2] for c in res.crossings], [ABSORBING, ABSORBING])
        np.testing.assert_array_equal(res.p, [0.0, 1.0])

    def test_no_decay_curve(self):
        res = fixed_point_scan(EnumerationConfig([0.5, 0.5]), 101, max_length_cap=16)
        self.assertEqual(res.crossings[0][2], ABSORBING)
        self.assertEqual(res.crossings[-1][2], ABSORBING)
        stable = [c[0] for c in res.crossings_of(STABLE)]
        unstable = [c[0] for c in res.crossings_of(UNSTABLE)]
        self.assertTrue(any(abs(w - 0.5) < 1e-9 for w in stable))
        self.assertTrue(any(0.60 <= w <= 0.65 for w in stable))
        self.assertTrue(any(0.5 < w < 0.6 for w in unstable))
        self.assertEqual(len(res.p), 101)
        self.assertLess(res.monotone_violation(), 0.01)
        # the unstable / stable pair between 0.68 and 0.69 is narrower than the grid step
        self.assertTrue(any(0.685 < w < 0.6876 for w in unstable))
        self.assertTrue(any(0.687 <= w <= 0.688 for w in stable))
        self.assertGreater(res.refined_grid.size, 0)
        plain = classify_crossings(res.grid, res.p)
        self.assertFalse(any(0.681 < c[0] < 0.689 for c in plain))

    def test_refine_step_onto_diagonal(self):
        def step(w):
            return 0.625 if w < 0.68667 else 0.6875
        w_ref, p_ref = refine_crossings([0.68, 0.69], [0.625, 0.6875], step)
        self.assertTrue(0 < w_ref.size <= 8)
        self.assertTrue(np.all(np.diff(w_ref) > 0.0))
        self.assertTrue(any(0.68667 <= w < 0.6875 for w in w_ref))
        np.testing.assert_array_equal(p_ref, [step(w) for w in w_ref])
        grid = np.concatenate([[0.68], w_ref, [0.69]])
        p = np.concatenate([[0.625], p_ref, [0.6875]])
        out = classify_crossings(grid, p)
        unstable = [c[0] for c in out if c[2] == UNSTABLE]
        stable = [c[0] for c in out if c[2] == STABLE]
        self.assertEqual(len(unstable), 1)
        self.assertTrue(0.686 < unstable[0] < 0.68667 + 1e-3)
        self.assertEqual(len(stable), 1)
        self.assertAlmostEqual(stable[0], 0.6875, places=6)

    def test_refine_leaves_plain_intervals(self):
        def never(w):
            raise AssertionError("unexpected evaluation at %g" % w)
        # sign change, far below the diagonal, far above it
        w_ref, p_ref = refine_crossings([0.2, 0.3, 0.5, 0.6, 0.8, 0.9],
                                        [0.25, 0.25, 0.3, 0.4, 0.95, 0.99], never)
        self.assertEqual(w_ref.size, 0)
        self.assertEqual(p_ref.size, 0)

    def test_refine_bounded(self):
        calls = []

        def flat(w):
            calls.append(w)
            return w - 1e-9
        w_ref, _ = refine_crossings([0.0, 1.0], [-1e-9, 1.0 - 1e-9], flat, max_points=10)
        self.assertEqual(w_ref.size, 10)
        self.assertEqual(len(calls), 10)

    def test_decay_changes_curve(self):
        a = fixed_point_scan(EnumerationConfig([0.5, 0.5], decay=0.0), 21, max_length_cap=16)
        b = fixed_point_scan(EnumerationConfig([0.5, 0.5], decay=0.2), 21, max_length_cap=16)
        self.assertGreater(np.max(np.abs(a.p - b.p)), 0.01)
        self.assertLess(b.monotone_violation(), 0.01)

    def test_write_csv(self):
        tmp = tempfile.mkdtemp()
        try:
            res = fixed_point_scan(EnumerationConfig([0.5, 0.5]), 11)
            curve, cross = os.path.join(tmp, "p.csv"), os.path.join(tmp, "c.csv")
            res.write_csv(curve, cross, manifest="# hebbpy config_hash=x seed=0\n")
            header, rows = read_csv(curve)
            self.assertEqual(header, ["w_1", "p_1", "classification"])
            self.assertEqual(len(rows), 11)
            self.assertEqual(rows[0][2], ABSORBING)
            header, rows = read_csv(cross)
            self.assertEqual(len(rows), len(res.crossings))
        finally:
            shutil.rmtree(tmp)


@pytest.mark.heavy
class TestOracleCrossValidation(unittest.TestCase):
    def test_grid(self):
        grid = np.linspace(0.0, 1.0, 21)
        rates = RateSpec.biased(1.8, [0.5, 0.5])
        for d in (0.0, 0.1, 0.2):
            for k, w1 in enumerate(grid[1:-1]):
                cfg = EnumerationConfig([w1, 1.0 - w1], decay=d, max_sequence_length=16,
                                        unresolved=DROP)
                p_enum = enumerate_p1(cfg)
                p_mc = monte_carlo_p([w1, 1.0 - w1], NeuronState(0.0, 0.94, d, 0.0), rates,
                                     50000, seed=k)[0]
                self.assertAlmostEqual(p_enum, p_mc, delta=0.02, msg="d=%g w1=%g" % (d, w1))
                spread = [enumerate_p1(cfg.replace(seed=s)) for s in range(5)]
                self.assertLess(np.max(spread) - np.min(spread), 0.01)


if __name__ == "__main__":
    unittest.main()
