#!/usr/bin/python
##
# Description: Tests weight normalization, learning rate kernels and the
# Hebbian / STDP / decay update rules
##
from __future__ import print_function, division
import unittest
import numpy as np
from hypothesis import given, settings
import hypothesis.strategies as st
#
from hebbpy.neuron import SpikeEvent, OutputSpike, ChannelIndexError
from hebbpy.plasticity import WeightVector, ConstantKernel, TruncatedExponentialKernel, \
    PlasticityRule, NormalizationError, WindowError, normalize, norm_factor, \
    first_order_norm_factor, hebbian_update, stdp_update, decay_model_update, window_events, \
    epsilon_at, HEBBIAN, STDP, DECAY, PROMOTION, DEMOTION


class TestWeightVector(unittest.TestCase):
    def test_normalize(self):
        np.testing.assert_allclose(normalize(WeightVector([0.5, 0.5])).w, [0.5, 0.5])
        np.testing.assert_allclose(normalize(WeightVector([2.0, 2.0], 2.0)).w,
                                   [1 / np.sqrt(2), 1 / np.sqrt(2)], rtol=1e-15)
        np.testing.assert_allclose(normalize(WeightVector([0.3, 0.7005])).w,
                                   [0.3 / 1.0005, 0.7005 / 1.0005], rtol=1e-15)

    def test_errors(self):
        with self.assertRaises(NormalizationError):
            normalize(WeightVector([0.0, 0.0]))
        with self.assertRaises(ValueError):
            WeightVector([0.5, -0.1])
        w = WeightVector([0.5, 0.5])
        with self.assertRaises(ValueError):
            w.w[0] = 1.0

    @given(st.lists(st.floats(min_value=1e-3, max_value=1e3), min_size=1, max_size=20),
           st.sampled_from([1.0, 2.0, 3.0]))
    @settings(max_examples=200, deadline=None)
    def test_unit_norm(self, raw, l):
        w = normalize(WeightVector(raw, l))
        self.assertTrue(np.isclose(np.sum(w.w ** l) ** (1.0 / l), 1.0, rtol=1e-12, atol=0.0))


class TestKernels(unittest.TestCase):
    def test_constant(self):
        k = ConstantKernel(0.0001, 0.07)
        self.assertEqual(epsilon_at(k, -0.03), 0.0001)
        self.assertEqual(epsilon_at(k, 0.07), 0.0001)
        self.assertEqual(epsilon_at(k, -0.08), 0.0)
        self.assertTrue(k.is_constant)

    def test_truncated_exponential(self):
        k = TruncatedExponentialKernel(0.001, 0.07, 0.02)
        self.assertEqual(epsilon_at(k, 0.0), 0.001)
        self.assertAlmostEqual(epsilon_at(k, -0.02), 0.001 * np.exp(-1.0), places=15)
        self.assertEqual(epsilon_at(k, 0.02), epsilon_at(k, -0.02))
        self.assertEqual(epsilon_at(k, 0.071), 0.0)
        self.assertFalse(k.is_constant)

    def test_random_constant(self):
        k = ConstantKernel(0.1, 0.15, random=True)
        rng = np.random.RandomState(4)
        draws = np.array([epsilon_at(k, 0.0, rng) for _ in range(5000)])
        self.assertTrue(np.all((draws >= 0.0) & (draws < 0.1)))
        self.assertAlmostEqual(np.mean(draws), 0.05, delta=0.003)
        self.assertFalse(k.is_constant)

    def test_with_amplitude(self):
        k = ConstantKernel(0.1, 0.15, random=True).with_amplitude(0.2)
        self.assertEqual(k.amplitude, 0.2)
        self.assertTrue(k.random)


class TestNormFactor(unittest.TestCase):
    def test_first_order_residual_shrinks_quadratically(self):
        rng = np.random.RandomState(42)
        for l in (2.0, 3.0):
            for trial in range(5):
                w = normalize(WeightVector(rng.uniform(0.2, 1.0, size=6), l))
                for ch in range(6):
                    res = [abs(norm_factor(w, ch, eps) - first_order_norm_factor(w, ch, eps))
                           for eps in (1e-3, 1e-4, 1e-5)]
                    for r_big, r_small in zip(res[:-1], res[1:]):
                        self.assertTrue(50.0 <= r_big / r_small <= 200.0,
                                        msg="l=%g ratio %g" % (l, r_big / r_small))

    def test_first_order_exact_for_l1(self):
        w = normalize(WeightVector([0.2, 0.3, 0.5]))
        for eps in (1e-3, 1e-4, 1e-5):
            for ch in range(3):
                self.assertLess(abs(norm_factor(w, ch, eps) - first_order_norm_factor(w, ch, eps)),
                                1e-14)

    def test_demotion_factor(self):
        w = WeightVector([0.5, 0.5])
        self.assertAlmostEqual(norm_factor(w, 0, 0.01, DEMOTION), 0.99, places=15)
        self.assertAlmostEqual(first_order_norm_factor(w, 0, 0.01, DEMOTION), 0.99, places=15)


class TestUpdates(unittest.TestCase):
    def setUp(self):
        self.hebb = PlasticityRule(HEBBIAN, 0.0005, 0.15)
        self.stdp = PlasticityRule(STDP, 0.0001, 0.07)

    def test_single_promotion(self):
        w, events = hebbian_update(WeightVector([0.5, 0.5]), self.hebb, [SpikeEvent(0, 9.95)],
                                   OutputSpike(10.0, 0))
        np.testing.assert_allclose(w.w, [0.5005 / 1.0005, 0.5 / 1.0005], rtol=1e-15)
        self.assertEqual(len(events), 1)
        self.assertEqual(events[0].direction, PROMOTION)
        self.assertAlmostEqual(events[0].offset, -0.05)

    def test_single_channel_fixed_point(self):
        w, _ = hebbian_update(WeightVector([1.0]), self.hebb, [SpikeEvent(0, 1.0)], OutputSpike(1.0, 0))
        self.assertEqual(w.w[0], 1.0)

    @given(st.floats(min_value=0.01, max_value=0.99), st.sampled_from([1e-3, 5e-4, 1e-5]))
    @settings(max_examples=100, deadline=None)
    def test_promotion_signs(self, w0, eps):
        rule = PlasticityRule(HEBBIAN, eps, 0.1)
        w = WeightVector([w0, 1.0 - w0])
        new, _ = hebbian_update(w, rule, [SpikeEvent(0, 1.0)], OutputSpike(1.0, 0))
        self.assertAlmostEqual(new.w[0], (w0 + eps) / (1 + eps), places=14)
        self.assertAlmostEqual(new.w[1], (1 - w0) / (1 + eps), places=14)
        self.assertGreater(new.w[0], w0)
        self.assertLess(new.w[1], 1.0 - w0)

    def test_stdp_promote_then_demote(self):
        w0 = WeightVector([0.5, 0.5])
        out = OutputSpike(10.0, 0)
        w, events = stdp_update(w0, self.stdp, [SpikeEvent(0, 10.0)], [SpikeEvent(1, 10.05)], out)
        step1 = np.array([0.5001, 0.5]) / 1.0001
        step2 = np.array([step1[0], step1[1] - 0.0001])
        np.testing.assert_allclose(w.w, step2 / np.sum(step2), rtol=1e-14)
        self.assertEqual([e.direction for e in events], [PROMOTION, DEMOTION])
        self.assertAlmostEqual(np.sum(w.w), 1.0, places=12)

    def test_demotion_floor(self):
        w, _ = stdp_update(WeightVector([1.0, 0.0]), self.stdp, [], [SpikeEvent(1, 10.01)],
                           OutputSpike(10.0, 0))
        np.testing.assert_array_equal(w.w, [1.0, 0.0])

    def test_hebbian_equals_stdp_without_post(self):
        pre = [SpikeEvent(0, 9.95), SpikeEvent(2, 9.97), SpikeEvent(1, 10.0)]
        w0 = WeightVector([0.2, 0.3, 0.5])
        out = OutputSpike(10.0, 1)
        rule_h = PlasticityRule(HEBBIAN, 0.001, 0.07)
        rule_s = PlasticityRule(STDP, 0.001, 0.07)
        wh, _ = hebbian_update(w0, rule_h, pre, out)
        ws, _ = stdp_update(w0, rule_s, pre, [], out)
        np.testing.assert_array_equal(wh.w, ws.w)

    def test_window_errors(self):
        with self.assertRaises(WindowError):
            hebbian_update(WeightVector([0.5, 0.5]), self.hebb, [SpikeEvent(0, 9.0)],
                           OutputSpike(10.0, 0))
        with self.assertRaises(WindowError):
            stdp_update(WeightVector([0.5, 0.5]), self.stdp, [], [SpikeEvent(1, 10.5)],
                        OutputSpike(10.0, 0))
        with self.assertRaises(ChannelIndexError):
            hebbian_update(WeightVector([0.5, 0.5]), self.hebb, [SpikeEvent(3, 10.0)],
                           OutputSpike(10.0, 0))

    def test_window_events_leave_weights(self):
        events = window_events(self.stdp, [SpikeEvent(0, 9.96)], [SpikeEvent(1, 10.02)],
                               OutputSpike(10.0, 0))
        self.assertEqual([(e.channel, e.direction) for e in events], [(0, PROMOTION), (1, DEMOTION)])
        self.assertTrue(all(e.applied_epsilon == 0.0001 for e in events))

    def test_recorder_sees_weights_before(self):
        seen = []
        hebbian_update(WeightVector([0.5, 0.5]), self.hebb,
                       [SpikeEvent(0, 9.9), SpikeEvent(1, 10.0)], OutputSpike(10.0, 1),
                       recorder=lambda ev, w: seen.append((ev.channel, w.copy())))
        np.testing.assert_array_equal(seen[0][1], [0.5, 0.5])
        np.testing.assert_allclose(seen[1][1], [0.5005 / 1.0005, 0.5 / 1.0005])

    def test_norm_after_update(self):
        rng = np.random.RandomState(1)
        for l in (1.0, 2.0, 3.0):
            rule = PlasticityRule(STDP, 0.01, 0.1, norm_exponent=l)
            w = normalize(WeightVector(rng.uniform(0.1, 1.0, 4), l))
            pre = [SpikeEvent(int(c), 10.0 - 0.01 * k) for k, c in enumerate(rng.randint(0, 4, 5))]
            post = [SpikeEvent(int(c), 10.0 + 0.01 * (k + 1)) for k, c in enumerate(rng.randint(0, 4, 5))]
            w, _ = stdp_update(w, rule, pre, post, OutputSpike(10.0, 0))
            self.assertAlmostEqual(np.sum(w.w ** l) ** (1.0 / l), 1.0, places=12)


class TestDecayModel(unittest.TestCase):
    def setUp(self):
        self.rule = PlasticityRule(DECAY, 0.001, 0.15, delta=0.01)

    def test_single_update(self):
        w = decay_model_update(WeightVector([0.1, 0.1]), self.rule, 0)
        np.testing.assert_allclose(w.w, [0.1 * 0.99 + 0.001, 0.1 * 0.99], rtol=1e-15)

    def test_single_channel_fixed_point(self):
        w = WeightVector([0.5])
        for _ in range(5000):
            w = decay_model_update(w, self.rule, 0)
        self.assertAlmostEqual(w.w[0], 0.1, places=12)

    def test_positive(self):
        rng = np.random.RandomState(3)
        w = WeightVector([0.2, 0.2, 0.2])
        for ch in rng.randint(0, 3, 3000):
            w = decay_model_update(w, self.rule, int(ch))
        self.assertTrue(np.all(w.w > 0.0))
        self.assertAlmostEqual(np.sum(w.w), 0.1, places=6)

    def test_needs_delta(self):
        with self.assertRaises(ValueError):
            PlasticityRule(DECAY, 0.001, 0.15)


if __name__ == "__main__":
    unittest.main()
