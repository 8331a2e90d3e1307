#!/usr/bin/python
##
# Description: Tests the Poisson, biased, Gaussian rate and MNIST row input
# streams
##
from __future__ import print_function, division
import os
import shutil
import tempfile
import unittest
import numpy as np
from scipy import stats
#
from hebbpy.inputs import RateSpec, poisson_stream, gaussian_rates, redrawn_rate_schedule, \
    scheduled_poisson_stream, MnistEncoderConfig, MnistDigitSource, mnist_encode_spike, \
    mnist_stream, RATE_FLOOR
from hebbpy.utils.idx_reader import write_idx


class TestRateSpec(unittest.TestCase):
    def test_per_channel(self):
        spec = RateSpec([0.9, 0.3])
        self.assertEqual(spec.n_channels, 2)
        self.assertAlmostEqual(spec.total_rate, 1.2)
        np.testing.assert_allclose(spec.shares, [0.75, 0.25])

    def test_biased(self):
        spec = RateSpec.biased(1.8, [0.8, 0.2])
        self.assertTrue(spec.is_biased)
        np.testing.assert_allclose(spec.per_channel, [1.44, 0.36])

    def test_invalid(self):
        with self.assertRaises(ValueError):
            RateSpec([0.9, 0.0])
        with self.assertRaises(ValueError):
            RateSpec.biased(1.8, [0.5, 0.6])
        with self.assertRaises(ValueError):
            RateSpec.biased(0.0, [0.5, 0.5])


class TestPoissonStream(unittest.TestCase):
    def test_rates_and_waits(self):
        train = poisson_stream(RateSpec([0.9, 0.3]), 20000.0, seed=7)
        self.assertTrue(train.is_sorted())
        self.assertEqual(train.t_end, 20000.0)
        self.assertTrue(np.all(train.times < 20000.0))
        for ch, rate in ((0, 0.9), (1, 0.3)):
            t = train.times[train.channels == ch]
            self.assertAlmostEqual(t.size / 20000.0, rate, delta=0.05 * rate)
            waits = np.diff(t)
            self.assertGreater(stats.kstest(waits, 'expon', args=(0.0, 1.0 / rate)).pvalue, 0.001)

    def test_biased_shares(self):
        train = poisson_stream(RateSpec.biased(1.8, [0.7, 0.2, 0.1]), 10000.0, seed=2)
        share = np.bincount(train.channels, minlength=3) / len(train)
        np.testing.assert_allclose(share, [0.7, 0.2, 0.1], atol=0.015)
        self.assertAlmostEqual(len(train) / 10000.0, 1.8, delta=0.09)
        waits = np.diff(train.times)
        self.assertGreater(stats.kstest(waits, 'expon', args=(0.0, 1.0 / 1.8)).pvalue, 0.001)

    def test_seeded(self):
        a = poisson_stream(RateSpec([0.9, 0.9]), 100.0, seed=5)
        b = poisson_stream(RateSpec([0.9, 0.9]), 100.0, seed=5)
        c = poisson_stream(RateSpec([0.9, 0.9]), 100.0, seed=6)
        np.testing.assert_array_equal(a.times, b.times)
        np.testing.assert_array_equal(a.channels, b.channels)
        self.assertFalse(np.array_equal(a.times, c.times))

    def test_empty(self):
        train = poisson_stream(RateSpec([0.9]), 0.0, seed=0)
        self.assertEqual(len(train), 0)


class TestGaussianRates(unittest.TestCase):
    def test_floor(self):
        spec = gaussian_rates(200, 0.1, 1.0, seed=3)
        self.assertTrue(np.all(spec.rates >= RATE_FLOOR))
        self.assertTrue(np.any(spec.rates == RATE_FLOOR))

    def test_moments(self):
        spec = gaussian_rates(5000, 1.0, 0.1, seed=1)
        self.assertAlmostEqual(np.mean(spec.rates), 1.0, delta=0.01)
        self.assertAlmostEqual(np.std(spec.rates), 0.1, delta=0.01)

    def test_redraw_schedule(self):
        schedule = redrawn_rate_schedule(10, 1.0, 0.3, [100.0, 200.0, 500.0], 300.0, seed=4)
        self.assertEqual([(a, b) for a, b, _ in schedule], [(0.0, 100.0), (100.0, 200.0),
                                                            (200.0, 300.0)])
        self.assertFalse(np.array_equal(schedule[0][2].rates, schedule[1][2].rates))
        train = scheduled_poisson_stream(schedule, seed=4)
        self.assertTrue(train.is_sorted())
        self.assertEqual(train.t_end, 300.0)
        for t0, t1, spec in schedule:
            sel = (train.times >= t0) & (train.times < t1)
            self.assertGreater(np.sum(sel), 0)
            self.assertLess(int(np.max(train.channels[sel])), 10)


class TestMnist(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        images = np.zeros((6, 28, 28), dtype=np.uint8)
        labels = np.array([3, 3, 7, 7, 7, 1], dtype=np.uint8)
        images[0, 14, 5] = 255
        images[1, 14, 5] = 100
        images[1, 14, 6] = 100
        images[2, 14, 20] = 50
        images[3, 14, 21] = 50
        # digit 7 blank row, skipped
        images[5, 14, 0] = 10
        self.images_path = os.path.join(self.tmp, "images-idx3-ubyte")
        self.labels_path = os.path.join(self.tmp, "labels-idx1-ubyte")
        write_idx(self.images_path, images)
        write_idx(self.labels_path, labels)
        self.images = images
        self.config = MnistEncoderConfig(self.images_path, self.labels_path, seed=9)

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_source(self):
        source = MnistDigitSource.from_config(self.config)
        self.assertEqual(source.digits, [1, 3, 7])
        self.assertEqual(source.n_rows(7), 2)
        self.assertEqual(source.n_channels, 28)
        mean3 = source.mean_intensity(3)
        self.assertAlmostEqual(mean3[5], 0.75)
        self.assertAlmostEqual(mean3[6], 0.25)
        self.assertAlmostEqual(np.sum(mean3), 1.0)

    def test_draw_channels(self):
        source = MnistDigitSource(self.images, [3, 3, 7, 7, 7, 1])
        rng = np.random.RandomState(0)
        ch = source.draw_channels(3, rng, 20000)
        self.assertTrue(set(np.unique(ch)) <= {5, 6})
        self.assertAlmostEqual(np.mean(ch == 5), 0.75, delta=0.02)
        ch = source.draw_channels(7, rng, 2000)
        self.assertTrue(set(np.unique(ch)) <= {20, 21})
        self.assertEqual(set(source.draw_channels(1, rng, 50)), {0})
        with self.assertRaises(ValueError):
            source.draw_channels(4, rng, 1)

    def test_encode_spike(self):
        rng = np.random.RandomState(1)
        self.assertEqual(mnist_encode_spike(self.images[0], self.config, rng), 5)
        draws = [mnist_encode_spike(self.images[1], self.config, rng) for _ in range(4000)]
        self.assertAlmostEqual(np.mean(np.array(draws) == 5), 0.5, delta=0.03)
        with self.assertRaises(ValueError):
            mnist_encode_spike(self.images[4], self.config, rng)

    def test_stream(self):
        train = mnist_stream(self.config, [(3, 100.0), (7, 100.0)])
        self.assertTrue(train.is_sorted())
        self.assertEqual(train.n_channels, 28)
        self.assertAlmostEqual(len(train) / 200.0, self.config.combined_rate,
                               delta=0.1 * self.config.combined_rate)
        first = train.channels[train.times < 100.0]
        second = train.channels[train.times >= 100.0]
        self.assertTrue(set(np.unique(first)) <= {5, 6})
        self.assertTrue(set(np.unique(second)) <= {20, 21})
        again = mnist_stream(self.config, [(3, 100.0), (7, 100.0)])
        np.testing.assert_array_equal(train.times, again.times)

    def test_unknown_digit(self):
        with self.assertRaises(ValueError):
            mnist_stream(self.config, [(4, 10.0)])


if __name__ == "__main__":
    unittest.main()
