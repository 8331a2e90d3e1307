##
# @brief Input spike streams: independent Poisson channels, biased channel
# assignment at a fixed combined rate, Gaussian distributed rates with
# scheduled redraws and the MNIST row encoder.
##
from __future__ import print_function, division
import numpy as np
from hebbpy.neuron import SpikeTrain
from hebbpy.util import task_rng, exp_waits
from hebbpy.utils.idx_reader import load_mnist

RATE_FLOOR = 0.01
MNIST_ROW = 14
MNIST_RATE = 0.9 * 28

# spikes drawn per batch when extending a Poisson process
_CHUNK = 100000


def _as_rng(seed):
    if isinstance(seed, np.random.RandomState):
        return seed
    return task_rng(seed)


class RateSpec(object):
    """!
    @brief Input rates, either one rate per channel or a combined rate
    split over the channels by a bias vector.
    """
    def __init__(self, rates=None, combined_rate=None, bias=None):
        if rates is not None:
            rates = np.array(rates, dtype=float).flatten()
            if rates.size == 0 or np.any(rates <= 0.0) or not np.all(np.isfinite(rates)):
                raise ValueError("ERROR: rates must be positive, got %s" % str(rates))
            self.rates = rates
            self.combined_rate = None
            self.bias = None
        else:
            if combined_rate is None or not combined_rate > 0.0:
                raise ValueError("ERROR: combined rate must be positive, got %r" % (combined_rate,))
            bias = np.array(bias, dtype=float).flatten()
            if np.any(bias < 0.0) or abs(np.sum(bias) - 1.0) > 1e-12:
                raise ValueError("ERROR: bias must be >= 0 and sum to 1, got %s" % str(bias))
            self.rates = None
            self.combined_rate = float(combined_rate)
            self.bias = bias

    @classmethod
    def biased(cls, combined_rate, bias):
        return cls(combined_rate=combined_rate, bias=bias)

    @property
    def n_channels(self):
        return self.rates.size if self.rates is not None else self.bias.size

    @property
    def is_biased(self):
        return self.bias is not None

    @property
    def total_rate(self):
        return float(np.sum(self.rates)) if self.rates is not None else self.combined_rate

    @property
    def shares(self):
        """! @brief fraction of the combined stream per channel """
        if self.bias is not None:
            return self.bias
        return self.rates / np.sum(self.rates)

    @property
    def per_channel(self):
        if self.rates is not None:
            return self.rates
        return self.combined_rate * self.bias

    def __repr__(self):
        if self.rates is not None:
            return "RateSpec(rates=%s)" % np.array2string(self.rates, precision=4)
        return "RateSpec(combined_rate=%g, bias=%s)" % (self.combined_rate, str(self.bias))


def poisson_times(rng, rate, t_start, t_end):
    """!
    @brief Event times of a homogeneous Poisson process on (t_start, t_end).
    """
    if not rate > 0.0:
        raise ValueError("ERROR: nonpositive rate %r" % (rate,))
    span = t_end - t_start
    if span <= 0.0:
        return np.zeros(0)
    n_guess = int(rate * span + 5.0 * np.sqrt(rate * span) + 10)
    pieces, t = [], t_start
    while True:
        times = t + np.cumsum(exp_waits(rng, rate, min(n_guess, _CHUNK)))
        if times[-1] >= t_end:
            pieces.append(times[times < t_end])
            break
        pieces.append(times)
        t = times[-1]
    return np.concatenate(pieces)


def categorical(rng, cdf, size):
    """!
    @brief Inverse CDF draw of category indices.
    @param cdf  np_1darray cumulative (unnormalized) weights
    """
    u = rng.random_sample(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side='right')
    return np.minimum(idx, cdf.size - 1)


def poisson_stream(rates, t_end, seed=0, t_start=0.0):
    """!
    @brief Time sorted Poisson input.
    Per channel rates give independent processes.  The biased form draws
    one merged process at the combined rate and assigns every spike to a
    channel with probability bias_i.
    @param rates  RateSpec
    @param t_end  float end of the stream
    @param seed  int or np.random.RandomState
    @return SpikeTrain
    """
    rng = _as_rng(seed)
    n = rates.n_channels
    if t_end <= t_start:
        return SpikeTrain([], [], n, t_end=max(t_end, t_start))
    if rates.is_biased:
        times = poisson_times(rng, rates.combined_rate, t_start, t_end)
        channels = categorical(rng, np.cumsum(rates.bias), times.size)
        return SpikeTrain.merge(times, channels, n, t_end)
    times, channels = [], []
    for i, r in enumerate(rates.rates):
        t_i = poisson_times(rng, r, t_start, t_end)
        times.append(t_i)
        channels.append(np.full(t_i.size, i, dtype=np.int64))
    return SpikeTrain.merge(np.concatenate(times), np.concatenate(channels), n, t_end)


def gaussian_rates(n_channels, mu, sigma, seed=0, floor=RATE_FLOOR):
    """!
    @brief Per channel rates drawn from N(mu, sigma), truncated below at floor.
    """
    assert n_channels >= 1
    rng = _as_rng(seed)
    return RateSpec(np.maximum(rng.normal(mu, sigma, size=n_channels), floor))


def redrawn_rate_schedule(n_channels, mu, sigma, switch_times, t_end, seed=0, floor=RATE_FLOOR):
    """!
    @brief Piecewise constant Gaussian rates, redrawn at every switch time.
    @return list of (t_start, t_stop, RateSpec)
    """
    rng = _as_rng(seed)
    edges = [0.0] + [float(s) for s in switch_times if 0.0 < s < t_end] + [float(t_end)]
    return [(t0, t1, gaussian_rates(n_channels, mu, sigma, rng, floor))
            for t0, t1 in zip(edges[:-1], edges[1:])]


def scheduled_poisson_stream(schedule, seed=0):
    """!
    @brief Concatenate Poisson streams of consecutive phases.
    @param schedule  list of (t_start, t_stop, RateSpec)
    """
    rng = _as_rng(seed)
    times, channels = [], []
    n = schedule[0][2].n_channels
    for t0, t1, spec in schedule:
        assert spec.n_channels == n
        train = poisson_stream(spec, t1, rng, t_start=t0)
        times.append(train.times)
        channels.append(train.channels)
    return SpikeTrain(np.concatenate(times), np.concatenate(channels), n, schedule[-1][1])


class MnistEncoderConfig(object):
    """!
    @brief Settings of the MNIST row encoder.
    @param images_path  str.  IDX image file
    @param labels_path  str.  IDX label file
    @param row_index  int in [0, 28).  image row turned into channel intensities
    @param digit_filter  iterable of labels to keep (None keeps all)
    @param combined_rate  float spikes per time unit over all channels
    """
    def __init__(self, images_path=None, labels_path=None, row_index=MNIST_ROW,
                 digit_filter=None, combined_rate=MNIST_RATE, seed=0):
        assert 0 <= row_index < 28
        assert combined_rate > 0.0
        self.images_path = images_path
        self.labels_path = labels_path
        self.row_index = int(row_index)
        self.digit_filter = None if digit_filter is None else set(int(d) for d in digit_filter)
        self.combined_rate = float(combined_rate)
        self.seed = seed


class MnistDigitSource(object):
    """!
    @brief Image rows grouped by digit label, with the cumulative
    intensities needed for inverse CDF channel draws.
    Rows without any intensity are dropped (drawing an image and redrawing
    on an all-zero row gives the same distribution).
    """
    def __init__(self, images, labels, row_index=MNIST_ROW, digit_filter=None, verbose=0):
        images = np.asarray(images)
        labels = np.asarray(labels)
        assert images.shape[0] == labels.shape[0]
        rows = images[:, row_index, :].astype(float)
        self.n_channels = rows.shape[1]
        self._cdf = {}
        for digit in np.unique(labels):
            digit = int(digit)
            if digit_filter is not None and digit not in digit_filter:
                continue
            d_rows = rows[labels == digit]
            keep = d_rows.sum(axis=1) > 0.0
            if verbose and not np.all(keep):
                print("WARNING: digit %d: %d of %d rows are blank and skipped" %
                      (digit, np.sum(~keep), keep.size))
            if np.any(keep):
                self._cdf[digit] = np.cumsum(d_rows[keep], axis=1)

    @classmethod
    def from_config(cls, config, verbose=0):
        images, labels = load_mnist(config.images_path, config.labels_path)
        return cls(images, labels, config.row_index, config.digit_filter, verbose)

    @property
    def digits(self):
        return sorted(self._cdf.keys())

    def n_rows(self, digit):
        return self._cdf[digit].shape[0]

    def mean_intensity(self, digit):
        """!
        @brief Dataset average of the normalized row intensity of one digit.
        """
        cdf = self._cdf[digit]
        return np.mean(np.diff(cdf, axis=1, prepend=0.0) / cdf[:, -1:], axis=0)

    def draw_channels(self, digit, rng, size):
        """!
        @brief For each spike draw a random image of the digit and encode it.
        """
        if digit not in self._cdf:
            raise ValueError("ERROR: digit %r not present in dataset" % (digit,))
        cdf = self._cdf[digit]
        out = np.empty(size, dtype=np.int64)
        for lo in range(0, size, _CHUNK):
            hi = min(lo + _CHUNK, size)
            rows = cdf[rng.randint(0, cdf.shape[0], size=hi - lo)]
            u = rng.random_sample(hi - lo) * rows[:, -1]
            # index of the first cumulative intensity above u
            out[lo:hi] = np.minimum(np.sum(rows <= u[:, None], axis=1), self.n_channels - 1)
        return out


def mnist_encode_spike(image, config, rng):
    """!
    @brief Draw one channel index with probability proportional to the
    intensity of the configured image row.
    @param image  28x28 intensity grid, or an already selected row
    @param config  MnistEncoderConfig
    @param rng  np.random.RandomState
    @return int channel index
    """
    image = np.asarray(image, dtype=float)
    row = image[config.row_index] if image.ndim == 2 else image
    if not np.sum(row) > 0.0:
        raise ValueError("ERROR: row %d has zero total intensity" % config.row_index)
    return int(categorical(rng, np.cumsum(row / np.sum(row)), 1)[0])


def mnist_stream(config, schedule, source=None, seed=None):
    """!
    @brief Poisson spike train at combined_rate whose channels are drawn from
    images of the digit currently scheduled.
    @param config  MnistEncoderConfig
    @param schedule  list of (digit label, duration), played back to back from t = 0
    @param source  MnistDigitSource (loaded from config when None)
    @param seed  int or RandomState (defaults to config.seed)
    @return SpikeTrain
    """
    if source is None:
        source = MnistDigitSource.from_config(config)
    rng = _as_rng(config.seed if seed is None else seed)
    for digit, duration in schedule:
        if int(digit) not in source.digits:
            raise ValueError("ERROR: unknown digit label %r" % (digit,))
        assert duration >= 0.0
    times, channels, t0 = [], [], 0.0
    for digit, duration in schedule:
        t_i = poisson_times(rng, config.combined_rate, t0, t0 + duration)
        times.append(t_i)
        channels.append(source.draw_channels(int(digit), rng, t_i.size))
        t0 += duration
    if not times:
        return SpikeTrain([], [], source.n_channels, 0.0)
    return SpikeTrain(np.concatenate(times), np.concatenate(channels), source.n_channels, t0)
