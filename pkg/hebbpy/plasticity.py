##
# @brief Weight update rules: pure Hebbian with l-norm normalization,
# symmetric STDP with a constant or offset dependent learning rate and the
# weight decay model.
#
# All updates are exact.  Every promotion or demotion touches one channel
# and, for the normalized rules, is followed by a renormalization of the
# whole weight vector.
##
from __future__ import print_function, division
from collections import namedtuple
import numpy as np
from hebbpy.neuron import ChannelIndexError
from hebbpy.util import var_box

PROMOTION = "promotion"
DEMOTION = "demotion"

HEBBIAN = "hebbian"
STDP = "stdp"
DECAY = "decay"


class NormalizationError(ValueError):
    pass


class WindowError(ValueError):
    pass


UpdateEvent = namedtuple('UpdateEvent', ['channel', 'direction', 'offset', 'applied_epsilon'])


class WeightVector(object):
    """!
    @brief Non-negative channel weights with an l-norm normalization contract.
    Instances are read only; updates return new vectors.
    """
    def __init__(self, w, norm_exponent=1.0):
        w = np.array(w, dtype=float).flatten()
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("ERROR: weights must be finite and >= 0, got %s" % str(w))
        assert norm_exponent >= 1.0
        w.flags.writeable = False
        self._w = w
        self._l = float(norm_exponent)

    @classmethod
    def uniform(cls, n_channels, norm_exponent=1.0):
        return normalize(cls(np.ones(n_channels), norm_exponent))

    def with_values(self, w):
        return WeightVector(w, self._l)

    def norm(self):
        return np.sum(self._w ** self._l) ** (1.0 / self._l)

    def normalized_by_sum(self):
        """! @brief w_i / sum_j w_j """
        return self._w / np.sum(self._w)

    def __len__(self):
        return self._w.size

    def __getitem__(self, idx):
        return self._w[idx]

    def __repr__(self):
        return "WeightVector(%s, l=%g)" % (np.array2string(self._w, precision=4), self._l)

    @property
    def w(self):
        return self._w

    @property
    def norm_exponent(self):
        return self._l


class EpsilonKernel(object):
    """!
    @brief Learning rate as a function of the signed offset between an input
    spike and the output spike.  Zero outside the support [-window, window].
    """
    def __init__(self, amplitude, window):
        assert amplitude >= 0.0
        assert window >= 0.0
        self._amplitude = float(amplitude)
        self._window = float(window)

    def value(self, offset, rng=None):
        if abs(offset) > self._window:
            return 0.0
        return self._shape(offset, rng)

    def _shape(self, offset, rng):
        raise NotImplementedError

    def with_amplitude(self, amplitude):
        raise NotImplementedError

    @property
    def is_constant(self):
        return False

    @property
    def amplitude(self):
        return self._amplitude

    @property
    def window(self):
        return self._window


class ConstantKernel(EpsilonKernel):
    def __init__(self, amplitude, window, random=False):
        """!
        @brief Constant learning rate inside the window.
        @param random  bool.  draw the rate per update from U(0, amplitude)
            using the run's random state instead of using amplitude itself
        """
        self.random = bool(random)
        super(ConstantKernel, self).__init__(amplitude, window)

    def _shape(self, offset, rng):
        if self.random:
            assert rng is not None, "random learning rate needs a RandomState"
            return float(var_box(rng, self._amplitude))
        return self._amplitude

    def with_amplitude(self, amplitude):
        return ConstantKernel(amplitude, self._window, self.random)

    @property
    def is_constant(self):
        return not self.random

    def __repr__(self):
        if self.random:
            return "ConstantKernel(uniform(%g), window=%g)" % (self._amplitude, self._window)
        return "ConstantKernel(%g, window=%g)" % (self._amplitude, self._window)


class TruncatedExponentialKernel(EpsilonKernel):
    def __init__(self, amplitude, window, time_constant):
        r"""!
        @brief \f[ \varepsilon(\tau') = a e^{-|\tau'|/t_c},\quad |\tau'| \le \tau \f]
        """
        assert time_constant > 0.0
        self.time_constant = float(time_constant)
        super(TruncatedExponentialKernel, self).__init__(amplitude, window)

    def _shape(self, offset, rng):
        return self._amplitude * np.exp(-abs(offset) / self.time_constant)

    def with_amplitude(self, amplitude):
        return TruncatedExponentialKernel(amplitude, self._window, self.time_constant)

    def __repr__(self):
        return "TruncatedExponentialKernel(%g, window=%g, tc=%g)" % \
            (self._amplitude, self._window, self.time_constant)


def epsilon_at(kernel, offset, rng=None):
    """!
    @brief Learning rate applied to a spike at signed offset from the output
    spike (negative offsets precede the output).
    """
    return kernel.value(offset, rng)


class PlasticityRule(object):
    """!
    @brief Configuration of a learning rule.
    @param kind  one of HEBBIAN, STDP, DECAY
    @param epsilon  float or EpsilonKernel.  A float builds a ConstantKernel
        over the window.
    @param window  float tau, length of the pre and post windows
    @param norm_exponent  float l >= 1 (unused by DECAY)
    @param delta  float decay fraction in (0, 1) (DECAY only)
    """
    def __init__(self, kind, epsilon, window, norm_exponent=1.0, delta=None):
        if kind not in (HEBBIAN, STDP, DECAY):
            raise ValueError("ERROR: unknown rule kind %r" % (kind,))
        assert window >= 0.0
        assert norm_exponent >= 1.0
        if kind == DECAY:
            if delta is None or not 0.0 < delta < 1.0:
                raise ValueError("ERROR: decay rule needs delta in (0, 1), got %r" % (delta,))
        self.kind = kind
        if isinstance(epsilon, EpsilonKernel):
            self.kernel = epsilon
        else:
            assert epsilon >= 0.0
            self.kernel = ConstantKernel(epsilon, window)
        self.window = float(window)
        self.norm_exponent = float(norm_exponent)
        self.delta = delta

    def with_kernel(self, kernel):
        return PlasticityRule(self.kind, kernel, self.window, self.norm_exponent, self.delta)

    def __repr__(self):
        return "PlasticityRule(%s, %r, window=%g, l=%g, delta=%r)" % \
            (self.kind, self.kernel, self.window, self.norm_exponent, self.delta)


def _normalized(w, l):
    if l == 1.0:
        s = np.sum(w)
    else:
        s = np.sum(w ** l) ** (1.0 / l)
    if not s > 0.0 or not np.isfinite(s):
        raise NormalizationError("ERROR: cannot normalize weight vector %s" % str(w))
    return w / s


def normalize(weights):
    r"""!
    @brief Rescale weights to unit l-norm
    \f[ w_i \rightarrow w_i / (\sum_j w_j^l)^{1/l} \f]
    """
    return weights.with_values(_normalized(weights.w, weights.norm_exponent))


def _step(w, channel, eps, direction):
    w_new = w.copy()
    if direction == PROMOTION:
        w_new[channel] += eps
    else:
        w_new[channel] = max(w_new[channel] - eps, 0.0)
    return w_new


def norm_factor(weights, channel, epsilon, direction=PROMOTION):
    """!
    @brief Exact normalization denominator after a single promotion
    (or demotion) of one channel by epsilon.
    """
    w_new = _step(weights.w, channel, epsilon, direction)
    return np.sum(w_new ** weights.norm_exponent) ** (1.0 / weights.norm_exponent)


def first_order_norm_factor(weights, channel, epsilon, direction=PROMOTION):
    r"""!
    @brief First order expansion of norm_factor for normalized weights,
    \f[ 1 \pm w_i^{l-1} \varepsilon \f]
    """
    sign = 1.0 if direction == PROMOTION else -1.0
    return 1.0 + sign * weights.w[channel] ** (weights.norm_exponent - 1.0) * epsilon


def _check_channel(weights, channel):
    if not 0 <= channel < len(weights):
        raise ChannelIndexError("ERROR: channel %d out of range [0, %d)" % (channel, len(weights)))


def _apply_updates(weights, rule, pending, t_out, rng, recorder):
    """!
    @brief Apply promotions/demotions one at a time in chronological order.
    @param pending  list of (time, channel, direction), sorted by time
    """
    l = weights.norm_exponent
    w = weights.w
    events = []
    for t, ch, direction in pending:
        _check_channel(weights, ch)
        offset = t - t_out
        eps = epsilon_at(rule.kernel, offset, rng)
        ev = UpdateEvent(ch, direction, offset, eps)
        if recorder is not None:
            recorder(ev, w)
        w = _normalized(_step(w, ch, eps, direction), l)
        events.append(ev)
    if not events:
        return weights, events
    return weights.with_values(w), events


def _pre_window(spikes, output, window):
    pending = []
    for sp in spikes:
        if not output.time - window <= sp.time <= output.time:
            raise WindowError("ERROR: spike at t=%r outside pre window [%r, %r]" %
                              (sp.time, output.time - window, output.time))
        pending.append((sp.time, sp.channel, PROMOTION))
    return pending


def hebbian_update(weights, rule, pre_window_spikes, output, rng=None, recorder=None):
    """!
    @brief Promote every channel that spiked within the window before the
    output spike, once per spike, renormalizing after each promotion.
    @param weights  WeightVector
    @param rule  PlasticityRule
    @param pre_window_spikes  list of SpikeEvent with t_out - tau <= t <= t_out
    @param output  OutputSpike
    @param rng  np.random.RandomState (randomized learning rate only)
    @param recorder  callable(UpdateEvent, w_before) called before each update
    @return (WeightVector, list of UpdateEvent)
    """
    pending = _pre_window(pre_window_spikes, output, rule.window)
    pending.sort(key=lambda p: p[0])
    return _apply_updates(weights, rule, pending, output.time, rng, recorder)


def stdp_update(weights, rule, pre_window_spikes, post_window_spikes, output, rng=None,
                recorder=None):
    """!
    @brief Symmetric STDP.  Spikes in [t_out - tau, t_out] promote, spikes in
    (t_out, t_out + tau] demote.  Demoted weights are floored at zero.
    @return (WeightVector, list of UpdateEvent)
    """
    pending = _pre_window(pre_window_spikes, output, rule.window)
    for sp in post_window_spikes:
        if not output.time < sp.time <= output.time + rule.window:
            raise WindowError("ERROR: spike at t=%r outside post window (%r, %r]" %
                              (sp.time, output.time, output.time + rule.window))
        pending.append((sp.time, sp.channel, DEMOTION))
    pending.sort(key=lambda p: p[0])
    return _apply_updates(weights, rule, pending, output.time, rng, recorder)


def window_events(rule, pre_window_spikes, post_window_spikes, output, rng=None):
    """!
    @brief Update events the rule would produce for one output spike,
    without touching any weights.
    """
    pending = _pre_window(pre_window_spikes, output, rule.window)
    pending += [(sp.time, sp.channel, DEMOTION) for sp in post_window_spikes]
    pending.sort(key=lambda p: p[0])
    return [UpdateEvent(ch, direction, t - output.time, epsilon_at(rule.kernel, t - output.time, rng))
            for t, ch, direction in pending]


def decay_model_update(weights, rule, promoted_channel, epsilon=None, rng=None):
    r"""!
    @brief All weights lose the fraction delta, then the promoted channel
    gains epsilon.  No normalization.
    \f[ w_j \leftarrow (1 - \delta) w_j, \quad w_i \leftarrow w_i + \varepsilon \f]
    @param epsilon  float rate to apply.  Defaults to the kernel value at zero offset.
    """
    assert rule.kind == DECAY
    _check_channel(weights, promoted_channel)
    if epsilon is None:
        epsilon = epsilon_at(rule.kernel, 0.0, rng)
    w = weights.w * (1.0 - rule.delta)
    w[promoted_channel] += epsilon
    return weights.with_values(w)
