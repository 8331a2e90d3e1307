##
# @brief Online estimation of promotion/demotion probabilities and the
# steady state relations between those probabilities and the weights.
#
# The central quantity is the indicator
# \f[ \Delta = \sum_i | L_i - w_i / \sum_j w_j | \f]
# which fluctuates near zero once the weights are adapted to the input
# statistics and spikes when the statistics change.
##
from __future__ import print_function, division
from collections import deque, namedtuple
import h5py
import numpy as np
from hebbpy.plasticity import PROMOTION, DEMOTION, HEBBIAN, STDP, DECAY, ConstantKernel

CUMULATIVE = "cumulative"
SLIDING = "sliding"
EXPONENTIAL = "exponential"

_DIRS = (PROMOTION, DEMOTION)


class EmptyEstimatorError(RuntimeError):
    pass


class DegenerateConstraintError(RuntimeError):
    pass


class EstimatorState(object):
    """!
    @brief Per direction (promotion, demotion) accumulators of update events.

    For each direction the state keeps per-channel event counts and sums of
    the applied epsilon and epsilon^2, plus event weighted sums of
    w^{l-1}, w^{l-1} eps and w^{l-1} eps^2 taken from the pre-update weight
    of the affected channel.
    """
    def __init__(self, n_channels, norm_exponent=1.0, window_mode=CUMULATIVE,
                 window_length=5000, decay_factor=0.999):
        """!
        @param n_channels  int
        @param norm_exponent  float l of the learning rule
        @param window_mode  str. cumulative, sliding or exponential
        @param window_length  int. number of most recent events kept (sliding)
        @param decay_factor  float in (0, 1). per event forgetting (exponential)
        """
        if window_mode not in (CUMULATIVE, SLIDING, EXPONENTIAL):
            raise ValueError("ERROR: unknown estimator window mode %r" % (window_mode,))
        assert n_channels >= 1
        self.n_channels = int(n_channels)
        self.norm_exponent = float(norm_exponent)
        self.window_mode = window_mode
        self.window_length = int(window_length)
        self.decay_factor = float(decay_factor)
        if window_mode == SLIDING:
            assert self.window_length >= 1
        if window_mode == EXPONENTIAL:
            assert 0.0 < self.decay_factor < 1.0
        self._window = deque()
        self._n_evicted = 0
        self._scale = 1.0
        self.n_recorded = 0
        self._reset_sums()

    def _reset_sums(self):
        n = self.n_channels
        self._counts = [[0] * n, [0] * n]
        self._totals = [0, 0]
        self._eps = [[0.0] * n, [0.0] * n]
        self._eps2 = [[0.0] * n, [0.0] * n]
        self._wl = [0.0, 0.0]
        self._wle = [0.0, 0.0]
        self._wle2 = [0.0, 0.0]

    def _add(self, d, ch, eps, wl, c):
        self._counts[d][ch] += c
        self._totals[d] += c
        ce = c * eps
        self._eps[d][ch] += ce
        self._eps2[d][ch] += ce * eps
        self._wl[d] += c * wl
        self._wle[d] += ce * wl
        self._wle2[d] += ce * eps * wl

    def record(self, event, weights_before):
        """!
        @brief Accumulate one update event.
        @param event  UpdateEvent
        @param weights_before  WeightVector or array, weights before the update
        @return self
        """
        d = 0 if event.direction == PROMOTION else 1
        w_before = getattr(weights_before, 'w', weights_before)
        wl = float(w_before[event.channel]) ** (self.norm_exponent - 1.0)
        eps = float(event.applied_epsilon)
        ch = int(event.channel)
        self.n_recorded += 1
        if self.window_mode == CUMULATIVE:
            self._add(d, ch, eps, wl, 1)
        elif self.window_mode == SLIDING:
            self._window.append((d, ch, eps, wl))
            self._add(d, ch, eps, wl, 1)
            if len(self._window) > self.window_length:
                self._add(*(self._window.popleft() + (-1,)))
                self._n_evicted += 1
                if self._n_evicted >= self.window_length:
                    self._rebuild()
        else:
            # sums are stored scaled by decay_factor^-n
            self._scale /= self.decay_factor
            self._add(d, ch, eps, wl, self._scale)
            if self._scale > 1e100:
                self._rescale(1.0 / self._scale)
                self._scale = 1.0
        return self

    def _rebuild(self):
        # drop round off accumulated by subtracting evicted events
        self._reset_sums()
        for item in self._window:
            self._add(*(item + (1,)))
        self._n_evicted = 0

    def _rescale(self, f):
        for d in (0, 1):
            self._counts[d] = [c * f for c in self._counts[d]]
            self._eps[d] = [c * f for c in self._eps[d]]
            self._eps2[d] = [c * f for c in self._eps2[d]]
            self._totals[d] *= f
            self._wl[d] *= f
            self._wle[d] *= f
            self._wle2[d] *= f

    def check_counts(self):
        """!
        @brief Integer identities behind sum(p) = 1, sum(q) = 1, k_p + k_d = 1.
        Only meaningful for cumulative and sliding windows.
        """
        if self.window_mode == EXPONENTIAL:
            return True
        return all(sum(self._counts[d]) == self._totals[d] and self._totals[d] >= 0
                   for d in (0, 1))

    def _ratio(self, num, den):
        return num / den if den > 0 else 0.0

    def _dir(self, direction):
        return _DIRS.index(direction)

    def total(self, direction):
        """! @brief Number of (possibly decayed) events in the window. """
        d = self._dir(direction)
        return self._totals[d] / self._scale

    def probabilities(self, direction):
        d = self._dir(direction)
        tot = self._totals[d]
        if tot <= 0:
            return np.zeros(self.n_channels)
        return np.asarray(self._counts[d], dtype=float) / tot

    def mean_wl(self, direction):
        r"""! @brief event weighted \f$ \langle w^{l-1} \rangle \f$ """
        d = self._dir(direction)
        return self._ratio(self._wl[d], self._totals[d])

    def mean_wl_eps(self, direction):
        d = self._dir(direction)
        return self._ratio(self._wle[d], self._totals[d])

    def mean_wl_eps2(self, direction):
        d = self._dir(direction)
        return self._ratio(self._wle2[d], self._totals[d])

    def mean_epsilon(self, direction):
        d = self._dir(direction)
        return self._ratio(sum(self._eps[d]), self._totals[d])

    def channel_epsilon_moments(self, direction):
        """!
        @brief Per-channel mean of eps and eps^2 over events of one direction.
        Channels without events get 0.
        @return (np_1darray, np_1darray)
        """
        d = self._dir(direction)
        counts = np.asarray(self._counts[d], dtype=float)
        safe = np.where(counts > 0, counts, 1.0)
        m1 = np.where(counts > 0, np.asarray(self._eps[d]) / safe, 0.0)
        m2 = np.where(counts > 0, np.asarray(self._eps2[d]) / safe, 0.0)
        return m1, m2

    @property
    def p_hat(self):
        return self.probabilities(PROMOTION)

    @property
    def q_hat(self):
        return self.probabilities(DEMOTION)

    @property
    def k_p(self):
        return self._ratio(self._totals[0], self._totals[0] + self._totals[1])

    @property
    def k_d(self):
        return self._ratio(self._totals[1], self._totals[0] + self._totals[1])

    @property
    def n_promotions(self):
        return self.total(PROMOTION)

    @property
    def n_demotions(self):
        return self.total(DEMOTION)

    def write_h5(self, h5_file, group):
        """!
        @brief Write accumulators to h5 file
        @param h5_file  h5py.File instance
        """
        if group in h5_file:
            del h5_file[group]
        g = h5_file.create_group(group)
        g.create_dataset("counts", data=np.asarray(self._counts, dtype=float), compression="gzip")
        g.create_dataset("eps", data=np.asarray(self._eps), compression="gzip")
        g.create_dataset("eps2", data=np.asarray(self._eps2), compression="gzip")
        g.create_dataset("moments", data=np.array([self._wl, self._wle, self._wle2]))
        g.create_dataset("totals", data=np.asarray(self._totals, dtype=float))
        window = np.array(list(self._window), dtype=float).reshape(-1, 4)
        g.create_dataset("window", data=window, compression="gzip")
        g.attrs["n_channels"] = self.n_channels
        g.attrs["norm_exponent"] = self.norm_exponent
        g.attrs["window_mode"] = self.window_mode
        g.attrs["window_length"] = self.window_length
        g.attrs["decay_factor"] = self.decay_factor
        g.attrs["scale"] = self._scale
        g.attrs["n_recorded"] = self.n_recorded

    @classmethod
    def read_h5(cls, h5_file, group):
        if isinstance(h5_file, str):
            with h5py.File(h5_file, 'r') as h5f:
                return cls.read_h5(h5f, group)
        g = h5_file[group]
        mode = g.attrs["window_mode"]
        if isinstance(mode, bytes):
            mode = mode.decode()
        state = cls(int(g.attrs["n_channels"]), float(g.attrs["norm_exponent"]), str(mode),
                    int(g.attrs["window_length"]), float(g.attrs["decay_factor"]))
        as_int = state.window_mode != EXPONENTIAL
        counts = g["counts"][:]
        totals = g["totals"][:]
        if as_int:
            state._counts = [[int(c) for c in row] for row in counts]
            state._totals = [int(t) for t in totals]
        else:
            state._counts = counts.tolist()
            state._totals = totals.tolist()
        state._eps = g["eps"][:].tolist()
        state._eps2 = g["eps2"][:].tolist()
        state._wl, state._wle, state._wle2 = [row.tolist() for row in g["moments"][:]]
        state._window = deque((int(d), int(ch), eps, wl) for d, ch, eps, wl in g["window"][:].tolist())
        state._scale = float(g.attrs["scale"])
        state.n_recorded = int(g.attrs["n_recorded"])
        return state


def record(state, event, weights_before):
    """!
    @brief Accumulate one update event into the estimator state.
    """
    return state.record(event, weights_before)


class ConstraintReport(namedtuple('ConstraintReport',
                                  ['kind', 'L', 'normalized_weights', 'delta',
                                   'weight_sum_predicted', 'weight_sum_actual',
                                   'p_estimated', 'p_predicted', 'L_zero_order', 'p_residual'])):
    """!
    @brief Snapshot of a steady state check.
    L  constraint left hand side per channel
    normalized_weights  right hand side per channel
    delta  sum_i |L_i - normalized_weights_i|
    p_predicted  promotion probability implied by the current weights
    p_residual  sum_i |p_estimated_i - p_predicted_i|
    """
    __slots__ = ()


def _report(kind, L, normalized, sum_pred, sum_actual, p_est, p_pred, L_zero):
    def ro(a):
        a = np.array(a, dtype=float)
        a.flags.writeable = False
        return a
    L, normalized, p_est, p_pred, L_zero = ro(L), ro(normalized), ro(p_est), ro(p_pred), ro(L_zero)
    delta = float(np.sum(np.abs(L - normalized)))
    p_residual = float(np.sum(np.abs(p_est - p_pred)))
    return ConstraintReport(kind, L, normalized, delta, float(sum_pred), float(sum_actual),
                            p_est, p_pred, L_zero, p_residual)


def _weights(weights):
    return np.asarray(getattr(weights, 'w', weights), dtype=float)


def _safe_div(num, den):
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.true_divide(num, den)


def hebbian_constraint(state, weights, epsilon, l=None):
    r"""!
    @brief Pure Hebbian steady state relation.
    First order promotion probability
    \f[ p_i = \frac{\langle w^{l-1} \rangle_p}{1 - w_i^{l-1}\varepsilon} w_i \f]
    and its normalized form
    \f[ \frac{p_i (1 - w_i^{l-1}\varepsilon)}{1 - \langle w^{l-1}\rangle_p \varepsilon}
        = \frac{w_i}{\sum_j w_j}, \quad
        \sum_j w_j = \frac{1 - \langle w^{l-1}\rangle_p \varepsilon}{\langle w^{l-1}\rangle_p} \f]
    @param state  EstimatorState of a run without demotions
    @param weights  WeightVector
    @param epsilon  float learning rate
    @param l  float norm exponent (defaults to the estimator's)
    """
    if state.n_promotions <= 0:
        raise EmptyEstimatorError("ERROR: no promotion events recorded")
    if l is None:
        l = state.norm_exponent
    w = _weights(weights)
    p = state.p_hat
    wl = w ** (l - 1.0)
    wl_p = state.mean_wl(PROMOTION)
    L = p * (1.0 - wl * epsilon) / (1.0 - wl_p * epsilon)
    p_pred = wl_p * w / (1.0 - wl * epsilon)
    sum_pred = _safe_div(1.0 - wl_p * epsilon, wl_p)
    return _report(HEBBIAN, L, w / np.sum(w), sum_pred, np.sum(w), p, p_pred, p)


def stdp_constraint(state, weights, epsilon, l=None):
    r"""!
    @brief Symmetric STDP steady state relation
    \f[ L_i = \frac{k^p p_i (1 - w_i^{l-1}\varepsilon) - k^d q_i (1 + w_i^{l-1}\varepsilon)}
                   {k^p (1 - \langle w^{l-1}\rangle_p\varepsilon)
                    - k^d (1 + \langle w^{l-1}\rangle_d\varepsilon)}
            = \frac{w_i}{\sum_j w_j} \f]
    The zero order form is \f$ (k^p p_i - k^d q_i) / (k^p - k^d) \f$.
    """
    if state.n_promotions + state.n_demotions <= 0:
        raise EmptyEstimatorError("ERROR: no update events recorded")
    if l is None:
        l = state.norm_exponent
    w = _weights(weights)
    kp, kd = state.k_p, state.k_d
    p, q = state.p_hat, state.q_hat
    wl = w ** (l - 1.0)
    wl_p, wl_d = state.mean_wl(PROMOTION), state.mean_wl(DEMOTION)
    den = kp * (1.0 - wl_p * epsilon) - kd * (1.0 + wl_d * epsilon)
    if abs(den) < 1e-12:
        raise DegenerateConstraintError(
            "ERROR: STDP constraint denominator vanishes (k_p=%g, k_d=%g)" % (kp, kd))
    L = (kp * p * (1.0 - wl * epsilon) - kd * q * (1.0 + wl * epsilon)) / den
    if abs(kp - kd) > 1e-12:
        L_zero = (kp * p - kd * q) / (kp - kd)
    else:
        L_zero = np.full(w.size, np.nan)
    slope = kp * wl_p - kd * wl_d
    p_pred = _safe_div(kd * q * (1.0 + wl * epsilon) + w * slope, kp * (1.0 - wl * epsilon))
    return _report(STDP, L, w / np.sum(w), _safe_div(den, slope), np.sum(w), p, p_pred, L_zero)


def kernel_stdp_constraint(state, weights, l=None):
    r"""!
    @brief STDP relation for an offset dependent learning rate eps(tau').
    Uses per-channel averaged rates
    \f[ M^p_i = \langle\varepsilon\rangle_{p,i} - \langle\varepsilon^2\rangle_{p,i} w_i^{l-1},\quad
        M^d_i = \langle\varepsilon\rangle_{d,i} + \langle\varepsilon^2\rangle_{d,i} w_i^{l-1} \f]
    \f[ p_i = q_i \frac{k^d}{k^p}\frac{M^d_i}{M^p_i}
            + w_i \frac{k^p\langle w^{l-1}\varepsilon\rangle_p - k^d\langle w^{l-1}\varepsilon\rangle_d}
                       {k^p M^p_i} \f]
    For a constant rate both L_i and p_i coincide with stdp_constraint.
    """
    if state.n_promotions + state.n_demotions <= 0:
        raise EmptyEstimatorError("ERROR: no update events recorded")
    eps_p, eps_d = state.mean_epsilon(PROMOTION), state.mean_epsilon(DEMOTION)
    if eps_p <= 0.0 and eps_d <= 0.0:
        raise EmptyEstimatorError("ERROR: learning rate accumulators are empty")
    if l is None:
        l = state.norm_exponent
    w = _weights(weights)
    kp, kd = state.k_p, state.k_d
    p, q = state.p_hat, state.q_hat
    wl = w ** (l - 1.0)
    m1p, m2p = state.channel_epsilon_moments(PROMOTION)
    m1d, m2d = state.channel_epsilon_moments(DEMOTION)
    Mp = m1p - m2p * wl
    Md = m1d + m2d * wl
    if np.any((p > 0.0) & (Mp <= 0.0)):
        raise DegenerateConstraintError("ERROR: vanishing per-channel promotion rate")
    D = kp * (eps_p - state.mean_wl_eps2(PROMOTION)) - kd * (eps_d + state.mean_wl_eps2(DEMOTION))
    if abs(D) <= 1e-12 * (kp * eps_p + kd * eps_d):
        raise DegenerateConstraintError(
            "ERROR: kernel STDP constraint denominator vanishes (k_p=%g, k_d=%g)" % (kp, kd))
    L = (kp * p * Mp - kd * q * Md) / D
    slope = kp * state.mean_wl_eps(PROMOTION) - kd * state.mean_wl_eps(DEMOTION)
    safe_Mp = np.where(Mp > 0.0, Mp, np.nan)
    p_pred = _safe_div(q * kd * Md + w * slope, kp * safe_Mp)
    # channels never promoted carry no rate information
    p_pred = np.where(np.isnan(p_pred), 0.0, p_pred)
    if abs(kp - kd) > 1e-12:
        L_zero = (kp * p - kd * q) / (kp - kd)
    else:
        L_zero = np.full(w.size, np.nan)
    return _report(STDP, L, w / np.sum(w), _safe_div(D, slope), np.sum(w), p, p_pred, L_zero)


def decay_constraint(state, weights, epsilon, delta):
    r"""!
    @brief Exact steady state of the decay model
    \f[ w_i = \frac{\varepsilon}{\delta} p_i \f]
    The normalized weights are taken against the predicted sum eps/delta.
    """
    if state.n_promotions <= 0:
        raise EmptyEstimatorError("ERROR: no promotion events recorded")
    assert epsilon > 0.0 and delta > 0.0
    w = _weights(weights)
    p = state.p_hat
    sum_pred = epsilon / delta
    return _report(DECAY, p, w / sum_pred, sum_pred, np.sum(w), p, w / sum_pred, p)


def evaluate_constraint(rule, state, weights, epsilon=None):
    """!
    @brief Pick the constraint matching a learning rule.
    STDP with a non constant kernel uses the kernel weighted form.
    @param epsilon  float learning rate to use in the first order terms.
        Defaults to the kernel amplitude, or to the mean applied rate for a
        randomized kernel.
    """
    kernel = rule.kernel
    if rule.kind == STDP and not isinstance(kernel, ConstantKernel):
        return kernel_stdp_constraint(state, weights, rule.norm_exponent)
    if epsilon is None:
        epsilon = kernel.amplitude if kernel.is_constant else state.mean_epsilon(PROMOTION)
    if rule.kind == HEBBIAN:
        return hebbian_constraint(state, weights, epsilon, rule.norm_exponent)
    if rule.kind == STDP:
        return stdp_constraint(state, weights, epsilon, rule.norm_exponent)
    return decay_constraint(state, weights, epsilon, rule.delta)


def adaptive_epsilon(delta, cap=0.001):
    r"""!
    @brief Learning rate that vanishes close to steady state
    \f[ \varepsilon = \min(\mathrm{cap}, e^{-1/(4\Delta)}) \f]
    """
    if delta < 0.0:
        raise ValueError("ERROR: negative delta %r" % (delta,))
    if delta == 0.0:
        return 0.0
    with np.errstate(over='ignore', divide='ignore', under='ignore'):
        eps = np.exp(-1.0 / (4.0 * np.float64(delta)))
    return float(min(cap, eps))


class DeltaMonitor(object):
    """!
    @brief Samples the indicator Delta on a regular time grid from an
    estimator, usually a sliding one.
    """
    def __init__(self, rule, estimator, cadence, t_start=0.0, keep_reports=False, verbose=0):
        assert cadence > 0.0
        self.rule = rule
        self.estimator = estimator
        self.cadence = float(cadence)
        self.verbose = verbose
        self._next = t_start + self.cadence
        self.times, self.deltas, self.epsilons = [], [], []
        self.keep_reports = keep_reports
        self.reports = []
        self._n_degenerate = 0

    def due(self, t):
        return t >= self._next

    def sample(self, t, weights, epsilon=None):
        """!
        @brief Evaluate Delta at the last grid point not after t.
        @return float Delta or None when the estimator cannot provide one yet
        """
        t_grid = self._next
        while self._next <= t:
            t_grid = self._next
            self._next += self.cadence
        try:
            report = evaluate_constraint(self.rule, self.estimator, weights, epsilon)
        except EmptyEstimatorError:
            return None
        except DegenerateConstraintError:
            self._n_degenerate += 1
            if self.verbose and self._n_degenerate == 1:
                print("WARNING: degenerate constraint at t=%g, Delta not sampled" % t_grid)
            return None
        eps = self.rule.kernel.amplitude if epsilon is None else epsilon
        self.times.append(t_grid)
        self.deltas.append(report.delta)
        if self.keep_reports:
            self.reports.append(report)
        self.epsilons.append(eps)
        return report.delta


def alert_times(times, deltas, factor=3.0, history=50, burn_in=0.0):
    """!
    @brief Times where Delta exceeds factor times the median of the preceding
    history samples.
    @return list of (time, delta, trailing_median)
    """
    times = np.asarray(times, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    alerts = []
    for k in range(history, deltas.size):
        if times[k] < burn_in:
            continue
        med = np.median(deltas[k - history:k])
        if deltas[k] > factor * med:
            alerts.append((times[k], deltas[k], med))
    return alerts
