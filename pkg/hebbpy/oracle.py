##
# @brief Learning free ground truth for the promotion probabilities.
#
# Two independent methods:
#  - exhaustive enumeration of all 2^L channel sequences of a two channel
#    neuron, each played with sampled waiting times until the first
#    threshold crossing
#  - Monte Carlo simulation of a neuron with frozen weights
#
# fixed_point_scan() locates the weights where p_1(w_1) = w_1 and classifies
# them by the direction in which p_1 crosses the diagonal.
##
from __future__ import print_function, division
import numpy as np
from numba import jit
from hebbpy.util import task_rng, exp_waits, rank_tasks, gather_tasks, log_msg, is_root
from hebbpy.inputs import categorical
from hebbpy.trace import write_csv

STABLE = "stable"
UNSTABLE = "unstable"
ABSORBING = "absorbing"

RAISE = "raise"
DROP = "drop"


class EnumerationLengthError(RuntimeError):
    def __init__(self, msg, sequence=None):
        self.sequence = sequence
        super(EnumerationLengthError, self).__init__(msg)


class NoOutputError(RuntimeError):
    pass


class EnumerationConfig(object):
    """!
    @brief Two channel enumeration settings.
    @param weights  [w_1, w_2] with w_1 + w_2 = 1
    @param threshold  float theta
    @param decay  float membrane decay rate d
    @param max_sequence_length  int L
    @param rate  float rate of the exponential waiting times (the combined input rate)
    @param seed  int
    @param bias  float probability that a spike comes from channel 1
    @param unresolved  str.  "raise" on a sequence that never crosses theta, "drop" to skip it
    """
    def __init__(self, weights, threshold=0.94, decay=0.0, max_sequence_length=13, rate=1.8,
                 seed=0, bias=0.5, unresolved=RAISE):
        weights = np.asarray(weights, dtype=float).flatten()
        assert weights.size == 2
        assert np.all(weights >= 0.0) and abs(np.sum(weights) - 1.0) < 1e-9
        assert threshold > 0.0 and decay >= 0.0 and rate > 0.0
        assert 1 <= max_sequence_length <= 30
        assert 0.0 < bias < 1.0
        if unresolved not in (RAISE, DROP):
            raise ValueError("ERROR: unresolved policy must be raise or drop, got %r" % (unresolved,))
        self.weights = weights
        self.threshold = float(threshold)
        self.decay = float(decay)
        self.max_sequence_length = int(max_sequence_length)
        self.rate = float(rate)
        self.seed = int(seed)
        self.bias = float(bias)
        self.unresolved = unresolved

    def replace(self, **kwargs):
        args = dict(weights=self.weights, threshold=self.threshold, decay=self.decay,
                    max_sequence_length=self.max_sequence_length, rate=self.rate,
                    seed=self.seed, bias=self.bias, unresolved=self.unresolved)
        args.update(kwargs)
        return EnumerationConfig(**args)

    def with_w1(self, w1):
        return self.replace(weights=[w1, 1.0 - w1])

    def sample_waits(self):
        """!
        @brief Waiting times shared by a sequence and its channel mirror image.
        @return np_ndarray of shape (2^(L-1), L)
        """
        L = self.max_sequence_length
        return exp_waits(task_rng(self.seed), self.rate, (max(1 << (L - 1), 1), L))


@jit(nopython=True)
def _enumerate_kernel(w1, w2, theta, decay, bias, length, waits):
    n_seq = 1 << length
    half = n_seq >> 1
    mask = n_seq - 1
    weight_1 = 0.0
    weight_all = 0.0
    n_unresolved = 0
    first_unresolved = -1
    for s in range(n_seq):
        row = s if s < half else s ^ mask
        v = 0.0
        trig = -1
        for k in range(length):
            bit = (s >> k) & 1
            if decay > 0.0:
                v *= np.exp(-decay * waits[row, k])
            if bit == 0:
                v += w1
            else:
                v += w2
            if v >= theta:
                trig = bit
                break
        n1 = 0
        for k in range(length):
            if (s >> k) & 1 == 0:
                n1 += 1
        weight = bias ** n1 * (1.0 - bias) ** (length - n1)
        if trig == 0:
            weight_1 += weight
        if trig >= 0:
            weight_all += weight
        else:
            n_unresolved += 1
            if first_unresolved < 0:
                first_unresolved = s
    return weight_1, weight_all, n_unresolved, first_unresolved


def _sequence_label(s, length):
    return tuple(1 + ((s >> k) & 1) for k in range(length))


def _enumerate(config, waits=None):
    """!
    @return (p_1, n_unresolved, first unresolved sequence or None)
    """
    w1, w2 = config.weights
    if w2 == 0.0:
        return 1.0, 0, None
    if w1 == 0.0:
        return 0.0, 0, None
    L = config.max_sequence_length
    if waits is None:
        waits = config.sample_waits()
    assert waits.shape[1] == L
    weight_1, weight_all, n_unresolved, first = _enumerate_kernel(
        w1, w2, config.threshold, config.decay, config.bias, L, waits)
    seq = _sequence_label(first, L) if first >= 0 else None
    if weight_all <= 0.0:
        raise EnumerationLengthError(
            "ERROR: no sequence of length %d crosses theta=%g for w=%s" %
            (L, config.threshold, str(config.weights)), seq)
    return weight_1 / weight_all, n_unresolved, seq


def enumerate_p1(config, waits=None):
    """!
    @brief Exact promotion probability of channel 1 by enumeration of all
    2^L channel sequences.
    Every sequence is played through the frozen neuron with its sampled
    waiting times and truncated at the first threshold crossing.  p_1 is the
    (bias weighted) fraction of sequences truncated by a channel 1 spike.
    @param config  EnumerationConfig
    @param waits  optional waiting times from config.sample_waits() (common
        random numbers across a weight grid)
    @return float p_1
    """
    p1, n_unresolved, seq = _enumerate(config, waits)
    if n_unresolved and config.unresolved == RAISE:
        raise EnumerationLengthError(
            "ERROR: %d sequences of length %d never cross theta=%g (w=%s), e.g. %s" %
            (n_unresolved, config.max_sequence_length, config.threshold,
             str(config.weights), "".join(str(c) for c in seq)), seq)
    return p1


@jit(nopython=True)
def _frozen_chunk(times, channels, start, w, theta, decay, window, v, t_last,
                  counts, n_out, n_out_target):
    for k in range(start, times.size):
        t = times[k]
        if decay > 0.0:
            v *= np.exp(-decay * (t - t_last))
        t_last = t
        v += w[channels[k]]
        if v >= theta:
            v = 0.0
            j = k
            while j >= 0 and times[j] >= t - window:
                counts[channels[j]] += 1
                j -= 1
            n_out += 1
            if n_out >= n_out_target:
                return k + 1, v, t_last, n_out
    return times.size, v, t_last, n_out


def monte_carlo_p(weights, neuron, rates, n_output_spikes, seed=0, window=0.0,
                  max_events=None, chunk=200000, return_counts=False):
    """!
    @brief Promotion probabilities of a neuron with frozen weights.
    The input is one merged Poisson process at the total rate whose spikes
    are assigned to channels in proportion to the rates.  For every output
    spike all inputs within window before it (the triggering one included)
    count as promotions.
    @param weights  WeightVector or array
    @param neuron  NeuronState (threshold and decay are used)
    @param rates  RateSpec
    @param n_output_spikes  int number of output spikes to simulate
    @param window  float tau of the learning rule being validated (0: triggering channel)
    @param max_events  int input event budget (default 1000 per requested output)
    @return np_1darray p_hat (and the raw counts if return_counts)
    """
    w = np.asarray(getattr(weights, 'w', weights), dtype=float)
    assert w.size == rates.n_channels
    assert n_output_spikes >= 1
    if max_events is None:
        max_events = 1000 * n_output_spikes
    rng = task_rng(seed) if not isinstance(seed, np.random.RandomState) else seed
    cdf = np.cumsum(rates.shares)
    total_rate = rates.total_rate
    counts = np.zeros(w.size, dtype=np.int64)
    n_out, n_events, v, t_last = 0, 0, 0.0, 0.0
    tail_t, tail_ch = np.zeros(0), np.zeros(0, dtype=np.int64)
    while n_out < n_output_spikes and n_events < max_events:
        n_new = min(chunk, max_events - n_events)
        new_t = t_last + np.cumsum(exp_waits(rng, total_rate, n_new))
        new_ch = categorical(rng, cdf, n_new).astype(np.int64)
        times = np.concatenate((tail_t, new_t))
        channels = np.concatenate((tail_ch, new_ch))
        start = tail_t.size
        stop, v, t_last, n_out = _frozen_chunk(times, channels, start, w, neuron.threshold,
                                               neuron.decay_rate, window, v, t_last,
                                               counts, n_out, n_output_spikes)
        n_events += stop - start
        keep = times[:stop] >= t_last - window
        tail_t, tail_ch = times[:stop][keep], channels[:stop][keep]
    if n_out == 0:
        raise NoOutputError("ERROR: no output spike within %d input events (w=%s, theta=%g)" %
                            (n_events, str(w), neuron.threshold))
    if n_out < n_output_spikes:
        log_msg("WARNING: event budget exhausted after %d of %d output spikes" %
                (n_out, n_output_spikes))
    p_hat = counts / np.sum(counts)
    if return_counts:
        return p_hat, counts
    return p_hat


class ScanResult(object):
    """!
    @brief p_1(w_1) on a grid and the classified diagonal crossings.
    refined_grid / refined_p hold the extra points evaluated between grid
    points to resolve narrow crossings; they enter the crossings only.
    """
    def __init__(self, grid, p, crossings, decay, n_unresolved=None, refined_grid=(),
                 refined_p=()):
        self.grid = np.asarray(grid)
        self.p = np.asarray(p)
        self.crossings = list(crossings)
        self.decay = decay
        self.n_unresolved = n_unresolved if n_unresolved is not None else [0] * len(grid)
        self.refined_grid = np.asarray(refined_grid, dtype=float)
        self.refined_p = np.asarray(refined_p, dtype=float)

    def crossings_of(self, kind):
        return [c for c in self.crossings if c[2] == kind]

    def monotone_violation(self):
        """! @brief largest decrease of p_1 between neighbouring grid points """
        if self.p.size < 2:
            return 0.0
        return float(max(0.0, -np.min(np.diff(self.p))))

    def write_csv(self, p_curve_path, crossings_path=None, manifest=None):
        kinds = {}
        for w1, _, cls in self.crossings:
            idx = int(np.argmin(np.abs(self.grid - w1)))
            if np.isclose(self.grid[idx], w1, rtol=0.0, atol=1e-12):
                kinds[idx] = cls
        labels = [kinds.get(i, "none") for i in range(self.grid.size)]
        write_csv(p_curve_path, ["w_1", "p_1", "classification"],
                  [self.grid.tolist(), self.p.tolist(), labels], ["%.17g", "%.17g", "%s"], manifest)
        if crossings_path is not None:
            write_csv(crossings_path, ["w_1", "p_1", "classification"],
                      [[c[0] for c in self.crossings], [c[1] for c in self.crossings],
                       [c[2] for c in self.crossings]], ["%.17g", "%.17g", "%s"], manifest)


def classify_crossings(grid, p):
    """!
    @brief Diagonal crossings of p_1(w_1), located by sign changes of
    g = p_1 - w_1 and linear interpolation.  Falling sign (crossing from
    above) is stable, rising sign is unstable, the end points are absorbing.
    @return list of (w_1, p_1, classification)
    """
    grid = np.asarray(grid, dtype=float)
    p = np.asarray(p, dtype=float)
    g = p - grid
    n = grid.size
    out = [(grid[0], p[0], ABSORBING)]
    for k in range(1, n - 1):
        if g[k] == 0.0:
            if g[k - 1] > 0.0 > g[k + 1]:
                out.append((grid[k], p[k], STABLE))
            elif g[k - 1] < 0.0 < g[k + 1]:
                out.append((grid[k], p[k], UNSTABLE))
    for k in range(n - 1):
        if g[k] * g[k + 1] < 0.0:
            frac = g[k] / (g[k] - g[k + 1])
            w_c = grid[k] + frac * (grid[k + 1] - grid[k])
            p_c = p[k] + frac * (p[k + 1] - p[k])
            out.append((w_c, p_c, STABLE if g[k] > 0.0 else UNSTABLE))
    if n > 1:
        out.append((grid[-1], p[-1], ABSORBING))
    out.sort(key=lambda c: c[0])
    return out


def _hidden_crossing(wa, pa, wb, pb, tol=1e-12):
    """!
    @brief True when a nondecreasing p_1 can cross the diagonal inside
    (wa, wb) although p_1 - w_1 keeps its sign at both ends.
    """
    ga, gb = pa - wa, pb - wb
    if ga * gb < 0.0 or (ga == 0.0 and gb == 0.0):
        return False
    if ga <= 0.0 and gb <= 0.0:
        return pb - wa > tol
    return wb - pa > tol


def refine_crossings(grid, p, evaluate, min_width=2e-5, max_points=200):
    """!
    @brief Bisect the grid intervals that may hide a pair of crossings.
    p_1 is piecewise constant without membrane decay, so a jump onto the
    diagonal narrower than the grid step leaves no sign change behind.
    @param evaluate  callable w_1 -> p_1
    @param min_width  float intervals narrower than this are not split
    @param max_points  int bound on the number of extra evaluations
    @return (w, p) np_1darrays of the added points
    """
    values = dict(zip(np.asarray(grid, dtype=float).tolist(), np.asarray(p, dtype=float).tolist()))
    stack = [(grid[k], grid[k + 1]) for k in range(len(grid) - 1)][::-1]
    added = []
    while stack and len(added) < max_points:
        a, b = stack.pop()
        if b - a < min_width or not _hidden_crossing(a, values[a], b, values[b]):
            continue
        m = 0.5 * (a + b)
        values[m] = float(evaluate(m))
        added.append(m)
        stack.append((m, b))
        stack.append((a, m))
    added.sort()
    return np.array(added), np.array([values[w] for w in added])


def _required_length(config):
    w_min = np.min(config.weights[config.weights > 0.0])
    return int(np.ceil(config.threshold / w_min - 1e-12))


def scan_point(config, waits_cache, max_length_cap=20, verbose=0):
    """!
    @brief p_1 at one grid point, growing the sequence length when some
    sequence does not cross theta.  Sequences still unresolved at the cap
    are dropped with a warning.
    @return (p_1, n_unresolved)
    """
    cfg = config
    while True:
        L = cfg.max_sequence_length
        if L not in waits_cache:
            waits_cache[L] = cfg.sample_waits()
        p1, n_unresolved, seq = _enumerate(cfg, waits_cache[L])
        if n_unresolved == 0:
            return p1, 0
        if L >= max_length_cap or _required_length(cfg) > max_length_cap:
            if config.unresolved == RAISE:
                log_msg("WARNING: w_1=%g: %d sequences of length %d never cross theta, e.g. %s; "
                        "dropped" % (cfg.weights[0], n_unresolved, L, "".join(str(c) for c in seq)),
                        verbose)
            return p1, n_unresolved
        cfg = cfg.replace(max_sequence_length=L + 1)


def fixed_point_scan(config, resolution, max_length_cap=20, comm=None, verbose=0, refine=True):
    """!
    @brief Evaluate p_1(w_1) on a uniform grid over [0, 1] and classify the
    diagonal crossings.
    Grid points are distributed over MPI ranks; every rank returns the full
    result.  The refinement pass runs on every rank with the same waits.
    @param config  EnumerationConfig template (its weights are ignored)
    @param resolution  int number of grid points (>= 2)
    @param comm  MPI communicator or None
    @param refine  bool bisect intervals that may hide narrow crossings
    @return ScanResult
    """
    assert resolution >= 2
    grid = np.linspace(0.0, 1.0, resolution)
    waits_cache = {}
    local = []
    for task_id in rank_tasks(resolution, comm):
        w1 = grid[task_id]
        p1, n_unres = scan_point(config.with_w1(w1), waits_cache, max_length_cap, verbose)
        local.append((int(task_id), (p1, n_unres)))
    results = gather_tasks(local, resolution, comm)
    p = np.array([r[0] for r in results])
    n_unresolved = [r[1] for r in results]
    w_ref, p_ref = np.zeros(0), np.zeros(0)
    if refine:
        quiet = verbose if is_root(comm) else 0
        w_ref, p_ref = refine_crossings(
            grid, p, lambda w: scan_point(config.with_w1(w), waits_cache, max_length_cap, quiet)[0])
    w_all = np.concatenate([grid, w_ref])
    p_all = np.concatenate([p, p_ref])
    order = np.argsort(w_all, kind="mergesort")
    crossings = classify_crossings(w_all[order], p_all[order])
    log_msg("d=%g: %d diagonal crossings (%d refined points)" %
            (config.decay, len(crossings), w_ref.size), verbose, comm)
    return ScanResult(grid, p, crossings, config.decay, n_unresolved, w_ref, p_ref)
