##
# @brief Event driven simulation of a single leaky integrate-and-fire neuron
# in continuous time.
#
# The membrane potential V jumps by w_i when a spike arrives on channel i,
# decays as dV/dt = -d V between spikes and is reset to 0 once it reaches
# the threshold theta.  Between two input events V is obtained from the closed
# form solution of the decay ODE, so no time stepping is involved.
##
from __future__ import print_function, division
from collections import namedtuple
import math
import numpy as np
from hebbpy.trace import RunTrace


class TimeOrderError(ValueError):
    pass


class ChannelIndexError(IndexError):
    pass


SpikeEvent = namedtuple('SpikeEvent', ['channel', 'time'])
OutputSpike = namedtuple('OutputSpike', ['time', 'triggering_channel'])


class NeuronState(namedtuple('NeuronState',
                             ['potential', 'threshold', 'decay_rate', 'last_event_time'])):
    """!
    @brief Immutable neuron state.
    @param potential  float membrane potential V >= 0
    @param threshold  float theta > 0
    @param decay_rate  float d >= 0 (per time unit)
    @param last_event_time  float time of the last state update
    """
    __slots__ = ()

    def __new__(cls, potential=0.0, threshold=0.94, decay_rate=0.0, last_event_time=0.0):
        assert threshold > 0.0
        assert decay_rate >= 0.0
        assert potential >= 0.0
        return super(NeuronState, cls).__new__(cls, float(potential), float(threshold),
                                               float(decay_rate), float(last_event_time))


class SpikeTrain(object):
    """!
    @brief Time sorted input stream held as two parallel arrays.
    Iterating yields SpikeEvent tuples.  Ties in time are ordered by channel.
    """
    def __init__(self, times, channels, n_channels=None, t_end=None):
        self._times = np.asarray(times, dtype=float).flatten()
        self._channels = np.asarray(channels, dtype=np.int64).flatten()
        assert self._times.shape == self._channels.shape
        if n_channels is None:
            n_channels = int(self._channels.max()) + 1 if self._channels.size else 0
        self.n_channels = int(n_channels)
        if t_end is None:
            t_end = float(self._times[-1]) if self._times.size else 0.0
        self.t_end = float(t_end)
        self._times.flags.writeable = False
        self._channels.flags.writeable = False

    @classmethod
    def from_events(cls, events, n_channels=None, t_end=None):
        events = list(events)
        times = [ev.time for ev in events]
        channels = [ev.channel for ev in events]
        return cls(times, channels, n_channels, t_end)

    @classmethod
    def merge(cls, times, channels, n_channels=None, t_end=None):
        """!
        @brief Build a train from unsorted spike arrays; sorts by (time, channel).
        """
        times = np.asarray(times, dtype=float)
        channels = np.asarray(channels, dtype=np.int64)
        order = np.lexsort((channels, times))
        return cls(times[order], channels[order], n_channels, t_end)

    def is_sorted(self):
        if self._times.size < 2:
            return True
        dt = np.diff(self._times)
        if np.any(dt < 0.0):
            return False
        ties = (dt == 0.0)
        return not np.any(np.diff(self._channels)[ties] < 0)

    def __iter__(self):
        for t, ch in zip(self._times.tolist(), self._channels.tolist()):
            yield SpikeEvent(ch, t)

    def __len__(self):
        return self._times.size

    def __getitem__(self, idx):
        return SpikeEvent(int(self._channels[idx]), float(self._times[idx]))

    @property
    def times(self):
        return self._times

    @property
    def channels(self):
        return self._channels


def _weight_array(weights):
    return np.asarray(getattr(weights, 'w', weights), dtype=float)


def _decayed(v, decay_rate, dt):
    if decay_rate == 0.0 or dt == 0.0:
        return v
    v = v * math.exp(-decay_rate * dt)
    # floating point guard, the dynamics never go negative
    return v if v > 0.0 else 0.0


def decay_potential(state, t):
    r"""!
    @brief Leak the membrane potential up to time t.
    \f[ V(t) = V(t_0) e^{-d (t - t_0)} \f]
    @param state  NeuronState
    @param t  float time >= state.last_event_time
    @return NeuronState at time t
    """
    if t < state.last_event_time:
        raise TimeOrderError("ERROR: time runs backward (%r < %r)" % (t, state.last_event_time))
    v = _decayed(state.potential, state.decay_rate, t - state.last_event_time)
    return state._replace(potential=v, last_event_time=float(t))


def deliver_spike(state, weights, event):
    """!
    @brief Deliver one input spike.
    Reaching the threshold exactly counts as a crossing.
    @param state  NeuronState
    @param weights  WeightVector or array of channel weights
    @param event  SpikeEvent
    @return (NeuronState, OutputSpike or None)
    """
    w = _weight_array(weights)
    if not 0 <= event.channel < w.size:
        raise ChannelIndexError("ERROR: channel %d out of range [0, %d)" % (event.channel, w.size))
    state = decay_potential(state, event.time)
    v = state.potential + float(w[event.channel])
    if v >= state.threshold:
        return state._replace(potential=0.0), OutputSpike(float(event.time), int(event.channel))
    return state._replace(potential=v), None


class RunHooks(object):
    """!
    @brief Learning and estimation callbacks driven by run().
    Each callback receives the current weights and returns the weights to
    use from then on.  Returning a new object signals a weight change.
    The default hooks do nothing (no learning).
    """
    def before_input(self, t, weights):
        """! @brief Called before the input at time t is delivered. """
        return weights

    def after_input(self, event, output, weights):
        """!
        @brief Called after the input was delivered.
        @param output  OutputSpike if this input triggered one, else None
        """
        return weights

    def finish(self, t_end, weights):
        return weights


def run(events, state, weights, hooks=None, snapshot_cadence=None,
        input_log_window=None, t_end=None, verbose=0):
    """!
    @brief Drive the neuron over an ordered stream of input spikes.
    @param events  SpikeTrain or iterable of SpikeEvent, sorted in time
    @param state  NeuronState at the start of the stream
    @param weights  WeightVector (or array) at the start of the stream
    @param hooks  RunHooks instance (learning / estimation)
    @param snapshot_cadence  float time between weight snapshots.  None: only
        the initial and final weights are recorded.
    @param input_log_window  int keep only this many most recent input events
        in the trace.  None keeps the full log.
    @param t_end  float end of the run (defaults to the last event time)
    @return RunTrace with final_state and final_weights attached
    """
    if hooks is None:
        hooks = RunHooks()
    if isinstance(events, SpikeTrain):
        times, channels = events.times.tolist(), events.channels.tolist()
        if t_end is None:
            t_end = events.t_end
    else:
        ev_list = list(events)
        times = [float(ev.time) for ev in ev_list]
        channels = [int(ev.channel) for ev in ev_list]

    w_list = _weight_array(weights).tolist()
    n_channels = len(w_list)
    trace = RunTrace(n_channels, input_log_window=input_log_window)

    v, theta, d, t_last = state
    t_start = t_last
    trace.append_snapshot(t_start, w_list)
    next_snap = None
    if snapshot_cadence is not None and snapshot_cadence > 0:
        next_snap = t_start + snapshot_cadence

    for t, ch in zip(times, channels):
        if t < t_last:
            raise TimeOrderError("ERROR: unsorted input stream at t=%r (previous %r)" % (t, t_last))
        if not 0 <= ch < n_channels:
            raise ChannelIndexError("ERROR: channel %d out of range [0, %d)" % (ch, n_channels))
        while next_snap is not None and next_snap <= t:
            trace.append_snapshot(next_snap, w_list)
            next_snap += snapshot_cadence

        new_weights = hooks.before_input(t, weights)
        if new_weights is not weights:
            weights = new_weights
            w_list = _weight_array(weights).tolist()

        v = _decayed(v, d, t - t_last)
        t_last = t
        v += w_list[ch]
        trace.append_input(t, ch)
        output = None
        if v >= theta:
            v = 0.0
            output = OutputSpike(t, ch)
            trace.append_output(output)

        new_weights = hooks.after_input(SpikeEvent(ch, t), output, weights)
        if new_weights is not weights:
            weights = new_weights
            w_list = _weight_array(weights).tolist()

    if t_end is None or t_end < t_last:
        t_end = t_last
    while next_snap is not None and next_snap <= t_end:
        trace.append_snapshot(next_snap, w_list)
        next_snap += snapshot_cadence
    weights = hooks.finish(t_end, weights)
    w_list = _weight_array(weights).tolist()
    if trace.snapshot_times[-1] == t_end:
        trace.replace_last_snapshot(w_list)
    else:
        trace.append_snapshot(t_end, w_list)

    # leak up to the end of the run so the final state is observable at t_end
    final_state = NeuronState(_decayed(v, d, t_end - t_last), theta, d, t_end)
    trace.finalize(final_state, weights)
    if verbose:
        print("run: %d inputs, %d outputs, t_end=%g" % (len(times), trace.n_outputs, t_end))
    return trace
