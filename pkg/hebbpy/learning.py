from __future__ import print_function, division
from collections import deque
from hebbpy.neuron import RunHooks, SpikeEvent
from hebbpy.plasticity import HEBBIAN, STDP, DECAY, PROMOTION, UpdateEvent, \
    hebbian_update, stdp_update, decay_model_update, window_events, epsilon_at
from hebbpy.estimators import adaptive_epsilon


class Learner(RunHooks):
    """!
    @brief Online learning driven by neuron.run().
    Keeps the recent input history needed to find the spikes inside the
    learning windows of each output spike, feeds every update event to the
    attached estimators and optionally samples Delta / adapts the
    learning rate.
    """
    def __init__(self, rule, rng=None, estimators=(), frozen=False, monitor=None,
                 adaptive=False, adaptive_cap=0.001, verbose=0):
        """!
        @param rule  PlasticityRule
        @param rng  np.random.RandomState of the run (randomized learning rate)
        @param estimators  iterable of EstimatorState that record every update event
        @param frozen  bool.  compute and record update events but never apply them
        @param monitor  DeltaMonitor or None
        @param adaptive  bool.  set eps = adaptive_epsilon(Delta) at every monitor sample
        @param adaptive_cap  float upper bound of the adaptive rate
        """
        self.rule = rule
        self.rng = rng
        self.estimators = list(estimators)
        self.frozen = frozen
        self.monitor = monitor
        self.adaptive = adaptive
        self.adaptive_cap = adaptive_cap
        self.verbose = verbose
        self.n_outputs = 0
        self.n_updates = 0
        self._recent = deque()
        if adaptive:
            assert monitor is not None, "adaptive learning rate needs a DeltaMonitor"
            self._set_epsilon(adaptive_cap)

    @property
    def epsilon(self):
        return self.rule.kernel.amplitude

    def _set_epsilon(self, eps):
        self.rule = self.rule.with_kernel(self.rule.kernel.with_amplitude(eps))
        if self.monitor is not None:
            self.monitor.rule = self.rule

    def _record(self, event, w_before):
        for est in self.estimators:
            est.record(event, w_before)
        self.n_updates += 1

    def _record_all(self, events, weights):
        for ev in events:
            self._record(ev, weights.w)

    def before_input(self, t, weights):
        weights = self._flush(t, weights)
        if self.monitor is not None and self.monitor.due(t):
            eps = self.epsilon if self.rule.kernel.is_constant else None
            delta = self.monitor.sample(t, weights, eps)
            if self.adaptive and delta is not None:
                self._set_epsilon(adaptive_epsilon(delta, self.adaptive_cap))
        return weights

    def after_input(self, event, output, weights):
        recent = self._recent
        recent.append((event.time, event.channel))
        horizon = event.time - self.rule.window
        while recent[0][0] < horizon:
            recent.popleft()
        weights = self._post_input(event, weights)
        if output is not None:
            self.n_outputs += 1
            t_lo = output.time - self.rule.window
            pre = [SpikeEvent(ch, ts) for ts, ch in recent if ts >= t_lo]
            weights = self._on_output(output, pre, weights)
        return weights

    def _flush(self, t, weights):
        return weights

    def _post_input(self, event, weights):
        return weights

    def _on_output(self, output, pre, weights):
        raise NotImplementedError


class HebbianLearner(Learner):
    """!
    @brief Promote channels active within tau before the output spike.
    """
    def _on_output(self, output, pre, weights):
        if self.frozen:
            self._record_all(window_events(self.rule, pre, [], output, self.rng), weights)
            return weights
        new_weights, _ = hebbian_update(weights, self.rule, pre, output, self.rng,
                                        recorder=self._record)
        return new_weights


class StdpLearner(Learner):
    """!
    @brief Symmetric STDP.  The updates of an output spike are held back
    until its post window has closed, that is until the first input later
    than t_out + tau arrives or the stream ends.
    """
    def __init__(self, rule, **kwargs):
        self._pending = deque()
        super(StdpLearner, self).__init__(rule, **kwargs)

    def _on_output(self, output, pre, weights):
        self._pending.append((output, pre, []))
        return weights

    def _post_input(self, event, weights):
        for output, _, post in self._pending:
            if event.time > output.time:
                post.append(event)
        return weights

    def _finalize(self, weights):
        output, pre, post = self._pending.popleft()
        if self.frozen:
            self._record_all(window_events(self.rule, pre, post, output, self.rng), weights)
            return weights
        new_weights, _ = stdp_update(weights, self.rule, pre, post, output, self.rng,
                                     recorder=self._record)
        return new_weights

    def _flush(self, t, weights):
        window = self.rule.window
        while self._pending and self._pending[0][0].time + window < t:
            weights = self._finalize(weights)
        return weights

    def finish(self, t_end, weights):
        while self._pending:
            weights = self._finalize(weights)
        return weights

    @property
    def n_pending(self):
        return len(self._pending)


class DecayLearner(Learner):
    """!
    @brief Decay model: every pre window spike decays all weights by delta
    and adds eps to its channel.
    """
    def _on_output(self, output, pre, weights):
        for sp in pre:
            offset = sp.time - output.time
            eps = epsilon_at(self.rule.kernel, offset, self.rng)
            self._record(UpdateEvent(sp.channel, PROMOTION, offset, eps), weights.w)
            if not self.frozen:
                weights = decay_model_update(weights, self.rule, sp.channel, eps)
        return weights


def make_learner(rule, **kwargs):
    """!
    @brief Learner matching rule.kind.
    """
    if rule.kind == HEBBIAN:
        return HebbianLearner(rule, **kwargs)
    elif rule.kind == STDP:
        return StdpLearner(rule, **kwargs)
    elif rule.kind == DECAY:
        return DecayLearner(rule, **kwargs)
    else:
        raise RuntimeError("ERROR: learning rule: %s not supported." % str(rule.kind))
