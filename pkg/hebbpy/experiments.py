##
# @brief Experiment orchestration behind the hebbpy command line.
#
# Every command takes a validated RunConfig, runs one or many seeded neuron
# simulations (or the learning free oracle) and writes CSV artifacts, each
# led by a commented manifest line, into run.output_dir.
##
from __future__ import print_function, division
import os
import h5py
import numpy as np
from scipy import stats
from hebbpy.config import RunConfig, initial_weights
from hebbpy.neuron import NeuronState, SpikeTrain, run
from hebbpy.plasticity import PlasticityRule, WeightVector, ConstantKernel, \
    TruncatedExponentialKernel, normalize, HEBBIAN, STDP, DECAY
from hebbpy.estimators import EstimatorState, DeltaMonitor, evaluate_constraint, alert_times, \
    EmptyEstimatorError, DegenerateConstraintError, CUMULATIVE
from hebbpy.learning import make_learner
from hebbpy.inputs import RateSpec, poisson_stream, gaussian_rates, redrawn_rate_schedule, \
    scheduled_poisson_stream, MnistEncoderConfig, mnist_stream
from hebbpy.oracle import EnumerationConfig, fixed_point_scan, monte_carlo_p, enumerate_p1
from hebbpy.trace import write_csv, read_csv, manifest_line
from hebbpy.util import task_rng, rank_tasks, gather_tasks, log_msg, is_root

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFY_FAILED = 2

# sub streams of one run
INPUT_STREAM, LEARNING_STREAM, RATE_STREAM, WEIGHT_STREAM = 0, 1, 2, 3

PLOT_SCRIPT = """#!/usr/bin/python
# Plot the csv files of this directory.
from __future__ import print_function, division
import os
from hebbpy.hb_plot.hb_plot import plot_dir

if __name__ == "__main__":
    plot_dir(os.path.dirname(os.path.abspath(__file__)))
"""


def build_rule(config):
    """!
    @brief PlasticityRule from the rule.* keys.
    """
    eps = config["rule.epsilon"]
    window = config["rule.window"]
    if config["rule.kernel"] == "exponential":
        kernel = TruncatedExponentialKernel(eps, window, config["rule.time_constant"])
    else:
        kernel = ConstantKernel(eps, window, random=config["rule.epsilon_random"])
    delta = config["rule.delta"] if config["rule.kind"] == DECAY else None
    return PlasticityRule(config["rule.kind"], kernel, window, config["rule.norm_exponent"], delta)


def run_streams(seed, task_id=0):
    """!
    @brief Independent random states of one run: inputs, learning, rates, initial weights.
    """
    return [task_rng(seed, task_id, s)
            for s in (INPUT_STREAM, LEARNING_STREAM, RATE_STREAM, WEIGHT_STREAM)]


def read_replay(path, n_channels, t_end=None):
    """!
    @brief Input rows of a spikes.csv as a SpikeTrain.
    """
    header, rows = read_csv(path)
    i_t, i_ch, i_kind = header.index("time"), header.index("channel"), header.index("kind")
    times = [float(r[i_t]) for r in rows if r[i_kind] == "input"]
    channels = [int(r[i_ch]) for r in rows if r[i_kind] == "input"]
    if t_end is None or (times and t_end < times[-1]):
        t_end = times[-1] if times else 0.0
    return SpikeTrain(times, channels, n_channels, t_end)


def switch_times(config):
    """! @brief times where the input statistics change """
    kind = config["inputs.kind"]
    if kind == "redraw":
        return [t for t in config.floats("inputs.redraw_times") if 0.0 < t < config["run.duration"]]
    if kind == "mnist":
        ends = np.cumsum([d for _, d in config.schedule()])
        return ends[:-1].tolist()
    return []


def build_stream(config, rng_inputs, rng_rates):
    """!
    @brief Input SpikeTrain of a run from the inputs.* keys.
    """
    kind = config["inputs.kind"]
    n = config["neuron.n_channels"]
    duration = config["run.duration"]
    if kind == "poisson":
        return poisson_stream(RateSpec(config.channel_rates()), duration, rng_inputs)
    elif kind == "gaussian":
        spec = gaussian_rates(n, config["inputs.rate_mean"], config["inputs.rate_sd"],
                              rng_rates, config["inputs.rate_floor"])
        return poisson_stream(spec, duration, rng_inputs)
    elif kind == "biased":
        spec = RateSpec.biased(config["inputs.combined_rate"], config.floats("inputs.bias"))
        return poisson_stream(spec, duration, rng_inputs)
    elif kind == "redraw":
        schedule = redrawn_rate_schedule(n, config["inputs.rate_mean"], config["inputs.rate_sd"],
                                         config.floats("inputs.redraw_times"), duration,
                                         rng_rates, config["inputs.rate_floor"])
        return scheduled_poisson_stream(schedule, rng_inputs)
    elif kind == "mnist":
        images, labels = config.mnist_files()
        enc = MnistEncoderConfig(images, labels, config["inputs.mnist.row"],
                                 combined_rate=config["inputs.mnist.rate"], seed=config["run.seed"])
        return mnist_stream(enc, config.schedule(), seed=rng_inputs)
    elif kind == "replay":
        return read_replay(config["inputs.replay"], n, duration)
    else:
        raise RuntimeError("ERROR: input kind: %s not supported." % str(kind))


class SimulationResult(object):
    """!
    @brief Everything a finished run leaves behind.
    """
    def __init__(self, config, learner, trace, cumulative, windowed, monitor):
        self.config = config
        self.learner = learner
        self.trace = trace
        self.cumulative = cumulative
        self.windowed = windowed
        self.monitor = monitor

    @property
    def rule(self):
        return self.learner.rule

    @property
    def final_weights(self):
        return self.trace.final_weights

    @property
    def mean_weights(self):
        """! @brief weight snapshots averaged over the second half of the run """
        t = self.trace.snapshot_times
        keep = t >= 0.5 * t[-1]
        return np.mean(self.trace.snapshots[keep], axis=0)

    def estimator(self, which="sliding"):
        return self.cumulative if which == CUMULATIVE else self.windowed

    def final_report(self, which="sliding"):
        """!
        @brief Constraint report at the end of the run, None if it cannot be formed.
        """
        try:
            return evaluate_constraint(self.rule, self.estimator(which), self.final_weights)
        except (EmptyEstimatorError, DegenerateConstraintError) as e:
            log_msg("WARNING: no final constraint report: %s" % str(e), self.learner.verbose)
            return None


def simulate(config, task_id=0, weights=None, monitor=True, input_log_window=None, verbose=0):
    """!
    @brief One seeded learning run.
    @param config  RunConfig (validated)
    @param task_id  int index of the run inside a sweep, selects the random streams
    @param weights  initial weights overriding run.initial_weights
    @param monitor  bool sample Delta on the estimator.delta_cadence grid
    @param input_log_window  int override of run.input_log_window
    @return SimulationResult
    """
    rng_inputs, rng_learn, rng_rates, rng_w = run_streams(config["run.seed"], task_id)
    rule = build_rule(config)
    n = config["neuron.n_channels"]
    l = config["rule.norm_exponent"]
    if weights is None:
        weights = initial_weights(config, rng_w)
    weights = normalize(WeightVector(weights, l))

    train = build_stream(config, rng_inputs, rng_rates)
    log_msg("inputs: %s, %d events up to t=%g" % (config["inputs.kind"], len(train), train.t_end),
            verbose)

    cumulative = EstimatorState(n, l, CUMULATIVE)
    windowed = EstimatorState(n, l, config["estimator.window_mode"],
                              config["estimator.window_length"], config["estimator.decay_factor"])
    delta_monitor = None
    if monitor or config["rule.adaptive"]:
        delta_monitor = DeltaMonitor(rule, windowed, config["estimator.delta_cadence"],
                                     keep_reports=True, verbose=verbose)
    learner = make_learner(rule, rng=rng_learn, estimators=(cumulative, windowed),
                           frozen=config["rule.frozen"], monitor=delta_monitor,
                           adaptive=config["rule.adaptive"],
                           adaptive_cap=config["rule.adaptive_cap"], verbose=verbose)

    if input_log_window is None:
        input_log_window = config["run.input_log_window"]
    cadence = config["run.snapshot_cadence"]
    state = NeuronState(0.0, config["neuron.theta"], config["neuron.decay"], 0.0)
    trace = run(train, state, weights, hooks=learner,
                snapshot_cadence=cadence if cadence > 0 else None,
                input_log_window=None if input_log_window < 0 else input_log_window,
                t_end=train.t_end, verbose=verbose)
    return SimulationResult(config, learner, trace, cumulative, windowed, delta_monitor)


def _out_dir(config):
    out = config["run.output_dir"]
    if not os.path.isdir(out):
        os.makedirs(out)
    return out


def write_manifest(config, out_dir):
    with open(os.path.join(out_dir, "manifest.txt"), 'w') as f:
        f.write(config.manifest())
    with open(os.path.join(out_dir, "plot_results.py"), 'w') as f:
        f.write(PLOT_SCRIPT)


def write_delta_csv(monitor, path, manifest):
    write_csv(path, ["time", "delta", "epsilon"],
              [monitor.times, monitor.deltas, monitor.epsilons], ["%.17g"] * 3, manifest)


def write_constraints_csv(monitor, path, manifest):
    """!
    @brief One row per (sample time, channel): L_i against w_i / sum_j w_j.
    """
    times, channels, L, w_norm = [], [], [], []
    for t, report in zip(monitor.times, monitor.reports):
        for i in range(report.L.size):
            times.append(t)
            channels.append(i)
            L.append(report.L[i])
            w_norm.append(report.normalized_weights[i])
    write_csv(path, ["time", "channel", "L", "w_norm"], [times, channels, L, w_norm],
              ["%.17g", "%d", "%.17g", "%.17g"], manifest)


def write_final_weights(result, path):
    """!
    @brief final_weights.h5: weights, both estimators and the trace.
    """
    with h5py.File(path, 'w') as h5f:
        h5f.create_dataset("final_weights", data=np.asarray(result.final_weights.w))
        h5f.create_dataset("mean_weights", data=result.mean_weights)
        h5f.attrs["epsilon"] = result.rule.kernel.amplitude
        h5f.attrs["norm_exponent"] = result.final_weights.norm_exponent
        h5f.attrs["config"] = result.config.to_text()
        result.cumulative.write_h5(h5f, "estimator/cumulative")
        result.windowed.write_h5(h5f, "estimator/sliding")
        result.trace.write_h5(h5f, "trace")


def write_run_artifacts(result, out_dir):
    config = result.config
    manifest = manifest_line(config.config_hash(), config["run.seed"])
    result.trace.write_spikes_csv(os.path.join(out_dir, "spikes.csv"), manifest)
    result.trace.write_weights_csv(os.path.join(out_dir, "weights.csv"), manifest)
    if result.monitor is not None:
        write_constraints_csv(result.monitor, os.path.join(out_dir, "constraints.csv"), manifest)
        write_delta_csv(result.monitor, os.path.join(out_dir, "delta.csv"), manifest)
    write_final_weights(result, os.path.join(out_dir, "final_weights.h5"))
    write_manifest(config, out_dir)


def cmd_simulate(config, comm=None, verbose=1):
    """!
    @brief Run once and write spikes, weights, constraints, delta and final weights.
    """
    config.validate("simulate")
    result = simulate(config, verbose=verbose)
    if is_root(comm):
        out_dir = _out_dir(config)
        write_run_artifacts(result, out_dir)
        report = result.final_report(config["verify.estimator"])
        if report is not None:
            log_msg("final Delta = %.6g, weights = %s" %
                    (report.delta, np.array2string(result.final_weights.w, precision=4)), verbose)
        log_msg("wrote %s" % out_dir, verbose)
    return EXIT_OK


def cmd_replay(config, comm=None, verbose=1):
    """!
    @brief Re-run the configured learner on the input rows of a spikes.csv.
    """
    return cmd_simulate(config.replace({"inputs.kind": "replay"}), comm, verbose)


def sweep_grid(config):
    """!
    @brief Sweep tasks ordered by (epsilon, w_1 initial, repeat).
    @return list of (epsilon label, w_1 initial, repeat)
    """
    start, stop, step = config["sweep.w1_start"], config["sweep.w1_stop"], config["sweep.w1_step"]
    n_w = int(np.floor((stop - start) / step + 1e-9)) + 1
    w1s = [round(start + k * step, 12) for k in range(n_w)]
    return [(label, w1, rep) for label, _ in config.epsilons()
            for w1 in w1s for rep in range(config["sweep.repeats"])]


def cmd_sweep_initial_weights(config, comm=None, verbose=1):
    """!
    @brief Train a two channel neuron from many initial w_1 and learning
    rates and record the final w_1 of each run (sweep.csv).
    Runs use rule.window = sweep.window (default 0: only the triggering
    channel is promoted, as in the enumeration oracle).
    Tasks are spread over the MPI ranks and merged by task index.
    """
    config.validate("sweep")
    config = config.replace({"rule.window": config["sweep.window"]})
    tasks = sweep_grid(config)
    eps_of = dict(config.epsilons())
    local = []
    for task_id in rank_tasks(len(tasks), comm):
        label, w1, rep = tasks[task_id]
        amp, rnd = eps_of[label]
        cfg = config.replace({"rule.epsilon": amp, "rule.epsilon_random": rnd})
        result = simulate(cfg, task_id=int(task_id), weights=[w1, 1.0 - w1], monitor=False,
                          input_log_window=0)
        w1_final = float(result.final_weights.w[0])
        if verbose > 1:
            print("task %d: eps=%s w1 %.4f -> %.4f" % (task_id, label, w1, w1_final))
        local.append((int(task_id), w1_final))
    finals = gather_tasks(local, len(tasks), comm)
    if is_root(comm):
        out_dir = _out_dir(config)
        manifest = manifest_line(config.config_hash(), config["run.seed"])
        write_csv(os.path.join(out_dir, "sweep.csv"), ["w1_init", "epsilon", "w1_final", "repeat"],
                  [[t[1] for t in tasks], [t[0] for t in tasks], finals, [t[2] for t in tasks]],
                  ["%.17g", "%s", "%.17g", "%d"], manifest)
        write_manifest(config, out_dir)
        log_msg("sweep: %d runs written to %s" % (len(tasks), out_dir), verbose)
    return EXIT_OK


def enumeration_template(config, decay=None):
    return EnumerationConfig([0.5, 0.5], config["neuron.theta"],
                             config["neuron.decay"] if decay is None else decay,
                             config["oracle.max_sequence_length"], config["oracle.rate"],
                             config["oracle.seed"], config["oracle.bias"],
                             config["oracle.unresolved"])


def monte_carlo_check(template, grid, n_output_spikes, seed):
    """!
    @brief Exact p_1 against frozen weight simulation at a few grid points.
    @return (p_enum, p_mc) lists
    """
    bias = template.bias
    rates = RateSpec.biased(template.rate, [bias, 1.0 - bias])
    neuron = NeuronState(0.0, template.threshold, template.decay, 0.0)
    p_enum, p_mc = [], []
    for k, w1 in enumerate(grid):
        cfg = template.replace(unresolved="drop").with_w1(w1)
        p_enum.append(enumerate_p1(cfg))
        p_mc.append(monte_carlo_p([w1, 1.0 - w1], neuron, rates, n_output_spikes,
                                  task_rng(seed, k))[0])
    return p_enum, p_mc


def cmd_oracle_scan(config, comm=None, verbose=1):
    """!
    @brief p_1(w_1) curves and classified fixed points, one per membrane decay.
    A curve that decreases by more than oracle.monotone_tolerance between
    neighbouring grid points fails the run (exit status 1).
    """
    config.validate("oracle-scan")
    manifest = manifest_line(config.config_hash(), config["run.seed"])
    out_dir = _out_dir(config) if is_root(comm) else None
    tol = config["oracle.monotone_tolerance"]
    status = EXIT_OK
    for d in config.floats("oracle.decays"):
        template = enumeration_template(config, d)
        res = fixed_point_scan(template, config["oracle.resolution"],
                               config["oracle.max_length_cap"], comm, verbose)
        violation = res.monotone_violation()
        if violation > tol:
            status = EXIT_ERROR
        if not is_root(comm):
            continue
        if violation > tol:
            log_msg("ERROR: d=%g: p_1(w_1) decreases by %g between grid points "
                    "(tolerance %g)" % (d, violation, tol), 1)
        res.write_csv(os.path.join(out_dir, "p_curve_d%g.csv" % d),
                      os.path.join(out_dir, "crossings_d%g.csv" % d), manifest)
        n_unres = int(np.sum(res.n_unresolved))
        if n_unres:
            log_msg("WARNING: d=%g: %d unresolved sequences dropped over the grid" % (d, n_unres),
                    verbose)
        n_check = config["oracle.check_monte_carlo"]
        if n_check > 0:
            grid = np.linspace(0.1, 0.9, 9)
            p_enum, p_mc = monte_carlo_check(template, grid, n_check, config["oracle.seed"])
            write_csv(os.path.join(out_dir, "mc_check_d%g.csv" % d),
                      ["w_1", "p_enum", "p_mc", "abs_diff"],
                      [grid.tolist(), p_enum, p_mc, np.abs(np.subtract(p_enum, p_mc)).tolist()],
                      ["%.17g"] * 4, manifest)
    if is_root(comm):
        write_manifest(config, out_dir)
    return status


def cmd_novelty(config, comm=None, verbose=1):
    """!
    @brief Delta time series and alert log of a run whose input statistics change.
    """
    config = config.replace({"rule.adaptive": True})
    config.validate("novelty")
    result = simulate(config, verbose=verbose)
    if not is_root(comm):
        return EXIT_OK
    out_dir = _out_dir(config)
    write_run_artifacts(result, out_dir)
    mon = result.monitor
    alerts = alert_times(mon.times, mon.deltas, config["novelty.alert_factor"],
                         config["novelty.history"], config["novelty.burn_in"])
    manifest = manifest_line(config.config_hash(), config["run.seed"])
    write_csv(os.path.join(out_dir, "alerts.csv"), ["time", "delta", "trailing_median"],
              [[a[0] for a in alerts], [a[1] for a in alerts], [a[2] for a in alerts]],
              ["%.17g"] * 3, manifest)
    for t_switch in switch_times(config):
        hits = [a[0] for a in alerts if t_switch <= a[0] <= t_switch + 10000.0]
        if hits:
            log_msg("switch at t=%g: first alert at t=%g" % (t_switch, hits[0]), verbose)
        else:
            log_msg("WARNING: switch at t=%g raised no alert" % t_switch, verbose)
    log_msg("novelty: %d Delta samples, %d alerts" % (len(mon.deltas), len(alerts)), verbose)
    return EXIT_OK


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def _pearson(x, y):
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        return 0.0
    return float(stats.pearsonr(x, y)[0])


def verify_criteria(rule, estimator, final_weights, mean_weights, tolerance):
    """!
    @brief Steady state checks of a finished run.
    Hebbian and STDP runs compare the constraint left hand side with the
    normalized final weights; STDP additionally correlates predicted and
    estimated promotion probabilities when they spread across channels, and
    bounds their largest difference otherwise.
    Decay model runs compare the weights averaged over the second half of
    the run with eps/delta.
    @return list of (criterion, measured, tolerance, status)
    """
    out = []
    try:
        report = evaluate_constraint(rule, estimator, final_weights)
    except (EmptyEstimatorError, DegenerateConstraintError) as e:
        return [("constraint_available", str(e).replace(",", ";"), "", "FAIL")]
    if rule.kind in (HEBBIAN, STDP):
        dev = float(np.max(np.abs(report.L - report.normalized_weights)))
        out.append(("max_constraint_deviation", dev, tolerance, "PASS" if dev <= tolerance else "FAIL"))
    if rule.kind == STDP:
        p_est, p_pred = report.p_estimated, report.p_predicted
        if np.max(p_est) - np.min(p_est) < tolerance:
            # no spread to correlate: compare the probabilities directly
            res = float(np.max(np.abs(p_pred - p_est)))
            out.append(("promotion_residual", res, tolerance, "PASS" if res <= tolerance else "FAIL"))
        else:
            r = _pearson(p_pred, p_est)
            out.append(("promotion_correlation", r, 0.99, "PASS" if r >= 0.99 else "FAIL"))
    if rule.kind == DECAY:
        scale = rule.kernel.amplitude / rule.delta
        w = np.asarray(mean_weights, dtype=float)
        sum_dev = abs(np.sum(w) - scale)
        out.append(("weight_sum_deviation", sum_dev, tolerance * scale,
                    "PASS" if sum_dev <= tolerance * scale else "FAIL"))
        ch_dev = float(np.max(np.abs(w - scale * report.p_estimated)))
        out.append(("max_channel_deviation", ch_dev, tolerance * scale,
                    "PASS" if ch_dev <= tolerance * scale else "FAIL"))
    out.append(("delta", report.delta, "", "INFO"))
    return out


def load_finished_run(run_dir, which="sliding"):
    """!
    @brief Rule, estimator and weights of a run directory written by cmd_simulate.
    @return (config, rule, estimator, final WeightVector, mean weights)
    """
    manifest = os.path.join(run_dir, "manifest.txt")
    h5_path = os.path.join(run_dir, "final_weights.h5")
    for path in (manifest, h5_path):
        if not os.path.isfile(path):
            raise RuntimeError("ERROR: missing artifact %s" % path)
    config = RunConfig(RunConfig.read_file(manifest))
    with h5py.File(h5_path, 'r') as h5f:
        rule = build_rule(config)
        rule = rule.with_kernel(rule.kernel.with_amplitude(float(h5f.attrs["epsilon"])))
        weights = WeightVector(h5f["final_weights"][:], float(h5f.attrs["norm_exponent"]))
        mean_weights = h5f["mean_weights"][:]
        group = "estimator/cumulative" if which == CUMULATIVE else "estimator/sliding"
        estimator = EstimatorState.read_h5(h5f, group)
    return config, rule, estimator, weights, mean_weights


def cmd_verify(config, comm=None, verbose=1):
    """!
    @brief Pass / fail report of the steady state constraints (verify.csv).
    Exit status 2 when any criterion fails.
    """
    config.validate("verify")
    which = config["verify.estimator"]
    tol = config["verify.tolerance"]
    if config["verify.from_dir"]:
        run_cfg, rule, est, weights, mean_w = load_finished_run(config["verify.from_dir"], which)
    else:
        run_cfg = config
        result = simulate(config, verbose=verbose)
        rule, est = result.rule, result.estimator(which)
        weights, mean_w = result.final_weights, result.mean_weights
    rows = verify_criteria(rule, est, weights, mean_w, tol)
    failed = any(r[3] == "FAIL" for r in rows)
    if is_root(comm):
        out_dir = _out_dir(config)
        manifest = manifest_line(run_cfg.config_hash(), run_cfg["run.seed"])
        write_csv(os.path.join(out_dir, "verify.csv"),
                  ["criterion", "measured", "tolerance", "status"],
                  [[r[0] for r in rows], [_fmt(r[1]) for r in rows], [_fmt(r[2]) for r in rows],
                   [r[3] for r in rows]], ["%s", "%s", "%s", "%s"], manifest)
        for r in rows:
            log_msg("%-26s %-24s %-10s %s" % (r[0], str(r[1]), str(r[2]), r[3]), verbose)
        log_msg("verify: %s" % ("FAIL" if failed else "PASS"), verbose)
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "replay": cmd_replay,
    "sweep": cmd_sweep_initial_weights,
    "oracle-scan": cmd_oracle_scan,
    "novelty": cmd_novelty,
    "verify": cmd_verify,
}
