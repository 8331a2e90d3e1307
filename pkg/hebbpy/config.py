##
# @brief Run configuration: a flat table of dotted keys.
#
# Values come from (lowest to highest precedence) DEFAULTS, a key=value
# config file and --section.key command line flags.  The resolved table
# fully determines a run.
##
from __future__ import print_function, division
from six import iteritems
import argparse
import hashlib
import os
import re
import numpy as np
from hebbpy.utils.idx_reader import mnist_paths

DEFAULTS = {
    "neuron.theta": 0.94,
    "neuron.decay": 0.0,
    "neuron.n_channels": 10,

    "rule.kind": "hebbian",
    "rule.epsilon": 0.0005,
    "rule.epsilon_random": False,
    "rule.kernel": "constant",
    "rule.time_constant": 0.02,
    "rule.window": 0.15,
    "rule.norm_exponent": 1.0,
    "rule.delta": 0.01,
    "rule.frozen": False,
    "rule.adaptive": False,
    "rule.adaptive_cap": 0.001,

    "inputs.kind": "poisson",
    "inputs.rates": "0.9",
    "inputs.rate_mean": 0.9,
    "inputs.rate_sd": 0.15,
    "inputs.rate_floor": 0.01,
    "inputs.redraw_times": "",
    "inputs.combined_rate": 1.8,
    "inputs.bias": "0.5,0.5",
    "inputs.replay": "",
    "inputs.mnist.row": 14,
    "inputs.mnist.rate": 25.2,
    "inputs.mnist.schedule": "5:333333,1:333333,0:333334",
    "inputs.mnist.images": "",
    "inputs.mnist.labels": "",

    "run.duration": 300000.0,
    "run.seed": 0,
    "run.initial_weights": "uniform",
    "run.snapshot_cadence": 1000.0,
    "run.input_log_window": -1,
    "run.output_dir": "hebbpy_out",

    "estimator.window_mode": "sliding",
    "estimator.window_length": 5000,
    "estimator.decay_factor": 0.999,
    "estimator.delta_cadence": 100.0,

    "novelty.alert_factor": 3.0,
    "novelty.history": 50,
    "novelty.burn_in": 0.0,

    "sweep.w1_start": 0.5,
    "sweep.w1_stop": 1.0,
    "sweep.w1_step": 0.02,
    "sweep.epsilons": "0.0005",
    "sweep.repeats": 1,
    "sweep.window": 0.0,

    "oracle.decays": "0,0.1,0.2",
    "oracle.resolution": 101,
    "oracle.max_sequence_length": 13,
    "oracle.max_length_cap": 20,
    "oracle.rate": 1.8,
    "oracle.bias": 0.5,
    "oracle.seed": 0,
    "oracle.unresolved": "raise",
    "oracle.check_monte_carlo": 0,
    "oracle.monotone_tolerance": 0.02,

    "verify.tolerance": 0.05,
    "verify.estimator": "sliding",
    "verify.from_dir": "",
}

RULE_KINDS = ("hebbian", "stdp", "decay")
KERNELS = ("constant", "exponential")
INPUT_KINDS = ("poisson", "gaussian", "biased", "redraw", "mnist", "replay")
WINDOW_MODES = ("cumulative", "sliding", "exponential")

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")
_EPS_RANDOM = re.compile(r"^uniform\((.+)\)$")
_WEIGHTS_RANDOM = re.compile(r"^random(?:\(\s*(\d+)\s*\))?$")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        msg = "ERROR: invalid configuration:\n" + "\n".join("  - " + p for p in self.problems)
        super(ConfigError, self).__init__(msg)


def _convert(key, raw):
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        if str(raw).lower() in _TRUE:
            return True
        if str(raw).lower() in _FALSE:
            return False
        raise ValueError("%s: expected a boolean, got %r" % (key, raw))
    if isinstance(default, int):
        try:
            return int(raw)
        except (TypeError, ValueError):
            raise ValueError("%s: expected an integer, got %r" % (key, raw))
    if isinstance(default, float):
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ValueError("%s: expected a number, got %r" % (key, raw))
    return str(raw)


def parse_floats(text):
    """! @brief "0.9, 0.8" -> [0.9, 0.8] """
    text = str(text).strip()
    if not text:
        return []
    return [float(tok) for tok in text.split(",")]


def parse_epsilon(token):
    """!
    @brief "0.0005" -> (0.0005, False), "uniform(0.1)" -> (0.1, True)
    """
    token = token.strip()
    m = _EPS_RANDOM.match(token)
    if m:
        return float(m.group(1)), True
    return float(token), False


def parse_random_weights(token):
    """!
    @brief "random" -> (True, None), "random(7)" -> (True, 7), anything else -> (False, None)
    """
    m = _WEIGHTS_RANDOM.match(token.strip())
    if not m:
        return False, None
    return True, (int(m.group(1)) if m.group(1) is not None else None)


def parse_schedule(text):
    """! @brief "5:333333,1:333333" -> [(5, 333333.0), (1, 333333.0)] """
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        digit, duration = tok.split(":")
        out.append((int(digit), float(duration)))
    return out


class RunConfig(object):
    """!
    @brief Resolved run configuration.
    """
    def __init__(self, values=None):
        self._values = dict(DEFAULTS)
        self._problems = []
        if values:
            self.update(values)

    def update(self, values):
        for key, raw in iteritems(values):
            if key not in DEFAULTS:
                self._problems.append("unknown key %r" % key)
                continue
            try:
                self._values[key] = _convert(key, raw)
            except ValueError as e:
                self._problems.append(str(e))
        return self

    def replace(self, values):
        cfg = RunConfig(self._values)
        cfg._problems = list(self._problems)
        return cfg.update(values)

    @staticmethod
    def read_file(path):
        """!
        @brief key=value lines; blank lines and # comments are ignored.
        """
        values = {}
        with open(path, 'r') as f:
            for n, line in enumerate(f, 1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise ConfigError(["%s:%d: expected key=value, got %r" % (path, n, line)])
                key, val = line.split('=', 1)
                values[key.strip()] = val.strip()
        return values

    @classmethod
    def from_file(cls, path, overrides=None):
        cfg = cls(cls.read_file(path))
        if overrides:
            cfg.update(overrides)
        return cfg

    def __getitem__(self, key):
        return self._values[key]

    def get(self, key, default=None):
        return self._values.get(key, default)

    def floats(self, key):
        return parse_floats(self._values[key])

    def channel_rates(self):
        """! @brief inputs.rates broadcast to neuron.n_channels """
        rates = self.floats("inputs.rates")
        if len(rates) == 1:
            rates = rates * self["neuron.n_channels"]
        return rates

    def epsilons(self):
        return [(tok.strip(), parse_epsilon(tok)) for tok in self["sweep.epsilons"].split(",")
                if tok.strip()]

    def schedule(self):
        return parse_schedule(self["inputs.mnist.schedule"])

    def mnist_files(self):
        return mnist_paths(None, self["inputs.mnist.images"], self["inputs.mnist.labels"])

    def validate(self, command=None):
        """!
        @brief Collect every problem of the configuration.
        @raise ConfigError listing all problems
        """
        p = list(self._problems)
        v = self._values
        n = v["neuron.n_channels"]

        def check(cond, msg):
            if not cond:
                p.append(msg)

        check(v["neuron.theta"] > 0.0, "neuron.theta must be > 0")
        check(v["neuron.decay"] >= 0.0, "neuron.decay must be >= 0")
        check(n >= 1, "neuron.n_channels must be >= 1")

        check(v["rule.kind"] in RULE_KINDS, "rule.kind must be one of %s" % str(RULE_KINDS))
        check(v["rule.kernel"] in KERNELS, "rule.kernel must be one of %s" % str(KERNELS))
        check(v["rule.epsilon"] >= 0.0, "rule.epsilon must be >= 0")
        check(v["rule.window"] >= 0.0, "rule.window must be >= 0")
        check(v["rule.norm_exponent"] >= 1.0, "rule.norm_exponent must be >= 1")
        check(v["rule.time_constant"] > 0.0, "rule.time_constant must be > 0")
        check(v["rule.adaptive_cap"] >= 0.0, "rule.adaptive_cap must be >= 0")
        if v["rule.kind"] == "decay":
            check(0.0 < v["rule.delta"] < 1.0, "rule.delta must be in (0, 1)")
            check(v["rule.epsilon"] > 0.0, "rule.epsilon must be > 0 for the decay rule")

        kind = v["inputs.kind"]
        check(kind in INPUT_KINDS, "inputs.kind must be one of %s" % str(INPUT_KINDS))
        try:
            rates = self.channel_rates()
            if kind == "poisson":
                check(len(rates) == n, "inputs.rates needs 1 or %d values, got %d" % (n, len(rates)))
                check(all(r > 0.0 for r in rates), "inputs.rates must be > 0")
        except ValueError:
            p.append("inputs.rates is not a list of numbers")
        if kind in ("gaussian", "redraw"):
            check(v["inputs.rate_sd"] >= 0.0, "inputs.rate_sd must be >= 0")
            check(v["inputs.rate_floor"] > 0.0, "inputs.rate_floor must be > 0")
        if kind == "redraw":
            try:
                self.floats("inputs.redraw_times")
            except ValueError:
                p.append("inputs.redraw_times is not a list of numbers")
        if kind == "biased":
            check(v["inputs.combined_rate"] > 0.0, "inputs.combined_rate must be > 0")
            try:
                bias = self.floats("inputs.bias")
                check(len(bias) == n, "inputs.bias needs %d values" % n)
                check(all(b >= 0.0 for b in bias) and abs(sum(bias) - 1.0) <= 1e-12,
                      "inputs.bias must be >= 0 and sum to 1")
            except ValueError:
                p.append("inputs.bias is not a list of numbers")
        if kind == "mnist":
            check(n == 28, "neuron.n_channels must be 28 for MNIST input")
            check(0 <= v["inputs.mnist.row"] < 28, "inputs.mnist.row must be in [0, 28)")
            check(v["inputs.mnist.rate"] > 0.0, "inputs.mnist.rate must be > 0")
            try:
                sched = self.schedule()
                check(len(sched) >= 1, "inputs.mnist.schedule is empty")
                check(all(0 <= d <= 9 and t >= 0.0 for d, t in sched),
                      "inputs.mnist.schedule needs digit:duration pairs with digits in [0, 9]")
            except ValueError:
                p.append("inputs.mnist.schedule must look like 5:333333,1:333333")
            images, labels = self.mnist_files()
            check(os.path.isfile(images), "MNIST image file not found: %s" % images)
            check(os.path.isfile(labels), "MNIST label file not found: %s" % labels)
        if kind == "replay":
            check(os.path.isfile(v["inputs.replay"]),
                  "inputs.replay file not found: %r" % v["inputs.replay"])

        check(v["run.duration"] >= 0.0, "run.duration must be >= 0")
        check(v["run.snapshot_cadence"] >= 0.0, "run.snapshot_cadence must be >= 0")
        iw = v["run.initial_weights"].strip()
        if iw != "uniform" and not parse_random_weights(iw)[0]:
            try:
                w = parse_floats(iw)
                check(len(w) == n, "run.initial_weights needs %d values" % n)
                check(all(x >= 0.0 for x in w) and sum(w) > 0.0,
                      "run.initial_weights must be >= 0 and not all zero")
            except ValueError:
                p.append("run.initial_weights must be uniform, random, random(seed) or a list of numbers")
        else:
            seed = parse_random_weights(iw)[1] if iw != "uniform" else None
            check(seed is None or seed < 2 ** 32, "run.initial_weights seed must be < 2**32")

        check(v["estimator.window_mode"] in WINDOW_MODES,
              "estimator.window_mode must be one of %s" % str(WINDOW_MODES))
        check(v["estimator.window_length"] >= 1, "estimator.window_length must be >= 1")
        check(0.0 < v["estimator.decay_factor"] < 1.0, "estimator.decay_factor must be in (0, 1)")
        check(v["estimator.delta_cadence"] > 0.0, "estimator.delta_cadence must be > 0")

        check(v["novelty.alert_factor"] > 0.0, "novelty.alert_factor must be > 0")
        check(v["novelty.history"] >= 1, "novelty.history must be >= 1")

        if command == "sweep":
            check(n == 2, "sweep needs neuron.n_channels = 2")
            check(v["sweep.w1_step"] > 0.0, "sweep.w1_step must be > 0")
            check(0.0 <= v["sweep.w1_start"] <= v["sweep.w1_stop"] <= 1.0,
                  "sweep needs 0 <= w1_start <= w1_stop <= 1")
            check(v["sweep.repeats"] >= 1, "sweep.repeats must be >= 1")
            check(v["sweep.window"] >= 0.0, "sweep.window must be >= 0")
            try:
                eps = self.epsilons()
                check(len(eps) >= 1, "sweep.epsilons is empty")
                check(all(e[1][0] >= 0.0 for e in eps), "sweep.epsilons must be >= 0")
            except ValueError:
                p.append("sweep.epsilons must look like 0.0005,uniform(0.1)")
        if command == "oracle-scan":
            check(v["oracle.resolution"] >= 2, "oracle.resolution must be >= 2")
            check(1 <= v["oracle.max_sequence_length"] <= v["oracle.max_length_cap"] <= 30,
                  "oracle needs 1 <= max_sequence_length <= max_length_cap <= 30")
            check(v["oracle.rate"] > 0.0, "oracle.rate must be > 0")
            check(0.0 < v["oracle.bias"] < 1.0, "oracle.bias must be in (0, 1)")
            check(v["oracle.unresolved"] in ("raise", "drop"), "oracle.unresolved must be raise or drop")
            check(v["oracle.monotone_tolerance"] >= 0.0, "oracle.monotone_tolerance must be >= 0")
            try:
                check(all(d >= 0.0 for d in self.floats("oracle.decays")), "oracle.decays must be >= 0")
            except ValueError:
                p.append("oracle.decays is not a list of numbers")
        if command == "novelty":
            if kind == "redraw":
                try:
                    check(len(self.floats("inputs.redraw_times")) >= 1,
                          "novelty needs at least one redraw time (two phases)")
                except ValueError:
                    pass
            elif kind == "mnist":
                try:
                    check(len(self.schedule()) >= 2, "novelty needs a schedule with >= 2 phases")
                except ValueError:
                    pass
            else:
                p.append("novelty needs inputs.kind redraw or mnist")
        if command == "verify":
            check(v["verify.tolerance"] > 0.0, "verify.tolerance must be > 0")
            check(v["verify.estimator"] in ("sliding", "cumulative"),
                  "verify.estimator must be sliding or cumulative")
            if v["verify.from_dir"]:
                check(os.path.isdir(v["verify.from_dir"]),
                      "verify.from_dir not found: %s" % v["verify.from_dir"])
        if p:
            raise ConfigError(p)
        return self

    def to_text(self):
        """! @brief canonical key=value rendering, sorted by key """
        lines = []
        for key in sorted(self._values):
            val = self._values[key]
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            lines.append("%s=%s" % (key, val))
        return "\n".join(lines) + "\n"

    def config_hash(self):
        return hashlib.sha1(self.to_text().encode("utf-8")).hexdigest()

    def manifest(self):
        return "# hebbpy manifest config_hash=%s seed=%d\n%s" % \
            (self.config_hash(), self["run.seed"], self.to_text())

    def as_dict(self):
        return dict(self._values)


def build_parser(commands):
    """!
    @brief Command line parser: a sub command, an optional config file and
    one --section.key flag per configuration key.
    """
    parser = argparse.ArgumentParser(
        prog="hebbpy", description="Hebbian / STDP learning in a spiking neuron")
    parser.add_argument('command', choices=commands, help="what to run")
    parser.add_argument('-c', '--config', type=str, default=None, help="key=value config file")
    parser.add_argument('-v', '--verbose', type=int, default=1, help="verbosity")
    for key in sorted(DEFAULTS):
        parser.add_argument('--' + key, dest=key, type=str, default=None,
                            help="default: %s" % str(DEFAULTS[key]))
    return parser


def config_from_args(args):
    """!
    @brief RunConfig from parsed command line args: file first, then flags.
    """
    values = {}
    if args.config:
        values.update(RunConfig.read_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return RunConfig(values)


def initial_weights(config, rng):
    """!
    @brief Initial weight array from run.initial_weights.
    "random" draws U(0, 1) weights from rng, "random(seed)" from
    RandomState(seed), independent of run.seed.
    """
    n = config["neuron.n_channels"]
    spec = config["run.initial_weights"].strip()
    if spec == "uniform":
        return np.ones(n)
    is_random, seed = parse_random_weights(spec)
    if is_random:
        if seed is not None:
            rng = np.random.RandomState(seed)
        return rng.uniform(0.0, 1.0, size=n)
    return np.asarray(parse_floats(spec))
