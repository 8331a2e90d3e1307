from __future__ import print_function, division
from collections import deque
import h5py
import numpy as np


def manifest_line(config_hash, seed):
    return "# hebbpy config_hash=%s seed=%s\n" % (config_hash, seed)


def write_csv(path, header, columns, fmts, manifest=None):
    """!
    @brief Write column data to a csv file.
    @param path  str output file
    @param header  list of column names
    @param columns  list of equal length sequences
    @param fmts  list of printf style formats, one per column
    @param manifest  str commented first line (see manifest_line)
    """
    assert len(header) == len(columns) == len(fmts)
    row_fmt = ",".join(fmts) + "\n"
    with open(path, 'w') as f:
        if manifest:
            f.write(manifest)
        f.write(",".join(header) + "\n")
        for row in zip(*columns):
            f.write(row_fmt % row)


def read_csv(path):
    """!
    @brief Read a csv written by write_csv.
    @return (header list, list of row lists of str)
    """
    header, rows = None, []
    with open(path, 'r') as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if header is None:
                header = line.split(',')
            else:
                rows.append(line.split(','))
    if header is None:
        raise RuntimeError("ERROR: %s has no header row" % path)
    return header, rows


def _write_dataset(h5f, name, data):
    if name in h5f:
        del h5f[name]
    h5f.create_dataset(name, data=np.asarray(data), compression="gzip")


class RunTrace(object):
    """!
    @brief Record of one neuron run: output spikes, the input log (full or a
    bounded recent window) and weight snapshots.
    The trace is filled by neuron.run() and read only afterwards.
    """
    def __init__(self, n_channels, input_log_window=None):
        assert n_channels >= 0
        self._n_channels = int(n_channels)
        self.input_log_window = input_log_window
        if input_log_window is None:
            self._in_t, self._in_ch = [], []
        else:
            assert input_log_window >= 0
            self._in_t = deque(maxlen=int(input_log_window))
            self._in_ch = deque(maxlen=int(input_log_window))
        self.n_inputs = 0
        self._out_t, self._out_ch = [], []
        self._snap_t, self._snap_w = [], []
        self.final_state = None
        self.final_weights = None
        self._frozen = False

    def append_input(self, t, channel):
        self._in_t.append(t)
        self._in_ch.append(channel)
        self.n_inputs += 1

    def append_output(self, output):
        self._out_t.append(output.time)
        self._out_ch.append(output.triggering_channel)

    def append_snapshot(self, t, w):
        self._snap_t.append(float(t))
        self._snap_w.append(list(w))

    def replace_last_snapshot(self, w):
        self._snap_w[-1] = list(w)

    def finalize(self, final_state, final_weights):
        """!
        @brief Convert the logs to read only arrays.
        """
        def ro(a, dtype):
            a = np.array(a, dtype=dtype)
            a.flags.writeable = False
            return a
        self._in_t = ro(list(self._in_t), float)
        self._in_ch = ro(list(self._in_ch), np.int64)
        self._out_t = ro(self._out_t, float)
        self._out_ch = ro(self._out_ch, np.int64)
        self._snap_t = ro(self._snap_t, float)
        self._snap_w = ro(self._snap_w, float).reshape(-1, self._n_channels)
        self.final_state = final_state
        self.final_weights = final_weights
        self._frozen = True

    def write_spikes_csv(self, path, manifest=None):
        """!
        @brief spikes.csv: time, channel, kind in {input, output}.
        An output row follows the input row that triggered it.
        """
        times = np.concatenate((self.input_times, self.output_times))
        channels = np.concatenate((self.input_channels, self.output_channels))
        kind_key = np.concatenate((np.zeros(self.input_times.size, dtype=int),
                                   np.ones(self.output_times.size, dtype=int)))
        order = np.lexsort((kind_key, times))
        kinds = np.array(["input", "output"])[kind_key[order]]
        write_csv(path, ["time", "channel", "kind"],
                  [times[order].tolist(), channels[order].tolist(), kinds.tolist()],
                  ["%.17g", "%d", "%s"], manifest)

    def write_weights_csv(self, path, manifest=None):
        header = ["time"] + ["w_%d" % i for i in range(self._n_channels)]
        columns = [self.snapshot_times.tolist()] + \
            [self.snapshots[:, i].tolist() for i in range(self._n_channels)]
        write_csv(path, header, columns, ["%.17g"] * len(header), manifest)

    def write_h5(self, h5_file, group="trace"):
        """!
        @brief Write trace to h5 file
        @param h5_file either str or h5py.File instance
        """
        if isinstance(h5_file, str):
            with h5py.File(h5_file, 'a') as h5f:
                self._write_group(h5f, group)
        elif isinstance(h5_file, h5py.File):
            self._write_group(h5_file, group)
        else:
            raise RuntimeError("ERROR: h5_file must be a path or h5py.File")

    def _write_group(self, h5f, group):
        _write_dataset(h5f, group + "/input_times", self.input_times)
        _write_dataset(h5f, group + "/input_channels", self.input_channels)
        _write_dataset(h5f, group + "/output_times", self.output_times)
        _write_dataset(h5f, group + "/output_channels", self.output_channels)
        _write_dataset(h5f, group + "/snapshot_times", self.snapshot_times)
        _write_dataset(h5f, group + "/snapshots", self.snapshots)
        h5f[group].attrs["n_channels"] = self._n_channels
        h5f[group].attrs["n_inputs"] = self.n_inputs

    @classmethod
    def read_h5(cls, h5_file, group="trace"):
        """!
        @brief Load a trace written by write_h5.
        """
        if isinstance(h5_file, str):
            with h5py.File(h5_file, 'r') as h5f:
                return cls._read_group(h5f, group)
        elif isinstance(h5_file, h5py.File):
            return cls._read_group(h5_file, group)
        else:
            raise RuntimeError("ERROR: h5_file must be a path or h5py.File")

    @classmethod
    def _read_group(cls, h5f, group):
        g = h5f[group]
        trace = cls(int(g.attrs["n_channels"]))
        trace._in_t = g["input_times"][:].tolist()
        trace._in_ch = g["input_channels"][:].tolist()
        trace._out_t = g["output_times"][:].tolist()
        trace._out_ch = g["output_channels"][:].tolist()
        trace._snap_t = g["snapshot_times"][:].tolist()
        trace._snap_w = g["snapshots"][:].tolist()
        trace.n_inputs = int(g.attrs["n_inputs"])
        final_w = np.array(trace._snap_w[-1]) if trace._snap_w else None
        trace.finalize(None, final_w)
        return trace

    def __getitem__(self, get_index):
        """!
        @brief Slice the weight snapshots
        """
        if isinstance(get_index, slice):
            return self.snapshots[get_index]
        else:
            return self.snapshots[get_index, :]

    @property
    def n_channels(self):
        return self._n_channels

    @property
    def n_outputs(self):
        return len(self._out_t)

    @property
    def input_times(self):
        return np.asarray(self._in_t, dtype=float)

    @property
    def input_channels(self):
        return np.asarray(self._in_ch, dtype=np.int64)

    @property
    def output_times(self):
        return np.asarray(self._out_t, dtype=float)

    @property
    def output_channels(self):
        return np.asarray(self._out_ch, dtype=np.int64)

    @property
    def snapshot_times(self):
        return np.asarray(self._snap_t, dtype=float)

    @property
    def snapshots(self):
        return np.asarray(self._snap_w, dtype=float).reshape(-1, self._n_channels)
