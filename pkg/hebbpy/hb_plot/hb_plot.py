##
# @brief Figures from the csv artifacts of hebbpy runs
##
from __future__ import print_function, division
import glob
import os
import re
import matplotlib.pyplot as pl
import numpy as np
from hebbpy.trace import read_csv


def _columns(path):
    """! @brief csv file -> dict of column name -> array (str columns kept as str) """
    header, rows = read_csv(path)
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        try:
            cols[name] = np.array(vals, dtype=float)
        except ValueError:
            cols[name] = np.array(vals)
    return cols


def plot_p_curves(curve_files, savefig='p_curve.png'):
    """!
    @brief p_1(w_1) per membrane decay against the diagonal, fixed points marked.
    @param curve_files  list of p_curve_d*.csv paths
    """
    pl.clf()
    fig, ax = pl.subplots(1, 1, figsize=(6, 6))
    ax.plot([0, 1], [0, 1], c='k', ls='--', lw=0.8)
    for path in sorted(curve_files):
        cols = _columns(path)
        label = os.path.basename(path)[len("p_curve_"):-len(".csv")]
        line, = ax.plot(cols["w_1"], cols["p_1"], label=label)
        marks = cols["classification"] != "none"
        ax.scatter(cols["w_1"][marks], cols["p_1"][marks], c=line.get_color(), s=15)
    ax.set_xlabel(r"$w_1$")
    ax.set_ylabel(r"$p_1$")
    ax.legend()
    fig.savefig(savefig)
    pl.close(fig)


def plot_sweep(sweep_file, savefig='sweep.png'):
    """!
    @brief Final against initial w_1, one series per learning rate.
    """
    cols = _columns(sweep_file)
    pl.clf()
    fig, ax = pl.subplots(1, 1, figsize=(6, 4))
    for eps in np.unique(cols["epsilon"].astype(str)):
        sel = cols["epsilon"].astype(str) == eps
        ax.scatter(cols["w1_init"][sel], cols["w1_final"][sel], s=12, label=r"$\epsilon$=%s" % eps)
    ax.set_xlabel(r"initial $w_1$")
    ax.set_ylabel(r"final $w_1$")
    ax.legend()
    fig.savefig(savefig)
    pl.close(fig)


def plot_delta(delta_file, savefig='delta.png', alert_file=None):
    cols = _columns(delta_file)
    pl.clf()
    fig, axes = pl.subplots(2, 1, sharex=True, figsize=(8, 6))
    axes[0].plot(cols["time"], cols["delta"], lw=0.6)
    axes[0].set_ylabel(r"$\Delta$")
    axes[0].set_yscale('log')
    if alert_file is not None and os.path.isfile(alert_file):
        alerts = _columns(alert_file)
        for t in np.atleast_1d(alerts.get("time", [])):
            axes[0].axvline(t, c='r', alpha=0.3, lw=0.6)
    axes[1].plot(cols["time"], cols["epsilon"], lw=0.6)
    axes[1].set_ylabel(r"$\epsilon$")
    axes[1].set_xlabel("time")
    fig.savefig(savefig)
    pl.close(fig)


def plot_constraint_scatter(constraints_file, savefig='constraints.png'):
    """!
    @brief Constraint left hand side against normalized weights at the last sample.
    """
    cols = _columns(constraints_file)
    if cols["time"].size == 0:
        return
    last = cols["time"] == cols["time"][-1]
    pl.clf()
    fig, ax = pl.subplots(1, 1, figsize=(5, 5))
    hi = max(np.max(cols["L"][last]), np.max(cols["w_norm"][last])) * 1.1
    ax.plot([0, hi], [0, hi], c='k', ls='--', lw=0.8)
    ax.scatter(cols["w_norm"][last], cols["L"][last], s=15)
    ax.set_xlabel(r"$w_i / \sum_j w_j$")
    ax.set_ylabel(r"$L_i$")
    fig.savefig(savefig)
    pl.close(fig)


def plot_weights(weights_file, savefig='weights.png'):
    cols = _columns(weights_file)
    pl.clf()
    fig, ax = pl.subplots(1, 1, figsize=(8, 4))
    names = sorted((k for k in cols if re.match(r"w_\d+$", k)), key=lambda k: int(k[2:]))
    for name in names:
        ax.plot(cols["time"], cols[name], lw=0.8, label=name)
    ax.set_xlabel("time")
    ax.set_ylabel("weight")
    fig.savefig(savefig)
    pl.close(fig)


def plot_dir(directory):
    """!
    @brief Render every known csv artifact of a run directory to png.
    @return list of written files
    """
    out = []

    def path(name):
        return os.path.join(directory, name)

    curves = glob.glob(path("p_curve_d*.csv"))
    if curves:
        plot_p_curves(curves, path("p_curve.png"))
        out.append(path("p_curve.png"))
    if os.path.isfile(path("sweep.csv")):
        plot_sweep(path("sweep.csv"), path("sweep.png"))
        out.append(path("sweep.png"))
    if os.path.isfile(path("delta.csv")):
        plot_delta(path("delta.csv"), path("delta.png"), path("alerts.csv"))
        out.append(path("delta.png"))
    if os.path.isfile(path("constraints.csv")):
        plot_constraint_scatter(path("constraints.csv"), path("constraints.png"))
        out.append(path("constraints.png"))
    if os.path.isfile(path("weights.csv")):
        plot_weights(path("weights.csv"), path("weights.png"))
        out.append(path("weights.png"))
    return [f for f in out if os.path.isfile(f)]
