"""Figure rendering for error-probability curves."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 6.5,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.1,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

MARKERS = {"SC_corr": "s", "TS_Learn": "x", "Ref_onehot": "^", "Prop_T_mid": "o", "Prop_T_ISI-free": "d"}


def size(scale=1.0, ratio=(math.sqrt(5.0) - 1.0) / 2.0):
    width = 6.0 * scale
    return width, width * ratio


def _floor(row):
    # a zero count cannot sit on a log axis
    return max(row.p_error, 0.5 / row.n_trials)


def draw_curves(ax, curves, label=lambda c: c.name):
    for c in curves:
        ax.semilogy(c.snr_db, [_floor(r) for r in c.rows], marker=MARKERS.get(c.name, "o"), label=label(c))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel(r"$P_{e,\mathrm{TS}}$")
    ax.legend(ncol=2)


def _gen_label(scenario):
    if scenario == "genL":
        return lambda c: f"SC_corr, Lte={c.L_test}" if c.estimator == "sc_corr" else f"Ltr={c.L_train}, Lte={c.L_test}"
    return lambda c: (
        f"SC_corr, ete={c.eta_test:g}" if c.estimator == "sc_corr" else f"etr={c.eta_train:g}, ete={c.eta_test:g}"
    )


def plot_scenario(curves, scenario, path):
    with plt.rc_context(STYLE):
        if scenario == "fig2":
            fig, ax = plt.subplots(figsize=size(0.8))
            draw_curves(ax, curves)
        else:
            fig, axes = plt.subplots(1, 2, figsize=size(1.6, 0.45), sharey=True)
            label = _gen_label(scenario)
            for ax, scheme in zip(axes, ("midpoint", "isi_free")):
                subset = [c for c in curves if c.label_scheme == scheme or c.estimator == "sc_corr"]
                draw_curves(ax, subset, label)
                ax.set_title(subset[-1].name if subset else scheme)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
