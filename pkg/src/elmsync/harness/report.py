"""CSV export of error-probability curves and the companion plot script."""

import csv
from pathlib import Path

COLUMNS = [
    "scenario", "estimator", "label_scheme", "snr_db", "L_train", "L_test",
    "eta_train", "eta_test", "n_trials", "n_errors", "p_error", "ci_low", "ci_high", "master_seed",
]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def curve_records(curve):
    for row in curve.rows:
        yield {
            "scenario": curve.scenario,
            "estimator": curve.estimator,
            "label_scheme": curve.label_scheme,
            "snr_db": row.snr_db,
            "L_train": curve.L_train,
            "L_test": curve.L_test,
            "eta_train": curve.eta_train,
            "eta_test": curve.eta_test,
            "n_trials": row.n_trials,
            "n_errors": row.n_errors,
            "p_error": row.p_error,
            "ci_low": row.ci_low,
            "ci_high": row.ci_high,
            "master_seed": curve.master_seed,
        }


def write_curve_csv(curve, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        for rec in curve_records(curve):
            w.writerow({k: _fmt(v) for k, v in rec.items()})
    return path


def read_curve_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


PLOT_SCRIPT = '''\
"""Plot timing-error probability versus SNR for every {scenario} CSV in this directory.

Usage: python {name} [output.png]
"""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
fig, ax = plt.subplots(figsize=(6, 4.5))
for path in sorted(here.glob("{scenario}_*.csv")):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        continue
    snr = [float(r["snr_db"]) for r in rows]
    # zero counts cannot sit on a log axis; draw them at half a count
    p = [max(float(r["p_error"]), 0.5 / int(r["n_trials"])) for r in rows]
    ax.semilogy(snr, p, marker="o", label=path.stem[len("{scenario}_"):])
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("TS error probability")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=6, ncol=2)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "{scenario}_script.png", dpi=150)
'''


def write_plot_script(path, scenario: str) -> Path:
    path = Path(path)
    path.write_text(PLOT_SCRIPT.format(scenario=scenario, name=path.name))
    return path
