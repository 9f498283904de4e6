"""Optional PNG rendering of sweep tables (the CSV stays the primary output)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

XLABELS = {
    "convergence": "Transmit power (dBm)",
    "power_sweep": "Transmit power (dBm)",
    "eh_sweep": "Harvested power requirement (uW)",
    "elements_sweep": "Number of reflecting elements",
}


def plot_sweep(rows, path, kind):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    schemes = []
    for r in rows:
        if r["scheme"] not in schemes:
            schemes.append(r["scheme"])
    for s in schemes:
        sel = [r for r in rows if r["scheme"] == s]
        ax.plot([r["sweep_value"] for r in sel], [r["mean_secrecy_rate"] for r in sel],
                marker="o", label=s)
    ax.set_xlabel(XLABELS.get(kind, "sweep value"))
    ax.set_ylabel("Secrecy rate (bits/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_traces(rows, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    values = sorted({r["sweep_value"] for r in rows})
    for v in values:
        sel = [r for r in rows if r["sweep_value"] == v]
        ax.plot([r["iteration"] for r in sel], [r["mean_secrecy_rate"] for r in sel],
                marker=".", label=f"{v:g} dBm")
    ax.set_xlabel("Outer iteration")
    ax.set_ylabel("Secrecy rate (bits/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
