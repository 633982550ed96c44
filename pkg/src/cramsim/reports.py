"""Result emitters: delimited data files and companion figures.

Every table goes out as a UTF-8 CSV with a header row and '.' decimal
separators; figures are rendered next to the CSVs as PNG files from the
same data.  Numbers are formatted with repr-stable %.12g so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import logic


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path, data, with_timestamp: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if with_timestamp:
        data = {**data, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def gate_sweep_rows(sweep):
    """Long-format rows for one gate sweep: per-state levels and accuracy."""
    kind = logic.gate_kind(sweep.gate)
    rows = []
    n_states = 2**kind.arity
    for i, v in enumerate(sweep.v_logic):
        for s in range(n_states):
            state = logic.state_string(s, kind.arity)
            rows.append((sweep.gate, float(v), sweep.pulse_width,
                         "dout", state, float(sweep.dout[s, i])))
        for s in range(n_states):
            state = logic.state_string(s, kind.arity)
            rows.append((sweep.gate, float(v), sweep.pulse_width,
                         "accuracy", state, float(1.0 - sweep.error[s, i])))
        rows.append((sweep.gate, float(v), sweep.pulse_width,
                     "accuracy", "mean", float(1.0 - sweep.mean_error[i])))
        rows.append((sweep.gate, float(v), sweep.pulse_width,
                     "accuracy", "worst", float(1.0 - sweep.worst_error[i])))
    return rows


GATE_SWEEP_HEADER = ("gate", "v_logic", "pulse_width", "quantity", "state", "value")


def plot_gate_sweep(sweep, path) -> Path:
    """Mean output level and accuracy against the drive voltage."""
    kind = logic.gate_kind(sweep.gate)
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.0, 7.0), sharex=True)
    v = np.abs(sweep.v_logic)
    for s in range(2**kind.arity):
        ax0.plot(v, sweep.dout[s], label=logic.state_string(s, kind.arity), lw=1.0)
    ax0.set_ylabel("mean output level")
    ax0.set_title(f"{sweep.gate}, pulse {sweep.pulse_width:g} s")
    if kind.arity <= 3:
        ax0.legend(fontsize=8, title="input state")
    ax1.plot(v, 1.0 - sweep.mean_error, label="mean", lw=1.2)
    ax1.plot(v, 1.0 - sweep.worst_error, label="worst", lw=1.2, ls="--")
    ax1.set_xlabel("|drive voltage| (V)")
    ax1.set_ylabel("accuracy")
    ax1.set_ylim(-0.02, 1.02)
    ax1.legend(fontsize=8)
    for ax in (ax0, ax1):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_accuracy_maps(maps: dict[str, "object"], path) -> Path:
    """Heatmaps of per-input-state, per-port accuracy for each design."""
    fig, axes = plt.subplots(1, len(maps), figsize=(5.0 * len(maps), 4.2),
                             squeeze=False)
    for ax, (name, amap) in zip(axes[0], maps.items()):
        states = sorted({s for s, _, _ in amap.rows})
        ports = []
        for _, p, _ in amap.rows:
            if p not in ports:
                ports.append(p)
        grid = np.zeros((len(ports), len(states)))
        lookup = {(s, p): a for s, p, a in amap.rows}
        for i, p in enumerate(ports):
            for j, s in enumerate(states):
                grid[i, j] = lookup[(s, p)]
        im = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="RdBu", aspect="auto")
        ax.set_xticks(range(len(states)), states, rotation=90, fontsize=8)
        ax.set_yticks(range(len(ports)), ports, fontsize=8)
        for i in range(len(ports)):
            for j in range(len(states)):
                ax.text(j, i, f"{grid[i, j] * 100:.0f}", ha="center",
                        va="center", fontsize=7)
        ax.set_title(f"{name} (overall {amap.overall * 100:.1f}%)", fontsize=10)
        ax.set_xlabel("input state")
    fig.colorbar(im, ax=axes[0], shrink=0.85, label="accuracy")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return Path(path)


def plot_min_error(rows, path) -> Path:
    """Minimum gate error against TMR, one curve per pulse width."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    pulses = sorted({r["pulse_width"] for r in rows}, reverse=True)
    for t_p in pulses:
        pts = sorted(
            (r["tmr_percent"], r["min_error"]) for r in rows
            if r["pulse_width"] == t_p
        )
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", ms=3, lw=1.0, label=f"{t_p:g} s")
    ax.set_xlabel("TMR ratio (%)")
    ax.set_ylabel("minimum gate error rate")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8, title="pulse width")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_ned(rows, path) -> Path:
    """NED against TMR, one curve per circuit."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    circuits = []
    for r in rows:
        if r["circuit"] not in circuits:
            circuits.append(r["circuit"])
    for name in circuits:
        pts = sorted(
            (r["tmr_percent"], r["ned"]) for r in rows if r["circuit"] == name
        )
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-12) for p in pts],
                    marker="s", ms=3, lw=1.0, label=name)
    ax.set_xlabel("TMR ratio (%)")
    ax.set_ylabel("NED")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
