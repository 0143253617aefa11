"""The four figure kinds rendered from run artifacts.

Strictly post-hoc: figures are pure functions of the input files, rendered
with a pinned style and no timestamps, so identical inputs yield identical
image bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .formats import FormatError, read_contour, read_diagnostics, \
    read_snapshot, read_summary

KINDS = ("energy-decay", "besov-spectrum", "patch-evolution", "constant-ledger")

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


@dataclass
class PlotSpec:
    kind: str
    inputs: list
    output: str
    spectrum_s: float = 0.0       # shell weight exponent for besov-spectrum
    spectrum_p: float = 2.0       # integrability index for the shell norms
    max_contours: int = 8

    def validate(self):
        if self.kind not in KINDS:
            raise FormatError(f"unknown plot kind {self.kind!r}")
        if not self.inputs:
            raise FormatError("no input files given")
        return self


def _save(fig, output):
    # empty metadata keeps the PNG byte-stable across library versions
    fig.savefig(output, format="png", metadata={"Software": None})
    plt.close(fig)


def _smoothstep(x):
    x = np.asarray(x, dtype=float)

    def f(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    fx = f(x)
    return fx / (fx + f(1.0 - x))


def _shell_weight(j, kmag, ref_freq):
    """Annular dyadic profile supported in [3/4, 8/3] around scale 2^j."""
    rho = kmag / (ref_freq * 2.0 ** j)
    chi = lambda r: 1.0 - _smoothstep((r - 0.75) / (4.0 / 3.0 - 0.75))
    return chi(rho / 2.0) - chi(rho)


def plot_energy_decay(spec: PlotSpec):
    _, rows = read_diagnostics(spec.inputs[0])
    t = np.array([r["t"] for r in rows])
    energy = np.array([r["energy_l2"] for r in rows])
    diss = np.array([r["dissipation_cum"] for r in rows])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, energy, label="|u(t)|^2", color="tab:blue")
        if len(energy):
            ax.plot(t, energy[0] - diss, "--",
                    label="E(0) - cumulative dissipation", color="tab:orange")
        ax.set_xlabel("t")
        ax.set_ylabel("energy")
        ax.set_title("energy decay vs dissipation balance")
        ax.legend(loc="upper right")
        _save(fig, spec.output)


def plot_besov_spectrum(spec: PlotSpec):
    snap = read_snapshot(spec.inputs[0])
    missing = [k for k in ("u1", "u2") if k not in snap.fields]
    if missing:
        raise FormatError(
            f"{spec.inputs[0]}: snapshot lacks velocity fields {missing}")
    n = snap.n
    ref = 2.0 * np.pi / snap.box_length
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=snap.box_length / n)
    kx, ky = np.meshgrid(k1, k1, indexing="ij")
    kmag = np.hypot(kx, ky)
    h1 = np.fft.fft2(snap.fields["u1"])
    h2 = np.fft.fft2(snap.fields["u2"])
    j_max = int(np.ceil(np.log2(n / 3.0)))
    shells = np.arange(-3, j_max + 1)
    cell = (snap.box_length / n) ** 2
    vals = []
    for j in shells:
        w = _shell_weight(j, kmag, ref)
        b1 = np.fft.ifft2(h1 * w).real
        b2 = np.fft.ifft2(h2 * w).real
        mag = np.hypot(b1, b2)
        if spec.spectrum_p == np.inf:
            lp = mag.max()
        else:
            lp = ((mag ** spec.spectrum_p).sum() * cell) ** (1.0 / spec.spectrum_p)
        vals.append(2.0 ** (j * spec.spectrum_s) * lp)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(shells, np.maximum(vals, 1e-300), "o-", color="tab:green")
        ax.set_xlabel("shell index j")
        ax.set_ylabel(f"2^(j s) shell Lp norm (s={spec.spectrum_s}, "
                      f"p={spec.spectrum_p})")
        ax.set_title(f"dyadic velocity spectrum at t={snap.t:g}")
        _save(fig, spec.output)


def plot_patch_evolution(spec: PlotSpec):
    paths = spec.inputs
    if len(paths) > spec.max_contours:
        idx = np.linspace(0, len(paths) - 1, spec.max_contours).astype(int)
        paths = [paths[i] for i in idx]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("viridis")
        for rank, path in enumerate(paths):
            rows = read_contour(path)
            x = np.append(rows[:, 1], rows[0, 1])
            y = np.append(rows[:, 2], rows[0, 2])
            color = cmap(rank / max(len(paths) - 1, 1))
            ax.plot(x, y, color=color, lw=1.2, label=_contour_label(path))
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_title("patch boundary evolution")
        ax.legend(loc="upper right", fontsize=7)
        _save(fig, spec.output)


def _contour_label(path):
    import os
    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return stem.replace("contour_", "step ")


def plot_constant_ledger(spec: PlotSpec):
    constants, trends, _ = read_summary(spec.inputs[0])
    with plt.rc_context(_STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 4.0))
        if constants:
            names = list(constants)
            ax1.barh(names, [constants[n] for n in names], color="tab:blue")
            ax1.set_title("empirical constants")
            ax1.set_xlabel("smallest closing constant")
        if trends:
            names = list(trends)
            colors = ["tab:red" if trends[n] > 0 else "tab:green"
                      for n in names]
            ax2.barh(names, [trends[n] for n in names], color=colors)
            ax2.set_title("late-run growth slopes")
            ax2.set_xlabel("fitted slope")
        fig.tight_layout()
        _save(fig, spec.output)


_RENDERERS = {
    "energy-decay": plot_energy_decay,
    "besov-spectrum": plot_besov_spectrum,
    "patch-evolution": plot_patch_evolution,
    "constant-ledger": plot_constant_ledger,
}


def render(spec: PlotSpec):
    spec.validate()
    _RENDERERS[spec.kind](spec)
    return spec.output
