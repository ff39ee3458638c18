"""Matplotlib report figures rendered next to the delimited outputs."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .mesh import VoxelMesh  # noqa: E402


def plot_convergence(record, path: str) -> None:
    """Compliance and volume fraction against the outer iteration count."""
    its = np.arange(1, len(record) + 1)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    ax1.plot(its, record.compliance, "o-", color="tab:blue")
    ax1.set_ylabel("compliance (2x strain energy)")
    ax1.grid(alpha=0.3)
    ax2.plot(its, record.volume, "s-", color="tab:orange")
    ax2.set_ylabel("volume fraction")
    ax2.set_xlabel("outer iteration")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_density_slices(rho: np.ndarray, mesh: VoxelMesh, path: str,
                        max_slices: int = 6) -> None:
    """Montage of x-y density slices along z (1 = solid, 0 = void)."""
    vol = np.asarray(rho).reshape(mesh.nelz, mesh.nely, mesh.nelx)
    n_slices = min(mesh.nelz, max_slices)
    ks = np.unique(np.linspace(0, mesh.nelz - 1, n_slices).round().astype(int))
    fig, axes = plt.subplots(len(ks), 1, figsize=(6, 2 * len(ks)), squeeze=False)
    for ax, k in zip(axes[:, 0], ks):
        ax.imshow(vol[k], cmap="gray_r", origin="lower", vmin=0, vmax=1,
                  interpolation="none")
        ax.set_title(f"z-slice {k}", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(outdir: str, record, rho: np.ndarray, mesh: VoxelMesh) -> list[str]:
    """Write the standard figure set into outdir; returns the file paths."""
    paths = []
    p = os.path.join(outdir, "convergence.png")
    plot_convergence(record, p)
    paths.append(p)
    p = os.path.join(outdir, "density.png")
    plot_density_slices(rho, mesh, p)
    paths.append(p)
    return paths
