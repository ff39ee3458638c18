"""Structured voxel mesh of unit-cube hex8 elements.

Node numbering is x-fastest: index = i + j*(nelx+1) + k*(nelx+1)*(nely+1).
Element numbering follows the same convention, which also matches the VTK
structured-points cell order used by the exporter.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidProblemError

# passive-mask codes
DESIGNABLE = 0
FORCED_VOID = 1
FORCED_SOLID = 2


@dataclass(frozen=True)
class VoxelMesh:
    nelx: int
    nely: int
    nelz: int
    h: float = 1.0
    connectivity: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_elements(self) -> int:
        return self.nelx * self.nely * self.nelz

    @property
    def n_nodes(self) -> int:
        return (self.nelx + 1) * (self.nely + 1) * (self.nelz + 1)

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_nodes

    @property
    def element_volume(self) -> float:
        return self.h ** 3

    def node_index(self, i, j, k):
        """Node index from integer grid coordinates (vectorized)."""
        nx1 = self.nelx + 1
        return np.asarray(i) + np.asarray(j) * nx1 + np.asarray(k) * nx1 * (self.nely + 1)

    def node_coords(self) -> np.ndarray:
        """(n_nodes, 3) array of node positions in length units."""
        nx1, ny1, nz1 = self.nelx + 1, self.nely + 1, self.nelz + 1
        k, j, i = np.meshgrid(np.arange(nz1), np.arange(ny1), np.arange(nx1), indexing="ij")
        return np.column_stack([i.ravel() * self.h, j.ravel() * self.h, k.ravel() * self.h])

    def element_centroids(self) -> np.ndarray:
        """(n_elements, 3) array of element centroids."""
        k, j, i = np.meshgrid(
            np.arange(self.nelz), np.arange(self.nely), np.arange(self.nelx), indexing="ij"
        )
        return np.column_stack(
            [(i.ravel() + 0.5) * self.h, (j.ravel() + 0.5) * self.h, (k.ravel() + 0.5) * self.h]
        )

    def element_dofs(self) -> np.ndarray:
        """(n_elements, 24) DOF indices, node-major, (x, y, z) per node."""
        c = self.connectivity
        dofs = np.empty((self.n_elements, 24), dtype=np.int64)
        dofs[:, 0::3] = 3 * c
        dofs[:, 1::3] = 3 * c + 1
        dofs[:, 2::3] = 3 * c + 2
        return dofs


def build_mesh(nelx: int, nely: int, nelz: int, h: float = 1.0) -> VoxelMesh:
    """Build a structured voxel mesh with deterministic numbering.

    Local node order follows the natural-coordinate sign pattern: node 1 at
    (-1,-1,-1), counterclockwise on the bottom face, then the top face.
    """
    for name, v in (("nelx", nelx), ("nely", nely), ("nelz", nelz)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    nelx, nely, nelz = int(nelx), int(nely), int(nelz)

    nx1, ny1 = nelx + 1, nely + 1
    k, j, i = np.meshgrid(np.arange(nelz), np.arange(nely), np.arange(nelx), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    n0 = i + j * nx1 + k * nx1 * ny1
    dz = nx1 * ny1
    conn = np.column_stack([
        n0,                 # (-1,-1,-1)
        n0 + 1,             # (+1,-1,-1)
        n0 + 1 + nx1,       # (+1,+1,-1)
        n0 + nx1,           # (-1,+1,-1)
        n0 + dz,            # (-1,-1,+1)
        n0 + 1 + dz,        # (+1,-1,+1)
        n0 + 1 + nx1 + dz,  # (+1,+1,+1)
        n0 + nx1 + dz,      # (-1,+1,+1)
    ]).astype(np.int64)
    return VoxelMesh(nelx=nelx, nely=nely, nelz=nelz, h=h, connectivity=conn)


def select_region(mesh: VoxelMesh, lo, hi) -> np.ndarray:
    """Indices of nodes whose coordinates lie in the closed box [lo, hi].

    Empty selections are returned as empty arrays, not errors.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    coords = mesh.node_coords()
    mask = np.all((coords >= lo - 1e-12) & (coords <= hi + 1e-12), axis=1)
    return np.flatnonzero(mask)


@dataclass(frozen=True)
class ProblemDef:
    mesh: VoxelMesh
    fixed_dofs: np.ndarray
    load_dofs: np.ndarray
    load_values: np.ndarray
    E: float = 1.0
    nu: float = 0.3
    E_min: float = 1e-9
    vc: float = 0.3
    passive: np.ndarray = None  # per-element code, None means all designable

    def __post_init__(self):
        if len(self.fixed_dofs) == 0:
            raise InvalidProblemError("structure must be supported (no fixed DOFs)")
        if len(self.load_dofs) == 0 or not np.any(self.load_values):
            raise InvalidProblemError("at least one nonzero load required")
        if not (0 < self.E_min < self.E):
            raise InvalidProblemError(f"need 0 < E_min << E, got E_min={self.E_min}, E={self.E}")
        if not (0 <= self.nu < 0.5):
            raise InvalidProblemError(f"need 0 <= nu < 0.5, got {self.nu}")
        if not (0 < self.vc <= 1):
            raise InvalidProblemError(f"need 0 < vc <= 1, got {self.vc}")
        if self.passive is not None:
            if len(self.passive) != self.mesh.n_elements:
                raise InvalidProblemError("passive mask length != element count")
            solid_frac = np.count_nonzero(self.passive == FORCED_SOLID) / self.mesh.n_elements
            if solid_frac > self.vc + 1e-12:
                raise InvalidProblemError(
                    f"forced-solid volume fraction {solid_frac:.4f} exceeds vc={self.vc}"
                )

    @property
    def passive_mask(self) -> np.ndarray:
        if self.passive is None:
            return np.zeros(self.mesh.n_elements, dtype=np.int8)
        return self.passive

    def load_vector(self) -> np.ndarray:
        f = np.zeros(self.mesh.n_dofs)
        np.add.at(f, self.load_dofs, self.load_values)
        return f


def mark_cylindrical_void(problem: ProblemDef, axis: str, center, radius: float) -> ProblemDef:
    """Force-void every element whose centroid lies inside an axis-aligned cylinder.

    `center` gives the two in-plane coordinates of the cylinder axis, in the
    order of the remaining axes (e.g. axis="z" -> center=(cx, cy)).
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    axes = {"x": 0, "y": 1, "z": 2}
    if axis not in axes:
        raise ValueError(f"axis must be one of {sorted(axes)}, got {axis!r}")
    keep = [a for a in range(3) if a != axes[axis]]
    cent = problem.mesh.element_centroids()
    d2 = (cent[:, keep[0]] - center[0]) ** 2 + (cent[:, keep[1]] - center[1]) ** 2
    inside = d2 < radius ** 2
    if inside.all():
        raise InvalidProblemError("cylindrical void covers every element")
    passive = problem.passive_mask.copy()
    passive[inside] = FORCED_VOID
    return replace(problem, passive=passive)
