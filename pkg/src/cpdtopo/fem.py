"""Hex8 linear-elastic finite elements on the voxel mesh.

Voigt ordering throughout is (xx, yy, zz, xy, xz, yz). Element stiffness is
integrated by Gauss quadrature on the bi-unit cube with the affine voxel map
(detJ = (h/2)^3, d/dx = (2/h) d/dxi).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidProblemError, SolverFailureError
from .mesh import VoxelMesh

# natural-coordinate signs of the 8 local nodes (node 1 at (-1,-1,-1),
# counterclockwise bottom face, then top face)
_NODE_SIGNS = np.array([
    [-1, -1, -1],
    [+1, -1, -1],
    [+1, +1, -1],
    [-1, +1, -1],
    [-1, -1, +1],
    [+1, -1, +1],
    [+1, +1, +1],
    [-1, +1, +1],
], dtype=float)

DENSE_SOLVE_MAX_DOFS = 3000


def shape_functions(xi1: float, xi2: float, xi3: float) -> np.ndarray:
    """Trilinear shape functions N_1..N_8 at natural coordinates."""
    s = _NODE_SIGNS
    return 0.125 * (1 + s[:, 0] * xi1) * (1 + s[:, 1] * xi2) * (1 + s[:, 2] * xi3)


def shape_gradients(xi1: float, xi2: float, xi3: float) -> np.ndarray:
    """(8, 3) array of dN_i/dxi_j at natural coordinates."""
    s = _NODE_SIGNS
    g = np.empty((8, 3))
    g[:, 0] = 0.125 * s[:, 0] * (1 + s[:, 1] * xi2) * (1 + s[:, 2] * xi3)
    g[:, 1] = 0.125 * s[:, 1] * (1 + s[:, 0] * xi1) * (1 + s[:, 2] * xi3)
    g[:, 2] = 0.125 * s[:, 2] * (1 + s[:, 0] * xi1) * (1 + s[:, 1] * xi2)
    return g


def strain_displacement(xi1: float, xi2: float, xi3: float, h: float = 1.0) -> np.ndarray:
    """6x24 strain-displacement matrix B at natural coordinates.

    Columns are node-major (u1x, u1y, u1z, u2x, ...); rows follow the Voigt
    order (xx, yy, zz, xy, xz, yz).
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    dN = (2.0 / h) * shape_gradients(xi1, xi2, xi3)  # physical derivatives
    B = np.zeros((6, 24))
    for i in range(8):
        dx, dy, dz = dN[i]
        c = 3 * i
        B[0, c] = dx
        B[1, c + 1] = dy
        B[2, c + 2] = dz
        B[3, c] = dy
        B[3, c + 1] = dx
        B[4, c] = dz
        B[4, c + 2] = dx
        B[5, c + 1] = dz
        B[5, c + 2] = dy
    return B


def constitutive_matrix(E: float, nu: float) -> np.ndarray:
    """6x6 isotropic Hooke matrix in Voigt order (xx, yy, zz, xy, xz, yz)."""
    if E <= 0:
        raise ValueError(f"E must be positive, got {E}")
    if not (0 <= nu < 0.5):
        raise ValueError(f"nu must satisfy 0 <= nu < 0.5, got {nu}")
    fac = E / ((1 + nu) * (1 - 2 * nu))
    H = np.zeros((6, 6))
    H[:3, :3] = nu
    np.fill_diagonal(H[:3, :3], 1 - nu)
    H[3, 3] = H[4, 4] = H[5, 5] = (1 - 2 * nu) / 2
    return fac * H


def _gauss_rule(n: int):
    if n == 2:
        g = 1.0 / np.sqrt(3.0)
        return np.array([-g, g]), np.array([1.0, 1.0])
    if n == 3:
        g = np.sqrt(3.0 / 5.0)
        return np.array([-g, 0.0, g]), np.array([5.0, 8.0, 5.0]) / 9.0
    return np.polynomial.legendre.leggauss(n)


def element_stiffness(H: np.ndarray, h: float = 1.0, n_gauss: int = 2) -> np.ndarray:
    """24x24 hex8 element stiffness for the given Hooke matrix."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    pts, wts = _gauss_rule(n_gauss)
    detJ = (h / 2.0) ** 3
    Ke = np.zeros((24, 24))
    for a, wa in zip(pts, wts):
        for b, wb in zip(pts, wts):
            for c, wc in zip(pts, wts):
                B = strain_displacement(a, b, c, h)
                Ke += (wa * wb * wc * detJ) * (B.T @ H @ B)
    return 0.5 * (Ke + Ke.T)


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    f: np.ndarray
    fixed_dofs: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_dofs), self.fixed_dofs)


def density_scale(rho: np.ndarray, E: float, E_min: float, penal: float = 1.0) -> np.ndarray:
    """Per-element modulus interpolation E_min + (E - E_min) * rho**penal."""
    rho = np.asarray(rho, dtype=float)
    if penal == 1.0:
        return E_min + (E - E_min) * rho
    return E_min + (E - E_min) * rho ** penal


def assemble(mesh: VoxelMesh, rho: np.ndarray, Ke: np.ndarray,
             E: float, E_min: float, fixed_dofs=None, f=None,
             penal: float = 1.0) -> GlobalSystem | sp.csr_matrix:
    """Assemble the global stiffness K(rho) from the unit-modulus Ke.

    Returns a GlobalSystem when fixed_dofs/f are supplied, otherwise the bare
    sparse matrix.
    """
    rho = np.asarray(rho, dtype=float)
    if len(rho) != mesh.n_elements:
        raise ValueError(f"rho length {len(rho)} != element count {mesh.n_elements}")
    scale = density_scale(rho, E, E_min, penal)
    edofs = mesh.element_dofs()
    rows = np.repeat(edofs, 24, axis=1).ravel()
    cols = np.tile(edofs, (1, 24)).ravel()
    vals = (scale[:, None, None] * Ke[None, :, :]).ravel()
    m = mesh.n_dofs
    K = sp.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsr()
    if fixed_dofs is None:
        return K
    return GlobalSystem(K=K, f=np.asarray(f, dtype=float), fixed_dofs=np.asarray(fixed_dofs))


def solve_displacements(system: GlobalSystem, tol: float = 1e-8,
                        method: str = "auto", max_iter_factor: int = 10) -> np.ndarray:
    """Solve K u = f with row/column elimination of the fixed DOFs.

    method: "auto" (dense direct for small systems, sparse direct otherwise),
    "dense", "direct" (sparse LU), or "cg" (Jacobi-preconditioned CG).
    """
    free = system.free_dofs()
    if len(free) == 0:
        raise InvalidProblemError("all DOFs fixed")
    u = np.zeros(system.n_dofs)
    f_free = system.f[free]
    if not np.any(f_free):
        return u
    Kff = system.K[free][:, free]

    if method == "auto":
        method = "dense" if len(free) <= DENSE_SOLVE_MAX_DOFS else "direct"

    if method == "dense":
        try:
            u_free = np.linalg.solve(Kff.toarray(), f_free)
        except np.linalg.LinAlgError as exc:
            raise InvalidProblemError(f"singular system: {exc}") from exc
    elif method == "direct":
        lu = spla.splu(Kff.tocsc())
        u_free = lu.solve(f_free)
        # iterative refinement: the LU alone loses digits at high E/E_min contrast
        fnorm = np.linalg.norm(f_free)
        for _ in range(5):
            r = f_free - Kff @ u_free
            if np.linalg.norm(r) <= 0.01 * tol * fnorm:
                break
            u_free = u_free + lu.solve(r)
    elif method == "cg":
        diag = Kff.diagonal()
        if np.any(diag <= 0):
            raise InvalidProblemError("non-positive diagonal; system not SPD")
        M = spla.LinearOperator(Kff.shape, matvec=lambda x: x / diag)
        u_free, info = spla.cg(Kff, f_free, rtol=tol * 0.1, atol=0.0,
                               maxiter=max_iter_factor * len(free), M=M)
        if info != 0:
            res = np.linalg.norm(Kff @ u_free - f_free) / np.linalg.norm(f_free)
            raise SolverFailureError(
                f"CG did not converge (info={info}, relative residual {res:.3e})",
                residual=res)
    else:
        raise ValueError(f"unknown method {method!r}")

    # accept on relative residual, falling back to the normwise backward error:
    # when the design disconnects, |u| ~ |f|/E_min and a residual of tol*|f|
    # is below the double-precision floor, while the backward error stays ~eps
    r = np.linalg.norm(Kff @ u_free - f_free)
    fnorm = np.linalg.norm(f_free)
    res = r / fnorm
    backward = r / (fnorm + np.abs(Kff).sum(axis=1).max() * np.linalg.norm(u_free, np.inf))
    if not np.isfinite(res) or (res > tol and backward > tol):
        raise SolverFailureError(f"relative residual {res:.3e} exceeds {tol:.1e}",
                                 residual=res)
    u[free] = u_free
    return u


def element_energies(mesh: VoxelMesh, u: np.ndarray, Ke: np.ndarray, E: float) -> np.ndarray:
    """Per-element strain energies c_e = 1/2 u_e^T (E Ke) u_e at full modulus."""
    ue = u[mesh.element_dofs()]
    c = 0.5 * E * np.einsum("ni,ij,nj->n", ue, Ke, ue)
    return np.maximum(c, 0.0)  # clip tiny negative roundoff


def compliance(rho: np.ndarray, u: np.ndarray, system: GlobalSystem) -> tuple[float, float]:
    """Strain energy C = 1/2 u^T K(rho) u and the reported compliance c = 2C."""
    C = 0.5 * float(u @ (system.K @ u))
    return C, 2.0 * C
