"""Built-in benchmark problem generators.

Geometry conventions: x is the beam length, y the height (loads act in -y),
z the thickness. Distributed loads are split equally over the loaded node
set with a user-chosen total magnitude (default 1.0); magnitudes are a
modeling choice here, so compliance comparisons are intra-run only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import ProblemDef, VoxelMesh, build_mesh, mark_cylindrical_void, select_region

BENCHMARK_NAMES = (
    "cantilever-distributed",
    "cantilever-central",
    "mbb-distributed",
    "mbb-central",
    "cantilever-hole",
    "wheel",
)

# default mesh sizes for each benchmark
DEFAULT_DIMS = {
    "cantilever-distributed": (60, 20, 4),
    "cantilever-central": (40, 20, 20),
    "mbb-distributed": (40, 20, 20),
    "mbb-central": (60, 10, 10),
    "cantilever-hole": (70, 30, 6),
    "wheel": (40, 20, 40),
}

DEFAULT_PARAMS = {
    # name: (vc, mu, beta, omega1)
    "cantilever-distributed": (0.3, 0.89, 4000.0, 1e-6),
    "cantilever-central": (0.095, 0.888, 7000.0, 1e-3),
    "mbb-distributed": (0.1, 0.89, 5000.0, 1e-3),
    "mbb-central": (0.155, 0.943, 7250.0, 1e-5),
    "cantilever-hole": (0.5, 0.94, 7000.0, 1e-3),
    "wheel": (0.2, 0.94, 150.0, 1e-5),
}


@dataclass
class BenchmarkSpec:
    name: str
    dims: tuple | None = None
    vc: float | None = None
    mu: float | None = None
    beta: float | None = None
    omega1: float | None = None
    load_magnitude: float = 1.0     # total load over the loaded node set
    E: float = 1.0
    nu: float = 0.3
    E_min: float = 1e-9
    hole_center: tuple | None = None    # cantilever-hole only
    hole_radius: float | None = None

    def __post_init__(self):
        if self.name not in BENCHMARK_NAMES:
            raise ValueError(
                f"unknown benchmark {self.name!r}; valid names: {', '.join(BENCHMARK_NAMES)}")
        if self.dims is None:
            self.dims = DEFAULT_DIMS[self.name]
        vc, mu, beta, omega1 = DEFAULT_PARAMS[self.name]
        self.vc = vc if self.vc is None else self.vc
        self.mu = mu if self.mu is None else self.mu
        self.beta = beta if self.beta is None else self.beta
        self.omega1 = omega1 if self.omega1 is None else self.omega1


def _fix_all(nodes):
    return np.sort(np.concatenate([3 * nodes, 3 * nodes + 1, 3 * nodes + 2]))


def _distributed_load(nodes, total, direction=1):
    """Equal split of `total` over `nodes`, on the y DOF by default."""
    per = total / len(nodes)
    return 3 * np.asarray(nodes) + direction, np.full(len(nodes), -per)


def generate_benchmark(spec: BenchmarkSpec) -> ProblemDef:
    """Materialize one of the built-in benchmark problems."""
    nelx, nely, nelz = spec.dims
    mesh = build_mesh(nelx, nely, nelz)
    X, Y, Z = nelx * mesh.h, nely * mesh.h, nelz * mesh.h
    name = spec.name

    if name in ("cantilever-distributed", "cantilever-hole"):
        # left face clamped; unit total load on the bottom edge of the right face
        fixed = _fix_all(select_region(mesh, (0, 0, 0), (0, Y, Z)))
        load_nodes = select_region(mesh, (X, 0, 0), (X, 0, Z))
        load_dofs, load_vals = _distributed_load(load_nodes, spec.load_magnitude)
    elif name == "cantilever-central":
        fixed = _fix_all(select_region(mesh, (0, 0, 0), (0, Y, Z)))
        cx, cy, cz = X, round(Y / 2), round(Z / 2)
        load_nodes = select_region(mesh, (cx, cy, cz), (cx, cy, cz))
        load_dofs, load_vals = _distributed_load(load_nodes, spec.load_magnitude)
    elif name == "mbb-distributed":
        # full-beam MBB: pinned bottom edge at x=0, y-roller bottom edge at
        # x=X, z held on both support edges; load spread along the top
        # mid-span line
        left = select_region(mesh, (0, 0, 0), (0, 0, Z))
        right = select_region(mesh, (X, 0, 0), (X, 0, Z))
        fixed = np.sort(np.concatenate([
            3 * left, 3 * left + 1, 3 * left + 2,
            3 * right + 1, 3 * right + 2,
        ]))
        cx = round(X / 2)
        load_nodes = select_region(mesh, (cx, Y, 0), (cx, Y, Z))
        load_dofs, load_vals = _distributed_load(load_nodes, spec.load_magnitude)
    elif name == "mbb-central":
        # four bottom corners fully held; point load at the top-face center
        corners = np.concatenate([
            select_region(mesh, (x, 0, z), (x, 0, z))
            for x in (0, X) for z in (0, Z)
        ])
        fixed = _fix_all(corners)
        cx, cz = round(X / 2), round(Z / 2)
        load_nodes = select_region(mesh, (cx, Y, cz), (cx, Y, cz))
        load_dofs, load_vals = _distributed_load(load_nodes, spec.load_magnitude)
    elif name == "wheel":
        # four bottom corners held; downward point load at the bottom center
        corners = np.concatenate([
            select_region(mesh, (x, 0, z), (x, 0, z))
            for x in (0, X) for z in (0, Z)
        ])
        fixed = _fix_all(corners)
        cx, cz = round(X / 2), round(Z / 2)
        load_nodes = select_region(mesh, (cx, 0, cz), (cx, 0, cz))
        load_dofs, load_vals = _distributed_load(load_nodes, spec.load_magnitude)
    else:  # pragma: no cover - guarded by BenchmarkSpec
        raise ValueError(name)

    problem = ProblemDef(mesh=mesh, fixed_dofs=fixed, load_dofs=load_dofs,
                         load_values=load_vals, E=spec.E, nu=spec.nu,
                         E_min=spec.E_min * spec.E, vc=spec.vc)
    if name == "cantilever-hole":
        center = spec.hole_center or (X / 2, Y / 2)
        radius = spec.hole_radius if spec.hole_radius is not None else Y / 4
        problem = mark_cylindrical_void(problem, "z", center, radius)
    return problem
