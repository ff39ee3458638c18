"""Canonical penalty-duality topology optimization for 3-D voxel structures."""

from .baseline import SimpConfig, simp_run
from .benchmarks import BenchmarkSpec, generate_benchmark
from .cpd import CpdConfig, CpdResult, ConvergenceRecord, connected_components, run, volume_schedule
from .dual import (DualState, KnapsackInstance, brute_force_knapsack, dual_value,
                   knapsack_solve, recover_rho, solve_sigma, update_multiplier)
from .fem import (assemble, compliance, constitutive_matrix, element_energies,
                  element_stiffness, shape_functions, solve_displacements,
                  strain_displacement)
from .mesh import (ProblemDef, VoxelMesh, build_mesh, mark_cylindrical_void,
                   select_region)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec", "ConvergenceRecord", "CpdConfig", "CpdResult", "DualState",
    "KnapsackInstance", "ProblemDef", "SimpConfig", "VoxelMesh", "assemble",
    "brute_force_knapsack", "build_mesh", "compliance", "connected_components",
    "constitutive_matrix", "dual_value", "element_energies", "element_stiffness",
    "generate_benchmark", "knapsack_solve", "mark_cylindrical_void", "recover_rho",
    "run", "select_region", "shape_functions", "simp_run", "solve_displacements",
    "solve_sigma", "strain_displacement", "update_multiplier", "volume_schedule",
]
