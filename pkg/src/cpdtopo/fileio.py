"""Problem file parsing/serialization, VTK density export, CSV logs.

Problem files are a line-oriented key-value format (documented in the README):

    # comment
    version 1
    mesh NELX NELY NELZ
    material E NU EMIN
    vc FRACTION
    fixed DOF [DOF ...]
    load DOF VALUE
    void ELEM [ELEM ...]
    solid ELEM [ELEM ...]

`fixed`, `load`, `void` and `solid` lines may repeat. All writes are atomic
(temp file then rename).
"""
from __future__ import annotations

import csv
import os
import tempfile

import numpy as np

from .errors import ParseError
from .mesh import DESIGNABLE, FORCED_SOLID, FORCED_VOID, ProblemDef, VoxelMesh, build_mesh

PROBLEM_FORMAT_VERSION = 1
CSV_HEADER = ("gamma", "V", "compliance", "dual", "inner_iters", "change", "seconds")


def atomic_write(path, write_fn, mode="w"):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_problem(path: str, problem: ProblemDef) -> None:
    def write(fh):
        fh.write(f"version {PROBLEM_FORMAT_VERSION}\n")
        m = problem.mesh
        fh.write(f"mesh {m.nelx} {m.nely} {m.nelz}\n")
        fh.write(f"material {float(problem.E)!r} {float(problem.nu)!r} "
                 f"{float(problem.E_min)!r}\n")
        fh.write(f"vc {float(problem.vc)!r}\n")
        fixed = " ".join(str(d) for d in np.sort(problem.fixed_dofs))
        fh.write(f"fixed {fixed}\n")
        for d, v in zip(problem.load_dofs, problem.load_values):
            fh.write(f"load {int(d)} {float(v)!r}\n")
        passive = problem.passive_mask
        for code, key in ((FORCED_VOID, "void"), (FORCED_SOLID, "solid")):
            idx = np.flatnonzero(passive == code)
            if len(idx):
                fh.write(f"{key} {' '.join(map(str, idx))}\n")

    atomic_write(path, write)


def load_problem(path: str) -> ProblemDef:
    mesh = None
    E = nu = E_min = vc = None
    version = None
    fixed: list[int] = []
    load_dofs: list[int] = []
    load_vals: list[float] = []
    void: list[int] = []
    solid: list[int] = []

    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, *args = line.split()
            try:
                if key == "version":
                    version = int(args[0])
                    if version != PROBLEM_FORMAT_VERSION:
                        raise ParseError(f"unsupported version {version}", line_no)
                elif key == "mesh":
                    mesh = build_mesh(int(args[0]), int(args[1]), int(args[2]))
                elif key == "material":
                    E, nu, E_min = float(args[0]), float(args[1]), float(args[2])
                elif key == "vc":
                    vc = float(args[0])
                elif key == "fixed":
                    fixed.extend(int(a) for a in args)
                elif key == "load":
                    load_dofs.append(int(args[0]))
                    load_vals.append(float(args[1]))
                elif key == "void":
                    void.extend(int(a) for a in args)
                elif key == "solid":
                    solid.extend(int(a) for a in args)
                else:
                    raise ParseError(f"unknown directive {key!r}", line_no)
            except ParseError:
                raise
            except (ValueError, IndexError) as exc:
                raise ParseError(f"bad {key!r} line: {exc}", line_no) from exc

    for name, val in (("version", version), ("mesh", mesh), ("material", E), ("vc", vc)):
        if val is None:
            raise ParseError(f"missing {name!r} directive")
    if not fixed:
        raise ParseError("missing 'fixed' directive")
    if not load_dofs:
        raise ParseError("missing 'load' directive")

    passive = None
    if void or solid:
        passive = np.full(mesh.n_elements, DESIGNABLE, dtype=np.int8)
        passive[void] = FORCED_VOID
        passive[solid] = FORCED_SOLID
    return ProblemDef(mesh=mesh, fixed_dofs=np.asarray(fixed, dtype=np.int64),
                      load_dofs=np.asarray(load_dofs, dtype=np.int64),
                      load_values=np.asarray(load_vals), E=E, nu=nu, E_min=E_min,
                      vc=vc, passive=passive)


def write_vtk(path: str, rho: np.ndarray, mesh: VoxelMesh, name: str = "density") -> None:
    """Legacy-VTK structured points with rho as cell data.

    Cell order is x-fastest, matching the mesh element numbering.
    """
    rho = np.asarray(rho, dtype=float)
    if len(rho) != mesh.n_elements:
        raise ValueError("rho length != element count")

    def write(fh):
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("cpdtopo density field\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {mesh.nelx + 1} {mesh.nely + 1} {mesh.nelz + 1}\n")
        fh.write("ORIGIN 0 0 0\n")
        fh.write(f"SPACING {float(mesh.h)!r} {float(mesh.h)!r} {float(mesh.h)!r}\n")
        fh.write(f"CELL_DATA {mesh.n_elements}\n")
        fh.write(f"SCALARS {name} double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for v in rho:
            fh.write(f"{float(v)!r}\n")

    atomic_write(path, write)


def read_vtk_cell_data(path: str) -> np.ndarray:
    """Read back the scalar cell data written by write_vtk (round-trip checks)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    n = None
    start = None
    for i, line in enumerate(lines):
        if line.startswith("CELL_DATA"):
            n = int(line.split()[1])
        if line.startswith("LOOKUP_TABLE"):
            start = i + 1
            break
    if n is None or start is None:
        raise ParseError("not a cell-data VTK file")
    return np.array([float(x) for x in lines[start:start + n]])


def write_convergence_csv(path: str, record) -> None:
    def write(fh):
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in record.rows():
            w.writerow(row)

    atomic_write(path, write)


class StreamingCsvLogger:
    """Crash-safe per-step CSV writer handed to the optimizer as on_step."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_HEADER)
        self._fh.flush()

    def __call__(self, row):
        self._writer.writerow(row)
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
