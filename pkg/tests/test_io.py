"""File formats (problem files, VTK, CSV) and the command-line interface."""
import os

import numpy as np
import pytest

from cpdtopo import fileio
from cpdtopo.cli import cli_main
from cpdtopo.cpd import ConvergenceRecord
from cpdtopo.errors import ParseError
from cpdtopo.mesh import FORCED_SOLID, FORCED_VOID, ProblemDef, build_mesh


def make_problem(with_passive=False):
    mesh = build_mesh(4, 3, 2)
    passive = None
    if with_passive:
        passive = np.zeros(mesh.n_elements, dtype=np.int8)
        passive[0] = FORCED_VOID
        passive[5] = FORCED_SOLID
    return ProblemDef(mesh=mesh, fixed_dofs=np.array([0, 1, 2, 3, 4, 5]),
                      load_dofs=np.array([10, 22]),
                      load_values=np.array([-0.5, -0.25]),
                      E=2.0, nu=0.25, E_min=2e-9, vc=0.4, passive=passive)


class TestProblemRoundTrip:
    def test_plain(self, tmp_path):
        path = str(tmp_path / "prob.txt")
        p = make_problem()
        fileio.save_problem(path, p)
        q = fileio.load_problem(path)
        assert (q.mesh.nelx, q.mesh.nely, q.mesh.nelz) == (4, 3, 2)
        assert np.array_equal(np.sort(q.fixed_dofs), np.sort(p.fixed_dofs))
        assert np.array_equal(q.load_dofs, p.load_dofs)
        assert np.array_equal(q.load_values, p.load_values)
        assert (q.E, q.nu, q.E_min, q.vc) == (2.0, 0.25, 2e-9, 0.4)

    def test_passive_regions(self, tmp_path):
        path = str(tmp_path / "prob.txt")
        p = make_problem(with_passive=True)
        fileio.save_problem(path, p)
        q = fileio.load_problem(path)
        assert np.array_equal(q.passive_mask, p.passive_mask)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "prob.txt"
        path.write_text("# header\n\nversion 1\nmesh 2 2 2\n"
                        "material 1.0 0.3 1e-9  # inline comment\n"
                        "vc 0.5\nfixed 0 1 2\nload 5 -1.0\n")
        q = fileio.load_problem(str(path))
        assert q.mesh.n_elements == 8


class TestParseErrors:
    def write(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text)
        return str(path)

    def test_bad_version(self, tmp_path):
        path = self.write(tmp_path, "version 99\n")
        with pytest.raises(ParseError, match="line 1"):
            fileio.load_problem(path)

    def test_unknown_directive_with_line_number(self, tmp_path):
        path = self.write(tmp_path, "version 1\nmesh 2 2 2\nbogus 1\n")
        with pytest.raises(ParseError, match="line 3"):
            fileio.load_problem(path)

    def test_malformed_value(self, tmp_path):
        path = self.write(tmp_path, "version 1\nmesh 2 two 2\n")
        with pytest.raises(ParseError, match="line 2"):
            fileio.load_problem(path)

    @pytest.mark.parametrize("omit", ["version", "mesh", "material", "vc",
                                      "fixed", "load"])
    def test_missing_directive(self, tmp_path, omit):
        lines = {"version": "version 1", "mesh": "mesh 2 2 2",
                 "material": "material 1.0 0.3 1e-9", "vc": "vc 0.5",
                 "fixed": "fixed 0 1 2", "load": "load 5 -1.0"}
        text = "\n".join(v for k, v in lines.items() if k != omit) + "\n"
        with pytest.raises(ParseError, match=omit):
            fileio.load_problem(self.write(tmp_path, text))


class TestVtk:
    def test_round_trip_exact(self, tmp_path):
        mesh = build_mesh(3, 2, 2)
        rho = np.arange(mesh.n_elements) / mesh.n_elements
        path = str(tmp_path / "density.vtk")
        fileio.write_vtk(path, rho, mesh)
        back = fileio.read_vtk_cell_data(path)
        assert np.array_equal(back, rho)

    def test_header_dimensions(self, tmp_path):
        mesh = build_mesh(3, 2, 2)
        path = str(tmp_path / "d.vtk")
        fileio.write_vtk(path, np.ones(mesh.n_elements), mesh)
        text = open(path).read()
        assert "DIMENSIONS 4 3 3" in text
        assert "CELL_DATA 12" in text

    def test_length_mismatch(self, tmp_path):
        mesh = build_mesh(2, 2, 2)
        with pytest.raises(ValueError):
            fileio.write_vtk(str(tmp_path / "d.vtk"), np.ones(3), mesh)

    def test_read_rejects_non_cell_data(self, tmp_path):
        path = tmp_path / "x.vtk"
        path.write_text("# vtk DataFile Version 3.0\nempty\n")
        with pytest.raises(ParseError):
            fileio.read_vtk_cell_data(str(path))


class TestCsv:
    def make_record(self):
        rec = ConvergenceRecord()
        rec.append(0.89, 10.0, -5.0, 12, 1.0, 0.1)
        rec.append(0.3, 8.0, -4.0, 9, 0.0, 0.2)
        return rec

    def test_write_convergence_csv(self, tmp_path):
        path = str(tmp_path / "conv.csv")
        fileio.write_convergence_csv(path, self.make_record())
        lines = open(path).read().strip().splitlines()
        assert lines[0] == ",".join(fileio.CSV_HEADER)
        assert len(lines) == 3
        assert lines[1].startswith("1,0.89,10.0")

    def test_streaming_logger(self, tmp_path):
        path = str(tmp_path / "stream.csv")
        with fileio.StreamingCsvLogger(path) as logger:
            logger((1, 0.89, 10.0, -5.0, 12, 1.0, 0.1))
            # flushed immediately, readable mid-run
            assert len(open(path).read().strip().splitlines()) == 2

    def test_atomic_write_no_temp_left(self, tmp_path):
        path = str(tmp_path / "out.txt")
        fileio.atomic_write(path, lambda fh: fh.write("ok\n"))
        assert open(path).read() == "ok\n"
        assert os.listdir(tmp_path) == ["out.txt"]

    def test_atomic_write_failure_cleans_up(self, tmp_path):
        path = str(tmp_path / "out.txt")

        def boom(fh):
            raise RuntimeError("nope")

        with pytest.raises(RuntimeError):
            fileio.atomic_write(path, boom)
        assert os.listdir(tmp_path) == []


class TestCli:
    def test_no_arguments_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main([])
        assert exc.value.code == 2

    def test_bad_dims(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli_main(["--benchmark", "cantilever-distributed",
                      "--dims", "12x6", "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_missing_out_dir(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli_main(["--benchmark", "cantilever-distributed",
                      "--out", str(tmp_path / "nope")])
        assert exc.value.code == 2

    def test_benchmark_run_writes_artifacts(self, tmp_path):
        code = cli_main(["--benchmark", "cantilever-distributed",
                         "--dims", "12x6x2", "--vc", "0.5", "--mu", "0.9",
                         "--out", str(tmp_path), "--no-figures",
                         "--log-level", "warning"])
        assert code == 0
        for name in ("convergence.csv", "density.vtk", "summary.json"):
            assert (tmp_path / name).exists()
        rho = fileio.read_vtk_cell_data(str(tmp_path / "density.vtk"))
        assert np.all((rho == 0) | (rho == 1))

    def test_simp_method(self, tmp_path):
        code = cli_main(["--benchmark", "cantilever-distributed",
                         "--dims", "16x6x2", "--vc", "0.4", "--method", "simp",
                         "--out", str(tmp_path), "--no-figures",
                         "--log-level", "warning"])
        assert code == 0
        rho = fileio.read_vtk_cell_data(str(tmp_path / "density.vtk"))
        assert np.all((rho >= 0) & (rho <= 1))

    def test_problem_file_input(self, tmp_path):
        prob = tmp_path / "prob.txt"
        mesh = build_mesh(12, 6, 2)
        from cpdtopo.mesh import select_region
        fixed_nodes = select_region(mesh, (0, 0, 0), (0, 6, 2))
        fixed = np.sort(np.concatenate([3 * fixed_nodes + d for d in range(3)]))
        tip = select_region(mesh, (12, 0, 0), (12, 0, 2))
        p = ProblemDef(mesh=mesh, fixed_dofs=fixed, load_dofs=3 * tip + 1,
                       load_values=np.full(len(tip), -1.0 / len(tip)), vc=0.5)
        fileio.save_problem(str(prob), p)
        out = tmp_path / "out"
        out.mkdir()
        code = cli_main(["--problem", str(prob), "--mu", "0.9",
                         "--out", str(out), "--no-figures",
                         "--log-level", "warning"])
        assert code == 0
        assert (out / "summary.json").exists()

    def test_unreadable_problem_file(self, tmp_path):
        code = cli_main(["--problem", str(tmp_path / "missing.txt"),
                         "--out", str(tmp_path)])
        assert code == 2

    def test_figures_rendered(self, tmp_path):
        code = cli_main(["--benchmark", "cantilever-distributed",
                         "--dims", "12x6x2", "--vc", "0.5", "--mu", "0.9",
                         "--out", str(tmp_path), "--log-level", "warning"])
        assert code == 0
        assert (tmp_path / "convergence.png").exists()
        assert (tmp_path / "density.png").exists()
