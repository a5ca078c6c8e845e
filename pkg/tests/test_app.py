import pytest

from flow_topopt.app import dof_rows, main
from flow_topopt.errors import OptimizationError
from flow_topopt.fem.cases import CaseName
from flow_topopt.schema.history import ConvergenceHistory, ObjectiveBreakdown
from flow_topopt.verification import CheckResult


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "mesh-info" in capsys.readouterr().out


def test_unknown_case_is_invalid_input():
    assert main(["run", "--case", "pipe_flow"]) == 1
    assert main(["mesh-info", "--case", "pipe_flow"]) == 1


def test_run_needs_a_case():
    assert main(["run"]) == 1


def test_mesh_info_table(capsys):
    assert main(["mesh-info", "--case", "pipe_bend", "--levels", "2", "--resolution", "10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split() == ["level", "vertices", "elements", "cr_u", "p0_p", "th_u", "th_p"]
    elements = [int(line.split()[2]) for line in lines[1:]]
    assert elements == [200, 800, 3200]


def test_mesh_info_reference_columns(capsys):
    assert main(["mesh-info", "--case", "bypass", "--reference"]) == 0
    out = capsys.readouterr().out
    assert "807936" in out
    assert "135041" in out


def test_mesh_info_dumps_the_level0_mesh(tmp_path, capsys):
    stem = tmp_path / "meshes" / "rugby"
    assert main(["mesh-info", "--case", "rugby", "--levels", "0", "--resolution", "4",
                 "--dump", str(stem)]) == 0
    assert f"wrote {stem}.node" in capsys.readouterr().out
    nodes = (tmp_path / "meshes" / "rugby.node").read_text().splitlines()
    cells = (tmp_path / "meshes" / "rugby.ele").read_text().splitlines()
    assert len(cells) == 64
    assert all(len(line.split()) == 2 for line in nodes)
    assert min(int(i) for line in cells for i in line.split()) == 0


def test_mesh_info_dump_needs_a_real_mesh(tmp_path):
    assert main(["mesh-info", "--case", "bypass", "--reference", "--dump", str(tmp_path / "bypass")]) == 1
    assert not (tmp_path / "bypass.node").exists()



def test_dof_rows_follow_refinement():
    rows = dof_rows(CaseName.RUGBY, levels=2, resolution=4)
    assert [r.cells for r in rows] == [64, 256, 1024]
    assert all(r.vertices - r.edges + r.cells == 1 for r in rows)


def test_run_command_wires_the_configuration(tmp_path, mocker, capsys):
    fake = mocker.MagicMock()
    fake.run_id = "abc12345"
    fake.history = ConvergenceHistory()
    fake.exports = [tmp_path / "pipe_bend_level0.vtk"]
    run = mocker.patch("flow_topopt.app.run", return_value=fake)
    mocker.patch("flow_topopt.app.objective_report", return_value=ObjectiveBreakdown(
        brinkman=1.0, dissipated=2.0, ginzburg_landau=0.5, multiplier_term=0.0,
        penalty_term=0.0, volume_gap=0.0))

    code = main(["run", "--case", "pipe_bend", "--levels", "0", "--outer", "3", "--inner", "2",
                 "--out", str(tmp_path), "--seed", "5", "--no-wall-time"])
    assert code == 0
    config = run.call_args.args[0]
    assert config.iterations.levels == 0
    assert (config.iterations.outer, config.iterations.inner) == (3, 2)
    assert config.output.directory == str(tmp_path)
    assert config.output.record_wall_time is False
    assert config.initial.seed == 5
    out = capsys.readouterr().out
    assert "abc12345" in out
    assert "dissipated power: 2" in out


def test_run_failure_exit_code(tmp_path, mocker):
    mocker.patch("flow_topopt.app.run", side_effect=OptimizationError("state solve failed"))
    assert main(["run", "--case", "pipe_bend", "--out", str(tmp_path)]) == 2


def test_invalid_config_file(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[case]\ncase = pipe_bend\n[phase]\nbeta = 1.5\n", encoding="utf-8")
    assert main(["run", "--config", str(path)]) == 1


def test_contradicting_case_and_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[case]\ncase = pipe_bend\n", encoding="utf-8")
    assert main(["run", "--config", str(path), "--case", "bypass"]) == 1


def test_small_run_end_to_end(tmp_path, capsys):
    code = main(["run", "--case", "pipe_bend", "--levels", "0", "--outer", "2", "--inner", "1",
                 "--resolution", "10", "--out", str(tmp_path), "--no-wall-time"])
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["pipe_bend_history.csv", "pipe_bend_level0.vtk"]
    lines = (tmp_path / "pipe_bend_history.csv").read_text().splitlines()
    assert len(lines) == 3
    assert all(line.endswith(",0") for line in lines[1:])


@pytest.mark.parametrize("passed, expected", [(True, 0), (False, 2)])
def test_verify_exit_codes(mocker, passed, expected):
    mocker.patch("flow_topopt.app.run_checks",
                 return_value=[CheckResult(name="dof_table", passed=passed, detail="stub")])
    assert main(["verify"]) == expected
