import pytest

from flow_topopt.config import (OUTPUT_DIR_ENV, default_output_dir, load_config, override_config,
                                parse_config, render_config)
from flow_topopt.errors import ConfigError
from flow_topopt.fem.cases import CaseName
from flow_topopt.presets import ALPHA0, KAPPA, PRESETS, preset_config
from flow_topopt.schema.params import InitialPhaseKind


def test_minimal_file_takes_the_preset():
    config = parse_config("[case]\ncase = pipe_bend\n")
    phase = config.phase
    assert (phase.dt, phase.epsilon, phase.gamma, phase.zeta0, phase.beta, phase.s_tilde) == \
        (5e-4, 1e-2, 1e-2, 100.0, 0.3, 0.25)
    assert (phase.alpha0, phase.kappa, phase.ell0, phase.mu) == (ALPHA0, KAPPA, 0.0, 1.0)
    assert (config.iterations.levels, config.iterations.outer, config.iterations.inner) == (3, 50, 10)


@pytest.mark.parametrize("case", list(CaseName))
def test_preset_rows(case):
    row = PRESETS[case]
    config = parse_config(f"[case]\ncase = {case.value}\n")
    assert config.phase.beta == row.beta
    assert config.phase.dt == row.dt
    assert (config.iterations.outer, config.iterations.inner) == (50, 10)


def test_bypass_preset_values():
    phase = parse_config("[case]\ncase = bypass\n").phase
    assert (phase.dt, phase.epsilon, phase.gamma, phase.zeta0, phase.beta, phase.s_tilde) == \
        (5e-4, 5e-3, 1e-1, 50.0, 0.1667, 1.0)


def test_overrides_from_every_section():
    text = """
[case]
case = rugby
resolution = 8
initial = disk
center = 0.25, -0.1
radius = 0.3

[iterations]
levels = 1
outer = 4
max_seconds = 60

[phase]
beta = 0.8

[physics]
alpha0 = 500

[output]
directory = somewhere
record_wall_time = false
plot = yes
"""
    config = parse_config(text)
    assert config.resolution == 8
    assert config.initial.kind == InitialPhaseKind.DISK
    assert config.initial.center == (0.25, -0.1)
    assert config.iterations.levels == 1 and config.iterations.inner == 10
    assert config.iterations.max_seconds == 60.0
    assert config.phase.beta == 0.8 and config.phase.alpha0 == 500.0
    assert config.output.directory == "somewhere"
    assert config.output.record_wall_time is False and config.output.plot is True


@pytest.mark.parametrize("text, key", [
    ("[case]\ncase = pipe_bend\n[phase]\nbeta = 1.5\n", "beta"),
    ("[case]\ncase = pipe_bend\n[phase]\nbeta = 0\n", "beta"),
    ("[case]\ncase = pipe_bend\n[phase]\ndt = -1\n", "dt"),
    ("[case]\ncase = pipe_bend\n[iterations]\nouter = many\n", "outer"),
    ("[case]\ncase = pipe_bend\n[iterations]\nlevels = -1\n", "levels"),
    ("[case]\ncase = pipe_bend\nresolution = 2\n", "resolution"),
    ("[case]\ncase = pipe_bend\ninitial_value = 2\n", "initial_value"),
    ("[case]\ncase = pipe_bend\ncenter = 1\n", "center"),
    ("[case]\ncase = pipe_bend\n[phase]\nsharpness = 3\n", "sharpness"),
    ("[case]\ncase = pipe_bend\n[solver]\nmethod = lu\n", "solver"),
    ("[case]\ncase = pipe_flow\n", "case"),
    ("[iterations]\nlevels = 1\n", "case"),
    ("not an ini file", "file"),
])
def test_invalid_configs_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


@pytest.mark.parametrize("case", list(CaseName))
def test_render_round_trip(case):
    config = preset_config(case)
    assert parse_config(render_config(config)) == config


def test_render_round_trip_with_options():
    config = override_config(preset_config(CaseName.BYPASS),
                             iterations={"max_seconds": 12.5, "levels": 0},
                             initial={"kind": InitialPhaseKind.RANDOM, "seed": 3, "value": 0.4},
                             output={"record_wall_time": False})
    assert parse_config(render_config(config)) == config


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[case]\ncase = left_inflow\n[iterations]\nlevels = 2\n", encoding="utf-8")
    config = load_config(path)
    assert config.case == CaseName.LEFT_INFLOW
    assert config.iterations.levels == 2


def test_output_directory_from_environment(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert default_output_dir() == "output"
    monkeypatch.setenv(OUTPUT_DIR_ENV, "/tmp/flows")
    assert default_output_dir() == "/tmp/flows"
    assert parse_config("[case]\ncase = pipe_bend\n").output.directory == "/tmp/flows"


def test_override_validates():
    config = preset_config(CaseName.PIPE_BEND)
    assert override_config(config, resolution=20).resolution == 20
    with pytest.raises(ConfigError) as info:
        override_config(config, iterations={"outer": 0})
    assert info.value.key == "outer"
