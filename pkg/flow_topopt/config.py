"""
Run configuration files.

A configuration is an INI file with the flat sections [case], [iterations],
[phase], [physics] and [output]. Only [case] is required; every omitted key
is taken from the preset of the chosen case.

    [case]
    case = pipe_bend
    resolution = 30

    [iterations]
    levels = 1
"""
import configparser
import os
from pathlib import Path
from typing import Any, Dict, Union

from loguru import logger
from pydantic import ValidationError

from flow_topopt.errors import ConfigError
from flow_topopt.fem.cases import CaseName
from flow_topopt.presets import preset_config
from flow_topopt.schema.params import RunConfig

OUTPUT_DIR_ENV = "FLOW_TOPOPT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "output"

# config key -> field of InitialPhase
_INITIAL_KEYS = {"initial": "kind", "initial_value": "value", "seed": "seed",
                 "center": "center", "radius": "radius"}

SECTION_KEYS: Dict[str, tuple] = {
    "case": ("case", "resolution") + tuple(_INITIAL_KEYS),
    "iterations": ("levels", "outer", "inner", "max_seconds"),
    "phase": ("epsilon", "gamma", "dt", "s_tilde", "beta", "kappa", "zeta0", "ell0"),
    "physics": ("mu", "alpha0"),
    "output": ("directory", "record_wall_time", "write_vtk", "plot"),
}


def default_output_dir() -> str:
    """FLOW_TOPOPT_OUTPUT_DIR when set, ./output otherwise"""
    return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


def _read_sections(text: str) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", f"not a valid INI document: {exc}") from exc
    sections: Dict[str, Dict[str, str]] = {}
    for name in parser.sections():
        if name not in SECTION_KEYS:
            raise ConfigError(name, f"unknown section, expected one of {sorted(SECTION_KEYS)}")
        values = dict(parser.items(name))
        for key in values:
            if key not in SECTION_KEYS[name]:
                raise ConfigError(key, f"unknown key in section [{name}]")
        sections[name] = values
    return sections


def _parse_center(raw: str):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError("center", f"expected 'x, y', got '{raw}'")
    return parts[0], parts[1]


def _first_bad_key(exc: ValidationError) -> str:
    loc = exc.errors()[0]["loc"]
    field = str(loc[-1]) if loc else "config"
    if field.isdigit() and len(loc) > 1:
        field = str(loc[-2])
    # report the config key rather than the model field for the initial phase
    reverse = {v: k for k, v in _INITIAL_KEYS.items()}
    if len(loc) > 1 and loc[0] == "initial":
        return reverse.get(field, field)
    return field


def parse_config(source: Union[str, Path]) -> RunConfig:
    """
    Read a RunConfig from INI text or from a file path.

    Raises:
        ConfigError: unknown section or key, bad value or violated constraint;
            the error names the offending key
    """
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    sections = _read_sections(text)
    case_section = sections.get("case", {})
    if "case" not in case_section:
        raise ConfigError("case", "missing required key in section [case]")
    try:
        case = CaseName(case_section["case"].strip())
    except ValueError:
        raise ConfigError("case", f"unknown case '{case_section['case']}', "
                                  f"expected one of {[c.value for c in CaseName]}") from None

    base = preset_config(case, directory=default_output_dir()).model_dump()
    merged: Dict[str, Any] = dict(base)
    if "resolution" in case_section:
        merged["resolution"] = case_section["resolution"]

    initial = dict(base["initial"])
    for key, field in _INITIAL_KEYS.items():
        if key in case_section:
            initial[field] = _parse_center(case_section[key]) if key == "center" else case_section[key]
    merged["initial"] = initial

    merged["iterations"] = {**base["iterations"], **sections.get("iterations", {})}
    merged["phase"] = {**base["phase"], **sections.get("phase", {}), **sections.get("physics", {})}
    merged["output"] = {**base["output"], **sections.get("output", {})}
    if "max_seconds" in sections.get("iterations", {}) and \
            sections["iterations"]["max_seconds"].strip().lower() in ("", "none"):
        merged["iterations"]["max_seconds"] = None

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as exc:
        key = _first_bad_key(exc)
        raise ConfigError(key, exc.errors()[0]["msg"]) from exc
    logger.debug("Parsed configuration for case {}", config.case.value)
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    return parse_config(Path(path))


def override_config(config: RunConfig, **updates: Dict[str, Any]) -> RunConfig:
    """
    Revalidated copy of config with some fields replaced.

    Nested sections (iterations, initial, output, phase) take dicts that are
    merged into the existing values; top-level fields are replaced.

    Raises:
        ConfigError: an override violates a constraint
    """
    data = config.model_dump()
    for name, value in updates.items():
        if isinstance(value, dict) and isinstance(data.get(name), dict):
            data[name] = {**data[name], **value}
        else:
            data[name] = value
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_first_bad_key(exc), exc.errors()[0]["msg"]) from exc


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_config(config: RunConfig) -> str:
    """INI text that parse_config reads back to an equal RunConfig"""
    parser = configparser.ConfigParser(interpolation=None)
    initial = config.initial
    parser["case"] = {"case": config.case.value, "resolution": str(config.resolution),
                      "initial": initial.kind.value, "seed": str(initial.seed),
                      "center": f"{initial.center[0]!r}, {initial.center[1]!r}",
                      "radius": repr(initial.radius)}
    if initial.value is not None:
        parser["case"]["initial_value"] = repr(initial.value)

    iterations = config.iterations.model_dump(exclude_none=True)
    parser["iterations"] = {k: _fmt(v) for k, v in iterations.items()}
    phase = config.phase.model_dump()
    parser["phase"] = {k: _fmt(phase[k]) for k in SECTION_KEYS["phase"]}
    parser["physics"] = {k: _fmt(phase[k]) for k in SECTION_KEYS["physics"]}
    parser["output"] = {k: _fmt(v) for k, v in config.output.model_dump().items()}

    lines = []
    for name in parser.sections():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in parser[name].items())
        lines.append("")
    return "\n".join(lines)
