"""Run configuration: INI-style files, typed per-subcommand schemas,
and command-line overrides.

A config has three sections.  [family] describes the map under study,
[experiment] the sweep for the chosen subcommand, [output] where and in
which formats results land.  Overrides accept either a dotted form
(``experiment.k_max=14``) or a bare key, which is resolved against the
subcommand's experiment schema first, then the family schema, then the
output schema.
"""

from __future__ import annotations

import os
from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import dataclass

from .exceptions import ConfigError

__all__ = ["RunConfig", "SUBCOMMANDS", "load_config"]

# value kinds: str, int, float, optfloat (None unless set), floats
# (comma- or space-separated list)
_FAMILY_SCHEMA = {
    "recipe": ("str", "fold"),
    "lam": ("float", 0.5),
    "beta": ("floats", ()),
    "p": ("floats", (0.0, 1.0)),
    "q": ("floats", (0.0, 0.0, 1.0)),
    "x_plus": ("float", 1.0),
    "y_minus": ("float", 1.0),
    "n0": ("int", 1),
    "mu": ("float", 0.0),
    "h0": ("float", 0.05),
    "alpha": ("optfloat", None),
    "s0": ("optfloat", None),
    "p1": ("float", 0.3),
    "p2": ("float", 0.1),
    "q1": ("float", 0.5),
    "d": ("float", 1.0),
    "m3": ("float", 0.0),
    "w1": ("float", 0.2),
    "w2": ("float", 0.0),
}

_EXPERIMENT_SCHEMAS = {
    "henon": {
        "M": ("float", 0.625),
        "m_horseshoe": ("float", 10.0),
        "scan_min": ("float", 0.05),
        "scan_max": ("float", 0.95),
        "scan_n": ("int", 19),
    },
    "family-check": {},
    "cross-form": {
        "k_min": ("int", 6),
        "k_max": ("int", 16),
    },
    "classify": {
        "k_min": ("int", 8),
        "k_max": ("int", 14),
    },
    "cascade": {
        "k_min": ("int", 8),
        "k_max": ("int", 14),
    },
    "atlas2d": {
        "k_min": ("int", 8),
        "k_max": ("int", 12),
        "eps": ("float", 0.05),
        "n_alpha": ("int", 41),
    },
    "resonance": {
        "k_min": ("int", 8),
        "k_max": ("int", 14),
    },
    "rescale-verify": {
        "k_min": ("int", 8),
        "k_max": ("int", 14),
        "m": ("float", 0.5),
        "grid_n": ("int", 9),
    },
}

_OUTPUT_SCHEMA = {
    "dir": ("str", "out"),
    "formats": ("str", "json,csv,svg"),
}

SUBCOMMANDS = tuple(_EXPERIMENT_SCHEMAS)


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    family: dict
    experiment: dict
    output: dict


def _convert(kind, key, raw):
    try:
        if kind == "str":
            return str(raw)
        if kind == "int":
            return int(str(raw), 10)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw is None or raw == "" else float(raw)
        if kind == "floats":
            if isinstance(raw, (tuple, list)):
                return tuple(float(v) for v in raw)
            text = str(raw).replace(",", " ")
            return tuple(float(v) for v in text.split())
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    raise ConfigError(f"unknown schema kind {kind!r}")


def _validated(section_name, schema, raw):
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(
                f"unknown key {key!r} in section [{section_name}]"
            )
        out[key] = _convert(schema[key][0], f"{section_name}.{key}", value)
    for key, (kind, default) in schema.items():
        out.setdefault(key, default)
    return out


def _resolve_bare(key, experiment_schema):
    if key in experiment_schema:
        return "experiment"
    if key in _FAMILY_SCHEMA:
        return "family"
    if key in _OUTPUT_SCHEMA:
        return "output"
    raise ConfigError(f"unknown override key {key!r}")


def load_config(subcommand, path=None, overrides=(), out_dir=None):
    """Assemble and validate the configuration for one run."""
    if subcommand not in _EXPERIMENT_SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    experiment_schema = _EXPERIMENT_SCHEMAS[subcommand]
    raw = {"family": {}, "experiment": {}, "output": {}}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = ConfigParser()
        # keep option names case-sensitive so keys like M survive
        parser.optionxform = str
        try:
            parser.read(path, encoding="utf-8")
        except ConfigParserError as exc:
            raise ConfigError(f"malformed config file: {exc}") from exc
        for section in parser.sections():
            if section not in raw:
                raise ConfigError(f"unknown config section [{section}]")
            raw[section].update(dict(parser[section]))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, key = key.split(".", 1)
            if section not in raw:
                raise ConfigError(f"unknown override section {section!r}")
        else:
            section = _resolve_bare(key, experiment_schema)
        raw[section][key] = value.strip()
    if out_dir is not None:
        raw["output"]["dir"] = out_dir
    return RunConfig(
        subcommand=subcommand,
        family=_validated("family", _FAMILY_SCHEMA, raw["family"]),
        experiment=_validated(
            "experiment", experiment_schema, raw["experiment"]
        ),
        output=_validated("output", _OUTPUT_SCHEMA, raw["output"]),
    )
