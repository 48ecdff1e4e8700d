"""Config ingestion: published JSON schemas, one per CLI command.

Configs are strict: unknown keys are rejected, and every config carries a
schema_version.  The schemas are importable (SCHEMAS) and embedded in the
package rather than shipped as separate files.
"""

from __future__ import annotations

import json

import jsonschema

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    """Configuration failed to load or validate."""


_CHANNEL = {
    "type": "object",
    "oneOf": [
        {
            "type": "object",
            "properties": {"bsc_delta": {"type": "number", "minimum": 0, "maximum": 1}},
            "required": ["bsc_delta"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "prior": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "kernel": {"type": "array"},
            },
            "required": ["prior", "kernel"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "joint": {
                    "type": "object",
                    "properties": {
                        "x_size": {"type": "integer", "minimum": 2},
                        "y_size": {"type": "integer", "minimum": 2},
                        "probs": {"type": "array", "items": {"type": "number"}},
                    },
                    "required": ["x_size", "y_size", "probs"],
                    "additionalProperties": False,
                }
            },
            "required": ["joint"],
            "additionalProperties": False,
        },
    ],
}

_FAMILY = {
    "oneOf": [
        {"const": "cyclic"},
        {
            "type": "object",
            "properties": {"cyclic_step": {"type": "integer", "minimum": 1}},
            "required": ["cyclic_step"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"file": {"type": "string"}},
            "required": ["file"],
            "additionalProperties": False,
        },
    ]
}

_GAMMA = {"oneOf": [{"const": "inv_sqrt"}, {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}]}

_VERSION = {"const": SCHEMA_VERSION}

SCHEMAS: dict[str, dict] = {
    "moments": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "channel": _CHANNEL,
            "rate_grid_points": {"type": "integer", "minimum": 2},
        },
        "required": ["schema_version", "channel"],
        "additionalProperties": False,
    },
    "bound": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "channel": _CHANNEL,
            "n": {"type": "integer", "minimum": 3},
            "alpha": {"type": "number"},
            "c": {"type": "number", "exclusiveMinimum": 0},
            "gamma": _GAMMA,
            "delta": {"type": "number"},
        },
        "required": ["schema_version", "channel", "n", "alpha", "c", "gamma", "delta"],
        "additionalProperties": False,
    },
    "samplesize": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "eps_grid": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "minItems": 1,
            },
            "crossover_grid": {
                "type": "array",
                "items": {"type": "number", "minimum": 0, "maximum": 1},
                "minItems": 1,
            },
            "alpha": {"type": "number"},
            "c": {"type": "number", "exclusiveMinimum": 0},
            "cap": {"type": "integer", "minimum": 1},
        },
        "required": ["schema_version", "eps_grid", "crossover_grid"],
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "id": {"type": "string"},
            "scenario": {
                "type": "object",
                "properties": {
                    "channel": _CHANNEL,
                    "family": _FAMILY,
                    "n": {"type": "integer", "minimum": 1},
                    "trials": {"type": "integer", "minimum": 1},
                    "seed": {"type": "integer", "minimum": 0},
                },
                "required": ["channel", "family", "n", "trials"],
                "additionalProperties": False,
            },
            "decoders": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "properties": {
                        "type": {"enum": ["ml", "mmi", "feinstein"]},
                        "delta": {"type": "number"},
                    },
                    "required": ["type"],
                    "additionalProperties": False,
                },
            },
            "bound": {
                "type": "object",
                "properties": {
                    "alpha": {"type": "number"},
                    "c": {"type": "number", "exclusiveMinimum": 0},
                    "gamma": _GAMMA,
                    "delta": {"type": "number"},
                },
                "required": ["alpha", "c", "gamma", "delta"],
                "additionalProperties": False,
            },
        },
        "required": ["schema_version", "scenario", "decoders"],
        "additionalProperties": False,
    },
    "typecount": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "n": {"type": "integer", "minimum": 1},
            "r": {"type": "integer", "minimum": 2},
            "k": {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "all"}]},
            "budget": {"type": "integer", "minimum": 1},
            "xs": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
        "required": ["schema_version", "n", "r", "k"],
        "additionalProperties": False,
    },
    "gap": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "n": {"type": "integer", "minimum": 1},
            "kappa": {"type": "integer", "minimum": 1},
            "r": {"type": "integer", "minimum": 2},
            "e_star": {"type": "number"},
        },
        "required": ["schema_version", "n", "kappa", "r"],
        "additionalProperties": False,
    },
    "validate-family": {
        "type": "object",
        "properties": {
            "schema_version": _VERSION,
            "family": _FAMILY,
            "n": {"type": "integer", "minimum": 1},
        },
        "required": ["schema_version", "family"],
        "additionalProperties": False,
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path!r}: {exc}") from exc


def validate_config(command: str, obj: dict) -> None:
    schema = SCHEMAS.get(command)
    if schema is None:
        raise ConfigError(f"unknown command {command!r}")
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config invalid for {command!r}: {exc.message}") from exc
