"""Run-configuration parsing, validation and report/table writers.

Configs are single JSON documents validated against published schemas;
every emitted report embeds the resolved config and the tool version so
runs can be reproduced byte for byte from their outputs.
"""

from __future__ import annotations

import csv
import json
import random
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import jsonschema

from . import __version__
from .errors import ConfigError, StopwalkError
from .groups import (
    Element,
    FreeSemigroup,
    GroupSpec,
    InfiniteWord,
    group_spec_from_json,
)
from .harmonic import (
    HarmonicFn,
    constant_fn,
    geodesic_window,
    lattice_exponential,
    minimal_witness,
    power_indicator,
    table_fn,
    word_ball,
)
from .measures import (
    Measure,
    MeasureDeficit,
    as_fraction,
    format_fraction,
)
from .montecarlo import PositionHit
from .stopping import (
    HittingRule,
    MixtureRule,
    StoppingRule,
    constant_time,
    first_hit_capped,
    random_rule,
    table_rule,
)

RATIONAL = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}

GROUP_SCHEMA = {
    "type": "object",
    "properties": {"kind": {"enum": ["integer-lattice", "free-semigroup", "free-group"]}},
    "required": ["kind"],
}

MEASURE_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {"element": {"type": "string"}, "weight": RATIONAL},
        "required": ["element", "weight"],
    },
    "minItems": 1,
}

RULE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {
            "enum": [
                "constant",
                "hit",
                "min-with-constant",
                "mixture",
                "table",
                "random",
                "position-hit",
            ]
        }
    },
    "required": ["kind"],
}

FUNCTION_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {
            "enum": ["constant", "indicator-scaled", "u-g", "table", "lattice-exponential"]
        }
    },
    "required": ["kind"],
}

WINDOW_SCHEMA = {
    "type": "object",
    "properties": {"kind": {"enum": ["ball", "geodesic-prefixes", "elements"]}},
    "required": ["kind"],
}

TRANSFORM_SCHEMA = {
    "type": "object",
    "properties": {
        "group": GROUP_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "rule": RULE_SCHEMA,
        "iterate": {"type": "integer", "minimum": 1},
        "t": RATIONAL,
    },
    "required": ["group", "measure", "rule"],
}

KERNEL_SCHEMA = {
    "type": "object",
    "properties": {
        "group": GROUP_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "operation": {"enum": ["green", "martin", "sequence"]},
        "mode": {"enum": ["free", "truncated"]},
        "horizon": {"type": "integer", "minimum": 0},
        "x": {"type": "string"},
        "y": {"type": "string"},
        "target": {"type": "object"},
        "probes": {"type": "array", "items": {"type": "string"}},
        "sequence": {"type": "array", "items": {"type": "string"}},
        "rel_tol": {"type": "number"},
    },
    "required": ["group", "measure", "operation"],
}

HARMONIC_SCHEMA = {
    "type": "object",
    "properties": {
        "group": GROUP_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "function": FUNCTION_SCHEMA,
        "window": WINDOW_SCHEMA,
        "rule": RULE_SCHEMA,
        "t": RATIONAL,
    },
    "required": ["group", "measure", "function", "window"],
}

LIFT_SCHEMA = {
    "type": "object",
    "properties": {
        "group": GROUP_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "function": FUNCTION_SCHEMA,
        "window": WINDOW_SCHEMA,
        "depth": {"type": "integer", "minimum": 1},
        "rule": RULE_SCHEMA,
    },
    "required": ["group", "measure", "function", "window"],
}

MONTECARLO_SCHEMA = {
    "type": "object",
    "properties": {
        "group": GROUP_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "rule": RULE_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "num_samples": {"type": "integer", "minimum": 1},
        "step_cap": {"type": "integer", "minimum": 1},
        "oracle_rule": RULE_SCHEMA,
        "delta": {"type": "number"},
    },
    "required": ["group", "measure", "rule", "seed", "num_samples"],
}

COMMAND_SCHEMAS = {
    "transform": TRANSFORM_SCHEMA,
    "kernel": KERNEL_SCHEMA,
    "harmonic": HARMONIC_SCHEMA,
    "lift": LIFT_SCHEMA,
    "montecarlo": MONTECARLO_SCHEMA,
}


def validate_config(data: Mapping, command: str) -> Mapping:
    schema = COMMAND_SCHEMAS.get(command)
    if schema is None:
        raise ConfigError(f"unknown command {command!r}")
    try:
        jsonschema.validate(instance=data, schema=schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from None
    return data


def load_config(path: Union[str, Path], command: str) -> Mapping:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate_config(data, command)


def _wrap(fn, *args, what: str):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except StopwalkError as exc:
        raise ConfigError(f"bad {what}: {exc}") from None


def parse_group(data: Mapping) -> GroupSpec:
    return _wrap(group_spec_from_json, data, what="group spec")


def parse_measure(records: Sequence[Mapping], spec: GroupSpec) -> Measure:
    atoms: Dict[Element, Fraction] = {}
    for rec in records:
        el = _wrap(spec.parse, rec["element"], what="element")
        if el in atoms:
            raise ConfigError(f"duplicate atom {rec['element']!r}")
        atoms[el] = _wrap(as_fraction, rec["weight"], what="weight")
    return _wrap(Measure, spec, atoms, what="measure")


def parse_elements(texts: Sequence[str], spec: GroupSpec) -> List[Element]:
    return [_wrap(spec.parse, t, what="element") for t in texts]


def parse_infinite_word(data: Mapping, spec: GroupSpec) -> InfiniteWord:
    if not isinstance(spec, FreeSemigroup):
        raise ConfigError("infinite words live in free semigroups")
    prefix = _wrap(spec.parse, data.get("prefix", "e"), what="prefix")
    period = _wrap(spec.parse, data.get("period", "e"), what="period")
    return InfiniteWord(prefix=prefix, period=period)


def parse_rule(data: Mapping, spec: GroupSpec, mu: Optional[Measure] = None):
    kind = data["kind"]
    if kind == "constant":
        return _wrap(constant_time, int(data["time"]), what="rule")
    if kind == "hit":
        targets = parse_elements(data["targets"], spec)
        return _wrap(
            HittingRule.of_set, targets, int(data["series_depth"]), what="rule"
        )
    if kind == "min-with-constant":
        targets = parse_elements(data["targets"], spec)
        return _wrap(first_hit_capped, targets, int(data["cap"]), what="rule")
    if kind == "mixture":
        parts = []
        for comp in data["components"]:
            w = _wrap(as_fraction, comp["weight"], what="mixture weight")
            parts.append((w, parse_rule(comp["rule"], spec, mu)))
        return _wrap(MixtureRule.of, parts, what="rule")
    if kind == "table":
        entries = {}
        for rec in data.get("entries", []):
            prefix = tuple(parse_elements(rec["prefix"], spec))
            entries[prefix] = _wrap(as_fraction, rec["p"], what="stop probability")
        default = _wrap(as_fraction, data.get("default", "0"), what="default")
        return _wrap(
            table_rule, int(data["bound"]), entries, default, what="rule"
        )
    if kind == "random":
        if mu is None:
            raise ConfigError("random rules need the measure for their alphabet")
        rng = random.Random(int(data.get("rule_seed", 0)))
        return _wrap(
            random_rule,
            mu.support(),
            int(data["bound"]),
            rng,
            int(data.get("denominator", 8)),
            what="rule",
        )
    if kind == "position-hit":
        return _wrap(
            PositionHit, tuple(int(c) for c in data["zero_coords"]), what="rule"
        )
    raise ConfigError(f"unknown rule kind {kind!r}")


def parse_function(data: Mapping, spec: GroupSpec, mu: Optional[Measure] = None) -> HarmonicFn:
    kind = data["kind"]
    if kind == "constant":
        return constant_fn(_wrap(as_fraction, data.get("value", "1"), what="value"))
    if kind == "indicator-scaled":
        return power_indicator(
            data["generator"], _wrap(as_fraction, data["base"], what="base")
        )
    if kind == "u-g":
        if mu is None:
            raise ConfigError("geodesic witness functions need the measure")
        word = parse_infinite_word(data, spec)
        return _wrap(minimal_witness, mu, word, what="function")
    if kind == "table":
        values = {}
        for rec in data.get("entries", []):
            el = _wrap(spec.parse, rec["element"], what="element")
            values[el] = _wrap(as_fraction, rec["value"], what="value")
        return table_fn(values, _wrap(as_fraction, data.get("default", "0"), what="default"))
    if kind == "lattice-exponential":
        return _wrap(
            lattice_exponential,
            as_fraction(data["base"]),
            int(data.get("axis", 0)),
            what="function",
        )
    raise ConfigError(f"unknown function kind {kind!r}")


def parse_window(data: Mapping, spec: GroupSpec) -> List[Element]:
    kind = data["kind"]
    if kind == "ball":
        return _wrap(word_ball, spec, int(data["radius"]), what="window")
    if kind == "geodesic-prefixes":
        word = parse_infinite_word(data, spec)
        return _wrap(geodesic_window, word, int(data["length"]), what="window")
    if kind == "elements":
        return parse_elements(data["elements"], spec)
    raise ConfigError(f"unknown window kind {kind!r}")


# ---------------------------------------------------------------------------
# Output writers


def report_envelope(config: Mapping, body: Mapping) -> Dict:
    return {"version": __version__, "config": dict(config), **body}


def write_json(path: Path, payload: Mapping) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def measure_rows(mu: Measure) -> List[List[str]]:
    return [
        [mu.spec.format(el), format_fraction(w), repr(float(w))]
        for el, w in mu.items()
    ]


def deficit_json(md: MeasureDeficit) -> Dict:
    return {
        "atoms": [
            {
                "element": md.measure.spec.format(el),
                "weight": format_fraction(w),
                "weight_float": float(w),
            }
            for el, w in md.measure.items()
        ],
        "total_mass": format_fraction(md.measure.total_mass),
        "missing_mass": format_fraction(md.missing_mass),
    }
