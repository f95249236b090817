"""Flat key-value run configuration.

Format: one `key = value` assignment per line, `#` comment lines and blank
lines ignored.  Keys are dotted lowercase names (`lum_spectrum.center_nm`);
the full list lives in the registry below and in the README.  Unknown keys
and duplicate assignments are hard errors naming the offending key.

Filters and scenarios are declared as numbered groups:

    filter.1.kind = longpass
    filter.1.cutoff_nm = 460
    scenario.1.label = no filtering

Values are typed: floats, integers, booleans (`true`/`false`), strings,
comma-separated float lists, and `none` for optional keys.

Resolution order: registry defaults, then the config file, then environment
variables, then explicit overrides (CLI flags).  Environment variables use
the prefix SPDCLUM_ with `.` spelled as `__`, e.g.
SPDCLUM_LUM_SPECTRUM__CENTER_NM=435.  A resolved configuration serializes to
the same format with every key explicit, so a run can be reproduced from the
file it wrote.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass

from .emission import WavelengthGrid, make_model
from .filters import (BandpassFilter, FilterChain, LongpassFilter, Polarizer,
                      ScenarioSpec, TemporalGate)
from .herald import HeraldParams

ENV_PREFIX = "SPDCLUM_"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# value kinds: parse/format pairs. Optional kinds accept the literal none.
def _parse_float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    if math.isnan(value):
        raise ConfigError(f"{key}: nan is not allowed")
    return value


def _parse_int(key, text):
    try:
        return int(text, 10)
    except ValueError:
        pass
    # accept 1e7-style shorthand as long as the value is integral
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {text!r}") from None
    if not value.is_integer():
        raise ConfigError(f"{key}: not an integer: {text!r}")
    return int(value)


def _parse_bool(key, text):
    if text == "true":
        return True
    if text == "false":
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}")


def _parse_floats(key, text):
    parts = [p.strip() for p in text.split(",")]
    if parts == [""]:
        raise ConfigError(f"{key}: empty list")
    return tuple(_parse_float(key, p) for p in parts)


def _parse_str(key, text):
    return text


_PARSERS = {
    "float": _parse_float,
    "int": _parse_int,
    "bool": _parse_bool,
    "floats": _parse_floats,
    "str": _parse_str,
}


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class KeySpec:
    kind: str
    default: object
    optional: bool = False
    choices: tuple[str, ...] | None = None

    def parse(self, key: str, text: str):
        if self.optional and text == "none":
            return None
        value = _PARSERS[self.kind](key, text)
        if self.choices is not None and value not in self.choices:
            raise ConfigError(
                f"{key}: expected one of {', '.join(self.choices)}, "
                f"got {value!r}")
        return value


def _k(kind, default, optional=False, choices=None):
    return KeySpec(kind, default, optional, choices)


# Scalar keys, in serialization order.
REGISTRY: dict[str, KeySpec] = {
    "seed": _k("int", 0),
    "out.dir": _k("str", None, optional=True),
    "out.format": _k("str", "pretty", choices=("csv", "pretty")),

    "pump.wavelength_nm": _k("float", 267.0),
    "pump.power_mw": _k("float", 100.0),
    "pump.repetition_rate_hz": _k("float", 1000.0),
    "pump.polarization_angle_deg": _k("float", 0.0),
    "spdc_spectrum.fwhm_nm": _k("float", 10.0),
    "lum_spectrum.center_nm": _k("float", 430.0),
    "lum_spectrum.fwhm_nm": _k("float", 60.0),
    "lum_spectrum.skew": _k("float", 0.4),
    "lum_decay.amplitudes": _k("floats", (0.90, 0.07, 0.03)),
    "lum_decay.lifetimes_ns": _k("floats", (0.73, 1850.0, 9950.0)),
    "lum_decay.irf_fwhm_ns": _k("float", 0.15),
    "spdc_rate_hz": _k("float", 1.0e5),
    "lum_rate_hz": _k("float", 6.036e4),
    "spdc_polarized": _k("bool", True),
    "spdc_power_exponent": _k("float", 1.0),
    "grid.min_nm": _k("float", 300.0),
    "grid.max_nm": _k("float", 700.0),
    "grid.step_nm": _k("float", 1.0),

    "synth.exposure": _k("int", 100000),
    "synth.time_min_ns": _k("float", -2.0),
    "synth.time_max_ns": _k("float", 8.0),
    "synth.time_step_ns": _k("float", 0.05),
    "synth.wavelength_min_nm": _k("float", None, optional=True),
    "synth.wavelength_max_nm": _k("float", None, optional=True),
    "synth.wavelength_step_nm": _k("float", None, optional=True),
    "synth.t0_ns": _k("float", 0.0),

    "analyze.overlap_mode": _k("str", "none",
                               choices=("none", "model-subtract")),
    "analyze.spdc_roi": _k("floats", None, optional=True),
    "analyze.lum_roi": _k("floats", None, optional=True),
    "analyze.t0_ns": _k("float", None, optional=True),

    "fit.n_components": _k("int", 1),
    "fit.irf_fwhm_ns": _k("float", None, optional=True),
    "fit.baseline_mode": _k("str", "free", choices=("free", "zero")),
    "fit.t0_ns": _k("float", 0.0),
    "fit.fit_t0": _k("bool", None, optional=True),
    "fit.band_nm": _k("floats", None, optional=True),

    "herald.spdc_rate_hz": _k("float", 1.0e5),
    "herald.lum_rate_hz": _k("float", 6.036e4),
    "herald.window_ns": _k("float", 10.0),
    "herald.lum_rate_signal_hz": _k("float", None, optional=True),
    "herald.efficiency": _k("float", 1.0),
    "herald.n_windows": _k("int", 0),
    "herald.snr": _k("float", None, optional=True),

    "scenario.window_ns": _k("float", 10.0),
    "scenario.spdc_rate_hz": _k("float", 1.0e5),
    "scenario.baseline_c_spdc": _k("float", 2.225e10, optional=True),
    "scenario.baseline_c_lum": _k("float", 1.343e10, optional=True),
}

# Numbered groups: filter.N.* and scenario.N.*. Per kind: required and
# optional member keys (with defaults).
_FILTER_KINDS = {
    "polarizer": ({}, {"axis": _k("str", "aligned_to_spdc",
                                  choices=("aligned_to_spdc", "orthogonal"))}),
    "longpass": ({"cutoff_nm": _k("float", None)},
                 {"transmission": _k("float", 0.95)}),
    "bandpass": ({"center_nm": _k("float", None),
                  "fwhm_nm": _k("float", None)},
                 {"peak_transmission": _k("float", 0.95)}),
    "temporal_gate": ({"window_ns": _k("float", None),
                       "repetition_rate_hz": _k("float", None)},
                      {"latency_ns": _k("float", 0.0)}),
}

_SCENARIO_MEMBERS = {
    "label": _k("str", None, optional=True),
    "c_spdc": _k("float", None, optional=True),
    "c_lum": _k("float", None, optional=True),
    "spdc_fraction": _k("float", None, optional=True),
    "lum_fraction": _k("float", None, optional=True),
    "use_chain": _k("bool", False),
    "reference_snr": _k("float", None, optional=True),
}

_GROUP_RE = re.compile(r"^(filter|scenario)\.([0-9]+)\.([a-z0-9_]+)$")
_KEY_RE = re.compile(r"^[a-z0-9_.]+$")

_FILTER_KIND_SPEC = _k("str", None, choices=tuple(_FILTER_KINDS))


class RunConfig:
    """Fully-resolved configuration: every registry key has a value."""

    def __init__(self, values: dict, groups: dict):
        self._values = values
        # groups: family -> {index -> {member -> value}}
        self._groups = groups

    def get(self, key: str):
        try:
            return self._values[key]
        except KeyError:
            raise ConfigError(f"unknown key: {key}") from None

    def group_indices(self, family: str) -> list[int]:
        return sorted(self._groups.get(family, ()))

    def group(self, family: str, index: int) -> dict:
        return dict(self._groups[family][index])

    # -- serialization ----------------------------------------------------

    def serialize(self) -> str:
        lines = ["# resolved run configuration"]
        for key in REGISTRY:
            lines.append(f"{key} = {_format_value(self._values[key])}")
        for family in ("filter", "scenario"):
            for index in self.group_indices(family):
                members = self._groups[family][index]
                for member, value in members.items():
                    lines.append(
                        f"{family}.{index}.{member} = "
                        f"{_format_value(value)}")
        return "\n".join(lines) + "\n"

    # -- builders ----------------------------------------------------------

    def build_model(self):
        g = self.get
        grid = WavelengthGrid(g("grid.min_nm"), g("grid.max_nm"),
                              g("grid.step_nm"))
        try:
            return make_model(
                g("pump.wavelength_nm"),
                pump_power_mw=g("pump.power_mw"),
                repetition_rate_hz=g("pump.repetition_rate_hz"),
                pump_polarization_deg=g("pump.polarization_angle_deg"),
                spdc_fwhm_nm=g("spdc_spectrum.fwhm_nm"),
                lum_center_nm=g("lum_spectrum.center_nm"),
                lum_fwhm_nm=g("lum_spectrum.fwhm_nm"),
                lum_skew=g("lum_spectrum.skew"),
                amplitudes=g("lum_decay.amplitudes"),
                lifetimes_ns=g("lum_decay.lifetimes_ns"),
                irf_fwhm_ns=g("lum_decay.irf_fwhm_ns"),
                spdc_rate_hz=g("spdc_rate_hz"),
                lum_rate_hz=g("lum_rate_hz"),
                spdc_polarized=g("spdc_polarized"),
                spdc_power_exponent=g("spdc_power_exponent"),
                grid=grid,
            )
        except ValueError as exc:
            raise ConfigError(f"emission model: {exc}") from exc

    def build_chain(self) -> FilterChain:
        filters = []
        for index in self.group_indices("filter"):
            members = self.group("filter", index)
            kind = members.pop("kind")
            try:
                if kind == "polarizer":
                    filters.append(Polarizer(**members))
                elif kind == "longpass":
                    filters.append(LongpassFilter(**members))
                elif kind == "bandpass":
                    filters.append(BandpassFilter(**members))
                else:
                    filters.append(TemporalGate(**members))
            except ValueError as exc:
                raise ConfigError(f"filter.{index}: {exc}") from exc
        try:
            return FilterChain(tuple(filters))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_scenarios(self) -> list[ScenarioSpec]:
        base_s = self.get("scenario.baseline_c_spdc")
        base_l = self.get("scenario.baseline_c_lum")
        specs = []
        for index in self.group_indices("scenario"):
            members = self.group("scenario", index)
            label = members.pop("label") or f"scenario-{index}"
            c_spdc = members.pop("c_spdc")
            c_lum = members.pop("c_lum")
            if c_spdc is None:
                c_spdc = base_s
            if c_lum is None:
                c_lum = base_l
            if c_spdc is None or c_lum is None:
                raise ConfigError(
                    f"scenario.{index}: no baseline counts (set "
                    f"scenario.{index}.c_spdc/c_lum or the "
                    f"scenario.baseline_c_* keys)")
            try:
                specs.append(ScenarioSpec(label=label, c_spdc=c_spdc,
                                          c_lum=c_lum, **members))
            except ValueError as exc:
                raise ConfigError(f"scenario.{index}: {exc}") from exc
        return specs

    def build_herald(self) -> HeraldParams:
        g = self.get
        try:
            return HeraldParams(
                spdc_rate_hz=g("herald.spdc_rate_hz"),
                lum_rate_hz=g("herald.lum_rate_hz"),
                window_ns=g("herald.window_ns"),
                lum_rate_signal_hz=g("herald.lum_rate_signal_hz"),
                efficiency=g("herald.efficiency"),
            )
        except ValueError as exc:
            raise ConfigError(f"herald: {exc}") from exc


def _parse_assignments(text: str, source: str) -> dict[str, str]:
    """Raw key -> text map; duplicate keys are an error."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source} line {lineno}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"{source} line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"{source} line {lineno}: duplicate key {key}")
        out[key] = value
    return out


def _env_assignments(environ) -> dict[str, str]:
    out: dict[str, str] = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower().replace("__", ".")
        if not _KEY_RE.match(key):
            raise ConfigError(f"environment variable {name}: bad key")
        out[key] = environ[name]
    return out


def resolve_config(path: str | None = None, *,
                   overrides: dict[str, str] | None = None,
                   environ=None) -> RunConfig:
    """Merge defaults, file, environment, and overrides into a RunConfig.

    overrides are raw key=value strings (e.g. from CLI flags) and win over
    everything; environment variables win over the file.  Every value is
    parsed and validated against the registry; unknown keys raise
    ConfigError.
    """
    if environ is None:
        environ = os.environ
    layers: list[dict[str, str]] = []
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        layers.append(_parse_assignments(text, path))
    layers.append(_env_assignments(environ))
    if overrides:
        layers.append(dict(overrides))

    merged: dict[str, str] = {}
    for layer in layers:
        merged.update(layer)

    # split scalar keys from group keys
    scalar_raw: dict[str, str] = {}
    group_raw: dict[str, dict[int, dict[str, str]]] = {}
    for key, text in merged.items():
        m = _GROUP_RE.match(key)
        if m:
            family, index, member = m.group(1), int(m.group(2)), m.group(3)
            if index < 1:
                raise ConfigError(f"{key}: group indices start at 1")
            group_raw.setdefault(family, {}).setdefault(index, {})[member] = \
                text
        elif key in REGISTRY:
            scalar_raw[key] = text
        else:
            raise ConfigError(f"unknown key: {key}")

    values = {}
    for key, spec in REGISTRY.items():
        if key in scalar_raw:
            values[key] = spec.parse(key, scalar_raw[key])
        else:
            values[key] = spec.default

    groups: dict[str, dict[int, dict]] = {}
    for family, by_index in group_raw.items():
        for index, members in sorted(by_index.items()):
            parsed = _parse_group(family, index, members)
            groups.setdefault(family, {})[index] = parsed
    return RunConfig(values, groups)


def _parse_group(family: str, index: int, members: dict[str, str]) -> dict:
    if family == "scenario":
        parsed = {}
        for member, spec in _SCENARIO_MEMBERS.items():
            key = f"scenario.{index}.{member}"
            if member in members:
                parsed[member] = spec.parse(key, members[member])
            else:
                parsed[member] = spec.default
        for member in members:
            if member not in _SCENARIO_MEMBERS:
                raise ConfigError(f"unknown key: scenario.{index}.{member}")
        return parsed

    if "kind" not in members:
        raise ConfigError(
            f"filter.{index}: missing filter.{index}.kind")
    kind = _FILTER_KIND_SPEC.parse(f"filter.{index}.kind", members["kind"])
    required, optional = _FILTER_KINDS[kind]
    parsed = {"kind": kind}
    for member, spec in required.items():
        key = f"filter.{index}.{member}"
        if member not in members:
            raise ConfigError(f"{key} is required for kind {kind}")
        parsed[member] = spec.parse(key, members[member])
    for member, spec in optional.items():
        key = f"filter.{index}.{member}"
        if member in members:
            parsed[member] = spec.parse(key, members[member])
        else:
            parsed[member] = spec.default
    for member in members:
        if member != "kind" and member not in required and \
                member not in optional:
            raise ConfigError(
                f"unknown key: filter.{index}.{member} "
                f"(not a member of kind {kind})")
    return parsed
