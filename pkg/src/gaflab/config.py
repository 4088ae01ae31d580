"""Experiment configuration files: flat ``section.key = value`` text.

Unknown keys are errors (no schema drift); every diagnostic carries the
offending line.  The same file drives every CLI command; commands read the
sections they need.
"""

from __future__ import annotations

from pathlib import Path

from .clt import ExperimentConfig
from .errors import ConfigError
from .geometry import (
    TestForm,
    WeightModel,
    bargmann_fock,
    plateau_bump,
    quartic_bump,
    radial_polynomial,
)


def _parse_int(text):
    return int(text, 0)


def _parse_float(text):
    return float(text)


def _parse_str(text):
    return text


def _parse_int_list(text):
    return tuple(int(part.strip(), 0) for part in text.split(",") if part.strip())


def _parse_float_list(text):
    return tuple(float(part.strip()) for part in text.split(",") if part.strip())


# key -> (parser, default); REQUIRED means the key must be present
_REQUIRED = object()

_SCHEMA = {
    "model.kind": (_parse_str, _REQUIRED),
    "model.truncation_radius": (_parse_float, _REQUIRED),
    "model.n_ladder": (_parse_int_list, _REQUIRED),
    "model.coefficients": (_parse_float_list, ()),
    "testform.kind": (_parse_str, "quartic_bump"),
    "testform.support_radius": (_parse_float, 1.0),
    "testform.amplitude": (_parse_float, 1.0),
    "basis.tail_tol": (_parse_float, 1e-9),
    "basis.degree_cap": (_parse_int, 4096),
    "quad.radial_nodes": (_parse_int, 0),
    "quad.angular_nodes": (_parse_int, 0),
    "quad.pl_tol": (_parse_float, 5e-4),
    "quad.pl_base_cells": (_parse_int, 24),
    "quad.pl_points": (_parse_int, 6),
    "clt.samples": (_parse_int, 2000),
    "clt.audit_samples": (_parse_int, 100),
    "clt.seed": (_parse_int, 20260809),
    "roots.polish_tol": (_parse_float, 1e-12),
    "asym.b0": (_parse_float, 3.0),
    "asym.k": (_parse_int, 1),
    "asym.base_radius": (_parse_float, 0.0),
    "conditions.ratio_floor": (_parse_float, 0.05),
}

_MODEL_KINDS = ("bargmann_fock", "radial_polynomial")
_FORM_KINDS = ("quartic_bump", "plateau_bump")


def parse_config(path: str | Path) -> dict:
    """Read and type-check a configuration file into a flat dict."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        parser, _ = _SCHEMA[key]
        try:
            raw[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(
                f"{path}:{lineno}: bad value for '{key}': {exc}"
            ) from exc
    out: dict = {}
    for key, (parser, default) in _SCHEMA.items():
        if key in raw:
            out[key] = raw[key]
        elif default is _REQUIRED:
            raise ConfigError(f"{path}: missing required key '{key}'")
        else:
            out[key] = default
    kind = out["model.kind"]
    if kind not in _MODEL_KINDS:
        raise ConfigError(
            f"{path}: model.kind must be one of {_MODEL_KINDS}, got '{kind}'"
        )
    if kind == "radial_polynomial" and not out["model.coefficients"]:
        raise ConfigError(
            f"{path}: radial_polynomial requires model.coefficients"
        )
    if out["testform.kind"] not in _FORM_KINDS:
        raise ConfigError(
            f"{path}: testform.kind must be one of {_FORM_KINDS}"
        )
    return out


def build_model_from_primitives(cfg: dict) -> WeightModel:
    kind = cfg["model.kind"]
    radius = cfg["model.truncation_radius"]
    if kind == "bargmann_fock":
        return bargmann_fock(radius)
    return radial_polynomial(cfg["model.coefficients"], radius)


def build_form_from_primitives(cfg: dict) -> TestForm:
    kind = cfg["testform.kind"]
    factory = quartic_bump if kind == "quartic_bump" else plateau_bump
    return factory(cfg["testform.support_radius"], cfg["testform.amplitude"])


def build_experiment(cfg: dict) -> ExperimentConfig:
    return ExperimentConfig(
        model=build_model_from_primitives(cfg),
        form=build_form_from_primitives(cfg),
        n_ladder=tuple(cfg["model.n_ladder"]),
        samples_per_n=cfg["clt.samples"],
        master_seed=cfg["clt.seed"],
        audit_samples=cfg["clt.audit_samples"],
        tail_tol=cfg["basis.tail_tol"],
        degree_cap=cfg["basis.degree_cap"],
        polish_tol=cfg["roots.polish_tol"],
        b0=cfg["asym.b0"],
        k=cfg["asym.k"],
        pl_tol=cfg["quad.pl_tol"],
        pl_base_cells=cfg["quad.pl_base_cells"],
        pl_gl_points=cfg["quad.pl_points"],
        conditions_ratio_floor=cfg["conditions.ratio_floor"],
        spec=dict(cfg),
    )


def asym_base_radius(cfg: dict) -> float:
    """Base-point grid radius for kernel asymptotics sweeps: configured
    value, else the support radius capped at half the truncation radius."""
    configured = cfg["asym.base_radius"]
    if configured > 0:
        return configured
    return min(cfg["testform.support_radius"], cfg["model.truncation_radius"] / 2.0)
