"""Model/run configuration files: a YAML key-value tree with nested
sections, validated against an explicit schema with line-level errors.

Top-level sections: ``model`` (required), ``run`` (optional stage-size
defaults the CLI may override), ``regen`` (optional minorization data for
the split-chain stage).  See the README for the full field list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .model import ModelSpec, QLaw, RotationLaw, ScaleLaw, SpecError


class ConfigError(ValueError):
    """Invalid configuration; message carries file and line."""

    def __init__(self, message: str, path: str = "?", line: int = 0):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class _Cursor:
    """A YAML node with position-aware typed accessors."""

    def __init__(self, node, path: str, name: str = ""):
        self.node = node
        self.path = path
        self.name = name

    @property
    def line(self) -> int:
        return self.node.start_mark.line + 1 if self.node is not None else 0

    def fail(self, message: str):
        raise ConfigError(message, self.path, self.line)

    def mapping(self, allowed: set) -> dict:
        if not isinstance(self.node, yaml.MappingNode):
            self.fail(f"section {self.name!r} must be a mapping")
        out = {}
        for key_node, val_node in self.node.value:
            key = key_node.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", self.path,
                                  key_node.start_mark.line + 1)
            if key not in allowed:
                raise ConfigError(
                    f"unknown key {key!r} in section {self.name!r} "
                    f"(allowed: {', '.join(sorted(allowed))})",
                    self.path, key_node.start_mark.line + 1)
            out[key] = _Cursor(val_node, self.path,
                               f"{self.name}.{key}" if self.name else key)
        return out

    def scalar(self, kind: type):
        if not isinstance(self.node, yaml.ScalarNode):
            self.fail(f"{self.name!r} must be a {kind.__name__}")
        raw = self.node.value
        try:
            if kind is bool:
                if raw.lower() in ("true", "yes", "on"):
                    return True
                if raw.lower() in ("false", "no", "off"):
                    return False
                raise ValueError(raw)
            return kind(raw)
        except (TypeError, ValueError):
            self.fail(f"{self.name!r} must be a {kind.__name__}, "
                      f"got {raw!r}")

    def string(self) -> str:
        if not isinstance(self.node, yaml.ScalarNode):
            self.fail(f"{self.name!r} must be a string")
        return str(self.node.value)

    def array(self) -> np.ndarray:
        try:
            data = yaml.safe_load(yaml.serialize(self.node))
            arr = np.asarray(data, dtype=float)
        except (ValueError, yaml.YAMLError):
            self.fail(f"{self.name!r} must be a numeric array")
        return arr


def _require(section: dict, key: str, cursor: _Cursor) -> _Cursor:
    if key not in section:
        cursor.fail(f"missing required key {key!r} in {cursor.name!r}")
    return section[key]


MODEL_KEYS = {"dimension", "family", "kappa0", "m", "scale", "rotation",
              "gamma0", "sigma", "cond_cap", "q"}
M_KEYS = {"atoms", "weights", "log_mean", "log_sd"}
SCALE_KEYS = {"law", "value", "log_mean", "log_sd", "atoms", "weights"}
ROTATION_KEYS = {"law", "angle", "matrix"}
Q_KEYS = {"law", "atoms", "weights", "dependence", "mean", "sd"}
RUN_KEYS = {"grid", "samples", "steps", "burn_in", "tol", "root_tol",
            "n_mc", "t_points", "n_pairs", "n_prop", "directions_random",
            "lyapunov_steps", "lyapunov_chains", "audit_samples",
            "regen_steps", "hill_fractions"}
REGEN_KEYS = {"preset", "p", "center", "delta", "kernel", "whole_sphere"}
TOP_KEYS = {"model", "run", "regen"}


@dataclass
class RunConfig:
    """Parsed configuration: the model plus optional stage defaults."""

    spec: ModelSpec
    run: dict = field(default_factory=dict)
    regen: Optional[dict] = None
    source_path: str = "?"
    raw_bytes: bytes = b""


def load_config(path) -> RunConfig:
    path = str(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        root = yaml.compose(raw.decode("utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else 0
        raise ConfigError(f"YAML parse error: {exc}", path, line) from exc
    if root is None:
        raise ConfigError("empty configuration file", path, 0)
    top = _Cursor(root, path).mapping(TOP_KEYS)
    if "model" not in top:
        raise ConfigError("missing required section 'model'", path, 1)
    spec = _parse_model(top["model"])
    run = _parse_run(top["run"]) if "run" in top else {}
    regen = _parse_regen(top["regen"], spec) if "regen" in top else None
    return RunConfig(spec=spec, run=run, regen=regen, source_path=path,
                     raw_bytes=raw)


def _parse_model(cur: _Cursor) -> ModelSpec:
    sec = cur.mapping(MODEL_KEYS)
    d = _require(sec, "dimension", cur).scalar(int)
    family = _require(sec, "family", cur).string()
    kappa0 = _require(sec, "kappa0", cur).scalar(float)
    try:
        if family == "scalar_two_point":
            m = _require(sec, "m", cur).mapping(M_KEYS)
            atoms = _require(m, "atoms", sec["m"]).array()
            weights = _require(m, "weights", sec["m"]).array()
            spec = ModelSpec(
                dimension=d, family=family, kappa0=kappa0,
                m_atoms=np.asarray(atoms, dtype=float).reshape(-1, 1, 1),
                m_weights=weights, q=_parse_q(sec, cur, d, len(weights)))
        elif family == "scalar_lognormal":
            m = _require(sec, "m", cur).mapping(M_KEYS)
            spec = ModelSpec(
                dimension=d, family=family, kappa0=kappa0,
                log_mean=_require(m, "log_mean", sec["m"]).scalar(float),
                log_sd=_require(m, "log_sd", sec["m"]).scalar(float),
                q=_parse_q(sec, cur, d, None))
        elif family == "similarity":
            spec = ModelSpec(
                dimension=d, family=family, kappa0=kappa0,
                scale=_parse_scale(_require(sec, "scale", cur)),
                rotation=_parse_rotation(_require(sec, "rotation", cur), d),
                q=_parse_q(sec, cur, d, None))
        elif family == "gaussian_perturbed":
            gamma0 = _require(sec, "gamma0", cur).array()
            kwargs = {}
            if "cond_cap" in sec:
                kwargs["cond_cap"] = sec["cond_cap"].scalar(float)
            spec = ModelSpec(
                dimension=d, family=family, kappa0=kappa0, gamma0=gamma0,
                sigma=_require(sec, "sigma", cur).scalar(float),
                q=_parse_q(sec, cur, d, None), **kwargs)
        elif family == "custom":
            m = _require(sec, "m", cur).mapping(M_KEYS)
            atoms = _require(m, "atoms", sec["m"]).array()
            weights = _require(m, "weights", sec["m"]).array()
            spec = ModelSpec(
                dimension=d, family=family, kappa0=kappa0, m_atoms=atoms,
                m_weights=weights, q=_parse_q(sec, cur, d, len(weights)))
        else:
            cur.fail(f"unknown family {family!r}")
    except SpecError as exc:
        raise ConfigError(str(exc), cur.path, cur.line) from exc
    return spec


def _parse_q(sec: dict, cur: _Cursor, d: int, n_m_atoms) -> QLaw:
    qcur = _require(sec, "q", cur)
    q = qcur.mapping(Q_KEYS)
    law = _require(q, "law", qcur).string()
    dependence = q["dependence"].string() if "dependence" in q else \
        "independent"
    if law == "atoms":
        atoms = _require(q, "atoms", qcur).array()
        if atoms.ndim == 1:
            if d != 1:
                qcur.fail("q atoms must be d-vectors for d > 1")
            atoms = atoms.reshape(-1, 1)
        if dependence == "matched":
            weights = np.full(len(atoms), np.nan)
            if n_m_atoms is not None:
                weights = np.zeros(len(atoms))  # placeholder, tied to M
        if "weights" in q:
            weights = q["weights"].array()
        elif dependence != "matched":
            if len(atoms) != 1:
                qcur.fail("q weights required for more than one atom")
            weights = np.array([1.0])
        else:
            weights = np.full(len(atoms), 1.0 / len(atoms))
        return QLaw(kind="atoms", atoms=atoms, weights=weights,
                    dependence=dependence)
    if law == "gaussian":
        mean = _require(q, "mean", qcur).array()
        sd = q["sd"].scalar(float) if "sd" in q else 1.0
        return QLaw(kind="gaussian", mean=mean, sd=sd,
                    dependence=dependence)
    qcur.fail(f"unknown q law {law!r}")


def _parse_scale(cur: _Cursor) -> ScaleLaw:
    sec = cur.mapping(SCALE_KEYS)
    law = _require(sec, "law", cur).string()
    if law == "deterministic":
        return ScaleLaw(kind=law, value=_require(sec, "value", cur)
                        .scalar(float))
    if law == "lognormal":
        return ScaleLaw(kind=law,
                        log_mean=_require(sec, "log_mean", cur).scalar(float),
                        log_sd=_require(sec, "log_sd", cur).scalar(float))
    if law == "atoms":
        return ScaleLaw(kind=law, atoms=_require(sec, "atoms", cur).array(),
                        weights=_require(sec, "weights", cur).array())
    cur.fail(f"unknown scale law {law!r}")


def _parse_rotation(cur: _Cursor, d: int) -> RotationLaw:
    sec = cur.mapping(ROTATION_KEYS)
    law = _require(sec, "law", cur).string()
    if law == "haar":
        return RotationLaw(kind="haar")
    if law == "fixed":
        if "angle" in sec:
            if d != 2:
                cur.fail("rotation by angle needs dimension 2")
            a = sec["angle"].scalar(float)
            mat = np.array([[np.cos(a), -np.sin(a)],
                            [np.sin(a), np.cos(a)]])
            return RotationLaw(kind="fixed", matrix=mat)
        mat = _require(sec, "matrix", cur).array()
        return RotationLaw(kind="fixed", matrix=mat)
    cur.fail(f"unknown rotation law {law!r}")


def _parse_run(cur: _Cursor) -> dict:
    sec = cur.mapping(RUN_KEYS)
    out = {}
    for key, sub in sec.items():
        if key == "hill_fractions":
            out[key] = tuple(sub.array().tolist())
        elif key in ("tol", "root_tol"):
            out[key] = sub.scalar(float)
        else:
            out[key] = sub.scalar(int)
    return out


def _parse_regen(cur: _Cursor, spec: ModelSpec) -> dict:
    sec = cur.mapping(REGEN_KEYS)
    out = {}
    if "preset" in sec:
        out["preset"] = sec["preset"].string()
        if out["preset"] not in ("whole_sphere_overlap", "gaussian_floor",
                                 "ball_atom"):
            sec["preset"].fail(f"unknown regen preset {out['preset']!r}")
    for key, conv in (("p", float), ("delta", float)):
        if key in sec:
            out[key] = sec[key].scalar(conv)
    if "whole_sphere" in sec:
        out["whole_sphere"] = sec["whole_sphere"].scalar(bool)
    if "center" in sec:
        out["center"] = sec["center"].array()
    if "kernel" in sec:
        out["kernel"] = sec["kernel"].string()
        if out["kernel"] not in ("base", "shifted"):
            sec["kernel"].fail("regen kernel must be 'base' or 'shifted'")
    return out
