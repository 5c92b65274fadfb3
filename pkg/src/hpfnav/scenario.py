"""Scenario JSON documents: schema, loading, dotted-key overrides.

A single-vehicle document (``"kind": "single"``, the default)::

    {"schema_version": 1, "kind": "single", "name": "...", "description": "...",
     "model": {"name": "fixed_wing", "params": {"g": 1.0}},
     "gains": {"K_lambda": 2.0, "K_u": 1.0},
     "reference": {"type": "line", "direction": [1, 0, 0], "anchor": [0, 2, 2],
                   "v_ref": 1.0, "capture_gain": 1.0},
     "initial": {"P": [0, 0, 0], "lambda": [0, 0, 0.785], "u": [0, 1, 0], "t": 0.0},
     "integration": {"dt": 0.01, "t_final": 25.0, "mode": "full"},
     "box": null | {"limit": 0.4} | {"lower": [...], "upper": [...]}
            (optional "mode": "projection" | "bang_bang", "gain": "auto" | number),
     "noise": null | {"amplitude": 0.5 | [...], "seed": 1},
     "capture": null | {"target": [x, y, z], "radius": 0.4, "v_stop": null},
     "v_band": 0.02}

Reference types:

* ``line``: ``direction``, ``anchor``, ``v_ref``, ``capture_gain``.
* ``spiral``: ``center``, ``growth``, ``altitude``, ``v_ref``, ``capture_gain``, ``arm_gain``.
* ``frozen``: ``velocity``.
* ``hpf``: ``environment`` (an inline environment document, or
  ``{"file": path, "sidecar": path}``), ``variant`` (``laplace``,
  ``weighted``, ``anisotropic``), ``sigma_f``/``sigma_b`` (anisotropic),
  ``solver`` (SolverParams fields), ``v_ref``, ``taper_radius``,
  ``altitude``, ``altitude_gain``. ``field_file`` may replace
  ``environment`` to reuse a solved field.

For ``hpf`` references ``capture.target`` defaults to the field target (at
``altitude`` for planar fields) and ``capture.radius`` to two cells.

``"kind": "compliance"`` adds ``"compliance": {"matched_initial": true}``.
``"kind": "multi"`` holds ``"agents"`` (two single documents without
``schema_version``) plus ``maneuvering``, ``resolve``, ``resolve_period``,
``obstacle_radius`` and ``solver``.

Relative file paths resolve against the document's directory, then the
bundled data directory.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .controller import ControlBox, ControllerGains
from .field import SolverParams, solve
from .field.io import FormatError, environment_from_dict, load_environment, load_field
from .guidance import FrozenReference, HPFReference, LineReference, SpiralReference
from .models import make_model
from .sim.core import MODES, Capture, JointState, NoiseSpec, Scenario
from .sim.multi import MultiScenario

SCHEMA_VERSION = 1
KINDS = ("single", "compliance", "multi")

# keys each section may carry; overrides must name one of these
SINGLE_KEYS = {
    "schema_version": None, "kind": None, "name": None, "description": None, "v_band": None,
    "model": {"name": None, "params": "*"},
    "gains": {"K_lambda": None, "K_u": None},
    "reference": {
        "type": None, "direction": None, "anchor": None, "v_ref": None, "capture_gain": None,
        "center": None, "growth": None, "altitude": None, "arm_gain": None, "velocity": None,
        "environment": "*", "field_file": None, "variant": None, "sigma_f": None, "sigma_b": None,
        "solver": "*", "taper_radius": None, "altitude_gain": None,
    },
    "initial": {"P": None, "lambda": None, "u": None, "t": None},
    "integration": {"dt": None, "t_final": None, "mode": None},
    "box": {"limit": None, "lower": None, "upper": None, "mode": None, "gain": None},
    "noise": {"amplitude": None, "seed": None},
    "capture": {"target": None, "radius": None, "v_stop": None},
    "compliance": {"matched_initial": None},
}
MULTI_KEYS = {
    "schema_version": None, "kind": None, "name": None, "description": None,
    "agents": "*", "maneuvering": None, "resolve": None, "resolve_period": None,
    "obstacle_radius": None, "solver": "*",
}


class ScenarioError(ValueError):
    """Schema violation; ``path`` is the dotted key at fault."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class LoadedScenario:
    kind: str
    name: str
    doc: dict
    scenario: Scenario | None = None
    multi: MultiScenario | None = None
    matched_initial: bool = True


def data_dir() -> Path:
    return Path(str(resources.files("hpfnav") / "data"))


def scenario_dir() -> Path:
    return Path(str(resources.files("hpfnav") / "scenarios"))


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in scenario_dir().glob("*.json"))


def find_scenario(name_or_path) -> Path:
    """A path as given, or a bundled scenario by name (with or without ``.json``)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    cand = scenario_dir() / (p.name if p.suffix == ".json" else p.name + ".json")
    if cand.exists():
        return cand
    raise FileNotFoundError(f"no scenario file or bundled scenario named {str(name_or_path)!r}")


# -- overrides ---------------------------------------------------------------

def parse_override(text: str) -> tuple[str, object]:
    """``"a.b.c=value"`` -> ``("a.b.c", value)``; value parsed as JSON when possible."""
    if "=" not in text:
        raise ScenarioError(text, "override must look like key.path=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ScenarioError(text, "empty override key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _schema_allows(schema, parts) -> bool:
    node = schema
    for i, p in enumerate(parts):
        if node == "*":
            return True
        if not isinstance(node, dict) or p not in node:
            return False
        node = node[p]
    return True


def apply_overrides(doc: dict, overrides) -> dict:
    """Copy of ``doc`` with each ``key=value`` applied.

    A key must name an existing entry of the document or a schema key;
    list entries are addressed by index (``agents.0.gains.K_u``).
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        parts = key.split(".")
        node = doc
        schema = MULTI_KEYS if doc.get("kind") == "multi" else SINGLE_KEYS
        for i, p in enumerate(parts):
            last = i == len(parts) - 1
            here = ".".join(parts[: i + 1])
            if isinstance(node, list):
                try:
                    j = int(p)
                    node[j]
                except (ValueError, IndexError):
                    raise ScenarioError(here, "no such list entry") from None
                if last:
                    node[j] = value
                else:
                    node = node[j]
                    # agents are single documents
                    schema = SINGLE_KEYS
                continue
            if not isinstance(node, dict):
                raise ScenarioError(here, "cannot index into a scalar")
            rel = _relative_parts(parts, i, doc)
            if p not in node and not _schema_allows(schema, rel):
                raise ScenarioError(here, "unknown key")
            if last:
                node[p] = value
            else:
                if node.get(p) is None:
                    node[p] = {}
                node = node[p]
    return doc


def _relative_parts(parts, i, doc):
    # path relative to the innermost single document (agents.N.* restarts)
    if doc.get("kind") == "multi" and len(parts) > 2 and parts[0] == "agents" and i >= 2:
        return parts[2: i + 1]
    return parts[: i + 1]


# -- building ----------------------------------------------------------------

def _get(d, key, path, default=..., kind=None):
    if d is None or key not in d or d[key] is None:
        if default is ...:
            raise ScenarioError(f"{path}.{key}" if path else key, "required key missing")
        return default
    v = d[key]
    if kind is float:
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise ScenarioError(f"{path}.{key}" if path else key, f"expected a number, got {v!r}") from None
    elif kind == "vec":
        try:
            v = np.asarray(v, dtype=float)
        except (TypeError, ValueError):
            raise ScenarioError(f"{path}.{key}" if path else key, "expected a list of numbers") from None
        if v.ndim == 0:
            v = v.reshape(1)
    return v


def _wrap(path, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(path, str(exc)) from None


def _resolve_path(name, base: Path | None) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    if base is not None and (base / p).exists():
        return base / p
    if (data_dir() / p).exists():
        return data_dir() / p
    return (base / p) if base is not None else p


def _solver_params(d, path) -> SolverParams:
    d = d or {}
    known = {f.name for f in fields(SolverParams)}
    for k in d:
        if k not in known:
            raise ScenarioError(f"{path}.{k}", "unknown solver parameter")
    return _wrap(path, SolverParams, **d)


def build_field(ref: dict, base: Path | None, path="reference"):
    if ref.get("field_file"):
        return load_field(_resolve_path(ref["field_file"], base))
    envd = _get(ref, "environment", path)
    if not isinstance(envd, dict):
        raise ScenarioError(f"{path}.environment", "expected an object")
    if "file" in envd:
        side = envd.get("sidecar")
        env = load_environment(_resolve_path(envd["file"], base),
                               _resolve_path(side, base) if side else None)
    else:
        env = environment_from_dict(envd)
    variant = ref.get("variant", "laplace")
    params = _solver_params(ref.get("solver"), f"{path}.solver")
    kw = {}
    if variant == "anisotropic":
        kw = {"sigma_f": _get(ref, "sigma_f", path, kind=float), "sigma_b": _get(ref, "sigma_b", path, kind=float)}
    elif variant not in ("laplace", "weighted"):
        raise ScenarioError(f"{path}.variant", f"unknown variant {variant!r}")
    return solve(env, variant, params, **kw)


def build_reference(ref: dict, base: Path | None, path="reference"):
    if not isinstance(ref, dict):
        raise ScenarioError(path, "expected an object")
    typ = _get(ref, "type", path)
    if typ == "line":
        return _wrap(path, LineReference, _get(ref, "direction", path, kind="vec"),
                     _get(ref, "anchor", path, kind="vec"), _get(ref, "v_ref", path, 1.0, float),
                     _get(ref, "capture_gain", path, 1.0, float))
    if typ == "spiral":
        return _wrap(path, SpiralReference, tuple(_get(ref, "center", path, [0.0, 0.0], "vec")),
                     _get(ref, "growth", path, 0.5 / math.pi, float), _get(ref, "altitude", path, 2.0, float),
                     _get(ref, "v_ref", path, 1.0, float), _get(ref, "capture_gain", path, 1.0, float),
                     _get(ref, "arm_gain", path, 1.0, float))
    if typ == "frozen":
        return FrozenReference(_get(ref, "velocity", path, kind="vec"))
    if typ == "hpf":
        fld = build_field(ref, base, path)
        return _wrap(path, HPFReference, fld, _get(ref, "v_ref", path, 1.0, float),
                     _get(ref, "taper_radius", path, None, float), _get(ref, "altitude", path, None, float),
                     _get(ref, "altitude_gain", path, 1.0, float))
    raise ScenarioError(f"{path}.type", f"unknown reference type {typ!r}")


def _box(d, n_u, path="box"):
    if d is None:
        return None
    mode = d.get("mode", "projection")
    gain = d.get("gain", "auto")
    if "limit" in d:
        return _wrap(path, ControlBox.symmetric, _get(d, "limit", path, kind=float), n_u, mode=mode, gain=gain)
    lo = _get(d, "lower", path, kind="vec")
    hi = _get(d, "upper", path, kind="vec")
    return _wrap(path, ControlBox, lo, hi, mode=mode, gain=gain)


def build_single(doc: dict, base: Path | None = None, prefix: str = "") -> Scenario:
    def p(k):
        return f"{prefix}{k}"

    md = _get(doc, "model", prefix.rstrip("."))
    model = _wrap(p("model"), make_model, _get(md, "name", p("model")), **(md.get("params") or {}))
    gd = _get(doc, "gains", prefix.rstrip("."))
    gains = _wrap(p("gains"), ControllerGains, _get(gd, "K_lambda", p("gains"), kind=float),
                  _get(gd, "K_u", p("gains"), kind=float))
    ref = build_reference(_get(doc, "reference", prefix.rstrip(".")), base, p("reference"))
    ini = _get(doc, "initial", prefix.rstrip("."))
    P = _get(ini, "P", p("initial"), kind="vec")
    lam = _get(ini, "lambda", p("initial"), kind="vec")
    u = _get(ini, "u", p("initial"), np.zeros(model.n_u), "vec")
    initial = JointState.make(P, lam, u, _get(ini, "t", p("initial"), 0.0, float))
    integ = doc.get("integration") or {}
    mode = integ.get("mode", "full")
    if mode not in MODES:
        raise ScenarioError(p("integration.mode"), f"unknown mode {mode!r}; expected one of {list(MODES)}")
    dt = _get(integ, "dt", p("integration"), 0.01, float)
    t_final = _get(integ, "t_final", p("integration"), 10.0, float)
    if not dt > 0:
        raise ScenarioError(p("integration.dt"), f"must be positive, got {dt}")
    if not t_final >= dt:
        raise ScenarioError(p("integration.t_final"), f"must be at least dt, got {t_final}")
    box = _box(doc.get("box"), model.n_u, p("box"))
    nd = doc.get("noise")
    noise = None
    if nd is not None:
        if "seed" not in nd:
            raise ScenarioError(p("noise.seed"), "a seed is required whenever noise is enabled")
        noise = _wrap(p("noise"), NoiseSpec, _get(nd, "amplitude", p("noise"), kind="vec"), int(nd["seed"]))
    cd = doc.get("capture")
    capture = None
    if cd is not None:
        if isinstance(ref, HPFReference):
            tgt = cd.get("target")
            tgt = ref.target_position(3) if tgt is None else np.asarray(tgt, dtype=float)
            radius = _get(cd, "radius", p("capture"), 2.0 * ref.field.env.spacing, float)
        else:
            tgt = _get(cd, "target", p("capture"), kind="vec")
            radius = _get(cd, "radius", p("capture"), 0.05, float)
        v_stop = _get(cd, "v_stop", p("capture"), math.inf, float)
        capture = Capture(np.asarray(tgt, dtype=float), radius, v_stop)
    return _wrap(prefix.rstrip(".") or "scenario", Scenario, model, gains, ref, initial,
                 dt=dt, t_final=t_final,
                 box=box, noise=noise, capture=capture, mode=mode, name=doc.get("name", ""),
                 v_band=_get(doc, "v_band", prefix.rstrip("."), 0.02, float))


def _check_keys(doc, schema, prefix=""):
    for k, v in doc.items():
        if k not in schema:
            raise ScenarioError(f"{prefix}{k}", "unknown key")
        sub = schema[k]
        if isinstance(sub, dict) and isinstance(v, dict):
            _check_keys(v, sub, f"{prefix}{k}.")


def build(doc: dict, base: Path | None = None) -> LoadedScenario:
    """Validate a scenario document and construct the runnable objects."""
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    kind = doc.get("kind", "single")
    if kind not in KINDS:
        raise ScenarioError("kind", f"unknown kind {kind!r}; expected one of {list(KINDS)}")
    name = str(doc.get("name", ""))
    if kind == "multi":
        _check_keys(doc, MULTI_KEYS)
        agents = doc.get("agents")
        if not isinstance(agents, list) or len(agents) != 2:
            raise ScenarioError("agents", "expected a list of two agent documents")
        scen = []
        for i, a in enumerate(agents):
            _check_keys(a, SINGLE_KEYS, f"agents.{i}.")
            scen.append(build_single(a, base, f"agents.{i}."))
        ms = _wrap("multi", MultiScenario, tuple(scen), maneuvering=int(doc.get("maneuvering", 0)),
                   resolve=bool(doc.get("resolve", True)),
                   resolve_period=_get(doc, "resolve_period", "", 0.5, float),
                   obstacle_radius=_get(doc, "obstacle_radius", "", None, float),
                   solver=_solver_params(doc.get("solver"), "solver"), name=name)
        return LoadedScenario(kind, name, doc, multi=ms)
    _check_keys(doc, SINGLE_KEYS)
    sc = build_single(doc, base)
    matched = True
    if kind == "compliance":
        if not isinstance(sc.reference, HPFReference):
            raise ScenarioError("reference.type", "compliance scenarios need an hpf reference")
        matched = bool((doc.get("compliance") or {}).get("matched_initial", True))
    return LoadedScenario(kind, name, doc, scenario=sc, matched_initial=matched)


def read_document(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                          exc.pos, path) from None


def load_scenario(name_or_path, overrides=()) -> LoadedScenario:
    """Read a scenario file (or bundled name), apply overrides, build it."""
    path = find_scenario(name_or_path)
    doc = apply_overrides(read_document(path), overrides)
    return build(doc, path.parent)
