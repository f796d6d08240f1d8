"""Experiment configuration: TOML parsing, schema validation and provenance.

A config file looks like::

    kind = "nevai"          # optional, must match the subcommand
    seed = 7                # optional, default 0
    threads = 2             # optional, default: available cores

    [model]
    kind = "free"

    [params]
    x0 = 0.0
    N = 10000

Every table is closed: unknown keys raise :class:`ConfigError` naming the
offending field.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .models import JacobiSequence, model_from_spec

SUBCOMMANDS = ("eval", "nevai", "lyapunov", "eta", "spectrum", "moments", "green",
               "prufer", "bounds", "sweep")
U64_MAX = 2 ** 64 - 1


@dataclass(frozen=True)
class Param:
    kind: str                 # int | float | floats | str | bool | complex
    default: Any = None       # None means required
    check: Optional[Callable[[Any], bool]] = None
    doc: str = ""
    required: bool = False


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


SCHEMAS: Dict[str, Dict[str, Param]] = {
    "eval": {
        "x0": Param("float", required=True),
        "N": Param("int", required=True, check=_nonneg),
        "stride": Param("int", 1, _pos),
    },
    "nevai": {
        "x0": Param("float", required=True),
        "N": Param("int", required=True, check=_pos),
        "stride": Param("int", 1, _pos),
    },
    "lyapunov": {
        "x0": Param("float", required=True),
        "N": Param("int", required=True, check=lambda v: v >= 1000, doc=">= 1000"),
        "windows": Param("int", 0, _nonneg),
    },
    "eta": {
        "x0": Param("float", required=True),
        "n": Param("int", required=True, check=_nonneg),
        "kmax": Param("int", 4, lambda v: 0 <= v <= 30, doc="0..30"),
    },
    "spectrum": {
        "m": Param("int", required=True, check=_pos),
        "coordinate": Param("int", 1, _pos),
        "corner_b": Param("float", None),
    },
    "moments": {
        "K": Param("int", 8, _pos),
        "m": Param("int", None, _pos, doc="compare with the m-truncation measure at delta_1"),
    },
    "green": {
        "N": Param("int", required=True, check=_pos),
        "n_max": Param("int", 10, _pos),
        "z": Param("complex", None, doc="[re, im] with im > 0"),
        "x0": Param("float", None),
        "eps": Param("floats", None, doc="decreasing probe schedule"),
        "probe_index": Param("int", 1, _pos),
    },
    "prufer": {
        "x0": Param("float", required=True),
        "N": Param("int", required=True, check=_pos),
        "stride": Param("int", 1, _pos),
    },
    "bounds": {
        "samples": Param("int", 100_000, _pos),
        "checks": Param("strs", ["ntz", "matrix_power", "lemma64", "cosine_sum"]),
    },
    "sweep": {
        "diagnostic": Param("str", "lyapunov",
                            lambda v: v in ("nevai", "lyapunov", "growth", "christoffel", "block_slope"),
                            doc="nevai | lyapunov | growth | christoffel | block_slope"),
        "N": Param("int", required=True, check=_pos),
        "x0": Param("floats", None, doc="explicit strictly increasing grid"),
        "x0_start": Param("float", None),
        "x0_stop": Param("float", None),
        "x0_num": Param("int", None, _pos),
        "block": Param("int", 3, _pos, doc="block index j for block_slope"),
    },
}

TOP_KEYS = {"kind", "seed", "threads", "model", "params"}


@dataclass
class ExperimentConfig:
    kind: str
    model: Dict[str, Any]
    params: Dict[str, Any]
    seed: int = 0
    threads: int = field(default_factory=lambda: max(1, os.cpu_count() or 1))

    def as_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "seed": self.seed, "threads": self.threads,
                "model": copy.deepcopy(self.model), "params": copy.deepcopy(self.params)}

    def canonical_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def build_model(self) -> JacobiSequence:
        spec = dict(self.model)
        if spec.get("kind") == "anderson" and "seed" not in spec:
            spec["seed"] = self.seed
        try:
            return model_from_spec(spec)
        except KeyError as exc:
            raise ConfigError(f"model: {exc.args[0]}") from None
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"model: {exc}") from None


def _coerce(name: str, spec: Param, value: Any) -> Any:
    where = f"params.{name}"
    k = spec.kind
    if k == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        out = value
    elif k == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        out = float(value)
        if not math.isfinite(out):
            raise ConfigError(f"{where}: must be finite")
    elif k == "floats":
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{where}: expected a non-empty list of numbers")
        out = [_coerce(f"{name}[{i}]", Param("float"), v) for i, v in enumerate(value)]
    elif k == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where}: expected a list of strings")
        out = list(value)
    elif k == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        out = value
    elif k == "complex":
        if not (isinstance(value, list) and len(value) == 2):
            raise ConfigError(f"{where}: expected [re, im]")
        out = [_coerce(f"{name}[{i}]", Param("float"), v) for i, v in enumerate(value)]
    else:  # pragma: no cover
        raise AssertionError(k)
    if spec.check is not None and not spec.check(out):
        hint = f" ({spec.doc})" if spec.doc else ""
        raise ConfigError(f"{where}: value {value!r} out of range{hint}")
    return out


def validate_params(kind: str, raw: Dict[str, Any]) -> Dict[str, Any]:
    schema = SCHEMAS[kind]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"params: unknown key(s) {unknown} for '{kind}'; allowed {sorted(schema)}")
    out: Dict[str, Any] = {}
    for name, spec in schema.items():
        if name in raw:
            out[name] = _coerce(name, spec, raw[name])
        elif spec.required:
            raise ConfigError(f"params.{name}: required for '{kind}'")
        elif spec.default is not None:
            out[name] = copy.deepcopy(spec.default)
    _cross_checks(kind, out)
    return out


def _cross_checks(kind, p):
    if kind == "green":
        if ("z" in p) == ("eps" in p):
            raise ConfigError("params: give exactly one of 'z' (point) or 'eps' (boundary probe)")
        if "z" in p and not p["z"][1] > 0:
            raise ConfigError("params.z: imaginary part must be positive")
        if "eps" in p and "x0" not in p:
            raise ConfigError("params.x0: required with 'eps'")
    if kind == "bounds":
        from .bounds import FUZZERS
        bad = sorted(set(p["checks"]) - set(FUZZERS))
        if bad:
            raise ConfigError(f"params.checks: unknown check(s) {bad}; allowed {sorted(FUZZERS)}")
    if kind == "sweep":
        explicit = "x0" in p
        ranged = [k for k in ("x0_start", "x0_stop", "x0_num") if k in p]
        if explicit == bool(ranged) or (ranged and len(ranged) != 3):
            raise ConfigError("params: give either 'x0' (list) or all of 'x0_start', 'x0_stop', 'x0_num'")
        grid = p["x0"] if explicit else None
        if grid is not None and any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("params.x0: grid must be strictly increasing")
        if not explicit and not p["x0_stop"] > p["x0_start"] and p["x0_num"] > 1:
            raise ConfigError("params.x0_stop: must exceed x0_start")


def sweep_grid(params: Dict[str, Any]):
    import numpy as np

    if "x0" in params:
        return [float(v) for v in params["x0"]]
    return np.linspace(params["x0_start"], params["x0_stop"], params["x0_num"]).tolist()


def config_from_dict(data: Dict[str, Any], kind: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a table")
    unknown = sorted(set(data) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s) {unknown}; allowed {sorted(TOP_KEYS)}")
    file_kind = data.get("kind")
    if file_kind is not None and file_kind not in SUBCOMMANDS:
        raise ConfigError(f"kind: unknown experiment {file_kind!r}")
    if kind is not None and file_kind is not None and kind != file_kind:
        raise ConfigError(f"kind: config is for '{file_kind}' but subcommand is '{kind}'")
    kind = kind or file_kind
    if kind is None:
        raise ConfigError("kind: experiment kind missing")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= U64_MAX:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    threads = data.get("threads", max(1, os.cpu_count() or 1))
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads: expected a positive integer, got {threads!r}")
    model = data.get("model", {"kind": "free"})
    if not isinstance(model, dict) or "kind" not in model:
        raise ConfigError("model: expected a table with a 'kind' key")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected a table")
    cfg = ExperimentConfig(kind, copy.deepcopy(model), validate_params(kind, params), seed, threads)
    cfg.build_model()  # surface model errors as config errors early
    return cfg


def load_toml(text: str) -> Dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from None


def load_config(path: str, kind: Optional[str] = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return config_from_dict(load_toml(text), kind)


# ---------------------------------------------------------------------------
# provenance header


def provenance_lines(cfg: ExperimentConfig, version: str):
    return [
        f"# tool: nevaikit {version}",
        f"# config_sha256: {cfg.sha256()}",
        f"# seed: {cfg.seed}",
        f"# config: {cfg.canonical_json()}",
    ]


def config_from_csv(path: str) -> ExperimentConfig:
    """Rebuild the effective config from a CSV written by the CLI."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# config: "):
                data = json.loads(line[len("# config: "):])
                return config_from_dict(data)
    raise ConfigError(f"{path}: no '# config:' provenance line")
