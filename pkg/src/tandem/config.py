"""JSON run configuration: validation, defaults and the provenance echo.

A level block carries the network and clustering parameters of one tree level::

    {"layer_dims": [676, 60, 47, 676], "mirror_threshold": 0.8,
     "learning_rate": 0.025, "k": 3, "seed_min_distance": 1.0}

Unknown keys anywhere are rejected.
"""
import json
from dataclasses import dataclass, fields

from .clustering import ForgyParams
from .dataset import SyntheticSpec
from .errors import ConfigError
from .hierarchy import HierarchyConfig, NodeConfig
from .mnn import MnnConfig

LEVEL_REQUIRED = ("layer_dims", "mirror_threshold", "learning_rate", "k")
LEVEL_DEFAULTS = {
    "success_fraction": 0.95,
    "weight_init_lo": -0.25,
    "weight_init_hi": 0.25,
    "max_epochs": 5000,
    "output_activation": "sigmoid",
    "seed_min_distance": 0.0,
    "max_iterations": 100,
    "max_seed_retries": 1000,
    "child_input": "reduced_code",
    "min_samples_to_split": 20,
}
HIERARCHY_DEFAULTS = {"max_depth": None, "accept_unconverged": False}
RUN_DEFAULTS = {
    "seed": 0,
    "trials": 10,
    "train_fraction": 360 / 510,
    "normalize": True,
    "data": None,
    "synthetic": None,
}
SYNTHETIC_KEYS = tuple(f.name for f in fields(SyntheticSpec))

_INT_KEYS = {"k", "max_epochs", "max_iterations", "max_seed_retries",
             "min_samples_to_split", "max_depth", "seed", "trials"}
_BOOL_KEYS = {"accept_unconverged", "normalize"}


def _check_keys(block, allowed, where):
    if not isinstance(block, dict):
        raise ConfigError(where, "must be a JSON object")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}" if where else key, "unknown key")


def _typed(key, value, where):
    name = f"{where}.{key}" if where else key
    if value is None:
        return value
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(name, "must be true or false")
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(name, "must be an integer")
        return value
    return value


def _resolve(block, required, defaults, where):
    _check_keys(block, set(required) | set(defaults), where)
    out = {}
    for key in required:
        if key not in block:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required key")
        out[key] = _typed(key, block[key], where)
    for key, default in defaults.items():
        out[key] = _typed(key, block.get(key, default), where)
    return out


def _rewrap(where, fn):
    try:
        return fn()
    except ConfigError as exc:
        raise ConfigError(f"{where}.{exc.key}", str(exc).split(": ", 1)[-1]) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def level_from_dict(block, where="levels[0]"):
    v = _resolve(block, LEVEL_REQUIRED, LEVEL_DEFAULTS, where)

    def build():
        if not isinstance(v["layer_dims"], list) or not all(
            isinstance(d, int) and not isinstance(d, bool) for d in v["layer_dims"]
        ):
            raise ConfigError("layer_dims", "must be a list of integers")
        for key in ("mirror_threshold", "learning_rate", "success_fraction",
                    "weight_init_lo", "weight_init_hi", "seed_min_distance"):
            if isinstance(v[key], bool) or not isinstance(v[key], (int, float)):
                raise ConfigError(key, "must be a number")
        net = MnnConfig(
            layer_dims=tuple(v["layer_dims"]),
            mirror_threshold=float(v["mirror_threshold"]),
            learning_rate=float(v["learning_rate"]),
            success_fraction=float(v["success_fraction"]),
            weight_init_lo=float(v["weight_init_lo"]),
            weight_init_hi=float(v["weight_init_hi"]),
            max_epochs=v["max_epochs"],
            output_activation=v["output_activation"],
        )
        forgy = ForgyParams(v["k"], float(v["seed_min_distance"]),
                            v["max_iterations"], v["max_seed_retries"])
        return NodeConfig(net, forgy, v["child_input"], v["min_samples_to_split"])

    return _rewrap(where, build), v


def synthetic_from_dict(block, where="synthetic"):
    _check_keys(block, set(SYNTHETIC_KEYS), where)
    resolved = {f.name: block.get(f.name, f.default) for f in fields(SyntheticSpec)}
    return _rewrap(where, lambda: SyntheticSpec(**resolved)), resolved


@dataclass(frozen=True)
class RunConfig:
    hierarchy: HierarchyConfig
    seed: int
    trials: int
    train_fraction: float
    normalize: bool
    data: str = None
    synthetic: SyntheticSpec = None
    # every key with defaults filled in, ready to be written back out
    echo: dict = None

    def echo_json(self):
        return json.dumps(self.echo, sort_keys=True, indent=2) + "\n"


def config_from_dict(doc):
    _check_keys(doc, set(RUN_DEFAULTS) | {"hierarchy"}, "")
    if "hierarchy" not in doc:
        raise ConfigError("hierarchy", "missing required key")
    run = {k: _typed(k, doc.get(k, d), "") for k, d in RUN_DEFAULTS.items()}
    h = doc["hierarchy"]
    _check_keys(h, {"levels"} | set(HIERARCHY_DEFAULTS), "hierarchy")
    if not isinstance(h.get("levels"), list) or not h["levels"]:
        raise ConfigError("hierarchy.levels", "must be a non-empty list")
    levels, level_echo = [], []
    for i, block in enumerate(h["levels"]):
        node, resolved = level_from_dict(block, f"hierarchy.levels[{i}]")
        levels.append(node)
        level_echo.append(resolved)
    hv = {k: _typed(k, h.get(k, d), "hierarchy") for k, d in HIERARCHY_DEFAULTS.items()}
    hierarchy = _rewrap("hierarchy", lambda: HierarchyConfig(
        tuple(levels), hv["max_depth"], hv["accept_unconverged"]))
    hv["max_depth"] = hierarchy.max_depth

    synthetic, synth_echo = None, None
    if run["synthetic"] is not None:
        if run["data"] is not None:
            raise ConfigError("synthetic", "give either 'data' or 'synthetic', not both")
        synthetic, synth_echo = synthetic_from_dict(run["synthetic"])
    if run["data"] is not None and not isinstance(run["data"], str):
        raise ConfigError("data", "must be a path string")
    if run["trials"] < 1:
        raise ConfigError("trials", "must be >= 1")
    if not 0 <= run["seed"] < 2**64:
        raise ConfigError("seed", "must fit in 64 unsigned bits")
    tf = run["train_fraction"]
    if isinstance(tf, bool) or not isinstance(tf, (int, float)) or not 0 < tf < 1:
        raise ConfigError("train_fraction", "must be a number strictly between 0 and 1")

    echo = dict(run)
    echo["synthetic"] = synth_echo
    echo["hierarchy"] = {"levels": level_echo, **hv}
    return RunConfig(hierarchy, run["seed"], run["trials"], float(tf), run["normalize"],
                     run["data"], synthetic, echo)


def parse_config(path, overrides=None):
    """Load and validate a run configuration file.

    ``overrides`` (seed, trials) replace file values before validation so the
    echo records what actually ran.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    return config_from_dict(doc)
