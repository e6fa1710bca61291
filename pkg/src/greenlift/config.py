"""Run configuration: flat key=value files, per-command schemas, presets.

A config file holds ``key = value`` lines ('#' starts a comment).  Every
command validates its keys against the schema below before any compute;
unknown keys are rejected.  Values resolve in order: file value, then
command-line override, then the per-problem preset, then the schema
default.  The fully resolved mapping is echoed to the output directory as
``effective-config.txt``, which is itself a valid config file: re-running
from the echo reproduces the run.

Value syntax: integers, floats, strings, booleans (true/false);
comma-separated lists (``mesh_exponents = 6,8,10``); semicolon pairs for
per-endpoint boundary weights (``beta_boundary = 400;800``); schedules as
``epoch:value`` items (``boundary_schedule = 0:400,30000:4000``).
"""

from __future__ import annotations

import os
from typing import Any, Callable, Optional

PAIR_SEP = ";"


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _parse_int_list(s: str) -> list[int]:
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _parse_float_or_pair(s: str):
    if PAIR_SEP in s:
        a, b = s.split(PAIR_SEP)
        return (float(a), float(b))
    return float(s)


def _parse_schedule(s: str) -> dict[int, Any]:
    out: dict[int, Any] = {}
    for item in s.split(","):
        item = item.strip()
        if not item:
            continue
        epoch, _, val = item.partition(":")
        out[int(epoch)] = _parse_float_or_pair(val)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return PAIR_SEP.join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if isinstance(value, dict):
        return ",".join(f"{k}:{_fmt(v)}" for k, v in sorted(value.items()))
    if isinstance(value, float):
        return repr(value)
    return str(value)


# key -> (parser, global default); None default means "required or preset"
_COMMON = {
    "problem": (str, None),
    "seed": (int, 0),
    "out": (str, None),
    "serial": (_parse_bool, False),
}

SCHEMAS: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "train": {
        **_COMMON,
        "hidden_widths": (_parse_int_list, None),
        "epochs": (int, None),
        "lr": (float, 1e-3),
        "lr_schedule": (_parse_schedule, {}),
        "n_x": (int, None),
        "n_y": (int, None),
        "n_boundary": (int, 2),
        "n_gamma": (int, None),
        "n_sigma": (int, 0),
        "n_alpha": (int, 0),
        "beta_boundary": (_parse_float_or_pair, None),
        "beta_gamma": (float, None),
        "beta_sym": (float, 400.0),
        "beta_sigma": (float, 400.0),
        "beta_alpha": (float, 400.0),
        "boundary_schedule": (_parse_schedule, {}),
        "minibatch_x": (int, 32),
        "minibatch_y": (int, 0),
        "minibatch_gamma": (int, 0),
        "minibatch_sigma": (int, 0),
        "checkpoint_every": (int, 5000),
        "lbfgs_iters": (int, 0),
        "lbfgs_y": (int, 0),
        "lbfgs_history": (int, 50),
    },
    "solve": {
        **_COMMON,
        "kernel": (str, "oracle"),
        "n_quad": (int, 1024),
        "n_eval": (int, 257),
        "rule": (str, "trapezoid"),
    },
    "precondition": {
        **_COMMON,
        "kernel": (str, "oracle"),
        "mesh_exponents": (_parse_int_list, [6, 8]),
        "tol": (float, 1e-4),
        "tol_plain": (float, 1e-3),
        "max_iter": (int, 200),
        "max_iter_plain": (int, 20000),
        "kappa_max_n": (int, 1023),
        "scaled": (_parse_bool, True),
    },
    "hybrid": {
        **_COMMON,
        "kernel": (str, "oracle"),
        "mesh_exponent": (int, 8),
        "omega": (float, 2.0 / 3.0),
        "jacobi_steps": (int, 1),
        "cycles": (int, 25),
        "jacobi_sweeps": (int, 200),
        "tol": (float, 1e-12),
        "modes": (_parse_bool, True),
    },
    "eigs": {
        **_COMMON,
        "kernel": (str, "oracle"),
        "n": (int, 512),
        "count": (int, 50),
    },
    "bias": {
        **_COMMON,
        "epochs": (int, 2000),
        "snapshot_every": (int, 500),
        "etas": (_parse_int_list, [5, 10, 20]),
        "j_max": (int, 64),
        "n_quad": (int, 512),
        "n_pairs": (int, 4096),
        "hidden_widths": (_parse_int_list, [40, 40, 40, 40]),
        "lr": (float, 1e-3),
    },
}

# hyperparameters the experiments fix per problem (training only)
TRAIN_PRESETS: dict[str, dict[str, Any]] = {
    "benchmark-helmholtz": {
        "hidden_widths": [40, 40, 40, 40],
        "epochs": 30000,
        "n_x": 160, "n_y": 160, "n_gamma": 500,
        "beta_boundary": 400.0, "beta_gamma": 1000.0, "beta_sym": 400.0,
    },
    "variable-coeff": {
        "hidden_widths": [40, 40, 40, 40],
        "epochs": 50000,
        "n_x": 500, "n_y": 500, "n_gamma": 30000,
        "beta_boundary": 400.0, "beta_gamma": 1000.0, "beta_sym": 400.0,
        "boundary_schedule": {0: 400.0, 30000: 4000.0},
        "minibatch_gamma": 1024,
    },
    "interface": {
        "hidden_widths": [40, 40, 40, 40, 40, 40],
        "epochs": 20000,
        "n_x": 80, "n_y": 80, "n_gamma": 1000, "n_sigma": 1000, "n_alpha": 1000,
        "beta_boundary": (400.0, 800.0), "beta_gamma": 400.0, "beta_sym": 400.0,
        "beta_sigma": 400.0, "beta_alpha": 400.0,
        "minibatch_gamma": 256, "minibatch_sigma": 256,
    },
}


def parse_config_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
    return raw


def resolve(command: str, raw: dict[str, str],
            overrides: Optional[dict[str, Any]] = None) -> dict[str, Any]:
    """Validate raw strings against the command schema and fill defaults."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)} "
                          f"(allowed: {', '.join(sorted(schema))})")
    cfg: dict[str, Any] = {}
    for key, (parser, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = parser(raw[key])
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({e})") from None
        else:
            cfg[key] = default
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val

    problem = cfg.get("problem")
    if command == "train":
        if problem not in TRAIN_PRESETS:
            raise ConfigError(f"train needs problem in {sorted(TRAIN_PRESETS)}, "
                              f"got {problem!r}")
        for key, val in TRAIN_PRESETS[problem].items():
            if key not in raw and (overrides or {}).get(key) is None:
                cfg[key] = val
    missing = [k for k, v in cfg.items() if v is None and k != "out"]
    if missing:
        raise ConfigError(f"missing required keys for {command}: {', '.join(missing)}")
    return cfg


def write_effective(path: str, command: str, cfg: dict[str, Any]):
    with open(path, "w") as f:
        f.write(f"# effective configuration (command: {command})\n")
        for key in sorted(cfg):
            if key == "out" and cfg[key] is None:
                continue
            f.write(f"{key} = {_fmt(cfg[key])}\n")


def load_effective(path: str) -> dict[str, str]:
    return parse_config_file(path)


def default_out_dir(command: str, problem: str) -> str:
    return os.path.join("runs", f"{command}-{problem}")
