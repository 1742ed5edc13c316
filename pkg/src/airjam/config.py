"""Experiment configuration: a flat INI file with one section per concern.

Unknown sections or keys are hard errors and every missing required key is
reported in one pass.  The resolved configuration (defaults applied, seed
override included) is hashed into every CSV the harness writes.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

import numpy as np

from .channels import EffectiveMACConfig
from .coding import CostConstraint
from .errors import ConfigError
from .gaussian import GaussianDist
from .ota import OTAConfig

REQUIRED = object()


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default or REQUIRED)
SCHEMA: dict[str, dict[str, tuple]] = {
    "experiment": {
        "scenario": (str, REQUIRED),
        "master_seed": (int, REQUIRED),
        "workers": (int, 1),
    },
    "jammer": {
        "mean": (float, 0.0),
        "var": (float, 1.0),
        "rate": (float, REQUIRED),
    },
    "mac": {
        "k": (int, 2),
        "bob_gains": (_floats, (1.0, 1.0)),
        "eve_gains": (_floats, (1.0, 1.0)),
        "g_j": (float, 1.0),
        "h_j": (float, 0.25),
        "bob_noise_mean": (float, 0.0),
        "bob_noise_var": (float, 1.0),
        "eve_noise_mean": (float, 0.0),
        "eve_noise_var": (float, 1.0),
        "alphabet_lo": (_floats, (0.0, 0.0)),
        "alphabet_hi": (_floats, (1.0, 1.0)),
        "a_grid_points": (int, 5),
    },
    "cost": {
        "kind": (str, "none"),  # none | square
        "budget": (float, 1.5),
        "replacement_value": (float, 0.0),
    },
    "compound": {
        "family": (str, "awgn_var"),
        "var_points": (_floats, (1.0, 2.0)),
        "net_delta": (float, 0.05),
        "grid_per_axis": (int, 17),
    },
    "decode": {
        "n_values": (_ints, (25, 50, 100, 200)),
        "trials": (int, 1000),
        "epsilon": (float, 0.0),  # 0 means: derive from pick_exponent_params
    },
    "resolvability": {
        "channel": (str, "eve"),  # eve | bsc | identity
        "flip": (float, 0.1),
        "n_values": (_ints, (4, 8, 16, 32)),
        "codebooks_per_n": (int, 1),
        "tv_samples": (int, 20000),
        "method": (str, "auto"),  # auto | exact | is
    },
    "e2e": {
        "n_rounds": (int, 10000),
        "net_delta": (float, 0.05),
        "epsilon": (float, 0.0),
        "eps_grid": (_floats, (0.1, 0.25, 0.5, 1.0)),
        "security_rounds": (int, 100000),
        "security_n": (int, 16),
        "tv_samples": (int, 20000),
        "keep_round_log": (_bool, True),
    },
    "mc": {
        "mi_budget": (int, 20000),
    },
}


def parse_config(path: str | Path, seed_override: int | None = None,
                 workers_override: int | None = None) -> dict:
    """Parse and validate an INI config; returns nested dict of typed values.

    Collects every problem (unknown section/key, missing required key,
    unparseable value) and raises one ConfigError listing all of them.
    """
    parser = configparser.ConfigParser(interpolation=None)
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config file is not valid INI: {exc}") from exc

    problems: list[str] = []
    resolved: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key in parser[section]:
            if key not in SCHEMA[section]:
                problems.append(f"unknown key {key!r} in section [{section}]")
    for section, keys in SCHEMA.items():
        resolved[section] = {}
        for key, (fn, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    resolved[section][key] = fn(raw)
                except (TypeError, ValueError) as exc:
                    problems.append(f"[{section}] {key}={raw!r}: {exc}")
            elif default is REQUIRED:
                problems.append(f"missing required key {key!r} in section [{section}]")
            else:
                resolved[section][key] = default
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems))
    if seed_override is not None:
        resolved["experiment"]["master_seed"] = int(seed_override)
    if workers_override is not None:
        resolved["experiment"]["workers"] = int(workers_override)
    return resolved


def config_hash(resolved: dict) -> str:
    lines = []
    for section in sorted(resolved):
        for key in sorted(resolved[section]):
            lines.append(f"{section}.{key}={resolved[section][key]!r}")
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    return digest[:16]


# ---------------------------------------------------------------------------
# Domain-object builders
# ---------------------------------------------------------------------------


def jammer_input(cfg: dict) -> GaussianDist:
    j = cfg["jammer"]
    return GaussianDist([j["mean"]], [[j["var"]]])


def mac_config(cfg: dict) -> EffectiveMACConfig:
    m = cfg["mac"]
    if len(m["bob_gains"]) != m["k"] or len(m["eve_gains"]) != m["k"]:
        raise ConfigError("[mac] gain lists must have length k")
    return EffectiveMACConfig(
        k=m["k"],
        bob_gains=m["bob_gains"],
        eve_gains=m["eve_gains"],
        g_j=m["g_j"],
        h_j=m["h_j"],
        bob_noise=GaussianDist([m["bob_noise_mean"]], [[m["bob_noise_var"]]]),
        eve_noise=GaussianDist([m["eve_noise_mean"]], [[m["eve_noise_var"]]]),
    )


def cost_constraint(cfg: dict, n: int) -> CostConstraint | None:
    c = cfg["cost"]
    if c["kind"] == "none":
        return None
    if c["kind"] == "square":
        return CostConstraint(
            cost=np.square,
            budget=c["budget"],
            replacement=np.full(n, c["replacement_value"]),
            name="square",
        )
    raise ConfigError(f"unknown cost kind {c['kind']!r}")


def ota_config(cfg: dict, n: int) -> OTAConfig:
    m = cfg["mac"]
    if len(m["alphabet_lo"]) != m["k"] or len(m["alphabet_hi"]) != m["k"]:
        raise ConfigError("[mac] alphabet bounds must have length k")
    return OTAConfig(
        mac=mac_config(cfg),
        alphabets=tuple(zip(m["alphabet_lo"], m["alphabet_hi"])),
        jammer_input=jammer_input(cfg),
        rate=cfg["jammer"]["rate"],
        n=n,
        cost=cost_constraint(cfg, n),
        a_grid_points=m["a_grid_points"],
    )
