"""Experiment configuration files.

INI-style sections with ``key = value`` lines. Every key is checked against
a fixed schema; unknown keys, bad values and duplicates are reported with
their line and column.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError
from ..network import MlpSpec
from ..optim import NAMES as OPTIMIZERS
from ..pde import SamplePlan, make_problem
from ..trainer import TrainConfig

SCHEMA_VERSION = 1


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{s}'")


def _ints(s: str) -> tuple[int, ...]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(p) for p in parts)


def _choice(*opts):
    def parse(s: str) -> str:
        v = s.strip()
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}, got '{v}'")
        return v

    return parse


def _opt_float(s: str):
    return None if s.strip().lower() == "none" else float(s)


def _str(s: str) -> str:
    return s.strip()


# section -> key -> (parser, default); default None means "not set"
SCHEMA: dict[str, dict] = {
    "experiment": {
        "name": (_str, None),
        "schema": (int, SCHEMA_VERSION),
        "problem": (_choice("heat", "gray_scott", "bz", "ks2d", "burgers"), None),
        "output_dir": (_str, "out"),
    },
    "problem": {
        "d": (int, None),
        "t_end": (float, None),
        "modes": (int, None),
        "lam": (float, None),
        "nu": (float, None),
        "weight_f": (float, None),
        "weight_b": (float, None),
        "weight_i": (float, None),
    },
    "network": {
        "hidden_width": (int, 32),
        "hidden_depth": (int, 3),
    },
    "sampling": {
        "n_f": (int, 512),
        "n_b": (int, 0),
        "n_0": (int, 0),
        "seed": (int, 0),
        "n_test": (int, 2000),
        "test_seed": (int, 12345),
        "resample_each_iter": (_bool, False),
    },
    "train": {
        "iterations": (int, 1000),
        "windows": (int, 1),
        "lr": (float, 1e-3),
        "warmup_frac": (float, 0.05),
        "floor_frac": (float, 0.01),
        "weight_decay": (float, 0.0),
        "seeds": (_ints, (0,)),
        "eval_every": (int, 100),
        "record_kappa": (_bool, True),
        "record_r": (_bool, False),
    },
    "optimizer": {
        "name": (_choice(*OPTIMIZERS), "adamw"),
        "beta1": (float, 0.9),
        "beta2": (float, 0.999),
        "eps": (float, 1e-8),
        "beta_p": (float, 0.95),
        "precond_freq": (int, 10),
        "momentum": (float, 0.95),
        "ns_iters": (int, 5),
        "alpha_base": (float, 0.1),
        "beta_a": (_opt_float, None),
        "s_guard": (float, 1e-12),
        "scope": (_choice("global", "per-tensor", "default"), "default"),
        "gate": (_choice("tanh", "fixed"), "tanh"),
    },
    "landscape": {
        "n": (int, 21),
        "extent": (float, 1.0),
        "seed": (int, 0),
        "normalize": (_choice("filter", "none"), "filter"),
    },
}
REQUIRED = {("experiment", "name"), ("experiment", "problem")}
PROBLEM_KEYS = {
    "heat": {"d"},
    "gray_scott": {"t_end", "modes"},
    "bz": {"t_end", "modes"},
    "ks2d": {"lam"},
    "burgers": {"nu", "lam"},
}


@dataclass
class Experiment:
    name: str
    problem_name: str
    problem_kw: dict
    weights: dict
    output_dir: str
    spec: MlpSpec
    plan: SamplePlan
    train: TrainConfig
    landscape: dict
    values: dict  # fully resolved section -> key -> value
    source: str | None = None

    def make_problem(self):
        p = make_problem(self.problem_name, **self.problem_kw)
        if self.weights:
            p.weights = {**p.weights, **self.weights}
        return p


def _locate(lines, section, key):
    """(line, column) of ``key`` inside ``[section]`` (1-based), or (None, None)."""
    cur = None
    pat = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]")
    for i, line in enumerate(lines, 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
            continue
        if cur != section:
            continue
        m = pat.match(line)
        if m and m.group(1).strip().lower() == key:
            eq = line.index("=") if "=" in line else line.index(":")
            rest = line[eq + 1 :]
            col = eq + 2 + (len(rest) - len(rest.lstrip()))
            return i, col, m.start(1) + 1
    return None, None, None


def _section_line(lines, section):
    for i, line in enumerate(lines, 1):
        if line.strip() == f"[{section}]":
            return i
    return None


def parse_config_text(text: str, source: str = "<config>") -> Experiment:
    lines = text.splitlines()
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.DuplicateOptionError as e:
        _, _, kcol = _locate(lines, e.section, e.option)
        raise ConfigError(f"duplicate key '{e.option}' in [{e.section}]", line=e.lineno, column=kcol or 1) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", line=e.lineno, column=1) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("content before the first [section] header", line=e.lineno, column=1) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError("malformed line (expected 'key = value')", line=lineno, column=1) from None

    values: dict[str, dict] = {sec: {} for sec in SCHEMA}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", line=_section_line(lines, sec), column=1)
        for key, raw in cp.items(sec):
            line, vcol, kcol = _locate(lines, sec, key)
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key '{key}' in [{sec}]", line=line, column=kcol)
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw)
            except ValueError as e:
                raise ConfigError(f"bad value for '{key}' in [{sec}]: {e}", line=line, column=vcol) from None
    for sec, key in sorted(REQUIRED):
        if key not in values[sec]:
            raise ConfigError(f"missing required key '{key}' in [{sec}]", line=_section_line(lines, sec), column=1)
    if values["experiment"].get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        line, vcol, _ = _locate(lines, "experiment", "schema")
        raise ConfigError(f"unsupported schema version (this build reads {SCHEMA_VERSION})", line=line, column=vcol)
    for sec, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            values[sec].setdefault(key, default)

    ex = values["experiment"]
    pname = ex["problem"]
    pv = values["problem"]
    problem_kw = {}
    for key in ("d", "t_end", "modes", "lam", "nu"):
        if pv[key] is None:
            continue
        if key not in PROBLEM_KEYS[pname]:
            line, _, kcol = _locate(lines, "problem", key)
            raise ConfigError(f"key '{key}' does not apply to problem '{pname}'", line=line, column=kcol)
        problem_kw[key] = pv[key]
    weights = {k[-1]: pv[f"weight_{k[-1]}"] for k in ("weight_f", "weight_b", "weight_i") if pv[k] is not None}

    def at(sec, key, exc):
        line, vcol, _ = _locate(lines, sec, key)
        return ConfigError(f"invalid [{sec}] {key}: {exc}", line=line, column=vcol)

    try:
        problem = make_problem(pname, **problem_kw)
    except ValueError as e:
        raise ConfigError(f"invalid [problem]: {e}", line=_section_line(lines, "problem"), column=1) from None
    nv = values["network"]
    try:
        spec = MlpSpec(
            input_dim=len(problem.axes),
            hidden_width=nv["hidden_width"],
            hidden_depth=nv["hidden_depth"],
            output_dim=len(problem.outputs),
            embedding=problem.embedding(),
        )
    except ValueError as e:
        raise at("network", "hidden_width", e) from None
    sv = values["sampling"]
    try:
        plan = SamplePlan(**sv)
    except ValueError as e:
        raise at("sampling", "n_f", e) from None
    tv = values["train"]
    ov = values["optimizer"]
    opt_params = {k: ov[k] for k in ("beta1", "beta2", "eps") if k in ov}
    base = ov["name"][3:] if ov["name"].startswith("ca-") else ov["name"]
    if base == "soap":
        opt_params.update(beta_p=ov["beta_p"], precond_freq=ov["precond_freq"])
    if base == "muon":
        opt_params.update(momentum=ov["momentum"], ns_iters=ov["ns_iters"])
    if ov["name"].startswith("ca-"):
        opt_params.update(alpha_base=ov["alpha_base"], s_guard=ov["s_guard"], gate=ov["gate"])
        if ov["beta_a"] is not None:
            opt_params["beta_a"] = ov["beta_a"]
        if ov["scope"] != "default":
            opt_params["scope"] = ov["scope"]
    try:
        train = TrainConfig(
            iterations=tv["iterations"],
            windows=tv["windows"],
            lr=tv["lr"],
            warmup_frac=tv["warmup_frac"],
            floor_frac=tv["floor_frac"],
            weight_decay=tv["weight_decay"],
            optimizer=ov["name"],
            opt_params=opt_params,
            seeds=tv["seeds"],
            eval_every=tv["eval_every"],
            record_kappa=tv["record_kappa"],
            record_R=tv["record_r"],
        )
        train.make_optimizer()
        train.schedule
    except ValueError as e:
        raise ConfigError(f"invalid [train]/[optimizer] settings: {e}", line=_section_line(lines, "train"), column=1) from None
    return Experiment(
        name=ex["name"],
        problem_name=pname,
        problem_kw=problem_kw,
        weights=weights,
        output_dir=ex["output_dir"],
        spec=spec,
        plan=plan,
        train=train,
        landscape=dict(values["landscape"]),
        values=values,
        source=source,
    )


def load_config(path) -> Experiment:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    try:
        return parse_config_text(text, str(p))
    except ConfigError as e:
        e.path = str(p)
        raise


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def resolved_text(exp: Experiment, seeds=None) -> str:
    """Config text with every default materialized (keys left unset are omitted)."""
    out = []
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for key in keys:
            v = exp.values[sec][key]
            if sec == "train" and key == "seeds" and seeds is not None:
                v = tuple(seeds)
            if v is None:
                continue
            out.append(f"{key} = {_fmt(v)}")
        out.append("")
    return "\n".join(out)
