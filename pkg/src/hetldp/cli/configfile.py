"""Experiment files: INI-style key/value documents with three sections.

::

    [experiment]
    mechanism = rr
    n = 1000
    epsilon = 0.5        # shorthand for [budgets] kind = constant
    theta = 0.3          # shorthand for [data] theta

    [budgets]
    kind = uniform
    low = 0.1
    high = 1.0

    [data]
    kind = bernoulli

Keys before any section header belong to ``[experiment]``. Unknown
sections or keys are errors, reported with their line number.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass

from ..harness.config import BudgetSpec, ConfigError, DataSpec, ExperimentConfig, Mechanism

_EXPERIMENT_KEYS = {
    "mechanism", "n", "d", "r", "trials", "betas", "seed", "clamp", "simplex_project",
    "gamma_variant", "jl_beta", "radius_variant", "epsilon", "theta",
}
_BUDGET_KEYS = {"kind", "epsilon", "low", "high", "fraction_high", "values"}
_DATA_KEYS = {"kind", "theta", "exponent", "p"}
_SECTIONS = {"experiment": _EXPERIMENT_KEYS, "budgets": _BUDGET_KEYS, "data": _DATA_KEYS}
_DEFAULT_DATA_KIND = {"laplace": "bernoulli", "rr": "bernoulli", "duchi": "point", "dist_learn": "uniform"}

_SECTION_RE = re.compile(r"^\s*\[([^\]]*)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


@dataclass(frozen=True)
class ParsedConfig:
    config: ExperimentConfig
    seed_given: bool


def _key_lines(text: str, offset: int) -> dict[tuple[str, str], int]:
    lines = {}
    section = "experiment"
    for no, line in enumerate(text.splitlines(), start=1 - offset):
        if m := _SECTION_RE.match(line):
            section = m.group(1).strip().lower()
            lines[(section, "")] = no
        elif (m := _KEY_RE.match(line)) and not line[:1].isspace():
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


class _Reader:
    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines

    def error(self, section, key, message):
        name = key if section == "experiment" else f"{section}.{key}"
        return ConfigError(name, message, self.lines.get((section, key)))

    def raw(self, section, key):
        if not self.parser.has_option(section, key):
            return None
        value = self.parser.get(section, key).strip()
        return value or None

    def number(self, section, key, kind=float):
        value = self.raw(section, key)
        if value is None:
            return None
        try:
            out = kind(value)
        except ValueError:
            raise self.error(section, key, f"expected a {'integer' if kind is int else 'number'}, got {value!r}") from None
        if kind is float and not math.isfinite(out):
            raise self.error(section, key, f"must be finite, got {value!r}")
        return out

    def numbers(self, section, key):
        value = self.raw(section, key)
        if value is None:
            return None
        try:
            return tuple(float(v) for v in re.split(r"[,\s]+", value) if v)
        except ValueError:
            raise self.error(section, key, f"expected a comma-separated list of numbers, got {value!r}") from None

    def flag(self, section, key):
        if self.raw(section, key) is None:
            return None
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            raise self.error(section, key, "expected true or false") from None


def parse_config_document(text: str) -> ParsedConfig:
    """Parse a config document; ``seed_given`` tells whether it sets ``seed``."""
    offset = 0
    if not _SECTION_RE.match(next((ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(("#", ";"))), "[")):
        text = "[experiment]\n" + text
        offset = 1
    lines = _key_lines(text, offset)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("document", str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section", lines.get((section, "")))
        for key in parser.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(key if section == "experiment" else f"{section}.{key}", "unknown key",
                                  lines.get((section, key)))
    rd = _Reader(parser, lines)
    ex = "experiment"

    mech = rd.raw(ex, "mechanism")
    if mech is None:
        raise ConfigError("mechanism", "missing (expected laplace, rr, duchi or dist_learn)")
    try:
        mechanism = Mechanism(mech.lower())
    except ValueError:
        raise rd.error(ex, "mechanism", f"unknown mechanism {mech!r}") from None
    n = rd.number(ex, "n", int)
    if n is None:
        raise ConfigError("n", "missing")

    eps_short = rd.number(ex, "epsilon")
    kind = rd.raw("budgets", "kind")
    if eps_short is not None and (kind not in (None, "constant") or rd.raw("budgets", "epsilon") is not None):
        raise rd.error(ex, "epsilon", "conflicts with the [budgets] section")
    budgets = BudgetSpec(
        kind=(kind or "constant").lower(),
        epsilon=eps_short if eps_short is not None else rd.number("budgets", "epsilon"),
        low=rd.number("budgets", "low"),
        high=rd.number("budgets", "high"),
        fraction_high=rd.number("budgets", "fraction_high"),
        values=rd.numbers("budgets", "values"),
    )

    theta_short = rd.numbers(ex, "theta")
    if theta_short is not None and rd.raw("data", "theta") is not None:
        raise rd.error(ex, "theta", "given both here and in [data]")
    theta = theta_short if theta_short is not None else rd.numbers("data", "theta")
    data = DataSpec(
        kind=(rd.raw("data", "kind") or _DEFAULT_DATA_KIND[mechanism.value]).lower(),
        theta=theta or (),
        exponent=rd.number("data", "exponent"),
        p=rd.numbers("data", "p"),
    )

    kwargs = {}
    for key, value in (
        ("d", rd.number(ex, "d", int)),
        ("r", rd.number(ex, "r")),
        ("trials", rd.number(ex, "trials", int)),
        ("betas", rd.numbers(ex, "betas")),
        ("seed", rd.number(ex, "seed", int)),
        ("clamp", rd.flag(ex, "clamp")),
        ("simplex_project", rd.flag(ex, "simplex_project")),
        ("gamma_variant", rd.raw(ex, "gamma_variant")),
        ("jl_beta", rd.number(ex, "jl_beta")),
        ("radius_variant", rd.raw(ex, "radius_variant")),
    ):
        if value is not None:
            kwargs[key] = value
    try:
        cfg = ExperimentConfig(mechanism, n, budgets, data, **kwargs)
    except ConfigError as exc:
        # attach the line of the offending key when it can be located
        if exc.line is None:
            section, _, key = exc.field.rpartition(".")
            line = lines.get((section or ex, key)) or lines.get((ex, key))
            if line is not None:
                raise ConfigError(exc.field, str(exc).split(": ", 1)[1], line) from None
        raise
    return ParsedConfig(cfg, "seed" in kwargs)


def parse_config(text: str) -> ExperimentConfig:
    return parse_config_document(text).config


def _num(x: float) -> str:
    return repr(float(x))


def _nums(xs) -> str:
    return ", ".join(_num(x) for x in xs)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical document: every field explicit, fixed key order, floats in
    shortest round-trip form. ``parse_config(serialize_config(c)) == c``."""
    out = ["[experiment]", f"mechanism = {cfg.mechanism.value}", f"n = {cfg.n}"]
    if cfg.d is not None:
        out.append(f"d = {cfg.d}")
    out += [
        f"r = {_num(cfg.r)}",
        f"trials = {cfg.trials}",
        f"betas = {_nums(cfg.betas)}",
        f"seed = {cfg.seed}",
        f"clamp = {str(cfg.clamp).lower()}",
        f"simplex_project = {str(cfg.simplex_project).lower()}",
        f"gamma_variant = {cfg.gamma_variant}",
        f"jl_beta = {_num(cfg.jl_beta)}",
        f"radius_variant = {cfg.radius_variant}",
        "",
        "[budgets]",
        f"kind = {cfg.budgets.kind}",
    ]
    b = cfg.budgets
    for key in ("epsilon", "low", "high", "fraction_high"):
        if getattr(b, key) is not None:
            out.append(f"{key} = {_num(getattr(b, key))}")
    if b.values is not None:
        out.append(f"values = {_nums(b.values)}")
    out += ["", "[data]", f"kind = {cfg.data.kind}"]
    if cfg.data.theta:
        out.append(f"theta = {_nums(cfg.data.theta)}")
    if cfg.data.exponent is not None:
        out.append(f"exponent = {_num(cfg.data.exponent)}")
    if cfg.data.p is not None:
        out.append(f"p = {_nums(cfg.data.p)}")
    return "\n".join(out) + "\n"
