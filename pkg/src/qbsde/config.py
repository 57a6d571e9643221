"""INI-style run configuration: parsing, defaults, and manifests.

Every CLI run writes a ``manifest.ini`` echoing the fully-resolved
configuration (all defaults applied) plus the seed; re-running a manifest
reproduces the outputs.
"""

from __future__ import annotations

import configparser
import math
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .generators import Generator, builtin, from_expression
from .intervals import OpenInterval
from .sde import (ForwardModel, brownian_model, geometric_brownian_model,
                  scaled_brownian_model)
from .bsde import StepTerminal

_DEFAULTS = {
    "run": {"seed": "0", "out": "qbsde_out", "tol": "1e-10", "workers": "1"},
    "generator": {"spec": "", "expression": "", "domain_lo": "-inf",
                  "domain_hi": "inf", "sign_class": "mixed",
                  "lower_bound": "", "upper_bound": ""},
    "transform": {"alpha": "", "n_nodes": "2048", "representation": "auto",
                  "core_span": "20.0"},
    "forward": {"model": "brownian", "mu": "0.0", "sigma": "1.0"},
    "terminal": {"kind": "identity", "a": "1.0", "b": "0.0",
                 "lo_value": "", "hi_value": "", "threshold": "0.0"},
    "bsde": {"engine": "quadrature", "law": "brownian", "nodes": "64",
             "degree": "4", "n_paths": "10000", "steps": "50",
             "horizon": "1.0", "t0": "0.0", "x0": "0.0"},
    "terminal_meta": {"range_lo": "", "range_hi": "", "xi_in_l1": "false",
                      "xi_in_lp": "", "xi_minus_in_lp": "",
                      "xi_plus_in_lp": "", "uf_xi_in_l1": "false",
                      "uf_xi_in_lp": "", "uf_xi_in_linf": "false"},
    "compare": {"condition": "a1", "zeta": "", "spec2": "",
                "expression2": ""},
    "converse": {"y": "0.0", "z": "1.0", "k": "1.0", "n": "5",
                 "horizon": "1.0", "steps": "200", "n_paths": "10000",
                 "spec2": "", "expression2": ""},
    "pde": {"x_min": "-6.0", "x_max": "6.0", "n_t": "400", "n_x": "401",
            "engine": "quadrature", "allow_nonpositive": "false"},
}


class RunConfig:
    """Fully-resolved configuration with typed accessors."""

    def __init__(self, parser: configparser.ConfigParser):
        self._cp = configparser.ConfigParser()
        for section, defaults in _DEFAULTS.items():
            self._cp[section] = dict(defaults)
            if parser.has_section(section):
                for key, val in parser[section].items():
                    if key not in defaults:
                        raise ConfigError(
                            f"unknown key {key!r} in section [{section}]")
                    self._cp[section][key] = val
        for section in parser.sections():
            if section not in _DEFAULTS:
                raise ConfigError(f"unknown config section [{section}]")

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path!r}")
        return cls(cp)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        return cls(cp)

    def get(self, section: str, key: str) -> str:
        return self._cp[section][key]

    def set(self, section: str, key: str, value) -> None:
        self._cp[section][key] = str(value)

    def getfloat(self, section: str, key: str,
                 default: Optional[float] = None) -> Optional[float]:
        raw = self.get(section, key).strip()
        if raw == "":
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: not a number") \
                from exc

    def getint(self, section: str, key: str) -> int:
        raw = self.get(section, key).strip()
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: not an integer") \
                from exc

    def getbool(self, section: str, key: str) -> bool:
        raw = self.get(section, key).strip().lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{section}] {key} = {raw!r}: not a boolean")

    def manifest_text(self) -> str:
        lines = ["# fully-resolved run manifest; re-run with "
                 "`qbsde <command> --config <this file>`"]
        for section in self._cp.sections():
            lines.append(f"[{section}]")
            for key, val in self._cp[section].items():
                lines.append(f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)

    # object builders -------------------------------------------------------
    def build_generator(self, spec_key: str = "spec",
                        expr_key: str = "expression",
                        section: str = "generator") -> Generator:
        spec = self.get(section, spec_key).strip() if \
            self._cp.has_option(section, spec_key) else ""
        expr = self.get(section, expr_key).strip() if \
            self._cp.has_option(section, expr_key) else ""
        lo = self.getfloat("generator", "domain_lo", -math.inf)
        hi = self.getfloat("generator", "domain_hi", math.inf)
        if spec:
            gen = builtin(spec)
            if spec.split()[0] == "const" and (lo, hi) != (-math.inf,
                                                           math.inf):
                from .generators import constant
                gen = constant(float(spec.split()[1]), OpenInterval(lo, hi))
            return gen
        if expr:
            dom = OpenInterval(lo, hi)
            lb = self.getfloat("generator", "lower_bound")
            ub = self.getfloat("generator", "upper_bound")
            return from_expression(
                expr, dom, sign_class=self.get("generator", "sign_class"),
                lower_bound=lb, upper_bound=ub)
        raise ConfigError(f"section [{section}] needs either "
                          f"{spec_key!r} or {expr_key!r}")

    def build_forward(self) -> ForwardModel:
        kind = self.get("forward", "model").strip()
        mu = self.getfloat("forward", "mu", 0.0)
        sigma = self.getfloat("forward", "sigma", 1.0)
        if kind == "brownian":
            return brownian_model()
        if kind == "scaled_brownian":
            return scaled_brownian_model(mu, sigma)
        if kind == "geometric_brownian":
            return geometric_brownian_model(mu, sigma)
        raise ConfigError(f"unknown forward model {kind!r}")

    def build_terminal(self) -> Callable:
        kind = self.get("terminal", "kind").strip()
        a = self.getfloat("terminal", "a", 1.0)
        b = self.getfloat("terminal", "b", 0.0)
        if kind == "identity":
            return lambda x: np.asarray(x, dtype=float)
        if kind == "affine":
            return lambda x: a * np.asarray(x, dtype=float) + b
        if kind == "exp":
            return lambda x: b + np.exp(a * np.asarray(x, dtype=float))
        if kind == "const":
            return lambda x: np.full_like(np.asarray(x, dtype=float), a)
        if kind == "step":
            lo_v = self.getfloat("terminal", "lo_value")
            hi_v = self.getfloat("terminal", "hi_value")
            if lo_v is None or hi_v is None:
                raise ConfigError("step terminal needs lo_value and hi_value")
            return StepTerminal(lo_v, hi_v,
                                self.getfloat("terminal", "threshold", 0.0))
        raise ConfigError(f"unknown terminal kind {kind!r}")
