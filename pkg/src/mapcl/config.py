"""Runtime configuration for the command-line tools.

A config is a flat set of positive numbers: geometric tolerances, the
simulator step, the traffic-rule constants and resource caps.  It is
serialized as a ``key = value`` text file (``#`` starts a comment) and
any entry can be overridden by a command-line flag.  The file path can
also be supplied through the ``MAPCL_CONFIG`` environment variable.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from typing import Optional

from .predicates import B_MAX, T_REACT
from .slarith import DEFAULT_MAX_ATOMS
from .translate import COALESCE_EDGE_CAP
from .world import DEFAULT_ACCEL_MAX
from .monitor import C_BOUND, D_LEFT, D_MIN

__all__ = ["Config", "parse_config_text", "config_to_text", "load_config"]


@dataclass(frozen=True)
class Config:
    # geometric tolerances
    angle_tol: float = 1e-9
    point_tol: float = 1e-9
    length_tol: float = 1e-6
    # simulator
    dt: float = 0.1
    accel_max: float = DEFAULT_ACCEL_MAX
    # rule constants
    b_max: float = B_MAX
    t_react: float = T_REACT
    d_min: float = D_MIN
    d_left: float = D_LEFT
    c_bound: float = C_BOUND
    # resource caps
    coalesce_cap: int = COALESCE_EDGE_CAP
    fm_atom_cap: int = DEFAULT_MAX_ATOMS

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or v <= 0:
                raise ValueError(f"config entry {f.name} must be positive, "
                                 f"got {v!r}")

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f.type for f in dataclasses.fields(Config)}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into a dict of typed values."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', "
                             f"got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _FIELDS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        caster = int if _FIELDS[key] in ("int", int) else float
        try:
            out[key] = caster(val)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key}: {val!r}")
    return out


def config_to_text(cfg: Config) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n"
                   for f in dataclasses.fields(cfg))


def load_config(path: Optional[str] = None, **overrides) -> Config:
    """Build a Config from (in increasing precedence) defaults, the file
    at ``path`` or ``$MAPCL_CONFIG``, and keyword overrides (``None``
    overrides are ignored)."""
    values: dict = {}
    path = path or os.environ.get("MAPCL_CONFIG")
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Config(**values)
