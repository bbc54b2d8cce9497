"""Group configuration files and run configuration.

The group file is line-oriented `key = value` text.  Recognized keys:
`label`, `preset` (with optional `twist`), or explicit `gens1`/`gens2`
(matrices as 4-entry row-major rows separated by ';'), `relator` (signed
generator word such as "1 2 -1 -2"), and `basepoint` (chart name followed
by coordinates).  Parse errors carry the offending line number.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

_KNOWN_KEYS = {"label", "preset", "twist", "gens1", "gens2", "relator", "basepoint"}


def parse_group_file(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_group_text(text)


def parse_group_text(text):
    config = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=ln)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", line=ln, field=key)
        if key in config:
            raise ParseError(f"duplicate key {key!r}", line=ln, field=key)
        if key in ("gens1", "gens2"):
            config[key] = _parse_matrix_rows(value, ln, key)
        elif key == "relator":
            try:
                config[key] = tuple(int(tok) for tok in value.split())
            except ValueError:
                raise ParseError("relator must be signed integers", line=ln,
                                 field=key) from None
        elif key == "twist":
            try:
                config[key] = float(value)
            except ValueError:
                raise ParseError("twist must be a number", line=ln, field=key) from None
        elif key == "basepoint":
            config[key] = _parse_basepoint(value, ln)
        else:
            config[key] = value
    if "preset" in config and ("gens1" in config or "gens2" in config):
        raise ValidationError("preset and explicit generators are mutually exclusive")
    if "gens1" in config or "gens2" in config:
        if "gens1" not in config or "gens2" not in config:
            raise ValidationError("gens1 and gens2 must both be given")
        if len(config["gens1"]) != len(config["gens2"]):
            raise ValidationError("gens1 and gens2 must have the same length")
    return config


def _parse_matrix_rows(value, ln, key):
    mats = []
    for i, chunk in enumerate(value.split(";")):
        toks = chunk.split()
        if len(toks) != 4:
            raise ParseError(f"matrix row {i + 1} has {len(toks)} entries, expected 4",
                             line=ln, field=key)
        try:
            row = [float(t) for t in toks]
        except ValueError:
            raise ParseError(f"matrix row {i + 1} holds a non-number", line=ln,
                             field=key) from None
        mats.append(np.array(row).reshape(2, 2))
    return mats


def _parse_basepoint(value, ln):
    toks = value.split()
    if len(toks) < 2:
        raise ParseError("basepoint needs a chart name and coordinates", line=ln,
                         field="basepoint")
    chart = toks[0]
    try:
        coords = [float(t) for t in toks[1:]]
    except ValueError:
        raise ParseError("basepoint coordinates must be numbers", line=ln,
                         field="basepoint") from None
    return (chart, coords)


def config_digest(config):
    """Stable digest of the group data for cache keying."""
    items = []
    for key in sorted(config):
        val = config[key]
        if key in ("gens1", "gens2"):
            val = [np.round(np.asarray(m), 12).ravel().tolist() for m in val]
        items.append(f"{key}={val!r}")
    payload = "\n".join(items).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class RunConfig:
    """Validated knobs of a CLI invocation."""

    group: dict = field(default_factory=lambda: {"preset": "modular-torus"})
    depth: int = 8
    depth_cap: int = 20_000_000
    lam_grid: tuple = (1.5, 3.0, 4, 0.0)   # (re_min, re_max, steps, im)
    quad_order: int = 128
    out_path: str = ""
    out_format: str = "csv"
    seed: int = 0

    def __post_init__(self):
        if self.depth < 0:
            raise ValidationError("depth must be >= 0")
        if self.lam_grid[2] < 1:
            raise ValidationError("lambda grid needs at least one step")
        if self.out_format not in ("csv", "json"):
            raise ValidationError(f"unknown output format {self.out_format!r}")

    def lam_values(self):
        re_min, re_max, steps, im = self.lam_grid
        res = np.linspace(re_min, re_max, int(steps))
        return [complex(r, im) for r in res]

    @property
    def digest(self):
        return config_digest(self.group)


def basepoint_vec(config, default=("slice", [0.0, 1.0, 0.0, 0.0])):
    """Quadric coordinates of the configured basepoint."""
    from .core import chart_convert

    chart, coords = config.get("basepoint", default)
    if chart == "quadric":
        return np.asarray(coords, dtype=float)
    if chart == "slice":
        t, xbar = coords[0], coords[1:]
        return chart_convert((t, xbar), "slice", "quadric")
    if chart == "torus-t":
        return chart_convert(tuple(coords), "torus-t", "quadric")
    if chart == "halfspace":
        return chart_convert(tuple(coords), "halfspace", "quadric")
    raise ValidationError(f"unsupported basepoint chart {chart!r}")
