"""Text formats for laws, environment windows and scan configurations.

Distribution files are YAML mappings::

    name: mylaw
    atoms:            # (omega, weight) pairs
      - [0.3333333333333333, 0.2]
      - [0.6666666666666666, 0.8]

``rho_atoms`` may be given instead of ``atoms`` to list (rho, weight)
pairs. Window files start with ``# rwre-env v1 lo=<int> reflection=<int|none>``
followed by one omega per line, written with full precision.
"""

from __future__ import annotations

import re
from dataclasses import fields
from typing import TextIO

import numpy as np
import yaml

from .env import EnvDistribution, EnvironmentWindow
from .errors import ValidationError

_HEADER = re.compile(r"^#\s*rwre-env\s+v1\s+lo=(-?\d+)\s+reflection=(-?\d+|none)\s*$")


def load_distribution(path: str) -> EnvDistribution:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return distribution_from_mapping(data)


def distribution_from_mapping(data) -> EnvDistribution:
    if not isinstance(data, dict):
        raise ValidationError("distribution file must hold a mapping")
    name = str(data.get("name", "custom"))
    if "atoms" in data:
        pairs = data["atoms"]
        return EnvDistribution(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), name)
    if "rho_atoms" in data:
        pairs = data["rho_atoms"]
        return EnvDistribution.from_rho(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), name)
    raise ValidationError("distribution needs 'atoms' or 'rho_atoms'")


def write_window(fh: TextIO, window: EnvironmentWindow) -> None:
    refl = "none" if window.reflection is None else str(window.reflection)
    fh.write(f"# rwre-env v1 lo={window.lo} reflection={refl}\n")
    for w in window.omegas:
        fh.write(f"{float(w)!r}\n")


def read_window(path: str) -> EnvironmentWindow:
    with open(path) as fh:
        head = fh.readline()
        m = _HEADER.match(head.strip())
        if not m:
            raise ValidationError(f"{path}: missing 'rwre-env v1' header")
        om = [float(line) for line in fh if line.strip() and not line.startswith("#")]
    refl = None if m.group(2) == "none" else int(m.group(2))
    return EnvironmentWindow(int(m.group(1)), np.array(om), refl)


def load_scan_config(path: str) -> dict:
    """Scan configuration overrides from a YAML mapping of ScanConfig fields."""
    from .scan import ScanConfig

    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValidationError("scan config must hold a mapping")
    known = {f.name for f in fields(ScanConfig)}
    bad = set(data) - known
    if bad:
        raise ValidationError(f"unknown scan config keys: {sorted(bad)}")
    return data
