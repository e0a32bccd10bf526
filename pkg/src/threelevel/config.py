"""Line-based ``key = value`` run configuration."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import MissingKey, ParseError, UnknownKey
from .model import AtomKind, SystemParams, default_truncation

_KEY = re.compile(r"[a-z][a-z0-9_]*\Z")


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_complex(text: str) -> complex:
    """``5``, ``5+0i``, ``-1.5-2i`` or ``3i``; ``j`` is accepted too."""
    t = text.replace(" ", "")
    if t.endswith("i"):
        t = t[:-1] + "j"
    return complex(t)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false")


_PARSERS = {
    "atom": AtomKind.parse,
    "e1": _parse_float, "e2": _parse_float, "e3": _parse_float,
    "g1": _parse_float, "g2": _parse_float,
    "omega_f": _parse_float, "omega_fp": _parse_float,
    "alpha1": _parse_complex, "alpha2": _parse_complex,
    "n_max1": _parse_int, "n_max2": _parse_int,
    "tau_start": _parse_float, "tau_end": _parse_float, "tau_steps": _parse_int,
    "rwa": _parse_bool, "emit_svg": _parse_bool,
    "outputs": str,
    "oracle_n_max": _parse_int,
}
REQUIRED = ("atom", "g1", "g2", "e1", "e2", "e3")
_RUN_KEYS = ("tau_start", "tau_end", "tau_steps", "rwa", "outputs", "emit_svg", "oracle_n_max")


@dataclass(frozen=True)
class RunConfig:
    atom: AtomKind
    params: SystemParams
    tau_start: float = 0.0
    tau_end: float = 100.0
    tau_steps: int = 1001
    rwa: bool = False
    outputs: str = "."
    emit_svg: bool = False
    oracle_n_max: int = 10

    def __post_init__(self):
        if self.tau_steps < 1:
            raise ValueError("tau_steps must be at least 1")
        if not 0.0 <= self.tau_start <= self.tau_end:
            raise ValueError("need 0 <= tau_start <= tau_end")
        if self.oracle_n_max < 0:
            raise ValueError("oracle_n_max must be non-negative")


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, line, "expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            raise ParseError(lineno, key, "malformed key")
        if key not in _PARSERS:
            raise UnknownKey(lineno, key)
        if not value:
            raise ParseError(lineno, key, "missing value")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ParseError(lineno, value, str(exc)) from None
        lines[key] = lineno

    for key in REQUIRED:
        if key not in values:
            raise MissingKey(key)

    alpha1 = values.get("alpha1", 0j)
    alpha2 = values.get("alpha2", 0j)
    params = SystemParams(
        e1=values["e1"], e2=values["e2"], e3=values["e3"],
        g1=values["g1"], g2=values["g2"],
        omega_f=values.get("omega_f", 1.0), omega_fp=values.get("omega_fp", 1.0),
        alpha1=alpha1, alpha2=alpha2,
        n_max1=values.get("n_max1", default_truncation(alpha1)),
        n_max2=values.get("n_max2", default_truncation(alpha2)),
    )

    def check(ok, key, reason):
        if not ok:
            raise ParseError(lines.get(key, 0), str(values.get(key, "")), reason)

    run = {k: values[k] for k in _RUN_KEYS if k in values}
    check(run.get("tau_steps", 1) >= 1, "tau_steps", "must be at least 1")
    check(run.get("tau_start", 0.0) >= 0.0, "tau_start", "must be non-negative")
    check(run.get("tau_end", 100.0) >= run.get("tau_start", 0.0), "tau_end", "must not precede tau_start")
    check(run.get("oracle_n_max", 0) >= 0, "oracle_n_max", "must be non-negative")
    return RunConfig(values["atom"], params, **run)


def preset_names() -> list[str]:
    folder = resources.files("threelevel") / "presets"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))


def load_config_text(source: str) -> str:
    """Read a config file path, or a bundled preset by name (with or without .cfg)."""
    path = Path(source)
    if path.is_file():
        return path.read_text()
    name = source[:-4] if source.endswith(".cfg") else source
    if name in preset_names():
        return (resources.files("threelevel") / "presets" / f"{name}.cfg").read_text()
    raise FileNotFoundError(f"no config file or preset named {source!r}")
