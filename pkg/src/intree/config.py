"""Simulation configuration: defaults, unit parsing, key = value files."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .social import SocialParams

KB = 1024
MB = 1024 * KB

_SIZE_UNITS = {"": 1, "b": 1, "kb": KB, "k": KB, "mb": MB, "m": MB, "gb": 1024 * MB}
_TIME_UNITS = {"": 1.0, "s": 1.0, "sec": 1.0, "min": 60.0, "m": 60.0, "h": 3600.0}
_RATE_UNITS = {"": 1.0, "bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|inf)\s*([a-zA-Z]*)\s*$")


def _parse(text: str | float, units: dict[str, float], what: str) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    m = _QUANTITY.match(str(text))
    if not m or m.group(2).lower() not in units:
        raise ValueError(f"cannot parse {what} {text!r}")
    return float(m.group(1)) * units[m.group(2).lower()]


def parse_size(text) -> float:
    """Bytes from ``"5MB"``, ``"500KB"`` or a bare byte count (binary multiples)."""
    return _parse(text, _SIZE_UNITS, "size")


def parse_time(text) -> float:
    """Seconds from ``"360min"``, ``"30s"`` or bare seconds."""
    return _parse(text, _TIME_UNITS, "time")


def parse_rate(text) -> float:
    """Bits per second from ``"2Mbps"`` or a bare number."""
    return _parse(text, _RATE_UNITS, "bandwidth")


def _range(text, conv) -> tuple[float, float]:
    if isinstance(text, (tuple, list)):
        lo, hi = text
    else:
        lo, _, hi = str(text).replace("~", "-").partition("-")
        hi = hi or lo
    return (conv(lo), conv(hi))


@dataclass(frozen=True)
class SimConfig:
    duration: float = 21600.0
    warmup: float = 1000.0
    window_T: float = 30.0
    bandwidth: float = 2e6  # bits/s
    msg_size_range: tuple[int, int] = (500 * KB, 1024 * KB)
    msg_interval_range: tuple[float, float] = (25.0, 35.0)
    ttl: float = 360 * 60.0
    buffer_capacity: float = 5 * MB
    router: str = "int-tree"
    alpha: float = 0.7
    beta: float = 0.1
    gamma: float = 0.9
    seed: int = 0
    runs: int = 10
    # kept for fidelity with the mobility setup; unused under trace replay
    wait_time_range: tuple[float, float] = (0.0, 120.0)
    # "global": delivery is known everywhere at once; "contact": learned on link-up
    purge: str = "global"
    # give Epidemic/PROPHET the delivery-response purge as well
    baseline_purge: bool = False

    def __post_init__(self):
        if not self.warmup < self.duration:
            raise ValueError(f"warmup ({self.warmup}) must be shorter than duration ({self.duration})")
        for name in ("msg_size_range", "msg_interval_range", "wait_time_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: low {lo} exceeds high {hi}")
        if self.msg_interval_range[0] <= 0:
            raise ValueError("message interval must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.purge not in ("global", "contact"):
            raise ValueError(f"purge must be 'global' or 'contact', got {self.purge!r}")
        self.social_params  # validates alpha/beta/gamma

    @property
    def social_params(self) -> SocialParams:
        return SocialParams(self.alpha, self.beta, self.gamma, self.window_T)

    @property
    def bytes_per_second(self) -> float:
        return self.bandwidth / 8.0

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def dump(self) -> str:
        return "\n".join(f"{f.name} = {_fmt(getattr(self, f.name))}" for f in dataclasses.fields(self))


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return "-".join(_fmt(v) for v in value)
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


_CONVERTERS = {
    "duration": parse_time,
    "warmup": parse_time,
    "window_T": parse_time,
    "bandwidth": parse_rate,
    "msg_size_range": lambda v: tuple(int(x) for x in _range(v, parse_size)),
    "msg_interval_range": lambda v: _range(v, parse_time),
    "wait_time_range": lambda v: _range(v, parse_time),
    "ttl": parse_time,
    "buffer_capacity": parse_size,
    "router": str,
    "alpha": float,
    "beta": float,
    "gamma": float,
    "seed": int,
    "runs": int,
    "purge": str,
    "baseline_purge": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
}

ALIASES = {"buffer": "buffer_capacity", "T": "window_T", "window": "window_T"}


def coerce(key: str, value: Any) -> tuple[str, Any]:
    key = ALIASES.get(key, key)
    if key not in _CONVERTERS:
        raise KeyError(f"unknown config key {key!r}")
    if isinstance(value, str) and value.strip().lower() in ("inf", "unlimited"):
        if key in ("ttl", "buffer_capacity", "bandwidth"):
            return key, math.inf
    return key, _CONVERTERS[key](value)


def parse_config_lines(lines: Iterable[str]) -> dict[str, Any]:
    out = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {line_no}: expected key = value")
        try:
            k, v = coerce(key.strip(), value.strip())
        except (KeyError, ValueError) as exc:
            raise ValueError(f"config line {line_no}: {exc}") from None
        out[k] = v
    return out


def make_config(base: SimConfig | None = None, file_values: Mapping[str, Any] | None = None, **overrides) -> SimConfig:
    """Layer file values, then non-None overrides, over ``base``."""
    values = dict(file_values or {})
    for key, value in overrides.items():
        if value is not None:
            k, v = coerce(key, value) if isinstance(value, str) else (ALIASES.get(key, key), value)
            values[k] = v
    return (base or SimConfig()).replace(**values)
