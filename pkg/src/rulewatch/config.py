"""Run configuration: dataclass, flat key=value files, flag overrides."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .data import DataError

FULL_SCALE_REPETITIONS = 2500


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a run; every report echoes the resolved values.

    Defaults target the design setting (splits of 5000 samples, 50 training
    splits); ``repetitions`` defaults to a desk-scale 200 with the full
    2500 behind ``full_scale``.
    """

    n_s: int = 5000
    n_tr: int = 50
    n_op: int | None = None
    seed: int = 0
    sigma_floor: float = 1e-6
    metrics: tuple[str, ...] | None = None
    label_column: str = "label"
    stride: int = 1
    snapshot_stride: int | None = None
    repetitions: int = 200
    mode: str = "single"
    max_depth: int = 4
    min_leaf: int = 50
    full_scale: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("single", "group"):
            raise DataError(f"mode must be 'single' or 'group', got {self.mode!r}")
        if self.full_scale and self.repetitions == 200:
            object.__setattr__(self, "repetitions", FULL_SCALE_REPETITIONS)

    @property
    def resolved_n_op(self) -> int:
        if self.n_op is not None:
            return self.n_op
        return 1 if self.mode == "single" else 10

    def echo(self) -> dict:
        """Flat dict of resolved values for embedding into reports."""
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        out["n_op"] = self.resolved_n_op
        return out


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _coerce(name: str, raw: str):
    raw = raw.strip()
    if name in ("n_s", "n_tr", "n_op", "seed", "stride", "snapshot_stride",
                "repetitions", "max_depth", "min_leaf"):
        return int(raw)
    if name == "sigma_floor":
        return float(raw)
    if name == "full_scale":
        try:
            return _BOOL_VALUES[raw.lower()]
        except KeyError:
            raise DataError(f"config key {name!r}: not a boolean: {raw!r}") from None
    if name == "metrics":
        return tuple(part.strip() for part in raw.split(",") if part.strip())
    return raw


def load_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines ('#' comments allowed) into config values."""
    known = {f.name for f in fields(RunConfig)}
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return out


def build_config(file_values: dict | None = None, **overrides) -> RunConfig:
    """Config file values first, explicit (non-None) overrides on top."""
    merged = dict(file_values or {})
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return RunConfig(**merged)
