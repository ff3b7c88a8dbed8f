"""Scenario configuration files (JSON) and their expansion into model objects."""

from __future__ import annotations

import json
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ModelError
from .kernels import MODES

KINDS = ("q1", "r2q2", "transship", "simulate", "kernel", "residuals")


class ConfigError(ModelError):
    """Configuration problem located by a JSON pointer."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.detail = message


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PolicyBlock(_Strict):
    r: int
    q: int = Field(ge=1)
    tau: float = Field(gt=0)


class ConstantRates(_Strict):
    constant: float = Field(gt=0)
    floor: int = 0


class TableRates(_Strict):
    table: list[tuple[int, float]]


class Segment(_Strict):
    start: int = Field(alias="from")
    stop: int = Field(alias="to")
    rate: float = Field(gt=0)


class SegmentRates(_Strict):
    floor: int
    segments: list[Segment]


Rates = Union[ConstantRates, TableRates, SegmentRates]


class SimBlock(_Strict):
    seed: int = Field(0, ge=0, lt=2**64)
    measured_events: int = Field(1_000_000, ge=2)
    warmup_events: Optional[int] = Field(None, ge=0)
    batches: int = Field(20, ge=2)
    replications: int = Field(1, ge=1)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _fill_warmup(self):
        if self.warmup_events is None:
            object.__setattr__(self, "warmup_events", self.measured_events // 10)
        return self


class StoreBlock(_Strict):
    r: int = Field(ge=0)
    c: int = Field(ge=1)
    gamma: float = Field(gt=0)


class TransshipBlock(_Strict):
    tau: float = Field(gt=0)
    store_a: StoreBlock
    store_b: StoreBlock
    tolerance: float = Field(1e-10, gt=0)
    max_iterations: int = Field(10_000, ge=1)
    damping: float = Field(0.5, gt=0, le=1)
    multistart: bool = True


class R2Q2Block(_Strict):
    lam: float = Field(alias="lambda", gt=0)
    tau: float = Field(gt=0)
    quad_tol: float = Field(1e-9, gt=0)


class KernelBlock(_Strict):
    chain: list[float] = Field(min_length=1)
    t: list[float] = []
    s: list[float] = []
    mode: Optional[Literal[MODES]] = None  # type: ignore[valid-type]
    distinctness_tolerance: float = Field(1e-6, gt=0)
    inversion_accuracy: float = Field(1e-8, gt=0)
    inversion_terms: int = Field(35, ge=13)


class ResidualBlock(_Strict):
    target: Literal["q1", "r2q2"]
    samples: int = Field(100, ge=1)
    seed: int = Field(0, ge=0)
    quad_tol: float = Field(1e-10, gt=0)
    grid_points: int = Field(50, ge=2)


class ScenarioConfig(_Strict):
    kind: Literal[KINDS]  # type: ignore[valid-type]
    policy: Optional[PolicyBlock] = None
    rates: Optional[Rates] = None
    sim: Optional[SimBlock] = None
    transship: Optional[TransshipBlock] = None
    r2q2: Optional[R2Q2Block] = None
    kernel: Optional[KernelBlock] = None
    residuals: Optional[ResidualBlock] = None

    def echo(self) -> dict:
        """Resolved configuration with every default filled in."""
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


def _pointer(loc) -> str:
    parts = []
    for item in loc:
        # pydantic inserts union member names into the location; drop them
        if isinstance(item, str) and item in ("ConstantRates", "TableRates", "SegmentRates"):
            continue
        if isinstance(item, str) and ("[" in item or item.startswith("function-")):
            continue
        parts.append(str(item).replace("~", "~0").replace("/", "~1"))
    return "/" + "/".join(parts) if parts else "/"


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict) and isinstance(raw.get("rates"), dict) and set(raw["rates"]) == {"table"}:
        _check_table(raw["rates"]["table"])
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        err = _most_specific(exc.errors())
        raise ConfigError(_pointer(err["loc"]), err["msg"]) from exc
    return _require_blocks(cfg)


_NEEDED = {
    "q1": ("policy", "rates"),
    "simulate": ("policy", "rates"),
    "r2q2": ("r2q2",),
    "transship": ("transship",),
    "kernel": ("kernel",),
    "residuals": ("residuals",),
}


def _require_blocks(cfg: ScenarioConfig) -> ScenarioConfig:
    needed = _NEEDED[cfg.kind]
    if cfg.kind == "residuals":
        needed += ("policy", "rates") if cfg.residuals.target == "q1" else ("r2q2",)
    for name in needed:
        if getattr(cfg, name) is None:
            raise ConfigError(f"/{name}", f"required for kind {cfg.kind!r}")
    if cfg.kind == "simulate" and cfg.sim is None:
        cfg = cfg.model_copy(update={"sim": SimBlock()})
    return cfg


def _most_specific(errors):
    # for unions pydantic reports every member; prefer the deepest location
    return max(errors, key=lambda e: len([x for x in e["loc"] if not str(x)[:1].isupper()]))


def _no_duplicate_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError("/", f"duplicate key {key!r}")
        out[key] = value
    return out


def _check_table(table):
    if not isinstance(table, list):
        return
    seen = {}
    for i, entry in enumerate(table):
        if isinstance(entry, list) and entry:
            level = entry[0]
            if level in seen:
                raise ConfigError(f"/rates/table/{i}", f"duplicate level {level} (first given at index {seen[level]})")
            seen[level] = i


def expand_rates(rates: Rates, top_level: int) -> dict[int, float]:
    """Full level -> rate table on ``[floor, top_level]``."""
    if isinstance(rates, TableRates):
        return {int(l): float(v) for l, v in rates.table}
    if isinstance(rates, ConstantRates):
        if rates.floor >= top_level:
            raise ConfigError("/rates/floor", f"floor {rates.floor} must lie below r+q={top_level}")
        table = {rates.floor: 0.0}
        table.update({l: rates.constant for l in range(rates.floor + 1, top_level + 1)})
        return table
    table = {rates.floor: 0.0}
    for i, seg in enumerate(rates.segments):
        if seg.stop < seg.start:
            raise ConfigError(f"/rates/segments/{i}", "segment 'to' is below 'from'")
        for level in range(seg.start, seg.stop + 1):
            if level <= rates.floor:
                raise ConfigError(f"/rates/segments/{i}", f"level {level} is at or below the floor {rates.floor}")
            if level in table:
                raise ConfigError(f"/rates/segments/{i}", f"level {level} covered twice")
            table[level] = seg.rate
    missing = [l for l in range(rates.floor, top_level + 1) if l not in table]
    if missing:
        raise ConfigError("/rates/segments", f"levels {missing} not covered by any segment")
    return table
