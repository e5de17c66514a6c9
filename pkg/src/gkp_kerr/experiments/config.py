"""Sweep configuration with strict validation and exact JSON round trips."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

DECODERS = ("perfect_ed", "sbs", "both")


class ConfigError(ValueError):
    pass


def default_gammas() -> list[float]:
    return [float(g) for g in np.logspace(-4, np.log10(3e-2), 12)]


@dataclass
class SweepConfig:
    deltas: list = field(default_factory=lambda: [0.36, 0.25])
    gammas: list = field(default_factory=default_gammas)
    n_rounds: list = field(default_factory=lambda: [30])
    decoder: str = "both"
    # loss on the input state before the gate, as a loss probability
    gamma_init: float = 0.0
    # kappa_phi * t_K, i.e. dephasing accumulated over one gate time
    dephasing_per_gate: float = 0.0
    p_eg: float = 0.0
    p_ge: float = 0.0
    # loss probability applied before each stabilization round
    round_loss: float = 0.0
    ancilla_dephasing: float = 0.0
    dims: dict = field(default_factory=dict)
    sbs_grid: int | None = None
    include_small_delta: bool = False
    check_truncation: bool = True
    seed: int = 0
    workers: int = 1
    out_dir: str = "results"
    steady_tol: float = 1e-6
    max_rounds: int = 100
    fig1_delta: float = 0.25
    fig1_extent: float = 7.0
    fig1_points: int = 201

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(msg):
            raise ConfigError(msg)

        if not self.deltas:
            fail("deltas must not be empty")
        for d in self.deltas:
            if not 0 < d <= 0.6:
                fail(f"delta {d} outside (0, 0.6]")
            if d < 0.2 and not self.include_small_delta:
                fail(f"delta {d} requires include_small_delta")
        for g in self.gammas:
            if not 0 <= g < 1:
                fail(f"gamma {g} outside [0, 1)")
        for n in self.n_rounds:
            if not isinstance(n, int) or n < 0:
                fail(f"n_rounds entry {n!r} must be a non-negative integer")
        if self.decoder not in DECODERS:
            fail(f"decoder must be one of {DECODERS}")
        for name in ("gamma_init", "p_eg", "p_ge", "round_loss"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                fail(f"{name} = {v} outside [0, 1)")
        if self.dephasing_per_gate < 0:
            fail("dephasing_per_gate must be non-negative")
        if not 0 <= self.ancilla_dephasing <= 0.5:
            fail("ancilla_dephasing outside [0, 0.5]")
        for k, v in self.dims.items():
            try:
                float(k)
            except ValueError:
                fail(f"dims key {k!r} is not a delta")
            if not isinstance(v, int) or v < 2:
                fail(f"dims[{k}] must be an integer >= 2")
        if self.sbs_grid is not None and (not isinstance(self.sbs_grid, int) or self.sbs_grid < 1):
            fail("sbs_grid must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            fail("seed must be an unsigned 64-bit integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            fail("workers must be >= 1")
        if self.steady_tol <= 0 or self.max_rounds < 1:
            fail("steady_tol must be positive and max_rounds >= 1")
        if self.fig1_points < 2 or self.fig1_extent <= 0:
            fail("fig1 grid needs >= 2 points and a positive extent")

    def dim_for(self, delta: float) -> int | None:
        for k, v in self.dims.items():
            if abs(float(k) - delta) < 1e-12:
                return v
        return None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_json(text)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def replace(self, **changes) -> "SweepConfig":
        data = self.to_dict()
        data.update(changes)
        return SweepConfig.from_dict(data)
