"""Experiment configuration: YAML documents with nested sections.

Example::

    geometry: {num_states: 3, num_actions: 2, horizon: 4, num_contexts: 6}
    classes: {reward_size: 8, dynamics_size: 8, generation_seed: 11}
    schedule: {kind: cyclic}
    T: 4000
    seeds: [0, 1, 2]
    output: runs/reference
    agent: {variant: approx-62}
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from ..agent import AgentConfig
from ..core import FunctionClass, Geometry, build_cmdp
from .schedules import ContextSchedule


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ClassSpec:
    reward_size: int = 1
    dynamics_size: int = 1
    generation_seed: int = 0
    dirichlet_alpha: float = 1.0
    reward_truth: Optional[int] = None
    dynamics_truth: Optional[int] = None
    reward_members: Optional[list] = None
    dynamics_members: Optional[list] = None
    tables_file: Optional[str] = None


@dataclass
class ExperimentConfig:
    num_states: int
    num_actions: int
    horizon: int
    num_contexts: int
    T: int
    start_state: int = 0
    classes: ClassSpec = field(default_factory=ClassSpec)
    schedule: ContextSchedule = field(default_factory=ContextSchedule)
    delta: float = 0.05
    seeds: list = field(default_factory=lambda: [0])
    output: Optional[str] = None
    agent: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if min(self.num_states, self.num_actions, self.horizon, self.num_contexts) < 1:
            raise ConfigError("geometry entries must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        try:
            self.schedule.validate(self.num_contexts, self.T)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.classes.tables_file is not None and not self._tables_path().exists():
            raise ConfigError(f"tables_file not found: {self._tables_path()}")

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.num_states, self.num_actions, self.horizon, self.start_state)

    def _tables_path(self) -> Path:
        return (self.base_dir / self.classes.tables_file).resolve()

    def agent_config(self) -> AgentConfig:
        known = {f.name for f in dataclasses.fields(AgentConfig)} - {"horizon_T", "delta"}
        unknown = set(self.agent) - known
        if unknown:
            raise ConfigError(f"unknown agent options: {sorted(unknown)}")
        try:
            return AgentConfig(horizon_T=self.T, delta=self.delta, **self.agent)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def with_overrides(self, **changes) -> "ExperimentConfig":
        agent = dict(self.agent)
        for key in list(changes):
            if key in ("gamma_override", "variant", "solver_method", "square_loss_rate"):
                agent[key] = changes.pop(key)
        return dataclasses.replace(self, agent=agent, **changes)

    def build_classes(self) -> tuple[FunctionClass, FunctionClass]:
        spec = self.classes
        S, A, C = self.num_states, self.num_actions, self.num_contexts
        rng = np.random.default_rng(spec.generation_seed)
        if spec.tables_file is not None:
            with np.load(self._tables_path()) as data:
                F, Pm = data["reward_members"], data["dynamics_members"]
        elif spec.reward_members is not None or spec.dynamics_members is not None:
            if spec.reward_members is None or spec.dynamics_members is None:
                raise ConfigError("inline tables need both reward_members and dynamics_members")
            F, Pm = np.asarray(spec.reward_members, float), np.asarray(spec.dynamics_members, float)
        else:
            F, Pm = generate_tables(rng, spec.reward_size, spec.dynamics_size, C, S, A, spec.dirichlet_alpha)
        # truth indices are drawn after the tables so that explicit indices do not shift them
        r_truth = spec.reward_truth if spec.reward_truth is not None else int(rng.integers(F.shape[0]))
        p_truth = spec.dynamics_truth if spec.dynamics_truth is not None else int(rng.integers(Pm.shape[0]))
        try:
            rc = FunctionClass(F, "reward", r_truth)
            pc = FunctionClass(Pm, "dynamics", p_truth)
            build_cmdp(rc, pc, self.geometry)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return rc, pc

    def build(self):
        rc, pc = self.build_classes()
        return build_cmdp(rc, pc, self.geometry)


def generate_tables(rng: np.random.Generator, n_reward: int, n_dynamics: int, C: int, S: int, A: int,
                    alpha: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform reward tables and Dirichlet(alpha) transition rows.

    Rows whose normalized sum misses 1 by more than 1e-13 are redrawn.
    """
    F = rng.random((n_reward, C, S, A))
    Pm = rng.dirichlet(np.full(S, alpha), size=(n_dynamics, C, S, A))
    Pm /= Pm.sum(axis=-1, keepdims=True)
    while True:
        bad = np.abs(Pm.sum(axis=-1) - 1.0) > 1e-13
        if not bad.any():
            return F, Pm
        fresh = rng.dirichlet(np.full(S, alpha), size=int(bad.sum()))
        Pm[bad] = fresh / fresh.sum(axis=-1, keepdims=True)


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    geo = _section(doc, "geometry")
    try:
        classes = ClassSpec(**_section(doc, "classes"))
        schedule = ContextSchedule(**_section(doc, "schedule"))
        return ExperimentConfig(
            num_states=int(geo["num_states"]),
            num_actions=int(geo["num_actions"]),
            horizon=int(geo["horizon"]),
            num_contexts=int(geo["num_contexts"]),
            start_state=int(geo.get("start_state", 0)),
            T=int(doc["T"]),
            classes=classes,
            schedule=schedule,
            delta=float(doc.get("delta", 0.05)),
            seeds=[int(s) for s in doc.get("seeds", [0])],
            output=doc.get("output"),
            agent=_section(doc, "agent"),
            base_dir=base_dir or Path.cwd(),
        )
    except KeyError as e:
        raise ConfigError(f"missing config key {e}") from e
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from e
    return config_from_dict(doc, base_dir=path.parent)
