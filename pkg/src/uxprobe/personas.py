"""Experiment configuration and persona expansion.

Trait dimensions are permuted into the full persona set: one persona per
value combination per replica. Dimension declaration order is the canonical
ordering everywhere (ids, prompts, reports).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from uxprobe.errors import ConfigurationError
from uxprobe.prompts import PERSONA_PROMPT

DEFAULT_MAX_STEPS = 25
DEFAULT_N_TAGS = 3


@dataclass(frozen=True)
class TraitDimension:
    name: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigurationError("trait dimension needs a name")
        if not self.values:
            raise ConfigurationError(f"dimension {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise ConfigurationError(f"dimension {self.name!r} has duplicate values")


@dataclass(frozen=True)
class Goal:
    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigurationError("goal needs an id")
        if not self.text.strip():
            raise ConfigurationError(f"goal {self.id!r} has empty text")


@dataclass(frozen=True)
class Persona:
    id: str
    traits: tuple[tuple[str, str], ...]  # (dimension name, value), declaration order
    replica_index: int

    @property
    def trait_map(self) -> dict[str, str]:
        return dict(self.traits)


@dataclass
class ExperimentConfig:
    site: str
    dimensions: list[TraitDimension] = field(default_factory=list)
    replication: int = 1
    goals: list[Goal] = field(default_factory=list)
    directives: str = ""
    max_steps: int = DEFAULT_MAX_STEPS
    n_tags: int = DEFAULT_N_TAGS
    site_name: str = ""

    def __post_init__(self) -> None:
        if self.replication < 1:
            raise ConfigurationError("replication must be >= 1")
        if self.max_steps < 1:
            raise ConfigurationError("max_steps must be >= 1")
        if not self.goals:
            raise ConfigurationError("at least one goal is required")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ConfigurationError("dimension names must be unique")
        goal_ids = [g.id for g in self.goals]
        if len(set(goal_ids)) != len(goal_ids):
            raise ConfigurationError("goal ids must be unique")
        if not self.site_name:
            self.site_name = _derive_site_name(self.site)


def _derive_site_name(site: str) -> str:
    tail = site.rstrip("/").rsplit("/", 1)[-1]
    return tail or site


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(value: str) -> str:
    slug = _SLUG_RE.sub("-", value.lower()).strip("-")
    return slug or "x"


def persona_id(values: tuple[str, ...], replica_index: int) -> str:
    parts = "-".join(slugify(v) for v in values)
    return f"p-{parts}-r{replica_index}" if parts else f"p-r{replica_index}"


def expand_traits(config: ExperimentConfig) -> list[Persona]:
    """All trait permutations times replication, in canonical order.

    Order is dimension-major over declaration order (first dimension varies
    slowest), replica index varying fastest. Returns exactly
    replication * prod(len(values)) personas.
    """
    combos: list[tuple[str, ...]] = [()]
    for dimension in config.dimensions:
        combos = [combo + (value,) for combo in combos for value in dimension.values]

    names = [d.name for d in config.dimensions]
    personas = []
    for combo in combos:
        for replica in range(1, config.replication + 1):
            personas.append(
                Persona(
                    id=persona_id(combo, replica),
                    traits=tuple(zip(names, combo)),
                    replica_index=replica,
                )
            )
    return personas


def render_trait_lines(persona: Persona) -> str:
    return "\n".join(f"{name}: {value}" for name, value in persona.traits)


def render_persona_prompt(persona: Persona) -> str:
    """Persona prompt with one "name: value" line per dimension."""
    return PERSONA_PROMPT.replace("{persona_features}", render_trait_lines(persona))


# -- config file ------------------------------------------------------------
#
# YAML/JSON schema:
#   site: str (snapshot directory or URL)     [required]
#   site_name: str                            [optional]
#   dimensions: [{name: str, values: [str]}]  [optional]
#   replication: int                          [default 1]
#   goals: [{id: str, text: str}]             [required]
#   directives: str                           [optional]
#   max_steps: int                            [default 25]
#   n_tags: int                               [default 3]


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a mapping")
    try:
        dimensions = [
            TraitDimension(name=d["name"], values=tuple(str(v) for v in d["values"]))
            for d in data.get("dimensions", [])
        ]
        goals = [Goal(id=str(g["id"]), text=str(g["text"])) for g in data.get("goals", [])]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed config entry: {exc}") from exc
    return ExperimentConfig(
        site=str(data.get("site", "")),
        site_name=str(data.get("site_name", "")),
        dimensions=dimensions,
        replication=int(data.get("replication", 1)),
        goals=goals,
        directives=str(data.get("directives", "")),
        max_steps=int(data.get("max_steps", DEFAULT_MAX_STEPS)),
        n_tags=int(data.get("n_tags", DEFAULT_N_TAGS)),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    raw = Path(path).read_text(encoding="utf-8")
    return config_from_dict(yaml.safe_load(raw))


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "site": config.site,
        "site_name": config.site_name,
        "dimensions": [{"name": d.name, "values": list(d.values)} for d in config.dimensions],
        "replication": config.replication,
        "goals": [{"id": g.id, "text": g.text} for g in config.goals],
        "directives": config.directives,
        "max_steps": config.max_steps,
        "n_tags": config.n_tags,
    }
