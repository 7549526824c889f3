"""Grid archive: one elite prompt list per cell of a discretized measure space."""
from __future__ import annotations

import enum
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

Cell = tuple[int, ...]


@dataclass(frozen=True)
class Dimension:
    measure: str
    lower: float
    upper: float
    bins: int

    def __post_init__(self) -> None:
        if self.bins < 1:
            raise ValueError(f"{self.measure}: need at least one bin")
        if not self.lower < self.upper:
            raise ValueError(f"{self.measure}: lower bound must be below upper bound")

    def index(self, value: float) -> int:
        """Uniform bin of ``value``; out-of-range values go to the edge bins."""
        if math.isnan(value):
            raise ValueError(f"{self.measure}: NaN measure value")
        i = math.floor((value - self.lower) / (self.upper - self.lower) * self.bins)
        return min(max(i, 0), self.bins - 1)

    def indices(self, values: np.ndarray) -> np.ndarray:
        scaled = (np.asarray(values, dtype=float) - self.lower) / (self.upper - self.lower) * self.bins
        return np.clip(np.floor(scaled), 0, self.bins - 1).astype(int)

    def to_dict(self) -> dict[str, Any]:
        return {"measure": self.measure, "lower": self.lower, "upper": self.upper, "bins": self.bins}


@dataclass(frozen=True)
class ArchiveConfig:
    dims: tuple[Dimension, ...]
    objective: str = "fitness"

    def __post_init__(self) -> None:
        if not self.dims:
            raise ValueError("an archive needs at least one dimension")

    @classmethod
    def uniform(cls, measures: Sequence[str], lower: float, upper: float, bins: int) -> ArchiveConfig:
        return cls(tuple(Dimension(m, lower, upper, bins) for m in measures))

    @property
    def measures(self) -> tuple[str, ...]:
        return tuple(d.measure for d in self.dims)

    @property
    def n_cells(self) -> int:
        return math.prod(d.bins for d in self.dims)

    def to_dict(self) -> dict[str, Any]:
        return {"objective": self.objective, "dims": [d.to_dict() for d in self.dims]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ArchiveConfig:
        return cls(tuple(Dimension(**x) for x in d["dims"]), d.get("objective", "fitness"))


def cell_index(m: Mapping[str, float] | Sequence[float], cfg: ArchiveConfig) -> Cell:
    """Per-dimension bin indices of a measure vector.

    ``m`` is either a mapping from measure id to value or a sequence with
    one value per configured dimension.
    """
    if isinstance(m, Mapping):
        values = [m[d.measure] for d in cfg.dims]
    else:
        values = list(m)
        if len(values) != len(cfg.dims):
            raise ValueError(f"expected {len(cfg.dims)} measure values, got {len(values)}")
    return tuple(d.index(float(v)) for d, v in zip(cfg.dims, values))


class InsertStatus(str, enum.Enum):
    INSERTED = "inserted"
    REPLACED = "replaced"
    REJECTED = "rejected"


@dataclass(frozen=True)
class Elite:
    prompts: tuple[str, ...]
    objective: float
    measures: Mapping[str, float]
    repeats: tuple[Mapping[str, float], ...] = ()
    provenance: Mapping[str, Any] = field(default_factory=dict)
    logs: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompts": list(self.prompts),
            "objective": self.objective,
            "measures": dict(self.measures),
            "repeats": [dict(r) for r in self.repeats],
            "provenance": dict(self.provenance),
            "logs": list(self.logs),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Elite:
        return cls(
            prompts=tuple(d["prompts"]),
            objective=d["objective"],
            measures=dict(d["measures"]),
            repeats=tuple(dict(r) for r in d.get("repeats", ())),
            provenance=dict(d.get("provenance", {})),
            logs=tuple(d.get("logs", ())),
        )


class Archive:
    def __init__(self, config: ArchiveConfig):
        self.config = config
        self._elites: dict[Cell, Elite] = {}

    def __len__(self) -> int:
        return len(self._elites)

    def __contains__(self, cell: object) -> bool:
        return cell in self._elites

    def __getitem__(self, cell: Cell) -> Elite:
        return self._elites[cell]

    def __iter__(self) -> Iterator[tuple[Cell, Elite]]:
        return iter(sorted(self._elites.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Archive):
            return NotImplemented
        return self.config == other.config and self._elites == other._elites

    def cells(self) -> list[Cell]:
        return sorted(self._elites)

    def get(self, cell: Cell) -> Optional[Elite]:
        return self._elites.get(cell)

    @property
    def coverage(self) -> float:
        return len(self._elites) / self.config.n_cells

    @property
    def qd_score(self) -> float:
        return float(sum(e.objective for e in self._elites.values()))

    def cell_of(self, elite: Elite) -> Cell:
        return cell_index(elite.measures, self.config)

    def insert(self, candidate: Elite) -> tuple[InsertStatus, Cell]:
        cell = self.cell_of(candidate)
        current = self._elites.get(cell)
        if current is None:
            self._elites[cell] = candidate
            return InsertStatus.INSERTED, cell
        if candidate.objective > current.objective:
            self._elites[cell] = candidate
            return InsertStatus.REPLACED, cell
        return InsertStatus.REJECTED, cell

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "elites": [{"cell": list(c), **e.to_dict()} for c, e in self],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Archive:
        archive = cls(ArchiveConfig.from_dict(d["config"]))
        for rec in d["elites"]:
            archive._elites[tuple(rec["cell"])] = Elite.from_dict(rec)
        return archive

    def save(self, path: str | Path, extra: Optional[Mapping[str, Any]] = None) -> None:
        write_json_atomic(path, {**(extra or {}), **self.to_dict()})

    @classmethod
    def load(cls, path: str | Path) -> Archive:
        return cls.from_dict(json.loads(Path(path).read_text()))


def archive_insert(archive: Archive, candidate: Elite) -> InsertStatus:
    return archive.insert(candidate)[0]


def select_parent(archive: Archive, initial: Sequence[str], rng: np.random.Generator) -> tuple[Optional[Cell], tuple[str, ...]]:
    """A uniformly drawn elite's prompts, or copies of ``initial`` when empty.

    Returns (source cell or None, prompt list).
    """
    if not len(archive):
        return None, tuple(initial)
    cells = archive.cells()
    cell = cells[int(rng.integers(len(cells)))]
    return cell, tuple(archive[cell].prompts)


def write_json_atomic(path: str | Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def replay_insertions(config: ArchiveConfig, stream: Iterable[Elite]) -> Archive:
    archive = Archive(config)
    for e in stream:
        archive.insert(e)
    return archive
