"""Post-hoc analysis of search runs: 2D coverage, QD score, trends, tests, heatmaps, replay."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .episode_log import EpisodeLog, MalformedLog
from .measures import COLUMNS, MEASURE_IDS, WORKLOAD_IDS, MeasureVector, compute_measures
from .qd.archive import Dimension
from .qd.search import QD_MEASURES, load_evaluations
from .sim.layout import LayoutError, parse_layout
from .sim.state import Action, EpisodeOver, init_state, step


class MissingMeasure(KeyError):
    pass


class InvalidCounts(ValueError):
    pass


SOURCES = ("planqd", "random", "external")


def default_dimension(measure: str) -> Dimension:
    if measure in WORKLOAD_IDS:
        return Dimension(measure, -8.0, 8.0, 17)
    if measure == "percent_contribution":
        return Dimension(measure, 0.0, 0.5, 10)
    if measure == "specialization":
        return Dimension(measure, 0.25, 1.0, 10)
    if measure == "avg_action_delay":
        return Dimension(measure, 0.0, 100.0, 20)
    if measure == "fitness":
        return Dimension(measure, 0.0, 1000.0, 20)
    raise MissingMeasure(measure)


@dataclass(frozen=True)
class Projection:
    x: Dimension
    y: Dimension

    def __post_init__(self) -> None:
        if self.x.measure == self.y.measure:
            raise ValueError("a projection needs two distinct measures")

    @classmethod
    def of(cls, a: str, b: str, overrides: Optional[Mapping[str, Dimension]] = None) -> Projection:
        overrides = overrides or {}
        return cls(overrides.get(a) or default_dimension(a), overrides.get(b) or default_dimension(b))

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.bins, self.y.bins

    def swapped(self) -> Projection:
        return Projection(self.y, self.x)

    def to_dict(self) -> dict[str, Any]:
        return {"x": self.x.to_dict(), "y": self.y.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Projection:
        return cls(Dimension(**d["x"]), Dimension(**d["y"]))


@dataclass
class PointSet:
    """Measure vectors (all 12 behavioural measures plus fitness) with a source tag."""

    measures: list[dict[str, float]] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.measures)

    def add(self, m: Mapping[str, float], source: str = "external") -> None:
        missing = [c for c in COLUMNS if c not in m]
        if missing:
            raise MissingMeasure(f"point lacks {missing}")
        self.measures.append({c: float(m[c]) for c in COLUMNS})
        self.sources.append(source)

    def column(self, measure: str) -> np.ndarray:
        if self.measures and measure not in self.measures[0]:
            raise MissingMeasure(measure)
        return np.array([m[measure] for m in self.measures], dtype=float)

    def filter(self, source: str) -> PointSet:
        keep = [i for i, s in enumerate(self.sources) if s == source]
        return PointSet([self.measures[i] for i in keep], [self.sources[i] for i in keep])

    @classmethod
    def from_vectors(cls, vectors: Iterable[MeasureVector], source: str = "external") -> PointSet:
        ps = cls()
        for v in vectors:
            ps.add(v.as_dict(), source)
        return ps

    @classmethod
    def from_run(cls, run_dir: str | Path, source: Optional[str] = None) -> PointSet:
        """Every successful evaluation of a run (not just the archive elites)."""
        ps = cls()
        for rec in load_evaluations(run_dir):
            if rec.get("status") == "ok":
                ps.add(rec["measures"], source or rec.get("algorithm", "external"))
        return ps

    @classmethod
    def from_csv(cls, text: str, source: str = "external") -> PointSet:
        ps = cls()
        for row in csv.DictReader(io.StringIO(text)):
            tag = row.pop("source", None) or source
            try:
                ps.add({k: float(v) for k, v in row.items() if k in COLUMNS}, tag)
            except ValueError as exc:
                raise MalformedLog(f"non-numeric measure in row {row}") from exc
        return ps

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS + ("source",))
        for m, s in zip(self.measures, self.sources):
            w.writerow([m[c] for c in COLUMNS] + [s])
        return buf.getvalue()


def load_points(path: str | Path, source: Optional[str] = None) -> PointSet:
    """A run directory, a CSV of measure rows, or an ``evaluations.jsonl`` file."""
    path = Path(path)
    if path.is_dir():
        return PointSet.from_run(path, source)
    if path.suffix == ".csv":
        return PointSet.from_csv(path.read_text(), source or "external")
    if path.name.endswith(".jsonl"):
        return PointSet.from_run(path.parent, source)
    raise MalformedLog(f"cannot read points from {path}")


def _cells(points: PointSet, proj: Projection) -> np.ndarray:
    if not len(points):
        return np.zeros((0, 2), dtype=int)
    return np.stack([proj.x.indices(points.column(proj.x.measure)), proj.y.indices(points.column(proj.y.measure))], axis=1)


def heatmap_grid(points: PointSet, proj: Projection, objective: str = "fitness") -> np.ndarray:
    """Per-cell maximum objective; NaN marks empty cells. Rows follow ``proj.x``."""
    grid = np.full(proj.shape, np.nan)
    cells = _cells(points, proj)
    if len(cells):
        values = points.column(objective)
        for (i, j), v in zip(cells, values):
            if np.isnan(grid[i, j]) or v > grid[i, j]:
                grid[i, j] = v
    return grid


def coverage(points: PointSet, proj: Projection) -> float:
    cells = _cells(points, proj)
    filled = len({(int(i), int(j)) for i, j in cells})
    return filled / (proj.x.bins * proj.y.bins)


def qd_score(points: PointSet, proj: Projection, objective: str = "fitness") -> float:
    grid = heatmap_grid(points, proj, objective)
    return float(np.nansum(grid))


QD_GROUP, NON_QD_GROUP, MIXED_GROUP = "qd", "non_qd", "mixed"


def pair_group(a: str, b: str, qd_measures: Sequence[str]) -> str:
    n = (a in qd_measures) + (b in qd_measures)
    return (NON_QD_GROUP, MIXED_GROUP, QD_GROUP)[n]


@dataclass
class CoverageReport:
    runs: list[str]
    rows: list[dict[str, Any]]

    def group_means(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for group in (QD_GROUP, NON_QD_GROUP, MIXED_GROUP):
            rows = [r for r in self.rows if r["group"] == group]
            out[group] = {
                f"{key}:{run}": float(np.mean([r[f"{key}:{run}"] for r in rows])) if rows else float("nan")
                for run in self.runs for key in ("coverage", "qd_score")
            }
            out[group]["pairs"] = len(rows)
        return out

    def group_sizes(self) -> dict[str, int]:
        sizes = dict.fromkeys((QD_GROUP, NON_QD_GROUP, MIXED_GROUP), 0)
        for r in self.rows:
            sizes[r["group"]] += 1
        return sizes

    def to_csv(self) -> str:
        cols = ["measure_a", "measure_b", "group", "in_aggregate"]
        cols += [f"{k}:{r}" for r in self.runs for k in ("coverage", "qd_score")]
        if len(self.runs) == 2:
            cols += ["coverage_diff", "qd_score_diff"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def pairwise_coverage_report(
    runs: Mapping[str, PointSet],
    measures: Sequence[str] = MEASURE_IDS,
    qd_measures: Sequence[str] = QD_MEASURES,
    overrides: Optional[Mapping[str, Dimension]] = None,
) -> CoverageReport:
    """Coverage and QD score of every run on every 2D plane of two measures.

    With exactly two runs, ``*_diff`` columns hold first minus second. Mixed
    pairs (one QD and one other measure) are reported but flagged as outside
    the two aggregate groups.
    """
    if not runs:
        raise ValueError("need at least one run")
    for name, ps in runs.items():
        for m in measures:
            if len(ps) and m not in ps.measures[0]:
                raise MissingMeasure(f"run {name!r} lacks {m}")
    names = list(runs)
    rows = []
    for a, b in itertools.combinations(measures, 2):
        proj = Projection.of(a, b, overrides)
        group = pair_group(a, b, qd_measures)
        row: dict[str, Any] = {
            "measure_a": a, "measure_b": b, "group": group, "in_aggregate": group != MIXED_GROUP,
        }
        for n in names:
            row[f"coverage:{n}"] = coverage(runs[n], proj)
            row[f"qd_score:{n}"] = qd_score(runs[n], proj)
        if len(names) == 2:
            row["coverage_diff"] = row[f"coverage:{names[0]}"] - row[f"coverage:{names[1]}"]
            row["qd_score_diff"] = row[f"qd_score:{names[0]}"] - row[f"qd_score:{names[1]}"]
        rows.append(row)
    return CoverageReport(names, rows)


TREND_METRICS = ("fitness", "avg_action_delay", "percent_contribution", "specialization")


def _metric_means(run: Iterable[EpisodeLog | MeasureVector | Mapping[str, float]]) -> dict[str, float]:
    vals: dict[str, list[float]] = {m: [] for m in TREND_METRICS}
    for item in run:
        if isinstance(item, EpisodeLog):
            item = compute_measures(item)
        d = item.as_dict() if isinstance(item, MeasureVector) else item
        for m in TREND_METRICS:
            vals[m].append(float(d[m]))
    return {m: float(np.mean(v)) if v else float("nan") for m, v in vals.items()}


def percent_difference(a: float, b: float) -> Optional[float]:
    if b == 0 or math.isnan(a) or math.isnan(b):
        return None
    return 100.0 * (a - b) / b


def format_percent(x: Optional[float]) -> str:
    return "undefined" if x is None else f"{x:+.1f}%"


def trend_table(run_a: Iterable, run_b: Iterable) -> dict[str, Optional[float]]:
    """Signed percentage change of each teamwork metric's mean, A relative to B.

    By convention A is the with-communication run. ``None`` marks a metric
    whose B mean is zero.
    """
    ma, mb = _metric_means(run_a), _metric_means(run_b)
    return {m: percent_difference(ma[m], mb[m]) for m in TREND_METRICS}


def proportion_test(successes: int, n: int, p0: float = 0.5, method: str = "z") -> float:
    """One-sided (greater) test of an observed proportion against ``p0``.

    ``method="z"`` is the normal approximation without continuity correction;
    ``method="exact"`` is the exact binomial tail P(X >= successes).
    """
    if not (isinstance(successes, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise InvalidCounts("counts must be integers")
    if n <= 0 or not 0 <= successes <= n:
        raise InvalidCounts(f"need 0 <= successes <= n and n > 0, got {successes}/{n}")
    if not 0 < p0 < 1:
        raise InvalidCounts(f"p0 must lie in (0, 1), got {p0}")
    if method == "z":
        z = (successes / n - p0) / math.sqrt(p0 * (1 - p0) / n)
        return float(stats.norm.sf(z))
    if method == "exact":
        return float(stats.binomtest(successes, n, p0, alternative="greater").pvalue)
    raise ValueError(f"unknown method {method!r}")


def export_heatmap(
    points: PointSet,
    proj: Projection,
    out_path: str | Path,
    png: bool = False,
    objective: str = "fitness",
) -> Path:
    """CSV grid of per-cell max objective (blank = empty) plus a JSON sidecar."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    grid = heatmap_grid(points, proj, objective)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in grid:
        w.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])
    out_path.write_text(buf.getvalue())
    meta = {
        "projection": proj.to_dict(),
        "objective": objective,
        "rows": proj.x.measure,
        "cols": proj.y.measure,
        "n_points": len(points),
        "sources": sorted(set(points.sources)),
        "coverage": coverage(points, proj),
        "qd_score": qd_score(points, proj, objective),
    }
    out_path.with_suffix(".json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    if png:
        _render_png(grid, proj, out_path.with_suffix(".png"))
    return out_path


def import_heatmap(path: str | Path) -> tuple[np.ndarray, dict[str, Any]]:
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    grid = np.array([[float(v) if v else np.nan for v in row] for row in rows], dtype=float)
    meta = json.loads(path.with_suffix(".json").read_text())
    return grid, meta


def _render_png(grid: np.ndarray, proj: Projection, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    extent = (proj.y.lower, proj.y.upper, proj.x.upper, proj.x.lower)
    im = ax.imshow(grid, extent=extent, aspect="auto", cmap="viridis")
    ax.set_xlabel(proj.y.measure)
    ax.set_ylabel(proj.x.measure)
    fig.colorbar(im, ax=ax, label="fitness")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def replay_frames(log: EpisodeLog) -> list[str]:
    """ASCII grid after each timestep (frame 0 is the initial state).

    Agents show as ``1`` and ``2``. The log's joint actions are re-simulated;
    a log whose rewards disagree with the simulation is rejected.
    """
    if not log.layout_text:
        raise MalformedLog("log carries no layout")
    try:
        layout = parse_layout(log.layout_text, validate=False)
    except LayoutError as exc:
        raise MalformedLog(f"bad layout in log: {exc}") from exc
    state = init_state(layout, log.seed, horizon=log.horizon)
    frames = [_frame(state)]
    for t, joint in enumerate(log.actions):
        try:
            state, reward, _ = step(state, [Action(a) for a in joint])
        except (ValueError, EpisodeOver) as exc:
            raise MalformedLog(f"step {t}: {exc}") from exc
        if t < len(log.rewards) and reward != log.rewards[t]:
            raise MalformedLog(f"step {t}: log reward {log.rewards[t]} but replay gives {reward}")
        frames.append(_frame(state))
    return frames


def _frame(state) -> str:
    rows = [[k.value for k in row] for row in state.layout.grid]
    for i, agent in enumerate(state.agents):
        r, c = agent.position
        rows[r][c] = str(i + 1)
    return "\n".join("".join(r) for r in rows)


def replay(log: EpisodeLog | str | Path, names: Sequence[str] = ("Alice", "Bob")) -> str:
    """Frames with timestep headers, followed by the message transcript."""
    if not isinstance(log, EpisodeLog):
        log = EpisodeLog.load(log)
    frames = replay_frames(log)
    parts = [f"t={t}\n{f}" for t, f in enumerate(frames)]
    transcript = [f"[t={m.t}] {names[m.sender]}: {m.text}" for m in log.messages]
    parts.append("Transcript:\n" + ("\n".join(transcript) if transcript else "(no messages)"))
    return "\n\n".join(parts) + "\n"
