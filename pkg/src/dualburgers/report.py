"""Run records, error metrics against the exact solutions, and file output.

All metrics are computed from :class:`TimelineSample` objects: Gauss-pair
averaged profiles on retained Gauss timelines. The CSV files hold exactly
these samples at 17 significant digits, so a record re-read from disk
reproduces every metric bit for bit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import exact
from .field_ops import pair_average

DEFAULT_KINK_BAND = 3.0


@dataclass
class TimelineSample:
    stage: int
    t: float
    x: np.ndarray
    u: np.ndarray
    Y: np.ndarray | None = None

    def field(self, name: str) -> np.ndarray:
        v = self.u if name == "u" else self.Y
        if v is None:
            raise ValueError(f"field {name!r} not recorded")
        return v


def stage_samples(stage) -> list[TimelineSample]:
    """Averaged samples on every retained Gauss timeline of a stage."""
    mesh = stage.mesh
    x = mesh.x_centers
    out = []
    for r in stage.retained_rows:
        y = None if stage.primal_Y is None else pair_average(stage.primal_Y[r])
        out.append(TimelineSample(stage.index, float(mesh.gauss_t[r]), x, pair_average(stage.primal_u[r]), y))
    return out


@dataclass
class RunRecord:
    """Streaming summary of a run: the last retained timeline of every stage
    plus the timelines nearest to the requested comparison times."""

    form: str
    problem: str
    times: tuple[float, ...] = ()
    stage_last: list[TimelineSample] = field(default_factory=list)
    nearest: dict[float, TimelineSample] = field(default_factory=dict)

    def add(self, sample: TimelineSample, last_of_stage: bool = False) -> None:
        for t in self.times:
            best = self.nearest.get(t)
            if best is None or abs(sample.t - t) < abs(best.t - t):
                self.nearest[t] = sample
        if last_of_stage:
            self.stage_last.append(sample)

    def add_stage(self, samples: Sequence[TimelineSample]) -> None:
        for k, s in enumerate(samples):
            self.add(s, k == len(samples) - 1)

    @classmethod
    def from_trajectory(cls, trajectory, times: Iterable[float] = ()) -> "RunRecord":
        rec = cls(trajectory.form, trajectory.problem, tuple(times))
        for st in trajectory.stages:
            rec.add_stage(stage_samples(st))
        return rec


@dataclass
class TimelineError:
    t_requested: float
    t: float
    l1_error: float
    linf_error: float
    field: str


@dataclass
class ErrorReport:
    timelines: list[TimelineError]
    shock_position_error: float | None
    conservation_drift: float | None

    def as_dict(self) -> dict[str, float | None]:
        out: dict[str, float | None] = {
            "shock_position_error": self.shock_position_error,
            "conservation_drift": self.conservation_drift,
        }
        for e in self.timelines:
            out[f"l1_error[{e.field}@t{e.t_requested:g}]"] = e.l1_error
            out[f"linf_error[{e.field}@t{e.t_requested:g}]"] = e.linf_error
        return out


def kink_mask(x: np.ndarray, kinks: Sequence[float], band: float) -> np.ndarray:
    """True where ``x`` lies farther than ``band`` from every kink."""
    keep = np.ones(x.shape, dtype=bool)
    for k in kinks:
        keep &= np.abs(x - k) > band
    return keep


def oracle_average(problem: exact.Problem, name: str, x_centers: np.ndarray, t: float) -> np.ndarray:
    """Exact field averaged over the two Gauss abscissae of each element."""
    fn = problem.exact_u if name == "u" else problem.exact_Y
    if fn is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution for {name}")
    h = np.diff(x_centers).mean() if x_centers.size > 1 else 1.0
    g = 0.5 / math.sqrt(3.0) * h
    return 0.5 * (np.asarray(fn(x_centers - g, t)) + np.asarray(fn(x_centers + g, t)))


def timeline_error(problem: exact.Problem, sample: TimelineSample, name: str, t_requested: float,
                   band_widths: float = DEFAULT_KINK_BAND, x_window=(-np.inf, np.inf)) -> TimelineError:
    x = sample.x
    h = float(np.diff(x).mean()) if x.size > 1 else 1.0
    err = np.abs(sample.field(name) - oracle_average(problem, name, x, sample.t))
    keep = kink_mask(x, problem.discontinuities(sample.t), band_widths * h)
    keep &= (x >= x_window[0]) & (x <= x_window[1])
    if not keep.any():
        return TimelineError(t_requested, sample.t, float("nan"), float("nan"), name)
    return TimelineError(t_requested, sample.t, float(h * err[keep].sum()), float(err[keep].max()), name)


def compare_record(record: RunRecord, problem=None, band_widths: float = DEFAULT_KINK_BAND,
                   x_window=(-np.inf, np.inf), detector: dict | None = None) -> ErrorReport:
    prob = exact.get_problem(problem if problem is not None else record.problem)
    names = ("u",) if record.form == "conservation" else ("Y", "u")
    timelines = [timeline_error(prob, record.nearest[t], n, t, band_widths, x_window)
                 for t in record.times for n in names]
    shock_err = None
    drift = None
    if record.form == "conservation" and record.stage_last:
        profiles = [(s.t, s.x, s.u) for s in record.stage_last]
        diag = exact.shock_diagnostics(profiles, **(detector or {}))
        errs = [min((abs(p - q) for q in prob.shock_positions(t)), default=np.nan)
                for t, p in zip(diag.times, diag.positions)]
        errs = [e for e in errs if np.isfinite(e)]
        shock_err = float(max(errs)) if errs else None
        h = float(np.diff(record.stage_last[0].x).mean())
        integrals = np.array([h * s.u.sum() for s in record.stage_last])
        i0 = integrals[0]
        dev = np.abs(integrals - i0).max()
        drift = float(dev / abs(i0)) if i0 != 0 else float(dev)
    return ErrorReport(timelines, shock_err, drift)


def compare(config, trajectory, times: Iterable[float] | None = None, **kwargs) -> ErrorReport:
    """Error report of a trajectory marched with ``keep_fields=True``."""
    times = tuple(times if times is not None else getattr(config, "compare", ()) or ())
    return compare_record(RunRecord.from_trajectory(trajectory, times), trajectory.problem, **kwargs)


# -- CSV -------------------------------------------------------------------------

def csv_columns(form: str) -> list[str]:
    if form == "conservation":
        return ["problem", "form", "stage", "t", "x", "u"]
    return ["problem", "form", "stage", "t", "x", "Y", "u"]


def _fmt(v: float) -> str:
    return f"{v:.17g}"


class CSVWriter:
    """Row writer in the documented schema; one row per element per timeline."""

    def __init__(self, path: Path, form: str, problem: str):
        self.path = Path(path)
        self.form = form
        self.problem = problem
        try:
            self._fh = open(self.path, "w", newline="")
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc}") from exc
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(csv_columns(form))
        self.rows = 0

    def write(self, sample: TimelineSample) -> None:
        t = _fmt(sample.t)
        hj = self.form != "conservation"
        for k in range(sample.x.size):
            row = [self.problem, self.form, str(sample.stage), t, _fmt(sample.x[k])]
            if hj:
                row.append(_fmt(sample.Y[k]))
            row.append(_fmt(sample.u[k]))
            self._w.writerow(row)
        self.rows += sample.x.size

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_csv(trajectory, path: Path) -> Path:
    """Write all retained timelines of an in-memory trajectory."""
    path = Path(path)
    with CSVWriter(path, trajectory.form, trajectory.problem) as w:
        for st in trajectory.stages:
            for s in stage_samples(st):
                w.write(s)
    return path


def read_csv(path: Path, times: Iterable[float] = ()) -> RunRecord:
    """Rebuild a :class:`RunRecord` from a CSV written by :class:`CSVWriter`."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    form = rows[0][1]
    if header != csv_columns(form):
        raise ValueError(f"{path}: unexpected header {header}")
    rec = RunRecord(form, rows[0][0], tuple(times))
    hj = form != "conservation"
    groups: list[list[list[str]]] = []
    for r in rows:
        if groups and groups[-1][0][2] == r[2] and groups[-1][0][3] == r[3]:
            groups[-1].append(r)
        else:
            groups.append([r])
    for k, g in enumerate(groups):
        x = np.array([float(r[4]) for r in g])
        u = np.array([float(r[-1]) for r in g])
        y = np.array([float(r[5]) for r in g]) if hj else None
        stage = int(g[0][2])
        last = k == len(groups) - 1 or int(groups[k + 1][0][2]) != stage
        rec.add(TimelineSample(stage, float(g[0][3]), x, u, y), last)
    return rec


# -- metadata / manifest ----------------------------------------------------------

def write_key_values(path: Path, items: dict) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, (list, tuple)):
                v = ",".join(str(e) for e in v)
            fh.write(f"{k}={v}\n")
    return path


def read_key_values(path: Path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: malformed line {line!r}")
        out[k.strip()] = v.strip()
    return out


# -- SVG -------------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def svg_line_plot(path: Path, series: list[dict], title: str = "", xlabel: str = "x", ylabel: str = "",
                  width: int = 640, height: int = 420) -> Path:
    """Static SVG 1.1 line chart.

    Each series is ``{"x": array, "y": array, "label": str, "dashed": bool}``;
    series sharing a label index share a color.
    """
    ml, mr, mt, mb = 60, 150, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(np.nanmin(ys)), float(np.nanmax(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0 if y1 > y0 else 1.0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        out.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 16}" font-size="11" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 6}" y="{py(yv) + 4:.1f}" font-size="11" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" font-size="12" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="18" font-size="13" text-anchor="middle">{_esc(title)}</text>')
    labels: list[str] = []
    for s in series:
        key = s.get("group", s.get("label", ""))
        if key not in labels:
            labels.append(key)
        color = _COLORS[labels.index(key) % len(_COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s["x"], s["y"]) if np.isfinite(b))
        dash = ' stroke-dasharray="5,3"' if s.get("dashed") else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
    for k, key in enumerate(labels):
        yk = mt + 14 + 16 * k
        color = _COLORS[k % len(_COLORS)]
        out.append(f'<line x1="{ml + pw + 10}" y1="{yk}" x2="{ml + pw + 30}" y2="{yk}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 35}" y="{yk + 4}" font-size="11">{_esc(str(key))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def profile_svg(path: Path, record: RunRecord, name: str, problem=None) -> Path:
    """Computed profiles at the record's comparison times with dashed oracles."""
    prob = exact.get_problem(problem if problem is not None else record.problem)
    fn = prob.exact_u if name == "u" else prob.exact_Y
    series = []
    for t in record.times:
        s = record.nearest[t]
        label = f"t={s.t:.4g}"
        series.append({"x": s.x, "y": s.field(name), "group": label})
        if fn is not None and s.t > 0:
            series.append({"x": s.x, "y": oracle_average(prob, name, s.x, s.t), "group": label, "dashed": True})
    return svg_line_plot(path, series, title=f"{record.problem} ({record.form}): {name}", ylabel=name)
