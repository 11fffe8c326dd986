"""Command-line driver.

    dualburgers [run] --form conservation --problem shock --t-final 0.4 --out out/
    dualburgers [run] --config run.cfg --nx 100
    dualburgers circle-line --alpha 0.5 --xbar 0 --ybar 1

The config file holds ``key=value`` lines (keys as in :class:`RunConfig`,
dashes or underscores); command-line flags override it. Exit status is 0 on
success, 1 on solver failure and 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

from . import _accel, exact
from .circle_line import CircleLineProblem, solve_circle_line
from .marcher import BASE_MODES, FORMS, MarchError, StageConfig, march
from .newton import NewtonWarning
from .report import (DEFAULT_KINK_BAND, CSVWriter, RunRecord, compare_record, profile_svg, stage_samples,
                     write_key_values)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2
EMIT_CHOICES = ("csv", "svg", "diagnostics")

# per-form defaults; the conservation form uses a reduced mesh
FORM_DEFAULTS = {
    "conservation": dict(nx=50, nt=50, stage_duration=1e-2),
    "hj": dict(nx=50, nt=10, stage_duration=5e-5),
    "hj_viscous": dict(nx=50, nt=10, stage_duration=5e-5),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    form: str = "conservation"
    problem: str = "shock"
    base_state: str = "self_consistent"
    nx: int | None = None
    nt: int | None = None
    stage_duration: float | None = None
    beta_u: float = 1e6
    beta_y: float = 1e6
    n_cut: int = 5
    tol: float = 1e-10
    nu: float = 0.0
    nu_base: float = 1e-3
    t_final: float = 0.25
    out: str = "out"
    emit: tuple[str, ...] = ("csv", "diagnostics")
    compare: tuple[float, ...] = ()
    kink_band: float = DEFAULT_KINK_BAND
    eta: float = 1e-4
    max_stages: int = 100_000

    def resolved(self) -> "RunConfig":
        """Fill per-form defaults and validate."""
        if self.form not in FORMS:
            raise ConfigError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.problem not in exact.KINDS:
            raise ConfigError(f"problem must be one of {exact.KINDS}, got {self.problem!r}")
        if self.base_state not in BASE_MODES:
            raise ConfigError(f"base_state must be one of {BASE_MODES}")
        if self.form == "hj_viscous" and not self.nu > 0:
            raise ConfigError("hj_viscous requires nu > 0")
        if self.form == "hj" and self.nu != 0:
            raise ConfigError("form hj is inviscid; use hj_viscous for nu > 0")
        if self.base_state == "viscous_exact" and not self.nu_base > 0:
            raise ConfigError("viscous_exact base states require nu_base > 0")
        bad = set(self.emit) - set(EMIT_CHOICES)
        if bad:
            raise ConfigError(f"unknown emit target(s) {sorted(bad)}; choose from {EMIT_CHOICES}")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if not self.kink_band >= 0:
            raise ConfigError("kink_band must be non-negative")
        cfg = dataclasses.replace(self)
        for k, v in FORM_DEFAULTS[self.form].items():
            if getattr(cfg, k) is None:
                setattr(cfg, k, v)
        try:
            cfg.stage_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def stage_config(self) -> StageConfig:
        return StageConfig(stage_duration=self.stage_duration, nx=self.nx, nt=self.nt, beta_u=self.beta_u,
                           beta_y=self.beta_y, n_cut=self.n_cut, tol=self.tol, max_stages=self.max_stages,
                           nu=self.nu if self.form == "hj_viscous" else 0.0, eta=self.eta,
                           base_state=self.base_state,
                           nu_base=self.nu_base if self.base_state == "viscous_exact" else None)


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    key = key.replace("-", "_")
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key in ("nx", "nt", "n_cut", "max_stages"):
            return key, int(raw)
        if key in ("stage_duration", "beta_u", "beta_y", "tol", "nu", "nu_base", "t_final", "kink_band", "eta"):
            return key, float(raw)
        if key == "emit":
            return key, tuple(s.strip() for s in raw.split(",") if s.strip())
        if key == "compare":
            return key, tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return key, raw


def load_config(path: str | Path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, val = _coerce(k.strip(), v)
        out[key] = val
    return out


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _run_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="dualburgers", description="Staged dual solver for inviscid Burgers benchmarks.")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--form", choices=FORMS)
    p.add_argument("--problem", choices=exact.KINDS)
    p.add_argument("--base-state", dest="base_state", choices=BASE_MODES)
    for name in ("nx", "nt", "n-cut", "max-stages"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=str)
    for name in ("stage-duration", "beta-u", "beta-y", "tol", "nu", "nu-base", "t-final", "kink-band", "eta"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=str)
    p.add_argument("--out")
    p.add_argument("--emit", help="comma list of csv,svg,diagnostics")
    p.add_argument("--compare", help="comma list of comparison times")
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_run_args(argv: list[str]) -> tuple[RunConfig, argparse.Namespace]:
    ns = _run_parser().parse_args(argv)
    values = load_config(ns.config) if ns.config else {}
    for key in _FIELD_TYPES:
        raw = getattr(ns, key, None)
        if raw is not None:
            values.update([_coerce(key, raw)])
    return RunConfig(**values).resolved(), ns


def _metadata(cfg: RunConfig, traj, status: str, elapsed: float) -> dict:
    meta = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    meta.update({
        "status": status,
        "backend": _accel.backend(),
        "newton_max_iter": 50,
        "newton_stagnation": "window=5,factor=1e-3",
        "dtp_degeneracy_guard": 1e-8,
        "hopf_cole_rtol": 1e-8,
        "lateral_lambda": "free" if cfg.form != "conservation" else "n/a",
        "elapsed_s": f"{elapsed:.3f}",
    })
    if traj is not None:
        meta.update(traj.metadata)
        meta["stages_completed"] = len(traj.stages)
        meta["newton_iterations"] = [s.newton.iterations for s in traj.stages]
        meta["newton_stagnated_stages"] = [s.index for s in traj.stages if s.newton.stagnated] or "none"
        if traj.stages:
            meta["t_final_reached"] = f"{traj.stages[-1].t_f:.17g}"
    return meta


def run(cfg: RunConfig) -> int:
    """Execute a configured run and write the requested artifacts."""
    cfg = cfg.resolved()
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_CONFIG
    stem = f"{cfg.problem}_{cfg.form}"
    times = tuple(cfg.compare)
    record = RunRecord(cfg.form, cfg.problem, times)
    writer = CSVWriter(out / f"{stem}.csv", cfg.form, cfg.problem) if "csv" in cfg.emit else None
    written = [writer.path] if writer else []

    def on_stage(stage):
        samples = stage_samples(stage)
        record.add_stage(samples)
        if writer is not None:
            for s in samples:
                writer.write(s)

    t0 = time.perf_counter()
    traj = None
    status = "ok"
    failure = None
    try:
        traj = march(cfg.stage_config(), cfg.form, cfg.problem, cfg.t_final, keep_fields=False, callback=on_stage)
    except MarchError as exc:
        traj = exc.trajectory
        status = f"failed at stage {exc.stage}"
        failure = exc
    finally:
        if writer is not None:
            writer.close()
    elapsed = time.perf_counter() - t0

    meta_path = out / f"{stem}.meta"
    written.append(write_key_values(meta_path, _metadata(cfg, traj, status, elapsed)))
    if failure is not None:
        log.error("%s", failure)
        manifest = {"status": status, "failed_stage": failure.stage, "error": str(failure).replace("\n", " "),
                    "stages_completed": len(traj.stages), "files": [p.name for p in written]}
        write_key_values(out / "MANIFEST", manifest)
        return EXIT_SOLVER

    if "diagnostics" in cfg.emit:
        rep = compare_record(record, band_widths=cfg.kink_band)
        written.append(write_key_values(out / f"{stem}.diagnostics", rep.as_dict()))
        for k, v in rep.as_dict().items():
            log.info("%s = %s", k, v)
    if "svg" in cfg.emit and times:
        names = ("u",) if cfg.form == "conservation" else ("Y", "u")
        for name in names:
            written.append(profile_svg(out / f"{stem}_{name}.svg", record, name))
    log.info("wrote %s", ", ".join(str(p) for p in written))
    return EXIT_OK


def circle_line_main(argv: list[str]) -> int:
    p = _ArgParser(prog="dualburgers circle-line", description="Dual extrema of the circle-line problem.")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--xbar", type=float, default=0.0)
    p.add_argument("--ybar", type=float, default=1.0)
    ns = p.parse_args(argv)
    try:
        sols = solve_circle_line(CircleLineProblem(ns.alpha, ns.xbar, ns.ybar))
    except ValueError as exc:
        print(f"no primal solution: {exc}")
        return EXIT_SOLVER
    print("lambda,gamma,x,y,family")
    for s in sols:
        print(f"{s.lam:.17g},{s.gamma:.17g},{s.x:.17g},{s.y:.17g},{int(s.family)}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "circle-line":
            return circle_line_main(argv[1:])
        if argv and argv[0] == "run":
            argv = argv[1:]
        cfg, ns = parse_run_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if ns.backend:
        _accel.set_backend(ns.backend)
    warnings.simplefilter("default", NewtonWarning)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
