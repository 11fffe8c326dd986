"""Staged time marching of the dual schemes.

Each stage solves the dual problem on a space-time slab ``[t_i, t_i + T]``
starting from a zero dual state, discards the top ``n_cut`` element layers,
and hands the primal field on the cutoff line to the next stage as its
initial condition and base state.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import exact
from .assembly import DofSystem
from .burgers import BurgersBase, BurgersDualProblem, BurgersProblemData, dirichlet_mask
from .field_ops import DEFAULT_ETA, LineSamples, NodalLine, differentiate_nodal, l2_project_line, pair_average, smooth
from .hj import HJBase, HJDualProblem, HJProblemData, dirichlet_mask_hj
from .mesh import GAUSS_ABSCISSA, Mesh, build_mesh
from .newton import NewtonReport, newton_solve

log = logging.getLogger(__name__)

FORMS = ("conservation", "hj", "hj_viscous")
BASE_MODES = ("self_consistent", "viscous_exact")


@dataclass(frozen=True)
class StageConfig:
    stage_duration: float
    nx: int
    nt: int
    beta_u: float = 1e6
    beta_y: float = 1e6
    n_cut: int = 5
    tol: float = 1e-10
    max_stages: int = 100_000
    max_iter: int = 50
    nu: float = 0.0
    eta: float = DEFAULT_ETA
    x_range: tuple[float, float] = (0.0, 1.0)
    base_state: str = "self_consistent"
    nu_base: float | None = None
    lateral: str = "free"

    def __post_init__(self):
        if not (self.stage_duration > 0 and self.nx > 0 and self.nt > 0):
            raise ValueError("stage_duration, nx and nt must be positive")
        if not (0 <= self.n_cut < self.nt):
            raise ValueError("need 0 <= n_cut < nt (at least one retained layer)")
        if not (self.beta_u > 0 and self.beta_y > 0 and self.tol > 0 and self.max_stages > 0):
            raise ValueError("penalties, tol and max_stages must be positive")
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        if self.base_state not in BASE_MODES:
            raise ValueError(f"base_state must be one of {BASE_MODES}")
        if self.base_state == "viscous_exact" and not (self.nu_base or 0) > 0:
            raise ValueError("viscous_exact base states need nu_base > 0")

    @property
    def te(self) -> float:
        return self.stage_duration / self.nt

    def advance(self, form: str) -> float:
        """Distance ``t_f - t_i`` between a stage start and its cutoff line."""
        kept = self.nt - self.n_cut
        if form == "conservation":
            return (kept - 1) * self.te + self.te * (0.5 + 0.5 * GAUSS_ABSCISSA)
        return kept * self.te


@dataclass
class CutoffData:
    form: str
    t_f: float
    x_gauss: np.ndarray
    u: np.ndarray  # û on the cutoff line (conservation) or slopes of the projected Y (HJ)
    Y: NodalLine | None = None


@dataclass
class StageResult:
    index: int
    t_i: float
    t_f: float
    mesh: Mesh
    dual: np.ndarray | None
    primal_u: np.ndarray | None
    primal_Y: np.ndarray | None
    newton: NewtonReport
    retained_rows: np.ndarray
    retained_extent: float
    cutoff: CutoffData | None = None

    @property
    def primal_at_gauss(self) -> dict[str, np.ndarray]:
        out = {"u": self.primal_u}
        if self.primal_Y is not None:
            out["Y"] = self.primal_Y
        return out

    def drop_fields(self) -> None:
        self.dual = None
        self.primal_u = None
        self.primal_Y = None


@dataclass
class Trajectory:
    form: str
    problem: str
    config: StageConfig
    stages: list[StageResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def cutoff_times(self) -> np.ndarray:
        return np.array([s.t_f for s in self.stages])

    @property
    def x_centers(self) -> np.ndarray:
        return self.stages[0].mesh.x_centers

    def cutoff_profiles(self, field_name: str = "u") -> list[tuple[float, np.ndarray, np.ndarray]]:
        """``(t_f, x_centers, Gauss-pair-averaged field)`` on every cutoff line."""
        out = []
        for s in self.stages:
            c = s.cutoff
            if field_name == "u":
                v = pair_average(c.u)
            else:
                v = pair_average(c.Y.at_gauss())
            out.append((c.t_f, s.mesh.x_centers, v))
        return out

    def retained_samples(self):
        """Yield ``(stage, t, x_gauss, u, Y)`` for every retained Gauss timeline."""
        for s in self.stages:
            if s.primal_u is None:
                raise ValueError("trajectory was marched without keeping stage fields")
            for r in s.retained_rows:
                y = None if s.primal_Y is None else s.primal_Y[r]
                yield s.index, float(s.mesh.gauss_t[r]), s.mesh.gauss_x, s.primal_u[r], y

    def profile_at(self, t: float, field_name: str = "u") -> tuple[float, np.ndarray, np.ndarray]:
        """Averaged profile on the cutoff line nearest to ``t``."""
        times = self.cutoff_times
        k = int(np.argmin(np.abs(times - t)))
        return self.cutoff_profiles(field_name)[k]


class StageFailure(RuntimeError):
    def __init__(self, stage: int, report: NewtonReport, cause: BaseException | None = None):
        hist = ", ".join(f"{r:.3e}" for r in report.residual_history[-6:])
        msg = f"stage {stage} did not converge after {report.iterations} iterations (max|R|: {hist})"
        if cause is not None:
            msg += f": {cause}"
        super().__init__(msg)
        self.stage = stage
        self.report = report


class MarchError(RuntimeError):
    """Abort of a march; ``trajectory`` holds the stages completed so far."""

    def __init__(self, message: str, trajectory: Trajectory, stage: int):
        super().__init__(message)
        self.trajectory = trajectory
        self.stage = stage


# -- one stage -----------------------------------------------------------------

def stage_mesh(config: StageConfig, t_i: float) -> Mesh:
    return build_mesh(config.nx, config.nt, config.x_range, (t_i, t_i + config.stage_duration))


def run_stage(config: StageConfig, form: str, data, base, mesh: Mesh | None = None, t_i: float = 0.0,
              index: int = 1, dofs: DofSystem | None = None) -> StageResult:
    """Solve one stage from a zero dual state and recover the primal fields."""
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    mesh = stage_mesh(config, t_i) if mesh is None else mesh
    if form == "conservation":
        prob = BurgersDualProblem(mesh, base, data, dofs=dofs)
    else:
        prob = HJDualProblem(mesh, base, data, lateral=config.lateral, dofs=dofs)
    report = NewtonReport()
    try:
        free, report = newton_solve(prob.residual, prob.jacobian, prob.zero_state(),
                                    tol=config.tol, max_iter=config.max_iter)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageFailure(index, report, exc) from exc
    if not report.converged:
        raise StageFailure(index, report)
    full = prob.full(free)
    if form == "conservation":
        u, Y = prob.primal(free), None
    else:
        Y, u = prob.primal(free)
    kept = config.nt - config.n_cut
    result = StageResult(index=index, t_i=t_i, t_f=t_i + config.advance(form), mesh=mesh, dual=full,
                         primal_u=u, primal_Y=Y, newton=report, retained_rows=np.arange(2 * kept),
                         retained_extent=t_i + kept * mesh.te)
    result._problem = prob
    return result


def truncate_and_cutoff(result: StageResult, form: str, Yl_of_t=None, ybar_line: np.ndarray | None = None) -> CutoffData:
    """Extract the cutoff-line data of a converged stage.

    Conservation form: û on the g2 Gauss timeline of the last retained layer.
    HJ forms: Ŷ on the upper nodal line of the last retained layer, L2
    projected onto nodal values with the left node pinned to ``Y_l(t_f)``.
    ``ybar_line`` overrides the base state on that line (time-dependent bases).
    """
    mesh = result.mesh
    kept = result.retained_rows.size // 2
    if form == "conservation":
        row = 2 * kept - 1
        return CutoffData(form, result.t_f, mesh.gauss_x.copy(), np.array(result.primal_u[row]))
    prob = result._problem
    nodes = result.dual.reshape(mesh.nt + 1, mesh.nx + 1, 2)
    lam, gam = nodes[..., 0], nodes[..., 1]
    te, hx = mesh.te, mesh.hx

    def at_gauss(v):
        f = np.array([0.5 - 0.5 * GAUSS_ABSCISSA, 0.5 + 0.5 * GAUSS_ABSCISSA])
        return (v[:-1, None] * (1 - f) + v[1:, None] * f).ravel()

    # ∂tλ jumps across the nodal line; average the one-sided values
    below = at_gauss((lam[kept] - lam[kept - 1]) / te)
    if kept < mesh.nt:
        dtl = 0.5 * (below + at_gauss((lam[kept + 1] - lam[kept]) / te))
    else:
        dtl = below
    dxg = np.repeat(np.diff(gam[kept]) / hx, 2)
    if ybar_line is None:
        ybar_line = prob.ybar_e.reshape(mesh.nt, mesh.nx, 2, 2)[min(kept, mesh.nt - 1), :, 1, :].ravel()
    yhat = ybar_line + (dtl + dxg) / prob.base.beta_y
    constraints = {}
    if Yl_of_t is not None:
        constraints[0] = float(np.asarray(Yl_of_t(result.t_f)))
    line = l2_project_line(LineSamples(mesh.gauss_x, yhat), mesh.x_nodes, constraints)
    return CutoffData(form, result.t_f, mesh.gauss_x.copy(), differentiate_nodal(line), line)


def next_stage_inputs_burgers(cutoff: CutoffData, ul_next: float, eta: float = DEFAULT_ETA,
                              x_nodes: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(u0_next, ubar_next)``: the cutoff û unchanged, and its smoothed version."""
    u0 = np.array(cutoff.u)
    line = smooth(LineSamples(cutoff.x_gauss, u0, (float(ul_next), None)), eta, x_nodes)
    return u0, line.at_gauss()


def next_stage_inputs_hj(cutoff: CutoffData) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(Y0_next, Ybar_next, ubar_next)`` from the projected cutoff line."""
    y = cutoff.Y.at_gauss()
    return y, y.copy(), differentiate_nodal(cutoff.Y)


# -- full march ------------------------------------------------------------------

def _viscous_base(problem, config: StageConfig, mesh: Mesh):
    tt, xx = np.meshgrid(mesh.gauss_t, mesh.gauss_x, indexing="ij")
    return exact.viscous_solution(problem, config.nu_base, xx, tt)


def march(config: StageConfig, form: str, problem, T_final: float, keep_fields: bool = True,
          callback=None) -> Trajectory:
    """Run stages until the cutoff time reaches ``T_final``.

    ``problem`` is a preset name, :class:`exact.BenchmarkKind` or
    :class:`exact.Problem`. With ``keep_fields=False`` only cutoff-line data
    are kept for all but the last stage. A stage failure, or reaching
    ``config.max_stages`` first, raises :class:`MarchError` carrying the
    stages completed so far.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if form == "hj_viscous" and not config.nu > 0:
        raise ValueError("hj_viscous needs nu > 0")
    if form == "hj" and config.nu != 0:
        config = replace(config, nu=0.0)
    if not T_final > 0:
        raise ValueError("T_final must be positive")
    prob = exact.get_problem(problem)
    adv = config.advance(form)
    n_stages = max(1, math.ceil(T_final / adv - 1e-9))

    traj = Trajectory(form, prob.name, config)
    viscous_base = config.base_state == "viscous_exact"
    traj.metadata.update({
        "flux_sign": 1,
        "stage1_base_state": ("viscous formulae" if viscous_base else
                              "ubar=S[u0]" if form == "conservation" else "Ybar=Y0, ubar=dY0/dx"),
        "smoothing_eta": config.eta if (form == "conservation" and not viscous_base) else "none",
        "cutoff_advance": adv,
        "n_stages": n_stages,
    })

    mesh0 = stage_mesh(config, 0.0)
    xg = mesh0.gauss_x
    if form == "conservation":
        dofs = DofSystem(mesh0, 1, dirichlet_mask(mesh0))
        u0 = np.asarray(prob.u0(xg), dtype=float)
        if not viscous_base:
            ubar = smooth(LineSamples(xg, u0, (float(prob.ul(0.0)), None)), config.eta, mesh0.x_nodes).at_gauss()
    else:
        dofs = DofSystem(mesh0, 2, dirichlet_mask_hj(mesh0, config.lateral))
        Y0 = np.asarray(prob.Y0(xg), dtype=float)
        ybar = Y0.copy()
        ubar = np.asarray(prob.u0(xg), dtype=float)

    for s in range(1, n_stages + 1):
        if s > config.max_stages:
            raise MarchError(f"{n_stages} stages needed but max_stages={config.max_stages}", traj, s)
        t_i = (s - 1) * adv
        mesh = mesh0 if s == 1 else stage_mesh(config, t_i)
        try:
            if form == "conservation":
                if viscous_base:
                    ubar = _viscous_base(prob, config, mesh)[1]
                base = BurgersBase(ubar, config.beta_u)
                data = BurgersProblemData(u0, prob.ul)
            else:
                if viscous_base:
                    ybar, ubar = _viscous_base(prob, config, mesh)
                base = HJBase(ybar, ubar, config.beta_y, config.beta_u)
                data = HJProblemData(Y0, prob.Yl, nu=config.nu)
            res = run_stage(config, form, data, base, mesh, t_i, s, dofs)
            ybar_line = None
            if viscous_base and form != "conservation":
                ybar_line = exact.viscous_Y(prob, config.nu_base, xg, res.t_f)
            cut = truncate_and_cutoff(res, form, prob.Yl, ybar_line)
            res.cutoff = cut
            if form == "conservation":
                if viscous_base:
                    u0 = np.array(cut.u)
                else:
                    u0, ubar = next_stage_inputs_burgers(cut, float(prob.ul(res.t_f)), config.eta, mesh.x_nodes)
            else:
                Y0, ybar_next, ubar_next = next_stage_inputs_hj(cut)
                if not viscous_base:
                    ybar, ubar = ybar_next, ubar_next
        except StageFailure as exc:
            raise MarchError(str(exc), traj, s) from exc
        except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            raise MarchError(f"stage {s} failed: {exc}", traj, s) from exc
        del res._problem
        if traj.stages and not keep_fields:
            traj.stages[-1].drop_fields()
        traj.stages.append(res)
        log.debug("stage %d/%d t_f=%.6g newton=%d", s, n_stages, res.t_f, res.newton.iterations)
        if callback is not None:
            callback(res)
    return traj
