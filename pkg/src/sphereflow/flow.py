"""Time integration: linear parabolic solves, bundle mean curvature flow,
restart/uniqueness checks and the backward ladder that builds ancient flows.

Sections evolve over a fixed minimal base in the graphical gauge: each step
evaluates the mean curvature of the graphed surface, pulls the velocity back
through the derivative of the base-point logarithm (the fiber projection),
and updates semi-implicitly: implicit in the assembled linear operator of
the base, explicit in the remainder.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

from . import ambient as amb
from . import kernels
from .jacobi import JacobiOperator, assemble_jacobi, stiffness_matrix
from .surface import (BlowUpSignal, graph_positions, section_to_vector,
                      vertex_areas)

SCHEMES = ("semi_implicit", "explicit")
EXPLICIT_STABILITY_FACTOR = 0.25


class FlowError(RuntimeError):
    pass


@dataclass
class FlowConfig:
    time_step: float = 1e-3
    scheme: str = "semi_implicit"
    horizon: float = 1.0
    blow_up_threshold: float = 0.5      # sup|H| * mesh edge length
    gauge_margin: float = 0.2
    record_every: int = 1
    area_tolerance: float = 1e-8        # per-step area increase allowance

    def __post_init__(self):
        if self.time_step <= 0:
            raise ValueError("time_step must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.blow_up_threshold <= 0 or self.gauge_margin <= 0:
            raise ValueError("thresholds must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray                   # (T,) strictly increasing
    sections: np.ndarray                # (T, V, k)
    diagnostics: dict                   # arrays aligned with times
    termination: str = "horizon"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trajectory times must be strictly increasing")

    def diagnostic(self, name):
        return np.asarray(self.diagnostics[name])

    def state_at(self, t, tol=1e-9):
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > tol:
            raise KeyError(f"time {t} not on the recorded grid")
        return self.sections[idx]


@dataclass
class LinearParabolicProblem:
    """Discretized  M du/dt = -W(t) u + M F(t)  on section coefficients.

    `operator(t)` returns the weak-form sparse matrix W(t) (stiffness-like:
    for L = Laplacian, W is the positive cotan stiffness).  `ellipticity`
    and `coefficient_bound` are the symbol constants of the underlying
    operator family; `verify_ellipticity` spot-checks them against the
    reference stiffness on random sections.
    """

    mass_diag: np.ndarray
    operator: Callable[[float], sp.spmatrix]
    source: Optional[Callable[[float], np.ndarray]] = None
    ellipticity: float = 1.0
    coefficient_bound: float = 1.0
    time_independent: bool = True
    reference_stiffness: Optional[sp.spmatrix] = None
    shape: tuple = ()                   # (V, k) of section arrays

    def verify_ellipticity(self, n_probes=6, seed=0, rtol=1e-8):
        if self.reference_stiffness is None:
            return True
        rng = np.random.default_rng(seed)
        w = self.operator(0.0)
        c = self.reference_stiffness
        m = self.mass_diag
        for _ in range(n_probes):
            u = rng.standard_normal(m.shape[0])
            dirichlet = float(u @ (c @ u))
            lower = (float(u @ (w @ u))
                     + self.coefficient_bound * float(u @ (m * u)))
            if lower < self.ellipticity * dirichlet * (1.0 - rtol) - rtol:
                raise FlowError(
                    "ellipticity check failed on a sampled direction")
        return True


def laplacian_problem(base, frame, shift=0.0, source=None):
    """Problem for  du/dt = Laplacian u + shift u + F  over the base."""
    k = frame.rank
    nv = base.n_vertices
    va = vertex_areas(base)
    c_scalar = stiffness_matrix(base.positions, base.mesh.faces, nv)
    c_block = sp.kron(c_scalar, sp.identity(k, format="csr"), format="csr")
    mass = np.repeat(va, k)
    w = (c_block - shift * sp.diags(mass)).tocsr()
    return LinearParabolicProblem(
        mass_diag=mass, operator=lambda t: w, source=source,
        ellipticity=1.0, coefficient_bound=abs(shift) + 1.0,
        time_independent=True, reference_stiffness=c_block, shape=(nv, k))


def jacobi_problem(op: JacobiOperator):
    """Problem for the linearized flow  du/dt = (Jacobi operator) u."""
    nv = op.base.n_vertices
    k = op.n_components
    c_scalar = stiffness_matrix(op.base.positions, op.base.mesh.faces, nv)
    c_block = sp.kron(c_scalar, sp.identity(k, format="csr"), format="csr")
    return LinearParabolicProblem(
        mass_diag=op.mass_diag(), operator=lambda t: op.matrix,
        ellipticity=1.0,
        coefficient_bound=float(np.abs(op.matrix.diagonal()).max()
                                / op.mass_diag().min()),
        time_independent=True, reference_stiffness=c_block,
        shape=(nv, k))


def _check_explicit_stability(h, mesh_edge):
    limit = EXPLICIT_STABILITY_FACTOR * mesh_edge ** 2
    if h > limit:
        raise FlowError(
            f"explicit step {h:.3e} exceeds stability limit {limit:.3e} "
            f"(0.25 h_mesh^2)")


def solve_cauchy(problem, u0, horizon, time_step, theta=1.0,
                 record_every=1, residual_tol=1e-8):
    """Theta-scheme for the linear Cauchy problem; theta=1 (semi-implicit
    backward Euler) by default, theta=0 explicit."""
    problem.verify_ellipticity()
    u = np.asarray(u0, dtype=np.float64).ravel().copy()
    shape = problem.shape if problem.shape else (u.size, 1)
    h = time_step
    n_steps = int(round(horizon / h))
    if abs(n_steps * h - horizon) > 1e-9 * max(1.0, horizon):
        raise FlowError("horizon must be a multiple of the time step")
    m = sp.diags(problem.mass_diag)
    if theta < 0.5:
        # explicit-dominant scheme: Gershgorin surrogate for the CFL limit
        w0 = problem.operator(0.0)
        row_sums = np.abs(w0).sum(axis=1).A1 / problem.mass_diag
        lam_max = float(row_sums.max())
        if h * lam_max > 2.0:
            raise FlowError(
                f"explicit step {h:.3e} violates the stability limit "
                f"{2.0 / lam_max:.3e}")
    times = [0.0]
    states = [u.copy()]
    solver = None
    w = None
    max_residual = 0.0
    for step in range(n_steps):
        t = step * h
        if w is None or not problem.time_independent:
            w = problem.operator(t + theta * h).tocsc()
            if theta > 0.0:
                solver = spla.splu((m + theta * h * w).tocsc())
        rhs = problem.mass_diag * u - (1.0 - theta) * h * (w @ u)
        if problem.source is not None:
            f = (theta * np.asarray(problem.source(t + h), dtype=np.float64)
                 + (1.0 - theta) * np.asarray(problem.source(t),
                                              dtype=np.float64))
            rhs = rhs + h * problem.mass_diag * f.ravel()
        if theta > 0.0:
            try:
                u = solver.solve(rhs)
            except Exception as exc:
                raise FlowError(f"linear solve failed at step {step}") from exc
            res = np.linalg.norm((m + theta * h * w) @ u - rhs)
            max_residual = max(max_residual,
                               res / max(np.linalg.norm(rhs), 1e-300))
            if max_residual > residual_tol:
                raise FlowError(
                    f"solver residual {max_residual:.3e} at step {step}")
        else:
            u = rhs / problem.mass_diag
        if (step + 1) % record_every == 0 or step == n_steps - 1:
            times.append((step + 1) * h)
            states.append(u.copy())
    states = np.array(states).reshape(len(times), *shape)
    mass = problem.mass_diag.reshape(shape)
    l2 = np.sqrt(np.einsum("tvk,vk,tvk->t", states, mass, states))
    comp_norm = np.linalg.norm(states, axis=2)
    diag = {
        "area": np.full(len(times), np.nan),
        "f_value": np.full(len(times), np.nan),
        "sup_h": np.full(len(times), np.nan),
        "l2_norm": l2,
        "sup_norm": comp_norm.max(axis=1),
    }
    return Trajectory(times=np.array(times), sections=states,
                      diagnostics=diag,
                      meta={"max_residual": max_residual, "theta": theta})


# --------------------------------------------------------------- bundle MCF

class _FlowWorkspace:
    """Frozen per-run data: base geometry, frame, factorized implicit part."""

    def __init__(self, base, frame, config, operator=None):
        self.base = base
        self.frame = frame
        self.config = config
        self.model = base.ambient
        self.faces = base.mesh.faces
        self.nv = base.n_vertices
        self.k = frame.rank
        if operator is None:
            operator = assemble_jacobi(base, frame)
        self.operator = operator
        self.mass = operator.mass_diag()
        self.base_va = vertex_areas(base)
        h = config.time_step
        if config.scheme == "semi_implicit":
            lhs = (sp.diags(self.mass) + h * operator.matrix).tocsc()
            self.solver = spla.splu(lhs)
        else:
            _check_explicit_stability(h, base.mean_edge_length())
            self.solver = None

    def velocity(self, section):
        """(2 H)^sharp in frame coefficients, plus diagnostics.

        Returns (coeffs (V,k), sup_h, graph positions, per-vertex |H|,
        graph vertex areas).
        """
        base_pos = self.base.positions
        pos = graph_positions(self.base, self.frame, section,
                              margin=self.config.gauge_margin)
        acc, va = kernels.cotan_mc_terms(pos, self.faces, self.nv, mixed=True)
        if np.any(va <= 0.0):
            raise FlowError("degenerate vertex star on the graphed surface")
        hvec = -acc / (2.0 * va[:, None])
        if self.model.kind == amb.ROUND_SPHERE:
            hvec = hvec + pos
            hvec = hvec - np.einsum("vd,vd->v", hvec, pos)[:, None] * pos
        hnorm = np.linalg.norm(hvec, axis=1)
        w = 2.0 * hvec
        if self.model.kind == amb.ROUND_SPHERE:
            u_amb = section_to_vector(self.frame, section)
            r = np.linalg.norm(u_amb, axis=1)
            safe = r > 1e-12
            uhat = np.where(safe[:, None], u_amb / np.maximum(r, 1e-300)[:, None],
                            0.0)
            gamma = (-np.sin(r)[:, None] * base_pos
                     + np.cos(r)[:, None] * uhat)
            w_rad = np.einsum("vd,vd->v", w, gamma)
            w_perp = w - w_rad[:, None] * gamma
            stretch = np.where(safe, r / np.maximum(np.sin(r), 1e-300), 1.0)
            pulled = w_rad[:, None] * uhat + stretch[:, None] * w_perp
            pulled = np.where(safe[:, None], pulled, w)
        else:
            pulled = w
        coeffs = np.einsum("vd,vkd->vk", pulled, self.frame.vectors)
        return coeffs, float(hnorm.max()), pos, hnorm, va

    def step(self, section, velocity_coeffs):
        h = self.config.time_step
        u = section.ravel()
        if self.config.scheme == "explicit":
            return (u + h * velocity_coeffs.ravel()).reshape(section.shape)
        rhs = (self.mass * u
               + h * (self.mass * velocity_coeffs.ravel()
                      + self.operator.matrix @ u))
        return self.solver.solve(rhs).reshape(section.shape)


def step_bundle_mcf(base, frame, section, time_step, config=None,
                    operator=None):
    """One bundle-MCF step of the section; convenience wrapper."""
    if config is None:
        config = FlowConfig(time_step=time_step)
    elif config.time_step != time_step:
        raise ValueError("time_step disagrees with config")
    ws = _FlowWorkspace(base, frame, config, operator)
    coeffs, _, _, _, _ = ws.velocity(section)
    return ws.step(section, coeffs)


def run_mcf(base, frame, u0, config, operator=None, t0=0.0,
            workspace=None, stop_sup=None):
    """Iterate bundle MCF until the horizon, gauge loss or blow-up.

    Records every `record_every` steps.  `stop_sup` optionally terminates
    once the section sup norm reaches a cap (used by the ancient ladder).
    """
    ws = workspace or _FlowWorkspace(base, frame, config, operator)
    h = config.time_step
    n_steps = int(round((config.horizon - t0) / h))
    u = np.asarray(u0, dtype=np.float64).copy()
    times, states = [], []
    diag = {name: [] for name in ("area", "f_value", "sup_h", "l2_norm",
                                  "sup_norm")}
    termination = "horizon"

    def record(t, section, sup_h, pos, hnorm, va):
        times.append(t)
        states.append(section.copy())
        if pos is None:
            a = np.nan
            f = np.nan
        else:
            fa = kernels.spherical_face_areas(pos, ws.faces) \
                if ws.model.is_spherical else \
                kernels.face_corner_cots(pos, ws.faces)[1]
            a = float(fa.sum())
            f = a + float(np.sum(va * hnorm ** 2)) - 4.0 * np.pi
        diag["area"].append(a)
        diag["f_value"].append(f)
        diag["sup_h"].append(sup_h)
        diag["l2_norm"].append(
            float(np.sqrt(np.sum(ws.base_va[:, None] * section ** 2))))
        diag["sup_norm"].append(
            float(np.max(np.linalg.norm(section, axis=1))))

    step = 0
    while step < n_steps:
        try:
            coeffs, sup_h, pos, hnorm, va = ws.velocity(u)
        except BlowUpSignal:
            termination = "gauge_loss"
            break
        if step % config.record_every == 0:
            record(t0 + step * h, u, sup_h, pos, hnorm, va)
        edge = float(np.mean(np.linalg.norm(
            pos[ws.base.mesh.edges[:, 0]] - pos[ws.base.mesh.edges[:, 1]],
            axis=1)))
        if sup_h * edge > config.blow_up_threshold:
            termination = "blow_up"
            break
        u = ws.step(u, coeffs)
        step += 1
        sup = float(np.max(np.linalg.norm(u, axis=1)))
        if ws.model.is_spherical and sup >= np.pi / 2 - config.gauge_margin:
            termination = "gauge_loss"
            break
        if stop_sup is not None and sup >= stop_sup:
            termination = "sup_cap"
            break
    # record the final state
    try:
        coeffs, sup_h, pos, hnorm, va = ws.velocity(u)
    except BlowUpSignal:
        pos, hnorm, va, sup_h = None, None, None, np.nan
    if not times or times[-1] < t0 + step * h:
        record(t0 + step * h, u, sup_h, pos, hnorm, va)
    return Trajectory(
        times=np.array(times),
        sections=np.array(states),
        diagnostics={k2: np.array(v) for k2, v in diag.items()},
        termination=termination,
        meta={"scheme": config.scheme, "time_step": h, "t0": t0})


# ------------------------------------------------------------ ancient flows

@dataclass
class LadderConfig:
    delta_a: float = 1.0
    start_sup: float = 0.05             # section sup norm at the anchor time
    sup_cap: float = 0.5                # forward ceiling on sup |U|
    tolerance: float = 1e-4             # sup difference between rungs
    max_rungs: int = 6
    eigen_residual_tol: float = 1e-6
    twin_amplitude: float = 1e-5        # peak sup norm of the linear twin
    growth_window: float = 2.0
    remainder_window: float = 1.2


@dataclass
class ConvergenceReport:
    converged: bool
    ladder_starts: list
    ladder_differences: list
    b0: float
    a0: float
    lambda0: float
    growth_exponent: float
    growth_exponent_stderr: float
    remainder_exponent: float
    remainder_exponent_stderr: float
    remainder_vs_eigen_exponent: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def fit_decay_exponent(times, values, window=None, min_samples=10):
    """Least-squares slope of log(values) against time, with stderr."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if window is not None:
        mask = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
        times, values = times[mask], values[mask]
    if times.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the window, "
                         f"got {times.size}")
    if np.any(values <= 0.0):
        raise ValueError("norms must be positive to fit an exponent")
    y = np.log(values)
    a = np.vstack([times, np.ones_like(times)]).T
    coef, res, _, _ = np.linalg.lstsq(a, y, rcond=None)
    slope = coef[0]
    n = times.size
    if n > 2 and res.size:
        var = res[0] / (n - 2)
        sxx = np.sum((times - times.mean()) ** 2)
        stderr = float(np.sqrt(var / sxx))
    else:
        stderr = 0.0
    return float(slope), stderr


def fit_trajectory_exponent(trajectory, selector="sup_norm", window=None,
                            min_samples=10):
    """fit_decay_exponent over a named trajectory diagnostic."""
    return fit_decay_exponent(trajectory.times,
                              trajectory.diagnostic(selector),
                              window=window, min_samples=min_samples)


def _snap(value, h):
    return round(value / h) * h


def construct_ancient(base, frame, eigensection, config, ladder=None,
                      operator=None):
    """Backward-ladder construction of an ancient flow out of the base.

    Anchors U(a_k) on a tiny-amplitude linear twin trajectory (the discrete
    realization of the exponentially growing eigenmode), forward-solves each
    rung to a shared ceiling b0 on a common time grid, and declares
    convergence when consecutive rungs agree in sup norm.  The remainder
    subtracts the scaled twin, isolating the nonlinear part of the flow.
    """
    ladder = ladder or LadderConfig()
    if operator is None:
        operator = assemble_jacobi(base, frame)
    v = np.asarray(eigensection, dtype=np.float64)
    lam0, residual = _rayleigh_residual(operator, v)
    if lam0 >= 0.0:
        raise ValueError(f"first eigenvalue must be negative, got {lam0:.4f}")
    if residual > ladder.eigen_residual_tol:
        raise ValueError(
            f"input is not an eigensection: residual {residual:.3e} above "
            f"{ladder.eigen_residual_tol:.1e}")
    v_hat = v / np.max(np.linalg.norm(v, axis=1))

    h = config.time_step
    delta_a = _snap(ladder.delta_a, h)
    a0 = _snap(np.log(ladder.start_sup) / (-lam0), h)
    a_min = a0 - ladder.max_rungs * delta_a
    t_top = _snap(a0 + 1.6 * np.log(ladder.sup_cap / ladder.start_sup)
                  / (-lam0), h)
    rec = config.record_every
    if int(round(delta_a / h)) % rec:
        raise ValueError("record_every must divide delta_a / time_step")

    ws = _FlowWorkspace(base, frame, config, operator)

    # linear twin: same stepper at negligible amplitude
    eps0 = ladder.twin_amplitude * np.exp(lam0 * (t_top - a_min))
    twin_cfg = FlowConfig(time_step=h, scheme=config.scheme, horizon=t_top,
                          blow_up_threshold=config.blow_up_threshold,
                          gauge_margin=config.gauge_margin, record_every=rec)
    twin = run_mcf(base, frame, eps0 * v_hat, twin_cfg, operator=operator,
                   t0=a_min, workspace=ws)
    scale = ladder.start_sup / np.max(np.linalg.norm(twin.state_at(a0),
                                                     axis=1))

    def anchor(a):
        return scale * twin.state_at(a)

    # rung 0 discovers the ceiling b0
    rung_cfg = FlowConfig(time_step=h, scheme=config.scheme, horizon=t_top,
                          blow_up_threshold=config.blow_up_threshold,
                          gauge_margin=config.gauge_margin, record_every=rec)
    current = run_mcf(base, frame, anchor(a0), rung_cfg, operator=operator,
                      t0=a0, workspace=ws, stop_sup=ladder.sup_cap)
    # ceiling on the shared record grid so every rung and the twin align
    m_steps = int(round((current.times[-1] - a0) / h))
    m_steps = (m_steps // rec) * rec
    if m_steps <= 0:
        raise FlowError("sup cap reached before the first record; "
                        "lower start_sup or record_every")
    b0 = a0 + m_steps * h

    starts = [a0]
    diffs = []
    converged = False
    for kk in range(1, ladder.max_rungs + 1):
        a_k = a0 - kk * delta_a
        cfg_k = FlowConfig(time_step=h, scheme=config.scheme, horizon=b0,
                           blow_up_threshold=config.blow_up_threshold,
                           gauge_margin=config.gauge_margin, record_every=rec)
        rung = run_mcf(base, frame, anchor(a_k), cfg_k, operator=operator,
                       t0=a_k, workspace=ws)
        starts.append(a_k)
        diff = _aligned_sup_difference(current, rung)
        diffs.append(diff)
        current = rung
        if diff < ladder.tolerance:
            converged = True
            break

    # fitted asymptotics on the final trajectory
    t = current.times
    sup = current.diagnostic("sup_norm")
    a_last = starts[-1]
    gw = (a_last, min(a_last + ladder.growth_window, b0))
    growth, growth_err = fit_decay_exponent(t, sup, window=gw)

    base_mass = ws.base_va
    twin_states = np.array([twin.state_at(tt) for tt in t])
    z = current.sections - scale * twin_states
    z_norm = np.sqrt(np.einsum("tvk,v,tvk->t", z, base_mass, z))
    rw = (max(b0 - ladder.remainder_window, a_last), b0)
    rem, rem_err = fit_decay_exponent(t, np.maximum(z_norm, 1e-300), window=rw)

    z_eig = (current.sections
             - ladder.start_sup
             * np.exp(-lam0 * (t - a0))[:, None, None] * v_hat[None])
    ze_norm = np.sqrt(np.einsum("tvk,v,tvk->t", z_eig, base_mass, z_eig))
    rem_eig, _ = fit_decay_exponent(t, np.maximum(ze_norm, 1e-300), window=rw)

    report = ConvergenceReport(
        converged=converged, ladder_starts=starts, ladder_differences=diffs,
        b0=float(b0), a0=float(a0), lambda0=float(lam0),
        growth_exponent=growth, growth_exponent_stderr=growth_err,
        remainder_exponent=rem, remainder_exponent_stderr=rem_err,
        remainder_vs_eigen_exponent=rem_eig,
        meta={"eigen_residual": float(residual),
              "twin_scale": float(scale),
              "remainder_window": list(rw),
              "growth_window": list(gw)})
    if not converged:
        report.meta["warning"] = ("ladder budget exhausted; achieved "
                                  f"differences {diffs}")
    current.meta["remainder_l2"] = z_norm
    current.meta["remainder_vs_eigen_l2"] = ze_norm
    return current, report


def _rayleigh_residual(op, section):
    u = section.ravel()
    mu = op.mass_diag() * u
    norm_sq = float(u @ mu)
    lam = float(u @ (op.matrix @ u)) / norm_sq
    r = op.matrix @ u - lam * mu
    return lam, float(np.linalg.norm(r) / np.linalg.norm(mu))


def _aligned_sup_difference(traj_a, traj_b):
    """Sup over shared recorded times of the sup-norm section difference."""
    ta = {round(float(t), 9): i for i, t in enumerate(traj_a.times)}
    best = 0.0
    count = 0
    for j, t in enumerate(traj_b.times):
        i = ta.get(round(float(t), 9))
        if i is None:
            continue
        count += 1
        d = traj_a.sections[i] - traj_b.sections[j]
        best = max(best, float(np.max(np.linalg.norm(d, axis=1))))
    if count == 0:
        raise FlowError("trajectories share no recorded times")
    return best


def check_extension_uniqueness(base, frame, u0, config, t_split,
                               operator=None):
    """Restart-consistency surrogate for uniqueness of extensions.

    Reference run over [0, T]; verification run reaches t_split with half
    the step then continues with the reference step.  The sup difference on
    the overlap is the accumulated scheme error, O(h^p).
    """
    h = config.time_step
    t_split = _snap(t_split, h * config.record_every)
    if not 0.0 < t_split < config.horizon:
        raise ValueError("t_split must lie inside (0, horizon)")
    if operator is None:
        operator = assemble_jacobi(base, frame)
    reference = run_mcf(base, frame, u0, config, operator=operator)

    fine_cfg = FlowConfig(time_step=h / 2, scheme=config.scheme,
                          horizon=t_split,
                          blow_up_threshold=config.blow_up_threshold,
                          gauge_margin=config.gauge_margin,
                          record_every=2 * config.record_every)
    fine = run_mcf(base, frame, u0, fine_cfg, operator=operator)
    restart_state = fine.state_at(t_split)

    tail_cfg = FlowConfig(time_step=h, scheme=config.scheme,
                          horizon=config.horizon,
                          blow_up_threshold=config.blow_up_threshold,
                          gauge_margin=config.gauge_margin,
                          record_every=config.record_every)
    tail = run_mcf(base, frame, restart_state, tail_cfg, operator=operator,
                   t0=t_split)
    diff = _aligned_sup_difference(reference, tail)
    return {"sup_difference": diff, "t_split": t_split,
            "time_step": h, "horizon": config.horizon}


# ------------------------------------------------------------------ exports

def export_trajectory_csv(path, trajectory):
    cols = ("area", "f_value", "sup_h", "l2_norm", "sup_norm")
    header = "t,area,F,sup_H,l2_norm,sup_norm"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, t in enumerate(trajectory.times):
            row = [f"{t:.17g}"]
            for c in cols:
                row.append(f"{trajectory.diagnostics[c][i]:.17g}")
            fh.write(",".join(row) + "\n")


def export_sections_text(path, trajectory):
    """Sidecar snapshot file: per time block, one line per vertex."""
    with open(path, "w") as fh:
        for i, t in enumerate(trajectory.times):
            fh.write(f"# t={t:.17g}\n")
            for vid, row in enumerate(trajectory.sections[i]):
                vals = " ".join(f"{x:.17g}" for x in row)
                fh.write(f"{vid} {vals}\n")
