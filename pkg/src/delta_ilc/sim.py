"""Fixed-step closed-loop simulation and the outer learning loop."""
from dataclasses import dataclass, field, asdict
import csv
import json
import logging
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import lsq_linear

from . import _core
from .controllers import AFC, AMCILC, PIDILC, IterationMemory, barrier_terms
from .dynamics import mismatch_torque
from .errors import BarrierViolation, ConfigError, GridMismatch, NumericalDivergence
from .fls import FLSConfig, basis
from .modal import connection_point_motion, residual_oscillator_response

log = logging.getLogger(__name__)


@dataclass
class SimConfig:
    iterations: int = 20
    theta_dot_max: float = None     # None: (v_c + max reference rate) * 1.1
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")


def velocity_limit(config, ref, v_c):
    if config.theta_dot_max is not None:
        return float(config.theta_dot_max)
    return 1.1 * (v_c + ref.max_rate)


@dataclass
class IterationResult:
    index: int
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    theta_ddot: np.ndarray
    u: np.ndarray
    e: np.ndarray
    e_dot: np.ndarray
    eta: np.ndarray
    memory: IterationMemory

    @property
    def max_error(self):
        return np.max(np.abs(self.e), axis=0)

    @property
    def rate_error_norm(self):
        """L2 norm of the rate error over the run, ``sqrt(sum(e_dot^2) dt)``."""
        dt = self.t[1] - self.t[0]
        return np.sqrt(np.sum(self.e_dot ** 2, axis=0) * dt)

    @property
    def max_eta(self):
        return np.max(np.abs(self.eta), axis=0)

    @property
    def max_rate(self):
        return np.max(np.abs(self.theta_dot), axis=0)


def simulate_iteration(plant, controller, ref, memory_prev, adapt=True, noise_std=0.0,
                       rng=None, index=0):
    """One run over the reference grid with RK4 and zero-order-hold input."""
    n = len(ref)
    if memory_prev.samples != n:
        raise GridMismatch(f"memory has {memory_prev.samples} samples, grid has {n}")
    dt = ref.dt
    pv = plant.packed
    theta = np.empty((n, 3))
    theta_dot = np.empty((n, 3))
    u = np.empty((n, 3))
    eta = np.empty((n, 3))
    th = ref.theta[0].copy()
    thd = ref.theta_dot[0].copy()
    noise = (rng.normal(0.0, noise_std, size=(n, 6)) if noise_std > 0 else None)
    controller.start(memory_prev, adapt)
    for k in range(n):
        theta[k] = th
        theta_dot[k] = thd
        mth, mthd = (th, thd) if noise is None else (th + noise[k, :3], thd + noise[k, 3:])
        r = (ref.theta[k], ref.theta_dot[k], ref.theta_ddot[k])
        try:
            u[k], eta[k] = controller.step(k, mth, mthd, r, dt)
        except BarrierViolation as exc:
            exc.sample = k
            raise
        if k + 1 < n:
            th, thd, ok = _core.rk4_step(th, thd, u[k], dt, pv)
            if not ok or not (np.all(np.isfinite(th)) and np.all(np.isfinite(thd))):
                raise NumericalDivergence(f"state diverged at t={ref.t[k + 1]:.4f}s")
    acc = np.empty((n, 3))
    for k in range(n):
        acc[k] = _core.accel(theta[k], theta_dot[k], u[k], pv)[0]
    return IterationResult(index, ref.t, theta, theta_dot, acc, u, theta - ref.theta,
                           theta_dot - ref.theta_dot, eta, controller.finish())


@dataclass
class SimResult:
    controller: str
    trajectory: str
    iterations: list = field(default_factory=list)
    aborted: str = None
    theta_dot_max: float = None

    def metrics(self):
        """Rows ``(iteration, max|e_1..3|, ||e_dot_1..3||)``."""
        return [(it.index, *it.max_error, *it.rate_error_norm) for it in self.iterations]

    def save(self, directory, manifest=None):
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "e1_max", "e2_max", "e3_max",
                        "edot1_norm", "edot2_norm", "edot3_norm"])
            for row in self.metrics():
                w.writerow([row[0]] + [f"{v:.10e}" for v in row[1:]])
        for it in self.iterations:
            path = out / f"iteration_{it.index:03d}.csv"
            cols = [it.t[:, None], it.theta, it.theta_dot, it.u, it.e, it.e_dot, it.eta]
            header = ["t"] + [f"{name}{j}" for name in
                              ("theta", "theta_dot", "u", "e", "e_dot", "eta") for j in (1, 2, 3)]
            np.savetxt(path, np.hstack(cols), delimiter=",", header=",".join(header),
                       comments="", fmt="%.10e")
        if manifest is not None:
            manifest = dict(manifest, aborted=self.aborted)
            (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def make_controller(name, nominal, gains=None, fls_config=None):
    if name == "amcilc":
        return AMCILC(nominal, gains, fls_config)
    if name == "afc":
        return AFC(nominal, gains, fls_config)
    if name == "pidilc":
        return PIDILC()
    raise ConfigError(f"unknown controller {name!r}")


def run_ilc(plant, controller, ref, config=None):
    """Iteration 0 runs from zero memory without learning; 1..K learn."""
    config = config or SimConfig()
    rng = np.random.default_rng(config.seed)
    v_c = getattr(getattr(controller, "gains", None), "v_c", None)
    limit = velocity_limit(config, ref, v_c if v_c is not None else 0.1)
    result = SimResult(controller.name, ref.name, theta_dot_max=limit)
    rules = getattr(getattr(controller, "fls", None), "rule_count", 9)
    memory = IterationMemory.zeros(len(ref), rules)
    runs = config.iterations + 1
    if not controller.learns:
        runs = 1
    for k in range(runs):
        try:
            it = simulate_iteration(plant, controller, ref, memory, adapt=(k > 0) or
                                    not controller.learns, noise_std=config.noise_std,
                                    rng=rng, index=k)
        except (BarrierViolation, NumericalDivergence) as exc:
            result.aborted = f"iteration {k}: {exc}"
            log.error("run aborted at %s", result.aborted)
            break
        result.iterations.append(it)
        memory = it.memory
    return result


@dataclass
class BCEFTrace:
    t: np.ndarray
    v_eta: np.ndarray        # (K, N)
    v_vartheta: np.ndarray
    v_eps: np.ndarray

    @property
    def energy(self):
        return self.v_eta + self.v_vartheta + self.v_eps

    @property
    def final(self):
        return self.energy[:, -1]

    def is_nonincreasing(self, rel_tol=1e-3):
        e = self.final
        return bool(np.all(np.diff(e) <= rel_tol * e[0]))


def ideal_weights(true_plant, nominal, ref, fls_config=None, bound=50.0):
    """Projection of the true mismatch onto the basis along the reference.

    The fit is constrained to the saturation box: along a slow reference the
    basis columns are nearly collinear and the free fit blows up. Returns
    ``(vartheta_star, eps_bar)`` with ``eps_bar`` the worst residual per joint.
    """
    fls_config = fls_config or FLSConfig()
    target = np.array([mismatch_torque(true_plant, nominal, a, b, c)
                       for a, b, c in zip(ref.theta, ref.theta_dot, ref.theta_ddot)])
    phi = basis(fls_config, np.hstack([ref.theta, ref.theta_dot]))
    w = np.column_stack([lsq_linear(phi, target[:, j], bounds=(-bound, bound)).x
                         for j in range(target.shape[1])])
    return w, np.max(np.abs(target - phi @ w), axis=0)


def bcef_monitor(result, gains, vartheta_star, eps_bar):
    """Barrier composite energy per iteration on the shared grid."""
    its = result.iterations
    t = its[0].t
    v_eta, v_th, v_ep = [], [], []
    for it in its:
        vb, _ = barrier_terms(it.eta, gains.v_c)
        v_eta.append(vb.sum(axis=1))
        d = vartheta_star[None] - it.memory.vartheta_hat
        v_th.append(cumulative_trapezoid(0.5 * np.sum(d ** 2, axis=(1, 2)) / gains.gamma, t, initial=0))
        de = eps_bar[None] - it.memory.eps_hat
        v_ep.append(cumulative_trapezoid(0.5 * np.sum(de ** 2, axis=1) / gains.nu, t, initial=0))
    return BCEFTrace(t, np.array(v_eta), np.array(v_th), np.array(v_ep))


@dataclass
class ResidualReport:
    modes: np.ndarray            # per-mode residual amplitude
    connection_points: np.ndarray  # per lower-arm tip, peak |z| after motion end (m)
    t_end: float
    shaped: bool


def residual_vibration_report(joint_accel, dt, modal_model, shaped=False, modes=3, t_end=None):
    """Residual vibration left after the motion, per mode and per arm tip."""
    response = residual_oscillator_response(modal_model, joint_accel, dt, t_end, modes)
    z = connection_point_motion(modal_model.truncated(modes), response)
    after = response.t >= response.t_end - 1e-12
    return ResidualReport(response.residual, np.max(np.abs(z[after]), axis=0),
                          response.t_end, shaped)
