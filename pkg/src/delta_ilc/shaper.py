"""Three-impulse optimal input shaper: design, residual vibration, grid search."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateShaper, EmptyWeighting, ImpulseAliasing


@dataclass(frozen=True)
class ShaperSpec:
    amplitudes: tuple
    times: tuple
    f_n: float
    zeta_d: float
    k_t: float

    @property
    def duration(self):
        return self.times[-1]

    def to_dict(self):
        return {"f_n": self.f_n, "zeta_d": self.zeta_d, "k_t": self.k_t,
                "amplitudes": list(self.amplitudes), "times": list(self.times)}


UNIT_IMPULSE = ShaperSpec((1.0, 0.0, 0.0), (0.0, 0.0, 0.0), float("nan"), 0.0, 0.0)


def _coefficients(f_n, zeta_d, k_t):
    """Amplitudes and lag ``T`` (broadcasts over array arguments)."""
    wn = 2 * np.pi * np.asarray(f_n, dtype=float)
    wd = wn * np.sqrt(1 - np.asarray(zeta_d, dtype=float) ** 2)
    lag = np.asarray(k_t, dtype=float) * (2 * np.pi / wd) / 2
    decay = np.exp(-zeta_d * wn * lag)
    c = np.cos(wd * lag)
    xi = 1 - 2 * decay * c + decay ** 2
    return 1 / xi, -2 * decay * c / xi, decay ** 2 / xi, lag


def make_shaper(f_n, zeta_d, k_t, allow_degenerate=False):
    if not f_n > 0:
        raise ValueError("f_n must be positive")
    if not 0 <= zeta_d < 1:
        raise ValueError("zeta_d must lie in [0, 1)")
    if not 0 <= k_t <= 1:
        raise ValueError("k_t must lie in [0, 1]")
    if k_t == 0:
        if allow_degenerate:
            return ShaperSpec((1.0, 0.0, 0.0), (0.0, 0.0, 0.0), f_n, zeta_d, 0.0)
        raise DegenerateShaper("k_t = 0 collapses all impulses onto t = 0")
    a1, a2, a3, lag = _coefficients(f_n, zeta_d, k_t)
    return ShaperSpec((float(a1), float(a2), float(a3)), (0.0, float(lag), 2 * float(lag)),
                      float(f_n), float(zeta_d), float(k_t))


def _residual(amps, times, omega_n, zeta):
    omega_n = np.asarray(omega_n, dtype=float)
    wd = omega_n * np.sqrt(1 - zeta ** 2)
    c = s = 0.0
    for a, t in zip(amps, times):
        g = a * np.exp(zeta * omega_n * t)
        c = c + g * np.cos(wd * t)
        s = s + g * np.sin(wd * t)
    return np.exp(-zeta * omega_n * times[-1]) * np.sqrt(c * c + s * s)


def residual_percentage(shaper, omega_n, zeta):
    """Residual vibration ratio ``V`` of an impulse sequence at ``omega_n`` (rad/s)."""
    return _residual(shaper.amplitudes, shaper.times, omega_n, zeta)


def frequency_grid(lo, hi, step):
    n = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(n + 1), 10)


@dataclass
class ShaperObjective:
    J1: float
    J2: float
    J: float
    w1: float
    w2: float


def _weighting_arrays(freq_weighting):
    if freq_weighting is None:
        return None
    fw = np.asarray(freq_weighting, dtype=float).reshape(-1, 2)
    if fw.size == 0 or not np.sum(fw[:, 1]) > 0:
        raise EmptyWeighting("frequency weighting has no mass")
    return fw[:, 0], fw[:, 1] / fw[:, 1].sum()


def objective(f_n_design, k_t, freq_weighting=None, f_range=(16.0, 24.0),
              zeta_design=0.075, w1=0.5, w2=0.5, f_step=0.01):
    """Worst-case (J1) and weighted-average (J2) residual vibration over the band.

    ``freq_weighting`` is a list of ``(frequency Hz, weight)``; ``None`` means
    uniform weighting over the ``f_step`` grid on ``f_range``.
    """
    if abs(w1 + w2 - 1) > 1e-12:
        raise ValueError("w1 + w2 must equal 1")
    band = frequency_grid(f_range[0], f_range[1], f_step)
    shaper = make_shaper(f_n_design, zeta_design, k_t, allow_degenerate=True)
    j1 = float(np.max(residual_percentage(shaper, 2 * np.pi * band, zeta_design)))
    wts = _weighting_arrays(freq_weighting)
    if wts is None:
        j2 = float(np.mean(residual_percentage(shaper, 2 * np.pi * band, zeta_design)))
    else:
        freqs, w = wts
        j2 = float(np.sum(w * residual_percentage(shaper, 2 * np.pi * freqs, zeta_design)))
    return ShaperObjective(j1, j2, w1 * j1 + w2 * j2, w1, w2)


@dataclass
class ShaperDesign:
    f_n: float
    k_t: float
    J: float
    f_grid: np.ndarray
    k_grid: np.ndarray
    J1: np.ndarray        # (len(f_grid), len(k_grid))
    J2: np.ndarray
    J_surface: np.ndarray
    zeta: float = 0.075

    @property
    def shaper(self):
        return make_shaper(self.f_n, self.zeta, self.k_t)

    def surface_rows(self):
        """(f_n, k_t, J1, J2, J) rows in f-major order."""
        f, k = np.meshgrid(self.f_grid, self.k_grid, indexing="ij")
        return np.column_stack([f.ravel(), k.ravel(), self.J1.ravel(),
                                self.J2.ravel(), self.J_surface.ravel()])


ZETA_DESIGN = 0.075


def optimize_shaper(f_range=(16.0, 24.0), k_range=(0.0, 1.0), grid=0.01,
                    zeta_design=ZETA_DESIGN, freq_weighting=None, w1=0.5, w2=0.5):
    """Exhaustive grid search of ``J = w1 J1 + w2 J2`` over ``(f_n, k_t)``.

    Ties resolve to the lowest ``f_n``, then the lowest ``k_t``.
    """
    f_grid = frequency_grid(f_range[0], f_range[1], grid)
    k_grid = frequency_grid(k_range[0], k_range[1], grid)
    band = frequency_grid(f_range[0], f_range[1], grid)
    wts = _weighting_arrays(freq_weighting)
    J1 = np.empty((f_grid.size, k_grid.size))
    J2 = np.empty_like(J1)
    omega_band = 2 * np.pi * band
    for j, k in enumerate(k_grid):
        for i, f in enumerate(f_grid):
            shaper = make_shaper(f, zeta_design, k, allow_degenerate=True)
            v = residual_percentage(shaper, omega_band, zeta_design)
            J1[i, j] = np.max(v)
            if wts is None:
                J2[i, j] = np.mean(v)
            else:
                J2[i, j] = np.sum(wts[1] * residual_percentage(shaper, 2 * np.pi * wts[0], zeta_design))
    J = w1 * J1 + w2 * J2
    i, j = np.unravel_index(np.argmin(J), J.shape)
    return ShaperDesign(float(f_grid[i]), float(k_grid[j]), float(J[i, j]),
                        f_grid, k_grid, J1, J2, J, zeta=zeta_design)


def shape_signal(shaper, signal, dt):
    """Convolve a uniformly sampled signal with the impulse train.

    Impulse times are rounded to the sample grid; the output is longer by the
    shaper duration and holds the final input value past the end.
    """
    x = np.asarray(signal, dtype=float)
    if dt <= 0:
        raise ValueError("dt must be positive")
    lag = shaper.times[1]
    if lag == 0 and shaper.amplitudes[1] == 0 and shaper.amplitudes[2] == 0:
        return x.copy()
    if lag < dt:
        raise ImpulseAliasing(f"impulse spacing {lag:.3g}s is below the sample period {dt:.3g}s")
    n2 = int(round(lag / dt))
    shifts = (0, n2, 2 * n2)
    n = x.shape[0]
    out_len = n + shifts[-1]
    padded = np.concatenate([x, np.repeat(x[-1:], shifts[-1], axis=0)], axis=0)
    y = np.zeros((out_len,) + x.shape[1:])
    for a, k in zip(shaper.amplitudes, shifts):
        y[k:] += a * padded[:out_len - k]
        y[:k] += a * x[0]
    return y


def shape_trajectory(shaper, ref):
    """Shaped copy of a joint-space reference, extended by the shaper duration.

    Convolution is linear, so shaping position, rate and acceleration
    separately keeps them consistent with each other.
    """
    from .trajectory import ReferenceTrajectory
    theta = shape_signal(shaper, ref.theta, ref.dt)
    t = ref.t[0] + ref.dt * np.arange(theta.shape[0])
    return ReferenceTrajectory(t, theta, shape_signal(shaper, ref.theta_dot, ref.dt),
                               shape_signal(shaper, ref.theta_ddot, ref.dt),
                               ref.origin, f"{ref.name}+is")
