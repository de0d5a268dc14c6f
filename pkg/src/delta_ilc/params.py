"""Robot parameter set and YAML loading."""
from dataclasses import dataclass, asdict, fields, replace
import math

import yaml

from .errors import ConfigError

GRAVITY = 9.81


@dataclass(frozen=True)
class RobotParams:
    """Geometric, inertial, material and drive constants of the Delta robot.

    SI units throughout. Defaults are the prototype values; the drive
    constants (``I_M``, ``B_damp``, ``K_t``), ``pair_width`` and
    ``servo_stiffness`` are not part
    of the published table and are chosen here.
    """
    l1: float = 0.375
    l2: float = 0.95
    D1: float = 0.058
    d1: float = 0.048
    D2: float = 0.016
    d2: float = 0.012
    e_a: float = 0.164
    e_b: float = 0.051
    E_r: float = 71e9
    rho_r: float = 2770.0
    nu_r: float = 0.3
    m_p: float = 0.676
    m_lump: float = 0.157
    I_px: float = 2.25e-6
    I_py: float = 2.25e-6
    I_pz: float = 4.39e-6
    n_gear: float = 15.0
    I_M: float = 1.0e-2
    B_damp: float = 0.05
    K_t: float = 1.5
    # spacing of the two parallel lower arms of one chain
    pair_width: float = 0.08
    # gearbox/servo torsional stiffness at the arm side (N m/rad), set so the
    # first mode at the centre of the z=-0.8151 plane sits near 20 Hz
    servo_stiffness: float = 5414.6

    def __post_init__(self):
        positive = ("l1", "l2", "D1", "d1", "D2", "d2", "e_a", "e_b", "E_r",
                    "rho_r", "m_p", "m_lump", "I_px", "I_py", "I_pz", "I_M",
                    "K_t", "pair_width", "servo_stiffness")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        if not self.d1 < self.D1:
            raise ConfigError("inner diameter d1 must be below D1")
        if not self.d2 < self.D2:
            raise ConfigError("inner diameter d2 must be below D2")
        if self.n_gear < 1:
            raise ConfigError("n_gear must be >= 1")
        if self.B_damp < 0:
            raise ConfigError("B_damp must be nonnegative")
        if not 0 <= self.nu_r < 0.5:
            raise ConfigError("nu_r must lie in [0, 0.5)")

    # derived section properties
    @property
    def area_upper(self):
        return math.pi / 4 * (self.D1 ** 2 - self.d1 ** 2)

    @property
    def area_lower(self):
        return math.pi / 4 * (self.D2 ** 2 - self.d2 ** 2)

    @property
    def second_moment_lower(self):
        return math.pi / 64 * (self.D2 ** 4 - self.d2 ** 4)

    @property
    def polar_moment_lower(self):
        return 2 * self.second_moment_lower

    @property
    def shear_modulus(self):
        return self.E_r / (2 * (1 + self.nu_r))

    @property
    def mass_upper_arm(self):
        return self.rho_r * self.area_upper * self.l1

    @property
    def mass_lower_arm(self):
        """Mass of a single lower arm (each chain has two)."""
        return self.rho_r * self.area_lower * self.l2

    def to_dict(self):
        return asdict(self)

    def scaled(self, **factors):
        """Copy with named fields multiplied by ``1 + factor``."""
        return replace(self, **{k: getattr(self, k) * (1 + v) for k, v in factors.items()})


def params_from_dict(data):
    if data is None:
        return RobotParams()
    known = {f.name for f in fields(RobotParams)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown robot parameter(s): {sorted(unknown)}")
    return RobotParams(**{k: float(v) for k, v in data.items()})


def load_params(path):
    """Read a flat key/value YAML file; missing keys keep their defaults."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return params_from_dict(data.get("robot", data))


def dump_params(params, path):
    with open(path, "w") as fh:
        yaml.safe_dump(params.to_dict(), fh, sort_keys=False)
