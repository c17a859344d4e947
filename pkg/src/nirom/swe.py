"""Shallow-water snapshot generator on a beta-plane channel.

Periodic in x, solid walls at y = 0 and y = Dmax. Space is discretized with
centered second-order differences on a collocated grid (second-order one-sided
differences at the walls) and time with classical RK4.

With the reference depth H0 = 2e6 m the gravity-wave speed is ~4.5 km/s, so
the initial adjustment radiates waves with periods near the 600 s sampling
interval. The momentum equations therefore carry a divergence-damping term
``div_damping * grad(div u)`` that removes those waves and leaves the
rotational (jet and Rossby-wave) flow; set ``div_damping=0`` for the
undamped equations.
"""
import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy.integrate import trapezoid

from .errors import CflError, ConfigError, NumericalError
from .snapshots import SnapshotMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweConfig:
    Lmax: float = 6.0e6
    Dmax: float = 44.0e5
    nx: int = 32
    ny: int = 24
    dt: float = 600.0
    n_snapshots: int = 120
    f0: float = 1.0e-4
    beta: float = 1.5e-11
    g: float = 10.0
    H0: float = 2.0e6
    H1: float = 220.0
    H2: float = 133.0
    step: float | None = None  # internal RK4 step; None -> from CFL
    cfl_safety: float = 0.5
    div_damping: float = 1.0e9  # m^2/s

    def validate(self):
        for name in ("Lmax", "Dmax", "dt", "g", "H0", "cfl_safety"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.nx < 4 or self.ny < 4:
            raise ConfigError("nx and ny must be >= 4")
        if self.n_snapshots < 1:
            raise ConfigError("n_snapshots must be >= 1")
        if self.step is not None and not self.step > 0:
            raise ConfigError("step must be positive")
        if self.div_damping < 0:
            raise ConfigError("div_damping must be >= 0")
        return self

    @property
    def dx(self):
        return self.Lmax / self.nx

    @property
    def dy(self):
        return self.Dmax / (self.ny - 1)

    def grid(self):
        """Coordinates ``(x, y)``; x excludes the periodic image at Lmax."""
        return np.arange(self.nx) * self.dx, np.linspace(0.0, self.Dmax, self.ny)

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string key/value pairs (config files, CLI overrides)."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in types:
                raise ConfigError(f"unknown SWE config key {key!r}")
            if key in ("nx", "ny", "n_snapshots"):
                kwargs[key] = int(raw)
            elif key == "step" and raw in (None, "", "none", "None"):
                kwargs[key] = None
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)


@dataclass(frozen=True)
class FieldTriple:
    h: np.ndarray
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class Scales:
    L_ref: float
    h_ref: float
    u_ref: float

    @property
    def t_ref(self):
        return self.L_ref / self.u_ref


@dataclass(frozen=True)
class SweRun:
    h: SnapshotMatrix
    u: SnapshotMatrix
    v: SnapshotMatrix
    step: float
    mass: np.ndarray = field(repr=False)

    def fields(self):
        return {"h": self.h, "u": self.u, "v": self.v}

    @property
    def mass_drift(self):
        return float(np.max(np.abs(self.mass - self.mass[0])) / abs(self.mass[0]))


def coriolis_profile(cfg):
    """``f(y) = f0 + beta/2 (2y - Dmax)`` per grid row."""
    _, y = cfg.grid()
    return cfg.f0 + 0.5 * cfg.beta * (2.0 * y - cfg.Dmax)


def grammeltvedt_initial(cfg):
    """Zonal-jet height field with geostrophically balanced velocities."""
    f = coriolis_profile(cfg)
    if np.any(f == 0.0):
        raise ConfigError("Coriolis parameter vanishes on the grid; "
                          "geostrophic velocities are undefined")
    x, y = cfg.grid()
    X, Y = np.meshgrid(x, y)
    F = f[:, None]
    g, D, L = cfg.g, cfg.Dmax, cfg.Lmax
    s = 9.0 * (D / 2.0 - Y) / D
    sx = np.sin(2.0 * np.pi * X / L)

    h = cfg.H0 + cfg.H1 * np.tanh(s / 2.0) + cfg.H2 * sx / np.cosh(s) ** 2
    u = (-(g / F) * 9.0 * cfg.H1 / (2.0 * D) * (np.tanh(s / 2.0) ** 2 - 1.0)
         - 18.0 * g / F * cfg.H2 * np.sinh(s) * sx / (D * np.cosh(s) ** 3))
    v = (2.0 * np.pi * cfg.H2 * g / (F * L)
         * np.cos(2.0 * np.pi * X / L) / np.cosh(s) ** 2)

    wall = float(max(np.abs(v[0]).max(), np.abs(v[-1]).max()))
    if wall > 1e-12 * max(np.abs(v).max(), 1.0):
        log.info("geostrophic v at walls is %.3e m/s; zeroed to satisfy the wall "
                 "condition", wall)
    v[0] = 0.0
    v[-1] = 0.0
    return FieldTriple(h, u, v)


def stable_step(cfg, state):
    """Largest step with Courant number 1 for the fastest gravity wave.

    Also bounded by the explicit diffusion limit of the divergence damping.
    """
    c = math.sqrt(cfg.g * float(np.max(np.abs(state.h))))
    speed = c + float(np.max(np.abs(state.u))) + float(np.max(np.abs(state.v)))
    limit = min(cfg.dx, cfg.dy) / speed
    if cfg.div_damping > 0:
        limit = min(limit, 0.5 / (cfg.div_damping * (cfg.dx ** -2 + cfg.dy ** -2)))
    return limit


def _ddx(a, dx):
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2.0 * dx)


def _ddy(a, dy):
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * dy)
    out[0] = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * dy)
    out[-1] = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * dy)
    return out


def _tendency(h, u, v, f, cfg):
    dx, dy, g = cfg.dx, cfg.dy, cfg.g
    du = -(u * _ddx(u, dx) + v * _ddy(u, dy)) - g * _ddx(h, dx) + f * v
    dv = -(u * _ddx(v, dx) + v * _ddy(v, dy)) - g * _ddy(h, dy) - f * u
    dh = -(_ddx(h * u, dx) + _ddy(h * v, dy))
    if cfg.div_damping:
        div = _ddx(u, dx) + _ddy(v, dy)
        du += cfg.div_damping * _ddx(div, dx)
        dv += cfg.div_damping * _ddy(div, dy)
    dv[0] = 0.0
    dv[-1] = 0.0
    return dh, du, dv


def _mass(h, cfg):
    return float(trapezoid(h.sum(axis=1), dx=cfg.dy) * cfg.dx)


def simulate(cfg=None, initial=None):
    """Integrate the shallow-water equations and return ``n_snapshots`` per field.

    The first snapshot is the initial state; snapshots are ``cfg.dt`` apart.
    ``initial`` overrides the Grammeltvedt state (e.g. a flat rest state).
    """
    cfg = (cfg or SweConfig()).validate()
    state = initial if initial is not None else grammeltvedt_initial(cfg)
    f = coriolis_profile(cfg)[:, None]

    limit = stable_step(cfg, state)
    if cfg.step is not None:
        if cfg.step > limit:
            raise CflError(cfg.step, cfg.cfl_safety * limit)
        max_step = cfg.step
    else:
        max_step = cfg.cfl_safety * limit
    nsub = max(1, math.ceil(cfg.dt / max_step - 1e-12))
    step = cfg.dt / nsub

    h, u, v = (np.array(a, dtype=float) for a in (state.h, state.u, state.v))
    m = cfg.nx * cfg.ny
    out = {name: np.empty((m, cfg.n_snapshots)) for name in "huv"}
    mass = np.empty(cfg.n_snapshots)

    def emit(i):
        out["h"][:, i] = h.ravel()
        out["u"][:, i] = u.ravel()
        out["v"][:, i] = v.ravel()
        mass[i] = _mass(h, cfg)

    emit(0)
    for i in range(1, cfg.n_snapshots):
        for _ in range(nsub):
            k1 = _tendency(h, u, v, f, cfg)
            k2 = _tendency(*(a + 0.5 * step * b for a, b in zip((h, u, v), k1)), f, cfg)
            k3 = _tendency(*(a + 0.5 * step * b for a, b in zip((h, u, v), k2)), f, cfg)
            k4 = _tendency(*(a + step * b for a, b in zip((h, u, v), k3)), f, cfg)
            h, u, v = (a + step / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                       for a, b1, b2, b3, b4 in zip((h, u, v), k1, k2, k3, k4))
        if not (np.isfinite(h).all() and np.isfinite(u).all() and np.isfinite(v).all()):
            raise NumericalError(f"SWE integration blew up; last valid snapshot {i - 1}")
        emit(i)

    snaps = {name: SnapshotMatrix(out[name], cfg.dt, cfg.nx, cfg.ny, name)
             for name in "huv"}
    return SweRun(snaps["h"], snaps["u"], snaps["v"], step, mass)


def reference_scales(cfg, initial=None):
    """``L_ref = Lmax``, ``h_ref = H0``, ``u_ref = max |u0|``."""
    state = initial if initial is not None else grammeltvedt_initial(cfg)
    u_ref = float(np.max(np.abs(state.u)))
    if cfg.Lmax == 0 or cfg.H0 == 0 or u_ref == 0:
        raise ConfigError("reference scales must be nonzero")
    return Scales(cfg.Lmax, cfg.H0, u_ref)


def nondimensionalize(run, scales):
    """Scale a SweRun (or FieldTriple) to dimensionless variables."""
    return _rescale(run, scales, inverse=False)


def dimensionalize(run, scales):
    return _rescale(run, scales, inverse=True)


def _rescale(run, scales, inverse):
    for ref in (scales.L_ref, scales.h_ref, scales.u_ref):
        if ref == 0:
            raise ConfigError("reference scales must be nonzero")

    def op(a, ref):
        return a * ref if inverse else a / ref

    if isinstance(run, FieldTriple):
        return FieldTriple(op(run.h, scales.h_ref), op(run.u, scales.u_ref),
                           op(run.v, scales.u_ref))
    t = op(run.h.dt, scales.t_ref)
    return SweRun(
        replace(run.h, data=op(run.h.data, scales.h_ref), dt=t),
        replace(run.u, data=op(run.u.data, scales.u_ref), dt=t),
        replace(run.v, data=op(run.v.data, scales.u_ref), dt=t),
        op(run.step, scales.t_ref),
        op(run.mass, scales.h_ref * scales.L_ref ** 2),
    )
