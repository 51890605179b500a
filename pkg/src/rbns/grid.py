"""Flattened-channel grid and mapped differential operators.

Fields live on the rectangle [0, Gamma) x [0, 1]: x1 is the periodic
horizontal coordinate (Fourier collocation, n1 points), x2 the wall-distance
coordinate (n2 uniformly spaced nodes *including* both wall rows).  The
physical domain is recovered through y = (x1, x2 + h(x1)); the map has unit
Jacobian, so volume integrals are plain quadrature on the rectangle and
|Omega| = Gamma.

Physical derivatives follow from the chain rule

    d/dy1 = d/dx1 - h'(x1) d/dx2,        d/dy2 = d/dx2,

and the physical Laplacian becomes the divergence-form operator

    L f = dx1(dx1 f) + dx1(-h' dx2 f) + dx2(-h' dx1 f) + dx2((1+h'^2) dx2 f)

whose coefficient matrix [[1, -h'], [-h', 1+h'^2]] has unit determinant, so
it is uniformly elliptic for any bounded slope.  x1 derivatives are spectral
(FFT), x2 derivatives second-order centered with one-sided second-order
stencils on the wall rows.

Arrays are float64 with shape (n1, n2); axis 0 is periodic by index
arithmetic everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rbns.geometry import FourierSeries, Side


@dataclass
class MappedGrid:
    profile: FourierSeries
    n1: int
    n2: int

    # derived, filled in __post_init__
    gamma: float = field(init=False)
    dx1: float = field(init=False)
    dx2: float = field(init=False)
    x1: np.ndarray = field(init=False)
    x2: np.ndarray = field(init=False)
    k: np.ndarray = field(init=False)        # rfft wavenumbers 2 pi j / Gamma
    ik_d1: np.ndarray = field(init=False)    # i*k with the Nyquist mode zeroed
    k2: np.ndarray = field(init=False)       # full k^2 (spectral second derivative)
    hp: np.ndarray = field(init=False)
    hpp: np.ndarray = field(init=False)
    hppp: np.ndarray = field(init=False)
    a22: np.ndarray = field(init=False)      # 1 + h'^2 per column
    ds_weight: np.ndarray = field(init=False)
    w2: np.ndarray = field(init=False)       # trapezoid weights in x2
    is_flat: bool = field(init=False)

    def __post_init__(self):
        if self.n1 < 4:
            raise ValueError(f"n1 must be at least 4, got {self.n1}")
        if self.n2 < 8:
            raise ValueError(f"n2 must be at least 8, got {self.n2}")
        self.gamma = self.profile.gamma
        self.dx1 = self.gamma / self.n1
        self.dx2 = 1.0 / (self.n2 - 1)
        self.x1 = np.arange(self.n1) * self.dx1
        self.x2 = np.linspace(0.0, 1.0, self.n2)
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n1, d=self.dx1)
        self.k = k
        ik = 1j * k
        if self.n1 % 2 == 0:
            ik = ik.copy()
            ik[-1] = 0.0  # odd-derivative Nyquist mode has no consistent sign
        self.ik_d1 = ik
        self.k2 = k**2
        self.hp = np.asarray(self.profile.evaluate(self.x1, 1))
        self.hpp = np.asarray(self.profile.evaluate(self.x1, 2))
        self.hppp = np.asarray(self.profile.evaluate(self.x1, 3))
        self.a22 = 1.0 + self.hp**2
        self.ds_weight = np.sqrt(self.a22)
        w2 = np.full(self.n2, self.dx2)
        w2[0] = w2[-1] = 0.5 * self.dx2
        self.w2 = w2
        self.is_flat = self.profile.is_flat

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def area(self) -> float:
        return self.gamma  # unit gap, unit Jacobian

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def d_x1(f: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Spectral d/dx1 along the periodic axis."""
    return np.fft.irfft(grid.ik_d1[:, None] * np.fft.rfft(f, axis=0), n=grid.n1, axis=0)


def d2_x1(f: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Spectral d^2/dx1^2 along the periodic axis."""
    return np.fft.irfft(-grid.k2[:, None] * np.fft.rfft(f, axis=0), n=grid.n1, axis=0)


def d_x1_line(g: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Spectral d/dx1 of a single periodic line sample (n1,)."""
    return np.fft.irfft(grid.ik_d1 * np.fft.rfft(g), n=grid.n1)


def d_x2(f: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Second-order d/dx2: centered inside, one-sided on the wall rows."""
    out = np.empty_like(f)
    h = 2.0 * grid.dx2
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / h
    out[:, 0] = (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) / h
    out[:, -1] = (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) / h
    return out


def d2_x2(f: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Second-order d^2/dx2^2: 3-point inside, one-sided on the wall rows."""
    out = np.empty_like(f)
    h2 = grid.dx2**2
    out[:, 1:-1] = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / h2
    out[:, 0] = (2.0 * f[:, 0] - 5.0 * f[:, 1] + 4.0 * f[:, 2] - f[:, 3]) / h2
    out[:, -1] = (2.0 * f[:, -1] - 5.0 * f[:, -2] + 4.0 * f[:, -3] - f[:, -4]) / h2
    return out


def grad_physical(f: np.ndarray, grid: MappedGrid) -> tuple[np.ndarray, np.ndarray]:
    """(d/dy1 f, d/dy2 f) at every node, via the chain rule."""
    fz = d_x2(f, grid)
    fy1 = d_x1(f, grid) - grid.hp[:, None] * fz
    return fy1, fz


def apply_L_tilde(f: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Mapped Laplacian in divergence form; equals the physical Laplacian.

    On a flat grid this is the plain spectral-in-x1 plus 3-point-in-x2
    Laplacian.  Wall rows use one-sided stencils and are only
    first-order-consistent there; solvers never use them.
    """
    fz = d_x2(f, grid)
    out = d2_x1(f, grid)
    out += grid.a22[:, None] * d2_x2(f, grid)
    if not grid.is_flat:
        fx = d_x1(f, grid)
        out += d_x1(-grid.hp[:, None] * fz, grid)
        out += d_x2(-grid.hp[:, None] * fx, grid)
    return out


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def volume_integral(f: np.ndarray, grid: MappedGrid) -> float:
    """Integral over the physical domain (unit-Jacobian map, trapezoid in x2)."""
    return float(np.sum(f @ grid.w2) * grid.dx1)


def line_integral(integrand: np.ndarray, grid: MappedGrid) -> float:
    """Integral along a wall or any vertically shifted wall line.

    Every level line y2 = h(y1) + x2 is a vertical translate of the bottom
    wall, so the arc-length weight sqrt(1+h'^2) is the same for all of them.
    The rectangle rule is trapezoid-equivalent (periodic) and spectrally
    accurate for smooth integrands.
    """
    return float(np.sum(integrand * grid.ds_weight) * grid.dx1)


def level_index(grid: MappedGrid, x2_level: float) -> int:
    """Grid row closest to the level; rejects levels outside [0, 1]."""
    if not 0.0 <= x2_level <= 1.0:
        raise ValueError(f"level must lie in [0, 1], got {x2_level}")
    return int(round(x2_level / grid.dx2))


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

def _row(side: Side) -> int:
    return 0 if side is Side.BOTTOM else -1


def _d_x2_row(f: np.ndarray, grid: MappedGrid, side: Side) -> np.ndarray:
    h = 2.0 * grid.dx2
    if side is Side.BOTTOM:
        return (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) / h
    return (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) / h


def tangential_velocity(u1: np.ndarray, u2: np.ndarray, grid: MappedGrid, side: Side) -> np.ndarray:
    """u . tau on a wall row; tau points along +y1 on the bottom wall, -y1 on top."""
    j = _row(side)
    s = 1.0 if side is Side.BOTTOM else -1.0
    return s * (u1[:, j] + grid.hp * u2[:, j]) / grid.ds_weight


def boundary_trace(f: np.ndarray, grid: MappedGrid, side: Side, kind: str = "value") -> np.ndarray:
    """Wall trace of a field: value, physical normal or tangential derivative.

    The tangential derivative of the trace reduces to a spectral x1
    derivative over sqrt(1+h'^2) because the wall row *is* the wall curve;
    the sign follows the tangent orientation (+y1 on the bottom wall, -y1 on
    the top).
    """
    j = _row(side)
    if kind == "value":
        return f[:, j].copy()
    if kind == "tangential_derivative":
        s = 1.0 if side is Side.BOTTOM else -1.0
        return s * d_x1_line(f[:, j], grid) / grid.ds_weight
    if kind == "normal_derivative":
        fz = _d_x2_row(f, grid, side)
        fy1 = d_x1_line(f[:, j], grid) - grid.hp * fz
        if side is Side.BOTTOM:   # n = (h', -1)/w
            return (grid.hp * fy1 - fz) / grid.ds_weight
        return (-grid.hp * fy1 + fz) / grid.ds_weight
    raise ValueError(f"unknown trace kind {kind!r}")
