"""Semi-implicit time integration of the Boussinesq system.

State variables are vorticity w, stream function psi and temperature T on
the flattened grid:

    (1/Pr)(w_t + u.grad w) - Lap w = Ra dT/dy1,   w = -2(alpha+kappa) u_tau  on walls
    T_t + u.grad T - Lap T = 0,                   T = 1 (bottom), 0 (top)
    Lap psi = w,    psi = 0 (bottom), psi_+ (top),    u = (-dpsi/dy2, dpsi/dy1)

Scheme: Crank-Nicolson for diffusion through the mapped Helmholtz solver,
second-order Adams-Bashforth (variable-step coefficients, forward Euler on
the first step) for advection and buoyancy, skew-symmetric centered
advection.  The curl construction makes the discrete velocity exactly
divergence free, and the vorticity wall data is coupled to u_tau lagged by
one step, with an optional fixed-point iteration for stiff (large alpha)
walls.

The top stream-function trace psi_+ equals -(1/|Omega|) int u1; with
constant wall traces that integral telescopes to -Gamma psi_+ exactly, so
recomputing it each step is an exact fixed point and the scheme conserves
the horizontal mean momentum it starts with.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from rbns.elliptic import HelmholtzDirichlet, PoissonNeumann, SolveInfo
from rbns.geometry import BoundaryData, Side
from rbns.grid import (
    MappedGrid,
    apply_L_tilde,
    d_x1,
    d_x1_line,
    d_x2,
    tangential_velocity,
    volume_integral,
)


@dataclass(frozen=True)
class PhysicalParams:
    ra: float
    pr: float

    def __post_init__(self):
        if not self.ra >= 0.0:
            raise ValueError(f"Ra must be nonnegative, got {self.ra}")
        if not self.pr > 0.0:
            raise ValueError(f"Pr must be positive, got {self.pr}")


class CflViolation(RuntimeError):
    def __init__(self, dt: float, suggested_dt: float):
        super().__init__(
            f"dt = {dt:.3e} violates the advective CFL bound; "
            f"suggested dt <= {suggested_dt:.3e}"
        )
        self.suggested_dt = suggested_dt


@dataclass
class FlowState:
    """One time level; wall rows of the arrays hold the boundary data."""

    time: float
    omega: np.ndarray
    psi: np.ndarray
    temp: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    psi_top: float
    prev_expl_omega: np.ndarray | None = None
    prev_expl_temp: np.ndarray | None = None
    prev_dt: float | None = None

    def without_history(self) -> "FlowState":
        """Drop the multistep history (used at checkpoint instants)."""
        return replace(self, prev_expl_omega=None, prev_expl_temp=None, prev_dt=None)


def boundary_vorticity(u_tau: np.ndarray, boundary: BoundaryData) -> np.ndarray:
    """Navier-slip vorticity wall data: -2 (alpha + kappa) u_tau."""
    if u_tau.shape != boundary.alpha.shape:
        raise ValueError("u_tau and boundary sample counts differ")
    return -2.0 * (boundary.alpha + boundary.kappa) * u_tau


def stream_trace_from_velocity(u1: np.ndarray, grid: MappedGrid) -> float:
    """Top stream-function trace -(1/|Omega|) int u1 by quadrature."""
    return -volume_integral(u1, grid) / grid.area


class BoussinesqStepper:
    """Owns the elliptic solvers and advances FlowState in time."""

    def __init__(self, grid: MappedGrid, params: PhysicalParams,
                 bottom: BoundaryData, top: BoundaryData, *,
                 coupling_sweeps: int = 0, coupling_tol: float = 1e-8,
                 solver_tol: float = 1e-10, cfl_safety: float = 0.4,
                 buoyancy_safety: float = 0.35):
        if bottom.n_samples != grid.n1:
            raise ValueError("boundary data must be sampled on the grid columns")
        self.grid = grid
        self.params = params
        self.bottom = bottom
        self.top = top
        self.coupling_sweeps = coupling_sweeps
        self.coupling_tol = coupling_tol
        self.solver_tol = solver_tol
        self.cfl_safety = cfl_safety
        self.buoyancy_safety = buoyancy_safety

        self.t_bottom = np.ones(grid.n1)
        self.t_top = np.zeros(grid.n1)
        self.poisson = HelmholtzDirichlet(grid, None, solver_tol)
        self.neumann = PoissonNeumann(grid, solver_tol)
        self._helm: dict[tuple[str, float], HelmholtzDirichlet] = {}
        self._last_pressure = None
        self.last_info: dict[str, SolveInfo] = {}

    # -- state construction --------------------------------------------------

    def state_from_fields(self, temp: np.ndarray, psi: np.ndarray | None = None,
                          time: float = 0.0) -> FlowState:
        grid = self.grid
        if psi is None:
            psi = grid.zeros()
        u1, u2 = self._velocity(psi)
        psi_top = float(np.mean(psi[:, -1]))
        omega = apply_L_tilde(psi, grid)
        omega[:, 0] = boundary_vorticity(tangential_velocity(u1, u2, grid, Side.BOTTOM), self.bottom)
        omega[:, -1] = boundary_vorticity(tangential_velocity(u1, u2, grid, Side.TOP), self.top)
        return FlowState(time=time, omega=omega, psi=psi.copy(), temp=temp.copy(),
                         u1=u1, u2=u2, psi_top=psi_top)

    # -- time step sizing ------------------------------------------------------

    def cfl_limit(self, state: FlowState) -> float:
        grid = self.grid
        u1m = float(np.max(np.abs(state.u1)))
        u2c = float(np.max(np.abs(state.u2 - grid.hp[:, None] * state.u1)))
        lim = np.inf
        if u1m > 0.0:
            lim = min(lim, grid.dx1 / u1m)
        if u2c > 0.0:
            lim = min(lim, grid.dx2 / u2c)
        return self.cfl_safety * lim

    def buoyancy_limit(self) -> float:
        """Stability cap for the explicit buoyancy coupling, ~ (Pr Ra)^(-1/2)."""
        prod = self.params.ra * self.params.pr
        return self.buoyancy_safety / np.sqrt(prod) if prod > 0 else np.inf

    def suggest_dt(self, state: FlowState, dt_cap: float = np.inf) -> float:
        return min(self.cfl_limit(state), self.buoyancy_limit(), dt_cap)

    # -- pieces ---------------------------------------------------------------

    def _helmholtz(self, kind: str, c: float) -> HelmholtzDirichlet:
        key = (kind, c)
        if key not in self._helm:
            if len(self._helm) > 8:  # dt changes invalidate old factorizations
                self._helm.clear()
            self._helm[key] = HelmholtzDirichlet(self.grid, c, self.solver_tol)
        return self._helm[key]

    def _velocity(self, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grid = self.grid
        psi_z = d_x2(psi, grid)
        u1 = -psi_z
        u2 = d_x1(psi, grid) - grid.hp[:, None] * psi_z
        return u1, u2

    def _advection(self, f: np.ndarray, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        """Skew-symmetric centered advection -(u.grad f + div(u f))/2, full grid."""
        grid = self.grid
        hp = grid.hp[:, None]
        fz = d_x2(f, grid)
        fy1 = d_x1(f, grid) - hp * fz
        adv = u1 * fy1 + u2 * fz
        q1, q2 = u1 * f, u2 * f
        q1z = d_x2(q1, grid)
        dive = d_x1(q1, grid) - hp * q1z + d_x2(q2, grid)
        return -0.5 * (adv + dive)

    def _explicit_terms(self, state: FlowState) -> tuple[np.ndarray, np.ndarray]:
        grid = self.grid
        pr, ra = self.params.pr, self.params.ra
        n_t = self._advection(state.temp, state.u1, state.u2)
        n_w = self._advection(state.omega, state.u1, state.u2)
        if ra > 0.0:
            tz = d_x2(state.temp, grid)
            n_w = n_w + pr * ra * (d_x1(state.temp, grid) - grid.hp[:, None] * tz)
        return n_w[:, 1:-1], n_t[:, 1:-1]

    def _interior_laplacian(self, f: np.ndarray) -> np.ndarray:
        grid = self.grid
        dx2 = grid.dx2
        fz = (f[:, 2:] - f[:, :-2]) / (2.0 * dx2)
        out = np.fft.irfft(-grid.k2[:, None] * np.fft.rfft(f, axis=0), n=grid.n1, axis=0)[:, 1:-1]
        out += grid.a22[:, None] * (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / dx2**2
        if not grid.is_flat:
            hp = grid.hp[:, None]
            out += d_x1(-hp * fz, grid)
            g = -hp * d_x1(f, grid)
            out += (g[:, 2:] - g[:, :-2]) / (2.0 * dx2)
        return out

    # -- the step ---------------------------------------------------------------

    def step(self, state: FlowState, dt: float) -> FlowState:
        """Advance one semi-implicit step; raises CflViolation for over-large dt."""
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        limit = self.cfl_limit(state)
        if dt > limit * (1.0 + 1e-9):
            raise CflViolation(dt, limit)
        grid = self.grid
        pr = self.params.pr

        n_w, n_t = self._explicit_terms(state)
        if state.prev_expl_omega is None or state.prev_dt is None:
            expl_w, expl_t = n_w, n_t
        else:
            r = dt / state.prev_dt
            c1, c2 = 1.0 + 0.5 * r, -0.5 * r
            expl_w = c1 * n_w + c2 * state.prev_expl_omega
            expl_t = c1 * n_t + c2 * state.prev_expl_temp

        c_w = 0.5 * pr * dt
        c_t = 0.5 * dt
        rhs_w = state.omega[:, 1:-1] + c_w * self._interior_laplacian(state.omega) + dt * expl_w
        rhs_t = state.temp[:, 1:-1] + c_t * self._interior_laplacian(state.temp) + dt * expl_t

        temp_new, info_t = self._helmholtz("temp", c_t).solve(
            rhs_t, self.t_bottom, self.t_top, x0=state.temp)

        ut_b = tangential_velocity(state.u1, state.u2, grid, Side.BOTTOM)
        ut_t = tangential_velocity(state.u1, state.u2, grid, Side.TOP)
        psi_top = state.psi_top  # exact fixed point of the trace recomputation
        omega_new = psi_new = u1 = u2 = None
        helm_w = self._helmholtz("omega", c_w)
        for sweep in range(self.coupling_sweeps + 1):
            w_b = boundary_vorticity(ut_b, self.bottom)
            w_t = boundary_vorticity(ut_t, self.top)
            omega_new, info_w = helm_w.solve(rhs_w, w_b, w_t, x0=state.omega)
            psi_new, info_p = self.poisson.solve(
                -omega_new[:, 1:-1], np.zeros(grid.n1), np.full(grid.n1, psi_top),
                x0=state.psi)
            u1, u2 = self._velocity(psi_new)
            ut_b_new = tangential_velocity(u1, u2, grid, Side.BOTTOM)
            ut_t_new = tangential_velocity(u1, u2, grid, Side.TOP)
            delta = max(float(np.max(np.abs(ut_b_new - ut_b))),
                        float(np.max(np.abs(ut_t_new - ut_t))))
            ut_b, ut_t = ut_b_new, ut_t_new
            if sweep >= self.coupling_sweeps or delta <= self.coupling_tol:
                break

        self.last_info = {"omega": info_w, "temp": info_t, "psi": info_p}
        return FlowState(
            time=state.time + dt,
            omega=omega_new, psi=psi_new, temp=temp_new, u1=u1, u2=u2,
            psi_top=psi_top,
            prev_expl_omega=n_w, prev_expl_temp=n_t, prev_dt=dt,
        )

    # -- pressure ---------------------------------------------------------------

    def recover_pressure(self, state: FlowState) -> tuple[np.ndarray, SolveInfo]:
        """Mean-zero pressure from the Neumann problem the momentum balance implies.

        Bulk:  Lap p = -(1/Pr) (grad u)^T : grad u + Ra dT/dy2.
        Walls: n.grad p = -(kappa/Pr) u_tau^2 + 2 d/dlambda((alpha+kappa) u_tau),
        plus n2 Ra on the bottom wall where T = 1.
        """
        grid = self.grid
        pr, ra = self.params.pr, self.params.ra
        u1z = d_x2(state.u1, grid)
        u2z = d_x2(state.u2, grid)
        u1y1 = d_x1(state.u1, grid) - grid.hp[:, None] * u1z
        u2y1 = d_x1(state.u2, grid) - grid.hp[:, None] * u2z
        rhs = -(u1y1**2 + 2.0 * u2y1 * u1z + u2z**2) / pr
        if ra > 0.0:
            rhs = rhs + ra * d_x2(state.temp, grid)

        fluxes = {}
        for bd, side in ((self.bottom, Side.BOTTOM), (self.top, Side.TOP)):
            ut = tangential_velocity(state.u1, state.u2, grid, side)
            g = (bd.alpha + bd.kappa) * ut
            sgn = 1.0 if side is Side.BOTTOM else -1.0
            dg_dlam = sgn * d_x1_line(g, grid) / grid.ds_weight
            flux = -(bd.kappa / pr) * ut**2 + 2.0 * dg_dlam
            if side is Side.BOTTOM:
                flux = flux + ra * bd.normal[:, 1]
            fluxes[side] = flux

        p, info = self.neumann.solve(rhs, fluxes[Side.BOTTOM], fluxes[Side.TOP],
                                     x0=self._last_pressure)
        self._last_pressure = p
        return p, info


def step(state: FlowState, params: PhysicalParams, dt: float, grid: MappedGrid,
         bottom: BoundaryData, top: BoundaryData, **options) -> FlowState:
    """One-shot step; prefer a persistent BoussinesqStepper in loops."""
    return BoussinesqStepper(grid, params, bottom, top, **options).step(state, dt)


def recover_pressure(state: FlowState, params: PhysicalParams, grid: MappedGrid,
                     bottom: BoundaryData, top: BoundaryData) -> tuple[np.ndarray, SolveInfo]:
    return BoussinesqStepper(grid, params, bottom, top).recover_pressure(state)


# `run` lives in rbns.runner to keep this module free of configuration and
# file-format concerns; re-exported here because it is solver functionality.
def run(config, output_dir=None, resume=None, config_text=None):
    from rbns.runner import run_simulation

    return run_simulation(config, output_dir, resume=resume, config_text=config_text)
