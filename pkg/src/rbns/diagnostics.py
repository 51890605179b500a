"""Instantaneous functionals and long-time-averaged diagnostics.

Three equivalent heat-transport measurements are tracked:

  * nu_flux     wall heat flux       (1/|Omega|) int_{bottom} n . grad T dS
  * nu_gradsq   dissipation          (1/|Omega|) int |grad T|^2
  * nu_strip    level-line flux      (1/|Omega|) int_{level} (uT - grad T) . n_+ dS

together with the kinetic energy/enstrophy budget terms:

    d/dt ||u||^2 / (2 Pr) + ||grad u||^2 + int (2 alpha + kappa) u_tau^2
        = Ra int T u2

and the five averaged enstrophy-balance ingredients whose sum vanishes for
exact long-time averages:

    <|grad w|^2> + 2 <(alpha+kappa) u . grad p>_walls - Ra <w dT/dy1>
        + (2/Pr) <(alpha+kappa) u_tau^2 du_tau/dlambda>_walls
        - 2 Ra <(alpha+kappa) u_tau n1>_bottom .

Angle brackets carry the 1/|Omega| normalization; the raw integrals in the
energy budget do not.  The long-time average of the theory is approximated
by the running mean over samples past a burn-in time, reported together
with the max over the trailing half of the window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rbns.background import BackgroundField
from rbns.geometry import BoundaryData, Side
from rbns.grid import (
    MappedGrid,
    boundary_trace,
    d_x1,
    d_x1_line,
    d_x2,
    grad_physical,
    level_index,
    line_integral,
    tangential_velocity,
    volume_integral,
)

CSV_HEADER = (
    "time,nu_flux,nu_gradsq,nu_strip_25,nu_strip_50,nu_strip_75,"
    "energy,enstrophy,grad_u_sq,boundary_friction,buoyancy_flux,"
    "energy_residual,enstrophy_residual,temp_min,temp_max"
)

STRIP_LEVELS = (0.25, 0.5, 0.75)

ENSTROPHY_TERM_NAMES = (
    "grad_omega_sq",      # <|grad w|^2>
    "wall_pressure",      # +2 <(alpha+kappa) u.grad p>_walls
    "buoyancy_torque",    # -Ra <w dT/dy1>
    "wall_inertia",       # (2/Pr) <(alpha+kappa) u_tau^2 du_tau/dlambda>_walls
    "wall_buoyancy",      # -2 Ra <(alpha+kappa) u_tau n1>_bottom
)


def nusselt_flux(temp: np.ndarray, grid: MappedGrid) -> float:
    """Instantaneous boundary-flux Nusselt number on the bottom wall."""
    flux = boundary_trace(temp, grid, Side.BOTTOM, "normal_derivative")
    return line_integral(flux, grid) / grid.area


def nusselt_gradsq(temp: np.ndarray, grid: MappedGrid) -> float:
    """Instantaneous (1/|Omega|) int |grad T|^2."""
    ty1, ty2 = grad_physical(temp, grid)
    return volume_integral(ty1**2 + ty2**2, grid) / grid.area


def nusselt_strip(temp: np.ndarray, u1: np.ndarray, u2: np.ndarray,
                  grid: MappedGrid, x2_level: float) -> float:
    """Instantaneous level-line Nusselt number at wall distance x2_level.

    The level line is a vertical translate of the bottom wall; its upward
    normal is (-h', 1)/sqrt(1+h'^2), so the weighted integrand reduces to
    -h'(u1 T - dT/dy1) + (u2 T - dT/dy2) per unit y1.
    """
    j = level_index(grid, x2_level)
    ty1, ty2 = grad_physical(temp, grid)
    row = (-grid.hp * (u1[:, j] * temp[:, j] - ty1[:, j])
           + (u2[:, j] * temp[:, j] - ty2[:, j]))
    return float(np.sum(row) * grid.dx1) / grid.area


def velocity_gradient_integrals(u1: np.ndarray, u2: np.ndarray, grid: MappedGrid) -> float:
    """Raw int |grad u|^2 over the domain."""
    u1y1, u1y2 = grad_physical(u1, grid)
    u2y1, u2y2 = grad_physical(u2, grid)
    return volume_integral(u1y1**2 + u1y2**2 + u2y1**2 + u2y2**2, grid)


def boundary_friction_integral(u1, u2, grid, bottom: BoundaryData, top: BoundaryData,
                               weight: str = "2a+k") -> float:
    """Raw wall integral of (2a+k), (a+k) or k times u_tau^2."""
    weights = {
        "2a+k": lambda bd: 2.0 * bd.alpha + bd.kappa,
        "a+k": lambda bd: bd.alpha + bd.kappa,
        "kappa": lambda bd: bd.kappa,
    }
    total = 0.0
    for bd, side in ((bottom, Side.BOTTOM), (top, Side.TOP)):
        ut = tangential_velocity(u1, u2, grid, side)
        total += bd.line_integral(weights[weight](bd) * ut**2)
    return total


def enstrophy_balance_terms(omega, temp, u1, u2, pressure, grid: MappedGrid,
                            bottom: BoundaryData, top: BoundaryData, pr: float, ra: float) -> dict:
    """The five averaged-enstrophy-balance ingredients, instantaneous values.

    On the walls u is purely tangential, so u.grad reduces to u_tau d/dlambda
    acting on wall traces; those tangential derivatives are spectral.  The
    signs are the ones under which the five long-time averages cancel: the
    wall terms enter through the vorticity flux expansion

        n.grad w = (1/Pr)(du_tau/dt + u_tau du_tau/dlambda) + dp/dlambda
                   - Ra T n1   (along tau),

    multiplied by the wall data w = -2(alpha+kappa) u_tau.
    """
    wy1, wy2 = grad_physical(omega, grid)
    t_grad = volume_integral(wy1**2 + wy2**2, grid) / grid.area

    ty1 = d_x1(temp, grid) - grid.hp[:, None] * d_x2(temp, grid)
    t_buoy = -ra * volume_integral(omega * ty1, grid) / grid.area

    t_press = 0.0
    t_inertia = 0.0
    for bd, side in ((bottom, Side.BOTTOM), (top, Side.TOP)):
        ut = tangential_velocity(u1, u2, grid, side)
        ak = bd.alpha + bd.kappa
        sgn = 1.0 if side is Side.BOTTOM else -1.0
        p_trace = boundary_trace(pressure, grid, side, "value")
        dp_dlam = sgn * d_x1_line(p_trace, grid) / grid.ds_weight
        t_press += 2.0 * bd.line_integral(ak * ut * dp_dlam) / grid.area
        dut_dlam = sgn * d_x1_line(ut, grid) / grid.ds_weight
        t_inertia += (2.0 / pr) * bd.line_integral(ak * ut**2 * dut_dlam) / grid.area

    ut_b = tangential_velocity(u1, u2, grid, Side.BOTTOM)
    n1_b = bottom.normal[:, 0]
    t_wall_buoy = -2.0 * ra * bottom.line_integral((bottom.alpha + bottom.kappa) * ut_b * n1_b) / grid.area

    return {
        "grad_omega_sq": t_grad,
        "wall_pressure": t_press,
        "buoyancy_torque": t_buoy,
        "wall_inertia": t_inertia,
        "wall_buoyancy": t_wall_buoy,
    }


@dataclass
class DiagnosticsRecord:
    time: float
    nu_flux: float
    nu_gradsq: float
    nu_strip: tuple[float, float, float]
    energy: float                     # ||u||_2^2
    enstrophy: float                  # ||w||_2^2
    grad_u_sq: float                  # int |grad u|^2
    boundary_friction: float          # int (2a+k) u_tau^2
    kappa_friction: float             # int k u_tau^2
    ak_friction: float                # int (a+k) u_tau^2
    buoyancy_flux: float              # Ra int T u2
    temp_min: float
    temp_max: float
    convective_transport: float       # <(u2 - d/dy2) T>
    heat_content: float               # int (1 - x2) T dy  (budget corrections)
    enstrophy_terms: dict
    pressure_defect: float = float("nan")
    grad_theta_sq: float = float("nan")
    theta_u_grad_eta: float = float("nan")
    theta_sq: float = float("nan")    # int theta^2 dy
    omega_lp: dict = field(default_factory=dict)
    energy_residual: float = float("nan")     # filled in finalize()
    enstrophy_residual: float = float("nan")  # filled in finalize()


def measure(time, omega, psi, temp, u1, u2, grid: MappedGrid,
            bottom: BoundaryData, top: BoundaryData, pr: float, ra: float,
            pressure: np.ndarray | None = None,
            pressure_defect: float = float("nan"),
            background: BackgroundField | None = None) -> DiagnosticsRecord:
    """Evaluate every instantaneous diagnostic for one snapshot."""
    ty1, ty2 = grad_physical(temp, grid)
    nu_g = volume_integral(ty1**2 + ty2**2, grid) / grid.area
    strips = tuple(nusselt_strip(temp, u1, u2, grid, lev) for lev in STRIP_LEVELS)

    energy = volume_integral(u1**2 + u2**2, grid)
    enstrophy = volume_integral(omega**2, grid)
    convective = volume_integral(u2 * temp - ty2, grid) / grid.area

    if pressure is not None:
        ens_terms = enstrophy_balance_terms(omega, temp, u1, u2, pressure, grid, bottom, top, pr, ra)
    else:
        ens_terms = {name: float("nan") for name in ENSTROPHY_TERM_NAMES}

    gts, tue, tsq = float("nan"), float("nan"), float("nan")
    if background is not None:
        gts, tue = background.theta_ingredients(temp, u1, u2)
        tsq = volume_integral(background.theta(temp) ** 2, grid)

    abs_w = np.abs(omega)
    w_sup = float(np.max(abs_w))
    if w_sup > 0.0 and np.isfinite(w_sup):
        scaled = abs_w / w_sup  # overflow-safe evaluation of the p-norms
        omega_lp = {p: w_sup * volume_integral(scaled**p, grid) ** (1.0 / p)
                    for p in (2, 4, 8)}
    else:
        omega_lp = {p: w_sup for p in (2, 4, 8)}

    return DiagnosticsRecord(
        time=time,
        nu_flux=nusselt_flux(temp, grid),
        nu_gradsq=nu_g,
        nu_strip=strips,
        energy=energy,
        enstrophy=enstrophy,
        grad_u_sq=velocity_gradient_integrals(u1, u2, grid),
        boundary_friction=boundary_friction_integral(u1, u2, grid, bottom, top),
        kappa_friction=boundary_friction_integral(u1, u2, grid, bottom, top, weight="kappa"),
        ak_friction=boundary_friction_integral(u1, u2, grid, bottom, top, weight="a+k"),
        buoyancy_flux=ra * volume_integral(temp * u2, grid),
        temp_min=float(np.min(temp)),
        temp_max=float(np.max(temp)),
        convective_transport=convective,
        heat_content=volume_integral((1.0 - grid.x2)[None, :] * temp, grid),
        enstrophy_terms=ens_terms,
        pressure_defect=pressure_defect,
        grad_theta_sq=gts,
        theta_u_grad_eta=tue,
        theta_sq=tsq,
        omega_lp=omega_lp,
    )


@dataclass
class AverageStat:
    mean: float
    tail_max: float
    n_samples: int
    t_start: float
    t_end: float


class Recorder:
    """Accumulates records, maintains post-burn-in running means and tail stats.

    The limiting long-time average is approximated by the arithmetic mean of
    samples with t >= burn_in; the max over the trailing half of that window
    is reported alongside so a non-converged average is visible.

    For the balance and inequality checks the finite-window averages are
    corrected by the exact endpoint (budget) terms of the corresponding
    evolution identities, so the estimators converge at the discretization
    error instead of O(1/T_window):

      * heat transport: mean(u2 T - d2 T) picks up  [H(t1)-H(t0)]/(T |O|)
        with H = int (1-x2) T  (exact for flat walls);
      * kinetic energy: the window mean of Ra int T u2 equals the mean of
        ||grad u||^2 + friction plus  [E(t1)-E(t0)]/(2 Pr T);
      * enstrophy: the five-term sum picks up  [Z(t1)-Z(t0)]/(Pr-weighted)
        with Z = ||w||^2/(2 Pr) + int (a+k) u_tau^2 / Pr;
      * background identity: the eta/theta representation picks up
        [|theta|^2(t1) - |theta|^2(t0)]/(T |O|).
    """

    def __init__(self, burn_in: float, pr: float, area: float, height_range: float = 0.0,
                 ra: float = 0.0, is_flat: bool = True,
                 grad_eta_sq: float | None = None):
        self.burn_in = burn_in
        self.pr = pr
        self.ra = ra
        self.area = area
        self.height_range = height_range
        self.is_flat = is_flat
        self.grad_eta_sq = grad_eta_sq
        self.records: list[DiagnosticsRecord] = []

    def add(self, record: DiagnosticsRecord) -> None:
        self.records.append(record)

    # -- averaging ---------------------------------------------------------

    def _series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([r.time for r in self.records])
        if name.startswith("nu_strip_"):
            i = STRIP_LEVELS.index(float(name.split("_")[-1]) / 100.0)
            v = np.array([r.nu_strip[i] for r in self.records])
        elif name.startswith("ens:"):
            key = name.split(":", 1)[1]
            v = np.array([r.enstrophy_terms[key] for r in self.records])
        elif name.startswith("omega_l"):
            p = int(name.split("omega_l")[1])
            v = np.array([r.omega_lp.get(p, float("nan")) for r in self.records])
        else:
            v = np.array([getattr(r, name) for r in self.records])
        return t, v

    def average(self, name: str) -> AverageStat:
        t, v = self._series(name)
        sel = t >= self.burn_in
        if not np.any(sel):
            sel = np.ones_like(t, dtype=bool)  # nothing past burn-in yet
        t, v = t[sel], v[sel]
        ok = np.isfinite(v)
        if not np.any(ok):
            return AverageStat(float("nan"), float("nan"), 0, float("nan"), float("nan"))
        t, v = t[ok], v[ok]
        tail = v[t >= 0.5 * (t[0] + t[-1])] if v.size > 1 else v
        return AverageStat(float(np.mean(v)), float(np.max(tail)), v.size, float(t[0]), float(t[-1]))

    def averages(self) -> dict:
        names = ["nu_flux", "nu_gradsq", "nu_strip_25", "nu_strip_50", "nu_strip_75",
                 "energy", "enstrophy", "grad_u_sq", "boundary_friction", "kappa_friction",
                 "ak_friction", "buoyancy_flux", "convective_transport",
                 "grad_theta_sq", "theta_u_grad_eta"]
        out = {n: self.average(n).mean for n in names}
        for key in ENSTROPHY_TERM_NAMES:
            out[f"ens:{key}"] = self.average(f"ens:{key}").mean
        return out

    # -- endpoint-corrected window estimators --------------------------------

    def _window(self) -> list[DiagnosticsRecord]:
        recs = [r for r in self.records if r.time >= self.burn_in]
        return recs if recs else self.records

    def _window_span(self) -> tuple[DiagnosticsRecord, DiagnosticsRecord, float]:
        recs = self._window()
        first, last = recs[0], recs[-1]
        return first, last, max(last.time - first.time, 0.0)

    def convective_transport_corrected(self) -> float:
        """Drift-free estimator of the long-time <(u2 - d2) T>."""
        first, last, span = self._window_span()
        raw = self.average("convective_transport").mean
        if span == 0.0 or not self.is_flat:
            return raw  # rough walls: the inequality carries genuine slack
        return raw + (last.heat_content - first.heat_content) / (span * self.area)

    def nusselt_inequality_defect(self) -> float:
        """nu_flux - <(u2 - d2) T>/(1 + max h - min h); negative = violation."""
        nu = self.average("nu_flux").mean
        return nu - self.convective_transport_corrected() / (1.0 + self.height_range)

    def energy_inequality_slack(self) -> tuple[float, float]:
        """(relative slack, scale) of the averaged energy inequality.

        Positive slack means <|grad u|^2> + <(2a+k) u_tau^2> stays below
        Ra((1 + max h - min h) Nu - 1); the left side carries the exact
        kinetic-energy and (flat) heat-content endpoint corrections.
        """
        first, last, span = self._window_span()
        nu = self.average("nu_flux").mean
        lhs = self.average("grad_u_sq").mean + self.average("boundary_friction").mean
        if span > 0.0:
            lhs += (last.energy - first.energy) / (2.0 * self.pr * span)
            if self.is_flat:
                lhs += self.ra * (last.heat_content - first.heat_content) / span
        rhs = self.ra * ((1.0 + self.height_range) * nu - 1.0) * self.area
        scale = max(abs(rhs), 1.0)
        return (rhs - lhs) / scale, scale

    def nu_eta_corrected(self) -> float:
        """Heat transport from the background/fluctuation representation."""
        if self.grad_eta_sq is None:
            return float("nan")
        first, last, span = self._window_span()
        nu = (self.grad_eta_sq - self.average("grad_theta_sq").mean
              - 2.0 * self.average("theta_u_grad_eta").mean)
        if span > 0.0 and np.isfinite(first.theta_sq) and np.isfinite(last.theta_sq):
            nu -= (last.theta_sq - first.theta_sq) / (span * self.area)
        return nu

    # -- residuals ---------------------------------------------------------

    def _energy_residuals(self) -> np.ndarray:
        n = len(self.records)
        res = np.full(n, np.nan)
        if n < 2:
            return res
        t = np.array([r.time for r in self.records])
        e = np.array([r.energy for r in self.records])
        dedt = np.gradient(e, t)
        for i, r in enumerate(self.records):
            lhs = dedt[i] / (2.0 * self.pr) + r.grad_u_sq + r.boundary_friction
            scale = max(abs(r.buoyancy_flux), abs(r.grad_u_sq), 1.0)
            res[i] = (lhs - r.buoyancy_flux) / scale
        return res

    def _enstrophy_residuals(self) -> np.ndarray:
        """Residual of the running post-burn-in means of the five terms.

        The running sum carries the exact evolution endpoint term
        [Z(t_i) - Z(t_first)]/(span |O|) with Z = ||w||^2/(2Pr)
        + int (a+k) u_tau^2 / Pr, so it converges at the discretization
        error.  Before any post-burn-in sample exists the mean runs from
        the start, so early rows are still populated.
        """
        n = len(self.records)
        res = np.full(n, np.nan)
        if n == 0:
            return res
        t = np.array([r.time for r in self.records])
        vals = np.array([[r.enstrophy_terms[k] for k in ENSTROPHY_TERM_NAMES]
                         for r in self.records])
        z = np.array([r.enstrophy / (2.0 * self.pr) + r.ak_friction / self.pr
                      for r in self.records])
        finite = np.all(np.isfinite(vals), axis=1)
        for i in range(n):
            sel = (t[: i + 1] >= self.burn_in) & finite[: i + 1]
            if not np.any(sel):
                sel = finite[: i + 1]
            if not np.any(sel):
                continue
            idx = np.flatnonzero(sel)
            means = vals[idx].mean(axis=0)
            total = float(np.sum(means))
            span = t[idx[-1]] - t[idx[0]]
            if span > 0.0:
                total += (z[idx[-1]] - z[idx[0]]) / (span * self.area)
            scale = max(float(np.max(np.abs(means))), 1e-300)
            res[i] = total / scale
        return res

    def finalize(self) -> None:
        e_res = self._energy_residuals()
        s_res = self._enstrophy_residuals()
        for i, r in enumerate(self.records):
            r.energy_residual = float(e_res[i])
            r.enstrophy_residual = float(s_res[i])

    # -- output ------------------------------------------------------------

    def write_csv(self, path, precision: int = 17) -> None:
        fmt = f"{{:.{precision}g}}"
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in self.records:
                cols = [r.time, r.nu_flux, r.nu_gradsq, *r.nu_strip,
                        r.energy, r.enstrophy, r.grad_u_sq, r.boundary_friction,
                        r.buoyancy_flux, r.energy_residual, r.enstrophy_residual,
                        r.temp_min, r.temp_max]
                fh.write(",".join(fmt.format(c) for c in cols) + "\n")

    # -- derived checks ----------------------------------------------------

    def mean_abs_energy_residual(self) -> float:
        t = np.array([r.time for r in self.records])
        res = np.array([r.energy_residual for r in self.records])
        sel = (t >= self.burn_in) & np.isfinite(res)
        # end samples carry one-sided d/dt stencils; they are still included
        return float(np.mean(np.abs(res[sel]))) if np.any(sel) else float("nan")

    def final_enstrophy_residual(self) -> float:
        res = [r.enstrophy_residual for r in self.records if np.isfinite(r.enstrophy_residual)]
        return abs(res[-1]) if res else float("nan")
