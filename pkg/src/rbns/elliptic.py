"""Elliptic solves on the flattened grid.

Three problems back the time stepper and the pressure recovery:

  * Dirichlet Poisson      -L u = -rhs        with given wall traces
  * Dirichlet Helmholtz    (I - c L) u = rhs  with given wall traces, c > 0
  * Neumann Poisson         L p = rhs         with given physical conormal
                                              fluxes n.grad(p), mean-zero p

where L is the mapped divergence-form Laplacian of :mod:`rbns.grid`.  On a
flat grid every problem decouples into per-x1-Fourier-mode tridiagonal
systems and is solved directly.  On rough grids the interior operator is
symmetric positive definite (the coefficient matrix has unit determinant),
and we run preconditioned conjugate gradients with the flat-metric direct
solve (mean x2 coefficient) as the preconditioner.

The Neumann problem is discretized from the Dirichlet energy on x2 cell
faces (gradient components averaged/differenced to face midpoints), which
makes the operator symmetric positive semidefinite with constants as its
kernel by construction; the right-hand side is projected onto the
compatible subspace and the projection defect reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rbns.grid import MappedGrid, d_x1, d2_x1, volume_integral


class EllipticError(RuntimeError):
    """Iterative solve failed to reach tolerance within the iteration cap."""

    def __init__(self, message: str, iterations: int, rel_residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.rel_residual = rel_residual


@dataclass
class SolveInfo:
    iterations: int
    rel_residual: float
    method: str
    compat_defect: float = 0.0


def default_maxiter(grid: MappedGrid) -> int:
    return int(10 * grid.n2 * np.sqrt(grid.n1))


# ---------------------------------------------------------------------------
# vectorized symmetric tridiagonal solves (one system per x1 mode)
# ---------------------------------------------------------------------------

def _thomas_factor(diag: np.ndarray, off) -> tuple[np.ndarray, np.ndarray]:
    """LU factors of tridiagonal systems with constant off-diagonal per mode.

    diag has shape (m, n); off is scalar or (m, 1)-broadcastable.  Returns
    (denom, w) with denom the pivot array and w the elimination multipliers.
    """
    m, n = diag.shape
    off = np.broadcast_to(np.asarray(off, dtype=float), (m, 1))
    denom = np.empty_like(diag)
    w = np.empty((m, n - 1))
    denom[:, 0] = diag[:, 0]
    for j in range(1, n):
        w[:, j - 1] = off[:, 0] / denom[:, j - 1]
        denom[:, j] = diag[:, j] - off[:, 0] * w[:, j - 1]
    return denom, w


def _thomas_solve(denom: np.ndarray, w: np.ndarray, off, rhs: np.ndarray) -> np.ndarray:
    m, n = denom.shape
    off = np.broadcast_to(np.asarray(off, dtype=float), (m, 1))
    x = np.empty_like(rhs)
    x[:, 0] = rhs[:, 0]
    for j in range(1, n):
        x[:, j] = rhs[:, j] - w[:, j - 1] * x[:, j - 1]
    x[:, -1] = x[:, -1] / denom[:, -1]
    for j in range(n - 2, -1, -1):
        x[:, j] = (x[:, j] - off[:, 0] * x[:, j + 1]) / denom[:, j]
    return x


# ---------------------------------------------------------------------------
# interior Dirichlet operators
# ---------------------------------------------------------------------------

def _interior_apply(f_full: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Mapped Laplacian at interior rows, given a full array with wall rows set.

    Only interior (centered) stencils are used; wall rows of f_full enter as
    data.  Returns shape (n1, n2-2).
    """
    dx2 = grid.dx2
    fz = (f_full[:, 2:] - f_full[:, :-2]) / (2.0 * dx2)           # interior rows
    out = d2_x1(f_full, grid)[:, 1:-1]
    out += grid.a22[:, None] * (f_full[:, 2:] - 2.0 * f_full[:, 1:-1] + f_full[:, :-2]) / dx2**2
    if not grid.is_flat:
        hp = grid.hp[:, None]
        out += d_x1(-hp * fz, grid)                               # dx1(-h' dx2 f)
        g = -hp * d_x1(f_full, grid)                              # -h' dx1 f, all rows
        out += (g[:, 2:] - g[:, :-2]) / (2.0 * dx2)               # dx2(...)
    return out


def _embed(v_int: np.ndarray, grid: MappedGrid) -> np.ndarray:
    full = np.zeros(grid.shape)
    full[:, 1:-1] = v_int
    return full


def _boundary_only(bottom: np.ndarray, top: np.ndarray, grid: MappedGrid) -> np.ndarray:
    full = np.zeros(grid.shape)
    full[:, 0] = bottom
    full[:, -1] = top
    return full


# ---------------------------------------------------------------------------
# flat-metric direct solves (also the rough-case preconditioners)
# ---------------------------------------------------------------------------

class _FlatDirichlet:
    """Per-mode tridiagonal factors for (sigma*I - c*(Dxx + a*Dzz)) on interior rows.

    sigma=0, c=1 gives the Poisson operator -L; sigma=1 the Helmholtz one.
    ``a`` is the (constant) x2 coefficient: 1 on truly flat grids, the mean
    of 1+h'^2 when used as a rough-grid preconditioner.
    """

    def __init__(self, grid: MappedGrid, c: float, sigma: float, a: float = 1.0):
        self.grid = grid
        self.c = c
        self.sigma = sigma
        self.a = a
        nz = grid.n2 - 2
        diag = sigma + c * (grid.k2[:, None] + 2.0 * a / grid.dx2**2) * np.ones((grid.k2.size, nz))
        self.off = -c * a / grid.dx2**2
        self.denom, self.w = _thomas_factor(diag, self.off)

    def solve_modes(self, rhs_int: np.ndarray) -> np.ndarray:
        """rhs_int (n1, n2-2) real -> solution on interior rows."""
        rhat = np.fft.rfft(rhs_int, axis=0)
        xhat = _thomas_solve(self.denom, self.w, self.off, rhat)
        return np.fft.irfft(xhat, n=self.grid.n1, axis=0)


def _dirichlet_rhs(c: float, sigma: float, rhs_int: np.ndarray,
                   bottom: np.ndarray, top: np.ndarray, grid: MappedGrid) -> np.ndarray:
    """Move the Dirichlet data into the right-hand side of (sigma*I - c*L)."""
    bdata = _boundary_only(bottom, top, grid)
    return rhs_int + c * _interior_apply(bdata, grid)


# ---------------------------------------------------------------------------
# PCG
# ---------------------------------------------------------------------------

def _pcg(apply_a, apply_m, b: np.ndarray, x0: np.ndarray | None,
         tol: float, maxiter: int, name: str) -> tuple[np.ndarray, SolveInfo]:
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0, "pcg")
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply_a(x)
    z = apply_m(r)
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        alpha = rz / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= tol:
            return x, SolveInfo(it, rel, "pcg")
        z = apply_m(r)
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise EllipticError(f"{name}: PCG did not reach {tol:g} in {maxiter} iterations "
                        f"(residual {rel:.3e})", maxiter, rel)


# ---------------------------------------------------------------------------
# Dirichlet / Helmholtz front ends
# ---------------------------------------------------------------------------

class HelmholtzDirichlet:
    """Solver for (I - c L) u = rhs with Dirichlet wall traces (c >= 0).

    With c=None the operator is the Poisson one (-L u = -rhs).  Instances
    cache the per-mode factorizations, so reuse them across time steps.
    """

    def __init__(self, grid: MappedGrid, c: float | None, tol: float = 1e-10,
                 maxiter: int | None = None):
        self.grid = grid
        self.c = c
        self.tol = tol
        self.maxiter = maxiter if maxiter is not None else default_maxiter(grid)
        sigma = 0.0 if c is None else 1.0
        ceff = 1.0 if c is None else c
        self._sigma, self._ceff = sigma, ceff
        a_pre = 1.0 if grid.is_flat else float(np.mean(grid.a22))
        self._flat = _FlatDirichlet(grid, ceff, sigma, a_pre)

    def _apply(self, v_int: np.ndarray) -> np.ndarray:
        out = -self._ceff * _interior_apply(_embed(v_int, self.grid), self.grid)
        if self._sigma:
            out += v_int
        return out

    def solve(self, rhs_int: np.ndarray, bottom: np.ndarray, top: np.ndarray,
              x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
        """Returns the full-field solution (wall rows set to the given traces)."""
        grid = self.grid
        b = _dirichlet_rhs(self._ceff, self._sigma, rhs_int, bottom, top, grid)
        if grid.is_flat:
            u_int = self._flat.solve_modes(b)
            info = SolveInfo(1, 0.0, "direct")
        else:
            u_int, info = _pcg(self._apply, self._flat.solve_modes, b,
                               x0[:, 1:-1] if x0 is not None and x0.shape == grid.shape else x0,
                               self.tol, self.maxiter, "helmholtz" if self._sigma else "poisson")
        full = np.empty(grid.shape)
        full[:, 1:-1] = u_int
        full[:, 0] = bottom
        full[:, -1] = top
        return full, info


def solve_poisson_dirichlet(rhs: np.ndarray, bottom, top, grid: MappedGrid,
                            tol: float = 1e-10, maxiter: int | None = None,
                            x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
    """Solve L u = rhs with Dirichlet traces; rhs given at interior nodes.

    rhs may be a full (n1, n2) array (wall rows ignored) or (n1, n2-2).
    """
    rhs_int = rhs[:, 1:-1] if rhs.shape == grid.shape else rhs
    bottom = np.broadcast_to(np.asarray(bottom, dtype=float), (grid.n1,))
    top = np.broadcast_to(np.asarray(top, dtype=float), (grid.n1,))
    solver = HelmholtzDirichlet(grid, None, tol, maxiter)
    # -L u = -rhs
    return solver.solve(-rhs_int, bottom, top, x0)


def solve_helmholtz_dirichlet(c: float, rhs: np.ndarray, bottom, top, grid: MappedGrid,
                              tol: float = 1e-10, maxiter: int | None = None,
                              x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
    rhs_int = rhs[:, 1:-1] if rhs.shape == grid.shape else rhs
    bottom = np.broadcast_to(np.asarray(bottom, dtype=float), (grid.n1,))
    top = np.broadcast_to(np.asarray(top, dtype=float), (grid.n1,))
    solver = HelmholtzDirichlet(grid, c, tol, maxiter)
    return solver.solve(rhs_int, bottom, top, x0)


# ---------------------------------------------------------------------------
# Neumann Poisson (mean-zero pressure)
# ---------------------------------------------------------------------------

class PoissonNeumann:
    """L p = rhs with physical conormal fluxes n.grad(p) given on the walls.

    Discretized from the Dirichlet energy on x2 cell faces: gradient
    components are averaged (x1) / differenced (x2) to face midpoints, so
    the assembled operator is A = G^T C G, symmetric positive semidefinite
    with ker A = constants.  The weak right-hand side is

        b = -W rhs + dx1 * sqrt(1+h'^2) * flux     (flux rows only),

    where W are trapezoid node weights; b is projected orthogonal to the
    kernel and the projection defect reported.  The solution is returned
    with zero volume mean.
    """

    def __init__(self, grid: MappedGrid, tol: float = 1e-10, maxiter: int | None = None):
        self.grid = grid
        self.tol = tol
        self.maxiter = maxiter if maxiter is not None else default_maxiter(grid)
        self._build_flat_factors()

    # face-scheme operator -------------------------------------------------
    def apply(self, p: np.ndarray) -> np.ndarray:
        grid = self.grid
        dxp = d_x1(p, grid)
        gx = 0.5 * (dxp[:, 1:] + dxp[:, :-1])
        gz = (p[:, 1:] - p[:, :-1]) / grid.dx2
        if grid.is_flat:
            q1, q2 = gx, gz
        else:
            hp = grid.hp[:, None]
            q1 = gx - hp * gz
            q2 = -hp * gx + grid.a22[:, None] * gz
        # adjoints: Gx^T = -Dx Av^T, Gz^T = difference scatter
        avt = np.zeros(grid.shape)
        avt[:, :-1] += 0.5 * q1
        avt[:, 1:] += 0.5 * q1
        out = -d_x1(avt, grid)
        out[:, :-1] -= q2 / grid.dx2
        out[:, 1:] += q2 / grid.dx2
        return out * (grid.dx1 * grid.dx2)

    # flat per-mode tridiagonal factors -------------------------------------
    def _build_flat_factors(self):
        grid = self.grid
        n2 = grid.n2
        a = 1.0 if grid.is_flat else float(np.mean(grid.a22))
        self._a_pre = a
        scale = grid.dx1 * grid.dx2
        # Av^T Av: diag 1/2 interior, 1/4 ends; off 1/4.
        avd = np.full(n2, 0.5)
        avd[0] = avd[-1] = 0.25
        # Gz^T Gz: diag 2/dx2^2 interior, 1/dx2^2 ends; off -1/dx2^2.
        gzd = np.full(n2, 2.0 / grid.dx2**2)
        gzd[0] = gzd[-1] = 1.0 / grid.dx2**2
        # Same x1 symbol as apply(): the skew derivative zeroes the Nyquist
        # mode, so that mode is singular in x2 exactly like k = 0.
        kk = np.abs(grid.ik_d1) ** 2
        self._singular = np.flatnonzero(kk == 0.0)
        regular = np.flatnonzero(kk > 0.0)
        self._regular = regular
        diag = scale * (kk[:, None] * avd[None, :] + a * gzd[None, :])
        off = scale * (kk * 0.25 - a / grid.dx2**2)
        self._denom, self._w = _thomas_factor(diag[regular], off[regular, None])
        self._off = off[regular, None]
        # singular modes: pure a*Gz^T Gz system with node 0 pinned
        d_sing = diag[self._singular[0], 1:]
        self._denom_s, self._w_s = _thomas_factor(d_sing[None, :], off[self._singular[0]])
        self._off_s = off[self._singular[0]]

    def _flat_solve(self, b: np.ndarray) -> np.ndarray:
        """Exact flat-operator solve on the compatible subspace, mean-zero result."""
        grid = self.grid
        bhat = np.fft.rfft(b, axis=0)
        xhat = np.zeros_like(bhat)
        xhat[self._regular] = _thomas_solve(self._denom, self._w, self._off, bhat[self._regular])
        for m in self._singular:
            # project onto the compatible subspace, pin node 0, recenter
            rhs = bhat[m] - np.mean(bhat[m])
            xs = np.zeros(grid.n2, dtype=complex)
            xs[1:] = _thomas_solve(self._denom_s, self._w_s, self._off_s, rhs[1:][None, :])[0]
            xhat[m] = xs - np.mean(xs)
        return np.fft.irfft(xhat, n=grid.n1, axis=0)

    # front end --------------------------------------------------------------
    def solve(self, rhs: np.ndarray, flux_bottom, flux_top,
              x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
        grid = self.grid
        flux_bottom = np.broadcast_to(np.asarray(flux_bottom, dtype=float), (grid.n1,))
        flux_top = np.broadcast_to(np.asarray(flux_top, dtype=float), (grid.n1,))
        b = -(rhs * grid.w2[None, :]) * grid.dx1
        b[:, 0] += grid.dx1 * grid.ds_weight * flux_bottom
        b[:, -1] += grid.dx1 * grid.ds_weight * flux_top
        # compatibility: project out the kernel component and report it
        defect = float(np.sum(b))
        scale = float(np.sum(np.abs(b)))
        b -= defect / b.size
        rel_defect = abs(defect) / scale if scale > 0 else 0.0
        if grid.n1 % 2 == 0:
            # the skew x1 derivative zeroes the Nyquist mode, leaving a second
            # (non-physical) kernel vector: alternating in x1, constant in x2
            v2 = np.empty(grid.n1)
            v2[0::2], v2[1::2] = 1.0, -1.0
            b -= (np.sum(v2[:, None] * b) / b.size) * v2[:, None]

        if grid.is_flat:
            p = self._flat_solve(b)
            info = SolveInfo(1, 0.0, "direct", rel_defect)
        else:
            p, info = _pcg(self.apply, self._flat_solve, b,
                           x0, self.tol, self.maxiter, "neumann")
            info.compat_defect = rel_defect
        p -= volume_integral(p, grid) / grid.area
        return p, info


def solve_poisson_neumann(rhs: np.ndarray, flux_bottom, flux_top, grid: MappedGrid,
                          tol: float = 1e-10, maxiter: int | None = None,
                          x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveInfo]:
    """One-shot Neumann solve; see :class:`PoissonNeumann`."""
    return PoissonNeumann(grid, tol, maxiter).solve(rhs, flux_bottom, flux_top, x0)
