"""Phase-space and state-comparison observables for the mechanical mode.

Conventions. Quadratures are x = (a + a^dag)/sqrt(2), p = -i(a - a^dag)/
sqrt(2), so a coherent state |alpha> sits at (sqrt(2) Re alpha,
sqrt(2) Im alpha) and the vacuum Wigner function is exp(-x^2-p^2)/pi.
The Wigner function is computed from the displaced-parity form

    W(x, p) = (1/pi) Tr[rho D(z) P],   z = sqrt(2) (x + i p),

whose Fock matrix elements reduce to associated Laguerre polynomials.
The evaluation walks the density matrix one off-diagonal at a time and
runs the Laguerre three-term recurrence upward in the lower index with
the Gaussian envelope exp(-|z|^2/2) folded into the seeds; the
sqrt(m!/(m+d)!) prefactors are taken through log-gamma differences.
Both choices keep every intermediate bounded, so the kernel stays
accurate out to n_trunc of 80 and degrades gracefully (underflow to
zero, never overflow) on oversized windows.

A second, deliberately independent evaluator integrates the defining
formula W = (1/pi) int dy <x-y|rho|x+y> exp(2ipy) with Hermite-function
wavefunctions and Simpson quadrature. It is slow and only meant to
cross-check the Laguerre kernel at sample points.

Also here: Uhlmann fidelity via Hermitian eigendecompositions, the
scalar series helpers (mean phonon number, parity, purity), Wigner
negativity volume, grid peak finding, and a best-fit cat-state search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import ConfigError, InvalidStateError, ShapeError, TruncationError
from .operators import cat_state

__all__ = [
    "WignerGrid",
    "WindowWarning",
    "CatFit",
    "wigner",
    "wigner_direct",
    "uhlmann_fidelity",
    "mean_phonon",
    "parity_expectation",
    "purity",
    "negativity_volume",
    "local_maxima",
    "marginal",
    "marginal_peaks",
    "best_fit_cat",
]

# Boundary-to-peak ratio above which the window is considered too small
# for the state it holds.
WINDOW_LEAK_REL = 1e-4
# Largest imaginary residue tolerated (relative to the real peak) before
# the input is rejected as non-Hermitian.
IMAG_RESIDUE_REL = 1e-12
# Off-diagonals whose largest entry falls below this fraction of the
# matrix peak contribute nothing at double precision and are skipped.
DIAGONAL_SKIP_REL = 1e-17
# Sample density of the direct-integration cross-check, in quadrature
# points per period of the fastest oscillation under the integral.
DIRECT_POINTS_PER_CYCLE = 48.0


class WindowWarning(UserWarning):
    """The requested phase-space window clips visible state weight."""


# --------------------------------------------------------------------------
# grid container
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular quadrature window.

    values[i, j] = W(x[i], p[j]); the normalization convention makes the
    plain Riemann sum of values * dx * dp approach 1 for states well
    inside the window.
    """

    x_min: float
    x_max: float
    p_min: float
    p_max: float
    n_x: int
    n_p: int
    values: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x_min", "x_max", "p_min", "p_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"grid bound {name} must be finite, got {v}")
        if not self.x_min < self.x_max:
            raise ConfigError(
                f"need x_min < x_max, got [{self.x_min}, {self.x_max}]"
            )
        if not self.p_min < self.p_max:
            raise ConfigError(
                f"need p_min < p_max, got [{self.p_min}, {self.p_max}]"
            )
        for name in ("n_x", "n_p"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise ConfigError(f"{name} must be an integer >= 2, got {n!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n_x, self.n_p):
            raise ShapeError(
                f"values shape {vals.shape} does not match grid "
                f"({self.n_x}, {self.n_p})"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidStateError("Wigner grid contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    def riemann_norm(self) -> float:
        """Plain Riemann-sum estimate of the phase-space integral."""
        return float(np.sum(self.values) * self.dx * self.dp)


# --------------------------------------------------------------------------
# Laguerre-kernel Wigner evaluation
# --------------------------------------------------------------------------


def _check_mech_state(rho: np.ndarray, where: str) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"{where} expects a square matrix, got {rho.shape}")
    if rho.shape[0] < 1:
        raise ShapeError(f"{where} got an empty matrix")
    if not np.all(np.isfinite(rho.view(float))):
        raise InvalidStateError(f"{where} got non-finite matrix entries")
    return rho


def wigner(
    rho: np.ndarray,
    x_min: float = -5.0,
    x_max: float = 5.0,
    p_min: float = -5.0,
    p_max: float = 5.0,
    n_x: int = 201,
    n_p: int = 201,
    check_window: bool = True,
) -> WignerGrid:
    """Evaluate the Wigner function of a mechanical density matrix.

    The sum over the density matrix is organized by off-diagonal offset d:

        Tr[rho D(z) P] = sum_d z^d S1_d(u) + conj(z)^d S2_d(u),  u = |z|^2,

    where S1/S2 collect (-1)^m sqrt(m!/(m+d)!) L_m^(d)(u) exp(-u/2)
    against rho[m, m+d] and rho[m+d, m]. For a Hermitian input the two
    halves are conjugate and the imaginary parts cancel to rounding; the
    residue is checked before it is discarded. Offsets with no weight
    above DIAGONAL_SKIP_REL of the matrix peak are skipped, so banded
    states (cats, squeezed states) cost about half the dense work.

    A warning is issued when the boundary carries more than
    WINDOW_LEAK_REL of the peak, meaning the window crops the state.
    """
    rho = _check_mech_state(rho, "wigner")
    dim = rho.shape[0]

    if n_x < 2 or n_p < 2:
        raise ConfigError(f"grid needs n_x, n_p >= 2, got ({n_x}, {n_p})")
    x = np.linspace(x_min, x_max, n_x)
    p = np.linspace(p_min, p_max, n_p)

    X = x[:, None]
    P = p[None, :]
    z = math.sqrt(2.0) * (X + 1j * P)
    u = 2.0 * (X * X + P * P)
    env = np.exp(-0.5 * u)

    scale = float(np.max(np.abs(rho)))
    skip_floor = DIAGONAL_SKIP_REL * scale
    lg = gammaln(np.arange(dim + 1, dtype=float) + 1.0)  # lg[k] = log k!

    acc = np.zeros(z.shape, dtype=complex)
    zpow = np.ones_like(z)

    for d in range(dim):
        if d > 0:
            zpow = zpow * z
        upper = np.diagonal(rho, offset=d)
        lower = np.diagonal(rho, offset=-d)
        if max(np.max(np.abs(upper)), np.max(np.abs(lower))) <= skip_floor:
            continue
        # c_m = sqrt(m!/(m+d)!) with alternating sign folded in
        m = np.arange(dim - d, dtype=float)
        coef = np.exp(0.5 * (lg[: dim - d] - lg[d:dim])) * (-1.0) ** m
        s_up = complex(coef[0] * upper[0]) * env
        s_lo = complex(coef[0] * lower[0]) * env
        if dim - d > 1:
            lag_prev = env
            lag_curr = (1.0 + d - u) * env
            s_up = s_up + complex(coef[1] * upper[1]) * lag_curr
            s_lo = s_lo + complex(coef[1] * lower[1]) * lag_curr
            for k in range(1, dim - d - 1):
                lag_next = (
                    (2.0 * k + d + 1.0 - u) * lag_curr
                    - (k + d) * lag_prev
                ) / (k + 1.0)
                lag_prev, lag_curr = lag_curr, lag_next
                s_up = s_up + complex(coef[k + 1] * upper[k + 1]) * lag_curr
                s_lo = s_lo + complex(coef[k + 1] * lower[k + 1]) * lag_curr
        if d == 0:
            # the two halves are the same diagonal; count it once
            acc += s_up
        else:
            acc += zpow * s_up + np.conj(zpow) * s_lo

    acc /= math.pi
    peak = float(np.max(np.abs(acc.real)))
    resid = float(np.max(np.abs(acc.imag)))
    if resid > IMAG_RESIDUE_REL * max(peak, 1.0 / math.pi):
        raise InvalidStateError(
            "Wigner values came out complex (imaginary residue "
            f"{resid:.3e} against peak {peak:.3e}); the input matrix is "
            "not Hermitian"
        )
    values = np.ascontiguousarray(acc.real)

    grid = WignerGrid(
        x_min=float(x_min),
        x_max=float(x_max),
        p_min=float(p_min),
        p_max=float(p_max),
        n_x=int(n_x),
        n_p=int(n_p),
        values=values,
    )
    if check_window and peak > 0.0:
        edge = max(
            float(np.max(np.abs(values[0, :]))),
            float(np.max(np.abs(values[-1, :]))),
            float(np.max(np.abs(values[:, 0]))),
            float(np.max(np.abs(values[:, -1]))),
        )
        if edge > WINDOW_LEAK_REL * peak:
            warnings.warn(
                f"phase-space window [{x_min}, {x_max}] x [{p_min}, "
                f"{p_max}] clips the state: boundary weight {edge:.3e} "
                f"exceeds {WINDOW_LEAK_REL:.0e} of the peak {peak:.3e}",
                WindowWarning,
                stacklevel=2,
            )
    return grid


# --------------------------------------------------------------------------
# direct-integration cross-check
# --------------------------------------------------------------------------


def _hermite_functions(y: np.ndarray, dim: int) -> np.ndarray:
    """Oscillator eigenfunctions psi_n(y), n = 0..dim-1, rows over n.

    Upward recurrence on the normalized functions,
    psi_{n+1} = sqrt(2/(n+1)) y psi_n - sqrt(n/(n+1)) psi_{n-1},
    which is stable and keeps the Gaussian envelope attached.
    """
    out = np.empty((dim, y.size), dtype=float)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * y * y)
    if dim > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for n in range(1, dim - 1):
        out[n + 1] = (
            math.sqrt(2.0 / (n + 1)) * y * out[n]
            - math.sqrt(n / (n + 1.0)) * out[n - 1]
        )
    return out


def wigner_direct(rho: np.ndarray, points) -> np.ndarray:
    """Integrate the defining formula at a few phase-space points.

    W(x, p) = (1/pi) int dy <x-y|rho|x+y> exp(2ipy), with the position
    wavefunctions built by Hermite recurrence and the y integral done by
    composite Simpson on a window wide enough to contain every
    eigenfunction present plus a Gaussian-decay pad. Quadratic in the
    Hilbert dimension per point, so use it for spot checks only.
    """
    rho = _check_mech_state(rho, "wigner_direct")
    dim = rho.shape[0]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeError(
            f"points must be (n, 2) pairs of (x, p), got {pts.shape}"
        )

    support = math.sqrt(2.0 * dim + 1.0)
    out = np.empty(pts.shape[0], dtype=complex)
    for k, (xv, pv) in enumerate(pts):
        half = abs(xv) + support + 6.0
        # fastest angular rate under the integral: the Fourier phase 2|p|
        # plus the local wavenumber of the highest eigenfunction pair
        rate = 2.0 * abs(pv) + 2.0 * support
        step = 2.0 * math.pi / (DIRECT_POINTS_PER_CYCLE * rate)
        n_half = max(200, int(math.ceil(half / step)))
        y = np.linspace(-half, half, 2 * n_half + 1)
        psi_m = _hermite_functions(xv - y, dim)
        psi_p = _hermite_functions(xv + y, dim)
        f = np.einsum("mk,mn,nk->k", psi_m, rho, psi_p, optimize=True)
        out[k] = simpson(f * np.exp(2j * pv * y), x=y) / math.pi

    peak = float(np.max(np.abs(out.real)))
    resid = float(np.max(np.abs(out.imag)))
    if resid > 1e-9 * max(peak, 1.0 / math.pi):
        raise InvalidStateError(
            "direct Wigner integral came out complex (residue "
            f"{resid:.3e}); the input matrix is not Hermitian"
        )
    return out.real


# --------------------------------------------------------------------------
# scalar observables
# --------------------------------------------------------------------------


def mean_phonon(rho: np.ndarray) -> float:
    """<a^dag a> from the number-basis diagonal."""
    rho = _check_mech_state(rho, "mean_phonon")
    diag = np.real(np.diagonal(rho))
    return float(diag @ np.arange(rho.shape[0], dtype=float))


def parity_expectation(rho: np.ndarray) -> float:
    """<(-1)^n> from the number-basis diagonal (exact diagonal formula)."""
    rho = _check_mech_state(rho, "parity_expectation")
    diag = np.real(np.diagonal(rho))
    return float(diag @ (-1.0) ** np.arange(rho.shape[0], dtype=float))


def purity(rho: np.ndarray) -> float:
    """Tr[rho^2]."""
    rho = _check_mech_state(rho, "purity")
    return float(np.real(np.sum(rho * rho.T)))


# --------------------------------------------------------------------------
# Uhlmann fidelity
# --------------------------------------------------------------------------


def _psd_eigh(rho: np.ndarray, where: str, eig_floor: float) -> tuple:
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    if w[0] < eig_floor:
        raise InvalidStateError(
            f"{where} is not positive semidefinite: min eigenvalue "
            f"{w[0]:.3e} below floor {eig_floor:.0e}"
        )
    return np.clip(w, 0.0, None), v


def uhlmann_fidelity(
    rho: np.ndarray,
    sigma: np.ndarray,
    squared: bool = True,
    eig_floor: float = -1e-7,
) -> float:
    """State overlap (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Pass squared=False for the unsquared trace norm itself. Evaluated as
    the nuclear norm of sqrt(rho) sqrt(sigma), which equals the textbook
    form but treats both arguments identically, so the result is
    symmetric to rounding accuracy and exactly 1 for identical inputs.
    Hermiticity is restored by symmetrizing before the
    eigendecompositions; inputs with an eigenvalue below eig_floor are
    rejected, and tiny negatives above the floor are clipped to zero.
    """
    rho = _check_mech_state(rho, "uhlmann_fidelity")
    sigma = _check_mech_state(sigma, "uhlmann_fidelity")
    if rho.shape != sigma.shape:
        raise ShapeError(
            f"fidelity needs equal dimensions, got {rho.shape} and "
            f"{sigma.shape}"
        )
    w, v = _psd_eigh(rho, "first fidelity argument", eig_floor)
    ws, vs = _psd_eigh(sigma, "second fidelity argument", eig_floor)
    root_r = (v * np.sqrt(w)) @ v.conj().T
    root_s = (vs * np.sqrt(ws)) @ vs.conj().T
    sv = np.linalg.svd(root_r @ root_s, compute_uv=False)
    total = float(np.sum(sv))
    return total * total if squared else total


# --------------------------------------------------------------------------
# grid analysis
# --------------------------------------------------------------------------


def negativity_volume(grid: WignerGrid) -> float:
    """Riemann sum of the negative part, sum max(0, -W) dx dp."""
    neg = np.where(grid.values < 0.0, -grid.values, 0.0)
    return float(np.sum(neg) * grid.dx * grid.dp)


def local_maxima(
    grid: WignerGrid, floor_rel: float = 0.05
) -> list[tuple[float, float, float]]:
    """Interior grid points strictly above all 8 neighbours.

    Only peaks above floor_rel of the global maximum are reported;
    results come back as (x, p, value) sorted by value, largest first.
    """
    if not 0.0 <= floor_rel < 1.0:
        raise ConfigError(f"floor_rel must be in [0, 1), got {floor_rel}")
    w = grid.values
    if w.shape[0] < 3 or w.shape[1] < 3:
        return []
    c = w[1:-1, 1:-1]
    mask = (
        (c > w[:-2, 1:-1])
        & (c > w[2:, 1:-1])
        & (c > w[1:-1, :-2])
        & (c > w[1:-1, 2:])
        & (c > w[:-2, :-2])
        & (c > w[:-2, 2:])
        & (c > w[2:, :-2])
        & (c > w[2:, 2:])
        & (c > floor_rel * np.max(w))
    )
    xi, pi = np.nonzero(mask)
    xs = grid.x
    ps = grid.p
    peaks = [
        (float(xs[i + 1]), float(ps[j + 1]), float(c[i, j]))
        for i, j in zip(xi, pi)
    ]
    peaks.sort(key=lambda t: -t[2])
    return peaks


def marginal(grid: WignerGrid, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature distribution obtained by integrating out the other axis.

    axis="x" returns (x, P(x)) with P(x) = int W(x, p) dp by Riemann sum;
    axis="p" the transpose. Interference fringes of a lobe pair average
    out under the integral, so the marginal along the separation axis
    shows one bump per lobe and nothing else.
    """
    if axis == "x":
        return grid.x, np.sum(grid.values, axis=1) * grid.dp
    if axis == "p":
        return grid.p, np.sum(grid.values, axis=0) * grid.dx
    raise ConfigError(f'marginal axis must be "x" or "p", got {axis!r}')


def marginal_peaks(
    coords: np.ndarray, density: np.ndarray, floor_rel: float = 0.05
) -> list[tuple[float, float]]:
    """Strict interior local maxima of a 1-D distribution.

    Peaks below floor_rel of the global maximum are ignored; returns
    (coordinate, value) pairs sorted by coordinate.
    """
    if not 0.0 <= floor_rel < 1.0:
        raise ConfigError(f"floor_rel must be in [0, 1), got {floor_rel}")
    coords = np.asarray(coords, dtype=float)
    density = np.asarray(density, dtype=float)
    if coords.shape != density.shape or coords.ndim != 1:
        raise ShapeError(
            f"coords and density must be matching 1-D arrays, got "
            f"{coords.shape} and {density.shape}"
        )
    if density.size < 3:
        return []
    c = density[1:-1]
    mask = (
        (c > density[:-2])
        & (c > density[2:])
        & (c > floor_rel * np.max(density))
    )
    idx = np.nonzero(mask)[0] + 1
    return [(float(coords[i]), float(density[i])) for i in idx]


# --------------------------------------------------------------------------
# best-fit cat state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CatFit:
    """Best coherent amplitude for a fixed-parity cat and its overlap."""

    alpha: complex
    fidelity: float
    sign: int


def _cat_overlap(rho: np.ndarray, alpha: complex, sign: int) -> float:
    try:
        psi = cat_state(rho.shape[0], alpha, sign=sign)
    except TruncationError:
        return -1.0
    return float(np.real(np.vdot(psi, rho @ psi)))


def best_fit_cat(
    rho: np.ndarray,
    sign: int = +1,
    scan_points: int = 48,
    phase_points: int = 24,
) -> CatFit:
    """Search for the cat state |alpha> + sign |-alpha> closest to rho.

    Coarse polar scan over amplitude and half-plane phase (a cat is
    invariant under alpha -> -alpha), refined with Nelder-Mead on the
    real and imaginary parts. The figure of merit is the pure-state
    overlap <cat|rho|cat>, which equals the squared Uhlmann fidelity
    when rho is compared against a pure state.
    """
    rho = _check_mech_state(rho, "best_fit_cat")
    if sign not in (+1, -1):
        raise ConfigError(f"cat sign must be +1 or -1, got {sign}")
    nbar = max(mean_phonon(rho), 0.0)
    amps = np.linspace(0.25, math.sqrt(nbar) + 2.5, scan_points)
    phases = np.linspace(0.0, math.pi, phase_points, endpoint=False)

    best_alpha = complex(amps[0])
    best_val = -np.inf
    for r in amps:
        for th in phases:
            alpha = r * complex(math.cos(th), math.sin(th))
            val = _cat_overlap(rho, alpha, sign)
            if val > best_val:
                best_val = val
                best_alpha = alpha

    def cost(v: np.ndarray) -> float:
        return -_cat_overlap(rho, complex(v[0], v[1]), sign)

    res = minimize(
        cost,
        np.array([best_alpha.real, best_alpha.imag]),
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400},
    )
    if -res.fun >= best_val:
        best_alpha = complex(res.x[0], res.x[1])
        best_val = -res.fun
    # canonical representative of the alpha <-> -alpha pair
    if best_alpha.real < 0 or (best_alpha.real == 0 and best_alpha.imag < 0):
        best_alpha = -best_alpha
    return CatFit(alpha=best_alpha, fidelity=float(best_val), sign=sign)
