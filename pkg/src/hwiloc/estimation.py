"""Projection-based position estimation for both receiver models.

Maximizing the likelihood over the complex path gain in closed form leaves a
projection objective over position alone:

    L(p) = ||y||^2 - |eta(p)^H y|^2 / ||eta(p)||^2

where eta(p) is the gain-free model mean at position p. The matched
estimator builds eta from the impaired chain (it knows the realization), the
mismatched estimator from the clean chain. Both minimize L(p) the same way:
a coarse polar grid, then gradient descent on p with central-difference
gradients and Armijo backtracking.

The grid stage exploits the factorization eta_{g,k} = b_g(aoa) d_k(delay)
x~_{g,k} (after pulling the unitary phase-noise/CFO sandwich onto the
observation), which makes the objective separable in angle and range and
lets one pilot block be scanned over the whole grid with three matrix
products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .impairments import ImpairmentConfig, ImpairmentRealization, mc_matrix
from .model import (
    SPEED_OF_LIGHT,
    ChannelParams,
    PilotBlock,
    SystemConfig,
)
from .observation import sandwich_matrices, transmit_pilots


class NumericError(RuntimeError):
    """Raised when a numeric procedure cannot produce a usable result."""


@dataclass
class EstimatorConfig:
    """Grid and descent settings for the projection estimators."""

    n_grid_angles: int = 181  # angles strictly inside (-pi/2, pi/2)
    n_grid_ranges: int = 60
    range_min_m: float = 0.5
    range_max_m: float = 30.0
    fd_step: float = 1e-6  # relative central-difference step
    armijo_slope: float = 1e-4
    armijo_shrink: float = 0.5
    initial_step_m: float = 0.1
    max_iterations: int = 200
    grad_tolerance: float = 1e-9  # on the gradient of the normalized objective
    step_floor_m: float = 1e-12  # line-search stall threshold

    def grid_angles(self) -> np.ndarray:
        return np.linspace(-np.pi / 2, np.pi / 2, self.n_grid_angles + 2)[1:-1]

    def grid_ranges(self) -> np.ndarray:
        return np.linspace(self.range_min_m, self.range_max_m, self.n_grid_ranges)


@dataclass
class Estimate:
    """Result of one grid + descent run."""

    params: ChannelParams
    position: np.ndarray  # (2,) refined position
    objective: float  # projection objective at the optimum (unnormalized)
    converged: bool
    n_iterations: int
    grid_point: np.ndarray  # (2,) coarse grid argmin the descent started from


def projection_objective(y: np.ndarray, eta: np.ndarray) -> float:
    """||y||^2 minus the energy of y captured by the eta direction."""
    y = np.asarray(y).ravel()
    eta = np.asarray(eta).ravel()
    ee = np.vdot(eta, eta).real
    if ee <= 0.0:
        raise ValueError("eta must be non-zero")
    return float(np.vdot(y, y).real - np.abs(np.vdot(eta, y)) ** 2 / ee)


def plug_in_gain(y: np.ndarray, eta: np.ndarray) -> complex:
    """Closed-form gain estimate eta^H y / ||eta||^2 given a position."""
    y = np.asarray(y).ravel()
    eta = np.asarray(eta).ravel()
    ee = np.vdot(eta, eta).real
    if ee <= 0.0:
        raise ValueError("eta must be non-zero")
    return complex(np.vdot(eta, y) / ee)


@dataclass
class ProjectionModel:
    """Gain-free model mean in factorized form, ready for grid scans.

    row_matrix holds w_g^T C (one row per transmission), eff_pilots the
    frequency-domain pilots after any transmit-side distortion, and sandwich
    the per-transmission unitary phase rotations (None for the clean chain).
    """

    row_matrix: np.ndarray  # (G, N)
    eff_pilots: np.ndarray  # (G, K)
    sandwich: np.ndarray | None  # (G, K, K) unitary slices, or None
    n_subcarriers: int
    subcarrier_spacing_hz: float
    pilot_energies: np.ndarray = field(init=False)  # (G,)

    def __post_init__(self) -> None:
        self.pilot_energies = np.sum(np.abs(self.eff_pilots) ** 2, axis=1)

    @staticmethod
    def clean(cfg: SystemConfig, block: PilotBlock, coupling: tuple = ()) -> "ProjectionModel":
        ctilde = mc_matrix(coupling, None, cfg.n_antennas)
        return ProjectionModel(
            row_matrix=block.combiners @ ctilde,
            eff_pilots=block.symbols.copy(),
            sandwich=None,
            n_subcarriers=cfg.n_subcarriers,
            subcarrier_spacing_hz=cfg.subcarrier_spacing_hz,
        )

    @staticmethod
    def impaired(
        cfg: SystemConfig,
        block: PilotBlock,
        imp: ImpairmentConfig,
        real: ImpairmentRealization,
    ) -> "ProjectionModel":
        c_full = mc_matrix(imp.coupling, real.mc_residual, cfg.n_antennas)
        return ProjectionModel(
            row_matrix=block.combiners @ c_full,
            eff_pilots=transmit_pilots(block, imp, cfg),
            sandwich=sandwich_matrices(real, cfg),
            n_subcarriers=cfg.n_subcarriers,
            subcarrier_spacing_hz=cfg.subcarrier_spacing_hz,
        )

    # -- model mean ---------------------------------------------------------

    def _steering(self, aoas: np.ndarray) -> np.ndarray:
        n = np.arange(self.row_matrix.shape[1])
        return np.exp(1j * np.pi * np.outer(n, np.sin(aoas)))  # (N, n_angles)

    def _delay_conj(self, ranges_m: np.ndarray) -> np.ndarray:
        k = np.arange(1, self.n_subcarriers + 1)
        tau = np.asarray(ranges_m) / SPEED_OF_LIGHT
        return np.exp(2j * np.pi * self.subcarrier_spacing_hz * np.outer(k, tau))  # (K, n_r)

    def eta(self, aoa: float, delay: float) -> np.ndarray:
        """Gain-free mean, (G, K); matches the observation-module builders."""
        if delay < 0:
            raise ValueError("delay must be non-negative")
        b = self.row_matrix @ self._steering(np.array([aoa]))[:, 0]
        d = np.conj(self._delay_conj(np.array([delay * SPEED_OF_LIGHT]))[:, 0])
        v = b[:, None] * (d[None, :] * self.eff_pilots)
        if self.sandwich is None:
            return v
        return np.einsum("gij,gj->gi", self.sandwich, v)

    # -- objective machinery ------------------------------------------------

    def pulled_observation(self, y: np.ndarray) -> np.ndarray:
        """Pull the unitary sandwich onto the observation: u_g = M_g^H y_g."""
        y = np.asarray(y, dtype=complex)
        if self.sandwich is None:
            return y
        return np.einsum("gji,gj->gi", np.conj(self.sandwich), y)

    def objective_grid(
        self, u: np.ndarray, aoas: np.ndarray, ranges_m: np.ndarray
    ) -> np.ndarray:
        """Projection objective on the (angle, range) grid, shape (n_a, n_r).

        u is the pulled observation. Uses the separable structure: the
        captured energy is |sum_k conj(d_k) z_k(aoa)|^2 / den(aoa) with
        z(aoa) = sum_g conj(b_g x~_g) u_g and den = sum_g |b_g|^2 ||x~_g||^2.
        """
        b = self.row_matrix @ self._steering(aoas)  # (G, n_a)
        w = np.conj(self.eff_pilots) * u  # (G, K)
        z = b.conj().T @ w  # (n_a, K)
        s = z @ self._delay_conj(ranges_m)  # (n_a, n_r)
        den = (np.abs(b) ** 2).T @ self.pilot_energies  # (n_a,)
        yy = np.vdot(u, u).real
        captured = np.zeros_like(s, dtype=float)
        np.divide(np.abs(s) ** 2, den[:, None], out=captured, where=den[:, None] > 0)
        return yy - captured

    def objective_at(self, u: np.ndarray, position: np.ndarray) -> float:
        """Projection objective at one Cartesian position."""
        px, py = float(position[0]), float(position[1])
        rng = float(np.hypot(px, py))
        aoa = float(np.arctan2(py, px))
        grid = self.objective_grid(u, np.array([aoa]), np.array([rng]))
        return float(grid[0, 0])


def scan_ranges(model: ProjectionModel, est: EstimatorConfig) -> np.ndarray:
    """Grid ranges clipped to one delay-ambiguity period c/df above range_min.

    Beyond that window the subcarrier phasors repeat exactly, so farther
    duplicate basins would shadow the true one during the scan.
    """
    ranges = est.grid_ranges()
    span = SPEED_OF_LIGHT / model.subcarrier_spacing_hz
    kept = ranges[ranges < est.range_min_m + span]
    return kept if kept.size else ranges[:1]


def grid_search(
    y: np.ndarray, model: ProjectionModel, est: EstimatorConfig
) -> tuple[np.ndarray, float]:
    """Coarse polar scan; returns (position, objective) of the grid argmin.

    Ties break deterministically to the lowest angle index, then the lowest
    range index (row-major argmin). Ranges come from :func:`scan_ranges`.
    """
    u = model.pulled_observation(y)
    aoas = est.grid_angles()
    ranges = scan_ranges(model, est)
    obj = model.objective_grid(u, aoas, ranges)
    if not np.any(np.isfinite(obj)):
        raise NumericError("projection objective is non-finite over the whole grid")
    flat = np.argmin(obj)  # first minimum in row-major order
    ia, ir = np.unravel_index(flat, obj.shape)
    p0 = ranges[ir] * np.array([np.cos(aoas[ia]), np.sin(aoas[ia])])
    return p0, float(obj[ia, ir])


def refine(
    y: np.ndarray, model: ProjectionModel, p_start: np.ndarray, est: EstimatorConfig
) -> tuple[np.ndarray, float, bool, int]:
    """Gradient descent on position with Armijo backtracking.

    The objective is normalized by ||y||^2 so the gradient tolerance is
    scale-free. Gradients come from central differences with relative step
    est.fd_step. Stops when the gradient norm drops below tolerance, when
    the line search stalls below the step floor (the numerical minimum), or
    after max_iterations. The objective sequence is non-increasing.

    Returns (position, unnormalized objective, converged flag, iterations).
    """
    u = model.pulled_observation(y)
    yy = float(np.vdot(u, u).real)
    if not np.isfinite(yy) or yy <= 0.0:
        raise NumericError("observation energy must be positive and finite")

    def f(p: np.ndarray) -> float:
        return model.objective_at(u, p) / yy

    p = np.asarray(p_start, dtype=float).copy()
    fp = f(p)
    if not np.isfinite(fp):
        raise NumericError("objective is non-finite at the starting point")

    step = est.initial_step_m
    converged = False
    iters = 0
    for iters in range(1, est.max_iterations + 1):
        grad = np.empty(2)
        for i in range(2):
            h = est.fd_step * max(abs(p[i]), 1.0)
            pp, pm = p.copy(), p.copy()
            pp[i] += h
            pm[i] -= h
            grad[i] = (f(pp) - f(pm)) / (2.0 * h)
        gnorm = float(np.linalg.norm(grad))
        if not np.isfinite(gnorm):
            raise NumericError("gradient is non-finite during refinement")
        if gnorm < est.grad_tolerance:
            converged = True
            break
        direction = -grad / gnorm
        s = min(est.initial_step_m, 2.0 * step)
        accepted = False
        while s >= est.step_floor_m:
            cand = p + s * direction
            fc = f(cand)
            if np.isfinite(fc) and fc <= fp - est.armijo_slope * s * gnorm:
                p, fp = cand, fc
                step = s
                accepted = True
                break
            s *= est.armijo_shrink
        if not accepted:
            # no decrease at any resolvable step: numerical minimum reached
            converged = True
            break
    return p, fp * yy, converged, iters


def _finish(
    y: np.ndarray, model: ProjectionModel, est: EstimatorConfig
) -> Estimate:
    y = np.asarray(y, dtype=complex)
    if not np.all(np.isfinite(y)):
        raise ValueError("observation contains non-finite samples")
    p0, _ = grid_search(y, model, est)
    p_hat, obj, converged, iters = refine(y, model, p0, est)
    rng_m = float(np.hypot(p_hat[0], p_hat[1]))
    aoa = float(np.arctan2(p_hat[1], p_hat[0]))
    delay = rng_m / SPEED_OF_LIGHT
    alpha = plug_in_gain(y, model.eta(aoa, delay))
    params = ChannelParams(
        aoa=aoa,
        delay=delay,
        gain_amp=abs(alpha),
        gain_phase=float(-np.angle(alpha)),
    )
    return Estimate(
        params=params,
        position=p_hat,
        objective=obj,
        converged=converged,
        n_iterations=iters,
        grid_point=p0,
    )


def mmle_m2(
    y: np.ndarray,
    cfg: SystemConfig,
    block: PilotBlock,
    est: EstimatorConfig | None = None,
    coupling: tuple = (),
) -> Estimate:
    """Mismatched estimator: fits the clean chain to whatever y contains."""
    return _finish(y, ProjectionModel.clean(cfg, block, coupling), est or EstimatorConfig())


def mle_m1(
    y: np.ndarray,
    cfg: SystemConfig,
    block: PilotBlock,
    imp: ImpairmentConfig,
    real: ImpairmentRealization,
    est: EstimatorConfig | None = None,
) -> Estimate:
    """Matched estimator: knows the impairment realization it fits."""
    return _finish(
        y, ProjectionModel.impaired(cfg, block, imp, real), est or EstimatorConfig()
    )
