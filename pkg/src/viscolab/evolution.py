"""Linear propagation (radial whole space and periodic grid) and the nonlinear
exponential integrator.

Radial backend
--------------
Potential data ``psi = grad chi``, ``w = grad theta`` has no solenoidal part,
so only the longitudinal branches act on the two scalar amplitudes::

    chi_hat(t)   = A_mu chi_hat0 + D_mu theta_hat0
    theta_hat(t) = -(beta^2 + gamma^2) k^2 D_mu chi_hat0 + V_mu theta_hat0

with ``phi_tilde = -lap chi`` and ``G_tilde = hess chi``.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bands import CutoffFamily, project_band
from .dispersion import mu_pm, slowest_rate
from .fields import (
    QuadratureRule, RadialProfile, box_truncation_estimate, forward, gauss_panels,
    grid_lp_norm, inverse, nyquist_mask, plancherel_sum, radial_lp_from_magnitude, radial_synthesize,
    sobolev_norm, sobolev_seminorm,
)
from .kinematics import (
    RegimeError, constraint_residuals, radial_lowfreq_check, radial_potential_initial_fields,
)
from .nonlinear import SpectralNonlinear, SpectralOps, displacement_rhs, reconstruct_u, regime_norm
from .params import NCOMP, FluidParams, GridDescriptor, PerturbationState, SpectralState
from .rates import RateFit, fit_exponential, fit_power_law
from .symbol import ExpFunction, PhiFunction, apply_semigroup, branch_coefficients


class ConstraintViolation(ValueError):
    """Spectral data off the constraint subspace."""


class NonPotentialData(ValueError):
    """Data with a solenoidal part passed to the radial backend."""


class StepRejected(RegimeError):
    """The fixed time step failed the CFL or growth guard."""


@dataclass
class Trajectory:
    """Time series of norm records; single writer."""

    times: list = field(default_factory=list)
    records: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, t: float, **values) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        n = len(self.times)
        for name, v in values.items():
            v = float(v)
            if not math.isfinite(v):
                raise FloatingPointError(f"non-finite record {name} at t={t}")
            self.records.setdefault(name, [math.nan] * n).append(v)
        for name, col in self.records.items():
            if len(col) == n:
                col.append(math.nan)
        self.times.append(float(t))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.records[name], dtype=float)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def columns(self) -> dict:
        return {"t": self.t, **{k: self.column(k) for k in self.records}}


# ---------------------------------------------------------------- radial backend

@dataclass(frozen=True)
class RadialRecipe:
    """Initial data in terms of Gaussian profiles ``g(r) = exp(-r^2 / width^2)``.

    ``gaussian-density``: ``phi_tilde0 = amplitude g`` (chi is its Newtonian
    potential), the recipe carrying mass at zero frequency.
    ``gaussian-potential``: ``chi0 = amplitude g`` (mean-zero density).
    ``gaussian-shear``: a solenoidal displacement, rejected by the radial backend.
    ``velocity_amplitude`` sets ``theta0 = velocity_amplitude g``.
    """

    family: str = "gaussian-density"
    amplitude: float = 0.05
    width: float = 1.0
    velocity_amplitude: float = 0.0

    FAMILIES = ("gaussian-density", "gaussian-potential", "gaussian-shear")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown recipe family {self.family!r}")
        if not self.width > 0:
            raise ValueError("width must be positive")

    def gaussian_hat(self, k):
        w2 = self.width ** 2
        return (w2 / 2) ** 1.5 * np.exp(-np.asarray(k) ** 2 * w2 / 4)

    def amplitudes(self, k):
        """(chi_hat0, theta_hat0) on frequency nodes ``k > 0``."""
        if self.family == "gaussian-shear":
            raise NonPotentialData("radial backend accepts potential-type data only")
        gh = self.gaussian_hat(k)
        chi = self.amplitude * gh / k ** 2 if self.family == "gaussian-density" \
            else self.amplitude * gh
        return chi, self.velocity_amplitude * gh


def radial_domain(params: FluidParams, t: float, r0: float) -> float:
    """R_max(t) = c t + 12 sqrt((nu + nu_tilde) t) + R0 with c = sqrt(beta^2 + gamma^2)."""
    return params.wave_speed * t + 12 * math.sqrt(params.longitudinal_viscosity * t) + r0


def _longitudinal(params, k, t, chi0, th0):
    a, v, d = branch_coefficients(params, k, ExpFunction(t))[3:]
    c2 = params.wave_speed ** 2
    chi = (a * chi0 + d * th0).real
    th = (-c2 * k ** 2 * d * chi0 + v * th0).real
    return chi, th


def frequency_cutoff(params, recipe: RadialRecipe, t: float, rel: float = 1e-16) -> float:
    """Smallest K beyond which the spectral envelope stays below ``rel`` of its peak."""
    k = np.linspace(1e-6, 60.0 / recipe.width + 1.0, 24000)
    chi, th = _longitudinal(params, k, t, *recipe.amplitudes(k))
    env = (np.abs(chi) * k ** 4 + np.abs(th) * k ** 3) * k ** 2
    keep = np.nonzero(env > rel * env.max())[0]
    return float(k[keep[-1]]) if keep.size else float(k[-1])


@dataclass(frozen=True)
class RadialSnapshot:
    t: float
    k_rule: QuadratureRule
    r_rule: QuadratureRule
    chi_hat: np.ndarray
    theta_hat: np.ndarray
    phi_tilde: RadialProfile
    w: RadialProfile
    G_tilde: RadialProfile

    def U_magnitude(self):
        return np.sqrt(self.phi_tilde.values ** 2 + self.w.values ** 2
                       + self.G_tilde.magnitude() ** 2)

    def u_magnitude(self):
        """Pointwise magnitude of (phi, w, G) rebuilt from U by the exact kinematics."""
        a = self.G_tilde.values
        lam_r = a + self.G_tilde.aux
        if np.max(np.sqrt(lam_r ** 2 + 2 * a ** 2)) > 0.5:
            raise RegimeError("displacement gradient exceeds 0.5; cannot rebuild u")
        phi = (1 - lam_r) * (1 - a) ** 2 - 1
        g_r = lam_r / (1 - lam_r)
        g_t = a / (1 - a)
        return np.sqrt(phi ** 2 + self.w.values ** 2 + g_r ** 2 + 2 * g_t ** 2)

    def plancherel_gradient_norm(self, order: int) -> float:
        k = self.k_rule.nodes
        dens = 2 * k ** 4 * self.chi_hat ** 2 + k ** 2 * self.theta_hat ** 2
        return math.sqrt(4 * math.pi * np.sum(self.k_rule.weights * k ** (2 * order + 2)
                                              * dens))


def radial_snapshot(params: FluidParams, recipe: RadialRecipe, t: float,
                    r0: float | None = None, nodes_per_oscillation: int = 16
                    ) -> RadialSnapshot:
    """Propagate the recipe to time ``t`` and synthesize physical profiles."""
    r0 = 10 * recipe.width if r0 is None else r0
    R = radial_domain(params, t, r0)
    K = frequency_cutoff(params, recipe, t)
    c = params.wave_speed
    n_osc = K * (R + c * t) / math.pi
    k_rule = gauss_panels(0.0, K, max(4, int(nodes_per_oscillation * n_osc) // 16 + 1))
    n_r = int(max(64, nodes_per_oscillation * R * K / math.pi + R / 0.5))
    r_rule = gauss_panels(0.0, R, n_r // 16 + 1, graded_levels=4)
    k = k_rule.nodes
    chi, th = _longitudinal(params, k, t, *recipe.amplitudes(k))
    kw = {"domain": "frequency"}
    phi = radial_synthesize(RadialProfile(k_rule, k ** 2 * chi, **kw), r_rule)
    w = radial_synthesize(RadialProfile(k_rule, -k * th, "radial-vector", **kw), r_rule)
    G = radial_synthesize(RadialProfile(k_rule, np.zeros_like(k), "radial-tensor",
                                        aux=-k ** 2 * chi, **kw), r_rule)
    return RadialSnapshot(float(t), k_rule, r_rule, chi, th, phi, w, G)


def radial_norms(snap: RadialSnapshot, reconstruct: bool = True) -> dict:
    rule = snap.r_rule
    U = snap.U_magnitude()
    R = rule.upper
    out = {
        "U_L1": radial_lp_from_magnitude(rule, U, 1),
        "U_L2": radial_lp_from_magnitude(rule, U, 2),
        "U_Linf": float(U.max()),
        "U_L1_phi": radial_lp_from_magnitude(rule, np.abs(snap.phi_tilde.values), 1),
        "U_L1_w": radial_lp_from_magnitude(rule, np.abs(snap.w.values), 1),
        "U_L1_G": radial_lp_from_magnitude(rule, snap.G_tilde.magnitude(), 1),
        "U_L1_tail_density": 4 * math.pi * R ** 3 * float(U[-1]),
        "R_max": R,
        "K_max": snap.k_rule.upper,
    }
    for m in range(4):
        out[f"U_grad{m}_L2"] = snap.plancherel_gradient_norm(m)
    if reconstruct:
        u = snap.u_magnitude()
        out["u_L1"] = radial_lp_from_magnitude(rule, u, 1)
        out["u_L2"] = radial_lp_from_magnitude(rule, u, 2)
        out["u_Linf"] = float(u.max())
    return out


def evolve_linear_radial(params: FluidParams, recipe: RadialRecipe, times,
                         reconstruct: bool = True) -> Trajectory:
    times = np.asarray(times, dtype=float)
    recipe.amplitudes(np.ones(1))  # rejects non-potential families
    traj = Trajectory(meta={"backend": "radial", "recipe": recipe.__dict__.copy()})
    for t in times:
        snap = radial_snapshot(params, recipe, float(t))
        traj.add(float(t), **radial_norms(snap, reconstruct))
    return traj


def radial_lowfreq_report(params: FluidParams, recipe: RadialRecipe, r=0.1, c0=None,
                          c1=1.0, eta0=1.0):
    """Run the low-frequency checker on the recipe's exact initial data.

    ``c0`` defaults to 9/10 of the zero-frequency density amplitude of the
    canonical recipe with the same amplitude and width.
    """
    snap = radial_snapshot(params, recipe, 0.0)
    rule = snap.r_rule
    a = snap.G_tilde.values
    chi_pp = a + snap.G_tilde.aux
    chi_p = a * rule.nodes
    theta_p = snap.w.values
    phi0, m0, ga, gb = radial_potential_initial_fields(rule, chi_p, chi_pp, theta_p)
    if c0 is None:
        c0 = 0.9 * abs(recipe.amplitude) * (recipe.width ** 2 / 2) ** 1.5
    return radial_lowfreq_check(rule, phi0, m0, ga, gb, r, c0, c1, eta0)


def l1_growth_experiment(params: FluidParams, recipe: RadialRecipe, times,
                         window=(100.0, 1000.0), require_condition: bool = True):
    """Radial L1 growth run; returns (trajectory, fits, low-frequency report)."""
    report = radial_lowfreq_report(params, recipe)
    if require_condition and not report.passed:
        raise ValueError("initial data fails the low-frequency condition")
    traj = evolve_linear_radial(params, recipe, times)
    fits = {}
    for name in ("U_L1", "u_L1", "U_L2", "U_grad1_L2", "U_Linf", "u_Linf",
                 "U_L1_tail_density"):
        fits[name] = fit_power_law(traj.t, traj.column(name), window)
    return traj, fits, report


# ---------------------------------------------------------------- grid backend

def constraint_state(grid: GridDescriptor, psi_hat, w_hat) -> SpectralState:
    """Spectral state (-div psi, w, grad psi) from displacement and velocity spectra.

    Nyquist-index modes are dropped: odd derivatives cannot represent them.
    """
    xi = grid.wavevectors()
    keep = nyquist_mask(grid)
    psi_hat = psi_hat * keep
    w_hat = w_hat * keep
    G = 1j * psi_hat[:, None] * xi[None, :]
    phi = -np.einsum("ii...->...", G)
    return SpectralState(np.concatenate([phi[None], w_hat, G.reshape((9,) + phi.shape)]),
                         grid)


def constraint_state_from_fields(grid: GridDescriptor, psi, w) -> SpectralState:
    return constraint_state(grid, forward(np.asarray(psi, float), grid),
                            forward(np.asarray(w, float), grid))


def check_constraints(state: SpectralState, tol: float = 1e-8):
    """Raise ConstraintViolation naming the worst wavevector if the state is off
    the constraint subspace (relative to the largest amplitude)."""
    xi = state.grid.wavevectors()
    d = state.data
    G = d[4:13].reshape((3, 3) + d.shape[1:])
    scale = max(float(np.max(np.abs(d))), 1e-300)
    trace = np.abs(d[0] + np.einsum("ii...->...", G))
    curl = np.zeros(d.shape[1:])
    for k in range(3):
        for l in range(k + 1, 3):
            curl = np.maximum(curl, np.max(np.abs(G[:, k] * xi[l] - G[:, l] * xi[k]),
                                           axis=0))
    kmag = np.sqrt(np.sum(xi ** 2, axis=0))
    curl = curl / np.maximum(kmag, 1.0)
    worst = np.maximum(trace, curl) / scale
    idx = np.unravel_index(np.argmax(worst), worst.shape)
    if worst[idx] > tol:
        raise ConstraintViolation(
            f"state violates the constraints (relative defect {worst[idx]:.3e}) at "
            f"wavevector {tuple(float(x) for x in xi[(slice(None),) + idx])}")
    return float(worst[idx])


def evolve_linear_grid(params: FluidParams, state0: SpectralState, t: float,
                       check: bool = True) -> SpectralState:
    if check:
        check_constraints(state0)
    if t == 0:
        return state0
    out = apply_semigroup(params, state0.grid.wavevectors(), state0.data, t)
    return state0.replace(out)


def smooth_random_fields(grid: GridDescriptor, n: int, rng, smoothing: float = 1.0,
                         amplitude: float = 1.0):
    """Real random fields with a Gaussian spectral envelope exp(-k^2 smoothing^2 / 2)."""
    f = rng.standard_normal((n,) + grid.shape)
    fh = forward(f, grid)
    k2 = grid.wavenumber_magnitude() ** 2
    out = inverse(fh * np.exp(-k2 * smoothing ** 2 / 2), grid)
    return amplitude * out / np.max(np.abs(out))


def highfreq_experiment(params: FluidParams, grid: GridDescriptor, times, seed: int = 0,
                        smoothing: float = 4.0):
    """Linear grid run on P_inf-filtered random non-potential data.

    Returns (trajectory, exponential fit of the L1 norm, band rate bound).
    """
    rng = np.random.default_rng(seed)
    psi = smooth_random_fields(grid, 3, rng, smoothing, 0.1)
    w = smooth_random_fields(grid, 3, rng, smoothing, 0.1)
    fam = CutoffFamily.from_params(params)
    s0 = project_band(constraint_state_from_fields(grid, psi, w), "Pinf", fam)
    traj = Trajectory(meta={"backend": "grid", "band": "Pinf"})
    for t in times:
        s = evolve_linear_grid(params, s0, float(t), check=(t == times[0]))
        u = inverse(s.data, grid)
        traj.add(float(t), U_L1=grid_lp_norm(u, grid, 1), U_L2=grid_lp_norm(u, grid, 2),
                 U_Linf=grid_lp_norm(u, grid, np.inf))
    fit = fit_exponential(traj.t, traj.column("U_L1"))
    kk = np.linspace(fam.low_edges[0], np.sqrt(3) * grid.N / 2 * grid.dk, 4000)
    bound = float(np.min(slowest_rate(params, kk)))
    return traj, fit, bound


# ---------------------------------------------------------------- nonlinear backend

class MultiplierPlan:
    """Cached branch coefficients for repeated multiplier application on one grid."""

    def __init__(self, params: FluidParams, grid: GridDescriptor, fn):
        self.params = params
        xi = grid.wavevectors()
        self.shape = xi.shape[1:]
        self.xi = np.ascontiguousarray(xi.reshape(3, -1))
        k = np.sqrt(np.sum(self.xi ** 2, axis=0))
        self.coef = np.ascontiguousarray(branch_coefficients(params, k, fn))

    def __call__(self, data):
        out = kernels.apply_blocks(self.coef, self.xi, data.reshape(NCOMP, -1),
                                   self.params.gamma ** 2, self.params.beta ** 2)
        return out.reshape((NCOMP,) + self.shape)


@dataclass(frozen=True)
class NonlinearRecipe:
    """Smooth localized displacement and velocity of size ``epsilon``.

    The displacement mixes a gradient and a curl so both branch families act.
    """

    epsilon: float = 1e-3
    width: float = 1.5
    velocity_scale: float = 1.0

    def fields(self, grid: GridDescriptor):
        X = grid.coords()
        r2 = X[0] ** 2 + X[1] ** 2 + X[2] ** 2
        w2 = self.width ** 2
        g = np.exp(-r2 / w2)
        grad_g = np.stack([-2 * x / w2 * g for x in X])
        # curl of (0, 0, g(x - a)) with a shifted centre
        shift = X[0] - 0.5 * self.width
        h = np.exp(-(shift ** 2 + X[1] ** 2 + X[2] ** 2) / w2)
        curl = np.stack([-2 * X[1] / w2 * h, 2 * shift / w2 * h, np.zeros_like(h)])
        psi = self.epsilon * self.width * (grad_g + curl)
        v = self.epsilon * self.velocity_scale * np.stack(
            [-2 * X[1] / w2 * g, 2 * X[0] / w2 * g, -2 * X[2] / w2 * g])
        return psi, v


def roundoff_floor(grid: GridDescriptor, scale: float) -> float:
    """eps * log2(N) * k_nyquist * scale: the error level of one spectral derivative."""
    return float(np.finfo(float).eps * math.log2(grid.N) * (math.pi / grid.dx) * scale)


def evolve_nonlinear(params: FluidParams, psi0, v0, T: float, dt: float,
                     grid: GridDescriptor, sample_times=None, linear_reference=False,
                     growth_limit: float = 1e3) -> Trajectory:
    """ETD2RK integration of U = (phi_tilde, w, grad psi) with psi co-evolved.

    ``U* = e^{hM} U + h phi_1(hM) N(U)``,
    ``U_next = U* + h phi_2(hM) (N(U*) - N(U))``, with ``M = -L``.
    """
    ops = SpectralOps(grid)
    psi = np.asarray(psi0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    A0 = ops.grad(psi)
    if regime_norm(A0) > 0.1:
        raise RegimeError("initial displacement gradient exceeds 0.1")
    # the filtered initial state keeps the whole run inside the dealiased band
    U0 = constraint_state_from_fields(grid, psi, v0)
    U0 = U0.replace(U0.data * ops.mask)
    Uh = U0.data.copy()
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * T:
        raise ValueError("T must be a positive multiple of dt")
    h = float(dt)
    E = MultiplierPlan(params, grid, ExpFunction(h))
    P1 = MultiplierPlan(params, grid, PhiFunction(1, h))
    P2 = MultiplierPlan(params, grid, PhiFunction(2, h))
    if sample_times is None:
        sample_times = np.linspace(0, T, 11)
    sample_steps = sorted({int(round(s / h)) for s in sample_times})
    nonlin = SpectralNonlinear(params, grid)

    traj = Trajectory(meta={"backend": "nonlinear", "dt": h, "N": grid.N, "R": grid.R})
    init = {}
    t0 = _time.perf_counter()

    def record(step, U, Uhat):
        t = step * h
        A = U[4:13].reshape((3, 3) + grid.shape)
        w = U[1:4]
        phi, G = reconstruct_u(A)
        u = np.concatenate([phi[None], w, G.reshape((9,) + grid.shape)])
        F = np.eye(3).reshape(3, 3, 1, 1, 1) + G
        res = constraint_residuals(1 + phi, w, F, grid).summary()
        us = PerturbationState(u, grid)
        scale = max(float(np.max(np.abs(F))), 1.0)
        rec = {
            "u_L1": grid_lp_norm(u, grid, 1), "u_L2": grid_lp_norm(u, grid, 2),
            "u_Linf": grid_lp_norm(u, grid, np.inf),
            "U_L2": math.sqrt(plancherel_sum(Uhat, grid)),
            "u_H3": sobolev_norm(us, 3),
            "trace_drift": float(np.max(np.abs(U[0] + np.einsum("ii...->...", A)))),
            "psi_consistency": float(np.max(np.abs(ops.grad(psi) - A))),
            "res_det": res["det_linf"], "res_piola": res["piola_linf"],
            "res_div": res["div_linf"], "roundoff_floor": roundoff_floor(grid, scale),
            "box_edge": box_truncation_estimate(u),
        }
        for m in range(1, 4):
            rec[f"u_grad{m}_L2"] = sobolev_seminorm(us, m)
        if linear_reference:
            lin = apply_semigroup(params, grid.wavevectors(), U0.data, t) if t > 0 \
                else U0.data
            rec["linear_deviation"] = math.sqrt(plancherel_sum(Uhat - lin, grid)) / \
                max(math.sqrt(plancherel_sum(lin, grid)), 1e-300)
        if not init:
            init.update(rec)
        traj.add(t, **rec)

    Nh, U = nonlin(Uh)
    n_init = max(math.sqrt(plancherel_sum(Nh, grid)), 1e-300)
    for step in range(n_steps + 1):
        if step in sample_steps:
            record(step, U, Uh)
        if step == n_steps:
            break
        wmax = float(np.max(np.abs(U[1:4])))
        if wmax > 0 and h > 0.5 * grid.dx / wmax:
            raise StepRejected(f"CFL guard at t={step * h:.4g}: dt={h} exceeds "
                               f"{0.5 * grid.dx / wmax:.4g}; halve dt")
        Us = E(Uh) + h * P1(Nh)
        Ns, _ = nonlin(Us)
        Un = Us + h * P2(Ns - Nh)
        w_old = U[1:4]
        rhs_old = displacement_rhs(psi, w_old, ops)
        psi_pred = psi + h * rhs_old
        Uh = Un
        Nh, U = nonlin(Uh)
        psi = psi + h / 2 * (rhs_old + displacement_rhs(psi_pred, U[1:4], ops))
        if not np.all(np.isfinite(Uh)):
            raise StepRejected(f"non-finite state at t={(step + 1) * h:.4g}")
        if math.sqrt(plancherel_sum(Nh, grid)) > growth_limit * n_init and n_init > 1e-290:
            raise StepRejected(f"nonlinear residual grew by more than {growth_limit}x "
                               f"at t={(step + 1) * h:.4g}")
    traj.meta["wall_time"] = _time.perf_counter() - t0
    traj.meta["initial"] = init
    return traj


__all__ = [
    "ConstraintViolation", "NonPotentialData", "StepRejected", "Trajectory", "RadialRecipe",
    "radial_domain", "frequency_cutoff", "RadialSnapshot", "radial_snapshot",
    "radial_norms", "evolve_linear_radial", "radial_lowfreq_report",
    "l1_growth_experiment", "constraint_state", "constraint_state_from_fields",
    "check_constraints", "evolve_linear_grid", "smooth_random_fields",
    "highfreq_experiment", "MultiplierPlan", "NonlinearRecipe", "roundoff_floor",
    "evolve_nonlinear",
]
