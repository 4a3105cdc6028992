"""Spectral transforms, discrete norms and the radial whole-space representation.

Grid transforms approximate ``f_hat(xi) = (2 pi)^{-3/2} int f(x) e^{-i x.xi} dx``
on the box ``[-R, R)^3``. Radial profiles use spherical Hankel transforms

    H_n[F](r) = sqrt(2/pi) int_0^inf F(k) k^2 j_n(k r) dk,

which are self-inverse. A scalar pairs with a scalar through ``H_0``, a radial
vector ``f(r) x/|x|`` with ``-i F(k) xi/|xi|`` through ``H_1``, and a radial
tensor ``a I + b x x^T/|x|^2`` with ``A I + B xi xi^T/|xi|^2`` through ``H_0`` on
the trace and ``-H_2`` on the traceless part.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .params import GridDescriptor, PerturbationState, SpectralState

SQRT_2_PI = math.sqrt(2 / math.pi)
TAGS = ("scalar", "radial-vector", "radial-tensor")


class TruncationWarning(UserWarning):
    """Frequency support extends past the truncation with non-negligible weight."""


# ---------------------------------------------------------------- grid transforms

def _phase(grid: GridDescriptor):
    n = grid.N
    full = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    half = np.arange(n // 2 + 1)
    sx = 1.0 - 2.0 * (full % 2)
    sz = 1.0 - 2.0 * (half % 2)
    return sx[:, None, None] * sx[None, :, None] * sz[None, None, :]


def _scale(grid: GridDescriptor) -> float:
    return grid.dx ** 3 / (2 * math.pi) ** 1.5


_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Number of threads used by the grid transforms."""
    global _FFT_WORKERS
    if int(n) < 1:
        raise ValueError("worker count must be >= 1")
    _FFT_WORKERS = int(n)


def forward(arr, grid: GridDescriptor) -> np.ndarray:
    """Transform real arrays of shape (..., N, N, N) to the rfft half lattice."""
    out = scipy.fft.rfftn(arr, axes=(-3, -2, -1), workers=_FFT_WORKERS)
    out *= _scale(grid) * _phase(grid)
    return out


def inverse(spec, grid: GridDescriptor) -> np.ndarray:
    n = grid.N
    return scipy.fft.irfftn(spec * (_phase(grid) / _scale(grid)), s=(n, n, n),
                            axes=(-3, -2, -1), workers=_FFT_WORKERS)


def spectral_transform(state: PerturbationState) -> SpectralState:
    return SpectralState(forward(state.data, state.grid), state.grid)


def inverse_transform(spec: SpectralState) -> PerturbationState:
    return PerturbationState(inverse(spec.data, spec.grid), spec.grid)


def derivative(spec, grid: GridDescriptor, axis: int) -> np.ndarray:
    """Spectral d/dx_axis (returns spectral coefficients)."""
    return 1j * grid.wavevectors()[axis] * spec


def gradient(f, grid: GridDescriptor) -> np.ndarray:
    """Physical gradient of a physical field; a new last-derivative index is
    prepended, so ``grad(f)[k] = d f / d x_k`` with shape (3, *f.shape)."""
    fh = forward(f, grid)
    xi = grid.wavevectors()
    return np.stack([inverse(1j * xi[k] * fh, grid) for k in range(3)])


def dealias_mask(grid: GridDescriptor) -> np.ndarray:
    """Two-thirds rule mask on the half lattice."""
    n = grid.N
    cut = n / 3.0
    full = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    half = np.arange(n // 2 + 1)
    keep = ((full[:, None, None] < cut) & (full[None, :, None] < cut)
            & (half[None, None, :] < cut))
    return keep.astype(float)


def nyquist_mask(grid: GridDescriptor) -> np.ndarray:
    """Zero on every half-lattice mode with a Nyquist index, one elsewhere."""
    n = grid.N
    full = np.abs(np.fft.fftfreq(n, d=1.0 / n)) != n // 2
    half = np.arange(n // 2 + 1) != n // 2
    return (full[:, None, None] & full[None, :, None] & half[None, None, :]).astype(float)


def plancherel_sum(spec, grid: GridDescriptor) -> float:
    """sum |u_hat|^2 dk^3 over the full lattice using the half-lattice weights."""
    spec = np.asarray(spec)
    mag2 = np.abs(spec) ** 2
    if mag2.ndim > 3:
        mag2 = mag2.reshape((-1,) + mag2.shape[-3:]).sum(axis=0)
    return float(np.sum(mag2 * grid.half_weights()) * grid.dk ** 3)


# ---------------------------------------------------------------- norms

def pointwise_magnitude(arr) -> np.ndarray:
    """Euclidean magnitude over leading component axes of a (C, N, N, N) array."""
    arr = np.asarray(arr)
    if arr.ndim == 3:
        return np.abs(arr)
    return np.sqrt(np.sum(np.abs(arr.reshape((-1,) + arr.shape[-3:])) ** 2, axis=0))


def grid_lp_norm(arr, grid: GridDescriptor, p) -> float:
    m = pointwise_magnitude(arr)
    if p in (np.inf, "inf"):
        return float(m.max())
    p = float(p)
    return float((np.sum(m ** p) * grid.dx ** 3) ** (1 / p))


def box_truncation_estimate(arr) -> float:
    """Largest magnitude on the box faces: a proxy for mass outside the box."""
    m = pointwise_magnitude(arr)
    return float(max(np.abs(m[0]).max(), np.abs(m[:, 0]).max(), np.abs(m[:, :, 0]).max()))


def sobolev_seminorm(state, order: int) -> float:
    """||grad^m u||_{L^2} computed from the spectrum with the derivative lattice."""
    if not 0 <= order <= 4:
        raise ValueError("order must be between 0 and 4")
    spec = state if isinstance(state, SpectralState) else spectral_transform(state)
    xi = spec.grid.wavevectors()
    k2 = np.sum(xi * xi, axis=0)
    return math.sqrt(plancherel_sum(spec.data * k2 ** (order / 2), spec.grid))


def sobolev_norm(state, order: int) -> float:
    """Discrete H^m norm: sqrt(sum_{j <= m} ||grad^j u||^2)."""
    spec = state if isinstance(state, SpectralState) else spectral_transform(state)
    return math.sqrt(sum(sobolev_seminorm(spec, j) ** 2 for j in range(order + 1)))


# ---------------------------------------------------------------- radial quadrature

@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss-legendre-panels"

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")

    @property
    def upper(self) -> float:
        return float(self.nodes[-1])


def gauss_panels(lo: float, hi: float, panels: int, order: int = 16,
                 graded_levels: int = 0) -> QuadratureRule:
    """Composite Gauss-Legendre rule on [lo, hi].

    With ``graded_levels > 0`` the first panel is split geometrically towards
    ``lo`` so integrands with weak behaviour near the origin are resolved.
    """
    if not hi > lo or panels < 1:
        raise ValueError("need hi > lo and at least one panel")
    x, w = np.polynomial.legendre.leggauss(order)
    edges = list(np.linspace(lo, hi, panels + 1))
    if graded_levels:
        first = edges[1]
        sub = [lo + (first - lo) * 2.0 ** (-j) for j in range(graded_levels, 0, -1)]
        edges = [lo] + sub + edges[1:]
    X, W = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        X.append((b - a) / 2 * x + (b + a) / 2)
        W.append((b - a) / 2 * w)
    return QuadratureRule(np.concatenate(X), np.concatenate(W))


@dataclass(frozen=True)
class RadialProfile:
    """Radial samples with an angular tag.

    ``values`` holds one profile for scalar and radial-vector tags; radial
    tensors keep ``values`` as the isotropic coefficient ``a`` and ``aux`` as the
    coefficient ``b`` of ``x x^T/|x|^2``. ``domain`` is ``"space"`` or
    ``"frequency"``.
    """

    rule: QuadratureRule
    values: np.ndarray
    tag: str = "scalar"
    aux: np.ndarray | None = None
    domain: str = "space"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown tag {self.tag!r}")
        if self.values.shape != self.rule.nodes.shape:
            raise ValueError("values must match the node count")
        if self.tag == "radial-tensor":
            if self.aux is None or self.aux.shape != self.values.shape:
                raise ValueError("radial tensors need both a and b profiles")
        if not np.all(np.isfinite(self.values)) or (
                self.aux is not None and not np.all(np.isfinite(self.aux))):
            raise FloatingPointError("profile contains non-finite values")

    @property
    def nodes(self):
        return self.rule.nodes

    def magnitude(self) -> np.ndarray:
        if self.tag == "radial-tensor":
            a, b = self.values, self.aux
            return np.sqrt((a + b) ** 2 + 2 * a ** 2)
        return np.abs(self.values)


def radial_lp_from_magnitude(rule: QuadratureRule, mag, p) -> float:
    if p in (np.inf, "inf"):
        return float(np.max(mag))
    p = float(p)
    return float((4 * math.pi * np.sum(rule.weights * rule.nodes ** 2 * mag ** p)) ** (1 / p))


def lp_norm(f, p, grid: GridDescriptor | None = None) -> float:
    """L^p norm of a radial profile, a state, or a raw grid array."""
    if isinstance(f, RadialProfile):
        return radial_lp_from_magnitude(f.rule, f.magnitude(), p)
    if isinstance(f, PerturbationState):
        return grid_lp_norm(f.data, f.grid, p)
    if grid is None:
        raise ValueError("raw arrays need a grid descriptor")
    return grid_lp_norm(f, grid, p)


# ---------------------------------------------------------------- spherical Bessel

def _jn_series(n: int, z, terms: int = 10):
    """j_n(z) / z^n by its power series."""
    z2 = np.asarray(z) ** 2
    out = np.zeros_like(z2)
    dfact = float(np.prod(np.arange(1, 2 * n + 2, 2)))
    term = np.full_like(z2, 1.0 / dfact)
    for m in range(terms):
        out = out + term
        term = term * (-z2 / 2) / ((m + 1) * (2 * n + 2 * m + 3))
    return out


def spherical_jn(n: int, z) -> np.ndarray:
    """j_0, j_1 or j_2 for real z >= 0, with series near the origin."""
    z = np.asarray(z, dtype=float)
    if n == 0:
        small = z < 1e-2
        zs = np.where(small, 1.0, z)
        return np.where(small, _jn_series(0, z, 4), np.sin(zs) / zs)
    if n == 1:
        return z * spherical_j1_over_z(z)
    if n == 2:
        small = z < 1.0
        zs = np.where(small, 1.0, z)
        s, c = np.sin(zs), np.cos(zs)
        closed = (3 / zs ** 2 - 1) * s / zs - 3 * c / zs ** 2
        return np.where(small, z * z * _jn_series(2, z), closed)
    raise ValueError("only orders 0, 1, 2 are supported")


def spherical_j1_over_z(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    small = z < 0.1
    zs = np.where(small, 1.0, z)
    closed = (np.sin(zs) - zs * np.cos(zs)) / zs ** 3
    z2 = z * z
    ser = 1 / 3 - z2 / 30 + z2 * z2 / 840 - z2 ** 3 / 45360
    return np.where(small, ser, closed)


def hankel(order: int, rule: QuadratureRule, values, targets, chunk: int = 512):
    """sqrt(2/pi) sum_i w_i F(x_i) x_i^2 j_n(x_i y) at each target y."""
    targets = np.asarray(targets, dtype=float)
    wf = rule.weights * rule.nodes ** 2 * np.asarray(values, dtype=float)
    out = np.empty(targets.shape)
    flat_t = targets.ravel()
    flat_o = out.ravel()
    for s in range(0, flat_t.size, chunk):
        z = np.outer(flat_t[s:s + chunk], rule.nodes)
        flat_o[s:s + chunk] = spherical_jn(order, z) @ wf
    return SQRT_2_PI * out


def _tail_ratio(profile: RadialProfile) -> float:
    mag = profile.magnitude() * profile.nodes ** 2
    peak = float(np.max(mag)) if mag.size else 0.0
    return float(mag[-1] / peak) if peak > 0 else 0.0


def _transform(profile: RadialProfile, targets_rule: QuadratureRule,
               domain: str, tail_tol: float) -> RadialProfile:
    ratio = _tail_ratio(profile)
    if ratio > tail_tol:
        warnings.warn(f"truncated support: tail weight ratio {ratio:.3e} exceeds "
                      f"{tail_tol:.1e}", TruncationWarning, stacklevel=3)
    y = targets_rule.nodes
    meta = {"truncation_ratio": ratio}
    if profile.tag == "scalar":
        vals = hankel(0, profile.rule, profile.values, y)
        return RadialProfile(targets_rule, vals, "scalar", domain=domain, meta=meta)
    if profile.tag == "radial-vector":
        vals = hankel(1, profile.rule, profile.values, y)
        return RadialProfile(targets_rule, vals, "radial-vector", domain=domain, meta=meta)
    a, b = profile.values, profile.aux
    trace = hankel(0, profile.rule, 3 * a + b, y)
    b_new = -hankel(2, profile.rule, b, y)
    a_new = (trace - b_new) / 3
    return RadialProfile(targets_rule, a_new, "radial-tensor", aux=b_new,
                         domain=domain, meta=meta)


def radial_synthesize(profile_hat: RadialProfile, targets, tail_tol: float = 1e-12):
    """Space-side profile from a frequency-side profile.

    ``targets`` is a :class:`QuadratureRule` (so the result can be integrated)
    or an array of radii.
    """
    rule = targets if isinstance(targets, QuadratureRule) else _bare_rule(targets)
    return _transform(profile_hat, rule, "space", tail_tol)


def radial_analyze(profile: RadialProfile, targets, tail_tol: float = 1e-12):
    """Frequency-side profile from a space-side profile (same transform pair)."""
    rule = targets if isinstance(targets, QuadratureRule) else _bare_rule(targets)
    return _transform(profile, rule, "frequency", tail_tol)


def _bare_rule(points) -> QuadratureRule:
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    return QuadratureRule(pts, np.zeros_like(pts), kind="points")


# ---------------------------------------------------------------- CSV output

def format_number(x) -> str:
    """Shortest round-trip decimal representation."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns: dict) -> None:
    """Write equal-length columns with full-precision numbers."""
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError("columns must have equal length")
    import io
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(names)
    for row in zip(*cols):
        wr.writerow([format_number(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def write_profile_csv(path, profile: RadialProfile) -> None:
    cols = {"r" if profile.domain == "space" else "k": profile.nodes,
            "value": profile.values}
    if profile.aux is not None:
        cols = {**cols, "aux": profile.aux}
    write_csv(path, cols)


__all__ = [
    "TruncationWarning", "set_fft_workers", "forward", "inverse", "spectral_transform", "inverse_transform",
    "derivative", "gradient", "dealias_mask", "nyquist_mask", "plancherel_sum", "pointwise_magnitude",
    "grid_lp_norm", "box_truncation_estimate", "sobolev_seminorm", "sobolev_norm",
    "QuadratureRule", "gauss_panels", "RadialProfile", "radial_lp_from_magnitude",
    "lp_norm", "spherical_jn", "spherical_j1_over_z", "hankel", "radial_synthesize",
    "radial_analyze", "format_number", "atomic_write_text", "write_csv",
    "write_profile_csv",
]
