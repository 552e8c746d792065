"""Closed-form direction sums and predicted MUSIC maps for one small inclusion."""

import math
from dataclasses import dataclass

import numpy as np

from .music import PEAK_CAP, ImagingMap
from .specfun import bessel_j

SQRT2 = math.sqrt(2.0)


def c_eps(N):
    """C_eps = 1/(N-1)^2, fixed by requiring |P_noise f(z)| = 0."""
    return 1.0 / (N - 1) ** 2


def c_mu(N):
    """C_mu = (4 + 2 sqrt 2)/(N^2 - 4N + 4 + 2 sqrt 2) (conjectured closed form)."""
    return (4.0 + 2.0 * SQRT2) / (N * N - 4.0 * N + 4.0 + 2.0 * SQRT2)


@dataclass(frozen=True)
class TheoryParams:
    N: int
    k_b: float
    z: tuple

    def __post_init__(self):
        if self.N < 3:
            raise ValueError("N must be >= 3")
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))

    @property
    def C_eps(self):
        return c_eps(self.N)

    @property
    def C_mu(self):
        return c_mu(self.N)


# ------------------------------------------------------------------ identities

def _points(x):
    return np.atleast_2d(np.asarray(x, dtype=float))


def _scalar_or_array(values, x):
    return values[0] if np.ndim(x) == 1 else values


def identity_j0_sum(x, directions, k):
    """(1/N) sum_n exp(i k theta_n . x), approximately J0(k|x|) for large N."""
    d = np.asarray(directions, dtype=float)
    vals = np.exp(1j * k * (_points(x) @ d.T)).mean(axis=1)
    return _scalar_or_array(vals, x)


def identity_j1_sum(x, xi, directions, k):
    """sum_n (xi . theta_n) exp(i k theta_n . x)."""
    d = np.asarray(directions, dtype=float)
    w = d @ np.asarray(xi, dtype=float)
    vals = np.exp(1j * k * (_points(x) @ d.T)) @ w
    return _scalar_or_array(vals, x)


def identity_j2_sum(x, xi, theta_m, directions, k):
    """sum_n (theta_m . theta_n)(xi . theta_n) exp(i k theta_n . x)."""
    d = np.asarray(directions, dtype=float)
    w = (d @ np.asarray(theta_m, dtype=float)) * (d @ np.asarray(xi, dtype=float))
    vals = np.exp(1j * k * (_points(x) @ d.T)) @ w
    return _scalar_or_array(vals, x)


def second_moment(xi, directions):
    """sum_n (xi . theta_n)^2; equals N/2 for uniform directions with N >= 3."""
    return float(np.sum((np.asarray(directions) @ np.asarray(xi, dtype=float)) ** 2))


def _unit_and_radius(x):
    p = _points(x)
    r = np.hypot(p[:, 0], p[:, 1])
    if np.any(r == 0):
        raise ValueError("closed form needs x != 0 (direction x/|x| undefined)")
    return p / r[:, None], r


def j1_closed_form(x, xi, N, k):
    """i N (x/|x| . xi) J1(k|x|)."""
    u, r = _unit_and_radius(x)
    vals = 1j * N * (u @ np.asarray(xi, dtype=float)) * bessel_j(1, k * r)
    return _scalar_or_array(vals, x)


def j2_closed_form(x, xi, theta_m, N, k):
    """(N/2)(theta_m . xi)(J0 + J2)(k|x|) - N (x^ . theta_m)(x^ . xi) J2(k|x|)."""
    xi = np.asarray(xi, dtype=float)
    theta_m = np.asarray(theta_m, dtype=float)
    u, r = _unit_and_radius(x)
    j0, j2 = bessel_j(0, k * r), bessel_j(2, k * r)
    vals = 0.5 * N * float(theta_m @ xi) * (j0 + j2) - N * (u @ theta_m) * (u @ xi) * j2
    return _scalar_or_array(vals, x)


# ------------------------------------------------------------------ predicted maps

def tm_prefactor(N):
    return (N * N - 2.0 * N + 1.0) / (N * N - 2.0 * N)


def te_prefactor(N):
    return (N * N - 4.0 * N + 4.0 + 2.0 * SQRT2) / (N * N - 4.0 * N)


def tm_residual(x, params):
    """Predicted |P_noise f(x)| = (1 - C_eps)(1 - J0(k|x-z|)^2)^{1/2}."""
    r = np.hypot(*(_points(x) - np.asarray(params.z)).T)
    j0 = bessel_j(0, params.k_b * r)
    vals = (1.0 - params.C_eps) * np.sqrt(np.clip(1.0 - j0 * j0, 0.0, None))
    return _scalar_or_array(vals, x)


def te_bracket(x, params):
    """(1-C)^2 - 2C(1-C)N(N/2-2)J1^2 + C^2 (N^2/2)(N/2-2)^2 J1^2, C = C_mu."""
    N, C = params.N, params.C_mu
    r = np.hypot(*(_points(x) - np.asarray(params.z)).T)
    j1sq = bessel_j(1, params.k_b * r) ** 2
    a = N * (N / 2.0 - 2.0)
    vals = (1 - C) ** 2 - 2 * C * (1 - C) * a * j1sq + C * C * (N * N / 2.0) * (N / 2.0 - 2.0) ** 2 * j1sq
    return _scalar_or_array(vals, x)


def _cap_reciprocal(res, cap):
    with np.errstate(divide="ignore"):
        v = 1.0 / np.asarray(res, dtype=float)
    return np.minimum(np.where(np.isfinite(v), v, cap), cap)


def theorem_tm_map(x, params, peak_cap=PEAK_CAP):
    """((N^2-2N+1)/(N^2-2N)) (1 - J0(k|x-z|)^2)^{-1/2}, capped."""
    vals = _cap_reciprocal(np.atleast_1d(tm_residual(_points(x), params)), peak_cap)
    return _scalar_or_array(vals, x)


def theorem_te_map(x, params, peak_cap=PEAK_CAP):
    if params.N < 5:
        raise ValueError("TE structure needs N >= 5 (N/2 - 2 > 0)")
    bracket = np.atleast_1d(te_bracket(_points(x), params))
    vals = _cap_reciprocal(np.sqrt(np.clip(bracket, 0.0, None)), peak_cap)
    return _scalar_or_array(vals, x)


def predicted_map(grid, params, polarization="tm", peak_cap=PEAK_CAP):
    fn = theorem_tm_map if polarization == "tm" else theorem_te_map
    values = fn(grid.points(), params, peak_cap).reshape(grid.ny, grid.nx)
    meta = {"polarization": polarization, "N": params.N, "wavenumber": params.k_b,
            "source": "theory", "z": list(params.z)}
    return ImagingMap(grid, values, peak_cap, meta)


# ------------------------------------------------------------------ C_eps estimators

def c_eps_from_matrix(K):
    """Empirical C_eps from the defining relation K K^* / sigma_1^2 = C_eps * [(N-1) on the diagonal ...].

    Uses the mean diagonal of K K^* so it needs no knowledge of the scatterer.
    """
    K = np.asarray(getattr(K, "entries", K))
    N = K.shape[0]
    s1 = np.linalg.svd(K, compute_uv=False)[0]
    gram_diag = np.sum(np.abs(K) ** 2, axis=1)
    return float(np.mean(gram_diag) / ((N - 1) * s1 * s1))


def c_eps_from_prefactor(scene, sigma1, include_phase_modulus=True):
    """Closed-form C_eps = |a|^2 / sigma_1^2 with a the Born prefactor.

    With ``include_phase_modulus=False`` the |1+i|^2 = 2 factor is dropped, which
    reproduces the often-quoted (alpha^2 k^2 (eps_a-eps_b) pi / (2 sigma_1 sqrt(k pi eps_b mu_b)))^2
    and is exactly twice the true value.
    """
    bg = scene.background
    incl = scene.inhomogeneities[0]
    k = 2.0 * np.pi * bg.frequency * math.sqrt(bg.epsilon_b * bg.mu_b)
    base = (incl.radius**2 * k**2 * (incl.epsilon_a - bg.epsilon_b) * np.pi
            / (2.0 * sigma1 * math.sqrt(k * np.pi * bg.epsilon_b * bg.mu_b))) ** 2
    return base / 2.0 if include_phase_modulus else base


# ------------------------------------------------------------------ comparison

def compare_maps(empirical, predicted, exclusion_radius=None, centers=()):
    """Metrics on reciprocal fields 1/F outside ``exclusion_radius`` of every center.

    Returns ``{"linf", "l2_rel", "correlation"}``. The default exclusion radius is
    one pixel (the larger pitch).
    """
    ge, gp = empirical.grid, predicted.grid
    if ge != gp or empirical.values.shape != predicted.values.shape:
        raise ValueError("maps live on different grids")
    if exclusion_radius is None:
        exclusion_radius = max(ge.pitch)
    pts = ge.points()
    keep = np.ones(len(pts), dtype=bool)
    for c in centers:
        keep &= np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) > exclusion_radius
    a = 1.0 / empirical.values.ravel()[keep]
    b = 1.0 / predicted.values.ravel()[keep]
    diff = a - b
    linf = float(np.max(np.abs(diff))) if diff.size else 0.0
    norm_b = np.linalg.norm(b)
    l2_rel = float(np.linalg.norm(diff) / norm_b) if norm_b > 0 else 0.0
    if np.array_equal(a, b):
        corr = 1.0
    else:
        sa, sb = a.std(), b.std()
        corr = float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)) if sa > 0 and sb > 0 else 0.0
    return {"linf": linf, "l2_rel": l2_rel, "correlation": corr}
