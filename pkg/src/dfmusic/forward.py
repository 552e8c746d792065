"""Far-field data synthesis and MSR matrix manipulation."""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .scene import ContrastMode, ArrayConfig, wavenumber
from .specfun import hankel1


class NumericalError(RuntimeError):
    """Raised when a linear solve or decomposition cannot be trusted."""


class MatrixKind(str, enum.Enum):
    FULL = "full"
    DIAGONAL_FREE = "diagonal_free"
    BISTATIC = "bistatic"


class Generator(str, enum.Enum):
    BORN = "born"
    FOLDY_LAX = "foldy_lax"


@dataclass(frozen=True, eq=False)
class MSRMatrix:
    entries: np.ndarray
    mask: np.ndarray
    kind: MatrixKind
    array: ArrayConfig
    frequency: float
    wavenumber: float
    seed: int = None

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        mask = np.array(self.mask, dtype=bool)
        if entries.shape != mask.shape or entries.shape != self.array.shape:
            raise ValueError("entries, mask and array shapes disagree")
        entries[~mask] = 0.0
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "kind", MatrixKind(self.kind))
        if self.kind is MatrixKind.DIAGONAL_FREE:
            n = entries.shape[0]
            if entries.shape != (n, n) or not np.array_equal(mask, ~np.eye(n, dtype=bool)):
                raise ValueError("diagonal-free matrix must be square with exactly the diagonal unmeasured")

    @property
    def shape(self):
        return self.entries.shape

    def with_entries(self, entries, **changes):
        return replace(self, entries=entries, **changes)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float = 20.0
    rng_seed: int = 0


def born_coefficient(scene, inclusion):
    """Common prefactor alpha^2 pi k^2 (1+i) / (4 sqrt(k pi)) of the small-volume expansion."""
    k = wavenumber(scene.background)
    return inclusion.radius**2 * np.pi * k**2 * (1 + 1j) / (4.0 * math.sqrt(k * np.pi))


def _contrast_terms(scene, inclusion):
    bg = scene.background
    eps_term = (inclusion.epsilon_a - bg.epsilon_b) / math.sqrt(bg.epsilon_b * bg.mu_b)
    # the dipole term only exists when the permeability actually jumps
    mu_term = 2.0 * bg.mu_b / (inclusion.mu_a + bg.mu_b) if inclusion.mu_a != bg.mu_b else 0.0
    return eps_term, mu_term


def born_matrix(scene, observation, incident):
    """u_inf(vartheta_m, theta_n) for all receiver/transmitter pairs, single scattering."""
    obs = np.atleast_2d(np.asarray(observation, dtype=float))
    inc = np.atleast_2d(np.asarray(incident, dtype=float))
    k = wavenumber(scene.background)
    cos_angle = obs @ inc.T
    out = np.zeros((len(obs), len(inc)), dtype=complex)
    for incl in scene.inhomogeneities:
        z = np.asarray(incl.center)
        eps_term, mu_term = _contrast_terms(scene, incl)
        phase = np.exp(-1j * k * (obs @ z))[:, None] * np.exp(1j * k * (inc @ z))[None, :]
        out += born_coefficient(scene, incl) * (eps_term - mu_term * cos_angle) * phase
    return out


def born_farfield(scene, observation, incident):
    """Scalar far-field pattern for one observation/incident pair."""
    return complex(born_matrix(scene, observation, incident)[0, 0])


def foldy_lax_matrix(scene, observation, incident, max_condition=1e12):
    """Point-scatterer multiple scattering for permittivity contrasts.

    Each scatterer p radiates with strength tau_p = alpha_p^2 pi k^2 (eps_a - eps_b)/sqrt(eps_b mu_b)
    through the 2D Green's function (i/4) H0(k r), whose far field is
    e^{i pi/4}/sqrt(8 pi k) e^{-i k vartheta.z}. That constant equals (1+i)/(4 sqrt(k pi)),
    so a lone scatterer reproduces ``born_matrix`` exactly.
    """
    if scene.contrast_mode is not ContrastMode.PERMITTIVITY:
        raise ValueError("Foldy-Lax generation is implemented for permittivity contrast only")
    obs = np.atleast_2d(np.asarray(observation, dtype=float))
    inc = np.atleast_2d(np.asarray(incident, dtype=float))
    k = wavenumber(scene.background)
    centers = scene.centers
    P = len(centers)
    dist = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    off = ~np.eye(P, dtype=bool)
    if np.any(dist[off] == 0):
        raise ValueError("inclusion centers must be pairwise distinct")
    tau = np.array([c.radius**2 * np.pi * k**2 * _contrast_terms(scene, c)[0]
                    for c in scene.inhomogeneities])
    G = np.zeros((P, P), dtype=complex)
    if P > 1:
        G[off] = 0.25j * hankel1(0, k * dist[off])
    system = np.eye(P) - G * tau[None, :]
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > max_condition:
        raise NumericalError(f"Foldy-Lax system is near resonance (condition number {cond:.3e})")
    u_inc = np.exp(1j * k * centers @ inc.T)
    u_total = np.linalg.solve(system, u_inc)  # field exciting each scatterer
    radiation = (1 + 1j) / (4.0 * math.sqrt(k * np.pi)) * np.exp(-1j * k * obs @ centers.T)
    return radiation @ (tau[:, None] * u_total)


def foldy_lax_farfield(scene, array):
    return assemble_msr(scene, array, Generator.FOLDY_LAX)


def assemble_msr(scene, array, generator=Generator.BORN):
    generator = Generator(generator)
    if generator is Generator.BORN:
        entries = born_matrix(scene, array.observation, array.incident)
    else:
        entries = foldy_lax_matrix(scene, array.observation, array.incident)
    full = ArrayConfig(array.incident, array.observation, np.ones(array.shape, dtype=bool))
    return MSRMatrix(entries, full.mask, MatrixKind.FULL, full,
                     scene.background.frequency, wavenumber(scene.background))


def strip_diagonal(msr):
    """Zero the monostatic entries (the diagonal), as when they cannot be measured."""
    n, m = msr.shape
    if n != m:
        raise ValueError(f"diagonal stripping needs a square matrix, got {msr.shape}")
    mask = msr.mask & ~np.eye(n, dtype=bool)
    if not np.all(mask[~np.eye(n, dtype=bool)]):
        raise ValueError("diagonal-free matrix needs every off-diagonal entry measured")
    array = ArrayConfig(msr.array.incident, msr.array.observation, mask)
    return MSRMatrix(msr.entries, mask, MatrixKind.DIAGONAL_FREE, array,
                     msr.frequency, msr.wavenumber, msr.seed)


def apply_mask(msr, mask):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != msr.shape:
        raise ValueError(f"mask shape {mask.shape} does not match matrix shape {msr.shape}")
    new_mask = msr.mask & mask
    array = ArrayConfig(msr.array.incident, msr.array.observation, new_mask)
    return MSRMatrix(msr.entries, new_mask, MatrixKind.BISTATIC, array,
                     msr.frequency, msr.wavenumber, msr.seed)


def add_noise(msr, spec):
    """Circular complex white Gaussian noise on measured entries only.

    The per-entry variance is chosen so that the expected ratio
    ||signal||_F^2 / ||noise||_F^2 over measured entries equals 10^(snr_db/10).
    ``snr_db = inf`` returns the matrix untouched.
    """
    if math.isinf(spec.snr_db) and spec.snr_db > 0:
        return msr
    if not math.isfinite(spec.snr_db):
        raise ValueError("snr_db must be finite or +inf")
    measured = msr.mask
    count = int(measured.sum())
    signal_power = float(np.sum(np.abs(msr.entries[measured]) ** 2))
    variance = signal_power / (10.0 ** (spec.snr_db / 10.0)) / count
    rng = np.random.default_rng(spec.rng_seed)
    noise = rng.standard_normal(msr.shape) + 1j * rng.standard_normal(msr.shape)
    noise *= math.sqrt(variance / 2.0)
    noise[~measured] = 0.0
    return msr.with_entries(msr.entries + noise, seed=spec.rng_seed)


def realized_snr_db(clean, noisy):
    m = clean.mask
    sig = np.sum(np.abs(clean.entries[m]) ** 2)
    err = np.sum(np.abs(noisy.entries[m] - clean.entries[m]) ** 2)
    return 10.0 * math.log10(sig / err)
