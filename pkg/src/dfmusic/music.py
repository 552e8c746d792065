"""SVD, noise-subspace projectors and MUSIC imaging maps."""

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import maximum_filter

from .forward import MatrixKind, NumericalError

PEAK_CAP = 1e6
XI_SWEEP_COUNT = 16
_CHUNK = 8192


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


class Polarization(str, enum.Enum):
    TM = "tm"          # f_eps test vector
    TE = "te"          # f_mu test vector with polarization direction xi
    TE_EPS = "te_eps"  # f_eps test vector against TE data


@dataclass(frozen=True)
class RankPolicy:
    kind: str = "threshold"
    value: float = 0.1

    def __post_init__(self):
        if self.kind not in ("fixed", "threshold"):
            raise ValueError(f"unknown rank policy {self.kind!r}")
        if self.kind == "threshold" and not (0 < self.value <= 1):
            raise ValueError("threshold must lie in (0, 1]")

    @classmethod
    def fixed(cls, r):
        return cls("fixed", int(r))

    @classmethod
    def threshold(cls, tau):
        return cls("threshold", float(tau))

    @classmethod
    def parse(cls, text):
        """'threshold:0.1' or 'fixed:3'."""
        kind, _, value = str(text).partition(":")
        kind = kind.strip().lower()
        if not value:
            raise ValueError(f"rank policy needs a value: {text!r}")
        return cls.fixed(int(value)) if kind == "fixed" else cls(kind, float(value))

    def __str__(self):
        return f"{self.kind}:{self.value:g}"


@dataclass(frozen=True, eq=False)
class SubspaceDecomposition:
    singular_values: np.ndarray
    left: np.ndarray   # columns are U_n
    right: np.ndarray  # columns are V_n
    signal_rank: int = None

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])

    def with_rank(self, r):
        r = int(r)
        if not 1 <= r < min(self.shape):
            raise ValueError(f"signal rank must satisfy 1 <= r < {min(self.shape)}, got {r}")
        return replace(self, signal_rank=r)

    def normalized_spectrum(self):
        s = self.singular_values
        return s / s[0]


@dataclass(eq=False)
class ImagingMap:
    grid: object
    values: np.ndarray  # (ny, nx), x fastest
    peak_cap: float = PEAK_CAP
    metadata: dict = field(default_factory=dict)

    def argmax(self):
        """(iy, ix) of the global maximum; lowest linear index wins ties."""
        return np.unravel_index(int(np.argmax(self.values)), self.values.shape)


def decompose(msr):
    entries = msr.entries if hasattr(msr, "entries") else np.asarray(msr, dtype=complex)
    if not np.any(entries):
        raise ValueError("cannot decompose an all-zero matrix")
    try:
        U, s, Vh = np.linalg.svd(entries, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return SubspaceDecomposition(s, U, Vh.conj().T)


def select_signal_rank(singular_values, policy):
    s = np.asarray(singular_values, dtype=float)
    if policy.kind == "fixed":
        r = int(policy.value)
        if not 1 <= r <= len(s):
            raise ValueError(f"fixed rank {r} outside 1..{len(s)}")
        return r
    if s[0] <= 0:
        raise ValueError("largest singular value is zero")
    return int(np.max(np.nonzero(s >= policy.value * s[0])[0])) + 1


def noise_projection(dec, side=Side.LEFT):
    """P = I - sum_{n<=r} u_n u_n^* (left) or I - sum v_n v_n^* (right)."""
    if dec.signal_rank is None:
        raise ValueError("signal rank not set")
    basis = dec.left if Side(side) is Side.LEFT else dec.right
    Q = basis[:, : dec.signal_rank]
    return np.eye(basis.shape[0]) - Q @ Q.conj().T


# ------------------------------------------------------------------ test vectors

def steering_tm(points, directions, k):
    """Rows are f(x) = N^{-1/2} (exp(i k theta_n . x))_n for each point x."""
    points = np.atleast_2d(points)
    directions = np.asarray(directions, dtype=float)
    return np.exp(1j * k * (points @ directions.T)) / np.sqrt(len(directions))


def steering_te(points, xi, directions, k):
    directions = np.asarray(directions, dtype=float)
    weights = np.sqrt(2.0) * (directions @ np.asarray(xi, dtype=float))
    return steering_tm(points, directions, k) * weights[None, :]


def test_vector_tm(x, directions, k):
    return steering_tm(np.asarray(x, dtype=float)[None, :], directions, k)[0]


def test_vector_te(x, xi, directions, k):
    xi = np.asarray(xi, dtype=float)
    if abs(np.hypot(*xi) - 1.0) > 1e-12:
        raise ValueError("xi must be a unit vector")
    return steering_te(np.asarray(x, dtype=float)[None, :], xi, directions, k)[0]


def receiver_vector(x, observation, k):
    """g(x) = N_rx^{-1/2} (exp(-i k vartheta_j . x))_j."""
    return steering_tm(np.asarray(x, dtype=float)[None, :], -np.asarray(observation), k)[0]


def xi_from_angle(angle):
    return np.array([np.cos(angle), np.sin(angle)])


# ------------------------------------------------------------------ imaging

def _residual_norms(vectors, basis):
    # |(I - Q Q^*) t| for each row t
    coeffs = vectors @ basis.conj()
    return np.linalg.norm(vectors - coeffs @ basis.T, axis=1)


def _side_values(dec, points, side, polarization, xi, k, incident, observation):
    """Reciprocal residuals for one side.

    The column space of M is spanned by receiver steering vectors over -vartheta,
    the row space by conj of transmitter steering vectors over theta; for the
    symmetric layout (vartheta = -theta) both reduce to f(x).
    """
    if side is Side.LEFT:
        directions, basis, conj = -np.asarray(observation), dec.left[:, : dec.signal_rank], False
    else:
        directions, basis, conj = np.asarray(incident), dec.right[:, : dec.signal_rank], True
    out = np.empty(len(points))
    for start in range(0, len(points), _CHUNK):
        chunk = points[start:start + _CHUNK]
        if polarization is Polarization.TE:
            vec = steering_te(chunk, xi, directions, k)
        else:
            vec = steering_tm(chunk, directions, k)
        if conj:
            vec = vec.conj()
        out[start:start + _CHUNK] = _residual_norms(vec, basis)
    return out


def _reciprocal(res, cap):
    with np.errstate(divide="ignore"):
        v = 1.0 / res
    return np.minimum(np.where(np.isfinite(v), v, cap), cap)


def image_map(dec, grid, *, k, incident, observation, polarization=Polarization.TM,
              side=Side.LEFT, xi=(1.0, 0.0), xi_sweep=False, peak_cap=PEAK_CAP, metadata=None):
    """MUSIC map 1/|P_noise t(x)| over the grid pixels (capped at ``peak_cap``).

    ``side=BOTH`` averages the left (receiver) and right (transmitter) maps.
    ``xi_sweep`` replaces the fixed TE direction by the pixelwise maximum over
    16 equispaced directions.
    """
    if dec.signal_rank is None or dec.signal_rank < 1:
        raise ValueError("decomposition has no signal rank")
    polarization, side = Polarization(polarization), Side(side)
    points = grid.points()
    xis = [np.asarray(xi, dtype=float)]
    if polarization is Polarization.TE and xi_sweep:
        xis = [xi_from_angle(np.pi * j / XI_SWEEP_COUNT) for j in range(XI_SWEEP_COUNT)]
        # xi and -xi give identical maps, so half the circle suffices
    sides = [Side.LEFT, Side.RIGHT] if side is Side.BOTH else [side]
    best = None
    for x in xis:
        acc = np.zeros(len(points))
        for s in sides:
            acc += _reciprocal(_side_values(dec, points, s, polarization, x, k, incident, observation), peak_cap)
        acc = np.minimum(acc / len(sides), peak_cap)
        best = acc if best is None else np.maximum(best, acc)
    meta = {"polarization": polarization.value, "side": side.value, "signal_rank": dec.signal_rank,
            "xi": "sweep" if (xi_sweep and polarization is Polarization.TE) else [float(v) for v in xi]}
    meta.update(metadata or {})
    return ImagingMap(grid, best.reshape(grid.ny, grid.nx), peak_cap, meta)


def music_map(msr, grid, policy=RankPolicy(), polarization=Polarization.TM, side=None, **kwargs):
    """Decompose ``msr``, pick the signal rank and image it in one call."""
    dec = decompose(msr)
    dec = dec.with_rank(select_signal_rank(dec.singular_values, policy))
    if side is None:
        side = Side.BOTH if msr.kind is MatrixKind.BISTATIC or msr.shape[0] != msr.shape[1] else Side.LEFT
    meta = {"matrix_kind": msr.kind.value, "frequency": msr.frequency, "N": msr.array.N,
            "wavenumber": msr.wavenumber, "rank_policy": str(policy)}
    return image_map(dec, grid, k=msr.wavenumber, incident=msr.array.incident,
                     observation=msr.array.observation, polarization=polarization,
                     side=side, metadata=meta, **kwargs), dec


def combined_bistatic_map(msr, grid, policy=RankPolicy(), **kwargs):
    """Half-sum of receiver-side and transmitter-side TM maps for non-symmetric data."""
    return music_map(msr, grid, policy, Polarization.TM, Side.BOTH, **kwargs)[0]


def te_map_pair(msr, grid, policy=RankPolicy(), xi=(1.0, 0.0)):
    """Both TE maps (f_eps and f_mu against the same projector) and their max
    reciprocal difference; the two are not assumed equal."""
    eps_map, dec = music_map(msr, grid, policy, Polarization.TE_EPS)
    mu_map, _ = music_map(msr, grid, policy, Polarization.TE, xi=xi)
    diff = float(np.max(np.abs(1.0 / eps_map.values - 1.0 / mu_map.values)))
    return eps_map, mu_map, diff


# ------------------------------------------------------------------ peak analysis

def local_maxima(values, size=5):
    """Boolean mask of pixels equal to the maximum of their size x size window."""
    return values == maximum_filter(values, size=size, mode="nearest")


def peak_near(imap, center, search_radius):
    """Argmax of the map inside a disk around ``center``.

    Returns ``(iy, ix, distance_in_pixels)`` where the distance is measured from the
    pixel nearest to ``center``.
    """
    grid = imap.grid
    pts = grid.points()
    inside = np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]) <= search_radius
    if not np.any(inside):
        raise ValueError("search disk contains no pixels")
    flat = np.where(inside, imap.values.ravel(), -np.inf)
    iy, ix = np.unravel_index(int(np.argmax(flat)), imap.values.shape)
    cy, cx = grid.nearest_index(center)
    return int(iy), int(ix), float(np.hypot(iy - cy, ix - cx))


def nearest_local_max_distance(imap, center, size=5):
    """Pixel distance from the pixel nearest ``center`` to the closest local maximum."""
    peaks = np.argwhere(local_maxima(imap.values, size))
    cy, cx = imap.grid.nearest_index(center)
    return float(np.min(np.hypot(peaks[:, 0] - cy, peaks[:, 1] - cx)))


# keep pytest from collecting these when imported into test modules
test_vector_tm.__test__ = False
test_vector_te.__test__ = False
