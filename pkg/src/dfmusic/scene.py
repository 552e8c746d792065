"""Physical configuration: background medium, inclusions, direction arrays, ROI grid."""

import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# anechoic-chamber vacuum values used throughout the examples
VACUUM_PERMITTIVITY = 8.854e-12
VACUUM_PERMEABILITY = 1.257e-6

SMALL_INCLUSION_LIMIT = 0.5  # k_b * radius above this triggers a warning


class ContrastMode(str, enum.Enum):
    PERMITTIVITY = "permittivity"
    PERMEABILITY = "permeability"


@dataclass(frozen=True)
class Background:
    epsilon_b: float
    mu_b: float
    frequency: float

    def __post_init__(self):
        for name in ("epsilon_b", "mu_b", "frequency"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def wavenumber(self):
        return wavenumber(self)

    def at_frequency(self, frequency):
        return Background(self.epsilon_b, self.mu_b, frequency)


@dataclass(frozen=True)
class Inhomogeneity:
    center: tuple
    radius: float
    epsilon_a: float
    mu_a: float

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 2 or not all(math.isfinite(c) for c in center):
            raise ValueError(f"center must be a finite 2-vector, got {self.center!r}")
        object.__setattr__(self, "center", center)
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if not (self.epsilon_a > 0 and self.mu_a > 0):
            raise ValueError("epsilon_a and mu_a must be > 0")


@dataclass(frozen=True)
class Scene:
    background: Background
    inhomogeneities: tuple
    contrast_mode: ContrastMode = ContrastMode.PERMITTIVITY

    def __post_init__(self):
        object.__setattr__(self, "inhomogeneities", tuple(self.inhomogeneities))
        object.__setattr__(self, "contrast_mode", ContrastMode(self.contrast_mode))
        if not self.inhomogeneities:
            raise ValueError("scene needs at least one inhomogeneity")
        bg = self.background
        for inc in self.inhomogeneities:
            if self.contrast_mode is ContrastMode.PERMITTIVITY and inc.mu_a != bg.mu_b:
                raise ValueError("permittivity mode requires mu_a == mu_b for every inclusion")
            if self.contrast_mode is ContrastMode.PERMEABILITY and inc.epsilon_a != bg.epsilon_b:
                raise ValueError("permeability mode requires epsilon_a == epsilon_b for every inclusion")
        k = wavenumber(bg)
        for inc in self.inhomogeneities:
            if k * inc.radius > SMALL_INCLUSION_LIMIT:
                log.warning(
                    "inclusion at %s is not small: k_b*radius = %.3g > %.2g",
                    inc.center, k * inc.radius, SMALL_INCLUSION_LIMIT,
                )

    @property
    def centers(self):
        return np.array([inc.center for inc in self.inhomogeneities])

    def at_frequency(self, frequency):
        return Scene(self.background.at_frequency(frequency), self.inhomogeneities, self.contrast_mode)


@dataclass(frozen=True, eq=False)
class ArrayConfig:
    """Incident directions theta_n, observation directions vartheta_m and a
    (receiver, transmitter) measurement mask."""

    incident: np.ndarray
    observation: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        inc = np.asarray(self.incident, dtype=float)
        obs = np.asarray(self.observation, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        for name, d in (("incident", inc), ("observation", obs)):
            if d.ndim != 2 or d.shape[1] != 2 or len(d) == 0:
                raise ValueError(f"{name} directions must have shape (n, 2)")
            if np.max(np.abs(np.hypot(d[:, 0], d[:, 1]) - 1.0)) > 1e-12:
                raise ValueError(f"{name} directions must be unit vectors")
        if mask.shape != (len(obs), len(inc)):
            raise ValueError(f"mask shape {mask.shape} != (receivers, transmitters) {(len(obs), len(inc))}")
        for name, value in (("incident", inc), ("observation", obs), ("mask", mask)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def N(self):
        return len(self.incident)

    @property
    def shape(self):
        return self.mask.shape

    @classmethod
    def full_view(cls, N):
        """Backscattering-symmetric layout: vartheta_n = -theta_n, everything measured."""
        theta = uniform_directions(N)
        return cls(theta, -theta, np.ones((N, N), dtype=bool))

    def __eq__(self, other):
        if not isinstance(other, ArrayConfig):
            return NotImplemented
        return (
            np.array_equal(self.incident, other.incident)
            and np.array_equal(self.observation, other.observation)
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(frozen=True)
class ROIGrid:
    x_min: float = -0.1
    x_max: float = 0.1
    y_min: float = -0.1
    y_max: float = 0.1
    nx: int = 256
    ny: int = 256

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("degenerate grid extent")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 pixels per axis")

    @property
    def pitch(self):
        return ((self.x_max - self.x_min) / self.nx, (self.y_max - self.y_min) / self.ny)

    def axes(self):
        """Pixel-center coordinates along x and y."""
        hx, hy = self.pitch
        xs = self.x_min + hx * (np.arange(self.nx) + 0.5)
        ys = self.y_min + hy * (np.arange(self.ny) + 0.5)
        return xs, ys

    def points(self):
        """(ny*nx, 2) pixel centers, row-major with x fastest."""
        xs, ys = self.axes()
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])

    def nearest_index(self, point):
        """(iy, ix) of the pixel whose center is closest to ``point``."""
        hx, hy = self.pitch
        ix = int(np.clip(np.floor((point[0] - self.x_min) / hx), 0, self.nx - 1))
        iy = int(np.clip(np.floor((point[1] - self.y_min) / hy), 0, self.ny - 1))
        return iy, ix


def uniform_directions(N):
    """theta_n = (cos 2 pi n/N, sin 2 pi n/N) for n = 1..N (first entry at angle 2 pi/N)."""
    if int(N) != N or N < 3:
        raise ValueError(f"need N >= 3 directions, got {N!r}")
    angles = 2.0 * np.pi * np.arange(1, int(N) + 1) / int(N)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def wavenumber(background):
    b = background
    return 2.0 * np.pi * b.frequency * math.sqrt(b.epsilon_b * b.mu_b)


BENCHMARK_CENTERS = ((0.07, 0.05), (-0.07, 0.00), (0.02, -0.05))
BENCHMARK_RADIUS = 0.01
BENCHMARK_CONTRAST = 5.0


def benchmark_scene(mode=ContrastMode.PERMITTIVITY, frequency=2e9, N=36, nx=256, ny=256):
    """Three-inclusion chamber configuration with a full-view N-direction array.

    Returns ``(scene, array, grid)``.
    """
    mode = ContrastMode(mode)
    bg = Background(VACUUM_PERMITTIVITY, VACUUM_PERMEABILITY, frequency)
    eps_a, mu_a = bg.epsilon_b, bg.mu_b
    if mode is ContrastMode.PERMITTIVITY:
        eps_a = BENCHMARK_CONTRAST * bg.epsilon_b
    else:
        mu_a = BENCHMARK_CONTRAST * bg.mu_b
    incs = [Inhomogeneity(c, BENCHMARK_RADIUS, eps_a, mu_a) for c in BENCHMARK_CENTERS]
    return Scene(bg, incs, mode), ArrayConfig.full_view(N), ROIGrid(-0.1, 0.1, -0.1, 0.1, nx, ny)


# Fresnel-style bistatic layout: transmitters every 10 deg, receivers
# every 5 deg, receivers within 60 deg of the transmitter unavailable.
FRESNEL_TX_STEP_DEG = 10
FRESNEL_RX_STEP_DEG = 5
FRESNEL_RX_MIN_OFFSET_DEG = 60
FRESNEL_RX_MAX_OFFSET_DEG = 300


def fresnel_angles():
    tx = np.arange(0, 360, FRESNEL_TX_STEP_DEG)
    rx = np.arange(0, 360, FRESNEL_RX_STEP_DEG)
    return tx, rx


def fresnel_mask(tx_deg=None, rx_deg=None):
    """(receivers, transmitters) mask: True where rx - tx (mod 360) lies in [60, 300]."""
    if tx_deg is None or rx_deg is None:
        tx_deg, rx_deg = fresnel_angles()
    offset = (np.asarray(rx_deg)[:, None] - np.asarray(tx_deg)[None, :]) % 360
    return (offset >= FRESNEL_RX_MIN_OFFSET_DEG) & (offset <= FRESNEL_RX_MAX_OFFSET_DEG)


def directions_from_angles(tx_deg, rx_deg):
    """Plane waves launched from a source at angle t travel along -(cos t, sin t);
    a receiver at angle r observes along (cos r, sin r)."""
    t = np.deg2rad(np.asarray(tx_deg, dtype=float))
    r = np.deg2rad(np.asarray(rx_deg, dtype=float))
    return -np.column_stack([np.cos(t), np.sin(t)]), np.column_stack([np.cos(r), np.sin(r)])


def fresnel_array():
    tx, rx = fresnel_angles()
    inc, obs = directions_from_angles(tx, rx)
    return ArrayConfig(inc, obs, fresnel_mask(tx, rx))


# ---------------------------------------------------------------- config file

def scene_to_dict(scene):
    bg = scene.background
    return {
        "background": {"epsilon_b": bg.epsilon_b, "mu_b": bg.mu_b, "frequency": bg.frequency},
        "contrast_mode": scene.contrast_mode.value,
        "inhomogeneities": [
            {"center": list(inc.center), "radius": inc.radius,
             "epsilon_a": inc.epsilon_a, "mu_a": inc.mu_a}
            for inc in scene.inhomogeneities
        ],
    }


def scene_from_dict(d):
    bg = Background(**d["background"])
    incs = [Inhomogeneity(tuple(i["center"]), i["radius"], i["epsilon_a"], i["mu_a"])
            for i in d["inhomogeneities"]]
    return Scene(bg, incs, ContrastMode(d.get("contrast_mode", "permittivity")))


def array_to_dict(array):
    return {
        "incident": array.incident.tolist(),
        "observation": array.observation.tolist(),
        "mask": array.mask.astype(int).tolist(),
    }


def array_from_dict(d):
    return ArrayConfig(np.array(d["incident"], dtype=float),
                       np.array(d["observation"], dtype=float),
                       np.array(d["mask"], dtype=bool))


def grid_to_dict(grid):
    return {"x_min": grid.x_min, "x_max": grid.x_max, "y_min": grid.y_min,
            "y_max": grid.y_max, "nx": grid.nx, "ny": grid.ny}


def grid_from_dict(d):
    return ROIGrid(**d)


def dump_configuration(scene, array, grid):
    """Serialize to the JSON document format (floats written with repr, so exact)."""
    doc = {"scene": scene_to_dict(scene), "array": array_to_dict(array), "grid": grid_to_dict(grid)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_configuration(text):
    doc = json.loads(text)
    return scene_from_dict(doc["scene"]), array_from_dict(doc["array"]), grid_from_dict(doc["grid"])
