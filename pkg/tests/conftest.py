import numpy as np
import pytest

from dfmusic.scene import (Background, ContrastMode, Inhomogeneity, Scene, VACUUM_PERMEABILITY,
                           VACUUM_PERMITTIVITY)

ACCEPTANCE_RESULTS = {}


def single_scene(center=(0.0, 0.0), frequency=2e9, mode="permittivity", radius=0.01, contrast=5.0):
    bg = Background(VACUUM_PERMITTIVITY, VACUUM_PERMEABILITY, frequency)
    if ContrastMode(mode) is ContrastMode.PERMITTIVITY:
        inc = Inhomogeneity(center, radius, contrast * bg.epsilon_b, bg.mu_b)
    else:
        inc = Inhomogeneity(center, radius, bg.epsilon_b, contrast * bg.mu_b)
    return Scene(bg, [inc], mode)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
