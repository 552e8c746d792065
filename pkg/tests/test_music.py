import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dfmusic.forward import (NoiseSpec, add_noise, apply_mask, assemble_msr, strip_diagonal)
from dfmusic.music import (PEAK_CAP, Polarization, RankPolicy, Side, combined_bistatic_map,
                           decompose, image_map, local_maxima, music_map, noise_projection,
                           peak_near, receiver_vector, select_signal_rank, te_map_pair,
                           test_vector_te, test_vector_tm)
from dfmusic.scene import ArrayConfig, ROIGrid, benchmark_scene, uniform_directions
from dfmusic.specfun import bessel_j

from conftest import single_scene

SMALL_GRID = ROIGrid(nx=64, ny=64)


def test_reconstruction_and_orthonormality():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 24)
    msr = add_noise(strip_diagonal(assemble_msr(scene, array)), NoiseSpec(20, 1))
    dec = decompose(msr)
    M = msr.entries
    n = len(dec.singular_values)
    recon = dec.left[:, :n] * dec.singular_values @ dec.right[:, :n].conj().T
    assert np.linalg.norm(M - recon) <= 1e-10 * np.linalg.norm(M)
    assert np.all(np.diff(dec.singular_values) <= 0)
    for B in (dec.left, dec.right):
        assert np.max(np.abs(B.conj().T @ B - np.eye(B.shape[1]))) <= 1e-10


def test_rank_one_spectrum():
    dec = decompose(assemble_msr(single_scene((0.02, 0.05)), ArrayConfig.full_view(36)))
    s = dec.singular_values
    assert s[1] / s[0] <= 1e-12


def test_diagonal_free_centered_ratio():
    N = 20
    dec = decompose(strip_diagonal(assemble_msr(single_scene(), ArrayConfig.full_view(N))))
    s = dec.singular_values
    assert s[0] / s[1] == pytest.approx(N - 1, rel=1e-10)


def test_transmitter_permutation():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 12)
    M = assemble_msr(scene, array).entries
    perm = np.random.default_rng(3).permutation(12)
    a, b = decompose(M), decompose(M[:, perm])
    np.testing.assert_allclose(a.singular_values, b.singular_values, rtol=0, atol=1e-12 * a.singular_values[0])
    # the leading right vector follows the permutation up to a phase
    v, w = a.right[perm, 0], b.right[:, 0]
    assert abs(abs(np.vdot(v, w)) - 1) <= 1e-10


def test_decompose_rejects_zero():
    with pytest.raises(ValueError):
        decompose(np.zeros((4, 4)))


def test_threshold_rank_benchmark_scene():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 36)
    s = decompose(assemble_msr(scene, array)).singular_values
    assert select_signal_rank(s, RankPolicy.threshold(0.1)) == 3


def test_rank_policies():
    assert select_signal_rank([1, 0.05, 0.01], RankPolicy()) == 1
    assert select_signal_rank([1, 0.5, 0.1, 0.09], RankPolicy.threshold(0.1)) == 3
    assert select_signal_rank([1, 0.5, 0.1], RankPolicy.fixed(2)) == 2
    with pytest.raises(ValueError):
        select_signal_rank([1, 0.5], RankPolicy.fixed(3))
    assert RankPolicy.parse("fixed:3") == RankPolicy.fixed(3)
    assert RankPolicy.parse(str(RankPolicy.threshold(0.25))) == RankPolicy.threshold(0.25)
    with pytest.raises(ValueError):
        RankPolicy.parse("threshold")
    with pytest.raises(ValueError):
        RankPolicy("median", 1)


def test_te_single_inclusion_fixed_two():
    msr = assemble_msr(single_scene((0.01, 0.0), mode="permeability"), ArrayConfig.full_view(36))
    dec = decompose(msr)
    assert select_signal_rank(dec.singular_values, RankPolicy.fixed(2)) == 2
    assert dec.singular_values[2] <= 1e-12 * dec.singular_values[0]


def test_with_rank_bounds():
    dec = decompose(np.eye(4))
    with pytest.raises(ValueError):
        dec.with_rank(0)
    with pytest.raises(ValueError):
        dec.with_rank(4)


def test_tm_vector_examples():
    d = uniform_directions(9)
    np.testing.assert_allclose(test_vector_tm((0, 0), d, 30.0), np.full(9, 1 / 3), atol=1e-15)


@settings(max_examples=50)
@given(st.floats(-1, 1), st.floats(-1, 1), st.integers(3, 80), st.floats(0, 2 * np.pi))
def test_vector_norms(x, y, N, a):
    d = uniform_directions(N)
    assert abs(np.linalg.norm(test_vector_tm((x, y), d, 40.0)) - 1) <= 1e-12
    xi = (np.cos(a), np.sin(a))
    assert abs(np.linalg.norm(test_vector_te((x, y), xi, d, 40.0)) - 1) <= 1e-12


def test_te_vector_examples():
    d = uniform_directions(4)
    np.testing.assert_allclose(test_vector_te((0, 0), (1, 0), d, 5.0),
                               np.sqrt(0.5) * np.array([0, -1, 0, 1]), atol=1e-15)
    v = test_vector_te((0.3, 0.1), (0, 1), d, 5.0)
    assert abs(v[1]) <= 1e-15 and abs(v[3]) <= 1e-15
    with pytest.raises(ValueError):
        test_vector_te((0, 0), (1, 1), d, 5.0)


def test_inner_product_tends_to_j0():
    d = uniform_directions(64)
    k = 40.0
    x, z = np.array([0.03, -0.01]), np.array([-0.02, 0.04])
    ip = np.vdot(test_vector_tm(z, d, k), test_vector_tm(x, d, k))
    assert abs(ip - bessel_j(0, k * np.linalg.norm(x - z))) <= 1e-10


def test_receiver_vector_normalized():
    obs = uniform_directions(72)
    g = receiver_vector((0.01, 0.02), obs, 80.0)
    assert g.shape == (72,) and abs(np.linalg.norm(g) - 1) <= 1e-12


def test_projector_properties():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 36)
    dec = decompose(strip_diagonal(assemble_msr(scene, array))).with_rank(3)
    for side, basis in ((Side.LEFT, dec.left), (Side.RIGHT, dec.right)):
        P = noise_projection(dec, side)
        assert np.linalg.norm(P @ P - P, 2) <= 1e-10
        assert np.linalg.norm(P - P.conj().T, 2) <= 1e-12
        assert np.linalg.norm(P @ basis[:, 0]) <= 1e-10
        assert abs(np.trace(P).real - 33) <= 1e-8
    with pytest.raises(ValueError):
        noise_projection(decompose(np.eye(3)))


def test_single_inclusion_argmax_at_center():
    grid = ROIGrid(nx=101, ny=101)
    z = (0.03, -0.04)
    imap, _ = music_map(assemble_msr(single_scene(z), ArrayConfig.full_view(36)), grid)
    assert tuple(imap.argmax()) == grid.nearest_index(z)


def test_residual_at_exact_center_vanishes():
    z = (0.0123, -0.0456)
    scene = single_scene(z)
    arr = ArrayConfig.full_view(36)
    dec = decompose(assemble_msr(scene, arr)).with_rank(1)
    f = test_vector_tm(z, arr.incident, scene.background.wavenumber)
    assert np.linalg.norm(noise_projection(dec) @ f) <= 1e-8


def test_diagonal_free_recovers_all_centers():
    scene, array, grid = benchmark_scene("permittivity", 2e9, 36, nx=128, ny=128)
    imap, dec = music_map(strip_diagonal(assemble_msr(scene, array)), grid)
    assert dec.signal_rank == 3
    peaks = local_maxima(imap.values)
    for c in scene.centers:
        iy, ix, dist = peak_near(imap, c, 0.02)
        assert peaks[iy, ix] and dist <= 1.5


def test_map_contract():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 12)
    imap, _ = music_map(strip_diagonal(assemble_msr(scene, array)), SMALL_GRID)
    assert np.all(imap.values > 0) and np.all(imap.values <= PEAK_CAP)
    assert np.all(np.isfinite(imap.values))
    assert imap.values.shape == (SMALL_GRID.ny, SMALL_GRID.nx)
    for key in ("polarization", "matrix_kind", "signal_rank", "frequency", "N"):
        assert key in imap.metadata


def test_peak_is_capped():
    scene = single_scene((0.0, 0.0))
    grid = ROIGrid(nx=3, ny=3)  # centre pixel lands exactly on z
    imap, _ = music_map(assemble_msr(scene, ArrayConfig.full_view(16)), grid, peak_cap=50.0)
    assert imap.values.max() == 50.0


def test_combined_map_equals_left_map_for_symmetric_data():
    scene, array, _ = benchmark_scene("permittivity", 2e9, 24)
    full = assemble_msr(scene, array)
    both = combined_bistatic_map(apply_mask(full, np.ones(full.shape, bool)), SMALL_GRID)
    left, _ = music_map(full, SMALL_GRID, side=Side.LEFT)
    np.testing.assert_allclose(both.values, left.values, rtol=1e-8, atol=0)
    assert both.metadata["side"] == "both"


def test_image_map_requires_rank():
    dec = decompose(np.eye(3))
    with pytest.raises(ValueError):
        image_map(dec, SMALL_GRID, k=1.0, incident=uniform_directions(3), observation=uniform_directions(3))


@pytest.mark.parametrize("phase", [0.3, 2.0, -1.1])
def test_global_phase_invariance(phase):
    scene, array, _ = benchmark_scene("permittivity", 2e9, 12)
    msr = add_noise(strip_diagonal(assemble_msr(scene, array)), NoiseSpec(20, 5))
    a, _ = music_map(msr, SMALL_GRID)
    b, _ = music_map(msr.with_entries(msr.entries * np.exp(1j * phase)), SMALL_GRID)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8 * np.max(a.values)


@settings(max_examples=10, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_scale_invariance(t):
    scene, array, _ = benchmark_scene("permittivity", 2e9, 12)
    msr = strip_diagonal(assemble_msr(scene, array))
    a, _ = music_map(msr, SMALL_GRID)
    b, _ = music_map(msr.with_entries(msr.entries * t), SMALL_GRID)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8 * np.max(a.values)


def test_te_pair_reports_difference():
    scene, array, _ = benchmark_scene("permeability", 2e9, 36)
    msr = strip_diagonal(assemble_msr(scene, array))
    eps_map, mu_map, diff = te_map_pair(msr, SMALL_GRID)
    assert eps_map.metadata["polarization"] == "te_eps"
    assert mu_map.metadata["polarization"] == "te"
    assert np.isfinite(diff) and diff > 0


def test_te_sweep_dominates_fixed_direction():
    scene, array, _ = benchmark_scene("permeability", 2e9, 24)
    msr = strip_diagonal(assemble_msr(scene, array))
    fixed, _ = music_map(msr, SMALL_GRID, polarization=Polarization.TE)
    sweep, _ = music_map(msr, SMALL_GRID, polarization=Polarization.TE, xi_sweep=True)
    assert np.all(sweep.values >= fixed.values - 1e-9)
    assert sweep.metadata["xi"] == "sweep"
