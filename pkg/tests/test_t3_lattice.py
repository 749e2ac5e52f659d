import math

import numpy as np
import pytest

import oracles
from rashba_graphs import EdgePotential, SusyBlock, susy_spectrum
from rashba_graphs.errors import CommensurabilityError, InvalidInputError, UnsupportedParameterError
from rashba_graphs.t3_lattice import (
    T3Params,
    T3Torus,
    assemble_aastar_closed_form,
    assemble_t3_spectrum,
    build_bipartite,
    butterfly_sweep,
    flat_band_certificate,
    flatband_map,
    harper_bloch_bands,
    is_commensurate,
    localization_roots,
    magneto_spin_bands,
    smallest_commensurate_N,
    t3_tau,
    triangular_harper,
    zero_mode_check,
)
from rashba_graphs.t3_lattice.spectrum import hermitian_spectrum

PI = math.pi
I2 = np.eye(2)
ACOS3 = math.acos(3 ** -0.5)


def random_even_potential(seed, amp=10.0, n=65):
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n)
    half = rng.uniform(-amp, amp, size=n // 2 + 1)
    return EdgePotential.sampled(t, np.concatenate([half, half[-2::-1]]))


# ---------------------------------------------------------------- geometry and operators

def test_tau_examples():
    assert np.allclose(t3_tau(3, -2, 5, T3Params()).matrix, I2)
    assert np.allclose(t3_tau(1, 0, 1, T3Params(omega=PI / 2)).matrix, -I2, atol=1e-15)
    assert np.allclose(t3_tau(0, 0, 1, T3Params(omega=0.7, k_R=PI)).matrix, -I2, atol=1e-15)
    with pytest.raises(InvalidInputError):
        t3_tau(0, 0, 7, T3Params())


@pytest.mark.parametrize("j", [1, 2, 3])
def test_opposite_edges_are_adjoint(j):
    p = T3Params(omega=0.4, k_R=0.9)
    for m, n in [(0, 0), (2, -1), (-3, 5)]:
        assert np.allclose(t3_tau(m, n, j + 3, p).matrix, t3_tau(m, n, j, p).matrix.conj().T, atol=1e-14)


@pytest.mark.parametrize("omega,N,k_R", [(PI / 2, 4, 0.37), (PI / 3, 6, 1.2), (PI / 6, 12, PI / 2), (0.0, 3, 2.1)])
def test_operator_matches_geometric_construction(omega, N, k_R):
    A = build_bipartite(T3Params(omega=omega, k_R=k_R), T3Torus(N)).A.toarray()
    assert np.max(np.abs(A - oracles.dice_A_bruteforce(omega, k_R, N))) <= 1e-12


def test_block_counts_and_adjoint():
    ops = build_bipartite(T3Params(omega=2 * PI / 3, k_R=0.8), T3Torus(3))
    A = ops.A.toarray()
    blocks = np.abs(A).reshape(A.shape[0] // 2, 2, A.shape[1] // 2, 2).sum(axis=(1, 3)) > 0
    assert np.all(blocks.sum(axis=1) == 3)
    assert np.all(blocks.sum(axis=0) == 6)
    assert (ops.A_star - ops.A.conj().T).count_nonzero() == 0


def test_column_weights_at_zero_flux():
    A = build_bipartite(T3Params(), T3Torus(2)).A.toarray()
    assert np.allclose(np.sum(np.abs(A) ** 2, axis=0), 6.0)


def test_commensurability():
    assert is_commensurate(PI / 2, 4) and not is_commensurate(PI / 2, 2)
    assert smallest_commensurate_N(PI / 6) == 12
    assert smallest_commensurate_N(1.0) is None
    with pytest.raises(CommensurabilityError):
        build_bipartite(T3Params(omega=PI / 2), T3Torus(3))


def test_closed_form_expansion_random_triples():
    rng = np.random.default_rng(17)
    for _ in range(20):
        N = int(rng.integers(1, 13))
        p = T3Params(omega=2 * PI * int(rng.integers(0, N)) / N, k_R=float(rng.uniform(-PI, PI)))
        torus = T3Torus(N)
        direct = build_bipartite(p, torus).astar_a().toarray()
        closed = assemble_aastar_closed_form(p, torus).toarray()
        assert np.max(np.abs(direct - closed)) <= 1e-10


def test_closed_form_zero_flux_bound():
    ev = hermitian_spectrum(build_bipartite(T3Params(), T3Torus(4)).astar_a())
    assert ev.max() == pytest.approx(18.0, abs=1e-10)
    assert ev.min() >= -1e-12


# ---------------------------------------------------------------- flat bands and zero modes

@pytest.mark.parametrize("k_R", [0.0, PI])
def test_flat_band_at_magic_flux(k_R):
    flat, dev = flat_band_certificate(T3Params(omega=PI / 2, k_R=k_R), T3Torus(4))
    assert flat and dev <= 1e-12


def test_generic_rashba_breaks_flatness():
    flat, dev = flat_band_certificate(T3Params(omega=PI / 2, k_R=0.3), T3Torus(4))
    assert not flat and dev > 0.1


def test_flatness_ignores_potential_and_couplings():
    p = T3Params(omega=PI / 2, lam=2.5, mu=-1.3, pot=random_even_potential(1))
    assert flat_band_certificate(p, T3Torus(4))[0]


def test_zero_modes_at_magic_flux():
    dims = zero_mode_check(T3Params(omega=PI / 2), T3Torus(4))
    assert dims == (32, 0)


@pytest.mark.parametrize("N,expected", [(3, (22, 4)), (4, (32, 0))])
def test_zero_modes_at_zero_flux(N, expected):
    assert zero_mode_check(T3Params(), T3Torus(N)) == expected
    # kernel of A*A exists iff -3 is an eigenvalue of the hub hopping
    ev = hermitian_spectrum(triangular_harper(0.0, T3Torus(N)))
    assert (expected[1] > 0) == bool(np.any(np.abs(ev + 3) < 1e-9))


def test_index_identity():
    rng = np.random.default_rng(4)
    for _ in range(8):
        N = int(rng.integers(1, 7))
        p = T3Params(omega=2 * PI * int(rng.integers(0, N)) / N, k_R=float(rng.uniform(-4, 4)))
        rim, hub = zero_mode_check(p, T3Torus(N))
        assert rim - hub == 2 * N * N


# ---------------------------------------------------------------- localization equations

def test_eq_loc_roots_free_case():
    roots = localization_roots(T3Params(), "eq-loc", (0, 12))
    want = [ACOS3 ** 2, (PI - ACOS3) ** 2]
    assert roots == pytest.approx(want, abs=1e-9)
    assert roots[0] == pytest.approx(0.912630, abs=1e-6)
    assert roots[1] == pytest.approx(4.779803, abs=1e-6)


def test_eq_loc_lowest_root_against_bisection():
    root = localization_roots(T3Params(), "eq-loc", (0, 2))[0]
    ref = oracles.scalar_bisect(lambda E: math.cos(math.sqrt(E)) ** 2 - 1 / 3, 0.5, 1.5)
    assert root == pytest.approx(ref, abs=1e-9)


def test_eq_loc2_and_eq_loc3():
    assert localization_roots(T3Params(), "eq-loc2", (0, 12)) == pytest.approx([PI ** 2 / 4], abs=1e-9)
    assert localization_roots(T3Params(), "eq-loc3", (0, 50)) == pytest.approx([PI ** 2, 4 * PI ** 2], abs=1e-9)
    with pytest.raises(InvalidInputError):
        localization_roots(T3Params(), "eq-loc4", (0, 1))


# ---------------------------------------------------------------- assembled spectra

def test_free_magic_flux_spectrum_is_pure_point():
    res = assemble_t3_spectrum(T3Params(omega=PI / 2), T3Torus(4), (0, 40))
    assert res.proper_bands() == [] and res.bands == []
    pts = res.isolated_points()
    want = oracles.cos2_roots([0.0, 1 / 3, 1.0], (0, 40))
    assert pts == pytest.approx(want, abs=1e-8)
    labels = {src for _, src in res.flat_eigenvalues}
    assert labels == {"eq-loc"}
    assert res.points_sigma3 == pytest.approx(oracles.cos2_roots([0.0], (0, 40)), abs=1e-9)


def test_zero_flux_has_bands():
    # torus eigenvalues are highly degenerate; distinct values merge into intervals from N = 24 on
    res = assemble_t3_spectrum(T3Params(), T3Torus(24), (0, 40))
    assert res.proper_bands()
    assert not res.flat_eigenvalues


def test_window_validation():
    with pytest.raises(InvalidInputError):
        assemble_t3_spectrum(T3Params(omega=PI / 2), T3Torus(4), (5, 5))


def test_susy_block_matches_classification():
    p = T3Params(omega=PI / 2)
    ops = build_bipartite(p, T3Torus(4))
    A = ops.A.toarray()
    E_flat = ACOS3 ** 2
    E_off = 2.0
    for E, expect in ((E_flat, True), (E_off, False)):
        a, b = float(ops.a_of_E(E)), float(ops.b_of_E(E))
        spec = susy_spectrum(SusyBlock(A, (b - a) / 2))
        dense = np.linalg.eigvalsh(np.block([[-a * np.eye(A.shape[1]), A.conj().T], [A, -b * np.eye(A.shape[0])]]))
        singular = float(np.min(np.abs(spec - (a + b) / 2)))
        assert singular == pytest.approx(float(np.min(np.abs(dense))), abs=1e-9)
        assert (singular < 1e-8) == expect
        on_sigma1 = bool(np.any(np.abs(hermitian_spectrum(ops.astar_a()) - a * b) < 1e-8)) and a * b != 0
        assert on_sigma1 == expect


# ---------------------------------------------------------------- Harper and magneto-spin

def test_harper_rejects_generic_flux():
    with pytest.raises(UnsupportedParameterError):
        harper_bloch_bands(PI / 2)


def test_harper_hull():
    bands = harper_bloch_bands(PI / 6)
    assert bands.upper == pytest.approx((math.sqrt(3), 2 * math.sqrt(3)), abs=2e-3)
    assert bands.lower == pytest.approx((-2 * math.sqrt(3), -math.sqrt(3)), abs=2e-3)
    assert bands.energies[0, 0] == pytest.approx(2 * math.sqrt(3), abs=1e-14)


def test_harper_contains_torus_spectrum():
    bands = harper_bloch_bands(PI / 6)
    ev = hermitian_spectrum(triangular_harper(PI / 6, T3Torus(12)))
    assert all(bands.contains(float(x), tol=1e-6) for x in ev)


def test_magneto_spin_structure():
    rep = magneto_spin_bands(T3Params(omega=PI / 6, k_R=PI / 2), T3Torus(12), (0, 40))
    assert rep.max_outside <= 1e-8
    assert rep.multiplicity_6 == 144
    assert rep.degenerate_component == 1
    rep2 = magneto_spin_bands(T3Params(omega=-PI / 6, k_R=PI / 2), T3Torus(12), (0, 5))
    assert rep2.degenerate_component == 0


def test_magneto_spin_rejects_other_parameters():
    with pytest.raises(UnsupportedParameterError):
        magneto_spin_bands(T3Params(omega=PI / 6, k_R=0.3), T3Torus(12), (0, 40))


# ---------------------------------------------------------------- sweeps

def test_butterfly_collapses_at_quarter_period():
    omegas = [(2 * PI * p / 24, 24) for p in (0, 6)]
    data = butterfly_sweep(T3Params(), omegas)
    at_magic = [r for r in data.rows if r[0] == pytest.approx(PI / 2)]
    assert all(r[3] == pytest.approx(6.0, abs=1e-10) and r[4] == "flat" for r in at_magic)
    at_zero = np.array([r[3] for r in data.rows if r[0] == 0.0])
    assert at_zero.min() >= -1e-9 and at_zero.max() <= 18 + 1e-9


def test_butterfly_skips_incommensurate_and_is_periodic():
    data = butterfly_sweep(T3Params(k_R=0.4), [(PI / 3, 6), (PI / 3 + 2 * PI, 6), (0.5, 6)])
    assert [e[0] for e in data.errors] == [0.5]
    a = [r[3] for r in data.rows if r[0] == PI / 3]
    b = [r[3] for r in data.rows if r[0] == PI / 3 + 2 * PI]
    assert np.allclose(a, b, atol=1e-10)


def test_flatband_map_minima_on_magic_grid():
    fm = flatband_map(4, 4)
    flat = {(round(w / PI, 6), round(k / PI, 6)) for w, k, _, _, f in fm.rows if f}
    assert flat == {(0.5, 0.0), (0.5, 1.0), (1.5, 0.0), (1.5, 1.0)}
