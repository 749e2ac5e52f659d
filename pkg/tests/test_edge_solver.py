import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from rashba_graphs import EdgePotential, dirichlet_eigenvalues, solve_fundamental, t_epsilon
from rashba_graphs.edge_solver import fundamental_profile, fundamental_values, load_potential
from rashba_graphs.errors import InvalidInputError

Z_GRID = np.arange(-50.0, 200.0 + 1e-9, 0.5)


def sampled_zero(n=51):
    t = np.linspace(0.0, 1.0, n)
    return EdgePotential.sampled(t, np.zeros(n))


def wronskian_deviation(s, sp, c, cp) -> float:
    """max |c s' - c' s - 1| evaluated exactly on the returned doubles."""
    return max(float(abs(Fraction(a) * Fraction(b) - Fraction(d) * Fraction(e) - 1))
               for a, b, d, e in zip(c, sp, cp, s))


def random_even_potential(rng, amp=20.0, n=81):
    t = np.linspace(0.0, 1.0, n)
    half = rng.uniform(-amp, amp, size=n // 2 + 1)
    vals = np.concatenate([half, half[-2::-1]])
    return EdgePotential.sampled(t, vals)


# ---------------------------------------------------------------- examples

def test_zero_potential_at_zero_energy():
    sol = solve_fundamental(EdgePotential.zero(1.0), 0.0)
    assert (sol.s, sol.s_prime, sol.c, sol.c_prime) == pytest.approx((1, 1, 1, 0), abs=1e-15)


def test_zero_potential_quarter_wave():
    sol = solve_fundamental(EdgePotential.zero(1.0), math.pi ** 2 / 4)
    assert sol.s == pytest.approx(2 / math.pi, abs=1e-14)
    assert sol.c == pytest.approx(0.0, abs=1e-14)
    assert sol.s_prime == pytest.approx(0.0, abs=1e-14)
    assert sol.c_prime == pytest.approx(-math.pi / 2, abs=1e-14)


def test_constant_potential_shifts_energy():
    sol = solve_fundamental(EdgePotential.constant(5.0, 1.0), 5.0)
    assert (sol.s, sol.s_prime, sol.c, sol.c_prime) == pytest.approx((1, 1, 1, 0), abs=1e-15)


@pytest.mark.parametrize("E,eps,expected", [
    (math.pi ** 2, 0.0, -1.0),
    (0.0, 0.0, 1.0),
    (math.pi ** 2 / 4, 3.0, 6 / math.pi),
])
def test_t_epsilon_examples(E, eps, expected):
    assert t_epsilon(EdgePotential.zero(1.0), eps, 0.0, E) == pytest.approx(expected, abs=1e-12)


def test_dirichlet_examples():
    pot = EdgePotential.zero(1.0)
    assert dirichlet_eigenvalues(pot, 0.0, (0, 50)) == pytest.approx([math.pi ** 2, 4 * math.pi ** 2], abs=1e-9)
    assert dirichlet_eigenvalues(pot, math.pi, (0, 50)) == pytest.approx([3 * math.pi ** 2], abs=1e-9)
    assert dirichlet_eigenvalues(pot, 0.0, (1, 5)) == []


def test_dirichlet_points_are_zeros_of_s():
    rng = np.random.default_rng(3)
    pot = random_even_potential(rng, amp=10.0)
    pts = dirichlet_eigenvalues(pot, 0.4, (-20, 120))
    assert pts == sorted(pts) and len(pts) >= 2
    s, _, _, _ = fundamental_values(pot, np.array(pts) + 0.16)
    assert np.max(np.abs(s)) <= 1e-9


# ---------------------------------------------------------------- properties

def test_closed_form_matches_oracle():
    for z in Z_GRID[::7]:
        sol = solve_fundamental(EdgePotential.zero(1.3), z)
        ref = oracles.free_sc(z, 1.3)
        assert (sol.s, sol.s_prime, sol.c, sol.c_prime) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_integrator_reproduces_closed_form():
    z = Z_GRID
    num = np.array(fundamental_values(sampled_zero(), z))
    ref = np.array(fundamental_values(EdgePotential.zero(1.0), z))
    scale = np.maximum(1.0, np.abs(ref))
    assert np.max(np.abs(num - ref) / scale) <= 1e-9


def test_wronskian_free_grid():
    s, sp, c, cp = fundamental_values(sampled_zero(), Z_GRID)
    assert wronskian_deviation(s, sp, c, cp) <= 1e-10


@settings(max_examples=8, deadline=None, derandomize=True)
@given(st.integers(0, 2 ** 31 - 1))
def test_wronskian_random_potentials(seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, 41)
    pot = EdgePotential.sampled(t, rng.uniform(-20, 20, size=t.size))
    s, sp, c, cp = fundamental_values(pot, Z_GRID)
    assert wronskian_deviation(s, sp, c, cp) <= 1e-10


def test_even_potential_gives_c_equal_s_prime():
    rng = np.random.default_rng(11)
    pot = random_even_potential(rng)
    assert pot.is_even()
    s, sp, c, cp = fundamental_values(pot, Z_GRID)
    assert np.max(np.abs(c - sp)) <= 1e-8


def test_sampled_against_scipy_ode():
    from scipy.integrate import solve_ivp
    t = np.linspace(0, 2.0, 101)
    u = 4 * np.sin(3 * t) + t
    pot = EdgePotential.sampled(t, u)
    for z in (-7.0, 0.3, 25.0):
        rhs = lambda x, y: [y[1], (np.interp(x, t, u) - z) * y[0]]  # noqa: E731
        s_ref = solve_ivp(rhs, (0, 2.0), [0, 1], rtol=1e-12, atol=1e-13, max_step=0.005).y[:, -1]
        c_ref = solve_ivp(rhs, (0, 2.0), [1, 0], rtol=1e-12, atol=1e-13, max_step=0.005).y[:, -1]
        sol = solve_fundamental(pot, z)
        assert sol.s == pytest.approx(s_ref[0], rel=1e-7, abs=1e-8)
        assert sol.s_prime == pytest.approx(s_ref[1], rel=1e-7, abs=1e-8)
        assert sol.c == pytest.approx(c_ref[0], rel=1e-7, abs=1e-8)
        assert sol.c_prime == pytest.approx(c_ref[1], rel=1e-7, abs=1e-8)


def test_profile_ends_at_endpoint_values():
    rng = np.random.default_rng(5)
    pot = random_even_potential(rng, amp=5.0)
    t, s, sp, c, cp = fundamental_profile(pot, 3.7, 65)
    sol = solve_fundamental(pot, 3.7)
    assert t[0] == 0 and t[-1] == pytest.approx(1.0)
    assert (s[0], sp[0], c[0], cp[0]) == (0.0, 1.0, 1.0, 0.0)
    assert (s[-1], c[-1]) == pytest.approx((sol.s, sol.c), abs=1e-9)


# ---------------------------------------------------------------- validation

def test_rejects_non_finite_energy():
    with pytest.raises(InvalidInputError):
        solve_fundamental(EdgePotential.zero(), float("nan"))


@pytest.mark.parametrize("t,v", [
    ([0.0, 0.5, 0.4, 1.0], [0, 0, 0, 0]),
    ([0.1, 0.5, 1.0], [0, 0, 0]),
    ([0.0, 0.5, 1.0], [0, np.inf, 0]),
])
def test_rejects_bad_samples(t, v):
    with pytest.raises(InvalidInputError):
        EdgePotential.sampled(np.array(t), np.array(v, dtype=float))


def test_rejects_nonpositive_length():
    with pytest.raises(InvalidInputError):
        EdgePotential.zero(0.0)


def test_load_potential(tmp_path):
    f = tmp_path / "u.txt"
    f.write_text("# t value\n0 1\n0.5 2\n1.0 1\n")
    pot = load_potential(f)
    assert pot.kind == "sampled" and pot.length == pytest.approx(1.0)
    assert pot(np.array([0.25]))[0] == pytest.approx(1.5)
    with pytest.raises(InvalidInputError):
        load_potential(tmp_path / "missing.txt")


def test_repeated_grids_reuse_values_without_aliasing():
    t = np.linspace(0.0, 1.0, 33)
    pot = EdgePotential.sampled(t, 5 * np.sin(3 * t))
    z = np.linspace(-5.0, 30.0, 17)
    first = fundamental_values(pot, z)
    first[0][:] = np.nan
    second = fundamental_values(pot, z)
    assert np.all(np.isfinite(second[0]))
    fresh = fundamental_values(EdgePotential.sampled(t, 5 * np.sin(3 * t)), z)
    for a, b in zip(second, fresh):
        assert np.array_equal(a, b)
