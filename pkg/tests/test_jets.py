import math

import numpy as np
import pytest

from stromlab.jets import InsufficientJetOrder, Jet, jet_space, seed_jets, wirtinger


def fd_partial(f, coords, v, h=1e-4):
    """Central difference with one Richardson step."""

    def diff(step):
        up = list(coords)
        dn = list(coords)
        up[v] += step
        dn[v] -= step
        return (f(up) - f(dn)) / (2 * step)

    d1, d2 = diff(h), diff(h / 2)
    return (4 * d2 - d1) / 3


def smooth(coords):
    x, y, z = coords
    return math.exp(0.3 * x) * math.sin(y + 0.5 * z) + math.log(2.0 + x * x + z * z)


def smooth_jet(jets):
    x, y, z = jets
    return (0.3 * x).exp() * (y + 0.5 * z).sin() + (2.0 + x * x + z * z).log()


def test_seed_values():
    jets = seed_jets((1.0, -2.0, 0.5), 3)
    f = smooth_jet(jets)
    assert f.value == pytest.approx(smooth((1.0, -2.0, 0.5)), abs=1e-14)


def test_first_order_against_richardson_fd():
    coords = (0.7, -0.3, 1.1)
    jets = seed_jets(coords, 1)
    f = smooth_jet(jets)
    for v in range(3):
        mono = tuple(1 if i == v else 0 for i in range(3))
        assert f.partial(mono) == pytest.approx(fd_partial(smooth, coords, v), abs=1e-6)


def test_higher_order_mixed_partials_against_fd():
    coords = (0.4, 0.9, -0.6)

    def d1(coords_):
        jets = seed_jets(coords_, 1)
        return smooth_jet(jets).partial((1, 0, 0)).real

    def d2(coords_):
        jets = seed_jets(coords_, 2)
        return smooth_jet(jets).partial((1, 1, 0)).real

    jets = seed_jets(coords, 3)
    f = smooth_jet(jets)
    # order 2 and 3 jets vs finite differences of exact lower-order jets
    assert f.partial((1, 1, 0)) == pytest.approx(fd_partial(d1, coords, 1), abs=1e-6)
    assert f.partial((1, 1, 1)) == pytest.approx(fd_partial(d2, coords, 2), abs=1e-6)


def test_mixed_partials_commute_by_construction():
    jets = seed_jets((0.2, 0.3, -0.7), 4)
    f = smooth_jet(jets)
    a = f.derivative(0).derivative(2)
    b = f.derivative(2).derivative(0)
    assert np.allclose(a.c, b.c)


def test_derivative_lowers_order_and_raises_at_zero():
    jets = seed_jets((1.0, 2.0), 2)
    f = jets[0] * jets[1]
    d = f.derivative(0)
    assert d.order == 1
    dd = d.derivative(1)
    assert dd.order == 0
    with pytest.raises(InsufficientJetOrder):
        dd.derivative(0)


def test_reciprocal_and_division():
    jets = seed_jets((0.8, -0.4), 4)
    f = 1.0 + jets[0] * jets[0] + jets[1]
    g = f * f.reciprocal()
    assert abs(g.value - 1.0) < 1e-14
    assert np.max(np.abs(g.c[1:])) < 1e-13


def test_log_exp_roundtrip():
    jets = seed_jets((0.5, 1.5), 4)
    f = 2.0 + jets[0].sin() + jets[1] * 0.25
    g = f.log().exp()
    assert np.max(np.abs(g.c - f.c)) < 1e-12


def test_sqrt_squares_back():
    jets = seed_jets((1.2, 0.1), 4)
    f = 3.0 + jets[0] + jets[1] * jets[1]
    r = f.sqrt()
    assert np.max(np.abs((r * r).c - f.c)) < 1e-12


def test_integer_pow_matches_repeated_mul():
    jets = seed_jets((1.1, -0.2), 3)
    f = jets[0] + 2.0 * jets[1]
    assert np.allclose((f ** 3).c, (f * f * f).c)


def test_conjugate_and_abs():
    jets = seed_jets((0.3, 0.9), 3)
    z = jets[0] + 1j * jets[1]
    mod = z.abs()
    expected = math.hypot(0.3, 0.9)
    assert mod.value == pytest.approx(expected, abs=1e-14)
    # d|z|/dx = x/|z|
    assert mod.partial((1, 0)) == pytest.approx(0.3 / expected, abs=1e-12)


def test_wirtinger_holomorphic_kill():
    # f = z^2 with z = x + iy: dbar f = 0, df/dz = 2z
    jets = seed_jets((0.7, -0.2), 2)
    z = jets[0] + 1j * jets[1]
    f = z * z
    dbar = wirtinger(f, 0, 1, bar=True)
    dz = wirtinger(f, 0, 1, bar=False)
    assert abs(dbar.value) < 1e-14
    assert dz.value == pytest.approx(2 * complex(0.7, -0.2), abs=1e-14)


def test_space_cache_and_sizes():
    sp = jet_space(6, 4)
    assert sp is jet_space(6, 4)
    assert sp.size == math.comb(6 + 4, 4)
