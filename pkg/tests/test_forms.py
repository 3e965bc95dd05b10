import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stromlab.forms import (
    Chart,
    ChartPoint,
    DegreeError,
    FormValue,
    InsufficientJetOrder,
    TypeContext,
    acs_apply,
    d_complex,
    d_complex_bar,
    d_real,
    ddbar_scalar,
    dolbeault_split,
    exterior_derivative,
    point,
    standard_acs,
    type_decompose,
    wedge,
)
from stromlab.jets import seed_jets

LINE = Chart("complex_line", ("zr", "zi"), ("zeta",))
C2 = Chart("c2", ("x1", "x2", "x3", "x4"), ("z1", "z2"))


def random_polynomial_form(chart, degree, rng, order, coords):
    """Form whose coefficients are random cubic polynomials, as jets."""
    from itertools import combinations

    jets = seed_jets(coords, order)
    terms = {}
    for multi in combinations(range(chart.dim), degree):
        coeff = jets[0] * 0.0
        for _ in range(3):
            mono = jets[0] * 0.0 + rng.uniform(-1, 1)
            for v in range(chart.dim):
                for _ in range(rng.randrange(0, 2)):
                    mono = mono * jets[v]
            coeff = coeff + mono
        terms[multi] = coeff
    return FormValue(chart, degree, terms)


# -- wedge algebra ----------------------------------------------------------


def test_wedge_basis_case():
    a = d_real(C2, 0)
    b = d_real(C2, 1)
    w = wedge(a, b)
    assert w.terms == {(0, 1): 1.0 + 0.0j}


def test_wedge_odd_square_is_zero():
    a = d_real(C2, 0) + d_real(C2, 2).scale(2.5 + 1j)
    assert not wedge(a, a).terms


def test_wedge_repeated_differential_dies():
    dz = d_complex(C2, 0)
    dzb = d_complex_bar(C2, 0)
    two = wedge(dz, dzb)
    assert not wedge(two, dz.scale(3.0)).terms
    assert not wedge(dz, dz).terms


def test_wedge_degree_overflow_raises():
    dz = d_complex(LINE, 0)
    dzb = d_complex_bar(LINE, 0)
    with pytest.raises(DegreeError):
        wedge(wedge(dz, dzb), wedge(dz, dzb))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2), st.randoms(use_true_random=False))
def test_graded_commutativity_exact(da, db, rng):
    from itertools import combinations

    def rand_form(degree):
        terms = {}
        for multi in combinations(range(C2.dim), degree):
            terms[multi] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        return FormValue(C2, degree, terms)

    a, b = rand_form(da), rand_form(db)
    lhs = wedge(a, b)
    rhs = wedge(b, a).scale((-1.0) ** (da * db))
    assert lhs.terms.keys() == rhs.terms.keys()
    for m in lhs.terms:
        assert lhs.terms[m] == rhs.terms[m]  # exact coefficient arithmetic


def test_wedge_associative():
    import random

    rng = random.Random(7)
    forms = [
        FormValue(C2, 1, {(v,): complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for v in range(4)})
        for _ in range(3)
    ]
    left = wedge(wedge(forms[0], forms[1]), forms[2])
    right = wedge(forms[0], wedge(forms[1], forms[2]))
    for m in set(left.terms) | set(right.terms):
        assert left.coefficient(m) == pytest.approx(right.coefficient(m), abs=1e-15)


# -- exterior derivative ----------------------------------------------------


def test_d_of_x_dx():
    jets = seed_jets((0.3, 0.8, -0.4, 0.9), 2)
    form = FormValue(C2, 1, {(1,): jets[0]})  # x1 dx2
    d = exterior_derivative(form)
    assert d.values().terms == {(0, 1): 1.0 + 0.0j}


def test_d_squared_zero_random_polynomials():
    import random

    rng = random.Random(3)
    coords = (0.5, -0.2, 0.7, 0.1)
    for degree in (0, 1, 2):
        form = random_polynomial_form(C2, degree, rng, 3, coords)
        dd = exterior_derivative(exterior_derivative(form))
        scale = max(form.sup(), 1.0)
        assert dd.sup() <= 1e-12 * scale


def test_leibniz_rule():
    import random

    rng = random.Random(11)
    coords = (0.4, 0.25, -0.7, 1.1)
    a = random_polynomial_form(C2, 1, rng, 3, coords)
    b = random_polynomial_form(C2, 1, rng, 3, coords)
    lhs = exterior_derivative(wedge(a, b))
    rhs = wedge(exterior_derivative(a), b.values()) + wedge(a.values(), exterior_derivative(b)).scale(-1.0)
    diff = lhs.values() - rhs.values()
    assert diff.sup() <= 1e-11 * max(a.sup() * b.sup(), 1.0)


def test_d_of_constant_form_vanishes_but_order_zero_jet_raises():
    form = FormValue(C2, 1, {(0,): 2.0 + 0.0j})
    assert not exterior_derivative(form).terms
    jets = seed_jets((0.1, 0.2, 0.3, 0.4), 0)
    with pytest.raises(InsufficientJetOrder):
        exterior_derivative(FormValue(C2, 1, {(0,): jets[0]}))


# -- almost complex structures ----------------------------------------------


def test_standard_acs_squares_to_minus_id():
    acs = standard_acs(C2)
    assert acs.square_residual() <= 1e-15


def test_standard_acs_eigenforms():
    acs = standard_acs(LINE)
    dz = d_complex(LINE, 0)
    assert (acs_apply(acs, dz) - dz.scale(1j)).sup() <= 1e-15
    eta = d_real(LINE, 0).scale(0.3) + d_real(LINE, 1).scale(-1.2 + 0.5j)
    twice = acs_apply(acs, acs_apply(acs, eta))
    assert (twice + eta).sup() <= 1e-15


def test_type_decompose_partition_and_projector_idempotence():
    import random

    rng = random.Random(5)
    acs = standard_acs(C2)
    ctx = TypeContext(acs)
    from itertools import combinations

    terms = {m: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for m in combinations(range(4), 2)}
    eta = FormValue(C2, 2, terms)
    parts = type_decompose(eta, acs)
    total = FormValue.zero(C2, 2)
    for f in parts.values():
        total = total + f
    assert (total - eta).sup() <= 1e-14
    for (p, q), f in parts.items():
        again = ctx.project(f, p, q)
        assert (again - f).sup() <= 1e-12


def test_type_decompose_dz_is_10():
    acs = standard_acs(C2)
    parts = type_decompose(d_complex(C2, 0), acs)
    assert parts.get((0, 1), FormValue.zero(C2, 1)).sup() <= 1e-15
    assert (parts[(1, 0)] - d_complex(C2, 0)).sup() <= 1e-15


# -- dolbeault operators ----------------------------------------------------


def test_dbar_kills_holomorphic_monomial():
    jets = seed_jets((0.4, -0.7, 0.2, 0.5), 2)
    z1 = jets[0] + 1j * jets[1]
    z2 = jets[2] + 1j * jets[3]
    f = z1 * z1 * z2
    acs = standard_acs(C2)
    _, dbar = dolbeault_split(FormValue.scalar(C2, f), acs)
    assert dbar.values().sup() <= 1e-13


def test_d_equals_del_plus_dbar_and_no_offtype():
    import random

    rng = random.Random(9)
    coords = (0.3, 0.7, -0.1, 0.6)
    form = random_polynomial_form(C2, 1, rng, 3, coords)
    acs = standard_acs(C2)
    ctx = TypeContext(acs)
    del_p, dbar_p, off = ctx.d_split(form)
    d = exterior_derivative(form)
    diff = (del_p.values() + dbar_p.values()) - d.values()
    assert diff.sup() <= 1e-10 * max(1.0, d.sup())
    assert off <= 1e-10 * max(1.0, d.sup())


def test_ddbar_scalar_flat_example():
    # f = |zeta|^2 gives i dzeta ^ dzeta_bar
    jets = seed_jets((0.6, -0.9), 2)
    f = jets[0] * jets[0] + jets[1] * jets[1]
    out = ddbar_scalar(f, LINE, standard_acs(LINE))
    expected = wedge(d_complex(LINE, 0), d_complex_bar(LINE, 0)).scale(1j)
    assert (out.values() - expected).sup() <= 1e-13


def test_ddbar_log_s_is_half_round_metric():
    # i del dbar log(1 + |zeta|^2) = omega_round / 2
    for zeta in (0.3 + 0.4j, -1.1 + 0.2j):
        jets = seed_jets((zeta.real, zeta.imag), 2)
        f = (1.0 + jets[0] * jets[0] + jets[1] * jets[1]).log()
        out = ddbar_scalar(f, LINE, standard_acs(LINE))
        s = 1.0 + abs(zeta) ** 2
        expected = wedge(d_complex(LINE, 0), d_complex_bar(LINE, 0)).scale(1j / s**2)
        assert (out.values() - expected).sup() <= 1e-12


def test_ddbar_real_input_gives_real_11_form():
    jets = seed_jets((0.2, 0.5, 0.3, -0.4), 2)
    f = (jets[0] * jets[2] + 2.0).log() + jets[1] * jets[1] * jets[3]
    out = ddbar_scalar(f, C2, standard_acs(C2))
    # real (1,1): conjugate equals itself
    assert (out.values() - out.values().conj()).sup() <= 1e-13


def test_chart_point_validation():
    with pytest.raises(ValueError):
        ChartPoint(C2, (1.0, 2.0))
    with pytest.raises(ValueError):
        point(C2, 0.0, float("nan"), 1.0, 2.0)
    p = point(C2, 0.1, 0.2, 0.3, 0.4)
    assert p.complex_coord(1) == complex(0.3, 0.4)
