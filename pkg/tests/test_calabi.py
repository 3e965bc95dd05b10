import math
import random

import pytest

from stromlab.forms import FormValue, point
from stromlab.jets import Jet, jet_space
from stromlab.calabi import (
    CalabiParams,
    CanonicalBundleFrame,
    Profile,
    ZeroSectionError,
    base_chern_scalar,
    calabi_metric,
    chern_scalar,
    constant_norm_residual,
    extremal_residual,
    flat_torus_chart,
    fubini_study_cp1,
    km_balanced_residual,
    omega0_d_residual,
    profile_ode_residual,
    solve_profile_f,
    theorem_metric_params,
    volume_norm,
)

FS = fubini_study_cp1()
TORUS = flat_torus_chart()


def total_points(base, n, seed, tmin=0.35):
    rng = random.Random(seed)
    pts = []
    while len(pts) < n:
        coords = [rng.uniform(-1.1, 1.1) for _ in range(4)]
        if coords[2] ** 2 + coords[3] ** 2 >= tmin:
            pts.append(point(base.total_chart, *coords))
    return pts


# -- base scalars -------------------------------------------------------------


def test_base_scalars():
    # round FS normalization has Chern-Ricci form equal to twice the metric
    for z in ((0.0, 0.0), (0.4, -0.7), (1.1, 0.3)):
        assert base_chern_scalar(FS, z) == pytest.approx(2.0, abs=1e-9)
        assert base_chern_scalar(TORUS, z) == pytest.approx(0.0, abs=1e-12)


def test_base_scalar_constancy_across_sample():
    vals = [base_chern_scalar(FS, (x, y)) for x, y in ((0.1, 0.2), (-0.8, 0.5), (1.2, -1.0))]
    for v in vals[1:]:
        assert abs(v - vals[0]) <= 1e-9


def test_scaling_divides_scalar():
    # lambda * omega has Chern scalar s / lambda
    import dataclasses

    scaled = dataclasses.replace(FS, model_id="fubini_study_cp1")

    class Scaled:
        n = 1
        chart = FS.chart
        total_chart = FS.total_chart

        def metric(self, zjets):
            return [[e * 3.0 for e in row] for row in FS.metric(zjets)]

    assert base_chern_scalar(Scaled(), (0.3, 0.4)) == pytest.approx(2.0 / 3.0, abs=1e-10)


# -- the ansatz ---------------------------------------------------------------


def test_metric_reduces_to_induced_form():
    p = total_points(TORUS, 1, seed=1)[0]
    omega = calabi_metric(TORUS, CalabiParams.plain(), p)
    # flat base, R = |t|^2: fiber part is i dt ^ dtbar
    from stromlab.forms import d_complex, d_complex_bar

    expected = (
        d_complex(TORUS.total_chart, 0).wedge(d_complex_bar(TORUS.total_chart, 0)).scale(1j)
        + d_complex(TORUS.total_chart, 1).wedge(d_complex_bar(TORUS.total_chart, 1)).scale(1j)
    )
    assert (omega - expected).sup() <= 1e-13


def test_zero_section_rejected():
    with pytest.raises(ZeroSectionError):
        calabi_metric(FS, CalabiParams.plain(), point(FS.total_chart, 0.1, 0.2, 0.0, 0.0))


def test_omega0_kahler_iff_flat_base():
    for p in total_points(TORUS, 3, seed=3):
        assert omega0_d_residual(TORUS, p) <= 1e-10
    for p in total_points(FS, 3, seed=5):
        assert omega0_d_residual(FS, p) >= 1e-3


def test_metric_is_positive_1_1():
    p = total_points(FS, 1, seed=7)[0]
    params = theorem_metric_params(FS)
    fr = CanonicalBundleFrame(FS, params, p, 1)
    omega = fr.metric().values()
    from stromlab.forms import TypeContext, standard_acs, svalue

    ctx = TypeContext(standard_acs(FS.total_chart))
    parts = ctx.decompose(omega)
    for key in ((2, 0), (0, 2)):
        assert parts.get(key, FormValue.zero(FS.total_chart, 2)).sup() <= 1e-12
    rng = random.Random(11)
    acs = standard_acs(FS.total_chart)
    for _ in range(8):
        v = [rng.uniform(-1, 1) for _ in range(4)]
        jv = [sum(svalue(acs.mat[u][w]) * v[u] for u in range(4)).real for w in range(4)]
        assert omega.evaluate(v, jv).real > 0.0


# -- profiles -----------------------------------------------------------------


def test_profile_closed_form():
    prof = solve_profile_f(2.0, 0.0, 1.0, 1)
    space = jet_space(1, 1)
    for R in (0.25, 1.0, 3.0, 9.5):
        got = prof(Jet.variable(space, 0, R)).value.real
        assert got == pytest.approx(0.5 * math.log(1.0 + 4.0 * R), abs=1e-14)


def test_profile_ode_self_certification():
    for s_const, c, c0, n in ((2.0, 0.0, 1.0, 1), (0.7, 0.3, 2.0, 1), (3.0, -0.2, 0.5, 2)):
        prof = solve_profile_f(s_const, c, c0, n)
        for R in (0.1, 1.0, 4.0, 10.0):
            assert profile_ode_residual(prof, s_const, c, n, R) <= 1e-12


def test_profile_zero_scalar_is_constant():
    prof = solve_profile_f(0.0, 0.0, 2.0, 1)
    space = jet_space(1, 2)
    jet = prof(Jet.variable(space, 0, 1.3))
    assert jet.partial((1,)) == pytest.approx(0.0, abs=1e-15)


def test_profile_domain_error():
    prof = solve_profile_f(-1.0, 0.0, 0.5, 1)  # argument crosses zero
    space = jet_space(1, 1)
    with pytest.raises(ValueError):
        prof(Jet.variable(space, 0, 5.0))


# -- constant volume-form norm ---------------------------------------------------


def test_constant_norm_on_branch():
    pts = total_points(FS, 8, seed=13)
    params = CalabiParams.constant_length(FS, f_profile=solve_profile_f(2.0, 0.0, 1.0, 1))
    assert constant_norm_residual(FS, params, pts) <= 1e-9


def test_constant_norm_with_base_u():
    # v = -n u branch with a nonconstant u on the base
    pts = total_points(FS, 6, seed=17)
    params = CalabiParams.constant_length(
        FS, u_fn=lambda zjets: zjets[0] * 0.3 + zjets[1] * zjets[1] * 0.2
    )
    assert constant_norm_residual(FS, params, pts) <= 1e-9


def test_constant_norm_trivial_params():
    pts = total_points(FS, 5, seed=19)
    assert constant_norm_residual(FS, CalabiParams.constant_length(FS), pts) <= 1e-10


def test_norm_variance_detects_violation():
    pts = total_points(FS, 8, seed=23)
    f = Profile.zero()
    broken = CalabiParams(
        u_fn=lambda zjets: zjets[0] * 0.0,
        v_fn=lambda zjets: zjets[0] * 0.0,
        f_profile=f,
        g_profile=Profile("violate", lambda R: f(R) * (-1.0) + R * 0.1),
    )
    assert constant_norm_residual(FS, broken, pts) >= 1e-3


# -- the balanced certificate -----------------------------------------------------


def test_km_balanced_theorem_metric():
    params = theorem_metric_params(FS)
    for p in total_points(FS, 4, seed=29):
        assert km_balanced_residual(FS, params, p) <= 1e-8


def test_km_balanced_flat_base_trivial():
    params = theorem_metric_params(TORUS)  # s = 0 gives a constant profile
    for p in total_points(TORUS, 3, seed=31):
        assert km_balanced_residual(TORUS, params, p) <= 1e-10


def test_km_balanced_wrong_profile_fails():
    bad = CalabiParams.constant_length(FS, f_profile=Profile.linear(1.0))
    p = total_points(FS, 1, seed=37)[0]
    assert km_balanced_residual(FS, bad, p) >= 1e-3


def test_chern_scalar_of_theorem_metric():
    params = theorem_metric_params(FS)
    for p in total_points(FS, 3, seed=41):
        assert abs(chern_scalar(FS, params, p)) <= 1e-8


def test_extremal_theorem_metric():
    params = theorem_metric_params(FS)
    for p in total_points(FS, 2, seed=43):
        assert extremal_residual(FS, params, p) <= 1e-8


def test_extremal_vanishes_pointwise_when_ricci_flat():
    # any Chern-Ricci flat balanced input: both sides vanish separately
    params = theorem_metric_params(TORUS)
    p = total_points(TORUS, 1, seed=47)[0]
    assert extremal_residual(TORUS, params, p) <= 1e-10


def test_full_certificate_simultaneously():
    params = theorem_metric_params(FS)
    pts = total_points(FS, 5, seed=53)
    assert constant_norm_residual(FS, params, pts) <= 1e-9
    for p in pts[:3]:
        assert km_balanced_residual(FS, params, p) <= 1e-8
        assert abs(chern_scalar(FS, params, p)) <= 1e-8
    assert extremal_residual(FS, params, pts[0]) <= 1e-8


@pytest.mark.slow
def test_extremal_fails_on_nonzero_scalar_metric():
    # the twistor ansatz with growing radial h has nonzero Chern scalar
    from stromlab.calabi import extremal_residual_of
    from stromlab.hyperkahler import flat_model
    from stromlab.strominger import AnsatzCurvatureData
    from stromlab.twistor import TWISTOR_FLAT, AnsatzParams

    p = point(TWISTOR_FLAT, 0.5, 0.3, 0.6, -0.4, 0.8, 0.2)
    params = AnsatzParams(
        g_fn=lambda zr, zi: zr * 0.0,
        h_fn=lambda x1, x2, x3, x4: (x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4) * 0.2,
    )
    data = AnsatzCurvatureData(flat_model(), params, p, order=7)
    res = extremal_residual_of(data.fr.metric(), data.gram(), data.fr.ctx)
    assert res >= 1e-4
