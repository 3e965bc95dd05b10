"""Hyperkahler 4-manifold models: flat R^4 and the Eguchi-Hanson space.

Each model is represented by its Kahler potential on the holomorphic chart
where the (2,0)-form is dz1 wedge dz2; the potential carries exact jets to
any order through the AD tower.  The hyperkahler condition pins the
complex Monge-Ampere determinant of the potential to 1/4, which is the
certification oracle: a candidate potential is only trusted once
:func:`validate_hyperkahler` passes on a sample.

The Eguchi-Hanson model lives on the punctured double cover C^2 minus the
origin; the Z_2 quotient and the zero section are never represented, so
all identities here are local ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

from .forms import (
    AlmostComplexStructure,
    Chart,
    ChartPoint,
    FormValue,
    TypeContext,
    acs_from_complex_action,
    d_complex,
    d_complex_bar,
    gram_curvature,
    coframe_gram,
    mat_inv,
    relative_residual,
    standard_acs,
    svalue,
    wedge_with_scale,
)
from .jets import Jet, jet_space, seed_jets, wirtinger

FLAT_CHART = Chart("flat_r4", ("x1", "x2", "x3", "x4"), ("z1", "z2"))
EH_CHART = Chart("eguchi_hanson_cover", ("x1", "x2", "x3", "x4"), ("z1", "z2"))

MONGE_AMPERE_TARGET = 0.25


class DomainError(Exception):
    pass


@dataclass(frozen=True)
class HyperkahlerModel:
    model_id: str
    chart: Chart
    scale: float = 0.0  # Eguchi-Hanson resolution parameter a
    hessian_constant: bool = False  # flat: second derivatives need no extra jet order

    def check_domain(self, coords) -> None:
        if self.model_id == "eguchi_hanson":
            t = sum(x * x for x in coords)
            if t <= 0.0:
                raise DomainError("Eguchi-Hanson potential is singular at the origin")

    def kappa(self, xjets):
        """Kahler potential as a jet; xjets are the four real coordinate jets."""
        t = xjets[0] * xjets[0] + xjets[1] * xjets[1] + xjets[2] * xjets[2] + xjets[3] * xjets[3]
        if self.model_id == "flat_r4":
            return t * 0.5
        a2 = self.scale * self.scale
        a4 = a2 * a2
        s = (t * t + a4).sqrt()
        return (s - a2 * ((a2 + s) / t).log()) * 0.5


def flat_model() -> HyperkahlerModel:
    return HyperkahlerModel("flat_r4", FLAT_CHART, hessian_constant=True)


def eguchi_hanson(a: float = 1.0) -> HyperkahlerModel:
    if a <= 0:
        raise ValueError("Eguchi-Hanson scale must be positive")
    return HyperkahlerModel("eguchi_hanson", EH_CHART, scale=a)


def eh_radial_derivatives(t: float, a: float) -> list:
    """kappa and d^k kappa/dt^k, k <= 4, for the Eguchi-Hanson profile.

    Closed forms used as an independent oracle against the AD tower.
    """
    import math

    a2, a4 = a * a, a ** 4
    s = math.sqrt(t * t + a4)
    kappa = 0.5 * (s - a2 * math.log((a2 + s) / t))
    k1 = s / (2 * t)
    k2 = -a4 / (2 * t * t * s)
    k3 = a4 * (2 * s * s + t * t) / (2 * t ** 3 * s ** 3)
    k4 = -a4 * 0.5 * (6 / (t ** 4 * s) + 3 / (t ** 2 * s ** 3) + 3 / s ** 5)
    return [kappa, k1, k2, k3, k4]


# ---------------------------------------------------------------------------
# jets of the potential


class KappaJet:
    """Mixed holomorphic/antiholomorphic partials of the potential at a point.

    Keys are exponent pairs ((n1, n2), (m1, m2)) for d^{n}/dz^{n} d^{m}/dzbar^{m}.
    """

    def __init__(self, entries: dict, order: int):
        self.entries = entries
        self.order = order

    def d(self, holo=(), anti=()) -> complex:
        key = (_expo(holo), _expo(anti))
        return self.entries[key]

    def hermitian(self):
        """[kappa_{i jbar}] as a 2x2 matrix."""
        return [
            [self.d(holo=(1,), anti=(1,)), self.d(holo=(1,), anti=(2,))],
            [self.d(holo=(2,), anti=(1,)), self.d(holo=(2,), anti=(2,))],
        ]


def _expo(indices) -> tuple:
    e = [0, 0]
    for i in indices:
        e[i - 1] += 1
    return tuple(e)


def kappa_jet(model: HyperkahlerModel, p: ChartPoint, order: int = 4) -> KappaJet:
    """All mixed Wirtinger partials of the potential up to total order."""
    model.check_domain(p.coords)
    k = model.kappa(seed_jets(p.coords, order))
    entries = {}
    for total in range(order + 1):
        for nh in range(total + 1):
            na = total - nh
            for hcombo in combinations_with_replacement((1, 2), nh):
                for acombo in combinations_with_replacement((1, 2), na):
                    jet = k
                    for i in hcombo:
                        jet = wirtinger(jet, 2 * (i - 1), 2 * (i - 1) + 1, bar=False)
                    for i in acombo:
                        jet = wirtinger(jet, 2 * (i - 1), 2 * (i - 1) + 1, bar=True)
                    entries[(_expo(hcombo), _expo(acombo))] = jet.value
    return KappaJet(entries, order)


def kappa_hermitian_jets(model: HyperkahlerModel, xjets, offset_pair: int = 0):
    """[kappa_{i jbar}] with jet entries; exact constants on the flat model.

    ``offset_pair`` gives the complex-coordinate offset of z1 inside the jet
    variables (2 on twistor charts, 0 on the bare 4-manifold chart).
    """
    if model.hessian_constant:
        space = xjets[0].space
        order = xjets[0].order
        half = Jet.constant(space, 0.5, order)
        zero = Jet.constant(space, 0.0, order)
        return [[half, zero], [zero, half]]
    k = model.kappa(xjets[2 * offset_pair : 2 * offset_pair + 4])
    out = []
    for i in range(2):
        row = []
        di = wirtinger(k, 2 * (offset_pair + i), 2 * (offset_pair + i) + 1, bar=False)
        for j in range(2):
            row.append(wirtinger(di, 2 * (offset_pair + j), 2 * (offset_pair + j) + 1, bar=True))
        out.append(row)
    return out


def kappa_third_jets(model: HyperkahlerModel, xjets, offset_pair: int = 0):
    """kappa_{i jbar kbar} indexed [i][j][k]; vanishes identically on flat."""
    k = model.kappa(xjets[2 * offset_pair : 2 * offset_pair + 4])
    out = []
    for i in range(2):
        di = wirtinger(k, 2 * (offset_pair + i), 2 * (offset_pair + i) + 1, bar=False)
        plane = []
        for j in range(2):
            dij = wirtinger(di, 2 * (offset_pair + j), 2 * (offset_pair + j) + 1, bar=True)
            plane.append(
                [
                    wirtinger(dij, 2 * (offset_pair + l), 2 * (offset_pair + l) + 1, bar=True)
                    for l in range(2)
                ]
            )
        out.append(plane)
    return out


# ---------------------------------------------------------------------------
# the Kahler triple


@dataclass(frozen=True)
class HyperkahlerTriple:
    omega_I: FormValue
    omega_J: FormValue
    omega_K: FormValue

    def combination(self, alpha, beta, gamma) -> FormValue:
        return (
            self.omega_I.scale(alpha)
            + self.omega_J.scale(beta)
            + self.omega_K.scale(gamma)
        )


def triple_forms(model: HyperkahlerModel, chart: Chart, offset_pair: int, xjets) -> HyperkahlerTriple:
    """(omega_I, omega_J, omega_K) on ``chart`` with jet coefficients.

    omega_I = i ddbar kappa from the potential Hessian; omega_J + i omega_K
    = dz1 wedge dz2.
    """
    kh = kappa_hermitian_jets(model, xjets, offset_pair)
    dz = [d_complex(chart, offset_pair), d_complex(chart, offset_pair + 1)]
    dzb = [d_complex_bar(chart, offset_pair), d_complex_bar(chart, offset_pair + 1)]
    omega_I = FormValue.zero(chart, 2)
    for i in range(2):
        for j in range(2):
            omega_I = omega_I + dz[i].wedge(dzb[j]).scale(1j * kh[i][j])
    holo2 = dz[0].wedge(dz[1])
    omega_J = (holo2 + holo2.conj()).scale(0.5)
    omega_K = (holo2 - holo2.conj()).scale(-0.5j)
    return HyperkahlerTriple(omega_I, omega_J, omega_K)


def hk_triple(model: HyperkahlerModel, p: ChartPoint, order: int = 0) -> HyperkahlerTriple:
    model.check_domain(p.coords)
    xjets = seed_jets(p.coords, max(order + 2, 2))
    t = triple_forms(model, model.chart, 0, xjets)
    if order == 0:
        return HyperkahlerTriple(t.omega_I.values(), t.omega_J.values(), t.omega_K.values())
    return t


def volume_form(triple: HyperkahlerTriple) -> FormValue:
    """vol with omega_I^2 = 2 vol."""
    return triple.omega_I.wedge(triple.omega_I).scale(0.5)


# ---------------------------------------------------------------------------
# quaternionic action on 1-forms


def quaternion_complex_action(which: str, kh):
    """Action of I, J or K on [dz1, dz2, dzbar1, dzbar2]; columns are images."""
    k11, k12 = kh[0][0], kh[0][1]
    k21, k22 = kh[1][0], kh[1][1]
    z = 0.0 + 0.0j
    if which == "I":
        return [
            [1j, z, z, z],
            [z, 1j, z, z],
            [z, z, -1j, z],
            [z, z, z, -1j],
        ]
    if which == "J":
        return [
            [z, z, -2 * k12, 2 * k11],
            [z, z, -2 * k22, 2 * k21],
            [-2 * k21, 2 * k11, z, z],
            [-2 * k22, 2 * k12, z, z],
        ]
    if which == "K":
        return [
            [z, z, 2j * k12, -2j * k11],
            [z, z, 2j * k22, -2j * k21],
            [-2j * k21, 2j * k11, z, z],
            [-2j * k22, 2j * k12, z, z],
        ]
    raise ValueError(f"unknown quaternion label {which!r}")


def quaternion_operator(
    model: HyperkahlerModel, which: str, xjets, chart: Chart | None = None, offset_pair: int = 0
) -> AlmostComplexStructure:
    """I, J or K as an operator on 1-forms of ``chart``.

    On a six-coordinate chart the fiber directions are annihilated, so the
    result is the quaternionic action on the 4-manifold factor only (no
    square -identity there).
    """
    chart = chart or model.chart
    kh = kappa_hermitian_jets(model, xjets, offset_pair)
    action4 = quaternion_complex_action(which, kh)
    m = chart.ncomplex
    n = chart.dim
    action = [[0.0 + 0.0j for _ in range(n)] for _ in range(n)]
    # complex basis ordering: [dz_0..dz_{m-1}, dzbar_0..dzbar_{m-1}]
    slots = [offset_pair, offset_pair + 1, m + offset_pair, m + offset_pair + 1]
    for r in range(4):
        for c in range(4):
            action[slots[r]][slots[c]] = action4[r][c]
    return acs_from_complex_action(chart, action)


def quaternion_action(model: HyperkahlerModel, p: ChartPoint, eta: FormValue, which: str) -> FormValue:
    """Apply I, J or K to a 1-form at a point of the 4-manifold chart."""
    model.check_domain(p.coords)
    xjets = seed_jets(p.coords, 2)
    op = quaternion_operator(model, which, xjets)
    return op.values().apply(eta).map_coeffs(svalue)


# ---------------------------------------------------------------------------
# certification residuals


def det_residual(model: HyperkahlerModel, p: ChartPoint) -> float:
    """|kappa_{1 1bar} kappa_{2 2bar} - kappa_{1 2bar} kappa_{2 1bar} - 1/4|."""
    model.check_domain(p.coords)
    xjets = seed_jets(p.coords, 2)
    kh = kappa_hermitian_jets(model, xjets)
    det = kh[0][0] * kh[1][1] - kh[0][1] * kh[1][0]
    return abs(svalue(det) - MONGE_AMPERE_TARGET)


def validate_hyperkahler(model: HyperkahlerModel, points) -> float:
    """Max Monge-Ampere determinant residual over a sample of points."""
    return max(det_residual(model, p) for p in points)


def cotangent_gram(model: HyperkahlerModel, xjets):
    """Gram of the holomorphic coframe {dz1, dz2} under the omega_I metric."""
    triple = triple_forms(model, model.chart, 0, xjets)
    acs = standard_acs(model.chart)
    dz = [d_complex(model.chart, 0), d_complex(model.chart, 1)]
    return coframe_gram(triple.omega_I, acs, dz)


def asd_residual(model: HyperkahlerModel, p: ChartPoint, gram=None) -> float:
    """Anti-self-duality of the Chern curvature of the cotangent bundle.

    Returns the sup over the coefficients of F wedge omega_{I,J,K} and of
    the (2,0)/(0,2) parts of F, relative to the size of the entering terms.
    A perturbed, non-hyperkahler Gram can be passed to probe failure.
    """
    model.check_domain(p.coords)
    xjets = seed_jets(p.coords, 4)
    ctx = TypeContext(standard_acs(model.chart))
    if gram is None:
        gram = cotangent_gram(model, xjets)
    F = gram_curvature(gram, ctx)
    triple = triple_forms(model, model.chart, 0, xjets)
    forms = [triple.omega_I.values(), triple.omega_J.values(), triple.omega_K.values()]
    worst = 0.0
    scale = 1.0
    for i in range(2):
        for j in range(2):
            entry = F[i][j].values()
            for om in forms:
                wedge_form, sc = wedge_with_scale(entry, om)
                worst = max(worst, wedge_form.sup())
                scale = max(scale, sc)
            parts = ctx.decompose(entry)
            for key in ((2, 0), (0, 2)):
                part = parts.get(key)
                if part is not None:
                    worst = max(worst, part.sup())
            scale = max(scale, entry.sup())
    return relative_residual(worst, scale)
