"""Twistor-space geometry over a hyperkahler 4-manifold.

The twistor space of N is CP^1 x N with the complex structure that acts as
the standard structure along the sphere and as alpha I + beta J + gamma K
along N, where (alpha, beta, gamma) is the unit vector of the sphere point.
Removing the fiber at infinity leaves C x N, which carries a nowhere
vanishing holomorphic volume form and the two-parameter family of
Hermitian ansatz metrics studied here.

For flat N = R^4 the total space is biholomorphic to C^3, with an explicit
chart map; its coordinate differentials decompose in the local coframe
{dzeta, theta_1, theta_2}, which is where the quotient-bundle curvature
computations start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .forms import (
    AlmostComplexStructure,
    Chart,
    ChartPoint,
    FormValue,
    TypeContext,
    acs_from_complex_action,
    d_complex,
    d_complex_bar,
    differential_of_scalar,
    exterior_derivative,
    svalue,
    to_complex_components,
)
from .hyperkahler import (
    DomainError,
    HyperkahlerModel,
    HyperkahlerTriple,
    kappa_hermitian_jets,
    kappa_third_jets,
    triple_forms,
)
from .jets import Jet, seed_jets

TWISTOR_FLAT = Chart(
    "twistor_flat", ("zr", "zi", "x1", "x2", "x3", "x4"), ("zeta", "z1", "z2")
)
TWISTOR_EH = Chart(
    "twistor_eguchi_hanson", ("zr", "zi", "x1", "x2", "x3", "x4"), ("zeta", "z1", "z2")
)
C3_CHART = Chart("c3", ("zr", "zi", "w1r", "w1i", "w2r", "w2i"), ("zeta", "w1", "w2"))


def twistor_chart(model: HyperkahlerModel) -> Chart:
    return TWISTOR_FLAT if model.model_id == "flat_r4" else TWISTOR_EH


def const_like(jet: Jet, value) -> Jet:
    return Jet.constant(jet.space, value, jet.order)


# ---------------------------------------------------------------------------
# the sphere of complex structures


@dataclass(frozen=True)
class SphereCoords:
    alpha: float
    beta: float
    gamma: float

    def norm_residual(self) -> float:
        return abs(self.alpha**2 + self.beta**2 + self.gamma**2 - 1.0)


def sphere_map(zeta: complex) -> SphereCoords:
    """Stereographic identification of the zeta-plane with the unit sphere."""
    s = 1.0 + abs(zeta) ** 2
    return SphereCoords(
        (1.0 - abs(zeta) ** 2) / s, 2.0 * zeta.real / s, 2.0 * zeta.imag / s
    )


def sphere_jets(zr: Jet, zi: Jet):
    """alpha, beta, gamma and s = 1 + |zeta|^2 as jets."""
    mod2 = zr * zr + zi * zi
    s = mod2 + 1.0
    inv = s.reciprocal()
    return (1.0 - mod2) * inv, 2.0 * zr * inv, 2.0 * zi * inv, s


# ---------------------------------------------------------------------------
# ansatz parameters


@dataclass(frozen=True)
class AnsatzParams:
    """Conformal profiles of the ansatz metric.

    ``g_fn(zr, zi)`` and ``h_fn(x1, x2, x3, x4)`` take jets and return a
    jet; both must be real-valued.  ``alpha_prime`` is the coupling
    constant of the anomaly equation.
    """

    g_fn: object
    h_fn: object
    alpha_prime: float = 2.0

    @staticmethod
    def constants(g: float = 0.0, h: float = 0.0, alpha_prime: float = 2.0) -> "AnsatzParams":
        return AnsatzParams(
            g_fn=lambda zr, zi: const_like(zr, g),
            h_fn=lambda x1, x2, x3, x4: const_like(x1, h),
            alpha_prime=alpha_prime,
        )

    @staticmethod
    def coupling_solution(alpha_prime: float = 2.0, radial_h: bool = False) -> "AnsatzParams":
        """The constant conformal factor solving the anomaly equation.

        e^{2g} = alpha'/4 makes the torsion term match the curvature term
        exactly (certified numerically at machine precision for both the
        constant and the radial h branch); h = -(3/2) log rho is the
        nonconstant branch of the radial dichotomy.
        """
        gval = 0.5 * math.log(alpha_prime / 4.0)
        if radial_h:
            h_fn = lambda x1, x2, x3, x4: (x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4).log() * (-1.5)
        else:
            h_fn = lambda x1, x2, x3, x4: const_like(x1, 0.0)
        return AnsatzParams(
            g_fn=lambda zr, zi: const_like(zr, gval), h_fn=h_fn, alpha_prime=alpha_prime
        )

    @staticmethod
    def constant_norm_branch() -> "AnsatzParams":
        """h = 0 and g = 2 log s, the branch where the volume form has constant norm."""
        return AnsatzParams(
            g_fn=lambda zr, zi: (zr * zr + zi * zi + 1.0).log() * 2.0,
            h_fn=lambda x1, x2, x3, x4: const_like(x1, 0.0),
        )


# ---------------------------------------------------------------------------
# per-point assembly shared by the residual operators


class TwistorFrame:
    """Jets of every basic quantity of the ansatz at one twistor point."""

    def __init__(self, model: HyperkahlerModel, p: ChartPoint, order: int, params: AnsatzParams | None = None):
        chart = twistor_chart(model)
        if p.chart != chart:
            raise ValueError(f"point lives on {p.chart.name!r}, expected {chart.name!r}")
        model.check_domain(p.coords[2:])
        self.model = model
        self.chart = chart
        self.point = p
        self.order = order
        jets = seed_jets(p.coords, order)
        self.jets = jets
        self.zr, self.zi = jets[0], jets[1]
        self.x = jets[2:]
        self.zeta = self.zr + 1j * self.zi
        self.zeta_bar = self.zeta.conjugate()
        self.alpha, self.beta, self.gamma, self.s = sphere_jets(self.zr, self.zi)
        self.kh = kappa_hermitian_jets(model, jets, offset_pair=1)
        self.triple = triple_forms(model, chart, 1, jets)
        self.dzeta = d_complex(chart, 0)
        self.dzeta_bar = d_complex_bar(chart, 0)
        self.dz = [d_complex(chart, 1), d_complex(chart, 2)]
        self.dzb = [d_complex_bar(chart, 1), d_complex_bar(chart, 2)]
        if params is not None:
            self.g = params.g_fn(self.zr, self.zi)
            self.h = params.h_fn(*self.x)
        self._acs = None
        self._ctx = None

    @property
    def acs(self) -> AlmostComplexStructure:
        if self._acs is None:
            self._acs = _twistor_acs_from_frame(self)
        return self._acs

    @property
    def ctx(self) -> TypeContext:
        if self._ctx is None:
            self._ctx = TypeContext(self.acs)
        return self._ctx

    def fiber_form(self) -> FormValue:
        """alpha omega_I + beta omega_J + gamma omega_K."""
        return self.triple.combination(self.alpha, self.beta, self.gamma)

    def fubini_study(self) -> FormValue:
        """Round metric of radius 1 on the zeta-plane: 2i/s^2 dzeta^dzeta_bar."""
        s2inv = (self.s * self.s).reciprocal()
        return self.dzeta.wedge(self.dzeta_bar).scale(2j * s2inv)

    def metric(self) -> FormValue:
        """The Hermitian ansatz form."""
        s2inv = (self.s * self.s).reciprocal()
        conf = (2.0 * self.h + self.g).exp() * s2inv
        return self.fiber_form().scale(conf) + self.fubini_study().scale((2.0 * self.g).exp())

    def norm_profile(self) -> Jet:
        """s^4 e^{-2h-2g}: the volume-form norm up to a constant."""
        s2 = self.s * self.s
        return s2 * s2 * (-2.0 * self.h - 2.0 * self.g).exp()

    def volume_3form(self) -> FormValue:
        return (
            self.triple.omega_I.scale(-2.0 * self.zeta)
            + self.triple.omega_J.scale(1.0 - self.zeta * self.zeta)
            + self.triple.omega_K.scale(1j * (1.0 + self.zeta * self.zeta))
        ).wedge(self.dzeta)


def _twistor_acs_from_frame(fr: TwistorFrame) -> AlmostComplexStructure:
    z = 0.0 + 0.0j
    ia = 1j * fr.alpha
    bp = -2.0 * (fr.beta + 1j * fr.gamma)
    bm = -2.0 * (fr.beta - 1j * fr.gamma)
    k11, k12 = fr.kh[0][0], fr.kh[0][1]
    k21, k22 = fr.kh[1][0], fr.kh[1][1]
    action = [
        [1j, z, z, z, z, z],
        [z, ia, z, z, bm * k12, -bm * k11],
        [z, z, ia, z, bm * k22, -bm * k21],
        [z, z, z, -1j, z, z],
        [z, bp * k21, -bp * k11, z, -ia, z],
        [z, bp * k22, -bp * k12, z, z, -ia],
    ]
    return acs_from_complex_action(fr.chart, action)


def twistor_acs(model: HyperkahlerModel, p: ChartPoint, order: int = 0) -> AlmostComplexStructure:
    """The twistor complex structure acting on 1-forms at a point."""
    fr = TwistorFrame(model, p, max(order, 0) + 2)
    acs = fr.acs
    return acs if order > 0 else acs.values()


def holomorphic_volume(model: HyperkahlerModel, p: ChartPoint, order: int = 0) -> FormValue:
    """The trivializing (3,0)-form; d-closed."""
    fr = TwistorFrame(model, p, max(order, 1) + 2)
    omega = fr.volume_3form()
    return omega if order > 0 else omega.values()


def ansatz_metric(model: HyperkahlerModel, params: AnsatzParams, p: ChartPoint, order: int = 0) -> FormValue:
    """The Hermitian ansatz form; positive (1,1) for the twistor structure."""
    fr = TwistorFrame(model, p, max(order, 0) + 2, params)
    omega = fr.metric()
    return omega if order > 0 else omega.values()


def omega_norm(model: HyperkahlerModel, params: AnsatzParams, p: ChartPoint) -> float:
    """Norm of the holomorphic volume form against the ansatz metric.

    Computed from the top-form ratio of Omega^Omega_bar and omega^3/3!,
    with the sign fixed so the output is positive; only ratios across
    points are meaningful since the overall constant is conventional.
    """
    fr = TwistorFrame(model, p, 2, params)
    omega = fr.metric().values()
    vol = fr.volume_3form().values()
    top = tuple(range(fr.chart.dim))
    omega3 = omega.wedge(omega).wedge(omega)
    denom = svalue(omega3.coefficient(top)) / 6.0
    if abs(denom) == 0.0:
        raise ZeroDivisionError("degenerate ansatz metric")
    numer = svalue(vol.wedge(vol.conj()).coefficient(top))
    return math.sqrt(abs(numer / denom))


# ---------------------------------------------------------------------------
# the explicit chart map for flat N


def c3_chart_map(direction: str, p: ChartPoint) -> ChartPoint:
    """Biholomorphism between C^3 and the flat twistor space.

    ``to_twistor``: (zeta, w1, w2) -> (zeta, u1, u2) with u1 = (w1 - i zeta
    w2_bar)/s; ``to_c3`` is its inverse w1 = u1 + i zeta u2_bar,
    w2 = u2 - i zeta u1_bar.
    """
    if direction == "to_twistor":
        if p.chart != C3_CHART:
            raise ValueError("to_twistor expects a C^3 chart point")
        zeta, w1, w2 = (p.complex_coord(j) for j in range(3))
        s = 1.0 + abs(zeta) ** 2
        u1 = (w1 - 1j * zeta * w2.conjugate()) / s
        u2 = (w2 + 1j * zeta * w1.conjugate()) / s
        return ChartPoint(
            TWISTOR_FLAT, (zeta.real, zeta.imag, u1.real, u1.imag, u2.real, u2.imag)
        )
    if direction == "to_c3":
        if p.chart != TWISTOR_FLAT:
            raise ValueError("to_c3 expects a flat twistor chart point")
        zeta, u1, u2 = (p.complex_coord(j) for j in range(3))
        w1 = u1 + 1j * zeta * u2.conjugate()
        w2 = u2 - 1j * zeta * u1.conjugate()
        return ChartPoint(
            C3_CHART, (zeta.real, zeta.imag, w1.real, w1.imag, w2.real, w2.imag)
        )
    raise ValueError(f"unknown direction {direction!r}")


def w_field_jets(fr: TwistorFrame):
    """The global holomorphic coordinates w1, w2 as scalar jets on the twistor chart."""
    if fr.model.model_id != "flat_r4":
        raise DomainError("global holomorphic coordinates exist only on the flat model")
    u1 = fr.x[0] + 1j * fr.x[1]
    u2 = fr.x[2] + 1j * fr.x[3]
    w1 = u1 + 1j * fr.zeta * u2.conjugate()
    w2 = u2 - 1j * fr.zeta * u1.conjugate()
    return w1, w2


# ---------------------------------------------------------------------------
# the (1,0)-coframe away from zeta = 0


def theta_coframe_jets(fr: TwistorFrame):
    if abs(svalue(fr.zeta)) == 0.0:
        raise DomainError("theta coframe is singular at zeta = 0")
    inv = fr.zeta.reciprocal()
    k11, k12 = fr.kh[0][0], fr.kh[0][1]
    k21, k22 = fr.kh[1][0], fr.kh[1][1]
    theta1 = (
        fr.dz[0].scale(2j * inv * k12) + fr.dz[1].scale(2j * inv * k22) + fr.dzb[0]
    )
    theta2 = (
        fr.dz[0].scale(2j * inv * k11) + fr.dz[1].scale(2j * inv * k21) - fr.dzb[1]
    )
    return theta1, theta2


def theta_coframe(model: HyperkahlerModel, p: ChartPoint, order: int = 0):
    """theta_1, theta_2: (1,0)-forms completing dzeta to a coframe for zeta != 0."""
    fr = TwistorFrame(model, p, max(order, 0) + 2)
    t1, t2 = theta_coframe_jets(fr)
    if order > 0:
        return t1, t2
    return t1.values(), t2.values()


# ---------------------------------------------------------------------------
# decomposition of the global coframe (flat model)


@dataclass(frozen=True)
class FrameDecomposition:
    """dw_i = L_i dzeta + C_i theta_1 - D_i theta_2 with E rows (C_i, D_i)."""

    L: tuple
    E: tuple


@dataclass(frozen=True)
class FrameDecompositionResult:
    decomposition: FrameDecomposition
    simp_residual: float
    loc_residual: float
    reconstruction_residual: float


class _FrameData:
    """Jet-level frame decomposition, shared by the curvature operators."""

    def __init__(self, fr: TwistorFrame):
        if fr.model.model_id != "flat_r4":
            raise DomainError("frame decomposition needs the flat model's global coordinates")
        if abs(svalue(fr.zeta)) == 0.0:
            raise DomainError("frame decomposition is singular at zeta = 0")
        self.fr = fr
        w1, w2 = w_field_jets(fr)
        self.dw = [
            exterior_derivative(FormValue.scalar(fr.chart, w1)),
            exterior_derivative(FormValue.scalar(fr.chart, w2)),
        ]
        self.L = []
        self.C = []
        self.D = []
        for i in range(2):
            comps = to_complex_components(self.dw[i])
            self.L.append(comps[0])
            self.C.append(comps[4])
            self.D.append(comps[5])
        det = self.C[0] * self.D[1] - self.C[1] * self.D[0]
        if abs(svalue(det)) < 1e-14:
            raise ZeroDivisionError("frame solve is singular at this point")

    def theta(self):
        return theta_coframe_jets(self.fr)

    def reconstruction_residual(self) -> float:
        theta1, theta2 = self.theta()
        worst = 0.0
        for i in range(2):
            rebuilt = (
                self.fr.dzeta.scale(self.L[i])
                + theta1.scale(self.C[i])
                - theta2.scale(self.D[i])
            )
            worst = max(worst, (self.dw[i].values() - rebuilt.values()).sup())
        return worst


def frame_decompose(model: HyperkahlerModel, p: ChartPoint) -> FrameDecompositionResult:
    """Decompose {dw_1, dw_2} in {dzeta, theta_1, theta_2} and certify it.

    ``simp_residual`` checks the dbar-compatibility system satisfied by the
    C, D coefficient fields; ``loc_residual`` the corresponding equation
    for 2 zeta dbar L.
    """
    fr = TwistorFrame(model, p, 3)
    data = _FrameData(fr)
    theta1, theta2 = data.theta()
    theta1_bar, theta2_bar = theta1.conj(), theta2.conj()
    third = kappa_third_jets(model, fr.jets, offset_pair=1)
    phase = 1j * (fr.beta - 1j * fr.gamma)
    ctx = fr.ctx
    one_minus_alpha = 1.0 - fr.alpha

    simp = 0.0
    loc = 0.0
    for i in range(2):
        dbar_C = ctx.project1(differential_of_scalar(data.C[i], fr.chart), antiholomorphic=True)
        dbar_D = ctx.project1(differential_of_scalar(data.D[i], fr.chart), antiholomorphic=True)
        dbar_L = ctx.project1(differential_of_scalar(data.L[i], fr.chart), antiholomorphic=True)
        # kappa_{1 bar1 bar2} theta_bar1 - kappa_{2 bar1 bar2} theta_bar2 and friends
        m112 = theta1_bar.scale(third[0][0][1]) - theta2_bar.scale(third[1][0][1])
        m111 = theta1_bar.scale(third[0][0][0]) - theta2_bar.scale(third[1][0][0])
        m122 = theta1_bar.scale(third[0][1][1]) - theta2_bar.scale(third[1][1][1])
        rhs_C = (m112.scale(data.C[i]) - m111.scale(data.D[i])).scale(phase)
        rhs_D = (m122.scale(data.C[i]) - m112.scale(data.D[i])).scale(phase)
        simp = max(simp, (dbar_C.values() - rhs_C.values()).sup())
        simp = max(simp, (dbar_D.values() - rhs_D.values()).sup())
        lhs_L = dbar_L.scale(2.0 * fr.zeta)
        rhs_L = -(theta1.scale(one_minus_alpha) - fr.dzb[0].scale(2.0)).scale(data.C[i]) + (
            theta2.scale(one_minus_alpha) + fr.dzb[1].scale(2.0)
        ).scale(data.D[i])
        loc = max(loc, (lhs_L.values() - rhs_L.values()).sup())

    decomposition = FrameDecomposition(
        L=tuple(svalue(l) for l in data.L),
        E=tuple((svalue(data.C[i]), svalue(data.D[i])) for i in range(2)),
    )
    return FrameDecompositionResult(
        decomposition=decomposition,
        simp_residual=simp,
        loc_residual=loc,
        reconstruction_residual=data.reconstruction_residual(),
    )
