"""Complex-valued exterior calculus over real coordinate charts.

Forms are stored sparsely over strictly increasing multi-indices of the
real coordinate differentials.  Coefficients may be plain complex numbers
(pointwise values) or :class:`~stromlab.jets.Jet` objects (local Taylor
data), and every operation here is generic over the two: the exterior
derivative simply differentiates jet coefficients, so nested expressions
like ``dbar(Hbar^-1 del Hbar)`` come out exact.

The Dolbeault operators make no holomorphic-coordinate assumption: del
and dbar are assembled from real partials through the (1,0)/(0,1)
projectors of a pointwise almost complex structure.  Type decomposition
of k-forms expands the projected basis differentials, which is both exact
(the sum of the parts reproduces the input) and cheap at low degree.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .jets import InsufficientJetOrder, Jet, jet_space, seed_jets

PRUNE_EPS = 1e-300  # only exact-zero scale pruning; tolerances live in comparisons


class ChartMismatch(Exception):
    pass


class DegreeError(Exception):
    pass


@dataclass(frozen=True)
class Chart:
    """A real coordinate chart whose coordinates pair into complex ones.

    Coordinate 2j + i*(2j+1) is the j-th complex coordinate, named
    ``complex_names[j]``.
    """

    name: str
    coords: tuple
    complex_names: tuple

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def ncomplex(self) -> int:
        return len(self.complex_names)

    def __post_init__(self):
        if len(self.coords) != 2 * len(self.complex_names):
            raise ValueError("chart coordinates must pair into complex ones")


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.chart.dim:
            raise ValueError(
                f"chart {self.chart.name!r} needs {self.chart.dim} coordinates, "
                f"got {len(self.coords)}"
            )
        if not all(math.isfinite(x) for x in self.coords):
            raise ValueError("chart point has non-finite coordinates")

    def complex_coord(self, j: int) -> complex:
        return complex(self.coords[2 * j], self.coords[2 * j + 1])

    def seeds(self, order: int) -> list:
        return seed_jets(self.coords, order)


def point(chart: Chart, *coords) -> ChartPoint:
    return ChartPoint(chart, tuple(float(x) for x in coords))


# ---------------------------------------------------------------------------
# scalar helpers: coefficients are complex numbers or jets


def svalue(x) -> complex:
    return x.value if isinstance(x, Jet) else complex(x)


def sconj(x):
    return x.conjugate()


def smag(x) -> float:
    return abs(svalue(x))


def is_zero_scalar(x) -> bool:
    if isinstance(x, Jet):
        return bool(np.all(np.abs(x.c) < PRUNE_EPS))
    return abs(x) < PRUNE_EPS


# ---------------------------------------------------------------------------
# forms


class FormValue:
    """Exterior-algebra element at a point, graded by degree."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: dict | None = None):
        if degree < 0 or degree > chart.dim:
            raise DegreeError(f"degree {degree} out of range on {chart.name!r}")
        self.chart = chart
        self.degree = degree
        self.terms = {}
        if terms:
            for multi, c in terms.items():
                if len(multi) != degree:
                    raise DegreeError("multi-index length disagrees with degree")
                if not is_zero_scalar(c):
                    self.terms[multi] = c

    @staticmethod
    def zero(chart: Chart, degree: int) -> "FormValue":
        return FormValue(chart, degree)

    @staticmethod
    def scalar(chart: Chart, value) -> "FormValue":
        return FormValue(chart, 0, {(): value})

    def _check(self, other: "FormValue"):
        if self.chart is not other.chart and self.chart != other.chart:
            raise ChartMismatch(f"{self.chart.name!r} vs {other.chart.name!r}")

    def __add__(self, other: "FormValue") -> "FormValue":
        self._check(other)
        if self.degree != other.degree:
            raise DegreeError("cannot add forms of different degree")
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms[m] + c if m in terms else c
        return FormValue(self.chart, self.degree, terms)

    def __sub__(self, other: "FormValue") -> "FormValue":
        return self + other.scale(-1.0)

    def __neg__(self) -> "FormValue":
        return self.scale(-1.0)

    def scale(self, s) -> "FormValue":
        return FormValue(self.chart, self.degree, {m: s * c for m, c in self.terms.items()})

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def wedge(self, other: "FormValue") -> "FormValue":
        self._check(other)
        deg = self.degree + other.degree
        if deg > self.chart.dim:
            raise DegreeError("wedge degree exceeds chart dimension")
        # contributions are summed per output index in an operand-symmetric
        # order so that a^b and b^a agree exactly, not just up to rounding
        buckets: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                merged, sign = _merge_indices(ma, mb)
                if merged is None:
                    continue
                c = ca * cb if sign > 0 else -(ca * cb)
                key = (ma, mb) if ma <= mb else (mb, ma)
                buckets.setdefault(merged, {}).setdefault(key, []).append(c)
        terms: dict = {}
        for merged, groups in buckets.items():
            acc = None
            for key in sorted(groups):
                cs = groups[key]
                part = cs[0] + cs[1] if len(cs) == 2 else cs[0]
                acc = part if acc is None else acc + part
            terms[merged] = acc
        return FormValue(self.chart, deg, terms)

    def __xor__(self, other):  # a ^ b as wedge shorthand
        return self.wedge(other)

    def conj(self) -> "FormValue":
        return FormValue(self.chart, self.degree, {m: sconj(c) for m, c in self.terms.items()})

    def map_coeffs(self, fn) -> "FormValue":
        return FormValue(self.chart, self.degree, {m: fn(c) for m, c in self.terms.items()})

    def values(self) -> "FormValue":
        """Drop jet data, keeping pointwise coefficient values."""
        return self.map_coeffs(svalue)

    def coefficient(self, multi: tuple):
        return self.terms.get(tuple(multi), 0.0)

    def sup(self) -> float:
        """Sup of coefficient magnitudes in chart coordinates (residual norm)."""
        return max((smag(c) for c in self.terms.values()), default=0.0)

    def evaluate(self, *vectors) -> complex:
        """Evaluate on degree-many tangent vectors (given as real components)."""
        if len(vectors) != self.degree:
            raise DegreeError("wrong number of vectors")
        total = 0.0 + 0.0j
        for multi, c in self.terms.items():
            minor = np.array([[vec[i] for i in multi] for vec in vectors], dtype=np.complex128)
            total += svalue(c) * np.linalg.det(minor)
        return total

    def __repr__(self):  # pragma: no cover
        names = self.chart.coords
        bits = []
        for m, c in sorted(self.terms.items()):
            label = "^".join(f"d{names[i]}" for i in m) or "1"
            bits.append(f"({svalue(c):.4g}) {label}")
        return " + ".join(bits) if bits else f"0 (degree {self.degree})"


def _merge_indices(ma: tuple, mb: tuple):
    """Merge increasing index tuples; None if they collide, else (merged, sign)."""
    if not ma:
        return mb, 1
    if not mb:
        return ma, 1
    merged = []
    sign = 1
    i = j = 0
    while i < len(ma) and j < len(mb):
        a, b = ma[i], mb[j]
        if a == b:
            return None, 0
        if a < b:
            merged.append(a)
            i += 1
        else:
            merged.append(b)
            j += 1
            if (len(ma) - i) % 2:
                sign = -sign
    merged.extend(ma[i:])
    merged.extend(mb[j:])
    return tuple(merged), sign


def wedge(a: FormValue, b: FormValue) -> FormValue:
    """Graded-commutative product; bilinear and associative."""
    return a.wedge(b)


def wedge_with_scale(a: FormValue, b: FormValue):
    """Wedge plus the sup of the individual term products (cancellation scale)."""
    out = a.wedge(b)
    scale = 0.0
    for ca in a.terms.values():
        for cb in b.terms.values():
            scale = max(scale, smag(ca) * smag(cb))
    return out, scale


def d_real(chart: Chart, v: int) -> FormValue:
    return FormValue(chart, 1, {(v,): 1.0 + 0.0j})


def d_complex(chart: Chart, j: int) -> FormValue:
    """dz_j = dx_{2j} + i dx_{2j+1}."""
    return FormValue(chart, 1, {(2 * j,): 1.0 + 0.0j, (2 * j + 1,): 1j})


def d_complex_bar(chart: Chart, j: int) -> FormValue:
    return FormValue(chart, 1, {(2 * j,): 1.0 + 0.0j, (2 * j + 1,): -1j})


def complex_basis(chart: Chart) -> list:
    """[dz_0 .. dz_{m-1}, dzbar_0 .. dzbar_{m-1}]."""
    m = chart.ncomplex
    return [d_complex(chart, j) for j in range(m)] + [d_complex_bar(chart, j) for j in range(m)]


def _complex_basis_inverse(chart: Chart) -> np.ndarray:
    """Matrix sending real-basis coefficients to complex-basis coefficients."""
    m = chart.ncomplex
    T = np.zeros((chart.dim, chart.dim), dtype=np.complex128)
    for k, form in enumerate(complex_basis(chart)):
        for (v,), c in form.terms.items():
            T[v, k] = c
    return np.linalg.inv(T)


_BASIS_INV_CACHE: dict = {}


def to_complex_components(form: FormValue) -> list:
    """Components of a 1-form in the [dz..., dzbar...] basis."""
    if form.degree != 1:
        raise DegreeError("complex components only for 1-forms")
    chart = form.chart
    Tinv = _BASIS_INV_CACHE.get(chart.name)
    if Tinv is None:
        Tinv = _complex_basis_inverse(chart)
        _BASIS_INV_CACHE[chart.name] = Tinv
    comps = []
    for k in range(chart.dim):
        acc = 0.0 + 0.0j
        for v in range(chart.dim):
            c = form.terms.get((v,))
            if c is not None:
                acc = acc + Tinv[k, v] * c
        comps.append(acc)
    return comps


def exterior_derivative(form: FormValue) -> FormValue:
    """d, coefficient-wise from exact jet partials; degree + 1."""
    out, _ = exterior_derivative_with_scale(form)
    return out


def exterior_derivative_with_scale(form: FormValue):
    """d plus the sup of individual partial contributions (cancellation scale)."""
    chart = form.chart
    terms: dict = {}
    scale = 0.0
    for multi, c in form.terms.items():
        if not isinstance(c, Jet):
            continue  # bare complex coefficients are constants, d kills them
        for v in range(chart.dim):
            if v in multi:
                continue
            dc = c.derivative(v)
            if is_zero_scalar(dc):
                continue
            scale = max(scale, smag(dc))
            pos = bisect_left(multi, v)
            merged = multi[:pos] + (v,) + multi[pos:]
            contrib = dc if pos % 2 == 0 else -dc
            terms[merged] = terms[merged] + contrib if merged in terms else contrib
    return FormValue(chart, form.degree + 1, terms), scale


def differential_of_scalar(f: Jet, chart: Chart) -> FormValue:
    return exterior_derivative(FormValue.scalar(chart, f))


# ---------------------------------------------------------------------------
# almost complex structures and (p,q) machinery


class AlmostComplexStructure:
    """Endomorphism of the complexified cotangent space with square -identity.

    ``mat[w][v]`` is the dx_w component of J dx_v; entries may be jets.
    """

    def __init__(self, chart: Chart, mat):
        self.chart = chart
        self.mat = mat

    def apply(self, form: FormValue) -> FormValue:
        if form.degree != 1:
            raise DegreeError("almost complex structures act on 1-forms here")
        terms: dict = {}
        for (v,), c in form.terms.items():
            for w in range(self.chart.dim):
                entry = self.mat[w][v]
                if is_zero_scalar(entry):
                    continue
                add = entry * c
                terms[(w,)] = terms[(w,)] + add if (w,) in terms else add
        return FormValue(self.chart, 1, terms)

    def values(self) -> "AlmostComplexStructure":
        return AlmostComplexStructure(
            self.chart, [[svalue(e) for e in row] for row in self.mat]
        )

    def square_residual(self) -> float:
        n = self.chart.dim
        worst = 0.0
        for i in range(n):
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += svalue(self.mat[i][k]) * svalue(self.mat[k][j])
                target = -1.0 if i == j else 0.0
                worst = max(worst, abs(acc - target))
        return worst


def standard_acs(chart: Chart) -> AlmostComplexStructure:
    """The integrable structure making the chart's complex pairs holomorphic."""
    n = chart.dim
    mat = [[0.0 + 0.0j for _ in range(n)] for _ in range(n)]
    for j in range(chart.ncomplex):
        re, im = 2 * j, 2 * j + 1
        # J dz = i dz  <=>  J dx_re = -dx_im, J dx_im = dx_re
        mat[im][re] = -1.0 + 0.0j
        mat[re][im] = 1.0 + 0.0j
    return AlmostComplexStructure(chart, mat)


def acs_from_complex_action(chart: Chart, action) -> AlmostComplexStructure:
    """Build the real matrix from the action on [dz..., dzbar...].

    ``action[l][k]`` is the phi_l component of J phi_k.
    """
    n = chart.dim
    T = np.zeros((n, n), dtype=np.complex128)
    for k, form in enumerate(complex_basis(chart)):
        for (v,), c in form.terms.items():
            T[v, k] = c
    Tinv = np.linalg.inv(T)
    # M = T action Tinv, kept generic so jet entries survive
    mat = [[0.0 + 0.0j for _ in range(n)] for _ in range(n)]
    for w in range(n):
        for v in range(n):
            acc = 0.0 + 0.0j
            for l in range(n):
                if T[w, l] == 0:
                    continue
                for k in range(n):
                    a = action[l][k]
                    if is_zero_scalar(a) or Tinv[k, v] == 0:
                        continue
                    acc = acc + T[w, l] * (a * Tinv[k, v])
            mat[w][v] = acc
    return AlmostComplexStructure(chart, mat)


def acs_apply(J: AlmostComplexStructure, eta: FormValue) -> FormValue:
    return J.apply(eta)


class TypeContext:
    """Pointwise (p,q) machinery for one almost complex structure.

    Caches the projected basis 1-forms P dx_v, Q dx_v and, per degree, the
    expansion of each basis k-form into its pure-type parts.
    """

    def __init__(self, acs: AlmostComplexStructure):
        self.acs = acs
        self.chart = acs.chart
        n = self.chart.dim
        self.p_images = []
        self.q_images = []
        for v in range(n):
            column = [acs.mat[w][v] for w in range(n)]
            pterms = {}
            qterms = {}
            for w in range(n):
                base = 1.0 + 0.0j if w == v else 0.0 + 0.0j
                jc = column[w]
                pterms[(w,)] = (base - 1j * jc) * 0.5
                qterms[(w,)] = (base + 1j * jc) * 0.5
            self.p_images.append(FormValue(self.chart, 1, pterms))
            self.q_images.append(FormValue(self.chart, 1, qterms))
        self._tables: dict = {}

    def project1(self, form: FormValue, antiholomorphic: bool) -> FormValue:
        """(1,0) or (0,1) part of a 1-form."""
        images = self.q_images if antiholomorphic else self.p_images
        out = FormValue.zero(self.chart, 1)
        for (v,), c in form.terms.items():
            out = out + images[v].scale(c)
        return out

    def _table(self, k: int) -> dict:
        tab = self._tables.get(k)
        if tab is None:
            tab = {}
            for multi in combinations(range(self.chart.dim), k):
                parts = {(0, 0): FormValue.scalar(self.chart, 1.0 + 0.0j)}
                for v in multi:
                    grown: dict = {}
                    for (p, q), f in parts.items():
                        for dp, dq, img in ((1, 0, self.p_images[v]), (0, 1, self.q_images[v])):
                            key = (p + dp, q + dq)
                            w = f.wedge(img)
                            grown[key] = grown[key] + w if key in grown else w
                    parts = grown
                tab[multi] = parts
            self._tables[k] = tab
        return tab

    def decompose(self, form: FormValue) -> dict:
        """Partition into pure (p,q) parts; the parts sum back to the input."""
        k = form.degree
        if k == 0:
            return {(0, 0): form}
        tab = self._table(k)
        out: dict = {}
        for multi, c in form.terms.items():
            for key, f in tab[multi].items():
                add = f.scale(c)
                out[key] = out[key] + add if key in out else add
        return out

    def project(self, form: FormValue, p: int, q: int) -> FormValue:
        if form.degree == 0:
            return form if (p, q) == (0, 0) else FormValue.zero(self.chart, 0)
        tab = self._table(form.degree)
        out = FormValue.zero(self.chart, form.degree)
        for multi, c in form.terms.items():
            f = tab[multi].get((p, q))
            if f is not None:
                out = out + f.scale(c)
        return out

    def d_split(self, form: FormValue, ptype: tuple | None = None):
        """(del, dbar, off-type residual sup) of a form with jet coefficients.

        With ``ptype`` the input is taken as pure (p,q); otherwise each pure
        part is differentiated separately and the outputs are summed.
        """
        if ptype is not None:
            df = exterior_derivative(form)
            p, q = ptype
            parts = self.decompose(df)
            del_part = parts.get((p + 1, q), FormValue.zero(self.chart, form.degree + 1))
            dbar_part = parts.get((p, q + 1), FormValue.zero(self.chart, form.degree + 1))
            off = 0.0
            for key, f in parts.items():
                if key not in ((p + 1, q), (p, q + 1)):
                    off = max(off, f.sup())
            return del_part, dbar_part, off
        del_total = FormValue.zero(self.chart, form.degree + 1)
        dbar_total = FormValue.zero(self.chart, form.degree + 1)
        off = 0.0
        for (p, q), part in self.decompose(form).items():
            if not part.terms:
                continue
            dp, dq, o = self.d_split(part, ptype=(p, q))
            del_total = del_total + dp
            dbar_total = dbar_total + dq
            off = max(off, o)
        return del_total, dbar_total, off

    def del_scalar(self, f: Jet) -> FormValue:
        return self.project1(differential_of_scalar(f, self.chart), antiholomorphic=False)

    def dbar_scalar(self, f: Jet) -> FormValue:
        return self.project1(differential_of_scalar(f, self.chart), antiholomorphic=True)


def type_decompose(eta: FormValue, J: AlmostComplexStructure) -> dict:
    """Map (p,q) -> component, summing to eta."""
    return TypeContext(J).decompose(eta)


def dolbeault_split(form: FormValue, J: AlmostComplexStructure, ptype: tuple | None = None):
    """(del part, dbar part) of d; off-type residue vanishes when J is integrable."""
    del_part, dbar_part, _ = TypeContext(J).d_split(form, ptype=ptype)
    return del_part, dbar_part


def ddbar_scalar(f: Jet, chart: Chart, J: AlmostComplexStructure) -> FormValue:
    """i del dbar f; real-valued (1,1) for real f."""
    ctx = TypeContext(J)
    return i_ddbar(ctx, f)


def i_ddbar(ctx: TypeContext, f: Jet) -> FormValue:
    dbar_f = ctx.dbar_scalar(f)
    dd = exterior_derivative(dbar_f)
    return ctx.project(dd, 1, 1).scale(1j)


def dbar_del_scalar(ctx: TypeContext, f: Jet) -> FormValue:
    """dbar del f (= -del dbar f); kept separate to mirror curvature formulas."""
    del_f = ctx.del_scalar(f)
    dd = exterior_derivative(del_f)
    return ctx.project(dd, 1, 1)


# ---------------------------------------------------------------------------
# generic small linear algebra over scalars-or-jets


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = A[i][0] * B[0][j]
            for t in range(1, k):
                acc = acc + A[i][t] * B[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_vec(A, x):
    return [sum_scalars([A[i][j] * x[j] for j in range(len(x))]) for i in range(len(A))]


def sum_scalars(xs):
    acc = xs[0]
    for x in xs[1:]:
        acc = acc + x
    return acc


def mat_conj_transpose(A):
    n, m = len(A), len(A[0])
    return [[sconj(A[j][i]) for j in range(n)] for i in range(m)]


def mat_det(A):
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return A[0][0] * A[1][1] - A[0][1] * A[1][0]
    # cofactor expansion along the first row; matrices here are tiny
    det = None
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in A[1:]]
        term = A[0][j] * mat_det(minor)
        if j % 2:
            term = -term
        det = term if det is None else det + term
    return det


def mat_inv(A):
    """Gauss-Jordan with value-magnitude pivoting, generic over jets."""
    n = len(A)
    work = [list(row) for row in A]
    inv = [[1.0 + 0.0j if i == j else 0.0 + 0.0j for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: smag(work[r][col]))
        if smag(work[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular matrix")
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            inv[col], inv[pivot] = inv[pivot], inv[col]
        scale = work[col][col]
        for j in range(n):
            work[col][j] = work[col][j] / scale
            inv[col][j] = inv[col][j] / scale
        for r in range(n):
            if r == col:
                continue
            f = work[r][col]
            if is_zero_scalar(f):
                continue
            for j in range(n):
                work[r][j] = work[r][j] - f * work[col][j]
                inv[r][j] = inv[r][j] - f * inv[col][j]
    return inv


# ---------------------------------------------------------------------------
# Hermitian pairing induced by a positive (1,1)-form


def cotangent_dual_metric(omega: FormValue, J: AlmostComplexStructure):
    """Inverse of g(X, Y) = omega(X, J Y): the induced metric on 1-forms."""
    n = omega.chart.dim
    om = [[0.0 + 0.0j for _ in range(n)] for _ in range(n)]
    for (a, b), c in omega.terms.items():
        om[a][b] = c
        om[b][a] = -c
    g = [[0.0 + 0.0j for _ in range(n)] for _ in range(n)]
    for v in range(n):
        for w in range(n):
            acc = None
            for u in range(n):
                jm = J.mat[w][u]  # (J_vec)_{u w} = mat[w][u]
                if is_zero_scalar(jm) or is_zero_scalar(om[v][u]):
                    continue
                term = om[v][u] * jm
                acc = term if acc is None else acc + term
            g[v][w] = 0.0 + 0.0j if acc is None else acc
    return mat_inv(g)


def hermitian_pairing(dual, f1: FormValue, f2: FormValue):
    """<f1, f2> = g*(f1, conj f2); linear in the first slot."""
    acc = None
    for (v,), c1 in f1.terms.items():
        for (w,), c2 in f2.terms.items():
            term = c1 * sconj(c2) * dual[v][w]
            acc = term if acc is None else acc + term
    return 0.0 + 0.0j if acc is None else acc


def coframe_gram(omega: FormValue, J: AlmostComplexStructure, coframe):
    """Gram matrix <phi_i, phi_j> of a (1,0)-coframe under the metric of omega."""
    dual = cotangent_dual_metric(omega, J)
    return [[hermitian_pairing(dual, a, b) for b in coframe] for a in coframe]


# ---------------------------------------------------------------------------
# Chern curvature of a Hermitian Gram matrix in a holomorphic frame


def gram_curvature(H, ctx: TypeContext):
    """R = dbar(Hbar^-1 del Hbar) for a matrix of jet entries.

    Entries of the result are 2-forms; for an actual holomorphic-frame Gram
    they are pure (1,1).  Requires jets of order >= 2.
    """
    n = len(H)
    Hbar = [[sconj(e) for e in row] for row in H]
    Hbar_inv = mat_inv(Hbar)
    del_Hbar = [
        [ctx.project1(differential_of_scalar(e, ctx.chart), antiholomorphic=False) for e in row]
        for row in Hbar
    ]
    X = [
        [
            _form_linear_combo([del_Hbar[k][j] for k in range(n)], [Hbar_inv[i][k] for k in range(n)])
            for j in range(n)
        ]
        for i in range(n)
    ]
    R = []
    for i in range(n):
        row = []
        for j in range(n):
            _, dbar_x, _ = ctx.d_split(X[i][j], ptype=(1, 0))
            row.append(dbar_x)
        R.append(row)
    return R


def _form_linear_combo(forms, coeffs) -> FormValue:
    out = FormValue.zero(forms[0].chart, forms[0].degree)
    for f, c in zip(forms, coeffs):
        out = out + f.scale(c)
    return out


def matrix_trace_form(M) -> FormValue:
    out = M[0][0]
    for i in range(1, len(M)):
        out = out + M[i][i]
    return out


def matrix_wedge_trace(A, B) -> FormValue:
    """tr(A wedge B) for matrices of forms."""
    n = len(A)
    out = FormValue.zero(A[0][0].chart, A[0][0].degree + B[0][0].degree)
    for i in range(n):
        for j in range(n):
            out = out + A[i][j].wedge(B[j][i])
    return out


def relative_residual(diff_sup: float, scale: float) -> float:
    """Sup residual divided by the local magnitude of the largest entering term.

    Scales below 1 keep absolute semantics so near-zero identities are not
    inflated by noise.
    """
    return diff_sup / max(scale, 1.0)
