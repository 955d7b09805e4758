"""Height 1 and height 2 power operations at p = 2 (height 2) and any p (height 1).

The height-2 ring of operations has dual R[d]/(d^3 = ad + 2), R = Z_2[[a]],
worked at (Z/2^M)[a]/(a^N). Coaction entries are kept as unreduced
polynomials in d (DPoly) because the comparison map d' -> a - d^2 is applied
to those representatives; everything is compared after reduction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import RingSpec, TruncScalar, exact_divide, format_poly, valuation
from .koszul_core import (
    GeneratorBimodule, QuadraticDatum, _acc, _as_poly, _pmul, elements_span,
    gamma_cohomology_basis, gamma_datum, gamma_dual_expected, is_complement,
    quadratic_dual, rank_profile,
)
from .linalg import (
    FlatMatrix, cokernel_presentation, flatten, howell_form,
    in_span, kernel_basis, preimage, span_over_ring, unflatten_vector,
)


class NotDivisibleByD(ArithmeticError):
    def __init__(self, msg, obstruction=None):
        super().__init__(msg)
        self.obstruction = obstruction


class OracleMismatch(AssertionError):
    pass


def height2_spec(M=12, N=12, slack=4):
    return RingSpec(2, M, N, slack)


# --- R[d]/(d^3 = ad + 2) --------------------------------------------------------

class GammaScalar:
    """c0 + c1 d + c2 d^2 with d^3 = ad + 2."""

    __slots__ = ("spec", "c")

    def __init__(self, spec: RingSpec, comps=()):
        comps = list(comps) + [0] * (3 - len(comps))
        self.spec = spec
        self.c = tuple(_ts(spec, x) for x in comps[:3])

    @classmethod
    def d(cls, spec):
        return cls(spec, [0, 1])

    @classmethod
    def a(cls, spec):
        return cls(spec, [TruncScalar.gen(spec)])

    def _coerce(self, other):
        if isinstance(other, GammaScalar):
            return other if other.spec == self.spec else other.reduce_to(self.spec)
        if isinstance(other, (int, TruncScalar)):
            return GammaScalar(self.spec, [other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return GammaScalar(self.spec, [x + y for x, y in zip(self.c, other.c)])

    __radd__ = __add__

    def __neg__(self):
        return GammaScalar(self.spec, [-x for x in self.c])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prod = [TruncScalar.zero(self.spec)] * 5
        for i, x in enumerate(self.c):
            if x:
                for j, y in enumerate(other.c):
                    if y:
                        prod[i + j] = prod[i + j] + x * y
        return gamma_reduce(prod, self.spec)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = GammaScalar(self.spec, [1])
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def is_zero(self):
        return not any(self.c)

    def reduce_to(self, spec):
        return GammaScalar(spec, [x.reduce_to(spec) for x in self.c])

    def __repr__(self):
        return f"GammaScalar({self})"

    def __str__(self):
        return format_gamma(self)


def _ts(spec, x):
    if isinstance(x, TruncScalar):
        return x if x.spec == spec else x.reduce_to(spec)
    return TruncScalar(spec, [x])


def format_gamma(x: GammaScalar) -> str:
    parts = []
    for k, s in enumerate(x.c):
        if s.is_zero():
            continue
        mon = ["", "d", "d^2"][k]
        body = format_poly(s)
        if not mon:
            parts.append(body)
        elif body == "1":
            parts.append(mon)
        elif body == "-1":
            parts.append("-" + mon)
        elif " " in body:
            parts.append(f"({body}){mon}")
        else:
            parts.append(body + mon)
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def gamma_reduce(poly, spec: RingSpec) -> GammaScalar:
    """Normal form of sum poly[k] d^k, using d^k = a d^(k-2) + 2 d^(k-3)."""
    c = [_ts(spec, x) for x in poly]
    a = TruncScalar.gen(spec)
    for k in range(len(c) - 1, 2, -1):
        top = c[k]
        if top:
            c[k - 2] = c[k - 2] + top * a
            c[k - 3] = c[k - 3] + top * 2
    return GammaScalar(spec, c[:3])


def divide_by_d(x: GammaScalar, target: RingSpec | None = None) -> GammaScalar:
    """y with d y = x, via 1/d = (a - d^2)/(-2). Loses one bit of precision."""
    target = target or x.spec.with_(M=x.spec.M - 1)
    y = x * GammaScalar(x.spec, [TruncScalar.gen(x.spec), 0, -1])
    out = []
    for k, s in enumerate(y.c):
        try:
            out.append(exact_divide(s, -2, target))
        except ArithmeticError as err:
            raise NotDivisibleByD(f"d-component {k} of x(a-d^2) is odd", obstruction=(k, str(s))) from err
    return GammaScalar(target, out)


def t_map(spec) -> GammaScalar:
    """The target map on a: a^2 + 3d - ad^2."""
    a = TruncScalar.gen(spec)
    return GammaScalar(spec, [a * a, 3, -a])


def apply_t(r: TruncScalar, spec=None) -> GammaScalar:
    """r(t(a)) for a polynomial r; meaningful while deg r < N."""
    spec = spec or r.spec
    t = t_map(spec)
    out = GammaScalar(spec)
    for c in reversed(r.coeffs):
        out = out * t + int(c)
    return out


# --- unreduced polynomials in d ----------------------------------------------------

class DPoly:
    """sum coeffs[k] d^k with no reduction applied."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec, coeffs=()):
        c = [_ts(spec, x) for x in coeffs]
        while c and c[-1].is_zero():
            c.pop()
        self.spec = spec
        self.coeffs = tuple(c)

    @classmethod
    def monomial(cls, spec, k, coeff=1):
        return cls(spec, [0] * k + [coeff])

    def _coerce(self, other):
        if isinstance(other, DPoly):
            return other if other.spec == self.spec else other.reduce_to(self.spec)
        if isinstance(other, (int, TruncScalar)):
            return DPoly(self.spec, [other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        z = TruncScalar.zero(self.spec)
        return DPoly(self.spec, [(self.coeffs[i] if i < len(self.coeffs) else z)
                                 + (other.coeffs[i] if i < len(other.coeffs) else z) for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return DPoly(self.spec, [-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __mul__(self, other):
        other = self._coerce(other)
        if not self.coeffs or not other.coeffs:
            return DPoly(self.spec)
        out = [TruncScalar.zero(self.spec)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    if y:
                        out[i + j] = out[i + j] + x * y
        return DPoly(self.spec, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        return self.coeffs == other.coeffs

    def is_zero(self):
        return not self.coeffs

    def constant(self):
        return self.coeffs[0] if self.coeffs else TruncScalar.zero(self.spec)

    def reduce_to(self, spec):
        return DPoly(spec, [x.reduce_to(spec) for x in self.coeffs])

    def reduced(self) -> GammaScalar:
        return gamma_reduce(self.coeffs, self.spec)

    def conjugate(self, twisted=False) -> GammaScalar:
        """Image under d |-> a - d^2, optionally twisting coefficients through t."""
        spec = self.spec
        dp = GammaScalar(spec, [TruncScalar.gen(spec), 0, -1])
        out = GammaScalar(spec)
        for c in reversed(self.coeffs):
            coeff = apply_t(c) if twisted else GammaScalar(spec, [c])
            out = out * dp + coeff
        return out

    def __str__(self):
        parts = []
        for k, s in enumerate(self.coeffs):
            if s.is_zero():
                continue
            body = format_poly(s)
            mon = "" if k == 0 else ("d" if k == 1 else f"d^{k}")
            parts.append(body if not mon else (mon if body == "1" else f"({body}){mon}"))
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def divide_dpoly_by_d(h: DPoly, target: RingSpec) -> DPoly:
    """A representative of h/d. Uses 2/d = d^2 - a.

    When h has nonzero constant term and every coefficient is even, the whole
    of h/2 is multiplied by d^2 - a; otherwise only the constant is.
    """
    spec = h.spec
    dd = DPoly(spec, [-TruncScalar.gen(spec), 0, 1])
    if h.constant().is_zero():
        return DPoly(spec, h.coeffs[1:]).reduce_to(target)
    try:
        half = DPoly(target, [exact_divide(c, 2, target) for c in h.coeffs])
        return half * dd.reduce_to(target)
    except ArithmeticError:
        pass
    try:
        c0 = exact_divide(h.constant(), 2, target)
    except ArithmeticError as err:
        raise NotDivisibleByD("constant term is odd", obstruction=str(h.constant())) from err
    return DPoly(spec, h.coeffs[1:]).reduce_to(target) + dd.reduce_to(target) * c0


# --- truncated power series in u ----------------------------------------------------

@dataclass
class SymTruncPoly:
    """Power series in u with DPoly coefficients, truncated after u^K."""

    K: int
    coeffs: list

    def __mul__(self, other):
        spec = self.coeffs[0].spec
        out = [DPoly(spec) for _ in range(self.K + 1)]
        for i, x in enumerate(self.coeffs):
            if x.is_zero():
                continue
            for j, y in enumerate(other.coeffs[: self.K + 1 - i]):
                if not y.is_zero():
                    out[i + j] = out[i + j] + x * y
        return SymTruncPoly(self.K, out)

    def __pow__(self, m):
        spec = self.coeffs[0].spec
        out = SymTruncPoly(self.K, [DPoly(spec, [1])] + [DPoly(spec) for _ in range(self.K)])
        for _ in range(m):
            out = out * self
        return out

    def coefficient(self, j):
        return self.coeffs[j]


def total_power(K: int, spec: RingSpec | None = None) -> SymTruncPoly:
    """(u^2 - du)/(1 + d^2 u) through u^K, by geometric series in -d^2 u."""
    if K < 1:
        raise ValueError("K must be >= 1")
    spec = spec or height2_spec()
    geo = [DPoly.monomial(spec, 2 * k, (-1) ** k) for k in range(K + 1)]
    num = [DPoly(spec), DPoly.monomial(spec, 1, -1), DPoly(spec, [1])]
    out = []
    for j in range(K + 1):
        acc = DPoly(spec)
        for i in range(min(j, 2) + 1):
            acc = acc + num[i] * geo[j - i]
        out.append(acc)
    return SymTruncPoly(K, out)


def _int_total_power(K):
    """Exact integer version: u^j coefficient as {d power: int}."""
    out = []
    for j in range(K + 1):
        c = {}
        for i, num in ((1, {1: -1}), (2, {0: 1})):
            k = j - i
            if k >= 0:
                for e, v in num.items():
                    c[e + 2 * k] = c.get(e + 2 * k, 0) + v * (-1) ** k
        out.append({e: v for e, v in c.items() if v})
    return out


def _ipoly_mul(x, y):
    out = {}
    for i, a in x.items():
        for j, b in y.items():
            out[i + j] = out.get(i + j, 0) + a * b
    return {k: v for k, v in out.items() if v}


# --- coactions ------------------------------------------------------------------------

@dataclass
class CoactionMatrix:
    """P(g) = sum_h h * entries[g][h](d) on a finite free module."""

    spec: RingSpec
    generators: list
    entries: dict

    def entry(self, g, h) -> DPoly:
        return self.entries.get(g, {}).get(h, DPoly(self.spec))

    def transpose(self) -> "CoactionMatrix":
        out = {g: {} for g in self.generators}
        for g, row in self.entries.items():
            for h, poly in row.items():
                out[h][g] = poly
        return CoactionMatrix(self.spec, list(self.generators), out)

    def reduce_to(self, spec):
        return CoactionMatrix(spec, list(self.generators),
                              {g: {h: p.reduce_to(spec) for h, p in row.items()} for g, row in self.entries.items()})

    def reduced(self):
        return {g: {h: p.reduced() for h, p in row.items() if not p.reduced().is_zero()}
                for g, row in self.entries.items()}

    def same_as(self, other) -> bool:
        spec = self.spec if self.spec.M <= other.spec.M else other.spec
        x, y = self.reduce_to(spec).reduced(), other.reduce_to(spec).reduced()
        return x == y

    def coact(self, element):
        """P on a combination {g: r(a)}: t-semilinear, P(r m) = P(m) t(r)."""
        out = {h: GammaScalar(self.spec) for h in self.generators}
        for g, r in element.items():
            tr = apply_t(_ts(self.spec, r))
            for h, poly in self.entries.get(g, {}).items():
                out[h] = out[h] + poly.reduced() * tr
        return out

    def is_t_linear(self, samples=None) -> bool:
        a = TruncScalar.gen(self.spec)
        samples = samples or [a, a * a + 3, a * 5 - 1]
        ta = t_map(self.spec)
        for g in self.generators:
            for r in samples:
                lhs = self.coact({g: a * r})
                rhs = self.coact({g: r})
                if any(lhs[h] != rhs[h] * ta for h in self.generators):
                    return False
        return True

    def to_json(self):
        return {str(g): {str(h): str(p.reduced()) for h, p in sorted(row.items())}
                for g, row in sorted(self.entries.items())}


def _chern_label(j):
    return f"c{j}"


def chern_coaction(n: int, spec: RingSpec | None = None, K: int | None = None) -> CoactionMatrix:
    """P' on the indecomposables c_2..c_n of E^0 BU, computed two ways.

    Newton: P'(c_m) = ((-1)^m / m) sum_j (-1)^j j alpha_j c_j with
    P(u)^m = sum_j alpha_j u^j. Oracle: expand prod_i P(u_i) in m variables
    and project onto the power sum p_j. Result lives at precision M + 1.
    """
    spec = spec or height2_spec()
    K = K or n
    if K < n:
        raise ValueError("K must be >= n")
    work = spec.lifted()
    out_spec = spec.with_(M=spec.M + 1)
    P = total_power(K, work)
    ip = _int_total_power(K)
    entries = {}
    for m in range(2, n + 1):
        alpha = P ** m
        row = {}
        oracle = _oracle_row(m, n, ip)
        for j in range(m, n + 1):
            h = alpha.coefficient(j)
            sign = (-1) ** (m + j)
            scaled = [c * (sign * j) for c in h.coeffs]
            poly = DPoly(out_spec, [exact_divide(c, m, out_spec) for c in scaled])
            want = DPoly(out_spec, [oracle.get(j, {}).get(e, 0) for e in range(len(scaled) + 1)])
            if poly != want:
                raise OracleMismatch(f"P'(c{m}) coefficient of c{j}: Newton {poly} vs oracle {want}")
            if not poly.is_zero():
                row[_chern_label(j)] = poly
        entries[_chern_label(m)] = row
    return CoactionMatrix(out_spec, [_chern_label(j) for j in range(2, n + 1)], entries)


def _oracle_row(m, n, ip):
    """{j: {d power: int}} linear part of c_m(P(u_1),...,P(u_m)) in c_j."""
    # expand prod_{i<m} P(u_i) keeping total degree <= n
    terms = {(): {0: 1}}
    for _ in range(m):
        nxt = {}
        for exps, c in terms.items():
            used = sum(exps)
            for k in range(1, n - used + 1):
                if ip[k]:
                    key = exps + (k,)
                    prod = _ipoly_mul(c, ip[k])
                    cur = nxt.setdefault(key, {})
                    for e, v in prod.items():
                        cur[e] = cur.get(e, 0) + v
        terms = nxt
    out = {}
    for exps, c in terms.items():
        if list(exps) != sorted(exps, reverse=True):
            continue
        # coefficient of p_j in the monomial symmetric function m_lambda
        mult = 1
        for k in set(exps):
            mult *= math.factorial(exps.count(k))
        weight = Fraction((-1) ** (m - 1) * math.factorial(m - 1), mult)
        j = sum(exps)
        # c_j = e_j has p_j-coefficient (-1)^(j-1)/j
        scale = weight * j * (-1) ** (j - 1)
        row = out.setdefault(j, {})
        for e, v in c.items():
            row[e] = row.get(e, 0) + scale * v
    res = {}
    for j, row in out.items():
        clean = {}
        for e, v in row.items():
            if v.denominator != 1:
                raise OracleMismatch(f"non-integral coefficient {v} for c{j}")
            if v:
                clean[e] = int(v)
        res[j] = clean
    return res


def d_divisible(P: CoactionMatrix) -> bool:
    """Every entry is divisible by d, i.e. has even constant term after reduction."""
    for row in P.entries.values():
        for poly in row.values():
            c0 = poly.reduced().c[0]
            if any(x % 2 for x in c0.coeffs):
                return False
    return True


def omega_twist(P: CoactionMatrix, direction=-0.5) -> CoactionMatrix:
    """Multiply (+1/2) or divide (-1/2) every entry by -d."""
    spec = P.spec
    if direction in (0.5, "+1/2", 1):
        md = DPoly.monomial(spec, 1, -1)
        return CoactionMatrix(spec, list(P.generators),
                              {g: {h: p * md for h, p in row.items()} for g, row in P.entries.items()})
    if direction not in (-0.5, "-1/2", -1):
        raise ValueError(f"direction must be +1/2 or -1/2, got {direction}")
    target = spec.with_(M=spec.M - 1)
    out = {}
    for g, row in P.entries.items():
        new = {}
        for h, p in row.items():
            try:
                q = -divide_dpoly_by_d(p, target)
            except NotDivisibleByD as err:
                raise NotDivisibleByD(f"entry ({g}, {h}) = {p} is not divisible by d",
                                      obstruction=err.obstruction) from err
            if not q.is_zero():
                new[h] = q
        out[g] = new
    return CoactionMatrix(target, list(P.generators), out)


def omega_coaction(spec=None) -> CoactionMatrix:
    spec = spec or height2_spec()
    return CoactionMatrix(spec, ["u"], {"u": {"u": DPoly.monomial(spec, 1, -1)}})


def omega_action(spec=None):
    """Read Q_0, Q_1, Q_2 on u off the coaction: Q_i u pairs u with the d^i coefficient."""
    P = omega_coaction(spec)
    comps = P.entry("u", "u").reduced().c
    return {f"Q_{i}": {"u": int(c.signed_coeffs()[0])} if not c.is_zero() else {} for i, c in enumerate(comps)}


@dataclass
class AxiomReport:
    passes: bool
    psi: dict
    residual: dict

    def to_json(self):
        return {"passes": self.passes,
                "psi": {g: {h: format_poly(c) for h, c in row.items()} for g, row in self.psi.items()},
                "residual": {g: {h: str(x) for h, x in row.items()} for g, row in self.residual.items()}}


def module_axiom_check(P: CoactionMatrix, convention="untwisted") -> AxiomReport:
    """Apply P, re-coact with d', send d' to a - d^2 and require no d, d^2 parts."""
    twisted = convention == "twisted"
    spec = P.spec
    psi, residual = {}, {}
    ok = True
    for m in P.generators:
        total = {l: GammaScalar(spec) for l in P.generators}
        for j, outer in P.entries.get(m, {}).items():
            outer_r = outer.reduced()
            for l, inner in P.entries.get(j, {}).items():
                total[l] = total[l] + inner.conjugate(twisted) * outer_r
        psi[m] = {l: x.c[0] for l, x in total.items() if not x.c[0].is_zero()}
        bad = {l: x for l, x in total.items() if not (x.c[1].is_zero() and x.c[2].is_zero())}
        if bad:
            ok = False
            residual[m] = bad
    return AxiomReport(ok, psi if ok else {}, residual)


def _dpoly_from_ints(spec, coeffs):
    return DPoly(spec, coeffs)


# --- SU(n) pipeline -----------------------------------------------------------------

@dataclass
class TaqReport:
    n: int
    spec: RingSpec
    convention: str
    coaction: CoactionMatrix
    axiom: AxiomReport
    k1: list
    k2: list
    delta0: list
    delta1: list
    ext2: object
    ext2_howell: object
    ext1: dict
    delta_squared_zero: bool
    stable: bool = True
    paper_match: bool | None = None
    extras: dict = field(default_factory=dict)

    def delta_table(self):
        """{(c, k): {c_j: GammaScalar with d, d^2 parts}} for the second map."""
        out = {}
        spec = self.spec
        for (g, k), row in zip(self.k1, self.delta1):
            img = {}
            for idx, (h, e) in enumerate(self.k2):
                s = row[idx]
                if not s.is_zero():
                    img.setdefault(h, [TruncScalar.zero(spec)] * 3)[e] = s
            out[(g, k)] = {h: GammaScalar(spec, v) for h, v in img.items()}
        return out

    def to_json(self):
        def mat(rows):
            return [[format_poly(s) for s in r] for r in rows]
        table = {f"{g}d^{k}" if k else g: {h: str(x) for h, x in sorted(v.items())}
                 for (g, k), v in self.delta_table().items()}
        return {
            "n": self.n,
            "ring": self.spec.to_json(),
            "convention": self.convention,
            "dual_coaction": self.coaction.to_json(),
            "module_axiom": self.axiom.to_json(),
            "k1_basis": [f"{g}d^{k}" for g, k in self.k1],
            "k2_basis": [f"{g}d^{k}" for g, k in self.k2],
            "delta0": mat(self.delta0),
            "delta1": mat(self.delta1),
            "delta_table": table,
            "ext2": {
                "generators": [f"{g}d^{k}" for g, k in self.k2],
                "relations": mat(self.ext2.relations),
                "howell": [list(map(str, r)) for r in self.ext2_howell.rows],
                "invariants": self.ext2.invariants(),
                "length": self.ext2.length(),
            },
            "ext1": self.ext1,
            "delta_squared_zero": self.delta_squared_zero,
            "stable": self.stable,
            "paper_match": self.paper_match,
            **self.extras,
        }


def su_dual_coaction(n, spec) -> CoactionMatrix:
    """P-dual on M^v for M = omega^(-1/2) (x) QE^0 BSU(n), starting at precision M + 1."""
    P1 = chern_coaction(n, spec.with_(M=spec.M), K=n)
    return omega_twist(P1, -0.5).transpose()


def _delta_matrices(Pv: CoactionMatrix, convention):
    spec = Pv.spec
    gens = Pv.generators
    twisted = convention == "twisted"
    k1 = [(g, k) for g in gens for k in range(3)]
    k2 = [(g, k) for g in gens for k in (1, 2)]
    zero = TruncScalar.zero(spec)
    d0 = []
    for c in gens:
        row = [zero] * len(k1)
        for j, h in Pv.entries.get(c, {}).items():
            r = h.reduced()
            for k in range(3):
                row[k1.index((j, k))] = row[k1.index((j, k))] + r.c[k]
        d0.append(row)
    d1 = []
    for c, k in k1:
        row = [zero] * len(k2)
        dk = GammaScalar.d(spec) ** k
        for j, h in Pv.entries.get(c, {}).items():
            img = h.conjugate(twisted) * dk
            for e in (1, 2):
                row[k2.index((j, e))] = row[k2.index((j, e))] + img.c[e]
        d1.append(row)
    return k1, k2, d0, d1


def _retruncate_span(rows, ncols, hi: RingSpec, lo: RingSpec):
    """Howell span at lo precision of the (hi-precision) span of rows, reduced."""
    H = span_over_ring(rows, hi, ncols)
    small = [[s.reduce_to(lo) for s in unflatten_vector(r, hi)] for r in H.rows]
    small = [r for r in small if any(not s.is_zero() for s in r)]
    if not small:
        return howell_form([], ncols * lo.N, lo.p, lo.M)
    return span_over_ring(small, lo, ncols)


def _lifted_kernel(d1_hi, hi, lo):
    """Kernel elements at lo precision that lift to the kernel at hi precision."""
    K = kernel_basis(flatten(d1_hi, hi))
    nrows = len(d1_hi)
    small = [[s.reduce_to(lo) for s in unflatten_vector(r, hi)] for r in K.rows]
    small = [r for r in small if any(not s.is_zero() for s in r)]
    if not small:
        return howell_form([], nrows * lo.N, lo.p, lo.M)
    return span_over_ring(small, lo, nrows)


def _ext1(d0, d1, spec, d1_hi, hi):
    """ker(delta1) / im(delta0) at (M, N).

    Kernel elements that do not lift to the kernel at higher precision (such as
    2^(M-1) times a vector mapping to 2) are truncation artifacts; they are
    counted separately and excluded.
    """
    K = kernel_basis(flatten(d1, spec))
    L = _lifted_kernel(d1_hi, hi, spec)
    I = span_over_ring(d0, spec, len(d1))
    joined = howell_form(list(L.rows) + list(I.rows), L.cols, spec.p, spec.M)
    inter = L.length() + I.length() - joined.length()
    return {
        "kernel_length": K.length(),
        "lifted_kernel_length": L.length(),
        "artifact_length": K.length() - L.length(),
        "image_length": I.length(),
        "image_in_kernel": all(in_span(r, K) for r in I.rows),
        "length": L.length() - inter,
    }


def _reference_su4_relations(spec):
    one = TruncScalar.one(spec)
    z = TruncScalar.zero(spec)
    a = TruncScalar.gen(spec)

    def vec(**kw):
        v = [z] * 4
        for k, s in kw.items():
            v["wxyz".index(k)] = s
        return v
    return [vec(x=one * 4), vec(w=one * 2, x=-a), vec(z=one * 4),
            vec(y=a * 2, z=-a * a), vec(y=one * 4, x=-a * 2, z=-a * 2)]


REFERENCE_SU4_DELTA = {
    # (generator, d power) -> {c_j: (d coefficient, d^2 coefficient)} as integer lists in a
    ("c2", 0): {"c2": ([], [1])},
    ("c2", 1): {},
    ("c2", 2): {"c2": ([2], [])},
    ("c3", 0): {"c3": ([2], [0, -1]), "c2": ([0, -6], [0, 0, 3])},
    ("c3", 1): {"c3": ([], [2]), "c2": ([9], [0, -6])},
    ("c3", 2): {"c2": ([], [9])},
    ("c4", 0): {"c4": ([0, -2], [0, 0, 1]), "c3": ([0, 0, 8], [12, 0, 0, -4]),
                "c2": ([-66, 0, -40, 88, 0, 6, -6], [0, 113, 0, 32, -56, 0, -3, 3])},
    ("c4", 1): {"c4": ([4], [0, -2]), "c3": ([0, -16], [0, 0, 8]),
                "c2": ([0, 33, -128, 0, -12, 12], [-66, 0, -40, 88, 0, 6, -6])},
    ("c4", 2): {"c4": ([], [4]), "c3": ([24], [0, -16]),
                "c2": ([0, 160, 0, 24, -24], [0, 33, -128, 0, -12, 12])},
}


def reference_su4_delta(spec):
    return {key: {h: GammaScalar(spec, [0, TruncScalar(spec, x), TruncScalar(spec, y)]) for h, (x, y) in v.items()}
            for key, v in REFERENCE_SU4_DELTA.items()}


def su4_reference_comparison(report: TaqReport):
    """Nine delta values and the Ext^2 presentation on w = c3 d, x = c3 d^2, y = c4 d, z = c4 d^2."""
    spec = report.spec
    table = report.delta_table()
    want = reference_su4_delta(spec)
    delta_ok = {f"{g}d^{k}": table[(g, k)] == want[(g, k)] for (g, k) in want}
    S = report.ext2_howell
    gens = report.k2
    one, z = TruncScalar.one(spec), TruncScalar.zero(spec)
    inc_keys = [("c3", 1), ("c3", 2), ("c4", 1), ("c4", 2)]
    inc = [[one if g == key else z for g in gens] for key in inc_keys]
    flat_inc = flatten(inc, spec).row_list()
    pulled = preimage(flat_inc, S, spec.p, spec.M)
    reference = span_over_ring(_reference_su4_relations(spec), spec, 4)
    onto = howell_form(list(S.rows) + flat_inc, S.cols, spec.p, spec.M).is_full()
    return {"delta": delta_ok, "ext2_equal": pulled == reference and onto,
            "relations_equal": pulled == reference, "onto": onto}


def ext1_lift_depth(n):
    """Extra precision needed before the truncation artifacts of Ext^1 stop lifting."""
    return max(4, 2 * n - 2)


def taq_su(n: int, spec: RingSpec | None = None, convention="untwisted", stability=True) -> TaqReport:
    """Koszul complex for TAQ of SU(n): K^0 = M^v, K^1 = M^v (x) R[d], K^2 = M^v (x) R[d]/R.

    The module axiom and Ext^1 use the twisted reading, where the comparison map
    is a ring map and delta o delta = 0; `convention` selects the differential
    used for the reported matrices and Ext^2.
    """
    if not 2 <= n <= 8:
        raise ValueError("n must be between 2 and 8")
    if convention not in ("untwisted", "twisted"):
        raise ValueError(f"unknown convention {convention}")
    spec = spec or height2_spec()
    hi = spec.with_(M=spec.M + 2, N=spec.N + 2)
    Pv = su_dual_coaction(n, spec)
    axiom = module_axiom_check(Pv, "twisted")
    k1, k2, d0, d1 = _delta_matrices(Pv, convention)
    ext2 = cokernel_presentation(d1, [f"{g}d^{k}" for g, k in k2], spec)
    H = ext2.canonical()
    comp = _mat_prod(d0, d1, spec)
    dsq = all(s.is_zero() for r in comp for s in r)
    ext1 = _ext1_twisted(n, spec)
    rep = TaqReport(n, spec, convention, Pv, axiom, k1, k2, d0, d1, ext2, H, ext1, dsq)
    if stability:
        _, _, _, d1h = _delta_matrices(su_dual_coaction(n, hi), convention)
        ext2_re = _retruncate_span(d1h, len(k2), hi, spec)
        ext1_ok = _ext1_twisted(n, hi)["length"] == ext1["length"]
        rep.stable = ext2_re == H and ext1_ok
        rep.extras["stability"] = {"ring": hi.to_json(), "ext2_agrees": ext2_re == H, "ext1_agrees": ext1_ok}
    if n == 4:
        cmp = su4_reference_comparison(rep)
        rep.extras["reference_comparison"] = cmp
        rep.paper_match = all(cmp["delta"].values()) and cmp["ext2_equal"]
    return rep


def _ext1_twisted(n, spec):
    _, _, d0, d1 = _delta_matrices(su_dual_coaction(n, spec), "twisted")
    L = ext1_lift_depth(n)
    hi = spec.with_(M=spec.M + L, N=spec.N + L)
    _, _, _, d1h = _delta_matrices(su_dual_coaction(n, hi), "twisted")
    out = _ext1(d0, d1, spec, d1h, hi)
    out["convention"] = "twisted"
    out["lift_depth"] = L
    out["vanishes"] = out["length"] == 0
    return out


def _mat_prod(A, B, spec):
    zero = TruncScalar.zero(spec)
    out = []
    for r in A:
        row = []
        for j in range(len(B[0])):
            acc = zero
            for k, x in enumerate(r):
                if x and B[k][j]:
                    acc = acc + x * B[k][j]
            row.append(acc)
        out.append(row)
    return out


# --- H*(Gamma) ----------------------------------------------------------------------

def gamma_cohomology(M=10, N=10):
    """Ranks, basis and products of the quadratic dual of the height-2 datum."""
    q = gamma_datum(M, N)
    dual = quadratic_dual(q)
    ranks = rank_profile(dual, 3)
    basis = gamma_cohomology_basis()
    basis_ok = all(is_complement(dual, n, words) for n, words in basis.items() if n >= 1)
    perp_ok = elements_span(dual, gamma_dual_expected()) == dual.relation_span(2)
    qq = dual._flat_rows(2, {(0, 0): (1,)})[0]
    q0q0_zero = in_span(qq, dual.relation_span(2))
    table = {}
    b2 = [tuple(dual.H.index(g) for g in w) for w in basis[2]]
    for x in range(3):
        for y in range(3):
            word = (y, x)  # mirrored
            table[f"Q^{x}Q^{y}"] = _express(dual, word, b2)
    return {
        "ranks": ranks,
        "total_rank": sum(ranks),
        "basis": {n: ["".join(w[::-1]) or "1" for w in words] for n, words in basis.items()},
        "basis_ok": basis_ok,
        "perp_matches": perp_ok,
        "q0q0_zero": q0q0_zero,
        "h3_rank": ranks[3],
        "products": table,
    }


def _express(q: QuadraticDatum, word, basis):
    """Left coefficients of word in the basis modulo the relation span."""
    spec = q.spec
    S = q.relation_span(2)
    N = spec.N
    wrow = q._flat_rows(2, {word: (1,)})[0]
    brows = []
    for b in basis:
        brows.extend(q._flat_rows(2, {b: (1,)}))
    K = kernel_basis(FlatMatrix.from_rows([wrow] + brows + [list(r) for r in S.rows], S.cols, spec.p, spec.M))
    for r in K.rows:
        if r[0] % spec.modulus == 1:
            coeffs = [-x for x in r[1:1 + len(brows)]]
            out = {}
            for i, b in enumerate(basis):
                s = TruncScalar(spec, coeffs[i * N:(i + 1) * N])
                if not s.is_zero():
                    out["".join(q.H.labels[g] for g in b[::-1])] = format_poly(s)
            return out
    raise ArithmeticError("word is not expressible in the basis")


# --- height 1 ---------------------------------------------------------------------

def theta_scalar(module, p):
    if module == "t":
        return 0
    if module == "s":
        return 1
    return int(module)


def height1_ext(module, n: int, p: int, M: int = 12):
    """Ext over Z_p[theta] from the rank-1 complex Z_p -> Z_p, theta_N - theta_M.

    theta acts on omega^n by p^(n-1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mod = p ** M
    diff = (p ** (n - 1) - theta_scalar(module, p)) % mod
    v = M if diff == 0 else min(valuation(diff, p), M)
    res = {"p": p, "M": M, "module": str(module), "omega": n, "differential": diff,
           "ext0_log_order": v, "ext1_log_order": v,
           "ext0_order": p ** v, "ext1_order": p ** v, "full": v == M}
    return res


def height1_ext_stable(module, n, p, M=12):
    lo, hi = height1_ext(module, n, p, M), height1_ext(module, n, p, M + 2)
    if lo["full"] or hi["full"]:
        return lo["full"] == hi["full"]
    return lo["ext1_log_order"] == hi["ext1_log_order"]


# --- orientations ---------------------------------------------------------------

def _y_reduction(p):
    """Coefficients r_k with y^p = sum_{k<p} r_k y^k from 1 - (1-y)^p = 0."""
    # (1-y)^p = 1 gives sum_{k>=1} C(p,k) (-y)^k = 0
    lead = (-1) ** p
    return [0] + [-(math.comb(p, k) * (-1) ** k) * lead for k in range(1, p)]


def orientation_matrix(p, M, K):
    spec = RingSpec(p, M, K, 0)
    x = TruncScalar.gen(spec)
    one = TruncScalar.one(spec)
    zero = TruncScalar.zero(spec)
    red = _y_reduction(p)
    cols = []
    for i in range(p):
        # (x + y - xy) y^i
        v = [zero] * (p + 1)
        v[i] = v[i] + x
        v[i + 1] = v[i + 1] + (one - x)
        if v[p]:
            top = v[p]
            v[p] = zero
            for k in range(p):
                v[k] = v[k] + top * red[k]
        cols.append(v[:p])
    # column i holds the image of y^i
    return [[cols[j][i] for j in range(p)] for i in range(p)]


def _det(mat, spec):
    n = len(mat)
    total = TruncScalar.zero(spec)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = TruncScalar.one(spec)
        for i in range(n):
            term = term * mat[i][perm[i]]
            if term.is_zero():
                break
        total = total - term if inv % 2 else total + term
    return total


def orientation_det(p: int, M: int = 12, K: int = 12):
    if K < p:
        raise ValueError("K must be >= p")
    spec = RingSpec(p, M, K, 0)
    mat = orientation_matrix(p, M, K)
    det = _det(mat, spec)
    x = TruncScalar.gen(spec)
    target = TruncScalar.one(spec) - (TruncScalar.one(spec) - x) ** p
    return {"p": p, "M": M, "K": K,
            "matrix": [[format_poly(s, "x") for s in r] for r in mat],
            "determinant": format_poly(det, "x"),
            "target": format_poly(target, "x"),
            "matches_target": det == target}


# --- structure maps ------------------------------------------------------------------

def delta_datum(M=10, N=10):
    """Delta = operations on the cotangent: theta, Q_1, Q_2 with Q_0 = 2 theta."""
    spec = RingSpec(2, M, N, 4)
    H = GeneratorBimodule(spec, ["theta", "Q_1", "Q_2"], {
        "theta": {"theta": [0, 0, 1], "Q_1": [0, -1], "Q_2": [3]},
        "Q_1": {"theta": [6], "Q_2": [0, 1]},
        "Q_2": {"theta": [0, -2], "Q_1": [3]},
    })
    rels = [
        {("Q_1", "theta"): 1, ("Q_2", "Q_1"): -1, ("theta", "Q_2"): 2},
        {("Q_2", "theta"): 1, ("theta", "Q_1"): -1, ("theta", "Q_2"): [0, -1], ("Q_1", "Q_2"): 1},
    ]
    return QuadraticDatum(H, rels, name="Delta")


STRUCTURE_MAPS = {
    "suspension": ("Delta", "Gamma", {
        "theta": {"Q_2": [-1]},
        "Q_1": {"Q_0": [-1], "Q_2": [0, -1]},
        "Q_2": {"Q_1": [-1]},
    }),
    "quotient": ("Gamma", "Delta", {
        "Q_0": {"theta": [2]},
        "Q_1": {"Q_1": [1]},
        "Q_2": {"Q_2": [1]},
    }),
    "perturbed": ("Delta", "Gamma", {
        "theta": {"Q_2": [-1]},
        "Q_1": {"Q_0": [-1], "Q_2": [0, -1]},
        "Q_2": {"Q_1": [1]},
    }),
}


def _datum(name, M, N):
    return gamma_datum(M, N) if name == "Gamma" else delta_datum(M, N)


def structure_map_check(name_or_map, source=None, target=None, M=10, N=10):
    """Check a map on generators respects right actions and sends relations into R."""
    if isinstance(name_or_map, str):
        source, target, phi = STRUCTURE_MAPS[name_or_map]
    else:
        phi = name_or_map
    src, tgt = _datum(source, M, N), _datum(target, M, N)
    mod = tgt.spec.modulus
    Hs, Ht = src.H, tgt.H

    def image(g):
        return {Ht.index(h): _as_poly(c, mod) for h, c in phi.get(Hs.labels[g], {}).items()}

    witness = None
    intertwined = True
    for g in range(Hs.rank):
        lhs = {}
        for h, c in enumerate(Hs.matrix[g]):
            if c:
                for k, ck in image(h).items():
                    _acc(lhs, k, _pmul(c, ck, mod), mod)
        rhs = {}
        for k, ck in image(g).items():
            for l, cl in enumerate(Ht.matrix[k]):
                if cl:
                    _acc(rhs, l, _pmul(ck, cl, mod), mod)
        if {k: v[:tgt.spec.N] for k, v in lhs.items()} != {k: v[:tgt.spec.N] for k, v in rhs.items()}:
            intertwined = False
            witness = witness or {"kind": "right action", "generator": Hs.labels[g]}
    S = tgt.relation_span(2)
    rel_ok = True
    for idx, r in enumerate(src.relations):
        out = {}
        for (x, y), c in r.items():
            for k, ck in image(x).items():
                for l, cl in image(y).items():
                    for w, c2 in Ht.push((k,), cl).items():
                        _acc(out, w + (l,), _pmul(_pmul(c, ck, mod), c2, mod), mod)
        rows = tgt._flat_rows(2, out) if out else []
        if not all(in_span(row, S) for row in rows):
            rel_ok = False
            if witness is None or witness.get("kind") != "relation":
                witness = {"kind": "relation", "index": idx,
                           "relation": _fmt_element(r, Hs.labels, tgt.spec),
                           "image": _fmt_element(out, Ht.labels, tgt.spec)}
    return {"source": source, "target": target, "right_action_ok": intertwined,
            "relations_ok": rel_ok, "passes": intertwined and rel_ok, "witness": witness}


def _fmt_element(e, labels, spec):
    parts = []
    for w, c in sorted(e.items()):
        s = format_poly(TruncScalar(spec.with_(N=max(len(c), 1)), c))
        parts.append(f"({s}){' '.join(labels[g] for g in w)}")
    return " + ".join(parts) or "0"


# --- cobialgebroid structure ------------------------------------------------------

COPRODUCT = {
    "Q_0": [((0, 0), [1]), ((1, 2), [2]), ((2, 1), [2])],
    "Q_1": [((0, 1), [1]), ((1, 0), [1]), ((1, 2), [0, 1]), ((2, 1), [0, 1]), ((2, 2), [2])],
    "Q_2": [((0, 2), [1]), ((2, 0), [1]), ((1, 1), [1]), ((2, 2), [0, 1])],
}
COUNIT = {"Q_0": 1, "Q_1": 0, "Q_2": 0}


@dataclass
class CobialgebroidData:
    spec: RingSpec
    datum: QuadraticDatum
    coproduct: dict
    counit: dict

    def t(self):
        return t_map(self.spec)

    @staticmethod
    def f_d(spec):
        return GammaScalar.d(spec)

    @staticmethod
    def f_dprime(spec):
        return GammaScalar(spec, [TruncScalar.gen(spec), 0, -1])


def gamma_cobialgebroid(M=10, N=10):
    q = gamma_datum(M, N)
    return CobialgebroidData(q.spec, q, COPRODUCT, COUNIT)


def dualize_generators(data=None):
    """Left action of a on the dual basis Q^i: a Q^i = sum_j Q^j C_ji(a)."""
    q = data.datum if isinstance(data, CobialgebroidData) else (data or gamma_datum())
    dual = q.H.transpose(["Q^0", "Q^1", "Q^2"])
    rules = {}
    for i, lab in enumerate(dual.labels):
        rules[lab] = {dual.labels[j]: dual.matrix[i][j] for j in range(3) if dual.matrix[i][j]}
    return rules, dual


def format_dual_rules(rules, spec):
    """Rules as text, e.g. 'a Q^0 = Q^0 a^2 + 3 Q^1 - Q^2 a'."""
    out = []
    for lab, row in rules.items():
        terms = []
        for h, poly in row.items():
            s = TruncScalar(spec.with_(N=len(poly)), poly)
            nz = [(k, c) for k, c in enumerate(s.signed_coeffs()) if c]
            if len(nz) == 1:
                k, c = nz[0]
                num = "" if abs(c) == 1 else f"{abs(c)} "
                apart = "" if k == 0 else (" a" if k == 1 else f" a^{k}")
                terms.append(("-" if c < 0 else "+", f"{num}{h}{apart}"))
            else:
                terms.append(("+", f"{h} ({format_poly(s)})"))
        rhs = ("-" if terms[0][0] == "-" else "") + terms[0][1]
        for sign, body in terms[1:]:
            rhs += f" {sign} {body}"
        out.append(f"a {lab} = {rhs}")
    return out


def counit_check(data=None):
    data = data or gamma_cobialgebroid()
    ok = True
    for g, terms in data.coproduct.items():
        left, right = {}, {}
        for (x, y), c in terms:
            ex, ey = data.counit[f"Q_{x}"], data.counit[f"Q_{y}"]
            if ex:
                left[y] = left.get(y, 0) + ex * c[0] if len(c) == 1 else None
            if ey:
                right[x] = right.get(x, 0) + ey * c[0] if len(c) == 1 else None
        want = {int(g[-1]): 1}
        ok &= {k: v for k, v in left.items() if v} == want and {k: v for k, v in right.items() if v} == want
    return ok


def coproduct_compatibility(M=6, N=6):
    """Delta(r) lies in R (x) H^2 + H^2 (x) R for each relation r."""
    q = gamma_datum(M, N)
    H = q.H
    spec = q.spec
    mod = spec.modulus
    words2 = H.words(2)
    nw = len(words2)
    ncols = nw * nw * N

    def col(w1, w2):
        return (H.word_index(w1) * nw + H.word_index(w2)) * N

    def rows_of(elem):
        out = []
        for k in range(N):
            row = [0] * ncols
            hit = False
            for (w1, w2), c in elem.items():
                for j, cj in enumerate(c):
                    if j + k < N and cj:
                        row[col(w1, w2) + j + k] = (row[col(w1, w2) + j + k] + cj) % mod
                        hit = True
            if hit:
                out.append(row)
        return out

    allowed = []
    for r in q.relation_generators():
        for v in words2:
            allowed.extend(rows_of({(w, v): c for w, c in r.items()}))
            pushed = {}
            for w, c in r.items():
                for u, c2 in H.push(v, c).items():
                    _acc(pushed, (u, w), c2, mod)
            allowed.extend(rows_of(pushed))
    span = howell_form(allowed, ncols, spec.p, spec.M)
    cop = {H.index(g): [(xy, _as_poly(c, mod)) for xy, c in t] for g, t in COPRODUCT.items()}
    results = []
    for r in q.relations:
        out = {}
        for (x, y), c in r.items():
            for (x1, x2), cx in cop[x]:
                for (y1, y2), cy in cop[y]:
                    # (x1 (x) x2)(cy y1 (x) y2): push cy through x1
                    for w, c2 in H.push((x1,), cy).items():
                        coeff = _pmul(_pmul(c, cx, mod), c2, mod)
                        _acc(out, (w + (y1,), (x2, y2)), coeff, mod)
        results.append(all(in_span(row, span) for row in rows_of(out)))
    return all(results), results
