"""Howell normal form over Z/p^M and module computations over the truncated ring.

Everything over (Z/p^M)[a]/(a^N) is flattened to Z/p^M: a scalar becomes the
N x N matrix of multiplication by it on the basis 1, a, ..., a^(N-1).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .coeff import RingSpec, TruncScalar
from . import _howell_py

try:
    if os.environ.get("PLETHORA_PURE"):
        raise ImportError
    from . import _howell_ext
except ImportError:
    _howell_ext = None

# the compiled kernel works in int64 and needs products below 2^63
_EXT_LIMIT = 2 ** 31


class NotInSpan(ArithmeticError):
    def __init__(self, residue):
        super().__init__(f"vector not in span, residue {residue}")
        self.residue = residue


def backend() -> str:
    return "compiled" if _howell_ext is not None else "python"


def howell_rows(rows, ncols, p, M, force_python=False):
    if not force_python and _howell_ext is not None and p ** M < _EXT_LIMIT and rows:
        return _howell_ext.howell_rows(rows, ncols, p, M)
    return _howell_py.howell_rows(rows, ncols, p, M)


@dataclass(frozen=True)
class FlatMatrix:
    rows: int
    cols: int
    entries: tuple
    p: int
    M: int

    @classmethod
    def from_rows(cls, rows, cols, p, M):
        mod = p ** M
        entries = tuple(tuple(int(x) % mod for x in r) for r in rows)
        return cls(len(entries), cols, entries, p, M)

    def row_list(self):
        return [list(r) for r in self.entries]

    def matmul(self, other: "FlatMatrix") -> "FlatMatrix":
        mod = self.p ** self.M
        cols_t = list(zip(*other.entries)) if other.rows else [()] * other.cols
        out = []
        for r in self.entries:
            out.append([sum(x * y for x, y in zip(r, col)) % mod for col in cols_t])
        return FlatMatrix.from_rows(out, other.cols, self.p, self.M)


@dataclass(frozen=True)
class HowellBasis:
    p: int
    M: int
    cols: int
    rows: tuple
    pivots: tuple

    def __len__(self):
        return len(self.rows)

    def length(self) -> int:
        """log_p of the order of the span."""
        total = 0
        for r, c in zip(self.rows, self.pivots):
            x, v = r[c], 0
            while x % self.p == 0:
                x //= self.p
                v += 1
            total += self.M - v
        return total

    def is_full(self) -> bool:
        return self.length() == self.cols * self.M

    def is_free_summand(self) -> bool:
        """All pivots are units, so the span is a direct summand."""
        return all(r[c] == 1 for r, c in zip(self.rows, self.pivots))

    def row_list(self):
        return [list(r) for r in self.rows]


def howell_form(m, cols=None, p=None, M=None) -> HowellBasis:
    """Howell normal form of the row span of a FlatMatrix (or raw rows)."""
    if isinstance(m, FlatMatrix):
        rows, cols, p, M = m.row_list(), m.cols, m.p, m.M
    else:
        rows = [list(r) for r in m]
    out, piv = howell_rows(rows, cols, p, M)
    return HowellBasis(p, M, cols, tuple(tuple(r) for r in out), tuple(piv))


def reduce_vector(b, basis: HowellBasis):
    """Pivotwise reduction; returns (coefficients, residue)."""
    mod = basis.p ** basis.M
    b = [x % mod for x in b]
    if len(b) != basis.cols:
        raise ValueError("dimension mismatch")
    coeffs = []
    for r, c in zip(basis.rows, basis.pivots):
        pk = r[c]
        q = b[c] // pk
        coeffs.append(q)
        if q:
            b = [(x - q * y) % mod for x, y in zip(b, r)]
    return coeffs, b


def solve_in_span(b, basis: HowellBasis):
    coeffs, res = reduce_vector(b, basis)
    if any(res):
        raise NotInSpan(res)
    return coeffs


def in_span(b, basis: HowellBasis) -> bool:
    return not any(reduce_vector(b, basis)[1])


def contains(big: HowellBasis, small: HowellBasis) -> bool:
    return all(in_span(r, big) for r in small.rows)


def kernel_basis(m) -> HowellBasis:
    """Howell basis of {x : x m = 0} for a FlatMatrix m."""
    if not isinstance(m, FlatMatrix):
        raise TypeError("kernel_basis expects a FlatMatrix")
    n, c = m.rows, m.cols
    aug = []
    for i, r in enumerate(m.entries):
        e = [0] * n
        e[i] = 1
        aug.append(list(r) + e)
    out, piv = howell_rows(aug, c + n, m.p, m.M)
    ker = [r[c:] for r, pc in zip(out, piv) if pc >= c]
    return howell_form(ker, n, m.p, m.M)


def preimage(A, span: HowellBasis, p, M) -> HowellBasis:
    """Howell basis of {x : x A lies in span}, A given as raw rows."""
    n = len(A)
    cols = span.cols
    stacked = [list(r) for r in A] + [list(r) for r in span.rows]
    K = kernel_basis(FlatMatrix.from_rows(stacked, cols, p, M))
    return howell_form([r[:n] for r in K.rows], n, p, M)


def image_rows(A, B, p, M):
    """Raw product of row lists A (k x n) and B (n x m) mod p^M."""
    mod = p ** M
    if not A:
        return []
    cols_t = list(zip(*B))
    return [[sum(x * y for x, y in zip(r, col)) % mod for col in cols_t] for r in A]


# --- flattening ---------------------------------------------------------

def scalar_block(s: TruncScalar):
    """N x N matrix of multiplication by s; row j holds a^j * s."""
    N = s.spec.N
    c = s.coeffs
    return [[c[l - j] if l >= j else 0 for l in range(N)] for j in range(N)]


def flatten(m, spec: RingSpec | None = None) -> FlatMatrix:
    """Replace each TruncScalar entry by its N x N multiplication block."""
    if spec is None:
        spec = m[0][0].spec
    N = spec.N
    ncols = len(m[0]) if m else 0
    rows = []
    for r in m:
        blocks = [scalar_block(s) for s in r]
        for j in range(N):
            row = []
            for blk in blocks:
                row.extend(blk[j])
            rows.append(row)
    return FlatMatrix.from_rows(rows, ncols * N, spec.p, spec.M)


def flatten_vector(v) -> list:
    out = []
    for s in v:
        out.extend(s.coeffs)
    return out


def unflatten_vector(flat, spec: RingSpec):
    N = spec.N
    return [TruncScalar(spec, flat[i:i + N]) for i in range(0, len(flat), N)]


def span_over_ring(vectors, spec: RingSpec, ncols=None) -> HowellBasis:
    """Howell form of the (Z/p^M)[a]/(a^N)-span of TruncScalar row vectors."""
    if ncols is None:
        ncols = len(vectors[0]) if vectors else 0
    if not vectors:
        return howell_form([], ncols * spec.N, spec.p, spec.M)
    return howell_form(flatten(vectors, spec))


def same_span(A, B, spec: RingSpec) -> bool:
    ncols = len(A[0]) if A else len(B[0])
    return span_over_ring(A, spec, ncols) == span_over_ring(B, spec, ncols)


def mat_mul(A, B, spec: RingSpec):
    """Product of matrices over TruncScalar."""
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


# --- Smith invariants over Z/p^M ----------------------------------------

def elementary_divisors(rows, ncols, p, M):
    """Exponents e with the span's quotient Z/p^M^ncols / span = sum Z/p^e.

    Returned sorted; a free summand Z/p^M appears as M, zero summands are dropped.
    """
    mod = p ** M
    A = [[x % mod for x in r] for r in rows if any(x % mod for x in r)]
    vals = []
    while A:
        best = None
        for i, r in enumerate(A):
            for j, x in enumerate(r):
                if x:
                    v = 0
                    y = x
                    while y % p == 0:
                        y //= p
                        v += 1
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        piv = A.pop(i)
        pk = p ** v
        uinv = pow(piv[j] // pk, -1, mod)
        piv = [(x * uinv) % mod for x in piv]
        rest = []
        for r in A:
            q = r[j] // pk
            if q:
                r = [(x - q * y) % mod for x, y in zip(r, piv)]
            # column operation clears the rest of the pivot row
            r = r[:j] + r[j + 1:]
            if any(r):
                rest.append(r)
        A = rest
        vals.append(v)
    free = ncols - len(vals)
    # quotient summands: Z/p^v for each pivot, Z/p^M for untouched columns
    return sorted([v for v in vals if v > 0] + [M] * free)


@dataclass
class ModulePresentation:
    spec: RingSpec
    generators: list
    relations: list = field(default_factory=list)

    def canonical(self) -> HowellBasis:
        return span_over_ring(self.relations, self.spec, len(self.generators)) if self.relations \
            else howell_form([], len(self.generators) * self.spec.N, self.spec.p, self.spec.M)

    def length(self) -> int:
        """log_p of the order of the presented module."""
        return len(self.generators) * self.spec.N * self.spec.M - self.canonical().length()

    def invariants(self):
        """Elementary divisors of the presented module as a Z/p^M-module."""
        flat = flatten(self.relations, self.spec).row_list() if self.relations else []
        return elementary_divisors(flat, len(self.generators) * self.spec.N, self.spec.p, self.spec.M)

    def is_zero(self) -> bool:
        return self.canonical().is_full()

    def to_json(self):
        return {
            "generators": list(self.generators),
            "relations": [[s.to_json() for s in r] for r in self.relations],
        }


def cokernel_presentation(d, target_gens, spec: RingSpec) -> ModulePresentation:
    """Cokernel of the map whose rows are the images of the source basis."""
    return ModulePresentation(spec, list(target_gens), [list(r) for r in d])
