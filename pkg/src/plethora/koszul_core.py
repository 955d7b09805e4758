"""Quadratic data over (Z/p^M)[a]/(a^N), quadratic duals, bar and cobar
complexes in weight windows, Koszul differentials and Koszulity diagnostics.

Conventions. A generator bimodule H is left-free on labelled generators; the
right action of the variable a is given by exact polynomials, g.a = sum C_gh(a) h,
and integer constants act centrally. Elements of H^{on} are dicts from words
(tuples of generator indices) to left coefficients. Truncating left coefficients
at a^N is harmless because a^N H is a sub-bimodule, but scalars pushed through a
word from the right must be exact polynomials, so relation generators are kept
exact and only results are truncated.

The dual of H is stored mirrored: the word w of the dual pairs with the word w
of H by the Kronecker delta, and the mirrored right-action matrix is C transposed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coeff import RingSpec, TruncScalar
from .linalg import (
    HowellBasis, FlatMatrix, howell_form, kernel_basis, preimage,
)


class SplittingFailure(ValueError):
    pass


# --- exact polynomials in a over Z/p^M ---------------------------------------

def _pnorm(c, mod):
    c = [x % mod for x in c]
    while c and not c[-1]:
        c.pop()
    return tuple(c)


def _padd(x, y, mod):
    n = max(len(x), len(y))
    return _pnorm([(x[i] if i < len(x) else 0) + (y[i] if i < len(y) else 0) for i in range(n)], mod)


def _pmul(x, y, mod):
    if not x or not y:
        return ()
    out = [0] * (len(x) + len(y) - 1)
    for i, xi in enumerate(x):
        if xi:
            for j, yj in enumerate(y):
                out[i + j] += xi * yj
    return _pnorm(out, mod)


def _as_poly(c, mod):
    if isinstance(c, TruncScalar):
        return _pnorm(c.coeffs, mod)
    if isinstance(c, int):
        return _pnorm([c], mod)
    return _pnorm([int(x) for x in c], mod)


def _acc(d, key, poly, mod):
    v = _padd(d.get(key, ()), poly, mod)
    if v:
        d[key] = v
    else:
        d.pop(key, None)


# --- generator bimodules -----------------------------------------------------

class GeneratorBimodule:
    """H = left-free on `labels`; right_action[g][h] is the polynomial C_gh(a).

    right_action=None means a acts centrally (g.a = a g).
    """

    def __init__(self, spec: RingSpec, labels, right_action=None):
        self.spec = spec
        self.labels = tuple(labels)
        self.mod = spec.modulus
        k = len(self.labels)
        if right_action is None:
            self.matrix = None
        else:
            mat = [[() for _ in range(k)] for _ in range(k)]
            for g, row in right_action.items():
                gi = self.index(g)
                for h, poly in row.items():
                    mat[gi][self.index(h)] = _as_poly(poly, self.mod)
            self.matrix = tuple(tuple(r) for r in mat)
        self._pow_cache = {}

    @property
    def rank(self):
        return len(self.labels)

    def index(self, g):
        if isinstance(g, int):
            return g
        return self.labels.index(g)

    def is_central(self):
        return self.matrix is None

    def transpose(self, labels):
        """The mirrored dual: same generators, transposed action matrix."""
        out = GeneratorBimodule(self.spec, labels)
        if self.matrix is not None:
            k = self.rank
            out.matrix = tuple(tuple(self.matrix[j][i] for j in range(k)) for i in range(k))
        return out

    def words(self, n):
        return list(itertools.product(range(self.rank), repeat=n))

    def word_index(self, word):
        idx = 0
        for g in word:
            idx = idx * self.rank + g
        return idx

    def _times_a(self, word):
        # exact right action of the variable a on a single word
        if not word:
            return {(): (0, 1)}
        if self.matrix is None:
            return {word: (0, 1)}
        *u, g = word
        u = tuple(u)
        out = {}
        for h, poly in enumerate(self.matrix[g]):
            if poly:
                for w, c in self.push(u, poly).items():
                    _acc(out, w + (h,), c, self.mod)
        return out

    def word_times_a_power(self, word, j):
        key = (word, j)
        hit = self._pow_cache.get(key)
        if hit is not None:
            return hit
        if j == 0:
            res = {word: (1,)}
        else:
            res = {}
            for w, c in self.word_times_a_power(word, j - 1).items():
                for v, c2 in self._times_a(w).items():
                    _acc(res, v, _pmul(c, c2, self.mod), self.mod)
        self._pow_cache[key] = res
        return res

    def push(self, word, poly):
        """word . c for an exact polynomial c, as {word: left coefficient}."""
        poly = _as_poly(poly, self.mod)
        if self.matrix is None or not word:
            return {word: poly} if poly else {}
        out = {}
        for j, cj in enumerate(poly):
            if cj:
                for w, c in self.word_times_a_power(word, j).items():
                    _acc(out, w, _pmul((cj,), c, self.mod), self.mod)
        return out

    def truncate(self, poly) -> TruncScalar:
        return TruncScalar(self.spec, poly[: self.spec.N])


# --- quadratic data ------------------------------------------------------------

class QuadraticDatum:
    """(H, R) with R spanned, as a sub-bimodule, by exact elements of H.H.

    relations: list of dicts {(g, h): polynomial}, generators by label or index.
    """

    def __init__(self, bimodule: GeneratorBimodule, relations, name="", right_closure=None):
        self.H = bimodule
        self.spec = bimodule.spec
        self.name = name
        mod = self.spec.modulus
        self.relations = []
        for r in relations:
            d = {}
            for (g, h), c in r.items():
                _acc(d, (self.H.index(g), self.H.index(h)), _as_poly(c, mod), mod)
            self.relations.append(d)
        self._predual = None
        self._span_cache = {}
        self._gens = None
        self._right_closure = right_closure

    # generators of R as a left module: relations and their right a-multiples
    def relation_generators(self):
        if self._gens is not None:
            return self._gens
        gens = [dict(r) for r in self.relations]
        if not self.H.is_central() and gens:
            limit = self._right_closure if self._right_closure is not None else self.spec.N
            frontier = gens
            span = self._rows_span(2, gens)
            for _ in range(limit):
                nxt = [self._right_mult_a(r) for r in frontier]
                nxt = [r for r in nxt if r]
                if not nxt:
                    break
                bigger = self._rows_span(2, gens + nxt)
                gens = gens + nxt
                if bigger.length() == span.length():
                    break
                span = bigger
                frontier = nxt
        self._gens = gens
        return gens

    def _right_mult_a(self, r):
        mod = self.spec.modulus
        out = {}
        for w, c in r.items():
            for v, c2 in self.H.push(w, (0, 1)).items():
                _acc(out, v, _pmul(c, c2, mod), mod)
        return out

    def _rows_span(self, n, elements):
        rows = []
        for e in elements:
            rows.extend(self._flat_rows(n, e))
        return howell_form(rows, self.ncols(n), self.spec.p, self.spec.M)

    def ncols(self, n):
        return self.H.rank ** n * self.spec.N

    def _flat_rows(self, n, element):
        """Rows a^k * element (k < N) flattened over words of length n."""
        N = self.spec.N
        mod = self.spec.modulus
        rows = []
        base = [(self.H.word_index(w) * N, c[:N]) for w, c in element.items()]
        for k in range(N):
            row = [0] * self.ncols(n)
            hit = False
            for off, c in base:
                for j, cj in enumerate(c):
                    if j + k < N and cj:
                        row[off + j + k] = (row[off + j + k] + cj) % mod
                        hit = True
            if hit:
                rows.append(row)
        return rows

    def relation_elements(self, n, position):
        """Exact elements u (x) r (x) v with r at slots (position, position+1)."""
        out = []
        mod = self.spec.modulus
        for r in self.relation_generators():
            for u in self.H.words(position):
                pushed = {}
                for (x, y), c in r.items():
                    for w, c2 in self.H.push(u, c).items():
                        _acc(pushed, w + (x, y), c2, mod)
                if not pushed:
                    continue
                for v in self.H.words(n - position - 2):
                    out.append({w + v: c for w, c in pushed.items()})
        return out

    def position_span(self, n, position) -> HowellBasis:
        key = ("pos", n, position)
        if key not in self._span_cache:
            if self._predual is not None:
                self._span_cache[key] = annihilator(self._predual.position_span(n, position), self)
            else:
                self._span_cache[key] = self._rows_span(n, self.relation_elements(n, position))
        return self._span_cache[key]

    def block_span(self, n, positions) -> HowellBasis:
        """Sum of the relation spans at the given slot positions."""
        positions = tuple(sorted(positions))
        key = ("blk", n, positions)
        if key in self._span_cache:
            return self._span_cache[key]
        if self._predual is not None and len(positions) > 1:
            # dual side: annihilator of the intersection on the predual side
            res = annihilator(self._predual.block_intersection(n, positions), self)
        else:
            rows = []
            for i in positions:
                rows.extend(self.position_span(n, i).rows)
            res = howell_form(rows, self.ncols(n), self.spec.p, self.spec.M)
        self._span_cache[key] = res
        return res

    def relation_span(self, n) -> HowellBasis:
        return self.block_span(n, range(n - 1))

    def block_intersection(self, n, positions) -> HowellBasis:
        """Intersection of the relation spans at the given positions."""
        positions = tuple(sorted(positions))
        key = ("int", n, positions)
        if key in self._span_cache:
            return self._span_cache[key]
        cols = self.ncols(n)
        if not positions:
            res = howell_form([[int(i == j) for j in range(cols)] for i in range(cols)], cols,
                              self.spec.p, self.spec.M)
        else:
            res = self.position_span(n, positions[0])
            for i in positions[1:]:
                res = intersect(res, self.position_span(n, i))
        self._span_cache[key] = res
        return res

    def intersection(self, n) -> HowellBasis:
        """I_n: the intersection of all relation positions in H^{on}."""
        return self.block_intersection(n, range(n - 1))

    def check_split(self):
        S = self.relation_span(2)
        if not is_split(S, self.spec, self.H.rank ** 2):
            raise SplittingFailure("relation module is not a direct summand")
        return True

    def to_json(self):
        labels = self.H.labels
        ra = None
        if self.H.matrix is not None:
            ra = {labels[g]: {labels[h]: [str(c) for c in poly] for h, poly in enumerate(row) if poly}
                  for g, row in enumerate(self.H.matrix)}
        rels = [[{"coeff": [str(c) for c in poly], "word": [labels[x], labels[y]]}
                 for (x, y), poly in sorted(r.items())] for r in self.relations]
        return {"ring": self.spec.to_json(), "generators": list(labels),
                "right_action": ra, "relations": rels}

    @classmethod
    def from_json(cls, obj, spec=None):
        if isinstance(obj, str):
            obj = json.loads(obj)
        spec = spec or RingSpec.from_json(obj["ring"])
        ra = obj.get("right_action")
        if ra is not None:
            ra = {g: {h: [int(x) for x in poly] for h, poly in row.items()} for g, row in ra.items()}
        H = GeneratorBimodule(spec, obj["generators"], ra)
        rels = []
        for r in obj["relations"]:
            rels.append({tuple(t["word"]): [int(x) for x in t["coeff"]] for t in r})
        return cls(H, rels, name=obj.get("name", ""))


def is_split(S: HowellBasis, spec: RingSpec, nwords) -> bool:
    """S is a free direct summand of B^nwords (B the truncated ring)."""
    N, M, p = spec.N, spec.M, spec.p
    if S.length() % (N * M):
        return False
    const = [[r[w * N] % p for w in range(nwords)] for r in S.rows]
    red = howell_form(const, nwords, p, 1) if const else None
    d = len(red) if red is not None else 0
    return d * N * M == S.length()


def intersect(A: HowellBasis, B: HowellBasis) -> HowellBasis:
    if not A.rows or not B.rows:
        return howell_form([], A.cols, A.p, A.M)
    Y = preimage(list(A.rows), B, A.p, A.M)
    rows = _mat_mul(list(Y.rows), list(A.rows), A.p ** A.M) if Y.rows else []
    return howell_form(rows, A.cols, A.p, A.M)


def _mat_mul(X, Y, mod):
    """Row-list product mod `mod`, through numpy when the sums fit in int64."""
    if not X or not Y:
        return []
    inner = len(Y)
    if (mod - 1) ** 2 * inner < 2 ** 62:
        a = np.array(X, dtype=np.int64) % mod
        b = np.array(Y, dtype=np.int64) % mod
        return (a @ b % mod).tolist()
    a = np.array(X, dtype=object)
    b = np.array(Y, dtype=object)
    return (a.dot(b) % mod).tolist()


def _pair_rows(span: HowellBasis, q: QuadraticDatum):
    """B-valued pairing matrix: for each generator of span, its coefficient vector."""
    N = q.spec.N
    gens = []
    for r in span.rows:
        gens.append([r[i * N:(i + 1) * N] for i in range(span.cols // N)])
    return gens


def annihilator(span: HowellBasis, q: QuadraticDatum) -> HowellBasis:
    """{phi : sum_w phi_w x_w = 0 in B for all x in span}, same flattened layout."""
    spec = q.spec
    N, p, M = spec.N, spec.p, spec.M
    mod = spec.modulus
    nw = span.cols // N
    gens = _pair_rows(span, q)
    if not gens:
        return howell_form([[int(i == j) for j in range(span.cols)] for i in range(span.cols)],
                           span.cols, p, M)
    # row (w, k): a^k e_w maps to (sum_j a^k x_w)_{gen, degree}
    rows = []
    for w in range(nw):
        for k in range(N):
            row = [0] * (len(gens) * N)
            for gi, g in enumerate(gens):
                x = g[w]
                for j in range(N - k):
                    if x[j]:
                        row[gi * N + j + k] = (row[gi * N + j + k] + x[j]) % mod
            rows.append(row)
    return kernel_basis(FlatMatrix.from_rows(rows, len(gens) * N, p, M))


# --- quadratic duality -----------------------------------------------------------

def _dual_label(s):
    if s.startswith("Q_"):
        return "Q^" + s[2:]
    if s.startswith("Q^"):
        return "Q_" + s[2:]
    if s.endswith("*"):
        return s[:-1]
    return s + "*"


def quadratic_dual(q: QuadraticDatum, labels=None, check=True) -> QuadraticDatum:
    """(H^v, R^perp). The returned datum remembers q, so its higher relation
    spans are computed as annihilators of intersections on q's side."""
    if check:
        q.check_split()
    labels = labels or [_dual_label(s) for s in q.H.labels]
    Hd = q.H.transpose(labels)
    perp = annihilator(q.relation_span(2), q)
    N = q.spec.N
    mod = q.spec.modulus
    words = q.H.words(2)
    rels = []
    for r in perp.rows:
        d = {}
        for i, w in enumerate(words):
            c = _pnorm(r[i * N:(i + 1) * N], mod)
            if c:
                d[w] = c
        if d:
            rels.append(d)
    out = QuadraticDatum(Hd, {}, name=f"dual({q.name})" if q.name else "dual")
    out.relations = rels
    out._gens = rels
    out._predual = q
    out._span_cache[("pos", 2, 0)] = perp
    return out


def elements_span(q: QuadraticDatum, elements, n=2) -> HowellBasis:
    """Left span (with a-multiples) of explicit elements {word: poly} of length n."""
    mod = q.spec.modulus
    norm = []
    for e in elements:
        d = {}
        for w, c in e.items():
            w = tuple(q.H.index(g) for g in w)
            _acc(d, w, _as_poly(c, mod), mod)
        norm.append(d)
    return q._rows_span(n, norm)


@dataclass
class GradedPiece:
    n: int
    rank: int
    basis: list
    length: int


def grade_piece_basis(q: QuadraticDatum, n) -> GradedPiece:
    """Free basis of T_n(H, R) = H^{on} / (relation span), by complementing pivots."""
    spec = q.spec
    words = q.H.words(n)
    if n < 2:
        return GradedPiece(n, len(words), words, len(words) * spec.N * spec.M)
    S = q.relation_span(n)
    if not is_split(S, spec, len(words)):
        raise SplittingFailure(f"relation span in length {n} is not a direct summand")
    total = len(words) * spec.N * spec.M
    qlen = total - S.length()
    pivot_words = {c // spec.N for c in S.pivots}
    basis = [w for i, w in enumerate(words) if i not in pivot_words]
    rank = qlen // (spec.N * spec.M)
    if len(basis) != rank:
        # pivots of a summand need not sit at word starts; fall back to a greedy choice
        basis = complement_words(q, n, S)
    return GradedPiece(n, rank, basis, qlen)


def complement_words(q, n, S):
    spec = q.spec
    words = q.H.words(n)
    rows = list(S.rows)
    chosen = []
    cur = S.length()
    for i, w in enumerate(words):
        extra = q._flat_rows(n, {w: (1,)})
        trial = howell_form(rows + extra, S.cols, spec.p, spec.M)
        if trial.length() == cur + spec.N * spec.M:
            rows = list(trial.rows)
            cur = trial.length()
            chosen.append(w)
    return chosen


def is_complement(q: QuadraticDatum, n, words) -> bool:
    """The given words map to a basis of T_n(H, R)."""
    spec = q.spec
    S = q.relation_span(n)
    rows = list(S.rows)
    for w in words:
        rows.extend(q._flat_rows(n, {tuple(q.H.index(g) for g in w): (1,)}))
    full = howell_form(rows, S.cols, spec.p, spec.M)
    total = len(q.H.words(n)) * spec.N * spec.M
    return full.length() == total and S.length() + len(words) * spec.N * spec.M == total


def rank_profile(q: QuadraticDatum, n_max):
    return [grade_piece_basis(q, n).rank for n in range(n_max + 1)]


# --- modules and cochains ---------------------------------------------------------

@dataclass
class ModuleData:
    """A free B-module with an action of H: action[(g, j)] = g.m_j as a list of polys."""

    spec: RingSpec
    labels: tuple
    action: dict = field(default_factory=dict)

    @property
    def rank(self):
        return len(self.labels)


def trivial_module(spec, rank=1):
    return ModuleData(spec, tuple(f"m{i}" for i in range(rank)), {})


def zero_module(spec):
    return ModuleData(spec, (), {})


def _vec_zero(n):
    return [() for _ in range(n)]


def act_generator(q: QuadraticDatum, mod_data: ModuleData, g, vec):
    """g . (sum_j c_j m_j); each c_j is pushed through g first."""
    mod = q.spec.modulus
    N = q.spec.N
    out = _vec_zero(mod_data.rank)
    for j, c in enumerate(vec):
        if not c:
            continue
        for w, coef in q.H.push((g,), c).items():
            h = w[0]
            img = mod_data.action.get((h, j))
            if not img:
                continue
            for l, x in enumerate(img):
                if x:
                    out[l] = _padd(out[l], _pmul(coef, _as_poly(x, mod), mod)[:N], mod)
    return out


def act_word(q, mod_data, word, vec):
    for g in reversed(word):
        vec = act_generator(q, mod_data, g, vec)
        if not any(vec):
            break
    return vec


@dataclass
class Cochain:
    """f : H^{on}(M) -> N on the left basis (word, j); values are lists of polys."""

    n: int
    source: ModuleData
    target: ModuleData
    values: dict = field(default_factory=dict)

    def value(self, word, j):
        return self.values.get((word, j)) or _vec_zero(self.target.rank)

    def __add__(self, other):
        mod = self.source.spec.modulus
        out = dict(self.values)
        for k, v in other.values.items():
            cur = out.get(k) or _vec_zero(self.target.rank)
            out[k] = [_padd(x, y, mod) for x, y in zip(cur, v)]
        return Cochain(self.n, self.source, self.target, out)

    def scale(self, s):
        mod = self.source.spec.modulus
        return Cochain(self.n, self.source, self.target,
                       {k: [_pmul((s,), x, mod) for x in v] for k, v in self.values.items()})

    def __sub__(self, other):
        return self + other.scale(-1)


def apply_cochain(q, f: Cochain, word, vec):
    """f(word (x) sum_j c_j m_j) = sum_j f((word . c_j) (x) m_j)."""
    mod = q.spec.modulus
    N = q.spec.N
    out = _vec_zero(f.target.rank)
    for j, c in enumerate(vec):
        if not c:
            continue
        for w, coef in q.H.push(word, c).items():
            val = f.values.get((w, j))
            if not val:
                continue
            for l, x in enumerate(val):
                if x:
                    out[l] = _padd(out[l], _pmul(coef, x, mod)[:N], mod)
    return out


def wreath(q, f: Cochain, g: Cochain) -> Cochain:
    """f wr g = (-1)^{n n'} g o F^{n'} f, for f: F^n M -> M', g: F^{n'} M' -> M''."""
    n, n2 = f.n, g.n
    sign = -1 if (n * n2) % 2 else 1
    mod = q.spec.modulus
    out = {}
    for x in q.H.words(n2):
        for y in q.H.words(n):
            for j in range(f.source.rank):
                mid = f.value(y, j)
                if not any(mid):
                    continue
                val = apply_cochain(q, g, x, mid)
                if any(val):
                    out[(x + y, j)] = [_pnorm([sign * c for c in v], mod) for v in val]
    return Cochain(n + n2, f.source, g.target, out)


def action_cochain(q, mod_data: ModuleData) -> Cochain:
    """The degree-1 element of the module structure twisted by -1."""
    mod = q.spec.modulus
    vals = {}
    for (g, j), img in mod_data.action.items():
        vals[((g,), j)] = [_pnorm([-c for c in _as_poly(x, mod)], mod) for x in img]
    return Cochain(1, mod_data, mod_data, vals)


def koszul_differential(q, source: ModuleData, target: ModuleData, f: Cochain) -> Cochain:
    """delta(f) = Q^M wr f - (-1)^n f wr Q^N, on lifts to H^{on}(M)."""
    QM = action_cochain(q, source)
    QN = action_cochain(q, target)
    first = wreath(q, QM, f)
    second = wreath(q, f, QN)
    return first - second if f.n % 2 == 0 else first + second


def cobar_outer_terms(q, f: Cochain) -> Cochain:
    """delta_0 f + (-1)^{n+1} delta_{n+1} f on the all-length-one part of the cobar complex."""
    n = f.n
    mod = q.spec.modulus
    src, tgt = f.source, f.target
    out = {}
    s_last = -1 if (n + 1) % 2 else 1
    for w in q.H.words(n + 1):
        x0, rest = w[0], w[1:]
        head, xl = w[:-1], w[-1]
        for j in range(src.rank):
            acc = _vec_zero(tgt.rank)
            inner = f.value(rest, j)
            if any(inner):
                d0 = act_generator(q, tgt, x0, inner)
                acc = [_padd(a, b, mod) for a, b in zip(acc, d0)]
            e = [(1,) if i == j else () for i in range(src.rank)]
            moved = act_generator(q, src, xl, e)
            if any(moved):
                d1 = apply_cochain(q, f, head, moved)
                acc = [_padd(a, _pnorm([s_last * c for c in b], mod), mod) for a, b in zip(acc, d1)]
            if any(acc):
                out[(w, j)] = acc
    return Cochain(n + 1, src, tgt, out)


def restrict_to_intersection(q, f: Cochain, I: HowellBasis = None):
    """Values of f on generators of I_n (x) m_j: the class of f in K^n."""
    spec = q.spec
    N = spec.N
    mod = spec.modulus
    n = f.n
    if I is None:
        I = q.intersection(n)
    words = q.H.words(n)
    out = []
    for r in I.rows:
        for j in range(f.source.rank):
            acc = [0] * (f.target.rank * N)
            for i, w in enumerate(words):
                c = r[i * N:(i + 1) * N]
                if not any(c):
                    continue
                val = f.values.get((w, j))
                if not val:
                    continue
                for l, x in enumerate(val):
                    prod = _pmul(_pnorm(c, mod), x, mod)[:N]
                    for k, v in enumerate(prod):
                        acc[l * N + k] = (acc[l * N + k] + v) % mod
            out.append(tuple(acc))
    return tuple(out)


def random_cochain(q, n, source, target, rng, density=0.5) -> Cochain:
    spec = q.spec
    vals = {}
    for w in q.H.words(n):
        for j in range(source.rank):
            if rng.random() < density:
                vals[(w, j)] = [_pnorm([rng.randrange(spec.modulus) for _ in range(spec.N)], spec.modulus)
                                for _ in range(target.rank)]
    return Cochain(n, source, target, vals)


# --- bar complexes and Koszulity --------------------------------------------------

def compositions(m, n):
    """Ordered compositions of m into n positive parts."""
    if n == 0:
        return [()] if m == 0 else []
    out = []
    for first in range(1, m - n + 2):
        for rest in compositions(m - first, n - 1):
            out.append((first,) + rest)
    return out


def _internal_positions(comp):
    pos = []
    start = 0
    for b in comp:
        pos.extend(range(start, start + b - 1))
        start += b
    return tuple(pos)


def _merge(comp, i):
    return comp[:i] + (comp[i] + comp[i + 1],) + comp[i + 2:]


def _stack_span(q, m, comps):
    """Direct sum of block-internal relation spans, one summand per composition."""
    width = q.ncols(m)
    rows = []
    for ci, c in enumerate(comps):
        S = q.block_span(m, _internal_positions(c))
        for r in S.rows:
            row = [0] * (width * len(comps))
            row[ci * width:(ci + 1) * width] = r
            rows.append(row)
    return howell_form(rows, width * len(comps), q.spec.p, q.spec.M)


def _bar_matrix(q, m, src, tgt):
    """Flattened bar differential B_n[m] -> B_{n-1}[m], the signed sum of block merges."""
    width = q.ncols(m)
    tindex = {c: i for i, c in enumerate(tgt)}
    mod = q.spec.modulus
    rows = []
    for c in src:
        for k in range(width):
            row = [0] * (width * len(tgt))
            for i in range(len(c) - 1):
                t = tindex[_merge(c, i)]
                row[t * width + k] = (row[t * width + k] + (-1) ** (i + 1)) % mod
            rows.append(row)
    return rows


@dataclass
class HomologyReport:
    lengths: dict
    witness: tuple = None

    @property
    def passes(self):
        return self.witness is None


def bar_homology(q: QuadraticDatum, n_max, m_max):
    """Lengths (log_p orders) of H_n of the bar complex in weight m."""
    spec = q.spec
    out = {}
    for m in range(1, m_max + 1):
        spans = {}
        for n in range(1, m + 1):
            spans[n] = _stack_span(q, m, compositions(m, n))
        width = q.ncols(m)
        for n in range(1, min(n_max, m) + 1):
            comps = compositions(m, n)
            dim = width * len(comps)
            if n > 1:
                D = _bar_matrix(q, m, comps, compositions(m, n - 1))
                Z = preimage(D, spans[n - 1], spec.p, spec.M)
            else:
                Z = howell_form([[int(i == j) for j in range(dim)] for i in range(dim)], dim, spec.p, spec.M)
            rows = list(spans[n].rows)
            if n < m:
                up = compositions(m, n + 1)
                rows.extend(_bar_matrix(q, m, up, comps))
            Bd = howell_form(rows, dim, spec.p, spec.M)
            out[(n, m)] = Z.length() - Bd.length()
    return out


def koszulity_check(q: QuadraticDatum, n_max=3, m_max=3) -> HomologyReport:
    """Bar homology H_n[m] must vanish off the diagonal n = m."""
    lengths = bar_homology(q, n_max, m_max)
    witness = None
    for (n, m), v in sorted(lengths.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if n != m and v:
            witness = (n, m, v)
            break
    return HomologyReport(lengths, witness)


# --- cobar complex with trivial coefficients, weight by weight ----------------------

def _ann_stack(q, m, comps):
    width = q.ncols(m)
    rows = []
    for ci, c in enumerate(comps):
        A = annihilator(q.block_span(m, _internal_positions(c)), q)
        for r in A.rows:
            row = [0] * (width * len(comps))
            row[ci * width:(ci + 1) * width] = r
            rows.append(row)
    return howell_form(rows, width * len(comps), q.spec.p, q.spec.M)


def _transpose(rows, ncols):
    if not rows:
        return [[] for _ in range(ncols)]
    return [list(col) for col in zip(*rows)]


@dataclass
class CochainComplexWindow:
    """Cochains Hom(B_n[m], B) per (n, m), as annihilators, with the transposed differential."""

    q: QuadraticDatum
    n_max: int
    m_max: int
    cochains: dict = field(default_factory=dict)
    diff: dict = field(default_factory=dict)
    edge: set = field(default_factory=set)

    def homology_lengths(self):
        spec = self.q.spec
        out = {}
        for (n, m), C in self.cochains.items():
            dim = C.cols
            D = self.diff.get((n, m))
            if D is not None and C.rows:
                img = _mat_mul(list(C.rows), D, spec.modulus)
                K = kernel_basis(FlatMatrix.from_rows(img, len(D[0]) if D and D[0] else 0, spec.p, spec.M)) \
                    if D and D[0] else howell_form([[int(i == j) for j in range(len(C.rows))]
                                                    for i in range(len(C.rows))], len(C.rows), spec.p, spec.M)
                Z = howell_form(_mat_mul(list(K.rows), list(C.rows), spec.modulus), dim, spec.p, spec.M) \
                    if K.rows else howell_form([], dim, spec.p, spec.M)
            else:
                Z = C
            prev = self.cochains.get((n - 1, m))
            Dp = self.diff.get((n - 1, m))
            if prev is not None and prev.rows and Dp:
                Bd = howell_form(_mat_mul(list(prev.rows), Dp, spec.modulus), dim, spec.p, spec.M)
                blen = Bd.length()
            else:
                blen = 0
            out[(n, m)] = Z.length() - blen
        return out

    def delta_squared_zero(self):
        mod = self.q.spec.modulus
        for (n, m), D in self.diff.items():
            E = self.diff.get((n + 1, m))
            if not D or not E:
                continue
            C = self.cochains[(n, m)]
            if not C.rows:
                continue
            x = _mat_mul(_mat_mul(list(C.rows), D, mod), E, mod)
            if any(any(r) for r in x):
                return False
        return True


def cobar_complex(q: QuadraticDatum, n_max, m_max, source=None, target=None) -> CochainComplexWindow:
    """Reduced cobar complex C(M, N) of T(H, R) in weights <= m_max, trivial coefficients.

    Passing a zero module for either side yields the zero complex.
    """
    spec = q.spec
    win = CochainComplexWindow(q, n_max, m_max)
    ranks = 1
    for mod_data in (source, target):
        if mod_data is not None:
            if mod_data.action:
                raise NotImplementedError("cobar_complex windows take trivial coefficients")
            ranks *= mod_data.rank
    for m in range(1, m_max + 1):
        width = q.ncols(m)
        for n in range(1, min(n_max + 1, m) + 1):
            comps = compositions(m, n)
            if ranks == 0:
                win.cochains[(n, m)] = howell_form([], 0, spec.p, spec.M)
                continue
            win.cochains[(n, m)] = _ann_stack(q, m, comps)
            if n < m:
                up = compositions(m, n + 1)
                # (delta phi)(x) = phi(d x): transpose of the bar differential
                win.diff[(n, m)] = _transpose(_bar_matrix(q, m, up, comps), width * len(up))
            if n == n_max + 1:
                win.edge.add((n, m))
    if ranks == 0:
        win.diff = {}
    return win


def koszul_lengths(q: QuadraticDatum, n_max):
    """Lengths of K^n = Hom(I_n, B) for trivial coefficients (zero differential)."""
    return {n: q.intersection(n).length() if n >= 2 else q.ncols(n) * q.spec.M for n in range(1, n_max + 1)}


def koszul_vs_cobar(q: QuadraticDatum, n_max, m_max=None):
    """Compare K-side lengths with cobar cohomology per (n, m); returns (ok, table)."""
    m_max = m_max or n_max
    cob = cobar_complex(q, n_max, m_max).homology_lengths()
    K = koszul_lengths(q, n_max)
    table = {}
    ok = True
    for (n, m), v in sorted(cob.items()):
        if n > n_max:
            continue
        expect = K[n] if n == m else 0
        table[(n, m)] = (v, expect)
        ok &= v == expect
    return ok, table


# --- PBW diagnostics ------------------------------------------------------------------

@dataclass
class PBWReport:
    pair_determined: bool
    ordered: bool
    isomorphism: bool
    witness: object = None

    @property
    def passes(self):
        return self.pair_determined and self.ordered and self.isomorphism


def pbw_check(normal_form, in_S, order_key, words_by_length, pairs_in_S=None) -> PBWReport:
    """Check a PBW decomposition on a window.

    normal_form(word) -> {word: coeff} expresses a product in the S-basis;
    in_S(word) decides membership; order_key orders the blocks; words_by_length
    lists every word of the window, grouped {n: [...]}.
    Condition (2) is read as: for w', w'' in S with w'w'' not in S, the product
    has no component on S-words <= w'w'' in the lexicographic order.
    """
    pair_ok = True
    witness = None
    pair_set = pairs_in_S
    for n, ws in sorted(words_by_length.items()):
        for w in ws:
            pairs = all(in_S(w[i:i + 2]) for i in range(len(w) - 1))
            if pair_set is not None:
                pairs = all(w[i:i + 2] in pair_set for i in range(len(w) - 1))
            if pairs != bool(in_S(w)):
                pair_ok = False
                witness = witness or ("pair", w)

    def key(w):
        return tuple(order_key(s) for s in w)

    ordered = True
    iso = True
    for n, ws in sorted(words_by_length.items()):
        for w in ws:
            nf = normal_form(w)
            if in_S(w):
                if nf != {w: 1} and {k: v for k, v in nf.items() if v} != {w: 1}:
                    iso = False
                    witness = witness or ("basis", w, nf)
                continue
            if any(not in_S(v) for v in nf):
                iso = False
                witness = witness or ("span", w, nf)
            for split in range(1, len(w)):
                left, right = w[:split], w[split:]
                if in_S(left) and in_S(right):
                    low = [v for v, c in nf.items() if c and key(v) <= key(w)]
                    if low:
                        ordered = False
                        witness = witness or ("order", (left, right), low)
                    break
    return PBWReport(pair_ok, ordered, iso, witness)


def dyer_lashof_pbw(p=2, entries=range(0, 7), length=3, reverse=False) -> PBWReport:
    """Admissible words as a PBW decomposition of the length-graded Dyer-Lashof
    algebra, checked on words with entries in `entries`."""
    from . import dyer_lashof as dl
    choices = (0,) if p == 2 else (0, 1)
    letters = [(e, r) for r in entries for e in choices]
    words = {n: list(itertools.product(letters, repeat=n)) for n in range(1, length + 1)}

    def nf(w):
        return dict(dl.adem_normalize(w, p).terms)

    def in_S(w):
        return dl.is_admissible(tuple(w), p)

    def order(s):
        # blocks ordered by decreasing r, then eps; reverse flips it
        return (s[1], -s[0]) if reverse else (-s[1], s[0])

    return pbw_check(nf, in_S, order, words)


def quadratic_pbw(q: QuadraticDatum, in_S, order_key, length=3) -> PBWReport:
    """PBW check for a quadratic datum over a field, single-generator blocks."""
    spec = q.spec
    if spec.N != 1 or spec.M != 1:
        raise ValueError("quadratic_pbw works over F_p")
    words = {n: q.H.words(n) for n in range(1, length + 1)}

    @lru_cache(maxsize=None)
    def nf(w):
        n = len(w)
        if n < 2 or in_S(w):
            return {w: 1}
        S = q.relation_span(n)
        basis = [v for v in q.H.words(n) if in_S(v)]
        rows = list(S.rows) + [[int(q.H.word_index(v) == i) for i in range(q.ncols(n))] for v in basis]
        target = [int(q.H.word_index(w) == i) for i in range(q.ncols(n))]
        # solve target = s + sum c_v v
        H = howell_form(rows + [target], q.ncols(n), spec.p, 1)
        if H.length() != howell_form(rows, q.ncols(n), spec.p, 1).length():
            return {}
        aug = [r + [0] * len(basis) for r in S.rows]
        for i, v in enumerate(basis):
            row = [int(q.H.word_index(v) == k) for k in range(q.ncols(n))] + [int(i == k) for k in range(len(basis))]
            aug.append(row)
        aug_basis = howell_form(aug, q.ncols(n) + len(basis), spec.p, 1)
        vec = target + [0] * len(basis)
        # reduce target in the word block; the tail records the coefficients
        for r, c in zip(aug_basis.rows, aug_basis.pivots):
            if c >= q.ncols(n):
                break
            qv = vec[c] * pow(r[c], -1, spec.p) % spec.p
            if qv:
                vec = [(x - qv * y) % spec.p for x, y in zip(vec, r)]
        tail = vec[q.ncols(n):]
        return {basis[i]: (-c) % spec.p for i, c in enumerate(tail) if c % spec.p}

    return pbw_check(lambda w: nf(tuple(w)), lambda w: in_S(tuple(w)), order_key, words)


# --- standard instances -----------------------------------------------------------------

def exterior_datum(p=2):
    spec = RingSpec(p, 1, 1, 0)
    H = GeneratorBimodule(spec, ["x"])
    return QuadraticDatum(H, [{("x", "x"): 1}], name="exterior")


def free_datum(rank=2, p=2):
    spec = RingSpec(p, 1, 1, 0)
    H = GeneratorBimodule(spec, [f"x{i}" for i in range(rank)])
    return QuadraticDatum(H, [], name="tensor")


def gamma_datum(M=10, N=10):
    """Additive power operations at height 2, p = 2: three generators over Z/2^M[a]/(a^N)."""
    spec = RingSpec(2, M, N, 4)
    H = GeneratorBimodule(spec, ["Q_0", "Q_1", "Q_2"], {
        "Q_0": {"Q_0": [0, 0, 1], "Q_1": [0, -2], "Q_2": [6]},
        "Q_1": {"Q_0": [3], "Q_2": [0, 1]},
        "Q_2": {"Q_0": [0, -1], "Q_1": [3]},
    })
    rels = [
        {("Q_1", "Q_0"): 1, ("Q_2", "Q_1"): -2, ("Q_0", "Q_2"): 2},
        {("Q_2", "Q_0"): 1, ("Q_0", "Q_1"): -1, ("Q_0", "Q_2"): [0, -1], ("Q_1", "Q_2"): 2},
    ]
    return QuadraticDatum(H, rels, name="Gamma")


def gamma_dual_expected():
    """The seven spanning elements of R-perp, written in the dual's word order.

    A product Q^x Q^y of dual generators pairs with Q_y Q_x, so it is recorded
    here as the mirrored word (Q^y, Q^x).
    """
    def w(x, y):
        return (f"Q^{y}", f"Q^{x}")
    return [
        {w(0, 0): 1},
        {w(1, 1): 1},
        {w(2, 2): 1},
        {w(1, 0): 1, w(0, 2): 1},
        {w(1, 2): 1, w(0, 1): 2},
        {w(2, 1): 1, w(0, 2): -2},
        {w(2, 0): 1, w(0, 1): -2, w(0, 2): [0, 1]},
    ]


def gamma_cohomology_basis():
    """Mirrored words for 1, Q^0, Q^1, Q^2, Q^0 Q^1, Q^0 Q^2."""
    return {0: [()], 1: [("Q^0",), ("Q^1",), ("Q^2",)], 2: [("Q^1", "Q^0"), ("Q^2", "Q^0")], 3: []}


# the pinned non-Koszul instance: three generators over F_2, the sparsest
# relation pair found by search_non_koszul
NON_KOSZUL_RELATIONS = [[("x", "x")], [("x", "y"), ("y", "y")]]


def non_koszul_datum():
    spec = RingSpec(2, 1, 1, 0)
    H = GeneratorBimodule(spec, ["x", "y", "z"])
    rels = [{tuple(w): 1 for w in r} for r in NON_KOSZUL_RELATIONS]
    return QuadraticDatum(H, rels, name="non-Koszul")


def hilbert_defect(q: QuadraticDatum, n_max=5):
    """Coefficients of h_T(t) h_dual(-t) - 1; all zero for a Koszul algebra."""
    a = rank_profile(q, n_max)
    b = rank_profile(quadratic_dual(q), n_max)
    out = [sum((-1) ** i * a[k - i] * b[i] for i in range(k + 1)) for k in range(n_max + 1)]
    out[0] -= 1
    return out


def search_non_koszul(labels=("x", "y", "z"), max_terms=2):
    """Exhaustive search over pairs of F_2 relations with at most max_terms
    monomials each, sparsest first; returns (relations, report) of the first
    instance with bar homology off the diagonal in weight <= 4."""
    spec = RingSpec(2, 1, 1, 0)
    words = list(itertools.product(labels, repeat=2))
    shapes = [list(c) for k in range(1, max_terms + 1) for c in itertools.combinations(words, k)]
    pairs = sorted(itertools.combinations(shapes, 2), key=lambda rs: sum(map(len, rs)))
    for rels in pairs:
        q = QuadraticDatum(GeneratorBimodule(spec, labels), [{w: 1 for w in r} for r in rels])
        rep = koszulity_check(q, 4, 4)
        if not rep.passes:
            return [list(r) for r in rels], rep
    return None, None
