"""The big lambda algebra: coadmissible bases, rewriting at p = 2, and the
Koszul complex computing Ext over the Dyer-Lashof algebra in finite windows.

Words are tuples of (eps, r) pairs as in dyer_lashof; lambda_r is dual to
Q^(-r-1), so lambda_r carries a class of source degree a to degree a - r - 1.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from .coeff import binom_conv
from .dyer_lashof import (
    FModuleData, WindowExceeded, adem_normalize, excess,
)
from .linalg import FlatMatrix, howell_form, kernel_basis
from . import dyer_lashof as dl


def as_word(raw, p=2):
    return dl.as_word(raw, p)


def step(e, r, p):
    """Amount lambda_r^eps lowers the degree by."""
    return r + 1 if p == 2 else 2 * r * (p - 1) - e + 1


def word_shift(word, p):
    return sum(step(e, r, p) for e, r in word)


def pair_coadmissible(left, right, p):
    (e1, r1), (_, r2) = left, right
    if p == 2:
        return 2 * r1 >= r2
    return p * r1 - e1 >= r2


def is_coadmissible(word, p=2):
    return all(pair_coadmissible(word[i], word[i + 1], p) for i in range(len(word) - 1))


def format_lambda(word, p=2):
    if not word:
        return "1"
    if p == 2:
        return " ".join(f"L{r}" for _, r in word)
    return " ".join(f"L{r}" if e == 0 else f"bL{r}" for e, r in word)


# --- rewriting (p = 2) ------------------------------------------------------

@lru_cache(maxsize=None)
def _lambda_pair(x, y):
    # lambda_x lambda_{2x+b+1} = sum_j C(b-j-1, j) lambda_{x+b-j} lambda_{2x+1+j}
    b = y - 2 * x - 1
    out = []
    for j in range(b + 1):
        if binom_conv(b - j - 1, j, 2, 1):
            out.append(((0, x + b - j), (0, 2 * x + 1 + j)))
    return tuple(out)


@lru_cache(maxsize=200000)
def _rewrite(word):
    for i in range(len(word) - 1):
        if not pair_coadmissible(word[i], word[i + 1], 2):
            acc = {}
            for pair in _lambda_pair(word[i][1], word[i + 1][1]):
                for w in _rewrite(word[:i] + pair + word[i + 2:]):
                    acc[w] = acc.get(w, 0) ^ 1
            return tuple(sorted(w for w, c in acc.items() if c))
    return (word,)


def lambda_rewrite(word, p=2):
    """Coadmissible form of a lambda monomial, as a sorted tuple of words (F_2 coefficients)."""
    if p != 2:
        raise NotImplementedError("lambda rewriting is only implemented at p = 2")
    return _rewrite(as_word(word, 2))


def lambda_product(x, y):
    """Product of two F_2-combinations (iterables of words)."""
    acc = {}
    for u in x:
        for v in y:
            for w in _rewrite(tuple(u) + tuple(v)):
                acc[w] = acc.get(w, 0) ^ 1
    return tuple(sorted(w for w, c in acc.items() if c))


# --- enumeration ------------------------------------------------------------

def _choices(p):
    return (0,) if p == 2 else (0, 1)


def _head_value(e, r, p):
    return r if p == 2 else 2 * r - e


def coadmissible_words(n, p, head_bound, total_shift):
    """Coadmissible words of length n whose head satisfies r_1 < head_bound
    (2r_1 - eps_1 < head_bound at odd p) and whose degree shift is total_shift."""
    if n == 0:
        return [()] if total_shift == 0 else []
    # largest head entry allowed
    if p == 2:
        top = [head_bound - 1]
    else:
        top = [(head_bound) // 2]  # eps = 1 admits 2r - 1 < B
    upper = [top[0]]
    for _ in range(n - 1):
        upper.append(2 * upper[-1] if p == 2 else p * upper[-1])
    max_step = [step(0, u, p) for u in upper]
    out = []

    def lowest_r(needed):
        # smallest r whose step can reach `needed`
        if p == 2:
            return needed - 1
        return (needed - 1) // (2 * (p - 1))

    def rec(prefix, remaining):
        i = len(prefix)
        if i == n:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        rest_max = sum(max_step[i + 1:])
        hi = upper[i] if i == 0 else min(upper[i], 2 * prefix[-1][1] if p == 2 else p * prefix[-1][1] - prefix[-1][0])
        lo = lowest_r(remaining - rest_max)
        for r in range(hi, lo - 1, -1):
            for e in _choices(p):
                cand = (e, r)
                if i == 0 and _head_value(e, r, p) >= head_bound:
                    continue
                if i > 0 and not pair_coadmissible(prefix[-1], cand, p):
                    continue
                rec(prefix + [cand], remaining - step(e, r, p))

    rec([], total_shift)
    return sorted(out)


def ext_basis_source(n, a, b, p=2, u=0):
    """Basis of Ext^n(e_a, e_b): coadmissible words with r_1 < -a - u landing in degree b."""
    return coadmissible_words(n, p, -a - u, a - b)


def ext_basis_target(n, a, window, p=2):
    """Basis words of H*(F)(e_a) from the second characterization, per source degree.

    window is an iterable or (lo, hi) pair of source degrees c; the head
    inequality 2r_1 + r_2 + ... + r_n + n < -a is imposed directly on each word.
    Returns {c: [words]}.
    """
    lo, hi = (min(window), max(window)) if not isinstance(window, int) else (window, window)
    out = {}
    for c in range(lo, hi + 1):
        T = c - a
        # the inequality bounds the head once the total is fixed
        cands = coadmissible_words(n, p, _target_head_bound(n, a, T, p), T)
        words = [w for w in cands if target_inequality(w, a, p)]
        out[c] = words
    return out


def _target_head_bound(n, a, T, p):
    # loose head bound implied by the inequality (checked exactly afterwards)
    return -a - T + 1 + 2 * n


def target_inequality(word, a, p=2):
    n = len(word)
    if n == 0:
        return True
    if p == 2:
        return 2 * word[0][1] + sum(r for _, r in word[1:]) + n < -a
    e1, r1 = word[0]
    total = 2 * (p * r1 - e1) + sum(2 * r * (p - 1) - e for e, r in word[1:])
    return total + n < -a


def unstable_restrict(basis):
    """Keep only words with all entries nonnegative."""
    return [w for w in basis if all(r >= 0 for _, r in w)]


# --- the Koszul complex in a window ------------------------------------------

@dataclass
class LambdaComplexWindow:
    """Basis lists and F_2 differential matrices per bidegree (n, t).

    A basis element is (word, m) with internal degree t = a - shift(word) - |m|.
    """

    coefficients: FModuleData
    a: int
    n_max: int
    t_window: tuple
    basis: dict = field(default_factory=dict)
    index: dict = field(default_factory=dict)
    diff: dict = field(default_factory=dict)
    edge: set = field(default_factory=set)

    def head_bound(self):
        return -self.a - self.coefficients.u

    def dims(self):
        return {k: len(v) for k, v in self.basis.items()}


def _lambda_basis(data: FModuleData, a, n, t):
    out = []
    for m, deg in sorted(data.degrees.items(), key=lambda kv: repr(kv[0])):
        shift = a - t - deg
        for w in coadmissible_words(n, data.p, -a - data.u, shift):
            out.append((w, m))
    return out


def _coefficient_terms(data: FModuleData, m):
    """All (r, Q^r m) with Q^r m possibly nonzero; raises WindowExceeded at an undeclared edge."""
    if data.window is None:
        ops = data.nonzero_ops(m)
        return [(r, data.act(e, r, m)) for e, r in ops]
    out = []
    deg = data.degrees[m]
    top = max(data.degrees.values())
    for r in range(deg + data.u, top - deg + 1):
        img = data.act(0, r, m)
        if img:
            out.append((r, img))
    return out


def big_lambda_differential(x, data: FModuleData, a):
    """delta(sum lambda_I (x) m) = sum lambda_I lambda_{-r-1} (x) Q^r(m), rewritten.

    x is a dict {(word, m): 1}; terms whose head leaves the basis range vanish.
    """
    if data.p != 2:
        raise NotImplementedError("the lambda differential is implemented at p = 2")
    bound = -a - data.u
    out = {}
    for (word, m), c in x.items():
        if not c % 2:
            continue
        for r, img in _coefficient_terms(data, m):
            for w in _rewrite(tuple(word) + ((0, -r - 1),)):
                if w and w[0][1] >= bound:
                    continue
                for h, ch in img.items():
                    if ch % 2:
                        key = (w, h)
                        out[key] = out.get(key, 0) ^ 1
    return {k: 1 for k, v in out.items() if v}


def build_window(data: FModuleData, a, n_max, t_window):
    lo, hi = t_window
    win = LambdaComplexWindow(data, a, n_max, (lo, hi))
    for n in range(n_max + 1):
        for t in range(lo, hi + 1):
            b = _lambda_basis(data, a, n, t)
            win.basis[(n, t)] = b
            win.index[(n, t)] = {x: i for i, x in enumerate(b)}
    for n in range(n_max):
        for t in range(lo, hi + 1):
            rows = []
            tgt = win.index[(n + 1, t)]
            for x in win.basis[(n, t)]:
                row = [0] * len(tgt)
                try:
                    img = big_lambda_differential({x: 1}, data, a)
                except WindowExceeded:
                    win.edge.add((n, t))
                    img = {}
                for key in img:
                    row[tgt[key]] ^= 1
                rows.append(row)
            win.diff[(n, t)] = rows
    return win


def _rank_f2(rows, ncols):
    if not rows or not ncols:
        return 0
    return len(howell_form(rows, ncols, 2, 1))


def delta_squared_zero(win: LambdaComplexWindow) -> bool:
    for (n, t), D in win.diff.items():
        E = win.diff.get((n + 1, t))
        if E is None or not D or not E:
            continue
        for row in D:
            acc = [0] * len(win.basis[(n + 2, t)])
            for j, bit in enumerate(row):
                if bit:
                    acc = [x ^ y for x, y in zip(acc, E[j])]
            if any(acc):
                return False
    return True


def random_delta_squared(win: LambdaComplexWindow, count=200, seed=0) -> bool:
    """delta^2 = 0 on random elements (applied directly, not through matrices)."""
    rng = random.Random(seed)
    keys = [k for k in win.basis if k[0] + 2 <= win.n_max and win.basis[k]]
    data = win.coefficients
    for _ in range(count):
        if not keys:
            return True
        n, t = rng.choice(keys)
        elems = win.basis[(n, t)]
        x = {e: 1 for e in elems if rng.random() < 0.5} or {elems[0]: 1}
        try:
            y = big_lambda_differential(big_lambda_differential(x, data, win.a), data, win.a)
        except WindowExceeded:
            continue
        if y:
            return False
    return True


def ext_over_F_window(data: FModuleData, a, n_max, t_window):
    """Homology of the window complex over F_2: {(n, t): dim}, plus unreliable bidegrees."""
    win = build_window(data, a, n_max + 1, t_window)
    dims = {}
    reps = {}
    unreliable = set()
    for n in range(n_max + 1):
        for t in range(t_window[0], t_window[1] + 1):
            B = win.basis[(n, t)]
            D = win.diff.get((n, t), [])
            ncols = len(win.basis.get((n + 1, t), []))
            if B and ncols:
                K = kernel_basis(FlatMatrix.from_rows(D, ncols, 2, 1))
                ker = len(K)
                ker_rows = K.rows
            else:
                ker = len(B)
                ker_rows = tuple(tuple(int(i == j) for j in range(len(B))) for i in range(len(B)))
            prev = win.diff.get((n - 1, t), []) if n > 0 else []
            im = _rank_f2(prev, len(B)) if prev else 0
            dims[(n, t)] = ker - im
            reps[(n, t)] = [[B[j] for j, bit in enumerate(r) if bit] for r in ker_rows][: ker - im] if ker - im else []
            if (n, t) in win.edge or (n - 1, t) in win.edge:
                unreliable.add((n, t))
    return dims, reps, unreliable


def trivial_module(p, degrees, u=0):
    """All operations act by zero."""
    return FModuleData(p, dict(degrees), u, {}, window=None)


def unit_module(p=2):
    """F_p in degree 0 with Q^0 acting as the identity."""
    return FModuleData(p, {"m": 0}, 0, {("m", (0, 0)): {"m": 1}}, window=None)


# --- cobar oracle over the free unstable modules -----------------------------

def _bar_cells(a, u, n, weight, t, p=2):
    """Bar cells (I_1 | ... | I_n) e_a of total length `weight` and degree t."""
    out = []

    def rec(blocks, deg, wleft, k):
        if k == 0:
            if wleft == 0 and deg == t:
                out.append(tuple(blocks))
            return
        for L in range(1, wleft - (k - 1) + 1):
            for w in dl.admissible_window(deg + u, t - deg - 10 * L - 40, t - deg, L, p):
                if len(w) != L:
                    continue
                rec([w] + blocks, deg + dl.word_degree(w, p), wleft - L, k - 1)

    rec([], a, weight, n)
    return out


def cobar_ext_dims(a, u, weight_max, t_window, p=2):
    """Ext^n[m] in internal degree t for the trivial module e_a, from the bar complex.

    Only valid for u + a >= 0 where the cells are finite (all entries nonnegative).
    """
    if p != 2:
        raise NotImplementedError
    dims = {}
    for t in range(t_window[0], t_window[1] + 1):
        for m in range(1, weight_max + 1):
            cells = {n: _bar_cells(a, u, n, m, t, p) for n in range(1, m + 1)}
            idx = {n: {c: i for i, c in enumerate(cells[n])} for n in cells}
            ranks = {}
            for n in range(2, m + 1):
                rows = []
                for c in cells[n]:
                    row = [0] * len(cells[n - 1])
                    # deg of the module each block acts on
                    for i in range(n - 1):
                        merged = c[i] + c[i + 1]
                        below = a + sum(dl.word_degree(b, p) for b in c[i + 2:])
                        for w, coef in adem_normalize(merged, p).terms:
                            if excess(w, p) < below + u:
                                continue
                            key = c[:i] + (w,) + c[i + 2:]
                            if key in idx[n - 1]:
                                row[idx[n - 1][key]] ^= 1
                    rows.append(row)
                ranks[n] = _rank_f2(rows, len(cells[n - 1])) if rows and cells[n - 1] else 0
            for n in range(1, m + 1):
                dim = len(cells[n]) - ranks.get(n, 0) - ranks.get(n + 1, 0)
                dims[(n, m, t)] = dim
    return dims
