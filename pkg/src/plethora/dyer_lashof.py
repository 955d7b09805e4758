"""Dyer-Lashof operations: Adem normalization, excess, and admissible bases.

A word is a tuple of (eps, r) pairs read left to right, so the rightmost
operation is applied first. At p = 2 every eps is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .coeff import binom_conv


class WindowExceeded(LookupError):
    pass


def as_word(raw, p):
    """Accept ints (p=2 style) or (eps, r) pairs and return a canonical word."""
    out = []
    for x in raw:
        if isinstance(x, int):
            out.append((0, x))
        else:
            e, r = x
            if p == 2 and e:
                raise ValueError("eps must be 0 at p=2")
            out.append((int(e), int(r)))
    return tuple(out)


def op_degree(e, r, p):
    return r if p == 2 else 2 * r * (p - 1) - e


def word_degree(word, p):
    return sum(op_degree(e, r, p) for e, r in word)


def excess(word, p):
    if not word:
        return 0
    e1, r1 = word[0]
    rest = sum(op_degree(e, r, p) for e, r in word[1:])
    if p == 2:
        return r1 - rest
    return 2 * r1 - e1 - rest


def pair_admissible(left, right, p):
    (_, r1), (e2, r2) = left, right
    if p == 2:
        return r1 <= 2 * r2
    return r1 <= p * r2 - e2


def is_admissible(word, p):
    return all(pair_admissible(word[i], word[i + 1], p) for i in range(len(word) - 1))


def word_stats(word, p=2):
    """(degree, excess, admissible) of a word."""
    word = as_word(word, p)
    return word_degree(word, p), excess(word, p), is_admissible(word, p)


@lru_cache(maxsize=None)
def adem_pair(left, right, p):
    """Rewrite an inadmissible pair; returns a tuple of ((pair), coeff) terms."""
    (e1, r1), (e2, r2) = left, right
    s = r2
    terms = {}

    def add(w, c):
        c %= p
        if c:
            terms[w] = (terms.get(w, 0) + c) % p

    if p == 2:
        r = r1 - 2 * s - 1
        for i in range(r + 1):
            c = binom_conv(r - i - 1, i, 2, 1)
            if c:
                add(((0, 2 * s + i + 1), (0, r + s - i)), c)
    elif e2 == 0:
        # Q^{ps+r+1} Q^s and Q_1^{ps+r+1} Q^s
        r = r1 - p * s - 1
        for i in range(r + 1):
            c = (-1) ** (i + 1) * binom_conv((p - 1) * (r - i) - 1, i, p, 1)
            add(((e1, p * s + i + 1), (0, r + s - i)), c)
    elif e1 == 0:
        # Q^{ps+r} Q_1^s
        r = r1 - p * s
        for i in range(r + 1):
            c = (-1) ** i * binom_conv((p - 1) * (r - i), i, p, 1)
            add(((1, p * s + i), (0, r + s - i)), c)
            c = (-1) ** (i + 1) * binom_conv((p - 1) * (r - i) - 1, i, p, 1)
            add(((0, p * s + i), (1, r + s - i)), c)
    else:
        # Q_1^{ps+r} Q_1^s
        r = r1 - p * s
        for i in range(r + 1):
            c = (-1) ** (i + 1) * binom_conv((p - 1) * (r - i) - 1, i, p, 1)
            add(((1, p * s + i), (1, r + s - i)), c)
    return tuple((w, c) for w, c in terms.items() if c)


def _first_bad(word, p, rightmost):
    idx = range(len(word) - 2, -1, -1) if rightmost else range(len(word) - 1)
    for i in idx:
        if not pair_admissible(word[i], word[i + 1], p):
            return i
    return -1


@lru_cache(maxsize=200000)
def _normalize(word, p, rightmost):
    i = _first_bad(word, p, rightmost)
    if i < 0:
        return ((word, 1),)
    acc = {}
    for pair, c in adem_pair(word[i], word[i + 1], p):
        for w, c2 in _normalize(word[:i] + pair + word[i + 2:], p, rightmost):
            acc[w] = (acc.get(w, 0) + c * c2) % p
    return tuple(sorted((w, c) for w, c in acc.items() if c))


@dataclass(frozen=True)
class OperationElement:
    """An F_p-combination of admissible words."""

    p: int
    terms: tuple = ()

    @classmethod
    def from_dict(cls, p, d):
        return cls(p, tuple(sorted((w, c % p) for w, c in d.items() if c % p)))

    def as_dict(self):
        return dict(self.terms)

    def is_zero(self):
        return not self.terms

    def degree(self):
        degs = {word_degree(w, self.p) for w, _ in self.terms}
        if len(degs) > 1:
            raise ValueError("inhomogeneous element")
        return degs.pop() if degs else None

    def __add__(self, other):
        d = self.as_dict()
        for w, c in other.terms:
            d[w] = d.get(w, 0) + c
        return OperationElement.from_dict(self.p, d)

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(format_term(w, c, self.p) for w, c in self.terms)

    def to_json(self):
        return [{"word": word_to_json(w, self.p), "coeff": c} for w, c in self.terms]


def word_to_json(word, p):
    return [r for _, r in word] if p == 2 else [[e, r] for e, r in word]


def format_word(word, p):
    if not word:
        return "1"
    if p == 2:
        return " ".join(f"Q{r}" for _, r in word)
    return " ".join(f"Q{r}" if e == 0 else f"bQ{r}" for e, r in word)


def format_term(word, c, p):
    body = format_word(word, p)
    return body if c == 1 else f"{c} {body}"


def adem_normalize(word, p=2, strategy="left") -> OperationElement:
    """Rewrite to admissible form, repeatedly fixing the leftmost (or rightmost) bad pair."""
    word = as_word(word, p)
    terms = _normalize(word, p, strategy == "right")
    return OperationElement(p, tuple(sorted(terms)))


# --- enumeration ----------------------------------------------------------

def _entry_choices(p):
    return (0,) if p == 2 else (0, 1)


def _words_of_length(k, p, lo_entry, hi_entry):
    """All admissible words of length k with entries in [lo_entry, hi_entry]."""
    if k == 0:
        yield ()
        return

    def rec(suffix):
        if len(suffix) == k:
            yield suffix
            return
        right = suffix[0]
        for e in _entry_choices(p):
            for r in range(lo_entry, hi_entry + 1):
                if pair_admissible((e, r), right, p):
                    yield from rec(((e, r),) + suffix)

    for e in _entry_choices(p):
        for r in range(lo_entry, hi_entry + 1):
            yield from rec(((e, r),))


def _entry_bound(threshold, deg_lo, deg_hi, cap, p):
    if threshold >= 0:
        # excess >= 0 forces every operation degree to be nonnegative
        top = max(deg_hi, 0)
        return 0, top // (2 * (p - 1)) + 1 if p > 2 else top
    span = abs(deg_lo) + abs(deg_hi) + abs(threshold)
    b = span * 2 ** max(cap, 1) + 1
    return -b, b


def admissible_window(threshold, deg_lo, deg_hi, length_cap, p, strict=False):
    """Admissible words with excess >= threshold (> if strict) and degree in [deg_lo, deg_hi]."""
    lo, hi = _entry_bound(threshold, deg_lo, deg_hi, length_cap, p)
    out = []
    for k in range(length_cap + 1):
        for w in _words_of_length(k, p, lo, hi):
            d = word_degree(w, p)
            if not deg_lo <= d <= deg_hi:
                continue
            if w:
                e = excess(w, p)
                if e < threshold or (strict and e == threshold):
                    continue
            out.append(w)
    return sorted(out, key=lambda w: (len(w), w))


def free_basis_window(n, u, degree_window, length_cap, p=2):
    """Basis Q^I e_n of the u-unstable free module: I admissible, e(I) >= n + u.

    The window bounds the degree of Q^I e_n.
    """
    lo, hi = _window(degree_window)
    return admissible_window(n + u, lo - n, hi - n, length_cap, p)


def dl_generators(n, degree_window, length_cap, p=2):
    """Polynomial generators Q^I e_n of the free DL-ring: I admissible, e(I) > n.

    Here the window bounds the degree of the operation Q^I itself.
    """
    lo, hi = _window(degree_window)
    return admissible_window(n, lo, hi, length_cap, p, strict=True)


def _window(w):
    if isinstance(w, int):
        return w, w
    w = list(w)
    return min(w), max(w)


def satisfies_instability(word, n, u, p=2):
    """Every operation in Q^I e_n clears the u-unstable vanishing range."""
    deg = n
    for e, r in reversed(word):
        if p == 2:
            if r < deg + u:
                return False
        elif 2 * r - e < deg + u:
            return False
        deg += op_degree(e, r, p)
    return True


# --- module actions ---------------------------------------------------------

@dataclass
class FModuleData:
    """Finite module over the Dyer-Lashof algebra given by an action table.

    action maps (generator, (eps, r)) to a dict {generator: coeff}; any pair in
    `window` missing from the table acts by zero. Pairs below the instability
    range act by zero automatically.
    """

    p: int
    degrees: dict
    u: int = 0
    action: dict = field(default_factory=dict)
    window: object = None

    def vanishes(self, g, e, r):
        deg = self.degrees[g]
        if self.p == 2:
            return r < deg + self.u
        return 2 * r - e < deg + self.u

    def declared(self, g, e, r):
        if self.window is None:
            return True
        if callable(self.window):
            return self.window(g, e, r)
        return (g, (e, r)) in self.window or (e, r) in self.window

    def act(self, e, r, g):
        if self.vanishes(g, e, r):
            return {}
        if not self.declared(g, e, r):
            raise WindowExceeded(f"Q^{r}_{e} on {g} is outside the declared window")
        return dict(self.action.get((g, (e, r)), {}))

    def nonzero_ops(self, g):
        """The (eps, r) with a nonzero table entry on g."""
        return sorted(k for (h, k), v in self.action.items() if h == g and any(c % self.p for c in v.values()))


def apply_to_module(op, x, data: FModuleData):
    """Apply an OperationElement (or a single word) to a module element {gen: coeff}."""
    p = data.p
    if not isinstance(op, OperationElement):
        op = OperationElement(p, ((as_word(op, p), 1),))
    out = {}
    for word, c in op.terms:
        cur = dict(x)
        for e, r in reversed(word):
            nxt = {}
            for g, cg in cur.items():
                for h, ch in data.act(e, r, g).items():
                    nxt[h] = (nxt.get(h, 0) + cg * ch) % p
            cur = {g: v for g, v in nxt.items() if v}
            if not cur:
                break
        for g, v in cur.items():
            out[g] = (out.get(g, 0) + c * v) % p
    return {g: v for g, v in out.items() if v}


def free_module_data(n, u, degree_window, length_cap, p=2):
    """The free u-unstable module on e_n, truncated to a degree window, as FModuleData.

    Operations whose result would need words longer than length_cap are left
    undeclared, so querying them raises WindowExceeded.
    """
    lo, hi = _window(degree_window)
    basis = free_basis_window(n, u, (lo, hi), length_cap, p)
    bset = set(basis)
    degrees = {w: n + word_degree(w, p) for w in basis}
    action = {}
    blocked = set()
    for w in basis:
        for k in range(hi - degrees[w] + 1):
            for e in _entry_choices(p):
                if p == 2:
                    r = k
                elif (k + e) % (2 * (p - 1)):
                    continue
                else:
                    r = (k + e) // (2 * (p - 1))
                op = (e, r)
                if (r if p == 2 else 2 * r - e) < degrees[w] + u:
                    continue
                img = {}
                for v, c in adem_normalize((op,) + w, p).terms:
                    if v in bset:
                        img[v] = c
                    elif excess(v, p) >= n + u:
                        blocked.add((w, op))
                if img:
                    action[(w, op)] = img

    def declared(g, e, r):
        return degrees[g] + op_degree(e, r, p) <= hi and (g, (e, r)) not in blocked

    return FModuleData(p, degrees, u, action, window=declared)
