"""Exact arithmetic in Z/p^M and in the truncated ring (Z/p^M)[a]/(a^N)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from sympy import isprime

DEFAULT_M = 12
DEFAULT_N = 12
DEFAULT_SLACK = 4


class NonUnit(ArithmeticError):
    pass


class NotDivisible(ArithmeticError):
    pass


@dataclass(frozen=True)
class RingSpec:
    p: int = 2
    M: int = DEFAULT_M
    N: int = DEFAULT_N
    slack: int = DEFAULT_SLACK

    def __post_init__(self):
        if not isprime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.M < 1 or self.N < 1 or self.slack < 0:
            raise ValueError(f"bad precision M={self.M} N={self.N} slack={self.slack}")

    @property
    def modulus(self) -> int:
        return self.p ** self.M

    def with_(self, **kw) -> "RingSpec":
        d = {"p": self.p, "M": self.M, "N": self.N, "slack": self.slack}
        d.update(kw)
        return RingSpec(**d)

    def lifted(self) -> "RingSpec":
        """Same ring carried at the internal precision M + slack."""
        return self.with_(M=self.M + self.slack)

    def base(self) -> "RingSpec":
        """The ungraded base Z/p^M (N forced to 1)."""
        return self.with_(N=1)

    def to_json(self) -> dict:
        return {"p": self.p, "M": self.M, "N": self.N, "slack": self.slack}

    @classmethod
    def from_json(cls, obj) -> "RingSpec":
        return cls(int(obj["p"]), int(obj["M"]), int(obj["N"]), int(obj.get("slack", DEFAULT_SLACK)))


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def binom_conv(n: int, m: int, p: int, M: int) -> int:
    """Binomial coefficient mod p^M, zero unless 0 <= m <= n."""
    if m < 0 or m > n:
        return 0
    return math.comb(n, m) % (p ** M)


def _mul_trunc(x, y, N, mod):
    out = [0] * N
    for i, xi in enumerate(x):
        if xi:
            for j in range(N - i):
                yj = y[j]
                if yj:
                    out[i + j] += xi * yj
    return tuple(c % mod for c in out)


class TruncScalar:
    """Element of (Z/p^M)[a]/(a^N); coeffs[j] is the coefficient of a^j."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec: RingSpec, coeffs=()):
        mod = spec.modulus
        c = [int(v) % mod for v in list(coeffs)[: spec.N]]
        c += [0] * (spec.N - len(c))
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, name, value):
        raise AttributeError("TruncScalar is immutable")

    @classmethod
    def const(cls, spec, n: int) -> "TruncScalar":
        return cls(spec, [n])

    @classmethod
    def gen(cls, spec) -> "TruncScalar":
        """The variable a."""
        return cls(spec, [0, 1])

    @classmethod
    def zero(cls, spec):
        return cls(spec, [])

    @classmethod
    def one(cls, spec):
        return cls(spec, [1])

    def _coerce(self, other):
        if isinstance(other, TruncScalar):
            if other.spec.p != self.spec.p:
                raise ValueError("mixed primes")
            if other.spec != self.spec:
                return other.reduce_to(self.spec)
            return other
        if isinstance(other, int):
            return TruncScalar(self.spec, [other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncScalar(self.spec, [x + y for x, y in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return TruncScalar(self.spec, [-x for x in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncScalar(self.spec, [x - y for x, y in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return TruncScalar(self.spec, [x * other for x in self.coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncScalar(self.spec, _mul_trunc(self.coeffs, other.coeffs, self.spec.N, self.spec.modulus))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return trunc_invert(self) ** (-k)
        out = TruncScalar.one(self.spec)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = TruncScalar(self.spec, [other])
        if not isinstance(other, TruncScalar):
            return NotImplemented
        return self.spec == other.spec and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.spec, self.coeffs))

    def __bool__(self):
        return any(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.spec.p != 0

    def reduce_to(self, spec: RingSpec) -> "TruncScalar":
        """Reduce (or zero-extend) to another precision of the same prime."""
        if spec.p != self.spec.p:
            raise ValueError("mixed primes")
        return TruncScalar(spec, self.coeffs)

    def signed_coeffs(self):
        """Coefficients as symmetric residues in (-p^M/2, p^M/2]."""
        mod = self.spec.modulus
        return [c - mod if c > mod // 2 else c for c in self.coeffs]

    def degree(self) -> int:
        for j in range(self.spec.N - 1, -1, -1):
            if self.coeffs[j]:
                return j
        return -1

    def to_json(self):
        return [str(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, spec, arr):
        return cls(spec, [int(x) for x in arr])

    def __repr__(self):
        return f"TruncScalar({format_poly(self)})"

    def __str__(self):
        return format_poly(self)


def format_poly(x: TruncScalar, var: str = "a") -> str:
    """Human-readable form using symmetric residues."""
    terms = []
    for j, c in enumerate(x.signed_coeffs()):
        if c == 0:
            continue
        mon = "" if j == 0 else (var if j == 1 else f"{var}^{j}")
        if mon == "":
            body = str(abs(c))
        elif abs(c) == 1:
            body = mon
        else:
            body = f"{abs(c)}{mon}"
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


@lru_cache(maxsize=None)
def _inv_mod(u: int, mod: int) -> int:
    return pow(u, -1, mod)


def trunc_invert(x: TruncScalar) -> TruncScalar:
    """Inverse of a unit by recursive solve on coefficients."""
    spec = x.spec
    mod = spec.modulus
    c = x.coeffs
    if c[0] % spec.p == 0:
        raise NonUnit(f"{format_poly(x)} is not a unit")
    inv0 = _inv_mod(c[0], mod)
    y = [inv0] + [0] * (spec.N - 1)
    for k in range(1, spec.N):
        s = sum(c[i] * y[k - i] for i in range(1, k + 1))
        y[k] = (-s * inv0) % mod
    return TruncScalar(spec, y)


def exact_divide(x: TruncScalar, m: int, target: RingSpec | None = None) -> TruncScalar:
    """Divide x (carried at M + slack) by the integer m, landing at precision M.

    Raises NotDivisible unless every coefficient is divisible by p^v_p(m).
    """
    if m == 0:
        raise ZeroDivisionError("division by 0")
    p = x.spec.p
    if target is None:
        target = x.spec.with_(M=max(1, x.spec.M - x.spec.slack))
    v = valuation(m, p)
    if target.M + v > x.spec.M:
        raise NotDivisible(f"slack too small to divide by {m}")
    pv = p ** v
    unit = m // pv
    mod_hi = x.spec.modulus
    out = []
    for c in x.coeffs[: target.N]:
        if c % pv:
            raise NotDivisible(f"coefficient {c} not divisible by {pv}")
        out.append(c // pv)
    # c // pv is determined mod p^(M+slack-v), which covers the target precision
    uinv = _inv_mod(unit % mod_hi, mod_hi)
    return TruncScalar(target, [c * uinv for c in out])
