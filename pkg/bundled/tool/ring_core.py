# Licensed under the MIT License.
"""Exact arithmetic for the finite valuation rings Z/p^r and F_q[t]/(t^r).

Elements are plain integers in [0, q^r). For Z/p^r the integer is the residue
itself. For F_q[t]/(t^r) it is the little-endian base-q digit vector of the
coefficients of 1, t, ..., t^(r-1); every digit is an F_q element written as
the little-endian base-p coefficient vector of a polynomial in x reduced by
the field modulus.
"""
from __future__ import annotations

import enum
import functools
import operator
import re
from typing import Dict, List, Optional, Sequence, Tuple

import attrs
import numpy as np

from vr_utils import (
    CapacityError,
    ConfigError,
    InvalidElementError,
    NotInvertibleError,
    check_capacity,
)

RingElem = int

DEFAULT_ORDER_CAP = 10**6


class Family(enum.Enum):
    """Supported ring families."""

    ZPowerR = "ZPowerR"
    TruncatedPoly = "TruncatedPoly"


# **********************************************************
# Polynomials over F_p (coefficient lists, constant term first).
# **********************************************************
def is_prime(n: int) -> bool:
    """Trial division primality test."""
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_power(n: int) -> Tuple[int, int]:
    """Splits n = p^k, raising ValueError if n is not a prime power."""
    if n < 2:
        raise ValueError(f"{n} is not a prime power")
    p = next(d for d in range(2, n + 1) if n % d == 0)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    if n != 1:
        raise ValueError(f"{n * p**k} is not a prime power")
    return p, k


def _trim(poly: List[int]) -> List[int]:
    while poly and poly[-1] == 0:
        poly.pop()
    return poly


def poly_mod(num: Sequence[int], den: Sequence[int], p: int) -> List[int]:
    """Remainder of num by a nonzero den over F_p."""
    rem = _trim([c % p for c in num])
    den = _trim([c % p for c in den])
    lead_inv = pow(den[-1], -1, p)
    while len(rem) >= len(den):
        factor = rem[-1] * lead_inv % p
        shift = len(rem) - len(den)
        for i, c in enumerate(den):
            rem[shift + i] = (rem[shift + i] - factor * c) % p
        _trim(rem)
    return rem


def _monic_polys(degree: int, p: int):
    for low in range(p**degree):
        coeffs = []
        for _ in range(degree):
            low, c = divmod(low, p)
            coeffs.append(c)
        yield coeffs + [1]


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Exhaustive factor check: no monic factor of degree <= m/2 divides."""
    degree = len(modulus) - 1
    if degree < 1:
        return False
    for d in range(1, degree // 2 + 1):
        for factor in _monic_polys(d, p):
            if not poly_mod(modulus, factor, p):
                return False
    return True


def default_modulus(p: int, m: int) -> Tuple[int, ...]:
    """First monic irreducible polynomial of degree m in enumeration order."""
    for candidate in _monic_polys(m, p):
        if is_irreducible(candidate, p):
            return tuple(candidate)
    raise ValueError(f"no irreducible polynomial of degree {m} over F_{p}")


def format_poly(coeffs: Sequence[int], var: str) -> str:
    """Formats a polynomial, highest degree first, e.g. x^2+x+1."""
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if not c:
            continue
        if k == 0:
            terms.append(str(c))
        else:
            power = var if k == 1 else f"{var}^{k}"
            terms.append(power if c == 1 else f"{c}{power}")
    return "+".join(terms) if terms else "0"


_TERM_RE = re.compile(
    r"^(?P<coeff>\d+|\([^()]*\))?\*?(?:(?P<var>[a-z])(?:\^(?P<exp>\d+))?)?$"
)


def _split_terms(text: str) -> List[str]:
    terms, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "+" and depth == 0:
            terms.append(text[start:i])
            start = i + 1
    terms.append(text[start:])
    return terms


def parse_poly(text: str, var: str) -> Dict[int, str]:
    """Parses a sum of terms c*var^k into {k: coefficient text}."""
    result: Dict[int, str] = {}
    for term in _split_terms(text.replace(" ", "")):
        match = _TERM_RE.match(term)
        if not term or match is None:
            raise ValueError(f"cannot parse term '{term}' of '{text}'")
        if match["var"] is not None and match["var"] != var:
            raise ValueError(f"unexpected variable '{match['var']}' in '{text}'")
        coeff = match["coeff"] or "1"
        if match["var"] is None:
            if match["coeff"] is None:
                raise ValueError(f"empty term in '{text}'")
            degree = 0
        else:
            degree = int(match["exp"] or 1)
        if degree in result:
            raise ValueError(f"repeated degree {degree} in '{text}'")
        result[degree] = coeff
    return result


def _int_poly(text: str, var: str, p: int) -> List[int]:
    terms = parse_poly(text, var)
    coeffs = [0] * (max(terms) + 1)
    for degree, coeff in terms.items():
        if coeff.startswith("("):
            raise ValueError(f"nested coefficient in '{text}'")
        coeffs[degree] = int(coeff) % p
    return coeffs


# **********************************************************
# Rings.
# **********************************************************
def _check_ring(instance: "RingSpec", _attribute, _value) -> None:
    if not is_prime(instance.p):
        raise ValueError(f"p = {instance.p} is not prime")
    if instance.r < 1 or instance.m < 1:
        raise ValueError("length r and extension degree m must be >= 1")
    if instance.family is Family.ZPowerR and instance.m != 1:
        raise ValueError("Z/p^r has extension degree 1")
    if instance.m > 1:
        if len(instance.modulus) != instance.m + 1 or instance.modulus[-1] != 1:
            raise ValueError(f"modulus must be monic of degree {instance.m}")
        if not is_irreducible(instance.modulus, instance.p):
            raise ValueError(
                f"{format_poly(instance.modulus, 'x')} is reducible over F_{instance.p}"
            )
    order = instance.p ** (instance.m * instance.r)
    check_capacity("ring order", order, instance.order_cap)


@attrs.frozen(slots=False)
class RingSpec:
    """A finite valuation ring of order q^r."""

    family: Family
    p: int
    r: int
    m: int = 1
    modulus: Tuple[int, ...] = attrs.field(default=(), converter=tuple)
    order_cap: int = attrs.field(
        default=DEFAULT_ORDER_CAP, eq=False, validator=_check_ring
    )

    @classmethod
    def z_power(cls, p: int, r: int, order_cap: int = DEFAULT_ORDER_CAP) -> RingSpec:
        """Z/p^r."""
        return cls(Family.ZPowerR, p, r, order_cap=order_cap)

    @classmethod
    def truncated_poly(
        cls,
        p: int,
        r: int,
        m: int = 1,
        modulus: Optional[Sequence[int]] = None,
        order_cap: int = DEFAULT_ORDER_CAP,
    ) -> RingSpec:
        """F_{p^m}[t]/(t^r); the default field modulus is the first irreducible."""
        if m == 1:
            modulus = ()
        elif modulus is None:
            modulus = default_modulus(p, m)
        return cls(Family.TruncatedPoly, p, r, m, tuple(modulus), order_cap)

    @property
    def q(self) -> int:
        """Residue field size."""
        return self.p**self.m

    @property
    def order(self) -> int:
        return self.q**self.r

    @property
    def unit_count(self) -> int:
        return self.order - self.q ** (self.r - 1)

    @property
    def nonunit_count(self) -> int:
        return self.q ** (self.r - 1)

    @property
    def uniformizer(self) -> RingElem:
        """Generator of the maximal ideal: p, resp. t."""
        if self.family is Family.ZPowerR:
            return self.p % self.order
        return self.q if self.r > 1 else 0

    def __str__(self) -> str:
        return format_ring(self)

    # *****************************************************
    # Residue field F_q.
    # *****************************************************
    @functools.cached_property
    def _field(self) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[Tuple[int, ...], ...]]:
        p, q = self.p, self.q
        if self.m == 1:
            add = tuple(tuple((a + b) % p for b in range(q)) for a in range(q))
            mul = tuple(tuple(a * b % p for b in range(q)) for a in range(q))
            return add, mul

        def vec(a: int) -> List[int]:
            return [(a // p**i) % p for i in range(self.m)]

        def enc(coeffs: Sequence[int]) -> int:
            return sum((c % p) * p**i for i, c in enumerate(coeffs))

        add = tuple(
            tuple(enc([x + y for x, y in zip(vec(a), vec(b))]) for b in range(q))
            for a in range(q)
        )
        mul_rows = []
        for a in range(q):
            row = []
            va = vec(a)
            for b in range(q):
                vb = vec(b)
                prod = [0] * (2 * self.m - 1)
                for i, x in enumerate(va):
                    for j, y in enumerate(vb):
                        prod[i + j] += x * y
                row.append(enc(poly_mod(prod, self.modulus, p)))
            mul_rows.append(tuple(row))
        return add, tuple(mul_rows)

    def field_add(self, a: int, b: int) -> int:
        return self._field[0][a][b]

    def field_mul(self, a: int, b: int) -> int:
        return self._field[1][a][b]

    def field_neg(self, a: int) -> int:
        return self._field[0][a].index(0)

    def field_inverse(self, a: int) -> int:
        if a == 0:
            raise NotInvertibleError("0 has no inverse in the residue field")
        return self._field[1][a].index(1)

    def format_field_elem(self, a: int) -> str:
        if self.m == 1:
            return str(a)
        return format_poly([(a // self.p**i) % self.p for i in range(self.m)], "x")

    # *****************************************************
    # Element encoding.
    # *****************************************************
    def check(self, x: RingElem) -> RingElem:
        """Validates an element index."""
        try:
            x = operator.index(x)
        except TypeError:
            raise InvalidElementError(f"{x!r} is not an element index") from None
        if not 0 <= x < self.order:
            raise InvalidElementError(f"{x} is not an element of {self}")
        return x

    def digits(self, x: RingElem) -> List[int]:
        """Coefficients of 1, t, ..., t^(r-1) (TruncatedPoly) as F_q codes."""
        out = []
        for _ in range(self.r):
            x, d = divmod(x, self.q)
            out.append(d)
        return out

    def from_digits(self, digits: Sequence[int]) -> RingElem:
        return sum(d * self.q**i for i, d in enumerate(digits[: self.r]))

    # *****************************************************
    # Arithmetic.
    # *****************************************************
    def add(self, x: RingElem, y: RingElem) -> RingElem:
        x, y = self.check(x), self.check(y)
        if self.family is Family.ZPowerR:
            return (x + y) % self.order
        return self.from_digits(
            [self.field_add(a, b) for a, b in zip(self.digits(x), self.digits(y))]
        )

    def neg(self, x: RingElem) -> RingElem:
        x = self.check(x)
        if self.family is Family.ZPowerR:
            return -x % self.order
        return self.from_digits([self.field_neg(a) for a in self.digits(x)])

    def sub(self, x: RingElem, y: RingElem) -> RingElem:
        return self.add(x, self.neg(y))

    def mul(self, x: RingElem, y: RingElem) -> RingElem:
        x, y = self.check(x), self.check(y)
        if self.family is Family.ZPowerR:
            return x * y % self.order
        dx, dy = self.digits(x), self.digits(y)
        out = [0] * self.r
        for i, a in enumerate(dx):
            if not a:
                continue
            for j in range(self.r - i):
                out[i + j] = self.field_add(out[i + j], self.field_mul(a, dy[j]))
        return self.from_digits(out)

    def from_int(self, n: int) -> RingElem:
        """Image of the integer n, i.e. 1 + 1 + ... + 1 (n times)."""
        if self.family is Family.ZPowerR:
            return n % self.order
        return n % self.p

    def power(self, x: RingElem, n: int) -> RingElem:
        """x^n for n >= 0 by repeated squaring."""
        result, base = self.from_int(1), self.check(x)
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def residue(self, x: RingElem) -> int:
        """Image of x in the residue field F_q (as a field code)."""
        return self.check(x) % (self.p if self.family is Family.ZPowerR else self.q)

    def is_unit(self, x: RingElem) -> bool:
        return self.residue(x) != 0

    def inverse(self, x: RingElem) -> RingElem:
        """Newton-Hensel lift of the residue field inverse."""
        if not self.is_unit(x):
            raise NotInvertibleError(f"{self.format_elem(x)} is not a unit of {self}")
        if self.family is Family.ZPowerR:
            y = pow(x % self.p, -1, self.p)
        else:
            y = self.field_inverse(x % self.q)
        two = self.from_int(2)
        precision = 1
        while precision < self.r:
            y = self.mul(y, self.sub(two, self.mul(x, y)))
            precision *= 2
        return y

    def valuation(self, x: RingElem) -> int:
        """Largest k with x in m^k; the zero element has valuation r."""
        x = self.check(x)
        if x == 0:
            return self.r
        base = self.p if self.family is Family.ZPowerR else self.q
        k = 0
        while x % base == 0:
            x //= base
            k += 1
        return k

    # *****************************************************
    # Enumeration.
    # *****************************************************
    def elements(self) -> range:
        check_capacity(f"elements of {self}", self.order, self.order_cap)
        return range(self.order)

    def units(self) -> List[RingElem]:
        return [x for x in self.elements() if self.is_unit(x)]

    def nonunits(self) -> List[RingElem]:
        return [x for x in self.elements() if not self.is_unit(x)]

    def ideal_power(self, k: int) -> List[RingElem]:
        """pi^k R, sorted; it has q^(r-k) elements for 0 <= k <= r."""
        gen = self.power(self.uniformizer, k) if k else self.from_int(1)
        return sorted({self.mul(gen, y) for y in self.elements()})

    @functools.cached_property
    def _tables(self) -> Tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.order, dtype=np.int64)
        if self.family is Family.ZPowerR:
            add = (idx[:, None] + idx[None, :]) % self.order
            mul = (idx[:, None] * idx[None, :]) % self.order
            return add, mul
        fadd = np.array(self._field[0], dtype=np.int64)
        fmul = np.array(self._field[1], dtype=np.int64)
        digits = np.stack([(idx // self.q**i) % self.q for i in range(self.r)], axis=1)
        add = np.zeros((self.order, self.order), dtype=np.int64)
        mul = np.zeros((self.order, self.order), dtype=np.int64)
        for k in range(self.r):
            add += fadd[digits[:, k][:, None], digits[:, k][None, :]] * self.q**k
            coeff = np.zeros((self.order, self.order), dtype=np.int64)
            for i in range(k + 1):
                term = fmul[digits[:, i][:, None], digits[:, k - i][None, :]]
                coeff = fadd[coeff, term]
            mul += coeff * self.q**k
        return add, mul

    def operation_tables(
        self, cap: Optional[int] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Dense (add, mul) tables indexed by element, for vectorized kernels.

        Each table has order^2 entries; `cap` bounds the order and defaults to
        the ring's order_cap.
        """
        what = f"operation tables of {self}"
        check_capacity(what, self.order, self.order_cap if cap is None else cap)
        return self._tables

    # *****************************************************
    # Element syntax.
    # *****************************************************
    def format_elem(self, x: RingElem) -> str:
        x = self.check(x)
        if self.family is Family.ZPowerR:
            return str(x)
        terms = []
        for k, d in enumerate(self.digits(x)):
            if not d:
                continue
            coeff = self.format_field_elem(d)
            if self.m > 1 and not coeff.isdigit():
                coeff = f"({coeff})"
            if k == 0:
                terms.append(coeff)
            else:
                power = "t" if k == 1 else f"t^{k}"
                terms.append(power if coeff == "1" else f"{coeff}{power}")
        return "+".join(terms) if terms else "0"

    def parse_elem(self, text: str) -> RingElem:
        """Inverse of format_elem; powers of t at or above r vanish."""
        text = text.strip()
        if self.family is Family.ZPowerR:
            try:
                value = int(text)
            except ValueError:
                raise InvalidElementError(f"cannot parse '{text}' in {self}") from None
            if not 0 <= value < self.order:
                raise InvalidElementError(f"{value} is outside [0, {self.order})")
            return value
        try:
            terms = parse_poly(text, "t")
        except ValueError as err:
            raise InvalidElementError(str(err)) from None
        digits = [0] * self.r
        for degree, coeff in terms.items():
            if degree >= self.r:
                continue
            if coeff.startswith("("):
                field_coeffs = _int_poly(coeff[1:-1], "x", self.p)
                if len(field_coeffs) > self.m:
                    field_coeffs = poly_mod(field_coeffs, self.modulus, self.p)
                code = sum(c * self.p**i for i, c in enumerate(field_coeffs))
            else:
                code = int(coeff) % self.p
            digits[degree] = code
        return self.from_digits(digits)


# **********************************************************
# Ring spec syntax: Z/p^r and GF(q)[t]/t^r, GF(q:modulus)[t]/t^r.
# **********************************************************
Z_RE = re.compile(r"^Z/(?P<base>\d+)(?:\^(?P<exp>\d+))?$")
GF_RE = re.compile(
    r"^GF\((?P<base>\d+)(?:\^(?P<exp>\d+))?(?::(?P<modulus>[^)]*))?\)"
    r"\[t\]/t\^(?P<r>\d+)$"
)


def parse_ring(text: str, order_cap: int = DEFAULT_ORDER_CAP) -> RingSpec:
    """Parses a ring spec string, raising ConfigError on bad input."""
    spec = text.replace(" ", "")
    try:
        match = Z_RE.match(spec)
        if match:
            base = int(match["base"])
            if match["exp"] is not None:
                return RingSpec.z_power(base, int(match["exp"]), order_cap)
            p, r = prime_power(base)
            return RingSpec.z_power(p, r, order_cap)
        match = GF_RE.match(spec)
        if match:
            q = int(match["base"]) ** int(match["exp"] or 1)
            p, m = prime_power(q)
            modulus = None
            if match["modulus"] and m > 1:
                modulus = _int_poly(match["modulus"], "x", p)
                if len(modulus) != m + 1:
                    raise ValueError(f"modulus must have degree {m}")
            return RingSpec.truncated_poly(p, int(match["r"]), m, modulus, order_cap)
    except CapacityError:
        raise
    except ValueError as err:
        raise ConfigError(f"invalid ring spec '{text}': {err}") from None
    raise ConfigError(f"invalid ring spec '{text}': expected Z/p^r or GF(q)[t]/t^r")


def format_ring(ring: RingSpec) -> str:
    """Canonical spec string; parse_ring(format_ring(R)) == R."""
    if ring.family is Family.ZPowerR:
        return f"Z/{ring.p}^{ring.r}"
    if ring.m == 1 or tuple(ring.modulus) == default_modulus(ring.p, ring.m):
        return f"GF({ring.q})[t]/t^{ring.r}"
    return f"GF({ring.q}:{format_poly(ring.modulus, 'x')})[t]/t^{ring.r}"
