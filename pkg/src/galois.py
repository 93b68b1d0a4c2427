"""Finite-field arithmetic over GF(p^m) with table-driven scalar and numpy paths.

Elements are canonical integers 0..q-1. For extension fields the integer packs
the polynomial coefficients in base p (bit-packed when p = 2); for prime fields
it is the residue. Composition index i in 1..q-1 stands for alpha^(i-1), index
0 for the zero element.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NewType, Optional, Sequence, Tuple, Union

import numpy as np

from . import config
from .errors import ConfigError, check_feasible

logger = logging.getLogger(__name__)

FieldElement = NewType("FieldElement", int)

# (p, m) -> modulus packed in base p, highest coefficient included
DEFAULT_MODULI: Dict[Tuple[int, int], int] = {
    (2, 2): 0b111,                  # x^2 + x + 1
    (2, 3): 0b1011,                 # x^3 + x + 1
    (2, 4): 0b10011,                # x^4 + x + 1
    (2, 5): 0b100101,               # x^5 + x^2 + 1
    (2, 6): 0b1000011,              # x^6 + x + 1
    (2, 7): 0b10000011,             # x^7 + x + 1
    (2, 8): 0b100011101,            # x^8 + x^4 + x^3 + x^2 + 1
    (2, 16): 0b10001000000001011,   # x^16 + x^12 + x^3 + x + 1
}

# full q x q tables are kept up to this order
_TABLE_LIMIT = 256


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _digits(value: int, p: int, m: int) -> list:
    out = []
    for _ in range(m):
        out.append(value % p)
        value //= p
    return out


def _pack(digits: Sequence[int], p: int) -> int:
    value = 0
    for c in reversed(digits):
        value = value * p + c
    return value


def _poly_rem(num: list, den: list, p: int) -> list:
    """Remainder of num / den over GF(p); coefficient lists low -> high."""
    num = list(num)
    inv_lead = pow(den[-1], p - 2, p)
    while len(num) >= len(den) and any(num):
        if num[-1] == 0:
            num.pop()
            continue
        coef = num[-1] * inv_lead % p
        shift = len(num) - len(den)
        for i, c in enumerate(den):
            num[shift + i] = (num[shift + i] - coef * c) % p
        num.pop()
    while num and num[-1] == 0:
        num.pop()
    return num


def is_irreducible(coeffs: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..m//2."""
    m = len(coeffs) - 1
    if m < 1 or coeffs[-1] % p == 0:
        return False
    if m == 1:
        return True
    for d in range(1, m // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            divisor = list(low) + [1]
            if not _poly_rem(list(coeffs), divisor, p):
                return False
    return True


def _primitive_root(p: int) -> int:
    if p == 2:
        return 1
    order = p - 1
    factors = {f for f in range(2, order + 1) if order % f == 0 and is_prime(f)}
    for g in range(2, p):
        if all(pow(g, order // f, p) != 1 for f in factors):
            return g
    raise ConfigError(f"no primitive root modulo {p}", field="field")


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(q) with q = p^m. Immutable; all operations are pure."""
    p: int
    m: int
    modulus: Optional[int]
    alpha: int
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)
    add_table: Optional[np.ndarray] = field(default=None, repr=False)
    mul_table: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def q(self) -> int:
        return self.p ** self.m

    @property
    def modulus_coeffs(self) -> Optional[Tuple[int, ...]]:
        if self.modulus is None:
            return None
        return tuple(_digits(self.modulus, self.p, self.m + 1))

    def __eq__(self, other):
        if not isinstance(other, FieldSpec):
            return NotImplemented
        return (self.p, self.m, self.modulus) == (other.p, other.m, other.modulus)

    def __hash__(self):
        return hash((self.p, self.m, self.modulus))

    def __str__(self):
        return f"GF({self.q})"

    # ---- scalar arithmetic -------------------------------------------------

    def _check(self, x: int) -> int:
        if not 0 <= x < self.q:
            raise ValueError(f"{x} is not an element of {self}")
        return x

    def add(self, a: int, b: int) -> FieldElement:
        if self.p == 2:
            return FieldElement(a ^ b)
        if self.m == 1:
            return FieldElement((a + b) % self.p)
        return FieldElement(_digitwise(a, b, 1, self.p, self.m))

    def neg(self, a: int) -> FieldElement:
        if self.p == 2:
            return FieldElement(a)
        if self.m == 1:
            return FieldElement((-a) % self.p)
        return FieldElement(_digitwise(0, a, -1, self.p, self.m))

    def sub(self, a: int, b: int) -> FieldElement:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> FieldElement:
        if a == 0 or b == 0:
            return FieldElement(0)
        n = self.q - 1
        return FieldElement(int(self.exp_table[(int(self.log_table[a]) + int(self.log_table[b])) % n]))

    def inv(self, a: int) -> FieldElement:
        if a == 0:
            raise ZeroDivisionError(f"inverse of zero in {self}")
        n = self.q - 1
        return FieldElement(int(self.exp_table[(n - int(self.log_table[a])) % n]))

    def div(self, a: int, b: int) -> FieldElement:
        return self.mul(a, self.inv(b))

    def power(self, a: int, e: int) -> FieldElement:
        if e == 0:
            return FieldElement(1)
        if a == 0:
            return FieldElement(0)
        n = self.q - 1
        return FieldElement(int(self.exp_table[(int(self.log_table[a]) * e) % n]))

    def int_scale(self, n: int, x: int) -> FieldElement:
        """n-fold sum of x, i.e. (n mod p) * x."""
        if n < 0:
            raise ValueError("int_scale expects a nonnegative count")
        return self.mul(n % self.p, x)

    def trace(self, x: int) -> int:
        """Absolute trace into the prime subfield, returned as 0..p-1."""
        total = 0
        y = x
        for _ in range(self.m):
            total = self.add(total, y)
            y = self.power(y, self.p)
        return int(total)

    # ---- composition indexing ---------------------------------------------

    def element_of_index(self, i: int) -> FieldElement:
        if i == 0:
            return FieldElement(0)
        if not 1 <= i <= self.q - 1:
            raise ValueError(f"index {i} out of range for {self}")
        return FieldElement(int(self.exp_table[i - 1]))

    def index_of_element(self, x: int) -> int:
        self._check(x)
        return 0 if x == 0 else int(self.log_table[x]) + 1

    @property
    def index_array(self) -> np.ndarray:
        """Element value -> composition index, as a lookup array."""
        idx = self.log_table.copy() + 1
        idx[0] = 0
        return idx

    def nonzero(self) -> range:
        return range(1, self.q)

    # ---- numpy paths ------------------------------------------------------

    def add_vec(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self.m == 1:
            return (a + b) % self.p
        if self.add_table is not None:
            return self.add_table[a, b]
        return _digitwise(a, b, 1, self.p, self.m)

    def neg_vec(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return a
        if self.m == 1:
            return (-a) % self.p
        return _digitwise(np.zeros_like(a), a, -1, self.p, self.m)

    def sub_vec(self, a, b) -> np.ndarray:
        return self.add_vec(a, self.neg_vec(b))

    def mul_vec(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.mul_table is not None:
            return self.mul_table[a, b]
        n = self.q - 1
        prod = self.exp_table[(self.log_table[a] + self.log_table[b]) % n]
        return np.where((a == 0) | (b == 0), 0, prod)

    def matmul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return (a @ b) % self.p
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
        for i in range(a.shape[1]):
            out = self.add_vec(out, self.mul_vec(a[:, i:i + 1], b[i:i + 1, :]))
        return out


def _digitwise(a, b, sign: int, p: int, m: int):
    result = 0
    pw = 1
    for _ in range(m):
        da = (a // pw) % p
        db = (b // pw) % p
        result = result + ((da + sign * db) % p) * pw
        pw *= p
    return result


def _mul_by_x(value: int, p: int, m: int, mod_digits: Sequence[int]) -> int:
    digits = [0] + _digits(value, p, m)
    top = digits.pop()
    if top:
        digits = [(d - top * c) % p for d, c in zip(digits, mod_digits[:m])]
    return _pack(digits, p)


def _poly_mul(a: int, b: int, p: int, m: int, mod_digits: Sequence[int]) -> int:
    acc = [0] * m
    shifted = a
    for d in _digits(b, p, m):
        if d:
            acc = [(x + d * y) % p for x, y in zip(acc, _digits(shifted, p, m))]
        shifted = _mul_by_x(shifted, p, m, mod_digits)
    return _pack(acc, p)


def _power_cycle(step, n: int) -> Optional[List[int]]:
    """Powers 1, g, g^2, ... of the element behind `step`, or None when its order is below n."""
    powers: List[int] = []
    seen = set()
    value = 1
    for _ in range(n):
        if value in seen:
            return None
        seen.add(value)
        powers.append(value)
        value = step(value)
    return powers


def field_new(p: int, m: int = 1, modulus: Optional[Union[int, Sequence[int]]] = None) -> FieldSpec:
    """Build GF(p^m) from any irreducible modulus.

    alpha is x when x is primitive modulo the modulus, otherwise the least primitive
    element in packed order; prime fields use the least primitive root.
    """
    if not is_prime(p):
        raise ConfigError(f"field characteristic {p} is not prime", field="field")
    if m < 1:
        raise ConfigError(f"extension degree must be >= 1, got {m}", field="field")
    q = p ** m
    if q > 2 ** 16:
        raise ConfigError(f"field order {q} exceeds 2^16", field="field")

    packed = None
    if m > 1:
        if modulus is None:
            if (p, m) not in DEFAULT_MODULI:
                raise ConfigError(f"no default modulus for GF({p}^{m}); pass one explicitly", field="modulus")
            packed = DEFAULT_MODULI[(p, m)]
        elif isinstance(modulus, int):
            packed = modulus
        else:
            packed = _pack([int(c) % p for c in modulus], p)
        coeffs = _digits(packed, p, m + 2)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) - 1 != m:
            raise ConfigError(f"modulus has degree {len(coeffs) - 1}, expected {m}", field="modulus")
        if m <= 16 and not is_irreducible(coeffs, p):
            raise ConfigError(f"modulus {packed:#x} is reducible over GF({p})", field="modulus")
        # monic form
        lead_inv = pow(coeffs[-1], p - 2, p)
        coeffs = [c * lead_inv % p for c in coeffs]
        packed = _pack(coeffs, p)
        alpha = p  # residue class of x
    else:
        coeffs = None
        alpha = _primitive_root(p)

    n = q - 1
    if m > 1:
        powers = _power_cycle(lambda v: _mul_by_x(v, p, m, coeffs), n)
        if powers is None:
            for g in range(2, q):
                powers = _power_cycle(lambda v, g=g: _poly_mul(v, g, p, m, coeffs), n)
                if powers is not None:
                    alpha = g
                    break
            logger.info("x is not primitive modulo %#x; using alpha=%d", packed, alpha)
    else:
        powers = _power_cycle(lambda v: v * alpha % p, n)
    exp_table = np.zeros(2 * n, dtype=np.int64)
    log_table = np.full(q, -1, dtype=np.int64)
    for i, value in enumerate(powers):
        exp_table[i] = value
        log_table[value] = i
    exp_table[n:] = exp_table[:n]
    log_table[0] = 0  # placeholder; zero is masked by callers

    spec = FieldSpec(p=p, m=m, modulus=packed, alpha=alpha, exp_table=exp_table, log_table=log_table)
    if q <= _TABLE_LIMIT:
        elems = np.arange(q, dtype=np.int64)
        a, b = np.meshgrid(elems, elems, indexing="ij")
        object.__setattr__(spec, "add_table", spec.add_vec(a, b))
        object.__setattr__(spec, "mul_table", spec.mul_vec(a, b))
    logger.debug("built %s modulus=%s alpha=%d", spec, packed, alpha)
    return spec


def field_of_order(q: int, modulus: Optional[int] = None) -> FieldSpec:
    """Factor q = p^m and build the field."""
    if q < 2:
        raise ConfigError(f"field order must be >= 2, got {q}", field="field")
    for p in range(2, q + 1):
        if q % p == 0:
            break
    m = 0
    rest = q
    while rest % p == 0:
        rest //= p
        m += 1
    if rest != 1:
        raise ConfigError(f"{q} is not a prime power", field="field")
    return field_new(p, m, modulus)


def phi(l: int, field: FieldSpec) -> Fraction:
    """Probability that l i.i.d. uniform nonzero elements sum to zero."""
    return phi_q(l, field.q)


def phi_q(l: int, q: int) -> Fraction:
    if l < 0:
        raise ValueError("phi expects l >= 0")
    return Fraction(1, q) * (1 + Fraction((-1) ** l, 1) / Fraction(q - 1) ** (l - 1))


def zero_sum_count_brute(l: int, field: FieldSpec) -> Fraction:
    """Exhaustive counterpart of phi."""
    q = field.q
    check_feasible("zero-sum enumeration", (q - 1) ** l, config.BRUTE_LIMIT)
    if l == 0:
        return Fraction(1)
    hits = 0
    total = 0
    for combo in itertools.product(field.nonzero(), repeat=l):
        acc = 0
        for x in combo:
            acc = field.add(acc, x)
        hits += acc == 0
        total += 1
    return Fraction(hits, total)
