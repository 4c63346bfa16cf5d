# ========================================================================
#
# Imports
#
# ========================================================================
from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd
from mpmath import iv
from sympy import Matrix, divisors, primefactors, totient

from mlbias.utilities import InputError, PrecisionError

START_BITS = 53
MAX_BITS = 256


# ========================================================================
#
# Polynomial helpers (integer coefficients, constant term first)
#
# ========================================================================
def _divmod_monic(num, den):
    num = list(num)
    dd = len(den) - 1
    if len(num) <= dd:
        return [0], num + [0] * (dd - len(num))
    quot = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c:
            quot[i - dd] = c
            for j, b in enumerate(den):
                num[i - dd + j] -= c * b
    return quot, num[:dd]


# ========================================================================
@lru_cache(maxsize=None)
def cyclotomic_polynomial(N):
    """The N-th cyclotomic polynomial by exact division of x^N - 1.

    :param N: level, N ≥ 1
    :type N: int
    :returns: integer coefficients, constant term first
    :rtype: tuple
    """
    if N < 1:
        raise InputError(f"cyclotomic level must be positive, got {N}")
    poly = [-1] + [0] * (N - 1) + [1]
    for d in divisors(N)[:-1]:
        poly, rem = _divmod_monic(poly, cyclotomic_polynomial(d))
        assert not any(rem)
    return tuple(poly)


# ========================================================================
def _reduce(poly, N):
    _, rem = _divmod_monic(poly, cyclotomic_polynomial(N))
    return rem


# ========================================================================
def _lift(coeffs, N, L):
    """Rewrite a level-N coefficient vector at level L (N divides L)"""
    step = L // N
    poly = [0] * ((len(coeffs) - 1) * step + 1)
    for j, c in enumerate(coeffs):
        poly[j * step] = c
    return _reduce(poly, L)


# ========================================================================
def _to_fraction(x):
    return Fraction(int(x.p), int(x.q))


# ========================================================================
@lru_cache(maxsize=None)
def _descent_data(N, p):
    """Embedding of level N/p into level N with a left inverse on pivot rows"""
    M = N // p
    n, m = int(totient(N)), int(totient(M))
    columns = [_lift([0] * u + [1], M, N) for u in range(m)]
    E = Matrix(n, m, lambda i, j: columns[j][i])
    _, pivots = E.T.rref()
    pivots = list(pivots)
    inverse = E.extract(pivots, list(range(m))).inv()
    inverse = [[_to_fraction(inverse[i, j]) for j in range(m)] for i in range(m)]
    return pivots, inverse, columns


# ========================================================================
def _try_descend(coeffs, N, p):
    pivots, inverse, columns = _descent_data(N, p)
    solution = [
        sum((row[i] * coeffs[r] for i, r in enumerate(pivots)), Fraction(0))
        for row in inverse
    ]
    for r, c in enumerate(coeffs):
        if sum(col[r] * s for col, s in zip(columns, solution)) != c:
            return None
    return solution


# ========================================================================
#
# Classes
#
# ========================================================================
class TorusValue:
    """An element of R/Z of finite order, stored as a reduced fraction in [0, 1)"""

    __slots__ = ("num", "den")

    def __init__(self, num=0, den=1):
        value = Fraction(num, den) % 1
        self.num = value.numerator
        self.den = value.denominator

    def __repr__(self):
        return f"TorusValue({self.num}, {self.den})"

    def __str__(self):
        return str(self.to_fraction())

    def __eq__(self, other):
        if isinstance(other, TorusValue):
            return self.num == other.num and self.den == other.den
        return NotImplemented

    def __hash__(self):
        return hash(("TorusValue", self.num, self.den))

    def __add__(self, other):
        return TorusValue(self.to_fraction() + other.to_fraction())

    def __neg__(self):
        return TorusValue(-self.to_fraction())

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, n):
        return TorusValue(self.to_fraction() * int(n))

    __rmul__ = __mul__

    def to_fraction(self):
        return Fraction(self.num, self.den)

    def order(self):
        return self.den

    def is_zero(self):
        return self.num == 0

    @classmethod
    def parse(cls, text):
        try:
            return cls(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError):
            raise InputError(f"'{text}' is not a fraction literal a/b")


# ========================================================================
class Enclosure:
    """Certified complex enclosure: a real and an imaginary interval"""

    def __init__(self, real, imag, prec):
        self.real = real
        self.imag = imag
        self.prec = prec

    def __repr__(self):
        return f"Enclosure({self.center}, radius={self.radius:.3e}, prec={self.prec})"

    def __str__(self):
        c = self.center
        return f"{c.real:.15f}{c.imag:+.15f}i ± {self.radius:.1e}"

    @property
    def center(self):
        return complex(float(self.real.mid), float(self.imag.mid))

    @property
    def radius(self):
        c = self.center
        half = (float(self.real.delta) + float(self.imag.delta)) / 2
        return half + (abs(c.real) + abs(c.imag) + 1e-300) * 2.0**-52

    def contains(self, z):
        return (self.real.a <= z.real <= self.real.b) and (
            self.imag.a <= z.imag <= self.imag.b
        )

    def disjoint(self, other):
        return (
            self.real.b < other.real.a
            or other.real.b < self.real.a
            or self.imag.b < other.imag.a
            or other.imag.b < self.imag.a
        )


# ========================================================================
class CycloValue:
    """An element of Q(ζ_N): integer power-basis coordinates over a denominator.

    The stored form is canonical: coordinates are reduced modulo the N-th
    cyclotomic polynomial at the smallest level containing the value, and
    gcd(coeffs, den) = 1 with den > 0. Equality is therefore a comparison of
    (level, coeffs, den).
    """

    __slots__ = ("level", "coeffs", "den")

    def __init__(self, level, coeffs, den=1):
        if level < 1 or den == 0:
            raise InputError(f"invalid cyclotomic value at level {level}, den {den}")
        coeffs = _reduce([int(c) for c in coeffs] or [0], level)
        den = int(den)
        scaled = None
        descended = True
        while descended and level > 1:
            descended = False
            for p in primefactors(level):
                scaled = _try_descend(coeffs, level, p)
                if scaled is not None:
                    lcd = reduce(
                        lambda a, b: a * b // gcd(a, b),
                        (s.denominator for s in scaled),
                        1,
                    )
                    coeffs = [int(s * lcd) for s in scaled]
                    den *= lcd
                    level //= p
                    descended = True
                    break
        if den < 0:
            coeffs, den = [-c for c in coeffs], -den
        g = reduce(gcd, coeffs, den)
        if not any(coeffs):
            level, coeffs, den = 1, [0], 1
        elif g > 1:
            coeffs, den = [c // g for c in coeffs], den // g
        self.level = level
        self.coeffs = tuple(coeffs)
        self.den = den

    def __repr__(self):
        return f"CycloValue({self.level}, {list(self.coeffs)}, {self.den})"

    def __str__(self):
        if self.is_rational():
            return str(self.to_fraction())
        coeffs = ",".join(str(c) for c in self.coeffs)
        return f"cyclo({self.level};{coeffs};{self.den})"

    def key(self):
        return (self.level, self.coeffs, self.den)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(("CycloValue",) + self.key())

    # --------------------------------------------------------------------
    @classmethod
    def from_rational(cls, r):
        r = Fraction(r)
        return cls(1, [r.numerator], r.denominator)

    @classmethod
    def root_of_unity(cls, k, N):
        """ζ_N^k"""
        return cls(N, [0] * (k % N) + [1])

    @classmethod
    def from_counts(cls, counts, den=1):
        """Σ_r counts[r] ζ_N^r / den with N = len(counts)"""
        return cls(len(counts), [int(c) for c in counts], den)

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, CycloValue):
            return other
        if isinstance(other, (int, Fraction)):
            return cls.from_rational(other)
        return None

    def _at(self, L):
        return _lift(list(self.coeffs), self.level, L)

    # --------------------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        L = self.level * other.level // gcd(self.level, other.level)
        a, b = self._at(L), other._at(L)
        return CycloValue(
            L,
            [x * other.den + y * self.den for x, y in zip(a, b)],
            self.den * other.den,
        )

    __radd__ = __add__

    def __neg__(self):
        return CycloValue(self.level, [-c for c in self.coeffs], self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        L = self.level * other.level // gcd(self.level, other.level)
        a, b = self._at(L), other._at(L)
        poly = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    poly[i + j] += x * y
        return CycloValue(L, poly, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, n):
        n = Fraction(n)
        return CycloValue(self.level, [c * n.denominator for c in self.coeffs], self.den * n.numerator)

    def __pow__(self, n):
        """Integer power; negative exponents need a rational nonzero |z|^2"""
        n = int(n)
        base = self
        if n < 0:
            norm = self.abs_sq()
            if norm == 0 or not norm.is_rational():
                raise InputError(f"cannot invert {self}: |z|^2 is not a nonzero rational")
            base, n = self.conj() / norm.to_fraction(), -n
        result = CycloValue.from_rational(1)
        for _ in range(n):
            result = result * base
        return result

    def conj(self):
        """Complex conjugate: ζ_N ↦ ζ_N^(N-1)"""
        N = self.level
        poly = [0] * N
        for j, c in enumerate(self.coeffs):
            poly[(-j) % N] += c
        return CycloValue(N, poly, self.den)

    def abs_sq(self):
        return self * self.conj()

    def is_rational(self):
        return self.level == 1

    def is_real(self):
        return self == self.conj()

    def to_fraction(self):
        if not self.is_rational():
            raise InputError(f"{self} is not rational")
        return Fraction(self.coeffs[0], self.den)

    # --------------------------------------------------------------------
    def approx(self, prec=START_BITS):
        """Interval enclosure of the value with prec working bits.

        :param prec: working precision in bits
        :type prec: int
        :returns: certified enclosure
        :rtype: Enclosure
        """
        old = iv.prec
        iv.prec = prec
        try:
            real = iv.mpf(0)
            imag = iv.mpf(0)
            for j, c in enumerate(self.coeffs):
                if not c:
                    continue
                if j == 0:
                    real += c
                    continue
                theta = 2 * j * iv.pi / self.level
                real += c * iv.cos(theta)
                imag += c * iv.sin(theta)
            real = real / self.den
            imag = imag / self.den
        finally:
            iv.prec = old
        return Enclosure(real, imag, prec)


# ========================================================================
#
# Functions
#
# ========================================================================
def torus_add(s, t):
    return s + t


# ========================================================================
def torus_scale(t, n):
    return t * n


# ========================================================================
def cyclo_of_torus(t):
    """e(t) = exp(2πit) as a root of unity of level t.den"""
    return CycloValue.root_of_unity(t.num, t.den)


# ========================================================================
def cyclo_add(a, b):
    return a + b


# ========================================================================
def cyclo_mul(a, b):
    return a * b


# ========================================================================
def cyclo_conj(a):
    return a.conj()


# ========================================================================
def cyclo_eq(a, b):
    return a == b


# ========================================================================
def cyclo_abs_sq(a):
    return a.abs_sq()


# ========================================================================
def cyclo_approx(a, prec=START_BITS):
    return a.approx(prec)


# ========================================================================
def real_sign(x, start_bits=START_BITS, max_bits=MAX_BITS):
    """Sign of a real cyclotomic value, exact zero test then certified intervals

    :param x: a real value
    :type x: CycloValue
    :returns: -1, 0 or 1
    :rtype: int
    """
    x = CycloValue._coerce(x)
    if x.is_rational():
        return (x.coeffs[0] > 0) - (x.coeffs[0] < 0)
    bits = start_bits
    while bits <= max_bits:
        real = x.approx(bits).real
        if real.b < 0:
            return -1
        if real.a > 0:
            return 1
        if bits == max_bits:
            break
        bits = min(bits * 2, max_bits)
    raise PrecisionError(f"could not decide the sign of {x} with {max_bits} bits")


# ========================================================================
def compare_modulus(z, r, start_bits=START_BITS, max_bits=MAX_BITS):
    """Compare |z| with the nonnegative rational r; returns -1, 0 or 1"""
    r = Fraction(r)
    if r < 0:
        raise InputError(f"modulus bound must be nonnegative, got {r}")
    return real_sign(z.abs_sq() - r * r, start_bits, max_bits)


# ========================================================================
def compare_moduli(a, b, start_bits=START_BITS, max_bits=MAX_BITS):
    """Compare |a| with |b|; returns -1, 0 or 1"""
    return real_sign(a.abs_sq() - b.abs_sq(), start_bits, max_bits)


# ========================================================================
def modulus_enclosure(z, prec=START_BITS):
    """Certified interval containing |z|"""
    real = z.abs_sq().approx(prec).real
    old = iv.prec
    iv.prec = prec
    try:
        return iv.sqrt(abs(real))
    finally:
        iv.prec = old
