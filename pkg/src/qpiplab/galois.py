"""Exact arithmetic over prime fields F_q and degree-bounded polynomials."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def inv_mod(a: int, q: int) -> int:
    """Multiplicative inverse of a mod q by extended Euclid."""
    a %= q
    if a == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {q}")
    r0, r1 = q, a
    s0, s1 = 0, 1
    while r1:
        k = r0 // r1
        r0, r1 = r1, r0 - k * r1
        s0, s1 = s1, s0 - k * s1
    return s0 % q


@dataclass(frozen=True)
class FieldElement:
    """An element of F_q, q prime.  All arithmetic is exact and closed."""

    value: int
    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")
        object.__setattr__(self, "value", self.value % self.q)

    def _check(self, other: "FieldElement"):
        if self.q != other.q:
            raise ValueError(f"modulus mismatch: {self.q} != {other.q}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value + other.value, self.q)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value - other.value, self.q)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.value * other.value, self.q)

    def __neg__(self) -> "FieldElement":
        return FieldElement(-self.value, self.q)

    def inv(self) -> "FieldElement":
        return FieldElement(inv_mod(self.value, self.q), self.q)

    def __truediv__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return self * other.inv()

    def __pow__(self, e: int) -> "FieldElement":
        if e < 0:
            return self.inv() ** (-e)
        return FieldElement(pow(self.value, e, self.q), self.q)

    def __int__(self) -> int:
        return self.value


class FieldPolynomial:
    """Polynomial over F_q; coefficient index equals the degree of its term."""

    def __init__(self, coefficients: Iterable[int | FieldElement], q: int):
        coeffs = [int(c) % q for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        self.coefficients = tuple(coeffs)
        self.q = q

    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def __call__(self, x: int | FieldElement) -> FieldElement:
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * int(x) + c) % self.q
        return FieldElement(acc, self.q)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldPolynomial)
            and self.q == other.q
            and self.coefficients == other.coefficients
        )

    def __hash__(self):
        return hash((self.coefficients, self.q))

    def __add__(self, other: "FieldPolynomial") -> "FieldPolynomial":
        if self.q != other.q:
            raise ValueError("modulus mismatch")
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = (out[i] + c) % self.q
        return FieldPolynomial(out, self.q)

    def __mul__(self, other: "FieldPolynomial") -> "FieldPolynomial":
        if self.q != other.q:
            raise ValueError("modulus mismatch")
        if not self.coefficients or not other.coefficients:
            return FieldPolynomial([], self.q)
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] = (out[i + j] + a * b) % self.q
        return FieldPolynomial(out, self.q)

    def __repr__(self):
        return f"FieldPolynomial({list(self.coefficients)}, q={self.q})"


@dataclass(frozen=True)
class EvalPoints:
    """m distinct nonzero evaluation points in F_q."""

    alphas: tuple[int, ...]
    q: int

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"modulus {self.q} is not prime")
        alphas = tuple(a % self.q for a in self.alphas)
        if any(a == 0 for a in alphas):
            raise ValueError("evaluation points must be nonzero")
        if len(set(alphas)) != len(alphas):
            raise ValueError("evaluation points must be distinct")
        if len(alphas) > self.q - 1:
            raise ValueError(f"at most q-1={self.q - 1} distinct nonzero points exist")
        object.__setattr__(self, "alphas", alphas)

    def __len__(self) -> int:
        return len(self.alphas)


def default_eval_points(m: int, q: int) -> EvalPoints:
    """The points 1..m, the default choice everywhere in this package."""
    return EvalPoints(tuple(range(1, m + 1)), q)


def interpolation_coefficients(points: EvalPoints) -> tuple[FieldElement, ...]:
    """Coefficients c with sum_i c_i f(alpha_i) = f(0) for every deg(f) <= m-1.

    c_i = prod_{j != i} (-alpha_j) / (alpha_i - alpha_j).
    """
    q = points.q
    out = []
    for i, ai in enumerate(points.alphas):
        num, den = 1, 1
        for j, aj in enumerate(points.alphas):
            if j == i:
                continue
            num = (num * (-aj)) % q
            den = (den * (ai - aj)) % q
        out.append(FieldElement(num * inv_mod(den, q), q))
    return tuple(out)


def lagrange_interpolate(
    values: Sequence[tuple[int | FieldElement, int | FieldElement]], q: int
) -> FieldPolynomial:
    """The unique polynomial of degree < len(values) through the given points."""
    xs = [int(x) % q for x, _ in values]
    ys = [int(y) % q for _, y in values]
    if len(set(xs)) != len(xs):
        raise ValueError("duplicate abscissae")
    acc = FieldPolynomial([], q)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = FieldPolynomial([yi], q)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            scale = inv_mod(xi - xj, q)
            basis = basis * FieldPolynomial([-xj * scale, scale], q)
        acc = acc + basis
    return acc


def matrix_rank_mod_q(matrix, q: int) -> int:
    """Rank of an integer matrix over F_q by Gaussian elimination."""
    rows = [[int(v) % q for v in row] for row in matrix]
    if not rows:
        return 0
    cols = len(rows[0])
    rank = 0
    for c in range(cols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][c] % q:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = inv_mod(rows[rank][c], q)
        rows[rank] = [(v * inv) % q for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                f = rows[r][c]
                rows[r] = [(a - f * b) % q for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def fit_polynomial(
    values: Sequence[tuple[int | FieldElement, int | FieldElement]],
    max_degree: int,
    q: int,
) -> Optional[FieldPolynomial]:
    """Interpolate and accept only if the result has degree <= max_degree.

    Returns None (NO_FIT) when the unique interpolant is of higher degree;
    downstream error detection treats NO_FIT as evidence of tampering.
    """
    poly = lagrange_interpolate(values, q)
    if poly.degree() > max_degree:
        return None
    return poly
