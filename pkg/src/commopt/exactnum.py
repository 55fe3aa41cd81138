"""Exact arithmetic substrate: rationals, finite fields, and the bit-cost model.

Rational scalars are plain `fractions.Fraction` values, which already maintain
the reduced-fraction invariant (gcd(|num|, den) = 1, den >= 1, zero as 0/1).
Finite-field work happens on plain ints reduced mod a prime; `FieldScalar`
wraps one value where the typed surface matters.

All linear algebra here is exact. Floating-point approximations live in the
sampling and gradient modules, where approximation is inherent.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

INFINITY = float("inf")

#: Sentinel verdict for inconsistent linear systems.
INFEASIBLE = "INFEASIBLE"


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Bit-cost encoding model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BitCostModel:
    """Sign-plus-magnitude integer encoding with length headers on vectors."""

    header_bits_per_length_field: int = 32
    sign_plus_magnitude: bool = True

    def int_bits(self, k: int) -> int:
        magnitude = 1 if k == 0 else abs(k).bit_length()
        return 1 + magnitude

    def scalar_bits(self, x) -> int:
        if isinstance(x, bool):
            return 2
        if isinstance(x, int):
            return self.int_bits(x)
        if isinstance(x, Fraction):
            return self.int_bits(x.numerator) + self.int_bits(x.denominator)
        if isinstance(x, float):
            # Floats are modeled as one 64-bit machine word.
            return 64
        raise TypeError(f"no bit cost for {type(x)!r}")

    def vector_bits(self, v: Sequence) -> int:
        return self.header_bits_per_length_field + sum(self.scalar_bits(x) for x in v)

    def matrix_bits(self, rows: Sequence[Sequence]) -> int:
        total = 2 * self.header_bits_per_length_field
        for row in rows:
            total += sum(self.scalar_bits(x) for x in row)
        return total


DEFAULT_BIT_MODEL = BitCostModel()


def bit_cost_int(k: int, model: BitCostModel = DEFAULT_BIT_MODEL) -> int:
    """Cost of one integer: 1 sign bit plus minimal binary magnitude."""
    return model.int_bits(k)


# ---------------------------------------------------------------------------
# Typed scalars and matrices
# ---------------------------------------------------------------------------

ExactScalar = Fraction


@dataclass(frozen=True)
class FieldScalar:
    """Integer residue in [0, p) for a prime modulus p."""

    value: int
    modulus: int

    def __post_init__(self):
        if not is_prime(self.modulus):
            raise ValueError(f"modulus {self.modulus} is not prime")
        if not 0 <= self.value < self.modulus:
            raise ValueError("value out of range")

    def __add__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar((self.value + other.value) % self.modulus, self.modulus)

    def __mul__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar((self.value * other.value) % self.modulus, self.modulus)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("inverse of 0")
        return FieldScalar(pow(self.value, self.modulus - 2, self.modulus), self.modulus)


class ExactMatrix:
    """Dense matrix of exact rationals."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Iterable[Iterable]):
        grid = [[Fraction(x) for x in row] for row in entries]
        if grid and any(len(row) != len(grid[0]) for row in grid):
            raise DimensionError("ragged entry grid")
        self.entries = grid
        self.rows = len(grid)
        self.cols = len(grid[0]) if grid else 0

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def row(self, i: int) -> list[Fraction]:
        return self.entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, ExactMatrix) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"ExactMatrix({self.rows}x{self.cols})"


def _as_rows(matrix) -> list[list[Fraction]]:
    if isinstance(matrix, ExactMatrix):
        return [list(r) for r in matrix.entries]
    return [[Fraction(x) for x in row] for row in matrix]


# ---------------------------------------------------------------------------
# Exact dense helpers
# ---------------------------------------------------------------------------


def transpose(rows: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*rows)] if rows else []

def mat_vec(rows: Sequence[Sequence], x: Sequence) -> list:
    return [sum(a * b for a, b in zip(row, x)) for row in rows]

def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))

def gram(rows: Sequence[Sequence]) -> list[list]:
    """A^T A without forming the transpose explicitly."""
    if not rows:
        return []
    d = len(rows[0])
    g = [[0] * d for _ in range(d)]
    for row in rows:
        for i in range(d):
            ri = row[i]
            if ri == 0:
                continue
            for j in range(i, d):
                g[i][j] += ri * row[j]
    for i in range(d):
        for j in range(i):
            g[i][j] = g[j][i]
    return g


# ---------------------------------------------------------------------------
# Row-basis maintenance (rationals or F_p)
# ---------------------------------------------------------------------------


class RowBasis:
    """Incrementally maintained row space in reduced echelon form.

    With `p=None` arithmetic is exact rational; otherwise everything is
    reduced mod the prime p.  Supports the independence and consistency
    tests every protocol needs on augmented rows [a | beta].
    """

    def __init__(self, width: int, p: int | None = None):
        self.width = width
        self.p = p
        self.pivots: dict[int, list] = {}

    def _reduce(self, row: Sequence) -> list:
        if self.p is not None:
            work = [int(x) % self.p for x in row]
        else:
            work = [Fraction(x) for x in row]
        for col in sorted(self.pivots):
            if col >= len(work):
                break
            if work[col]:
                piv = self.pivots[col]
                factor = work[col]
                if self.p is not None:
                    work = [(w - factor * v) % self.p for w, v in zip(work, piv)]
                else:
                    work = [w - factor * v for w, v in zip(work, piv)]
        return work

    def residual(self, row: Sequence) -> list:
        return self._reduce(row)

    def contains(self, row: Sequence) -> bool:
        return not any(self._reduce(row))

    def insert(self, row: Sequence) -> bool:
        """Add the row if independent; returns True when the rank grew."""
        work = self._reduce(row)
        for col, val in enumerate(work):
            if val:
                if self.p is not None:
                    inv = pow(val, self.p - 2, self.p)
                    norm = [(w * inv) % self.p for w in work]
                else:
                    norm = [w / val for w in work]
                for c, piv in self.pivots.items():
                    if piv[col]:
                        f = piv[col]
                        if self.p is not None:
                            self.pivots[c] = [(a - f * b) % self.p for a, b in zip(piv, norm)]
                        else:
                            self.pivots[c] = [a - f * b for a, b in zip(piv, norm)]
                self.pivots[col] = norm
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def copy(self) -> "RowBasis":
        dup = RowBasis(self.width, self.p)
        dup.pivots = {c: list(v) for c, v in self.pivots.items()}
        return dup


class AugmentedBasis:
    """Row basis over augmented rows [a | beta] that tracks consistency.

    An inserted row whose coefficient part is dependent but whose augmented
    row is independent witnesses an inconsistent system.
    """

    def __init__(self, d: int, p: int | None = None):
        self.d = d
        self.basis = RowBasis(d + 1, p)

    def classify(self, coeffs: Sequence, rhs) -> str:
        row = list(coeffs) + [rhs]
        work = self.basis.residual(row)
        if not any(work):
            return "dependent"
        if any(work[: self.d]):
            return "independent"
        return "inconsistent"

    def insert(self, coeffs: Sequence, rhs) -> str:
        verdict = self.classify(coeffs, rhs)
        if verdict == "independent":
            self.basis.insert(list(coeffs) + [rhs])
        return verdict

    @property
    def rank(self) -> int:
        return self.basis.rank

    def copy(self) -> "AugmentedBasis":
        dup = AugmentedBasis(self.d, self.basis.p)
        dup.basis = self.basis.copy()
        return dup


# ---------------------------------------------------------------------------
# Rank and exact solving
# ---------------------------------------------------------------------------


def rank_and_solve(matrix, rhs: Sequence | None = None):
    """Exact Gaussian elimination over the rationals.

    Returns ``(rank, basis_row_indices, solution)`` where ``solution`` is an
    exact vector with ``A x = rhs`` (free variables set to zero), the string
    ``INFEASIBLE`` when no solution exists, or ``None`` when no rhs is given.
    """
    rows = _as_rows(matrix)
    if not rows:
        raise DimensionError("empty matrix")
    n, d = len(rows), len(rows[0])
    if rhs is not None and len(rhs) != n:
        raise DimensionError("rhs length mismatch")

    aug = [row + ([Fraction(rhs[i])] if rhs is not None else []) for i, row in enumerate(rows)]
    order = list(range(n))
    width = d + (1 if rhs is not None else 0)

    pivot_cols: list[int] = []
    basis_rows: list[int] = []
    r = 0
    for col in range(d):
        sel = None
        for i in range(r, n):
            if aug[i][col]:
                sel = i
                break
        if sel is None:
            continue
        aug[r], aug[sel] = aug[sel], aug[r]
        order[r], order[sel] = order[sel], order[r]
        piv = aug[r][col]
        aug[r] = [x / piv for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][col]:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        pivot_cols.append(col)
        basis_rows.append(order[r])
        r += 1
        if r == n:
            break

    rank = r
    if rhs is None:
        return rank, sorted(basis_rows), None

    for i in range(rank, n):
        if aug[i][d]:
            return rank, sorted(basis_rows), INFEASIBLE
    x = [Fraction(0)] * d
    for k, col in enumerate(pivot_cols):
        x[col] = aug[k][d]
    return rank, sorted(basis_rows), x


def solve_exact(matrix, rhs: Sequence):
    """Any exact solution of A x = rhs, or None when inconsistent."""
    _, _, x = rank_and_solve(matrix, rhs)
    return None if x == INFEASIBLE else x


def min_norm_least_squares(matrix, rhs: Sequence) -> list[Fraction]:
    """Exact minimum-norm least-squares solution (A^T A)^+ A^T b.

    Solved through a rank factorization of the Gram matrix: the minimizer is
    sought inside the row space of A, where the restricted normal system is
    nonsingular.
    """
    rows = _as_rows(matrix)
    g = gram(rows)
    y = mat_vec(transpose(rows), [Fraction(v) for v in rhs])
    rank, basis_idx, _ = rank_and_solve(g)
    if rank == 0:
        return [Fraction(0)] * len(g)
    basis = [g[i] for i in basis_idx]  # spans range(G) = rowspace(A)
    m = [[dot(bi, mat_vec(g, bj)) for bj in basis] for bi in basis]
    t = [dot(bi, y) for bi in basis]
    u = solve_exact(m, t)
    assert u is not None
    x = [Fraction(0)] * len(g)
    for coeff, brow in zip(u, basis):
        for j, v in enumerate(brow):
            x[j] += coeff * v
    return x


def int_det(matrix) -> int:
    """Exact determinant of an integer matrix (fraction-free Bareiss)."""
    rows = [list(map(int, r)) for r in matrix]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionError("determinant needs a square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            for i in range(k + 1, n):
                if rows[i][k]:
                    rows[k], rows[i] = rows[i], rows[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (rows[i][j] * rows[k][k] - rows[i][k] * rows[k][j]) // prev
            rows[i][k] = 0
        prev = rows[k][k]
    return sign * rows[n - 1][n - 1]


def rank_mod_p(matrix, p: int) -> int:
    """Rank over F_p after reducing integer entries mod p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    rows = [[int(x) % p for x in row] for row in matrix]
    if not rows:
        return 0
    basis = RowBasis(len(rows[0]), p)
    for row in rows:
        basis.insert(row)
    return basis.rank


# ---------------------------------------------------------------------------
# Primality
# ---------------------------------------------------------------------------

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _miller_rabin(n: int, a: int) -> bool:
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(a, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(r - 1):
        x = (x * x) % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin below 2^64; 40 extra pseudorandom rounds above."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    for a in _SMALL_PRIMES:
        if not _miller_rabin(n, a):
            return False
    if n < (1 << 64):
        return True
    seed = n.to_bytes((n.bit_length() + 7) // 8, "little")
    for i in range(40):
        h = hashlib.blake2b(seed + i.to_bytes(4, "little"), digest_size=8).digest()
        a = 2 + int.from_bytes(h, "little") % (n - 3)
        if not _miller_rabin(n, a):
            return False
    return True


def random_prime(hi: int, stream) -> int:
    """Uniform prime in [2, hi] by rejection sampling."""
    if hi < 2:
        raise ValueError("hi must be at least 2")
    while True:
        k = stream.randint(2, hi)
        if is_prime(k):
            return k


# ---------------------------------------------------------------------------
# Leverage scores
# ---------------------------------------------------------------------------


def leverage_scores(matrix, base=None) -> list:
    """Exact (generalized) leverage scores of the rows of A with respect to B.

    Returns one exact rational per row, or INFINITY for rows outside the
    row space of B.  With ``base=None`` ordinary leverage scores are
    computed (B = A), which always lie in [0, 1] and sum to rank(A).
    """
    a_rows = _as_rows(matrix)
    b_rows = a_rows if base is None else _as_rows(base)
    if b_rows and a_rows and len(b_rows[0]) != len(a_rows[0]):
        raise DimensionError("column count mismatch")
    d = len(a_rows[0]) if a_rows else 0

    space = RowBasis(d)
    for row in b_rows:
        space.insert(row)
    g = gram(b_rows) if b_rows else [[Fraction(0)] * d for _ in range(d)]

    scores = []
    for row in a_rows:
        if not space.contains(row):
            scores.append(INFINITY)
            continue
        if not any(row):
            scores.append(Fraction(0))
            continue
        z = solve_exact(g, row)
        # Row is in rowspace(B) = range(G), so the system is consistent and
        # any solution yields the same quadratic form value.
        assert z is not None
        scores.append(dot(row, z))
    return scores
