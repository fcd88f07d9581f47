"""Exact scalar arithmetic: rationals, truncated hbar-Laurent series, and
rank computation over the rational-function field in hbar.

Rationals are ``fractions.Fraction`` (always reduced, positive denominator).
An :class:`HSeries` is a finite Laurent polynomial in the degree-0 dummy
variable hbar with Fraction coefficients, an optional truncation order
(exponents >= ``trunc_order`` are discarded and flagged), and a sticky
``truncated`` flag recording that a drop happened somewhere upstream.
"""

from __future__ import annotations

import random
from fractions import Fraction

Rational = Fraction

# Primes used for hbar specialisation when certifying ranks.
_SPEC_PRIMES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                53, 59, 61, 67, 71, 73, 79, 83, 89, 97]


def _min_trunc(t1, t2):
    if t1 is None:
        return t2
    if t2 is None:
        return t1
    return min(t1, t2)


class HSeries:
    """Truncated Laurent polynomial in hbar with exact rational coefficients.

    ``trunc_order=None`` means untruncated (exact).  Stored coefficients are
    never zero and always satisfy exponent < trunc_order.
    """

    __slots__ = ("coeffs", "trunc_order", "truncated")

    def __init__(self, coeffs=None, trunc_order=None, truncated=False):
        clean = {}
        dropped = False
        if coeffs:
            for k, v in coeffs.items():
                v = Fraction(v)
                if v == 0:
                    continue
                if trunc_order is not None and k >= trunc_order:
                    dropped = True
                    continue
                clean[int(k)] = v
        self.coeffs = clean
        self.trunc_order = trunc_order
        self.truncated = bool(truncated or dropped)

    # -- constructors -----------------------------------------------------
    @staticmethod
    def zero(trunc_order=None):
        return HSeries({}, trunc_order)

    @staticmethod
    def const(c, trunc_order=None):
        return HSeries({0: Fraction(c)}, trunc_order)

    @staticmethod
    def monomial(exp, c=1, trunc_order=None):
        return HSeries({exp: Fraction(c)}, trunc_order)

    # -- queries -----------------------------------------------------------
    @property
    def min_exp(self):
        return min(self.coeffs) if self.coeffs else 0

    @property
    def max_exp(self):
        return max(self.coeffs) if self.coeffs else 0

    def is_zero(self):
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other)
        if not isinstance(other, HSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __getitem__(self, exp):
        return self.coeffs.get(exp, Fraction(0))

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return HSeries(out, _min_trunc(self.trunc_order, other.trunc_order),
                       self.truncated or other.truncated)

    __radd__ = __add__

    def __neg__(self):
        return HSeries({k: -v for k, v in self.coeffs.items()},
                       self.trunc_order, self.truncated)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = HSeries.const(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return hseries_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c):
        c = Fraction(c)
        if c == 0:
            return HSeries({}, self.trunc_order, self.truncated)
        return HSeries({k: v * c for k, v in self.coeffs.items()},
                       self.trunc_order, self.truncated)

    def shift(self, n):
        """Multiply by hbar**n."""
        return HSeries({k + n: v for k, v in self.coeffs.items()},
                       self.trunc_order, self.truncated)

    def substitute_neg_hbar(self):
        """hbar -> -hbar."""
        return HSeries({k: (v if k % 2 == 0 else -v)
                        for k, v in self.coeffs.items()},
                       self.trunc_order, self.truncated)

    def evaluate(self, point):
        """Specialise hbar to a nonzero rational."""
        point = Fraction(point)
        return sum((v * point ** k for k, v in self.coeffs.items()),
                   Fraction(0))

    def __repr__(self):
        return f"HSeries({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs):
            v = self.coeffs[k]
            if k == 0:
                parts.append(str(v))
            elif k == 1:
                parts.append(f"{v}*h" if v != 1 else "h")
            else:
                parts.append(f"{v}*h^{k}" if v != 1 else f"h^{k}")
        return " + ".join(parts)


def hseries_mul(a: HSeries, b: HSeries) -> HSeries:
    """Exact Cauchy product; result truncated at the finer of the two orders."""
    trunc = _min_trunc(a.trunc_order, b.trunc_order)
    out = {}
    for ka, va in a.coeffs.items():
        for kb, vb in b.coeffs.items():
            k = ka + kb
            out[k] = out.get(k, Fraction(0)) + va * vb
    return HSeries(out, trunc, a.truncated or b.truncated)


def hbar_derivative_scaled(a: HSeries) -> HSeries:
    """hbar**2 * d/dhbar: the monomial c*hbar**k maps to k*c*hbar**(k+1)."""
    return HSeries({k + 1: k * v for k, v in a.coeffs.items() if k != 0},
                   a.trunc_order, a.truncated)


# ---------------------------------------------------------------------------
# Exact linear algebra over Q and over Q(hbar)
# ---------------------------------------------------------------------------

def rank_rational(rows):
    """Rank of a matrix of Fractions by Gaussian elimination (destructive copy)."""
    if not rows:
        return 0
    m = [list(map(Fraction, r)) for r in rows]
    nrows, ncols = len(m), len(m[0])
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, nrows):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        prow = m[rank]
        inv = 1 / prow[col]
        for r in range(rank + 1, nrows):
            f = m[r][col]
            if f == 0:
                continue
            f *= inv
            row = m[r]
            for c in range(col, ncols):
                row[c] -= prow[c] * f
        rank += 1
        if rank == nrows:
            break
    return rank


def solve_rational(rows, rhs):
    """Solve A x = b over Q; returns one solution (free vars = 0) or None."""
    if not rows:
        return [] if all(v == 0 for v in rhs) else ([] if not rhs else None)
    nrows, ncols = len(rows), len(rows[0])
    aug = [list(map(Fraction, rows[r])) + [Fraction(rhs[r])] for r in range(nrows)]
    pivots = []
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, nrows):
            if aug[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        aug[rank], aug[piv] = aug[piv], aug[rank]
        prow = aug[rank]
        inv = 1 / prow[col]
        for c in range(col, ncols + 1):
            prow[c] *= inv
        for r in range(nrows):
            if r != rank and aug[r][col] != 0:
                f = aug[r][col]
                row = aug[r]
                for c in range(col, ncols + 1):
                    row[c] -= prow[c] * f
        pivots.append(col)
        rank += 1
        if rank == nrows:
            break
    for r in range(rank, nrows):
        if aug[r][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for r, col in enumerate(pivots):
        sol[col] = aug[r][ncols]
    return sol


def _specialised_rank(matrix, point):
    rows = [[e.evaluate(point) for e in row] for row in matrix]
    return rank_rational(rows)


def _laurent_to_poly_rows(matrix):
    """Clear hbar denominators row-wise; returns rows of coefficient dicts."""
    rows = []
    for row in matrix:
        shift = min((e.min_exp for e in row if e.coeffs), default=0)
        shift = min(shift, 0)
        rows.append([{k - shift: v for k, v in e.coeffs.items()} for e in row])
    return rows


def _poly_is_zero(p):
    return not p


def _poly_mul(p, q):
    out = {}
    for ka, va in p.items():
        for kb, vb in q.items():
            k = ka + kb
            s = out.get(k, Fraction(0)) + va * vb
            if s:
                out[k] = s
            elif k in out:
                del out[k]
    return out


def _poly_sub(p, q):
    out = dict(p)
    for k, v in q.items():
        s = out.get(k, Fraction(0)) - v
        if s:
            out[k] = s
        elif k in out:
            del out[k]
    return out


def _poly_divexact(p, q):
    """Exact division in Q[hbar]; caller guarantees divisibility."""
    if not p:
        return {}
    rem = dict(p)
    dq = max(q)
    lq = q[dq]
    out = {}
    while rem:
        dr = max(rem)
        if dr < dq:
            raise ArithmeticError("inexact polynomial division")
        k = dr - dq
        c = rem[dr] / lq
        out[k] = c
        rem = _poly_sub(rem, _poly_mul({k: c}, q))
    return out


def rank_exact_fraction_field(matrix):
    """Rank over Q(hbar) by fraction-free Bareiss elimination in Q[hbar]."""
    if not matrix or not matrix[0]:
        return 0
    m = _laurent_to_poly_rows(matrix)
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = {0: Fraction(1)}
    for col in range(ncols):
        piv = None
        for r in range(rank, nrows):
            if not _poly_is_zero(m[r][col]):
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        prow = m[rank]
        for r in range(rank + 1, nrows):
            row = m[r]
            for c in range(ncols):
                if c == col:
                    continue
                num = _poly_sub(_poly_mul(prow[col], row[c]),
                                _poly_mul(row[col], prow[c]))
                row[c] = _poly_divexact(num, prev) if num else {}
            row[col] = {}
        prev = prow[col]
        rank += 1
        if rank == nrows:
            break
    return rank


def specialisation_points(seed, n=2):
    """Deterministically draw n distinct nonzero rationals (small primes)."""
    rng = random.Random(seed)
    return [Fraction(p) for p in rng.sample(_SPEC_PRIMES, n)]


def rank_over_hbar_field(matrix, seed=0):
    """Rank over Q(hbar) of a matrix of HSeries Laurent polynomials.

    Specialises hbar at two seed-determined primes; on agreement that rank is
    returned, otherwise the exact fraction-free elimination decides.
    """
    if not matrix or not matrix[0]:
        return 0
    p1, p2 = specialisation_points(seed, 2)
    r1 = _specialised_rank(matrix, p1)
    r2 = _specialised_rank(matrix, p2)
    if r1 == r2:
        return r1
    return rank_exact_fraction_field(matrix)
