"""Free graded-commutative algebra Q[y_1..y_m] (x) Lambda[eta_1..eta_m]
modelling the derived critical locus of a polynomial f, with the Koszul
differential given by contraction with df.

Grading is cohomological: deg(y_i) = 0, deg(eta_i) = -1.  A monomial is the
key ``(y_exps, eta)`` with ``y_exps`` a length-m tuple of naturals and
``eta`` a strictly increasing tuple of indices in 1..m.  Koszul signs are
generated purely by transpositions of odd symbols relative to this canonical
order; every other module inherits that convention.
"""

from __future__ import annotations

from fractions import Fraction

from .coefficients import HSeries, hseries_mul, solve_rational
from .errors import NotPolynomial, ZeroPolynomial


def merge_ascending(a, b):
    """Merge two strictly increasing index tuples of odd symbols.

    Returns ``(merged, sign)`` with the Koszul sign of the interleave, or
    ``(None, 0)`` when an index repeats (odd square = 0).
    """
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    i = j = 0
    inversions = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None, 0
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
            inversions += len(a) - i
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), (-1 if inversions % 2 else 1)


def insert_index(idx, s):
    """Insert one odd index into an increasing tuple; (None, 0) on repeat."""
    if idx in s:
        return None, 0
    pos = sum(1 for x in s if x < idx)
    return tuple(sorted(s + (idx,))), (-1 if pos % 2 else 1)


class AlgebraSignature:
    """Number of y-variables plus optional quasi-homogeneity weights."""

    __slots__ = ("m", "weights")

    def __init__(self, m, weights=None):
        if m < 1:
            raise ValueError("need at least one variable")
        self.m = int(m)
        self.weights = tuple(Fraction(w) for w in weights) if weights else None

    def __eq__(self, other):
        return (isinstance(other, AlgebraSignature)
                and self.m == other.m and self.weights == other.weights)

    def __repr__(self):
        return f"AlgebraSignature(m={self.m}, weights={self.weights})"


def _as_hseries(c):
    if isinstance(c, HSeries):
        return c
    return HSeries.const(c)


class Element:
    """Sparse sum of monomials y^a * eta_S with HSeries coefficients."""

    __slots__ = ("m", "terms")

    def __init__(self, m, terms=None):
        self.m = int(m)
        clean = {}
        if terms:
            for key, c in terms.items():
                c = _as_hseries(c)
                if c.is_zero():
                    continue
                prev = clean.get(key)
                c = prev + c if prev is not None else c
                if c.is_zero():
                    clean.pop(key, None)
                else:
                    clean[key] = c
        self.terms = clean

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zero(m):
        return Element(m)

    @staticmethod
    def one(m):
        return Element(m, {unit_key(m): HSeries.const(1)})

    @staticmethod
    def const(m, c):
        return Element(m, {unit_key(m): _as_hseries(c)})

    @staticmethod
    def y(m, i, power=1):
        e = [0] * m
        e[i - 1] = power
        return Element(m, {(tuple(e), ()): HSeries.const(1)})

    @staticmethod
    def eta(m, i):
        return Element(m, {((0,) * m, (i,)): HSeries.const(1)})

    # -- queries ------------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Element.const(self.m, other)
        if not isinstance(other, Element):
            return NotImplemented
        return self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    def is_polynomial(self):
        """No eta factors and hbar-free coefficients."""
        for (_, eta), c in self.terms.items():
            if eta:
                return False
            if any(k != 0 for k in c.coeffs):
                return False
        return True

    def degrees(self):
        return {-len(eta) for (_, eta) in self.terms}

    def degree_part(self, d):
        return Element(self.m, {k: c for k, c in self.terms.items()
                                if -len(k[1]) == d})

    def homogeneous_degree(self):
        degs = self.degrees()
        if len(degs) > 1:
            raise ValueError("inhomogeneous element")
        return degs.pop() if degs else None

    def y_degree(self):
        return max((sum(a) for (a, _) in self.terms), default=0)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Element.const(self.m, other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            prev = out.get(k)
            s = prev + c if prev is not None else c
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return Element(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Element(self.m, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Element.const(self.m, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, HSeries)):
            return self.scale(other)
        return gmul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, HSeries)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n):
        out = Element.one(self.m)
        for _ in range(int(n)):
            out = gmul(out, self)
        return out

    def scale(self, c):
        c = _as_hseries(c)
        return Element(self.m, {k: hseries_mul(v, c)
                                for k, v in self.terms.items()})

    def partial_y(self, i):
        """Formal partial derivative with respect to y_i (even, no signs)."""
        out = {}
        for (a, eta), c in self.terms.items():
            if a[i - 1] == 0:
                continue
            na = list(a)
            na[i - 1] -= 1
            out[(tuple(na), eta)] = c.scale(a[i - 1])
        return Element(self.m, out)

    def contract_eta(self, i):
        """Odd left derivation d/d(eta_i): kills monomials without eta_i."""
        out = {}
        for (a, eta), c in self.terms.items():
            key, sign = _contract_eta_key(eta, i)
            if key is None:
                continue
            out[(a, key)] = c.scale(sign)
        return Element(self.m, out)

    def __repr__(self):
        return f"Element({self})"

    def __str__(self):
        return format_terms(self.terms, self.m)


def unit_key(m):
    return ((0,) * m, ())


def _contract_eta_key(eta, i):
    if i not in eta:
        return None, 0
    pos = eta.index(i)
    return eta[:pos] + eta[pos + 1:], (-1 if pos % 2 else 1)


def monomial_degree(key):
    return -len(key[1])


def gmul(a: Element, b: Element) -> Element:
    """Graded-commutative product with Koszul signs."""
    if a.m != b.m:
        raise ValueError("signature mismatch")
    out = {}
    for (ya, ea), ca in a.terms.items():
        for (yb, eb), cb in b.terms.items():
            eta, sign = merge_ascending(ea, eb)
            if eta is None:
                continue
            y = tuple(x + z for x, z in zip(ya, yb))
            c = hseries_mul(ca, cb)
            if sign < 0:
                c = -c
            key = (y, eta)
            prev = out.get(key)
            s = prev + c if prev is not None else c
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
    return Element(a.m, out)


def format_monomial(key, m, names=None):
    a, eta = key
    parts = []
    for i in range(m):
        if a[i]:
            name = names[i] if names else f"y{i + 1}"
            parts.append(name if a[i] == 1 else f"{name}^{a[i]}")
    for i in eta:
        name = f"eta_{names[i - 1]}" if names else f"eta{i}"
        parts.append(name)
    return "*".join(parts) if parts else "1"


def format_terms(terms, m, names=None):
    if not terms:
        return "0"
    parts = []
    for key in sorted(terms):
        c = terms[key]
        mono = format_monomial(key, m, names)
        cs = str(c)
        if cs == "1":
            parts.append(mono)
        elif mono == "1":
            parts.append(cs)
        elif "+" in cs or (cs.startswith("-") and "*" in cs):
            parts.append(f"({cs})*{mono}")
        else:
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts)


class CritLocus:
    """A polynomial f with its cached partials, modelling Crit(f) derived."""

    __slots__ = ("signature", "f", "partials")

    def __init__(self, signature, f, partials):
        self.signature = signature
        self.f = f
        self.partials = partials

    @property
    def m(self):
        return self.signature.m

    def __repr__(self):
        return f"CritLocus(m={self.m}, f={self.f})"


def detect_weights(f: Element, m: int):
    """Solve sum_i w_i a_i = 1 over the exponent vectors of f's monomials.

    Returns a tuple of positive weights making f quasi-homogeneous of
    weight 1, or None when no such solution exists.  Variables absent from
    every monomial get weight 1.
    """
    rows = [list(a) for (a, _) in f.terms]
    rhs = [Fraction(1)] * len(rows)
    sol = solve_rational(rows, rhs)
    if sol is None:
        return None
    used = [any(r[i] != 0 for r in rows) for i in range(m)]
    weights = [sol[i] if used[i] else Fraction(1) for i in range(m)]
    if any(w <= 0 for w in weights):
        return None
    for a in (key[0] for key in f.terms):
        if sum(w * e for w, e in zip(weights, a)) != 1:
            return None
    return tuple(weights)


def make_crit_locus(f: Element, m: int) -> CritLocus:
    """Build the critical-locus data of f, caching partials and weights."""
    if f.m != m:
        raise ValueError("signature mismatch")
    if f.is_zero():
        raise ZeroPolynomial("f = 0")
    if not f.is_polynomial():
        raise NotPolynomial("f must be an hbar-free polynomial in y only")
    partials = [f.partial_y(i) for i in range(1, m + 1)]
    weights = detect_weights(f, m)
    return CritLocus(AlgebraSignature(m, weights), f, partials)


def apply_koszul_delta(X: CritLocus, a: Element) -> Element:
    """Degree +1 derivation with delta(y_i) = 0, delta(eta_i) = df/dy_i."""
    if a.m != X.m:
        raise ValueError("signature mismatch")
    out = Element.zero(X.m)
    for i in range(1, X.m + 1):
        contracted = a.contract_eta(i)
        if contracted:
            out = out + gmul(X.partials[i - 1], contracted)
    return out
