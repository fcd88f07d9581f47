"""Filtered algebra of differential operators on the free algebra, with
normal ordering, symbols, and the Schouten--Nijenhuis bracket on symbols.

An operator monomial is the key ``(y_exps, eta, dy_exps, deta)`` denoting the
normal-ordered composite

    y^a * eta_S * d_y^b * d_eta_T      (S, T strictly increasing),

with multiplications left of all derivative symbols.  Cohomological degrees:
d_{y_i} is even (0), d_{eta_i} odd (+1), so deg = -|S| + |T|.  All products
are reduced to this normal form eagerly; composition is implemented by
folding single generators through normal-ordered monomials, which keeps every
Koszul sign a consequence of the two generator rules
``op_apply(d_eta_i, eta_i) = 1`` and the graded Leibniz rule.
"""

from __future__ import annotations

from fractions import Fraction

from .coefficients import HSeries, hseries_mul
from .errors import ArityMismatch, OrderTooLow, ZeroOperator
from .gca import Element, _as_hseries, insert_index, merge_ascending

_MY, _META, _DY, _DETA = 0, 1, 2, 3


def op_unit_key(m):
    return ((0,) * m, (), (0,) * m, ())


def key_order(key):
    """Total derivative degree of a monomial key."""
    return sum(key[2]) + len(key[3])


def key_degree(key):
    """Cohomological degree: -|eta| + |d_eta|."""
    return -len(key[1]) + len(key[3])


def _accumulate(store, key, coeff):
    prev = store.get(key)
    s = prev + coeff if prev is not None else coeff
    if isinstance(s, HSeries):
        if s.is_zero():
            store.pop(key, None)
            return
    elif s == 0:
        store.pop(key, None)
        return
    store[key] = s


class Operator:
    """Sparse normal-ordered differential operator with HSeries coefficients."""

    __slots__ = ("m", "terms")

    def __init__(self, m, terms=None):
        self.m = int(m)
        clean = {}
        if terms:
            for key, c in terms.items():
                c = _as_hseries(c)
                if not c.is_zero():
                    _accumulate(clean, key, c)
        self.terms = clean

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zero(m):
        return Operator(m)

    @staticmethod
    def identity(m):
        return Operator(m, {op_unit_key(m): HSeries.const(1)})

    @staticmethod
    def mult(a: Element):
        """Multiplication operator of an element."""
        return Operator(a.m, {(ya, ea, (0,) * a.m, ()): c
                              for (ya, ea), c in a.terms.items()})

    @staticmethod
    def d_y(m, i):
        e = [0] * m
        e[i - 1] = 1
        return Operator(m, {((0,) * m, (), tuple(e), ()): HSeries.const(1)})

    @staticmethod
    def d_eta(m, i):
        return Operator(m, {((0,) * m, (), (0,) * m, (i,)): HSeries.const(1)})

    # -- queries ------------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Operator.identity(self.m).scale(other) if other else Operator.zero(self.m)
        if not isinstance(other, Operator):
            return NotImplemented
        return self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    def degrees(self):
        return {key_degree(k) for k in self.terms}

    def degree_part(self, d):
        return Operator(self.m, {k: c for k, c in self.terms.items()
                                 if key_degree(k) == d})

    def order_part(self, k):
        return Operator(self.m, {key: c for key, c in self.terms.items()
                                 if key_order(key) == k})

    def hbar_component(self, e):
        """hbar-free Operator collecting the hbar^e coefficient."""
        out = {}
        for key, c in self.terms.items():
            v = c[e]
            if v:
                out[key] = HSeries.const(v)
        return Operator(self.m, out)

    def hbar_exponents(self):
        exps = set()
        for c in self.terms.values():
            exps.update(c.coeffs)
        return exps

    def min_hbar_exp(self):
        return min(self.hbar_exponents(), default=0)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Operator(self.m, {op_unit_key(self.m): HSeries.const(other)})
        out = dict(self.terms)
        for k, c in other.terms.items():
            _accumulate(out, k, c)
        return Operator(self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return Operator(self.m, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Operator(self.m, {op_unit_key(self.m): HSeries.const(other)})
        return self + (-other)

    def scale(self, c):
        c = _as_hseries(c)
        return Operator(self.m, {k: hseries_mul(v, c)
                                 for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, HSeries)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, HSeries)):
            return self.scale(other)
        return NotImplemented

    def __repr__(self):
        return f"Operator({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms):
            c = self.terms[key]
            mono = format_op_monomial(key, self.m)
            cs = str(c)
            if cs == "1":
                parts.append(mono)
            elif mono == "1":
                parts.append(cs)
            elif "+" in cs:
                parts.append(f"({cs})*{mono}")
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts)


def format_op_monomial(key, m, names=None):
    a, eta, b, deta = key
    parts = []
    from .gca import format_monomial
    left = format_monomial((a, eta), m, names)
    if left != "1":
        parts.append(left)
    for i in range(m):
        if b[i]:
            name = f"D{names[i]}" if names else f"Dy{i + 1}"
            parts.append(name if b[i] == 1 else f"{name}^{b[i]}")
    for i in deta:
        name = f"Deta_{names[i - 1]}" if names else f"Deta{i}"
        parts.append(name)
    return "*".join(parts) if parts else "1"


# ---------------------------------------------------------------------------
# Generator folding: the four left-composition rules
# ---------------------------------------------------------------------------

def _gen_sequence(key, m):
    """Generator factors of a monomial key, left to right."""
    a, eta, b, deta = key
    seq = []
    for i in range(m):
        seq.extend([(_MY, i + 1)] * a[i])
    seq.extend((_META, i) for i in eta)
    for i in range(m):
        seq.extend([(_DY, i + 1)] * b[i])
    seq.extend((_DETA, i) for i in deta)
    return seq


def _compose_gen_key(gen, key, m):
    """Left-compose one generator with a normal-ordered monomial key.

    Yields ``(new_key, integer coefficient)`` pairs.
    """
    kind, i = gen
    a, eta, b, deta = key
    if kind == _MY:
        na = list(a)
        na[i - 1] += 1
        yield (tuple(na), eta, b, deta), 1
    elif kind == _META:
        ne, sign = insert_index(i, eta)
        if ne is not None:
            yield (a, ne, b, deta), sign
    elif kind == _DY:
        if a[i - 1]:
            na = list(a)
            na[i - 1] -= 1
            yield (tuple(na), eta, b, deta), a[i - 1]
        nb = list(b)
        nb[i - 1] += 1
        yield (a, eta, tuple(nb), deta), 1
    else:  # _DETA
        pos = None
        if i in eta:
            pos = eta.index(i)
            ne = eta[:pos] + eta[pos + 1:]
            yield (a, ne, b, deta), (-1 if pos % 2 else 1)
        nd, sign = insert_index(i, deta)
        if nd is not None:
            pass_sign = -1 if len(eta) % 2 else 1
            yield (a, eta, b, nd), pass_sign * sign
        return


def _compose_keys(k1, k2, m):
    """Normal-ordered expansion of k1 o k2 as {key: integer coefficient}."""
    state = {k2: 1}
    for gen in reversed(_gen_sequence(k1, m)):
        nxt = {}
        for key, coeff in state.items():
            for nkey, c in _compose_gen_key(gen, key, m):
                _accumulate(nxt, nkey, coeff * c)
        state = nxt
        if not state:
            break
    return state


def op_compose(D1: Operator, D2: Operator) -> Operator:
    """Normal-ordered product D1 o D2."""
    if D1.m != D2.m:
        raise ValueError("signature mismatch")
    m = D1.m
    out = {}
    for k1, c1 in D1.terms.items():
        for k2, c2 in D2.terms.items():
            c = hseries_mul(c1, c2)
            for key, n in _compose_keys(k1, k2, m).items():
                _accumulate(out, key, c.scale(n))
    return Operator(m, out)


def op_apply(D: Operator, a: Element) -> Element:
    """Evaluate the operator on an element."""
    if D.m != a.m:
        raise ValueError("signature mismatch")
    m = D.m
    out = {}
    for key, c in D.terms.items():
        state = dict(a.terms)
        for gen in reversed(_gen_sequence(key, m)):
            kind, i = gen
            nxt = {}
            for (ya, ea), ce in state.items():
                if kind == _MY:
                    na = list(ya)
                    na[i - 1] += 1
                    _accumulate(nxt, (tuple(na), ea), ce)
                elif kind == _META:
                    ne, sign = insert_index(i, ea)
                    if ne is not None:
                        _accumulate(nxt, (ya, ne), ce.scale(sign))
                elif kind == _DY:
                    if ya[i - 1]:
                        na = list(ya)
                        na[i - 1] -= 1
                        _accumulate(nxt, (tuple(na), ea), ce.scale(ya[i - 1]))
                else:  # _DETA
                    if i in ea:
                        pos = ea.index(i)
                        ne = ea[:pos] + ea[pos + 1:]
                        _accumulate(nxt, (ya, ne), ce.scale(-1 if pos % 2 else 1))
            state = nxt
            if not state:
                break
        for k, ce in state.items():
            _accumulate(out, k, hseries_mul(c, ce))
    return Element(m, out)


def op_commutator(D1: Operator, D2: Operator) -> Operator:
    """Graded commutator [D1, D2], extended bilinearly over degree parts."""
    out = Operator.zero(D1.m)
    for d1 in D1.degrees():
        p1 = D1.degree_part(d1)
        for d2 in D2.degrees():
            p2 = D2.degree_part(d2)
            sign = -1 if (d1 % 2) and (d2 % 2) else 1
            term = op_compose(p1, p2) - op_compose(p2, p1).scale(sign)
            out = out + term
    return out


def op_order(D: Operator) -> int:
    """Maximal total derivative degree; equals the inductive filtration level."""
    if D.is_zero():
        raise ZeroOperator("order of the zero operator is undefined")
    return max(key_order(k) for k in D.terms)


# ---------------------------------------------------------------------------
# Polyvectors (principal symbols) and the Schouten--Nijenhuis bracket
# ---------------------------------------------------------------------------

class Polyvector:
    """Homogeneous arity-p symbol: derivative symbols commute freely."""

    __slots__ = ("m", "arity", "terms")

    def __init__(self, m, arity, terms=None):
        self.m = int(m)
        self.arity = int(arity)
        clean = {}
        if terms:
            for key, c in terms.items():
                c = _as_hseries(c)
                if c.is_zero():
                    continue
                if key_order(key) != self.arity:
                    raise ArityMismatch(
                        f"monomial of arity {key_order(key)} in arity-{self.arity} polyvector")
                _accumulate(clean, key, c)
        self.terms = clean

    @staticmethod
    def zero(m, arity=0):
        return Polyvector(m, arity)

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Polyvector):
            return NotImplemented
        return (self.m == other.m and self.terms == other.terms
                and (self.arity == other.arity or not self.terms or not other.terms))

    def __add__(self, other):
        if self.arity != other.arity and self.terms and other.terms:
            raise ArityMismatch("cannot add polyvectors of different arity")
        out = dict(self.terms)
        for k, c in other.terms.items():
            _accumulate(out, k, c)
        return Polyvector(self.m, max(self.arity, other.arity), out)

    def __neg__(self):
        return Polyvector(self.m, self.arity,
                          {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = _as_hseries(c)
        return Polyvector(self.m, self.arity,
                          {k: hseries_mul(v, c) for k, v in self.terms.items()})

    def lift(self) -> Operator:
        """Read the symbol as a normal-ordered operator (same keys)."""
        return Operator(self.m, dict(self.terms))

    def __repr__(self):
        return f"Polyvector(arity={self.arity}, {Operator(self.m, self.terms)})"


def symbol(D: Operator, k: int) -> Polyvector:
    """Degree-k part of the operator read as a polyvector."""
    if not D.is_zero() and op_order(D) > k:
        raise OrderTooLow(f"operator has order {op_order(D)} > {k}")
    return Polyvector(D.m, k, {key: c for key, c in D.terms.items()
                               if key_order(key) == k})


def _odd_sequence(key):
    """Odd factors of a symbol monomial in written order."""
    _, eta, _, deta = key
    return [(0, i) for i in eta] + [(1, i) for i in deta]


def pv_mul(P: Polyvector, Q: Polyvector) -> Polyvector:
    """Free graded-commutative product of symbols; arity adds."""
    if P.m != Q.m:
        raise ValueError("signature mismatch")
    out = {}
    for k1, c1 in P.terms.items():
        for k2, c2 in Q.terms.items():
            key, sign = _merge_symbol_keys(k1, k2)
            if key is None:
                continue
            c = hseries_mul(c1, c2)
            _accumulate(out, key, c.scale(sign))
    return Polyvector(P.m, P.arity + Q.arity, out)


def _merge_symbol_keys(k1, k2):
    a1, e1, b1, t1 = k1
    a2, e2, b2, t2 = k2
    eta, s1 = merge_ascending(e1, e2)
    if eta is None:
        return None, 0
    deta, s2 = merge_ascending(t1, t2)
    if deta is None:
        return None, 0
    # moving the d_eta block of k1 past the eta block of k2
    cross = -1 if (len(t1) * len(e2)) % 2 else 1
    a = tuple(x + z for x, z in zip(a1, a2))
    b = tuple(x + z for x, z in zip(b1, b2))
    return (a, eta, b, deta), s1 * s2 * cross


# Symbol generators are (kind, index) pairs reusing the monomial slot kinds:
# _MY = coordinate y_i, _META = coordinate eta_i, _DY = d_y symbol, _DETA =
# d_eta symbol.  Odd generators: _META (deg -1) and _DETA (deg +1).
_GEN_DEG = {_MY: 0, _META: -1, _DY: 0, _DETA: 1}


def _gen_pairing(g1, g2):
    """Bracket of two generators; only <d_x, x> pairings survive."""
    (k1, i1), (k2, i2) = g1, g2
    if i1 != i2:
        return 0
    if (k1, k2) in ((_DY, _MY), (_DETA, _META)):
        return 1
    if (k1, k2) == (_MY, _DY):
        return -1
    if (k1, k2) == (_META, _DETA):
        # [eta, xi_eta] = -(-1)^{(-1)(+1)} [xi_eta, eta] = +1
        return 1
    return 0


def _word_degree(gens):
    return sum(_GEN_DEG[k] for k, _ in gens)


def _bracket_words(u, v):
    """Leibniz expansion of the bracket of two generator words.

    Returns a list of ``(word, sign)`` pairs where ``word`` is a raw
    concatenation of generators (not yet sorted); signs arise only from the
    Leibniz rules
        [A.g, B] = A.[g, B] + (-1)^{|g||B|} [A, B].g
        [g, B.h] = [g, B].h + (-1)^{|g||B|} B.[g, h].
    """
    if not u or not v:
        return []
    if len(u) > 1:
        head, g = u[:-1], u[-1]
        out = [(list(head) + w, s) for (w, s) in _bracket_words([g], v)]
        sign = -1 if (_GEN_DEG[g[0]] * _word_degree(v)) % 2 else 1
        out.extend((w + [g], s * sign) for (w, s) in _bracket_words(head, v))
        return out
    g = u[0]
    if len(v) == 1:
        val = _gen_pairing(g, v[0])
        return [([], val)] if val else []
    head, h = v[:-1], v[-1]
    out = [(w + [h], s) for (w, s) in _bracket_words([g], head)]
    val = _gen_pairing(g, h)
    if val:
        sign = -1 if (_GEN_DEG[g[0]] * _word_degree(head)) % 2 else 1
        out.append((list(head), sign * val))
    return out


def _key_from_gens(gens, m):
    """Sort a raw generator word into a canonical symbol key.

    Returns ``(key, sign)`` with the Koszul sorting sign, or ``(None, 0)``
    when an odd generator repeats.
    """
    a = [0] * m
    b = [0] * m
    odd = []
    for kind, i in gens:
        if kind == _MY:
            a[i - 1] += 1
        elif kind == _DY:
            b[i - 1] += 1
        elif kind == _META:
            odd.append((0, i))
        else:
            odd.append((1, i))
    sign = 1
    for x in range(len(odd)):
        for z in range(x + 1, len(odd)):
            if odd[x] == odd[z]:
                return None, 0
            if odd[x] > odd[z]:
                sign = -sign
    eta = tuple(sorted(i for (t, i) in odd if t == 0))
    deta = tuple(sorted(i for (t, i) in odd if t == 1))
    return (tuple(a), eta, tuple(b), deta), sign


def schouten(P1: Polyvector, P2: Polyvector) -> Polyvector:
    """Schouten--Nijenhuis bracket via graded Leibniz expansion on symbols.

    This route never touches operator composition; the test suite
    cross-checks it against the principal symbol of the commutator of lifts.
    """
    if P1.m != P2.m:
        raise ValueError("signature mismatch")
    m = P1.m
    out = {}
    for k1, c1 in P1.terms.items():
        g1 = _gen_sequence(k1, m)
        for k2, c2 in P2.terms.items():
            g2 = _gen_sequence(k2, m)
            if not g1 or not g2:
                continue
            c = hseries_mul(c1, c2)
            for word, s in _bracket_words(g1, g2):
                key, ks = _key_from_gens(word, m)
                if key is not None:
                    _accumulate(out, key, c.scale(s * ks))
    arity = max(P1.arity + P2.arity - 1, 0)
    return Polyvector(m, arity, out)
