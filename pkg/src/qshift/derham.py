"""Tensor-word model of the de Rham complex: Amitsur words with the
Alexander-Whitney cup product, the total differential, the evaluation map mu
sending a_0 (x) ... (x) a_r to a_0 Delta a_1 Delta ... Delta a_r, its
derivation nu, and the compatibility checker for pairs (omega, Delta).

A word a_0 (x) ... (x) a_r is stored as a tuple of element-monomial keys
with a rational coefficient and a separate hbar exponent; the interleaved
reading a_0 . e . a_1 . e ... e . a_r with an odd degree-1 slot symbol e
makes the differential a plain graded derivation (element factors map to
delta(a) + e.a - (-1)^deg(a) a.e, slot symbols map to e.e) and makes mu the
substitution homomorphism e -> Delta.
"""

from __future__ import annotations

from fractions import Fraction

from .coefficients import HSeries, solve_rational
from .diffops import Operator, key_degree, op_compose
from .errors import NotMaurerCartan
from .gca import CritLocus, Element, apply_koszul_delta, merge_ascending, unit_key
from .quantise import (Quantisation, centre_differential, mc_residual,
                       operator_keys_in_window, sigma_tangent)
from .cohomology import DEGREE_TRUNCATED, TruncationSpec


def _mono_degree(key):
    return -len(key[1])


def _mono_mul(k1, k2):
    """Product of two element monomial keys: (key, sign) or (None, 0)."""
    (a1, e1), (a2, e2) = k1, k2
    eta, sign = merge_ascending(e1, e2)
    if eta is None:
        return None, 0
    return (tuple(x + z for x, z in zip(a1, a2)), eta), sign


class DRWord:
    """Formal rational combination of (hbar_exp, tensor word) terms."""

    __slots__ = ("m", "terms", "hodge_weight")

    def __init__(self, m, terms=None, hodge_weight=0):
        self.m = int(m)
        clean = {}
        if terms:
            for key, c in terms.items():
                c = Fraction(c)
                if c == 0:
                    continue
                prev = clean.get(key)
                s = prev + c if prev is not None else c
                if s:
                    clean[key] = s
                else:
                    clean.pop(key, None)
        self.terms = clean
        self.hodge_weight = int(hodge_weight)

    @staticmethod
    def zero(m, hodge_weight=0):
        return DRWord(m, {}, hodge_weight)

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, DRWord):
            return NotImplemented
        return self.m == other.m and self.terms == other.terms

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, Fraction(0)) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        weight = min(self.hodge_weight, other.hodge_weight) \
            if self.terms and other.terms else \
            (self.hodge_weight if self.terms else other.hodge_weight)
        return DRWord(self.m, out, weight)

    def __neg__(self):
        return DRWord(self.m, {k: -c for k, c in self.terms.items()},
                      self.hodge_weight)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = Fraction(c)
        return DRWord(self.m, {k: v * c for k, v in self.terms.items()},
                      self.hodge_weight)

    def shift_hbar(self, n):
        return DRWord(self.m, {(e + n, ws): c
                               for (e, ws), c in self.terms.items()},
                      self.hodge_weight)

    def max_length(self):
        return max((len(ws) for (_, ws) in self.terms), default=0)

    def __repr__(self):
        return f"DRWord({len(self.terms)} terms, F^{self.hodge_weight})"


def dr_of(a: Element) -> DRWord:
    """Length-1 word (a)."""
    out = {}
    for key, c in a.terms.items():
        for e, q in c.coeffs.items():
            out[(e, (key,))] = out.get((e, (key,)), Fraction(0)) + q
    return DRWord(a.m, out, 0)


def dr_d(a: Element) -> DRWord:
    """The 1-form word of a:  1 (x) a  -  (-1)^deg(a) a (x) 1."""
    m = a.m
    unit = unit_key(m)
    out = {}
    for key, c in a.terms.items():
        sign = -1 if _mono_degree(key) % 2 else 1
        for e, q in c.coeffs.items():
            k1 = (e, (unit, key))
            out[k1] = out.get(k1, Fraction(0)) + q
            k2 = (e, (key, unit))
            out[k2] = out.get(k2, Fraction(0)) - sign * q
    return DRWord(m, out, 1)


def cup(w1: DRWord, w2: DRWord) -> DRWord:
    """Alexander-Whitney merge: the adjacent factors multiply in O_X."""
    if w1.m != w2.m:
        raise ValueError("signature mismatch")
    out = {}
    for (e1, ws1), c1 in w1.terms.items():
        for (e2, ws2), c2 in w2.terms.items():
            mid, sign = _mono_mul(ws1[-1], ws2[0])
            if mid is None:
                continue
            key = (e1 + e2, ws1[:-1] + (mid,) + ws2[1:])
            s = out.get(key, Fraction(0)) + sign * c1 * c2
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return DRWord(w1.m, out, w1.hodge_weight + w2.hodge_weight)


def apply_codegeneracy(w: DRWord, j: int) -> DRWord:
    """Koszul-signed codegeneracy: multiply adjacent factors j, j+1 with the
    twist (-1)^(deg a_0 + ... + deg a_j).  The twist matches the sign
    conventions of the total differential; words built from algebra elements
    and formal differentials are annihilated by every such map."""
    out = {}
    for (e, ws), c in w.terms.items():
        if j + 1 >= len(ws):
            raise ValueError("codegeneracy index out of range")
        prefix = sum(_mono_degree(k) for k in ws[:j + 1])
        psign = -1 if prefix % 2 else 1
        mid, sign = _mono_mul(ws[j], ws[j + 1])
        if mid is None:
            continue
        key = (e, ws[:j] + (mid,) + ws[j + 2:])
        s = out.get(key, Fraction(0)) + psign * sign * c
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return DRWord(w.m, out, w.hodge_weight)


def dr_total_d(X: CritLocus, w: DRWord) -> DRWord:
    """Total differential: signed unit insertions plus the componentwise
    Koszul differential, as one graded derivation over the interleaved
    factors (slot symbols have degree +1)."""
    m = w.m
    unit = unit_key(m)
    out = {}

    def emit(e, ws, c):
        if c:
            key = (e, ws)
            s = out.get(key, Fraction(0)) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)

    for (e, ws), c in w.terms.items():
        r = len(ws) - 1
        prefix = 0  # total degree of factors strictly to the left
        for i, mono in enumerate(ws):
            psign = -1 if prefix % 2 else 1
            # delta part on this factor
            image = apply_koszul_delta(
                X, Element(m, {mono: HSeries.const(1)}))
            for ikey, ic in image.terms.items():
                emit(e, ws[:i] + (ikey,) + ws[i + 1:], psign * c * ic[0])
            # e.a insertion (unit at slot i) and -(-1)^deg a.e (unit at i+1)
            emit(e, ws[:i] + (unit,) + ws[i:], psign * c)
            asign = -1 if _mono_degree(mono) % 2 else 1
            emit(e, ws[:i + 1] + (unit,) + ws[i + 1:], -psign * asign * c)
            prefix += _mono_degree(mono)
            if i < r:
                # the slot symbol between factors i and i+1: e -> e.e
                esign = -1 if prefix % 2 else 1
                emit(e, ws[:i + 1] + (unit,) + ws[i + 1:], esign * c)
                prefix += 1
    return DRWord(m, out, w.hodge_weight)


def canonical_symplectic(X: CritLocus) -> DRWord:
    """Sum_i dy_i cup d(eta_i), the canonical weight-2 structure."""
    m = X.m
    out = DRWord.zero(m, 2)
    for i in range(1, m + 1):
        out = out + cup(dr_d(Element.y(m, i)), dr_d(Element.eta(m, i)))
    return DRWord(m, out.terms, 2)


def _mult_operator(m, mono):
    return Operator(m, {(mono[0], mono[1], (0,) * m, ()): HSeries.const(1)})


def mu(w: DRWord, delta: Quantisation, X: CritLocus) -> Operator:
    """a_0 (x) ... (x) a_r evaluates to a_0 Delta a_1 Delta ... Delta a_r."""
    m = w.m
    D = delta.as_operator_series()
    out = Operator.zero(m)
    for (e, ws), c in w.terms.items():
        op = _mult_operator(m, ws[0])
        for mono in ws[1:]:
            op = op_compose(op, D)
            if op.is_zero():
                break
            op = op_compose(op, _mult_operator(m, mono))
        out = out + op.scale(HSeries.monomial(e, c))
    return out


def nu(w: DRWord, delta: Quantisation, rho: Operator, X: CritLocus) -> Operator:
    """The mu-derivation substituting rho for one Delta slot, with the
    Koszul sign (-1)^((deg rho - 1) * prefix degree) per slot."""
    m = w.m
    D = delta.as_operator_series()
    out = Operator.zero(m)
    for rd in sorted(rho.degrees()):
        rpart = rho.degree_part(rd)
        shift = rd - 1
        for (e, ws), c in w.terms.items():
            r = len(ws) - 1
            for slot in range(r):
                prefix = sum(_mono_degree(k) for k in ws[:slot + 1]) + slot
                sign = -1 if (shift * prefix) % 2 else 1
                op = _mult_operator(m, ws[0])
                for i, mono in enumerate(ws[1:], start=1):
                    op = op_compose(op, rpart if i - 1 == slot else D)
                    if op.is_zero():
                        break
                    op = op_compose(op, _mult_operator(m, mono))
                out = out + op.scale(HSeries.monomial(e, sign * c))
    return out


def check_chain_identity(w: DRWord, delta: Quantisation, X: CritLocus) -> Operator:
    """Residual of  delta_Delta mu(w) = mu(Dw) + nu(w, Delta, residual(Delta));
    identically zero for every word and every Delta, Maurer-Cartan or not."""
    kappa = mc_residual(X, delta)
    lhs = centre_differential(X, delta, mu(w, delta, X), allow_non_mc=True)
    rhs = mu(dr_total_d(X, w), delta, X) + nu(w, delta, kappa, X)
    return lhs - rhs


class SearchWindow:
    """Finite (order, y-degree, hbar) box for coboundary searches."""

    __slots__ = ("order_cap", "ydeg_cap", "hbar_min", "hbar_max")

    def __init__(self, order_cap=3, ydeg_cap=3, hbar_min=0, hbar_max=5):
        self.order_cap = order_cap
        self.ydeg_cap = ydeg_cap
        self.hbar_min = hbar_min
        self.hbar_max = hbar_max

    def as_dict(self):
        return {"order_cap": self.order_cap, "ydeg_cap": self.ydeg_cap,
                "hbar_min": self.hbar_min, "hbar_max": self.hbar_max}


class CompatVerdict:
    EXACT = "ExactCocycleEquality"
    COBOUNDARY = "CoboundaryWitness"
    FAILS = "Fails"

    __slots__ = ("kind", "witness", "residual", "window")

    def __init__(self, kind, witness=None, residual=None, window=None):
        self.kind = kind
        self.witness = witness
        self.residual = residual
        self.window = window

    def ok(self):
        return self.kind in (self.EXACT, self.COBOUNDARY)

    def __repr__(self):
        return f"CompatVerdict({self.kind})"


def check_compatibility(omega: DRWord, delta: Quantisation, X: CritLocus,
                        window: SearchWindow | None = None) -> CompatVerdict:
    """Compare mu(omega, Delta) with the canonical tangent hbar^2 dDelta/dhbar;
    on strict inequality, search the window for a coboundary witness."""
    if not mc_residual(X, delta).is_zero():
        raise NotMaurerCartan("compatibility needs a Maurer-Cartan Delta")
    if window is None:
        window = SearchWindow()
    r = mu(omega, delta, X) - sigma_tangent(delta).eps_as_series()
    if r.is_zero():
        return CompatVerdict(CompatVerdict.EXACT, window=window)
    degrees = sorted(r.degrees())
    trunc = TruncationSpec(DEGREE_TRUNCATED, window.ydeg_cap)
    candidates = []
    for d in sorted({dd - 1 for dd in degrees}):
        candidates.extend(
            k for k in operator_keys_in_window(X, window.order_cap, trunc)
            if key_degree(k) == d)
    unknowns = [(key, e) for key in candidates
                for e in range(window.hbar_min, window.hbar_max + 1)]
    row_index = {}
    columns = []
    for key, e in unknowns:
        image = centre_differential(
            X, delta, Operator(X.m, {key: HSeries.monomial(e)}),
            allow_non_mc=True)
        col = {}
        for ikey, c in image.terms.items():
            for ie, q in c.coeffs.items():
                ridx = row_index.setdefault((ikey, ie), len(row_index))
                col[ridx] = col.get(ridx, Fraction(0)) + q
        columns.append(col)
    rhs_entries = {}
    for ikey, c in r.terms.items():
        for ie, q in c.coeffs.items():
            ridx = row_index.setdefault((ikey, ie), len(row_index))
            rhs_entries[ridx] = q
    nrows = len(row_index)
    if nrows == 0:
        return CompatVerdict(CompatVerdict.FAILS, residual=r, window=window)
    rows = [[Fraction(0)] * len(unknowns) for _ in range(nrows)]
    for cidx, col in enumerate(columns):
        for ridx, q in col.items():
            rows[ridx][cidx] = q
    rhs = [rhs_entries.get(ridx, Fraction(0)) for ridx in range(nrows)]
    sol = solve_rational(rows, rhs)
    if sol is None:
        return CompatVerdict(CompatVerdict.FAILS, residual=r, window=window)
    terms = {}
    for (key, e), v in zip(unknowns, sol):
        if v:
            prev = terms.get(key, HSeries.zero())
            terms[key] = prev + HSeries.monomial(e, v)
    return CompatVerdict(CompatVerdict.COBOUNDARY,
                         witness=Operator(X.m, terms), window=window)
