"""Quantisations of the critical-locus algebra: Maurer-Cartan elements in
the second level of the order filtration, the canonical second-order BV
operator, the centre differential, the canonical tangent vector, and the
dimension bookkeeping for the hbar-order filtrations.

A quantisation is stored as finitely many hbar-free operator coefficients
Delta_j (j >= 2), read as Delta = Sum_j Delta_j hbar^(j-1) with the
membership constraint order(Delta_j) <= j.
"""

from __future__ import annotations

from fractions import Fraction

from .coefficients import HSeries, rank_rational
from .cohomology import (DEGREE_TRUNCATED, WEIGHT_GRADED, TruncationSpec,
                         eta_subsets, iter_y_exponents)
from .diffops import (Operator, op_commutator, op_order, key_degree,
                      key_order, symbol)
from .errors import NotMaurerCartan, TruncationRequired
from .gca import CritLocus, Element, gmul


def koszul_operator(X: CritLocus) -> Operator:
    """Contraction with df as a normal-ordered operator."""
    m = X.m
    terms = {}
    for i in range(1, m + 1):
        for (a, eta), c in X.partials[i - 1].terms.items():
            terms[(a, eta, (0,) * m, (i,))] = c
    return Operator(m, terms)


class Quantisation:
    """Finitely supported coefficient map j -> Delta_j with g-truncation."""

    __slots__ = ("m", "coeffs", "g_trunc")

    def __init__(self, m, coeffs=None, g_trunc=None):
        self.m = int(m)
        clean = {}
        if coeffs:
            for j, op in coeffs.items():
                j = int(j)
                if j < 2:
                    raise ValueError("quantisation coefficients start at j = 2")
                if op.is_zero():
                    continue
                if op_order(op) > j:
                    raise ValueError(
                        f"order {op_order(op)} coefficient at level {j} breaks "
                        f"the filtration bound")
                if op.hbar_exponents() - {0}:
                    raise ValueError("coefficients must be hbar-free")
                clean[j] = op
        self.coeffs = clean
        self.g_trunc = g_trunc

    @staticmethod
    def zero(m):
        return Quantisation(m)

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, Quantisation):
            return NotImplemented
        return self.m == other.m and self.coeffs == other.coeffs

    def as_operator_series(self) -> Operator:
        """Sum_j Delta_j hbar^(j-1) as a single operator."""
        out = Operator.zero(self.m)
        for j, op in self.coeffs.items():
            out = out + op.scale(HSeries.monomial(j - 1))
        return out

    def __repr__(self):
        return f"Quantisation({self.as_operator_series()})"


class TangentElement:
    """A quantisation together with an epsilon-direction Sum_j v_j hbar^j."""

    __slots__ = ("base", "eps_part")

    def __init__(self, base: Quantisation, eps_part):
        self.base = base
        clean = {}
        for j, op in (eps_part or {}).items():
            if op.is_zero():
                continue
            if op_order(op) > j:
                raise ValueError("epsilon part breaks the order bound")
            clean[int(j)] = op
        self.eps_part = clean

    def eps_as_series(self) -> Operator:
        out = Operator.zero(self.base.m)
        for j, op in self.eps_part.items():
            out = out + op.scale(HSeries.monomial(j))
        return out


class FiltrationLabel:
    """One of the decreasing filtrations: Ftilde, G (hbar-adic), or their
    convolution."""

    FTILDE = "Ftilde"
    G = "G"
    CONV = "GconvF"

    __slots__ = ("kind", "level")

    def __init__(self, kind, level=0):
        if kind not in (self.FTILDE, self.G, self.CONV):
            raise ValueError(f"unknown filtration kind {kind!r}")
        if level < 0:
            raise ValueError("filtration level must be >= 0")
        self.kind = kind
        self.level = int(level)

    def __repr__(self):
        return f"FiltrationLabel({self.kind}, {self.level})"


def truncate_quantisation(delta: Quantisation, order: int) -> Quantisation:
    """Drop coefficients whose hbar exponent j-1 reaches the truncation
    order; the result records the G-truncation level."""
    coeffs = {j: op for j, op in delta.coeffs.items() if j - 1 < order}
    return Quantisation(delta.m, coeffs, g_trunc=order)


def bv_quantisation(X: CritLocus) -> Quantisation:
    """The canonical second-order quantisation hbar * Sum_i d_y_i d_eta_i."""
    m = X.m
    terms = {}
    for i in range(1, m + 1):
        e = [0] * m
        e[i - 1] = 1
        terms[((0,) * m, (), tuple(e), (i,))] = HSeries.const(1)
    return Quantisation(m, {2: Operator(m, terms)}, g_trunc=None)


def mc_residual(X: CritLocus, delta: Quantisation) -> Operator:
    """[delta_Koszul, Delta] + (1/2)[Delta, Delta]; zero iff Delta is a
    quantisation (the square-zero condition for delta + Delta)."""
    D = delta.as_operator_series()
    dk = koszul_operator(X)
    return op_commutator(dk, D) + op_commutator(D, D).scale(Fraction(1, 2))


def sigma_tangent(delta: Quantisation) -> TangentElement:
    """Canonical tangent vector: epsilon part hbar^2 d(Delta)/d(hbar)."""
    eps = {j: op.scale(j - 1) for j, op in delta.coeffs.items() if j != 1}
    return TangentElement(delta, eps)


def centre_differential(X: CritLocus, delta: Quantisation, u: Operator,
                        allow_non_mc: bool = False) -> Operator:
    """[delta_Koszul + Delta, u], the differential of the centre."""
    if not allow_non_mc and not mc_residual(X, delta).is_zero():
        raise NotMaurerCartan("Delta does not satisfy the master equation")
    total = koszul_operator(X) + delta.as_operator_series()
    return op_commutator(total, u)


# ---------------------------------------------------------------------------
# Non-degeneracy
# ---------------------------------------------------------------------------

def _symbol_partial(terms, kind, i, m):
    """Left partial of a symbol-term dict by one derivative symbol."""
    out = {}
    for (a, eta, b, deta), c in terms.items():
        if kind == "y":
            if b[i - 1]:
                nb = list(b)
                nb[i - 1] -= 1
                key = (a, eta, tuple(nb), deta)
                prev = out.get(key)
                s = prev + c.scale(b[i - 1]) if prev is not None else c.scale(b[i - 1])
                if s.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = s
        else:
            if i in deta:
                pos = deta.index(i)
                nd = deta[:pos] + deta[pos + 1:]
                sign = -1 if (len(eta) + pos) % 2 else 1
                key = (a, eta, b, nd)
                prev = out.get(key)
                s = prev + c.scale(sign) if prev is not None else c.scale(sign)
                if s.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = s
    return out


def _det_elements(mat, m):
    """Leibniz determinant of a matrix of Elements (row order products)."""
    n = len(mat)
    import itertools
    det = Element.zero(m)
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        prod = Element.one(m)
        zero = False
        for r in range(n):
            entry = mat[r][perm[r]]
            if entry.is_zero():
                zero = True
                break
            prod = gmul(prod, entry)
        if zero or prod.is_zero():
            continue
        det = det + (prod if sign > 0 else -prod)
    return det


def is_nondegenerate(X: CritLocus, delta: Quantisation):
    """Unit-determinant test of the symbol pairing of Delta_2 on generators.

    Returns ``(verdict, certificate)`` where the certificate is the exact
    determinant of the 2m x 2m pairing matrix over O_X.
    """
    m = X.m
    d2 = delta.coeffs.get(2)
    if d2 is None:
        return False, Element.zero(m)
    sym = symbol(d2, 2)
    gens = [("y", i) for i in range(1, m + 1)] + [("eta", i) for i in range(1, m + 1)]
    mat = []
    for (k1, i1) in gens:
        row = []
        first = _symbol_partial(sym.terms, k1, i1, m)
        for (k2, i2) in gens:
            second = _symbol_partial(first, k2, i2, m)
            row.append(Element(m, {(a, eta): c
                                   for (a, eta, b, deta), c in second.items()}))
        mat.append(row)
    det = _det_elements(mat, m)
    unit = ((0,) * m, ())
    is_const = (len(det.terms) == 1 and unit in det.terms
                and set(det.terms[unit].coeffs) <= {0})
    return (bool(is_const and not det.is_zero()), det)


# ---------------------------------------------------------------------------
# Filtration dimension tables
# ---------------------------------------------------------------------------

def operator_keys_in_window(X: CritLocus, order_cap: int, trunc: TruncationSpec,
                            arity_exact=None):
    """Operator monomial keys with derivative degree <= order_cap (or exactly
    ``arity_exact``) and multiplication part within the truncation window."""
    m = X.m
    weights = X.signature.weights
    if trunc.mode == WEIGHT_GRADED and weights is None:
        raise TruncationRequired("weight truncation needs quasi-homogeneity weights")
    keys = []
    if order_cap < 0:
        return keys
    subsets = eta_subsets(m)
    dparts = []
    for T in subsets:
        rem = order_cap - len(T)
        if arity_exact is not None:
            rem = arity_exact - len(T)
            if rem < 0:
                continue
            for b in iter_y_exponents(m, rem):
                if sum(b) == rem:
                    dparts.append((tuple(b), T))
        else:
            if rem < 0:
                continue
            for b in iter_y_exponents(m, rem):
                dparts.append((tuple(b), T))
    for b, T in dparts:
        for S in subsets:
            if trunc.mode == WEIGHT_GRADED:
                fixed = (sum(1 - weights[s - 1] for s in S)
                         - sum(weights[i] * b[i] for i in range(m))
                         - sum(1 - weights[t - 1] for t in T))
                budget = Fraction(trunc.bound) - fixed
                if budget < 0:
                    continue
                alist = iter_y_exponents(m, budget, weights)
            else:
                alist = iter_y_exponents(m, trunc.bound)
            for a in alist:
                keys.append((a, S, b, T))
    return keys


def _order_bound(label: FiltrationLabel, p: int, j: int):
    """Order cap of the filtration piece at hbar^(j-1); None means empty."""
    if j < 0:
        return None
    if label.kind == FiltrationLabel.FTILDE:
        return j if j >= p else None
    if label.kind == FiltrationLabel.G:
        if j < p or j - label.level < 0:
            return None
        return j - label.level
    # convolution (G*Ftilde)^level
    q = label.level
    if j >= q:
        return j
    bound = 2 * j - q
    return bound if bound >= 0 else None


def filtration_dims(label: FiltrationLabel, p: int, degrees, hbar_exps,
                    X: CritLocus, trunc: TruncationSpec):
    """Q-dimensions of a filtration piece per (cohomological degree,
    hbar-exponent) within a finite window."""
    table = {}
    for e in hbar_exps:
        j = e + 1
        bound = _order_bound(label, p, j)
        if bound is None:
            for d in degrees:
                table[(d, e)] = 0
            continue
        keys = operator_keys_in_window(X, bound, trunc)
        for d in degrees:
            table[(d, e)] = sum(1 for k in keys if key_degree(k) == d)
    return table


# ---------------------------------------------------------------------------
# Obstruction eigenvalue analysis
# ---------------------------------------------------------------------------

class SpectrumReport:
    __slots__ = ("p", "k", "block_dim", "eigenvalues", "combined_scalar",
                 "invertible", "diagonalisable")

    def __init__(self, p, k, block_dim, eigenvalues, combined_scalar,
                 invertible, diagonalisable):
        self.p = p
        self.k = k
        self.block_dim = block_dim
        self.eigenvalues = eigenvalues
        self.combined_scalar = combined_scalar
        self.invertible = invertible
        self.diagonalisable = diagonalisable

    def as_dict(self):
        return {"p": self.p, "k": self.k, "block_dim": self.block_dim,
                "eigenvalues": self.eigenvalues,
                "combined_scalar": self.combined_scalar,
                "invertible": self.invertible,
                "diagonalisable": self.diagonalisable}


def nu_eigen_analysis(X: CritLocus, p: int, k: int,
                      trunc: TruncationSpec | None = None) -> SpectrumReport:
    """Spectrum of the derivation nu(omega, pi) on the arity-p symbol block,
    for the canonical pair, together with the shifted operator's
    invertibility on the block ("+ d/d(hbar^-1)" acts by the scalar 1-p-k).
    """
    from .derham import canonical_symplectic, nu

    if k < 1 or p < 0:
        raise ValueError("need p >= 0 and k >= 1")
    if trunc is None:
        trunc = TruncationSpec(DEGREE_TRUNCATED, 2)
    m = X.m
    omega = canonical_symplectic(X)
    delta = bv_quantisation(X)
    basis = operator_keys_in_window(X, p, trunc, arity_exact=p)
    if not basis:
        raise TruncationRequired("empty symbol block in the window")
    index = {key: i for i, key in enumerate(basis)}
    n = len(basis)
    mat = [[Fraction(0)] * n for _ in range(n)]
    for col, key in enumerate(basis):
        rho = Operator(m, {key: HSeries.const(1)})
        image = nu(omega, delta, rho, X)
        comp = image.hbar_component(1)
        for ikey, c in comp.terms.items():
            if key_order(ikey) != p:
                continue
            row = index.get(ikey)
            if row is None:
                continue
            mat[row][col] += c[0]
    scalar_shift = 1 - p - k
    lam0 = mat[0][0]
    if all(mat[r][c] == (lam0 if r == c else 0)
           for r in range(n) for c in range(n)):
        # the generic case for the canonical pair: the block acts by a scalar
        eigenvalues = [int(lam0)] if lam0.denominator == 1 else [lam0]
        return SpectrumReport(p, k, n, eigenvalues,
                              eigenvalues[0] + scalar_shift,
                              eigenvalues[0] + scalar_shift != 0, True)
    eigenvalues = []
    for lam in range(0, p + 1):
        shifted = [[mat[r][c] - (lam if r == c else 0) for c in range(n)]
                   for r in range(n)]
        if rank_rational(shifted) < n:
            eigenvalues.append(lam)
    # semisimplicity on the window: the product of (M - lam) over found
    # eigenvalues must annihilate the block
    prod = [[Fraction(1) if r == c else Fraction(0) for c in range(n)]
            for r in range(n)]
    for lam in eigenvalues:
        shifted = [[mat[r][c] - (lam if r == c else 0) for c in range(n)]
                   for r in range(n)]
        prod = [[sum(prod[r][t] * shifted[t][c] for t in range(n))
                 for c in range(n)] for r in range(n)]
    diagonalisable = all(v == 0 for row in prod for v in row)
    combined = sorted({lam + scalar_shift for lam in eigenvalues})
    combined_scalar = combined[0] if len(combined) == 1 else None
    shifted = [[mat[r][c] + (scalar_shift if r == c else 0) for c in range(n)]
               for r in range(n)]
    invertible = rank_rational(shifted) == n
    return SpectrumReport(p, k, n, eigenvalues, combined_scalar,
                          invertible, diagonalisable)
