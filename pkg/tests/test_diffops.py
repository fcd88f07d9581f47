import random

import pytest

from qshift.coefficients import HSeries
from qshift.diffops import (Operator, Polyvector, op_apply, op_commutator,
                            op_compose, op_order, pv_mul, schouten, symbol)
from qshift.errors import OrderTooLow, ZeroOperator
from qshift.gca import Element, gmul

from conftest import (random_element, random_homogeneous_operator,
                      random_operator, random_polyvector)


def test_apply_contract_then_differentiate():
    m = 1
    D = op_compose(Operator.d_y(m, 1), Operator.d_eta(m, 1))
    a = gmul(Element.y(m, 1), Element.eta(m, 1))
    assert op_apply(D, a) == Element.one(m)


def test_apply_missing_eta_kills():
    m = 2
    assert op_apply(Operator.d_eta(m, 1), Element.y(m, 2)).is_zero()


def test_apply_euler_operator():
    m = 1
    euler = op_compose(Operator.mult(Element.y(m, 1)), Operator.d_y(m, 1))
    assert op_apply(euler, Element.y(m, 1) ** 3) == 3 * Element.y(m, 1) ** 3


def test_compose_heisenberg():
    m = 1
    D = op_compose(Operator.d_y(m, 1), Operator.mult(Element.y(m, 1)))
    expected = op_compose(Operator.mult(Element.y(m, 1)), Operator.d_y(m, 1)) + 1
    assert D == expected


def test_compose_odd_pair():
    m = 1
    D = op_compose(Operator.d_eta(m, 1), Operator.mult(Element.eta(m, 1)))
    expected = (Operator.identity(m)
                - op_compose(Operator.mult(Element.eta(m, 1)), Operator.d_eta(m, 1)))
    assert D == expected


def test_compose_commuting_multiplications():
    m = 2
    D = op_compose(Operator.mult(Element.y(m, 1)), Operator.mult(Element.y(m, 2)))
    assert D == Operator.mult(gmul(Element.y(m, 1), Element.y(m, 2)))


def test_commutator_canonical_pairs():
    m = 2
    assert op_commutator(Operator.d_y(m, 1), Operator.mult(Element.y(m, 1))) \
        == Operator.identity(m)
    assert op_commutator(Operator.d_eta(m, 1), Operator.mult(Element.eta(m, 1))) \
        == Operator.identity(m)
    assert op_commutator(Operator.mult(Element.y(m, 1)),
                         Operator.mult(Element.y(m, 2))).is_zero()


def test_order_examples():
    m = 2
    assert op_order(op_compose(Operator.d_y(m, 1), Operator.d_eta(m, 1))) == 2
    assert op_order(Operator.mult(Element.y(m, 1) ** 3)) == 0
    mixed = (op_compose(Operator.mult(Element.y(m, 1)), Operator.d_y(m, 1))
             + Operator.d_eta(m, 2))
    assert op_order(mixed) == 1
    with pytest.raises(ZeroOperator):
        op_order(Operator.zero(m))


def test_composition_application_compat_random():
    rng = random.Random(5)
    for _ in range(60):
        m = rng.randint(1, 3)
        D1 = random_operator(rng, m, max_order=4)
        D2 = random_operator(rng, m, max_order=4)
        a = random_element(rng, m, max_ydeg=3)
        assert op_apply(op_compose(D1, D2), a) == op_apply(D1, op_apply(D2, a))


def test_commutator_order_drop_random():
    rng = random.Random(6)
    for _ in range(60):
        m = rng.randint(1, 2)
        D1 = random_operator(rng, m)
        D2 = random_operator(rng, m)
        C = op_commutator(D1, D2)
        if C.is_zero() or D1.is_zero() or D2.is_zero():
            continue
        assert op_order(C) <= op_order(D1) + op_order(D2) - 1


def test_symbol_drops_lower_order():
    m = 1
    D = op_compose(Operator.mult(Element.y(m, 1)), Operator.d_y(m, 1)) + 1
    s = symbol(D, 1)
    assert s.terms == {((1,), (), (1,), ()): HSeries.const(1)}
    s2 = symbol(op_compose(Operator.d_y(m, 1), Operator.d_eta(m, 1)), 2)
    assert s2.terms == {((0,), (), (1,), (1,)): HSeries.const(1)}
    assert symbol(Operator.mult(Element.y(m, 1) ** 2), 1).is_zero()
    with pytest.raises(OrderTooLow):
        symbol(op_compose(Operator.d_y(m, 1), Operator.d_y(m, 1)), 1)


def test_symbol_homomorphism_random():
    rng = random.Random(7)
    for _ in range(60):
        m = rng.randint(1, 2)
        k = rng.randint(1, 2)
        l = rng.randint(1, 2)
        D1 = random_homogeneous_operator(rng, m, k, rng.randint(0, 1))
        D2 = random_homogeneous_operator(rng, m, l, rng.randint(0, 1))
        if D1.is_zero() or D2.is_zero():
            continue
        lhs = symbol(op_compose(D1, D2), k + l)
        rhs = pv_mul(symbol(D1, k), symbol(D2, l))
        assert lhs == rhs


def test_schouten_biderivation_example():
    m = 1
    P = Polyvector(m, 2, {((0,), (), (2,), ()): HSeries.const(1)})
    Q = Polyvector(m, 0, {((2,), (), (0,), ()): HSeries.const(1)})
    expected = Polyvector(m, 1, {((1,), (), (1,), ()): HSeries.const(4)})
    assert schouten(P, Q) == expected


def test_schouten_disjoint_and_scalar():
    m = 2
    P = Polyvector(m, 1, {((0, 0), (), (1, 0), ()): HSeries.const(1)})
    Q = Polyvector(m, 0, {((0, 1), (), (0, 0), ()): HSeries.const(1)})
    assert schouten(P, Q).is_zero()
    one = Polyvector(m, 0, {((0, 0), (), (0, 0), ()): HSeries.const(1)})
    R = random_polyvector(random.Random(0), m, 2)
    assert schouten(R, one).is_zero()
    assert schouten(one, R).is_zero()


def test_schouten_equals_symbol_of_commutator_random():
    rng = random.Random(8)
    for _ in range(80):
        m = rng.randint(1, 2)
        p = rng.randint(1, 3)
        q = rng.randint(1, 3)
        P = random_polyvector(rng, m, p)
        Q = random_polyvector(rng, m, q)
        via_comm = symbol(op_commutator(P.lift(), Q.lift()), p + q - 1)
        assert schouten(P, Q) == via_comm


def _pv_degree(P):
    degs = {-len(k[1]) + len(k[3]) for k in P.terms}
    assert len(degs) <= 1
    return degs.pop() if degs else 0


def test_schouten_graded_antisymmetry_and_jacobi():
    rng = random.Random(9)
    checked = 0
    while checked < 40:
        m = rng.randint(1, 2)
        P = random_polyvector(rng, m, rng.randint(1, 2), nterms=1)
        Q = random_polyvector(rng, m, rng.randint(1, 2), nterms=1)
        R = random_polyvector(rng, m, rng.randint(1, 2), nterms=1)
        if P.is_zero() or Q.is_zero() or R.is_zero():
            continue
        dp, dq, dr = _pv_degree(P), _pv_degree(Q), _pv_degree(R)
        sign = -1 if (dp % 2) and (dq % 2) else 1
        assert schouten(P, Q) == schouten(Q, P).scale(-sign)
        # graded Jacobi: [P,[Q,R]] = [[P,Q],R] + (-1)^{|P||Q|}[Q,[P,R]]
        s = -1 if (dp % 2) and (dq % 2) else 1
        lhs = schouten(P, schouten(Q, R))
        rhs = schouten(schouten(P, Q), R) + schouten(Q, schouten(P, R)).scale(s)
        assert lhs == rhs
        checked += 1


def test_schouten_leibniz_random():
    rng = random.Random(10)
    checked = 0
    while checked < 40:
        m = rng.randint(1, 2)
        P = random_polyvector(rng, m, rng.randint(1, 2), nterms=1)
        Q = random_polyvector(rng, m, rng.randint(0, 2), nterms=1)
        R = random_polyvector(rng, m, rng.randint(0, 2), nterms=1)
        if P.is_zero() or Q.is_zero() or R.is_zero():
            continue
        dp, dq = _pv_degree(P), _pv_degree(Q)
        sign = -1 if (dp % 2) and (dq % 2) else 1
        lhs = schouten(P, pv_mul(Q, R))
        rhs = pv_mul(schouten(P, Q), R) + pv_mul(Q, schouten(P, R)).scale(sign)
        assert lhs == rhs
        checked += 1


def test_inductive_filtration_equivalence():
    """Normal-form derivative degree k matches the commutator-defined level:
    (k+1)-fold commutators with multiplications vanish, some k-fold does not."""
    rng = random.Random(11)
    checked = 0
    while checked < 15:
        m = rng.randint(1, 2)
        D = random_operator(rng, m, max_order=3, nterms=2)
        if D.is_zero():
            continue
        k = op_order(D)
        current = D
        witnesses = ([Operator.mult(Element.y(m, i + 1)) for i in range(m)]
                     + [Operator.mult(Element.eta(m, i + 1)) for i in range(m)])
        # some k-fold iterated commutator with generators is nonzero
        frontier = [D]
        for _ in range(k):
            frontier = [op_commutator(w, u) for u in frontier for w in witnesses]
            frontier = [u for u in frontier if not u.is_zero()]
        assert frontier, "operator dropped filtration level early"
        assert all(op_order(u) == 0 for u in frontier)
        # and every (k+1)-fold one vanishes
        for u in frontier:
            for w in witnesses:
                assert op_commutator(w, u).is_zero()
        for _ in range(3):
            a = Operator.mult(random_element(rng, m))
            iterated = D
            for _ in range(k + 1):
                iterated = op_commutator(a, iterated)
            assert iterated.is_zero()
        checked += 1


def test_hbar_components():
    m = 1
    D = Operator.d_y(m, 1).scale(HSeries({0: 1, 2: 3}))
    assert D.hbar_component(2) == Operator.d_y(m, 1).scale(3)
    assert D.hbar_component(1).is_zero()
    assert D.hbar_exponents() == {0, 2}
