import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chowring import (ChowDatum, GroupActionDatum, MorphismDatum, check_graded_isomorphism, compose_morphisms,
                      degree, drop_middle_factor, identity_morphism, mul, point, point_class,
                      product, product_morphism, projective_space, pullback, pushforward, quotient,
                      swap_action, tensor_class, trivial_action)
from correspond import compose, diagonal, product_cycle
from errors import AmbientMismatchError, InvalidActionError, InvalidDatumError, UnsupportedDatumError
from exactlin import identity_matrix, matrices_equal, rat_matrix
from strategies import correspondences


def line(X, codim=1):
    return X.basis_class(codim, 0)


class TestProjectiveSpace:
    def test_point(self):
        pt = point()
        assert pt.ranks == [1]
        assert degree(pt.unit()) == 1

    def test_p1(self, p1):
        assert p1.ranks == [1, 1]
        assert degree(line(p1)) == 1
        assert len(p1.kunneth_pairs()) == 2

    def test_p2_powers(self, p2):
        l = line(p2)
        assert degree(mul(l, l)) == 1
        assert mul(mul(l, l), l).is_zero()
        assert mul(mul(l, l), l).codim == 3

    def test_negative_dimension(self):
        with pytest.raises(InvalidDatumError):
            projective_space(-1)

    def test_point_class(self, p3):
        pt = point_class(p3)
        assert pt.codim == 3
        assert degree(pt) == 1


class TestDatumValidation:
    def test_unit_must_act_as_identity(self):
        mult = {(0, 0): [[(2,)]], (0, 1): [[(1,)]], (1, 0): [[(1,)]]}
        with pytest.raises(InvalidDatumError, match="unit"):
            ChowDatum("bad", 1, [["1"], ["x"]], mult, (1,))

    def test_missing_structure_constants(self):
        with pytest.raises(InvalidDatumError, match="missing"):
            ChowDatum("bad", 1, [["1"], ["x"]], {(0, 0): [[(1,)]], (0, 1): [[(1,)]]}, (1,))

    def test_degree_map_size(self):
        mult = {(0, 0): [[(1,)]], (0, 1): [[(1,)]], (1, 0): [[(1,)]]}
        with pytest.raises(InvalidDatumError, match="degree map"):
            ChowDatum("bad", 1, [["1"], ["x"]], mult, (1, 1))

    def test_kunneth_must_act_as_identity(self):
        mult = {(0, 0): [[(1,)]], (0, 1): [[(1,)]], (1, 0): [[(1,)]]}
        kunneth = [((0, (1,)), (1, (2,))), ((1, (1,)), (0, (1,)))]
        with pytest.raises(InvalidDatumError, match="identity"):
            ChowDatum("bad", 1, [["1"], ["x"]], mult, (1,), kunneth=kunneth)

    def test_datum_without_kunneth(self, mock_curve, p1):
        assert not mock_curve.has_kunneth
        with pytest.raises(UnsupportedDatumError):
            mock_curve.kunneth_pairs()
        with pytest.raises(UnsupportedDatumError):
            product(mock_curve, p1)

    def test_class_size_is_checked(self, p2):
        with pytest.raises(AmbientMismatchError):
            p2.class_from(1, [1, 2])

    def test_classes_on_different_data_do_not_mix(self, p1, p2):
        with pytest.raises(AmbientMismatchError):
            line(p1) + line(p2)
        with pytest.raises(AmbientMismatchError):
            mul(line(p1), line(p2))


class TestProduct:
    def test_p1_times_p1(self, p1, p1xp1):
        assert p1xp1.ranks == [1, 2, 1]
        a = tensor_class(p1xp1, line(p1), p1.unit())
        b = tensor_class(p1xp1, p1.unit(), line(p1))
        assert mul(a, a).is_zero()
        assert degree(mul(a, b)) == 1
        assert p1xp1.has_kunneth
        assert p1xp1.cellular

    def test_product_with_a_point(self, p2):
        P = product(point(), p2)
        assert P.ranks == [1, 1, 1]
        maps = {i: identity_matrix(1) for i in range(3)}
        assert check_graded_isomorphism(p2, P, maps)

    def test_labels(self, p1xp1):
        assert p1xp1.labels(1) == ("l^0⊗l^1", "l^1⊗l^0")

    def test_tensor_class_needs_the_factors(self, p1, p2, p1xp1):
        with pytest.raises(AmbientMismatchError):
            tensor_class(p1xp1, line(p2), p1.unit())

    def test_tensor_position_on_non_product(self, p2):
        with pytest.raises(UnsupportedDatumError):
            p2.tensor_position((0, 0, 0, 0))


class TestMorphisms:
    def test_identity(self, p2):
        f = identity_morphism(p2)
        assert pullback(f, line(p2)) == line(p2)
        assert pushforward(f, line(p2, 2)) == line(p2, 2)

    def test_projection_formula_is_enforced(self, p1):
        pull = {0: identity_matrix(1), 1: rat_matrix([[2]])}
        push = {0: identity_matrix(1), 1: identity_matrix(1)}
        with pytest.raises(InvalidDatumError):
            MorphismDatum(p1, p1, pull, push)

    def test_shapes_are_checked(self, p1xp1, p1):
        with pytest.raises(InvalidDatumError, match="shape"):
            MorphismDatum(p1xp1, p1, {1: rat_matrix([[1, 0, 0]])}, {}, validate=False)

    def test_generic_degree_must_be_positive(self, p1):
        maps = {i: identity_matrix(1) for i in range(2)}
        with pytest.raises(InvalidDatumError, match="generic degree"):
            MorphismDatum(p1, p1, maps, dict(maps), generic_degree=0)

    def test_product_of_identities(self, p1, p1xp1):
        f = identity_morphism(p1)
        g = product_morphism(f, f, p1xp1, p1xp1)
        for k in range(3):
            assert matrices_equal(g.pullback_matrix(k), identity_matrix(p1xp1.rank(k)))
            assert matrices_equal(g.pushforward_matrix(k), identity_matrix(p1xp1.rank(k)))

    def test_composition_multiplies_generic_degrees(self, sym2, p1xp1):
        Q, q = sym2
        composite = compose_morphisms(q, identity_morphism(p1xp1))
        assert composite.generic_degree == 2
        assert composite.target is Q

    def test_composition_needs_matching_ends(self, p1, p2):
        with pytest.raises(AmbientMismatchError):
            compose_morphisms(identity_morphism(p1), identity_morphism(p2))


@pytest.fixture(scope="module")
def triple(p1, p1xp1):
    T = product(p1xp1, p1)
    return T, drop_middle_factor(T, p1xp1)


def _cycle_class(P, alpha):
    X, Y = P.factors
    total = P.zero(alpha.codim)
    for i, p, j, q, c in alpha.terms():
        total = total + tensor_class(P, X.basis_class(i, p), Y.basis_class(j, q)).scaled(c)
    return total


def _outer_factors(T, alpha):
    """p12^*alpha and p23^*alpha for alpha on P^1 x P^1."""
    ab, c_factor = T.factors
    a_factor, b_factor = ab.factors
    first, second = T.zero(alpha.codim), T.zero(alpha.codim)
    for i, p, j, q, c in alpha.terms():
        left = tensor_class(ab, a_factor.basis_class(i, p), b_factor.basis_class(j, q))
        first = first + tensor_class(T, left, c_factor.unit()).scaled(c)
        middle = tensor_class(ab, a_factor.unit(), b_factor.basis_class(i, p))
        second = second + tensor_class(T, middle, c_factor.basis_class(j, q)).scaled(c)
    return first, second


class TestDropMiddleFactor:
    def test_pushforward_takes_degree_of_middle(self, p1, p1xp1, triple):
        T, p13 = triple
        x = tensor_class(T, tensor_class(p1xp1, line(p1), line(p1)), p1.unit())
        assert pushforward(p13, x) == tensor_class(p1xp1, line(p1), p1.unit())

    def test_pullback_inserts_unit(self, p1, p1xp1, triple):
        T, p13 = triple
        y = tensor_class(p1xp1, p1.unit(), line(p1))
        expected = tensor_class(T, tensor_class(p1xp1, p1.unit(), p1.unit()), line(p1))
        assert pullback(p13, y) == expected

    def test_needs_triple_product(self, p1xp1):
        with pytest.raises(UnsupportedDatumError):
            drop_middle_factor(p1xp1, p1xp1)

    def test_diagonal_through_triple_product(self, p1, p1xp1, triple):
        T, p13 = triple
        delta = diagonal(p1)
        _, after = _outer_factors(T, delta)
        before, _ = _outer_factors(T, delta)
        assert pushforward(p13, mul(before, after)) == _cycle_class(p1xp1, delta)

    @settings(max_examples=20, deadline=None)
    @given(data=st.data(), first=st.integers(0, 2), second=st.integers(0, 2))
    def test_composition_agrees_with_triple_product(self, p1, p1xp1, triple, data, first, second):
        T, p13 = triple
        alpha = data.draw(correspondences(p1, p1, first))
        beta = data.draw(correspondences(p1, p1, second))
        pulled_alpha, _ = _outer_factors(T, alpha)
        _, pulled_beta = _outer_factors(T, beta)
        assert pushforward(p13, mul(pulled_alpha, pulled_beta)) == _cycle_class(p1xp1, compose(beta, alpha))


class TestQuotient:
    def test_symmetric_square_is_p2(self, p2, sym2):
        Q, q = sym2
        assert Q.ranks == [1, 1, 1]
        assert Q.has_kunneth
        maps = {0: rat_matrix([[1]]), 1: rat_matrix([[1]]), 2: rat_matrix([[2]])}
        assert check_graded_isomorphism(p2, Q, maps)

    def test_hyperplane_square(self, sym2):
        Q, _ = sym2
        h = Q.basis_class(1, 0)
        assert mul(h, h).coeffs == (2,)
        assert degree(mul(h, h)) == 1

    def test_quotient_map(self, sym2, p1xp1):
        Q, q = sym2
        assert q.generic_degree == 2
        for j in range(3):
            for y in Q.classes(j):
                assert pushforward(q, pullback(q, y)) == y.scaled(2)

    def test_pullback_of_pushforward_sums_the_orbit(self, p1, sym2, p1xp1):
        Q, q = sym2
        x = tensor_class(p1xp1, line(p1), p1.unit())
        swapped = tensor_class(p1xp1, p1.unit(), line(p1))
        assert pullback(q, pushforward(q, x)) == x + swapped

    def test_trivial_quotient(self, p2):
        Q, q = quotient(trivial_action(p2))
        assert Q.ranks == p2.ranks
        assert Q.has_kunneth
        assert q.generic_degree == 1
        assert pushforward(q, pullback(q, Q.basis_class(1, 0))) == Q.basis_class(1, 0)


@pytest.fixture(scope="module")
def push_pull_square(p1xp1, sym2):
    """
    The square relating V x V x V and W x V x W for the quotient q: V -> W, V = P^1 x P^1.

    Returns:
        (q x 1 x q, p13 on the V side, p13 on the W side, q x q)
    """
    W, q = sym2
    V = p1xp1
    vv, wv, ww = product(V, V, validate=False), product(W, V, validate=False), product(W, W, validate=False)
    vvv, wvw = product(vv, V, validate=False), product(wv, W, validate=False)
    q_first = product_morphism(q, identity_morphism(V), vv, wv)
    q_outer = product_morphism(q_first, q, vvv, wvw)
    q_both = product_morphism(q, q, vv, ww)
    return q_outer, drop_middle_factor(vvv, vv, validate=False), drop_middle_factor(wvw, ww, validate=False), q_both


class TestQuotientProducts:
    def test_pullback_of_exterior_product(self, sym2, push_pull_square):
        W, q = sym2
        q_both = push_pull_square[3]
        h = line(W)
        pulled = pullback(q_both, tensor_class(q_both.target, h, h))
        assert pulled == tensor_class(q_both.source, pullback(q, h), pullback(q, h))

    def test_generic_degrees_multiply(self, push_pull_square):
        q_outer, _, _, q_both = push_pull_square
        assert q_outer.generic_degree == 4
        assert q_both.generic_degree == 4

    def test_push_pull_commutes_with_forgetting_the_middle(self, push_pull_square):
        q_outer, p13_v, p13_w, q_both = push_pull_square
        wvw = q_outer.target
        for k in range(wvw.dimension + 1):
            for x in wvw.classes(k):
                assert pushforward(p13_v, pullback(q_outer, x)) == pullback(q_both, pushforward(p13_w, x))


class TestGroupActions:
    def test_swap_needs_a_square(self, p1, p2):
        with pytest.raises(InvalidActionError):
            swap_action(p2)
        with pytest.raises(InvalidActionError):
            swap_action(product(p1, p2))

    def test_degree_must_be_preserved(self, p2):
        scaling = {0: identity_matrix(1), 1: rat_matrix([[2]]), 2: rat_matrix([[4]])}
        with pytest.raises(InvalidActionError, match="degree"):
            GroupActionDatum(p2, [scaling])

    def test_identity_must_be_present(self, p1xp1):
        swap = swap_action(p1xp1).elements[1]
        with pytest.raises(InvalidActionError, match="identity"):
            GroupActionDatum(p1xp1, [swap])

    def test_elements_must_be_distinct(self, p1xp1):
        identity = swap_action(p1xp1).elements[0]
        with pytest.raises(InvalidActionError, match="repeated"):
            GroupActionDatum(p1xp1, [identity, dict(identity)])

    def test_swap_order(self, p1xp1):
        assert swap_action(p1xp1).order == 2
        assert trivial_action(p1xp1).order == 1


def test_diagonal_of_product_has_four_terms(p1xp1):
    assert len(list(diagonal(p1xp1).terms())) == 4


def test_product_cycle_codim(p2):
    assert product_cycle(line(p2), line(p2, 2)).codim == 3
