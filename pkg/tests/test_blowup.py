import random

import pytest
from sympy.polys.domains import QQ

from blowup import (TauPair, blow_up, blow_up_many, blowdown_ck, blowup_sigma, decompose_sigma, exceptional_part,
                    gammas, idempotence_multiplier, lift_ck, mixed_part, perturb_tau, split_AB, split_class_AB,
                    symmetrize)
from chowring import degree, mul, point, point_class, projective_space, pullback, pushforward
from ck_workbench import build_variety
from correspond import (act, compose, corr_pullback, diagonal, kunneth_decomposition, product_cycle,
                        random_class, random_correspondence, zero_correspondence)
from errors import (AmbientMismatchError, ConstructionViolationError, DegenerateMultiplierError,
                    InconsistentTauError, InvalidCenterError, InvalidDatumError, NotInBError,
                    UnsupportedDatumError)
from exactlin import matrices_equal, rat_matrix, rational
from murre import check_B, check_D_cellular, check_poincare, verify_ck
from run_config import BlowupSpec, ProductSpec, ProjectiveSpaceSpec, QuotientSpec


def pulled_line(b):
    return pullback(b.f, b.base.basis_class(1, 0))


@pytest.fixture(scope="module")
def e(bl_p2):
    return bl_p2.exceptional_class(1)


@pytest.fixture(scope="module")
def fl(bl_p2):
    return pulled_line(bl_p2)


class TestBlowUp:
    def test_p2_ranks_and_pairing(self, bl_p2):
        Y = bl_p2.result
        assert Y.ranks == [1, 2, 1]
        assert Y.labels(1) == ("l^1", "e_1")
        assert matrices_equal(Y.pairing_matrix(1), rat_matrix([[1, 0], [0, -1]]))
        assert Y.has_kunneth

    def test_p3_ranks(self, bl_p3):
        assert bl_p3.result.ranks == [1, 2, 2, 1]
        assert [x.codim for x in bl_p3.exceptional_classes] == [1, 2]

    def test_p1_has_no_exceptional_classes(self, p1):
        b = blow_up(p1, point_class(p1))
        assert b.result.ranks == [1, 1]
        assert b.exceptional_classes == []
        assert pushforward(b.f, pullback(b.f, p1.basis_class(1, 0))) == p1.basis_class(1, 0)

    def test_center_must_have_degree_one(self, p2):
        with pytest.raises(InvalidCenterError):
            blow_up(p2, point_class(p2).scaled(2))

    def test_center_must_be_a_point(self, p2):
        with pytest.raises(InvalidCenterError):
            blow_up(p2, p2.basis_class(1, 0))

    def test_center_on_another_datum(self, p2, p3):
        with pytest.raises(AmbientMismatchError):
            blow_up(p2, point_class(p3))

    def test_multiplier_must_be_nonzero(self, p2):
        with pytest.raises(DegenerateMultiplierError):
            blow_up(p2, point_class(p2), 0)

    def test_zero_dimensional_base(self):
        pt = point()
        with pytest.raises(InvalidDatumError):
            blow_up(pt, point_class(pt))

    def test_base_needs_kunneth(self, mock_curve):
        with pytest.raises(UnsupportedDatumError):
            blow_up(mock_curve, point_class(mock_curve))

    def test_exceptional_class_range(self, bl_p2):
        with pytest.raises(InvalidDatumError):
            bl_p2.exceptional_class(2)


class TestBlowUpRing:
    def test_pushforward_kills_exceptional_classes(self, bl_p3):
        for x in bl_p3.exceptional_classes:
            assert pushforward(bl_p3.f, x).is_zero()

    def test_pushforward_after_pullback(self, bl_p3):
        X = bl_p3.base
        for j in range(4):
            x = X.basis_class(j, 0)
            assert pushforward(bl_p3.f, pullback(bl_p3.f, x)) == x

    def test_self_intersection(self, bl_p2, e, fl):
        assert degree(mul(e, e)) == -1
        assert mul(e, e) == pullback(bl_p2.f, point_class(bl_p2.base)).scaled(-1)
        assert mul(fl, e).is_zero()
        assert mul(bl_p2.result.unit(), e) == e

    def test_p3_products(self, bl_p3):
        e1, e2 = bl_p3.exceptional_classes
        assert mul(e1, e1) == e2.scaled(-1)
        assert degree(mul(e1, e2)) == -1
        assert degree(mul(mul(e1, e1), e1)) == 1

    def test_multiplier_scales_products(self, p2):
        b = blow_up(p2, point_class(p2), QQ(-1, 2))
        e = b.exceptional_class(1)
        assert degree(mul(e, e)) == QQ(-1, 2)
        assert b.multiplier == QQ(-1, 2)

    def test_kunneth_uses_inverse_multiplier(self, p2):
        b = blow_up(p2, point_class(p2), 3)
        pairs = b.result.kunneth_pairs()
        lam, mu = pairs[-1]
        assert lam == b.exceptional_class(1).scaled(QQ(1, 3))
        assert mu == b.exceptional_class(1)


class TestSplitAB:
    def test_pulled_back_correspondence(self, bl_p2, fl):
        gamma = product_cycle(fl, fl)
        parts = split_AB(gamma, bl_p2)
        assert parts.a_part == gamma
        assert parts.b_part.is_zero()

    def test_exceptional_correspondence(self, bl_p2, e):
        gamma = product_cycle(e, e)
        parts = split_AB(gamma, bl_p2)
        assert parts.a_part.is_zero()
        assert parts.b_part == gamma

    def test_diagonal(self, bl_p2, e):
        parts = split_AB(diagonal(bl_p2.result), bl_p2)
        assert parts.a_part == corr_pullback(bl_p2.f, diagonal(bl_p2.base))
        assert parts.b_part == product_cycle(e, e).scaled(-1)
        assert parts.reconstruct() == diagonal(bl_p2.result)

    def test_wrong_ambient(self, bl_p2, p2):
        with pytest.raises(AmbientMismatchError):
            split_AB(diagonal(p2), bl_p2)

    def test_class_splitting(self, bl_p2, e, fl):
        pieces = split_class_AB(fl + e.scaled(2), bl_p2)
        assert pieces.a_part == fl
        assert pieces.b_part == e.scaled(2)

    def test_parts_of_a_correspondence(self, bl_p2, e, fl):
        gamma = product_cycle(e, e) + product_cycle(e, fl) + product_cycle(fl, fl)
        assert exceptional_part(gamma, bl_p2) == product_cycle(e, e)
        assert mixed_part(gamma, bl_p2) == product_cycle(e, fl)


class TestOrthogonality:
    def test_pulled_back_and_exceptional_parts_are_orthogonal(self, bl_p3):
        rng = random.Random(17)
        X, Y, d = bl_p3.base, bl_p3.result, bl_p3.dimension
        for _ in range(20):
            alpha = corr_pullback(bl_p3.f, random_correspondence(rng, X, X, d))
            beta = exceptional_part(random_correspondence(rng, Y, Y, d), bl_p3)
            assert compose(alpha, beta).is_zero()
            assert compose(beta, alpha).is_zero()

    def test_mixed_terms_are_not_orthogonal_to_pullbacks(self, e, fl):
        assert compose(product_cycle(fl, e), product_cycle(fl, fl)) == product_cycle(fl, e)

    def test_mixed_terms_compose_into_pullbacks(self, bl_p2, e, fl):
        assert compose(product_cycle(e, fl), product_cycle(fl, e)) == product_cycle(fl, fl).scaled(bl_p2.multiplier)

    def test_each_part_is_closed_under_composition(self, bl_p3):
        rng = random.Random(23)
        X, Y, d = bl_p3.base, bl_p3.result, bl_p3.dimension
        for _ in range(10):
            a1 = corr_pullback(bl_p3.f, random_correspondence(rng, X, X, d))
            a2 = corr_pullback(bl_p3.f, random_correspondence(rng, X, X, d))
            b1 = exceptional_part(random_correspondence(rng, Y, Y, d), bl_p3)
            b2 = exceptional_part(random_correspondence(rng, Y, Y, d), bl_p3)
            assert split_AB(compose(a1, a2), bl_p3).b_part.is_zero()
            assert split_AB(compose(b1, b2), bl_p3).a_part.is_zero()
            assert split_AB(compose(a1 + b1, a2 + b2), bl_p3).a_part == compose(a1, a2)


class TestClassLevelSplitting:
    def test_parts_act_as_zero_on_the_other_summand(self, bl_p3):
        rng = random.Random(31)
        X, Y, d, f = bl_p3.base, bl_p3.result, bl_p3.dimension, bl_p3.f
        for _ in range(30):
            j = rng.randint(0, d)
            pieces = split_class_AB(random_class(rng, Y, j), bl_p3)
            alpha = corr_pullback(f, random_correspondence(rng, X, X, d))
            beta = exceptional_part(random_correspondence(rng, Y, Y, d), bl_p3)
            assert act(alpha, pieces.b_part).is_zero()
            assert act(beta, pieces.a_part).is_zero()

    def test_action_distributes_over_the_splitting(self, bl_p3):
        rng = random.Random(37)
        X, Y, d, f = bl_p3.base, bl_p3.result, bl_p3.dimension, bl_p3.f
        for _ in range(30):
            j = rng.randint(0, d)
            alpha = random_correspondence(rng, X, X, d)
            beta = exceptional_part(random_correspondence(rng, Y, Y, d), bl_p3)
            x = random_class(rng, X, j)
            y = split_class_AB(random_class(rng, Y, j), bl_p3).b_part
            image = split_class_AB(act(corr_pullback(f, alpha) + beta, pullback(f, x) + y), bl_p3)
            assert image.a_part == pullback(f, act(alpha, x))
            assert image.b_part == act(beta, y)

    def test_split_of_a_class_on_another_datum(self, bl_p2, p2):
        with pytest.raises(AmbientMismatchError):
            split_class_AB(p2.unit(), bl_p2)


class TestDecomposeSigma:
    def test_canonical_sigma(self, bl_p2, e):
        sigma = product_cycle(e, e).scaled(-1)
        tau = decompose_sigma(sigma, bl_p2)
        assert tau.tau1 == product_cycle(e, e).scaled(QQ(-1, 2))
        assert tau.tau2 == tau.tau1
        assert tau.sigma() == sigma

    def test_zero(self, bl_p2):
        Y = bl_p2.result
        tau = decompose_sigma(zero_correspondence(Y, Y, 2), bl_p2)
        assert tau.tau1.is_zero() and tau.tau2.is_zero()

    def test_mixed_terms_are_classified(self, bl_p2, e, fl):
        tau = decompose_sigma(product_cycle(e, fl) + product_cycle(fl, e), bl_p2)
        assert tau.tau1 == product_cycle(e, fl)
        assert tau.tau2 == product_cycle(fl, e)

    @pytest.mark.parametrize("strategy, left_share", [("left", 1), ("right", 0), ("half", QQ(1, 2))])
    def test_strategies(self, bl_p2, e, strategy, left_share):
        sigma = product_cycle(e, e)
        tau = decompose_sigma(sigma, bl_p2, strategy)
        assert tau.tau1 == sigma.scaled(left_share)
        assert tau.sigma() == sigma

    def test_sigma_outside_b(self, bl_p2):
        with pytest.raises(NotInBError):
            decompose_sigma(diagonal(bl_p2.result), bl_p2)

    def test_unknown_strategy(self, bl_p2, e):
        with pytest.raises(ValueError):
            decompose_sigma(product_cycle(e, e), bl_p2, "middle")

    def test_canonical_sigma_on_p3(self, bl_p3):
        sigma = blowup_sigma(kunneth_decomposition(bl_p3.base), bl_p3)
        e1, e2 = bl_p3.exceptional_classes
        assert sigma == (product_cycle(e1, e2) + product_cycle(e2, e1)).scaled(-1)


class TestTauPair:
    def test_left_factor_must_be_exceptional(self, bl_p2, e, fl):
        Y = bl_p2.result
        with pytest.raises(InconsistentTauError):
            TauPair(product_cycle(fl, e), zero_correspondence(Y, Y, 2), bl_p2)

    def test_right_factor_must_be_exceptional(self, bl_p2, e, fl):
        Y = bl_p2.result
        with pytest.raises(InconsistentTauError):
            TauPair(zero_correspondence(Y, Y, 2), product_cycle(e, fl), bl_p2)

    def test_codim(self, bl_p2, e):
        Y = bl_p2.result
        with pytest.raises(InconsistentTauError):
            TauPair(product_cycle(e, Y.unit()), zero_correspondence(Y, Y, 2), bl_p2)

    def test_symmetric_pair_is_unchanged(self, bl_p2, e, fl):
        tau = TauPair(product_cycle(e, fl), product_cycle(fl, e), bl_p2)
        result = symmetrize(tau)
        assert result.tau1 == tau.tau1
        assert result.tau2 == tau.tau2

    def test_symmetrize_moves_half_across(self, bl_p2, e):
        sigma = product_cycle(e, e).scaled(-1)
        tau = symmetrize(decompose_sigma(sigma, bl_p2, "left"))
        assert tau.tau1 == sigma.scaled(QQ(1, 2))
        assert tau.tau2 == sigma.scaled(QQ(1, 2))

    def test_symmetrize_needs_self_transpose_sigma(self, bl_p2, e, fl):
        Y = bl_p2.result
        with pytest.raises(InconsistentTauError):
            symmetrize(TauPair(product_cycle(e, fl), zero_correspondence(Y, Y, 2), bl_p2))

    def test_perturbation_must_be_doubly_exceptional(self, bl_p2, e, fl):
        tau = decompose_sigma(product_cycle(e, e), bl_p2)
        with pytest.raises(InconsistentTauError):
            perturb_tau(tau, product_cycle(e, fl))
        moved = perturb_tau(tau, product_cycle(e, e))
        assert moved.sigma() == tau.sigma()


class TestGammas:
    def test_canonical_on_p2(self, bl_p2, e):
        tau = decompose_sigma(product_cycle(e, e).scaled(-1), bl_p2)
        g = gammas(tau, 2)
        assert g[0].is_zero() and g[2].is_zero()
        assert g[1] == product_cycle(e, e).scaled(-1)
        assert idempotence_multiplier(g[1]) == 1

    def test_zero_sigma(self, bl_p2):
        Y = bl_p2.result
        zero = zero_correspondence(Y, Y, 2)
        assert all(g.is_zero() for g in gammas(TauPair(zero, zero, bl_p2)))

    def test_canonical_on_p3(self, bl_p3):
        tau = symmetrize(decompose_sigma(blowup_sigma(kunneth_decomposition(bl_p3.base), bl_p3), bl_p3))
        g = gammas(tau)
        e1, e2 = bl_p3.exceptional_classes
        assert g[0].is_zero() and g[3].is_zero()
        assert g[1] == product_cycle(e1, e2).scaled(-1)
        assert g[2] == product_cycle(e2, e1).scaled(-1)

    def test_doubled_sigma_is_rejected(self, bl_p2, e):
        tau = decompose_sigma(product_cycle(e, e).scaled(-2), bl_p2)
        with pytest.raises(ConstructionViolationError):
            gammas(tau)

    def test_dimension_must_match(self, bl_p2):
        Y = bl_p2.result
        zero = zero_correspondence(Y, Y, 2)
        with pytest.raises(AmbientMismatchError):
            gammas(TauPair(zero, zero, bl_p2), 3)


class TestLift:
    def test_p2(self, bl_p2, e, fl):
        rhos = lift_ck(kunneth_decomposition(bl_p2.base), bl_p2)
        assert rhos.datum is bl_p2.result
        assert rhos[2] == product_cycle(fl, fl) - product_cycle(e, e)
        assert act(rhos[2], e) == e
        assert act(rhos[2], fl) == fl
        assert act(rhos[0], e).is_zero()
        assert verify_ck(rhos).overall

    def test_p1_lift_is_the_pullback(self, p1):
        b = blow_up(p1, point_class(p1))
        rhos = lift_ck(kunneth_decomposition(p1), b)
        assert rhos == kunneth_decomposition(b.result)

    def test_strategies_agree_on_the_canonical_sigma(self, bl_p3):
        pis = kunneth_decomposition(bl_p3.base)
        reference = lift_ck(pis, bl_p3)
        for strategy in ("left", "right"):
            assert lift_ck(pis, bl_p3, doubly_exceptional=strategy) == reference
        e1, e2 = bl_p3.exceptional_classes
        assert lift_ck(pis, bl_p3, perturbation=product_cycle(e1, e2)) == reference

    def test_wrong_base(self, bl_p2, p3):
        with pytest.raises(AmbientMismatchError):
            lift_ck(kunneth_decomposition(p3), bl_p2)

    def test_blowdown_recovers_the_base(self, bl_p2):
        pis = kunneth_decomposition(bl_p2.base)
        lowered = blowdown_ck(lift_ck(pis, bl_p2), bl_p2)
        assert lowered == pis
        assert verify_ck(lowered).overall

    def test_blowdown_of_wrong_datum(self, bl_p2):
        with pytest.raises(AmbientMismatchError):
            blowdown_ck(kunneth_decomposition(bl_p2.base), bl_p2)


class TestIteratedBlowup:
    def test_no_centers(self, p2):
        chain = blow_up_many(p2, [])
        assert chain.stages == ()
        assert chain.result is p2
        pis = kunneth_decomposition(p2)
        assert chain.lift(pis) == pis

    def test_two_points_on_p2(self, p2):
        chain = blow_up_many(p2, [point_class(p2)] * 2)
        Y = chain.result
        assert Y.ranks == [1, 3, 1]
        assert Y.labels(1) == ("l^1", "e1_1", "e2_1")
        assert chain.morphism.target is p2
        pis = kunneth_decomposition(p2)
        rhos = chain.lift(pis)
        assert verify_ck(rhos).overall
        assert chain.lower(rhos) == pis

    def test_three_points_on_p3(self, p3):
        chain = blow_up_many(p3, [point_class(p3)] * 3)
        assert chain.result.ranks == [1, 4, 4, 1]
        rhos = chain.lift(kunneth_decomposition(p3))
        assert check_B(rhos).overall

    def test_center_on_unrelated_datum(self, p2, p3):
        with pytest.raises(AmbientMismatchError):
            blow_up_many(p2, [point_class(p2), point_class(p3)])


@pytest.mark.parametrize("c", [-1, -2])
@pytest.mark.parametrize("points", [1, 2, 3])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_lift_on_blown_up_projective_spaces(n, points, c):
    X = projective_space(n)
    chain = blow_up_many(X, [point_class(X)] * points, c)
    pis = kunneth_decomposition(X)
    rhos = chain.lift(pis)
    assert verify_ck(rhos).overall
    assert check_poincare(rhos).overall
    assert check_D_cellular(rhos).overall
    assert chain.lower(rhos) == pis

    last = chain.stages[-1]
    for rho in rhos:
        pieces = split_AB(rho, last)
        assert pieces.reconstruct() == rho
        assert exceptional_part(pieces.b_part, last) == pieces.b_part
        assert compose(pieces.a_part, pieces.b_part).is_zero()
        assert compose(pieces.b_part, pieces.a_part).is_zero()


def test_kummer_style_multiplier():
    spec = BlowupSpec(QuotientSpec(ProductSpec(ProjectiveSpaceSpec(1), ProjectiveSpaceSpec(1)), "swap"),
                      2, rational(-2))
    built = build_variety(spec)
    assert built.datum.ranks == [1, 3, 1]
    assert verify_ck(built.decomposition).overall
    e = built.iterated.stages[0].exceptional_class(1)
    assert idempotence_multiplier(product_cycle(e, e).scaled(QQ(-1, 2))) == 1
