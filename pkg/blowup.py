"""
Point blow-ups of Chow data and the lift of Chow-Künneth projectors along them.

For X of dimension d blown up at a point a, CH^i(Y) = f^*CH^i(X) ⊕ Q·e_i for
1 <= i <= d-1, where e_i is the pushforward of l^(i-1) from the exceptional
divisor. The multiplier c fixes e_i·e_j = c·e_(i+j) (and c·f^*[a] in top degree);
c = -1 for a smooth point.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from chowring import (ChowDatum, Class, MorphismDatum, compose_morphisms, degree, identity_morphism,
                      pullback, pushforward)
from correspond import (CKDecomposition, Correspondence, compose, corr_pullback, corr_pushforward,
                        diagonal, transpose, zero_correspondence)
from errors import (AmbientMismatchError, ConstructionViolationError, DegenerateMultiplierError,
                    InconsistentTauError, InvalidCenterError, InvalidDatumError, NotInBError,
                    UnsupportedDatumError)
from exactlin import Rational, rat_matrix, rational, scale_vector, unit_vector, zero_vector

TAU_STRATEGIES = {"half": QQ(1, 2), "left": QQ.one, "right": QQ.zero}


@dataclass(frozen=True, eq=False)
class BlowupDatum:
    """The blow-up f: Y -> X of X at a degree-one point class."""
    base: ChowDatum
    center: Class
    multiplier: Rational
    result: ChowDatum
    f: MorphismDatum
    label: str = "e"

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def exceptional_index(self, codim: int) -> Optional[int]:
        """Position of e_codim in the basis of CH^codim(Y), or None outside 1..d-1."""
        if 1 <= codim <= self.dimension - 1:
            return self.base.rank(codim)
        return None

    def is_exceptional(self, codim: int, index: int) -> bool:
        return index == self.exceptional_index(codim)

    def exceptional_class(self, codim: int) -> Class:
        position = self.exceptional_index(codim)
        if position is None:
            raise InvalidDatumError(f"no exceptional class in codim {codim}")
        return self.result.basis_class(codim, position)

    @property
    def exceptional_classes(self) -> List[Class]:
        return [self.exceptional_class(i) for i in range(1, self.dimension)]


def blow_up(X: ChowDatum, center: Class, c=-1, label: str = "e", validate: bool = True) -> BlowupDatum:
    """
    Blow up X at the point class ``center``.

    Args:
        X: Base datum of dimension d >= 1 with Künneth data
        center: Degree-one class in CH^d(X)
        c: Exceptional self-intersection multiplier (nonzero)
        label: Prefix of the exceptional class labels
        validate: Run the exhaustive structure checks on Y and f

    Returns:
        BlowupDatum holding Y and the blow-down map f: Y -> X
    """
    d = X.dimension
    if d < 1:
        raise InvalidDatumError(f"cannot blow up the zero-dimensional {X.name}")
    if center.datum is not X:
        raise AmbientMismatchError(f"center lives on {center.datum.name}, not {X.name}")
    if center.codim != d or degree(center) != 1:
        raise InvalidCenterError(f"center must be a degree-one class in CH^{d}, got {center}")
    c = rational(c)
    if c == 0:
        raise DegenerateMultiplierError("exceptional multiplier must be nonzero")
    if not X.has_kunneth:
        raise UnsupportedDatumError(f"{X.name} carries no Künneth data")

    base_rank = X.ranks
    ranks = [base_rank[i] + (1 if 1 <= i <= d - 1 else 0) for i in range(d + 1)]

    def embed(i: int, v: Sequence) -> Tuple:
        return tuple(v) + ((QQ.zero,) if 1 <= i <= d - 1 else ())

    def exceptional(i: int) -> Tuple:
        return unit_vector(ranks[i], base_rank[i])

    def is_e(i: int, p: int) -> bool:
        return 1 <= i <= d - 1 and p == base_rank[i]

    mult = {}
    for i in range(d + 1):
        for j in range(d + 1 - i):
            table = []
            for p in range(ranks[i]):
                row = []
                for q in range(ranks[j]):
                    if not is_e(i, p) and not is_e(j, q):
                        row.append(embed(i + j, X.product_of_basis(i, p, j, q)))
                    elif is_e(i, p) and is_e(j, q):
                        if i + j <= d - 1:
                            row.append(scale_vector(c, exceptional(i + j)))
                        else:
                            row.append(embed(d, scale_vector(c, center.coeffs)))
                    elif (is_e(i, p) and j == 0) or (is_e(j, q) and i == 0):
                        # the unit is the only class with a codim-0 coefficient
                        row.append(exceptional(i + j))
                    else:
                        row.append(zero_vector(ranks[i + j]))
                table.append(row)
            mult[(i, j)] = table

    kunneth = [((lam.codim, embed(lam.codim, lam.coeffs)), (mu.codim, embed(mu.codim, mu.coeffs)))
               for lam, mu in X.kunneth_pairs()]
    kunneth += [((i, scale_vector(1 / c, exceptional(i))), (d - i, exceptional(d - i))) for i in range(1, d)]

    labels = [list(X.labels(i)) + ([f"{label}_{i}"] if 1 <= i <= d - 1 else []) for i in range(d + 1)]
    Y = ChowDatum(f"Bl({X.name})", d, labels, mult, X.degree_map, kunneth=kunneth,
                  cellular=X.cellular, validate=validate)

    pull = {i: rat_matrix([[1 if r == s else 0 for s in range(base_rank[i])] for r in range(ranks[i])])
            for i in range(d + 1)}
    push = {i: rat_matrix([[1 if r == s else 0 for s in range(ranks[i])] for r in range(base_rank[i])])
            for i in range(d + 1)}
    f = MorphismDatum(Y, X, pull, push, 1, name="f", validate=validate)
    return BlowupDatum(X, center, c, Y, f, label)


def _check_on_result(gamma: Correspondence, b: BlowupDatum):
    if gamma.source is not b.result or gamma.target is not b.result:
        raise AmbientMismatchError(f"correspondence does not live on {b.result.name} x {b.result.name}")


def _masked(gamma: Correspondence, b: BlowupDatum,
            weight: Callable[[bool, bool], Rational]) -> Correspondence:
    """Reweight every coefficient by weight(row is exceptional, column is exceptional)."""
    blocks = {}
    for (i, j), matrix in gamma.blocks().items():
        rows = matrix.to_list()
        blocks[(i, j)] = rat_matrix([[a * weight(b.is_exceptional(i, p), b.is_exceptional(j, q)) if a else a
                                      for q, a in enumerate(row)] for p, row in enumerate(rows)])
    return Correspondence(gamma.source, gamma.target, gamma.codim, blocks)


def exceptional_part(gamma: Correspondence, b: BlowupDatum) -> Correspondence:
    """Terms e_i × e_j."""
    _check_on_result(gamma, b)
    return _masked(gamma, b, lambda row, col: QQ.one if row and col else QQ.zero)


def mixed_part(gamma: Correspondence, b: BlowupDatum) -> Correspondence:
    """Terms with exactly one exceptional factor."""
    _check_on_result(gamma, b)
    return _masked(gamma, b, lambda row, col: QQ.one if row != col else QQ.zero)


@dataclass(frozen=True, eq=False)
class ABSplit:
    a_part: Correspondence
    b_part: Correspondence

    def reconstruct(self) -> Correspondence:
        return self.a_part + self.b_part


def split_AB(gamma: Correspondence, b: BlowupDatum) -> ABSplit:
    """
    Split gamma into (f×f)^*(f×f)_*gamma, which lies in A, and the remainder in B.
    """
    _check_on_result(gamma, b)
    a_part = corr_pullback(b.f, corr_pushforward(b.f, gamma))
    return ABSplit(a_part, gamma - a_part)


@dataclass(frozen=True, eq=False)
class ClassSplit:
    a_part: Class
    b_part: Class


def split_class_AB(x: Class, b: BlowupDatum) -> ClassSplit:
    """CH^i(Y) = f^*CH^i(X) ⊕ B_i applied to one class."""
    if x.datum is not b.result:
        raise AmbientMismatchError(f"{x.datum.name} is not {b.result.name}")
    a_part = pullback(b.f, pushforward(b.f, x))
    return ClassSplit(a_part, x - a_part)


@dataclass(frozen=True, eq=False)
class TauPair:
    """
    tau1 has an exceptional left factor in every term, tau2 an exceptional right
    factor; both are correspondences of codim d on Y × Y.
    """
    tau1: Correspondence
    tau2: Correspondence
    blowup: BlowupDatum

    def __post_init__(self):
        b = self.blowup
        for name, tau in (("tau1", self.tau1), ("tau2", self.tau2)):
            _check_on_result(tau, b)
            if tau.codim != b.dimension:
                raise InconsistentTauError(f"{name} has codim {tau.codim}, expected {b.dimension}")
        for i, p, j, q, _ in self.tau1.terms():
            if not b.is_exceptional(i, p):
                raise InconsistentTauError(f"tau1 term of type ({i}, {j}) has a non-exceptional left factor")
        for i, p, j, q, _ in self.tau2.terms():
            if not b.is_exceptional(j, q):
                raise InconsistentTauError(f"tau2 term of type ({i}, {j}) has a non-exceptional right factor")

    def sigma(self) -> Correspondence:
        return self.tau1 + self.tau2


def decompose_sigma(sigma: Correspondence, b: BlowupDatum, doubly_exceptional: str = "half") -> TauPair:
    """
    Write sigma ∈ B as tau1 + tau2.

    Args:
        sigma: Correspondence on Y × Y with vanishing pushforward to X × X
        b: The blow-up
        doubly_exceptional: Where e_i × e_j terms go: "half" (split evenly),
            "left" (all to tau1) or "right" (all to tau2)

    Returns:
        TauPair reconstructing sigma
    """
    _check_on_result(sigma, b)
    if doubly_exceptional not in TAU_STRATEGIES:
        raise ValueError(f"unknown strategy {doubly_exceptional!r}; known: {sorted(TAU_STRATEGIES)}")
    if not corr_pushforward(b.f, sigma).is_zero():
        raise NotInBError("correspondence has a nonzero pushforward to the base, so it is not in B")
    share = TAU_STRATEGIES[doubly_exceptional]
    tau1 = _masked(sigma, b, lambda row, col: share if row and col else (QQ.one if row else QQ.zero))
    tau2 = _masked(sigma, b, lambda row, col: 1 - share if row and col else (QQ.one if col else QQ.zero))
    return TauPair(tau1, tau2, b)


def perturb_tau(t: TauPair, delta: Correspondence) -> TauPair:
    """Move a doubly exceptional correspondence delta from tau2 to tau1."""
    b = t.blowup
    _check_on_result(delta, b)
    if exceptional_part(delta, b) != delta:
        raise InconsistentTauError("perturbation must consist of e_i × e_j terms only")
    return TauPair(t.tau1 + delta, t.tau2 - delta, b)


def symmetrize(t: TauPair) -> TauPair:
    """Replace (tau1, tau2) by (½(tau1 + tau2^t), ½(tau1^t + tau2)) for a self-transpose sigma."""
    sigma = t.sigma()
    if transpose(sigma) != sigma:
        raise InconsistentTauError("symmetrization needs a self-transpose sigma")
    half = QQ(1, 2)
    result = TauPair((t.tau1 + transpose(t.tau2)).scaled(half), (transpose(t.tau1) + t.tau2).scaled(half), t.blowup)
    if result.sigma() != sigma:
        raise InconsistentTauError("symmetrized pair does not reconstruct sigma")
    return result


def _restrict(gamma: Correspondence, i: int, j: int) -> Correspondence:
    block = gamma.blocks().get((i, j))
    return Correspondence(gamma.source, gamma.target, gamma.codim, {(i, j): block} if block is not None else {})


def idempotence_multiplier(gamma: Correspondence) -> Rational:
    """
    The scalar m with gamma • gamma = m·gamma.

    Raises:
        ConstructionViolationError: when gamma•gamma is not a multiple of gamma
    """
    if gamma.is_zero():
        return QQ.zero
    square = compose(gamma, gamma)
    i, p, j, q, c = next(gamma.terms())
    m = square.block(i, j).to_list()[p][q] / c
    if square != gamma.scaled(m):
        raise ConstructionViolationError(f"γ•γ is not a multiple of γ for {gamma}")
    return m


def gammas(t: TauPair, d: Optional[int] = None) -> List[Correspondence]:
    """
    Orthogonal idempotents γ_0..γ_d with Σγ_i = sigma.

    γ_i collects the type (i, d-i) part of tau1 (η_i) and of tau2 (θ_i). Components
    whose square vanishes are dropped, which requires their sum to vanish.

    Args:
        t: TauPair of an idempotent sigma
        d: Dimension (defaults to the blow-up's)

    Returns:
        List of d+1 correspondences on Y × Y
    """
    b = t.blowup
    d = b.dimension if d is None else d
    if d != b.dimension:
        raise AmbientMismatchError(f"dimension {d} does not match the blow-up of dimension {b.dimension}")
    Y = b.result

    result = []
    for i in range(d + 1):
        eta = _restrict(t.tau1, i, d - i) if i >= 1 else zero_correspondence(Y, Y, d)
        theta = _restrict(t.tau2, i, d - i) if i <= d - 1 else zero_correspondence(Y, Y, d)
        result.append(eta + theta)

    multipliers = [idempotence_multiplier(g) for g in result]
    for i, m in enumerate(multipliers):
        if m not in (0, 1):
            raise ConstructionViolationError(f"γ_{i}•γ_{i} = {m}·γ_{i}; expected 0 or 1")

    nilpotent = zero_correspondence(Y, Y, d)
    for i, m in enumerate(multipliers):
        if m == 0:
            nilpotent = nilpotent + result[i]
            result[i] = zero_correspondence(Y, Y, d)
    if not nilpotent.is_zero():
        raise ConstructionViolationError("components with vanishing square do not cancel")

    total = zero_correspondence(Y, Y, d)
    for g in result:
        total = total + g
    if total != t.sigma():
        raise ConstructionViolationError("γ components do not sum to sigma")
    for i in range(d + 1):
        for j in range(i + 1, d + 1):
            if not compose(result[i], result[j]).is_zero() or not compose(result[j], result[i]).is_zero():
                raise ConstructionViolationError(f"γ_{i} and γ_{j} are not orthogonal")
    return result


def blowup_sigma(pis: CKDecomposition, b: BlowupDatum) -> Correspondence:
    """sigma = Δ_Y - (f×f)^*Σπ_i."""
    if pis.datum is not b.base:
        raise AmbientMismatchError(f"decomposition lives on {pis.datum.name}, not {b.base.name}")
    return diagonal(b.result) - corr_pullback(b.f, pis.total())


def lift_ck(pis: CKDecomposition, b: BlowupDatum, doubly_exceptional: str = "half",
            symmetric: bool = True, perturbation: Optional[Correspondence] = None) -> CKDecomposition:
    """
    Lift a Chow-Künneth decomposition of X to the blow-up Y.

    ρ_j = (f×f)^*π_j, plus γ_(d - j/2) when j is even.

    Args:
        pis: Decomposition of the base
        b: The blow-up
        doubly_exceptional: tau strategy passed to decompose_sigma
        symmetric: Symmetrize the tau pair first
        perturbation: Optional e_i × e_j correspondence moved between tau2 and tau1

    Returns:
        CKDecomposition of Y
    """
    d = b.dimension
    tau = decompose_sigma(blowup_sigma(pis, b), b, doubly_exceptional)
    if perturbation is not None:
        tau = perturb_tau(tau, perturbation)
    if symmetric:
        tau = symmetrize(tau)
    gamma = gammas(tau, d)

    rhos = []
    for j, pi in enumerate(pis):
        rho = corr_pullback(b.f, pi)
        if j % 2 == 0:
            rho = rho + gamma[d - j // 2]
        rhos.append(rho)
    return CKDecomposition(b.result, rhos, label=f"lift of {pis.label or 'base'}")


def blowdown_ck(nus: CKDecomposition, b: BlowupDatum) -> CKDecomposition:
    """π_j = (f×f)_*ν_j."""
    if nus.datum is not b.result:
        raise AmbientMismatchError(f"decomposition lives on {nus.datum.name}, not {b.result.name}")
    return CKDecomposition(b.base, [corr_pushforward(b.f, nu) for nu in nus], label="blowdown")


@dataclass(frozen=True, eq=False)
class IteratedBlowup:
    """A chain X = Y_0 <- Y_1 <- ... <- Y_k of point blow-ups."""
    base: ChowDatum
    stages: Tuple[BlowupDatum, ...]
    result: ChowDatum
    morphism: MorphismDatum

    def lift(self, pis: CKDecomposition, **options) -> CKDecomposition:
        for stage in self.stages:
            pis = lift_ck(pis, stage, **options)
        return pis

    def lower(self, nus: CKDecomposition) -> CKDecomposition:
        for stage in reversed(self.stages):
            nus = blowdown_ck(nus, stage)
        return nus


def blow_up_many(X: ChowDatum, centers: Sequence[Class], c=-1, validate: bool = True) -> IteratedBlowup:
    """
    Blow up points one after another.

    Centers may be given on X (they are pulled back to the current stage) or on the
    stage being blown up.

    Args:
        X: Base datum
        centers: Degree-one point classes
        c: Multiplier used at every stage
        validate: Validate every intermediate datum and map

    Returns:
        IteratedBlowup whose morphism is the composite blow-down to X
    """
    stages = []
    current = X
    morphism = identity_morphism(X)
    for k, center in enumerate(centers, start=1):
        if center.datum is X and current is not X:
            center = pullback(morphism, center)
        elif center.datum is not current:
            raise AmbientMismatchError(f"center {k} lives on {center.datum.name}")
        label = f"e{k}" if len(centers) > 1 else "e"
        stage = blow_up(current, center, c, label=label, validate=validate)
        morphism = compose_morphisms(morphism, stage.f, validate=validate)
        stages.append(stage)
        current = stage.result
    return IteratedBlowup(X, tuple(stages), current, morphism)
