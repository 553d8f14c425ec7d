"""
Correspondences between Chow data, stored as bigraded blocks of product cycles.

Block (i, j) of a correspondence on X × Y is a matrix whose [p][q] entry is the
coefficient of (basis p of CH^i(X)) × (basis q of CH^j(Y)). Only nonzero blocks
are kept. Composition pairs blocks through the Poincaré pairing of the middle
datum, following (u × v) • (a × b) = deg(b·u) · (a × v).
"""

import random
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from chowring import (ChowDatum, Class, MorphismDatum, drop_middle_factor, mul, product, pushforward,
                       tensor_class)
from errors import AmbientMismatchError, InvalidDatumError
from exactlin import (RatMatrix, Rational, apply, is_zero_matrix, matrices_equal, outer,
                      random_rational, rat_matrix, rational, zero_matrix)

BlockKey = Tuple[int, int]


class Correspondence:
    """
    Element of CH_Q^codim(source × target) that is a sum of product cycles.
    """

    def __init__(self, source: ChowDatum, target: ChowDatum, codim: int,
                 blocks: Optional[Dict[BlockKey, RatMatrix]] = None):
        self.source = source
        self.target = target
        self.codim = codim
        self._blocks: Dict[BlockKey, RatMatrix] = {}
        for (i, j), matrix in (blocks or {}).items():
            if i + j != codim:
                raise InvalidDatumError(f"block ({i}, {j}) in a correspondence of codim {codim}")
            if source.rank(i) == 0 or target.rank(j) == 0:
                continue
            if matrix.shape != (source.rank(i), target.rank(j)):
                raise AmbientMismatchError(
                    f"block ({i}, {j}) has shape {matrix.shape}, expected {(source.rank(i), target.rank(j))}")
            if not is_zero_matrix(matrix):
                self._blocks[(i, j)] = matrix

    def __repr__(self) -> str:
        terms = []
        for i, p, j, q, c in self.terms():
            label = f"{self.source.labels(i)[p]} × {self.target.labels(j)[q]}"
            terms.append(label if c == 1 else f"{c}*({label})")
        body = " + ".join(terms) if terms else "0"
        return f"Correspondence({self.source.name} -> {self.target.name}, codim {self.codim}: {body})"

    def block(self, i: int, j: int) -> RatMatrix:
        if (i, j) in self._blocks:
            return self._blocks[(i, j)]
        return zero_matrix(self.source.rank(i), self.target.rank(j))

    def blocks(self) -> Dict[BlockKey, RatMatrix]:
        return dict(sorted(self._blocks.items()))

    def block_types(self) -> List[BlockKey]:
        return sorted(self._blocks)

    def terms(self) -> Iterator[Tuple[int, int, int, int, Rational]]:
        """Yield (i, p, j, q, coefficient) for every nonzero product-cycle coefficient."""
        for (i, j), matrix in sorted(self._blocks.items()):
            for p, row in enumerate(matrix.to_list()):
                for q, c in enumerate(row):
                    if c:
                        yield i, p, j, q, c

    def is_zero(self) -> bool:
        return not self._blocks

    def _check_same_ambient(self, other: "Correspondence"):
        if other.source is not self.source or other.target is not self.target or other.codim != self.codim:
            raise AmbientMismatchError(
                f"correspondences on {self.source.name} x {self.target.name} (codim {self.codim}) and "
                f"{other.source.name} x {other.target.name} (codim {other.codim}) cannot be combined")

    def __add__(self, other: "Correspondence") -> "Correspondence":
        self._check_same_ambient(other)
        blocks = dict(self._blocks)
        for key, matrix in other._blocks.items():
            blocks[key] = blocks[key] + matrix if key in blocks else matrix
        return Correspondence(self.source, self.target, self.codim, blocks)

    def __neg__(self) -> "Correspondence":
        return Correspondence(self.source, self.target, self.codim, {k: -m for k, m in self._blocks.items()})

    def __sub__(self, other: "Correspondence") -> "Correspondence":
        return self + (-other)

    def scaled(self, s) -> "Correspondence":
        s = rational(s)
        return Correspondence(self.source, self.target, self.codim,
                              {k: m.scalarmul(s) for k, m in self._blocks.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Correspondence):
            return NotImplemented
        if other.source is not self.source or other.target is not self.target or other.codim != self.codim:
            return False
        if set(self._blocks) != set(other._blocks):
            return False
        return all(matrices_equal(m, other._blocks[k]) for k, m in self._blocks.items())

    __hash__ = None


def _accumulate(blocks: Dict[BlockKey, RatMatrix], key: BlockKey, matrix: RatMatrix):
    blocks[key] = blocks[key] + matrix if key in blocks else matrix


def zero_correspondence(source: ChowDatum, target: ChowDatum, codim: int) -> Correspondence:
    return Correspondence(source, target, codim)


def product_cycle(u: Class, v: Class) -> Correspondence:
    """The exterior product u × v on u.datum × v.datum."""
    return Correspondence(u.datum, v.datum, u.codim + v.codim,
                          {(u.codim, v.codim): outer(u.coeffs, v.coeffs)} if u.coeffs and v.coeffs else {})


def compose(left: Correspondence, right: Correspondence) -> Correspondence:
    """
    left • right for right on X × Y and left on Y × Z.

    Block (i, j) of right meets block (dim Y - j, l) of left through the Poincaré
    pairing of Y, giving block (i, l) of the result.
    """
    if right.target is not left.source:
        raise AmbientMismatchError(
            f"cannot compose: middle data {right.target.name} and {left.source.name} differ")
    Y = right.target
    blocks: Dict[BlockKey, RatMatrix] = {}
    for (i, j), R in right.blocks().items():
        k = Y.dimension - j
        L = left.blocks().get((k, left.codim - k))
        if L is None:
            continue
        _accumulate(blocks, (i, left.codim - k), R * Y.pairing_matrix(j) * L)
    return Correspondence(right.source, left.target, right.codim + left.codim - Y.dimension, blocks)


@lru_cache(maxsize=8)
def _triple_product(X: ChowDatum, Y: ChowDatum, Z: ChowDatum):
    """(X × Y) × Z, the data X × Y and X × Z, and the projection p13 forgetting Y."""
    xy = product(X, Y, validate=False)
    triple = product(xy, Z, validate=False)
    xz = product(X, Z, validate=False)
    return xy, triple, xz, drop_middle_factor(triple, xz, validate=False)


def compose_oracle(left: Correspondence, right: Correspondence) -> Correspondence:
    """
    Composition computed literally in the triple product, used as a test oracle.

    right is pulled back along p12 as (a ⊗ b) ⊗ 1, left along p23 as (1 ⊗ u) ⊗ v;
    the product of the two classes in CH((X × Y) × Z) is pushed forward along p13.
    All three data must carry Künneth data so that their products exist.
    """
    if right.target is not left.source:
        raise AmbientMismatchError(
            f"cannot compose: middle data {right.target.name} and {left.source.name} differ")
    X, Y, Z = right.source, right.target, left.target
    xy, triple, xz, p13 = _triple_product(X, Y, Z)

    pulled_right = triple.zero(right.codim)
    for i, p, j, q, r in right.terms():
        ab = tensor_class(xy, X.basis_class(i, p), Y.basis_class(j, q))
        pulled_right = pulled_right + tensor_class(triple, ab, Z.unit()).scaled(r)
    pulled_left = triple.zero(left.codim)
    for k, s, l, t, w in left.terms():
        one_u = tensor_class(xy, X.unit(), Y.basis_class(k, s))
        pulled_left = pulled_left + tensor_class(triple, one_u, Z.basis_class(l, t)).scaled(w)

    pushed = pushforward(p13, mul(pulled_right, pulled_left))
    codim = right.codim + left.codim - Y.dimension
    rows: Dict[BlockKey, List[List[Rational]]] = {}
    if 0 <= codim <= xz.dimension:
        for (i, p, l, t), c in zip(xz.tensor_layout[codim], pushed.coeffs):
            if c:
                block = rows.setdefault((i, l), [[QQ.zero] * Z.rank(l) for _ in range(X.rank(i))])
                block[p][t] = c
    blocks = {key: rat_matrix(grid, Z.rank(key[1])) for key, grid in rows.items()}
    return Correspondence(X, Z, codim, blocks)


def transpose(alpha: Correspondence) -> Correspondence:
    """Pullback along the factor swap: block (i, j) becomes block (j, i) transposed."""
    return Correspondence(alpha.target, alpha.source, alpha.codim,
                          {(j, i): m.transpose() for (i, j), m in alpha.blocks().items()})


def act(alpha: Correspondence, x: Class) -> Class:
    """
    alpha_*(x): each term u × v sends x to deg(x·u)·v.

    Args:
        alpha: Correspondence on X × Y
        x: Class on X

    Returns:
        Class on Y of codim codim(x) + codim(alpha) - dim X
    """
    if x.datum is not alpha.source:
        raise AmbientMismatchError(f"{x.datum.name} is not the source of the correspondence")
    X = alpha.source
    i = X.dimension - x.codim
    out = alpha.codim - i
    block = alpha.blocks().get((i, out))
    if block is None:
        return alpha.target.zero(out)
    weights = apply(X.pairing_matrix(x.codim).transpose(), x.coeffs)
    return Class(alpha.target, out, apply(block.transpose(), weights))


def diagonal(X: ChowDatum) -> Correspondence:
    """Σ λ × μ over the strong Künneth pairs of X."""
    total = zero_correspondence(X, X, X.dimension)
    for lam, mu in X.kunneth_pairs():
        total = total + product_cycle(lam, mu)
    return total


def corr_pullback(f: MorphismDatum, alpha: Correspondence, g: Optional[MorphismDatum] = None) -> Correspondence:
    """
    (f × g)^* alpha, with g = f by default.

    Args:
        f: Map on the first factor
        alpha: Correspondence on f.target × g.target
        g: Map on the second factor

    Returns:
        Correspondence on f.source × g.source of the same codim
    """
    g = g or f
    if alpha.source is not f.target or alpha.target is not g.target:
        raise AmbientMismatchError(f"correspondence does not live on the targets of {f.name} and {g.name}")
    blocks = {}
    for (i, j), matrix in alpha.blocks().items():
        left, right = f.pullback_matrix(i), g.pullback_matrix(j)
        if left is not None and right is not None:
            blocks[(i, j)] = left * matrix * right.transpose()
    return Correspondence(f.source, g.source, alpha.codim, blocks)


def corr_pushforward(f: MorphismDatum, alpha: Correspondence, g: Optional[MorphismDatum] = None) -> Correspondence:
    """(f × g)_* alpha, with g = f by default; the codim drops by both relative dimensions."""
    g = g or f
    if alpha.source is not f.source or alpha.target is not g.source:
        raise AmbientMismatchError(f"correspondence does not live on the sources of {f.name} and {g.name}")
    blocks = {}
    for (i, j), matrix in alpha.blocks().items():
        left, right = f.pushforward_matrix(i), g.pushforward_matrix(j)
        if left is not None and right is not None:
            blocks[(i - f.shift, j - g.shift)] = left * matrix * right.transpose()
    return Correspondence(f.target, g.target, alpha.codim - f.shift - g.shift, blocks)


def _check_square(alpha: Correspondence):
    if alpha.source is not alpha.target or alpha.codim != alpha.source.dimension:
        raise AmbientMismatchError("expected a correspondence on X × X of codim dim X")


def is_idempotent(alpha: Correspondence) -> bool:
    _check_square(alpha)
    return compose(alpha, alpha) == alpha


def are_orthogonal(alpha: Correspondence, beta: Correspondence) -> bool:
    _check_square(alpha)
    _check_square(beta)
    if alpha.source is not beta.source:
        raise AmbientMismatchError("correspondences live on different data")
    return compose(alpha, beta).is_zero() and compose(beta, alpha).is_zero()


def tensor_correspondence(P: ChowDatum, alpha: Correspondence, beta: Correspondence) -> Correspondence:
    """alpha ⊠ beta on P × P for P = product(X, Y), alpha on X × X and beta on Y × Y."""
    if P.factors is None or alpha.source is not P.factors[0] or alpha.target is not P.factors[0] \
            or beta.source is not P.factors[1] or beta.target is not P.factors[1]:
        raise AmbientMismatchError(f"correspondences do not live on the factors of {P.name}")

    acc: Dict[BlockKey, List[List[Rational]]] = {}
    for i, p, j, q, a in alpha.terms():
        for i2, p2, j2, q2, b in beta.terms():
            row_codim, row = P.tensor_position((i, p, i2, p2))
            col_codim, col = P.tensor_position((j, q, j2, q2))
            grid = acc.setdefault((row_codim, col_codim),
                                  [[QQ.zero] * P.rank(col_codim) for _ in range(P.rank(row_codim))])
            grid[row][col] += a * b
    blocks = {key: rat_matrix(grid, P.rank(key[1])) for key, grid in acc.items()}
    return Correspondence(P, P, alpha.codim + beta.codim, blocks)


class CKDecomposition:
    """
    Ordered projectors π_0..π_2d on X × X claimed to form a Chow-Künneth decomposition.
    """

    def __init__(self, datum: ChowDatum, projectors: Sequence[Correspondence], label: str = ""):
        self.datum = datum
        self.projectors = tuple(projectors)
        self.label = label
        d = datum.dimension
        if len(self.projectors) != 2 * d + 1:
            raise InvalidDatumError(f"{datum.name}: expected {2 * d + 1} projectors, got {len(self.projectors)}")
        for index, pi in enumerate(self.projectors):
            if pi.source is not datum or pi.target is not datum or pi.codim != d:
                raise InvalidDatumError(f"projector {index} does not live on {datum.name} x {datum.name} in codim {d}")

    def __len__(self) -> int:
        return len(self.projectors)

    def __getitem__(self, index: int) -> Correspondence:
        return self.projectors[index]

    def __iter__(self):
        return iter(self.projectors)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CKDecomposition):
            return NotImplemented
        return other.datum is self.datum and self.projectors == other.projectors

    __hash__ = None

    def __repr__(self) -> str:
        return f"CKDecomposition({self.datum.name}, {self.label or 'unnamed'})"

    def total(self) -> Correspondence:
        result = zero_correspondence(self.datum, self.datum, self.datum.dimension)
        for pi in self.projectors:
            result = result + pi
        return result

    def with_projector(self, index: int, projector: Correspondence) -> "CKDecomposition":
        projectors = list(self.projectors)
        projectors[index] = projector
        return CKDecomposition(self.datum, projectors, self.label)


def kunneth_decomposition(X: ChowDatum) -> CKDecomposition:
    """
    Projectors read off the strong Künneth data: π_2k collects the pairs λ × μ with
    μ in CH^k; odd projectors vanish. For P^n this is π_2i = l^(n-i) × l^i.
    """
    d = X.dimension
    projectors = [zero_correspondence(X, X, d) for _ in range(2 * d + 1)]
    for lam, mu in X.kunneth_pairs():
        projectors[2 * mu.codim] = projectors[2 * mu.codim] + product_cycle(lam, mu)
    return CKDecomposition(X, projectors, label="künneth")


def tensor_decomposition(P: ChowDatum, first: CKDecomposition, second: CKDecomposition) -> CKDecomposition:
    """π_k on X × Y as Σ_{a+b=k} π_a ⊠ π_b."""
    d = P.dimension
    projectors = [zero_correspondence(P, P, d) for _ in range(2 * d + 1)]
    for a, alpha in enumerate(first):
        for b, beta in enumerate(second):
            if not alpha.is_zero() and not beta.is_zero():
                projectors[a + b] = projectors[a + b] + tensor_correspondence(P, alpha, beta)
    return CKDecomposition(P, projectors, label="tensor")


def average_decomposition(ambient: CKDecomposition, q: MorphismDatum) -> CKDecomposition:
    """Projectors on X/G given by (1/|G|)·(q × q)_* π_i."""
    if ambient.datum is not q.source:
        raise AmbientMismatchError(f"decomposition does not live on the source of {q.name}")
    weight = 1 / q.generic_degree
    return CKDecomposition(q.target, [corr_pushforward(q, pi).scaled(weight) for pi in ambient], label="averaged")


def random_class(rng: random.Random, X: ChowDatum, codim: int, density: float = 0.7,
                 numerator_range: Tuple[int, int] = (-5, 5),
                 denominator_range: Tuple[int, int] = (1, 4)) -> Class:
    coeffs = [random_rational(rng, numerator_range, denominator_range) if rng.random() < density else QQ.zero
              for _ in range(X.rank(codim))]
    return Class(X, codim, tuple(coeffs))


def random_correspondence(rng: random.Random, source: ChowDatum, target: ChowDatum, codim: int,
                          density: float = 0.5, numerator_range: Tuple[int, int] = (-5, 5),
                          denominator_range: Tuple[int, int] = (1, 4)) -> Correspondence:
    """
    Seeded random correspondence of the given codim with roughly ``density`` nonzero entries.
    """
    blocks = {}
    for i in range(max(0, codim - target.dimension), min(source.dimension, codim) + 1):
        j = codim - i
        rows = [[random_rational(rng, numerator_range, denominator_range) if rng.random() < density else 0
                 for _ in range(target.rank(j))] for _ in range(source.rank(i))]
        if rows and rows[0]:
            blocks[(i, j)] = rat_matrix(rows)
    return Correspondence(source, target, codim, blocks)
