"""
Finite models of rational Chow rings.

A ChowDatum is a graded Q-algebra given by dense structure constants together
with a degree map on the top codimension and, for cellular-style data, a strong
Künneth expression of the diagonal. Morphisms are pairs of graded linear maps
(pullback, pushforward) and group actions are finite lists of graded ring
automorphisms. All objects are validated exhaustively when they are built and
never mutated afterwards.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.domains import QQ

from errors import (AmbientMismatchError, InvalidActionError, InvalidDatumError,
                    UnsupportedDatumError)
from exactlin import (RatMatrix, Rational, Vector, add_vectors, apply, columns, from_columns,
                      identity_matrix, is_zero_vector, matrices_equal, matrix_rank, rat_matrix,
                      rational, row_basis, scale_vector, unit_vector, vector, zero_vector)

# (X codim, X basis index, Y codim, Y basis index) for each basis element of a product
TensorSlot = Tuple[int, int, int, int]


@dataclass(frozen=True)
class Class:
    """
    Homogeneous cycle class: a codimension plus coordinates in that graded piece.

    Classes of codimension outside 0..d are allowed and are always zero (their
    coordinate vector is empty); this keeps products beyond the top degree total.
    """
    datum: "ChowDatum"
    codim: int
    coeffs: Vector

    def __post_init__(self):
        expected = self.datum.rank(self.codim)
        if len(self.coeffs) != expected:
            raise AmbientMismatchError(
                f"codim {self.codim} of {self.datum.name} has {expected} basis classes, "
                f"got {len(self.coeffs)} coefficients")

    def _check_same(self, other: "Class"):
        if other.datum is not self.datum or other.codim != self.codim:
            raise AmbientMismatchError(
                f"cannot combine codim {self.codim} on {self.datum.name} "
                f"with codim {other.codim} on {other.datum.name}")

    def __add__(self, other: "Class") -> "Class":
        self._check_same(other)
        return Class(self.datum, self.codim, add_vectors(self.coeffs, other.coeffs))

    def __sub__(self, other: "Class") -> "Class":
        return self + (-other)

    def __neg__(self) -> "Class":
        return Class(self.datum, self.codim, tuple(-a for a in self.coeffs))

    def scaled(self, s) -> "Class":
        """Same class with every coefficient multiplied by ``s``."""
        return Class(self.datum, self.codim, scale_vector(rational(s), self.coeffs))

    def is_zero(self) -> bool:
        return is_zero_vector(self.coeffs)

    def __repr__(self) -> str:
        labels = self.datum.labels(self.codim)
        return f"Class({self.datum.name}, codim {self.codim}: {combination_label(self.coeffs, labels)})"


def combination_label(coeffs: Sequence, labels: Sequence[str]) -> str:
    """Readable linear combination such as ``l^1⊗l^0 + 1/2*e_1``."""
    terms = []
    for a, label in zip(coeffs, labels):
        if a == 0:
            continue
        if a == 1:
            terms.append(label)
        elif a == -1:
            terms.append(f"-{label}")
        else:
            terms.append(f"{a}*{label}")
    return " + ".join(terms).replace("+ -", "- ") if terms else "0"


class ChowDatum:
    """
    Graded rational algebra standing for CH_Q^*(X) of a (pseudo-)smooth projective variety.
    """

    def __init__(self, name: str, dimension: int, graded_basis: Sequence[Sequence[str]],
                 mult: Dict[Tuple[int, int], Sequence[Sequence[Sequence]]], degree_map: Sequence,
                 kunneth: Optional[Sequence[Tuple[Tuple[int, Sequence], Tuple[int, Sequence]]]] = None,
                 cellular: bool = False, factors: Optional[Tuple["ChowDatum", "ChowDatum"]] = None,
                 tensor_layout: Optional[List[List[TensorSlot]]] = None, validate: bool = True):
        """
        Initialize and (by default) exhaustively validate a Chow datum.

        Args:
            name: Display name
            dimension: Dimension d of the variety
            graded_basis: Basis labels for codimensions 0..d
            mult: (i, j) -> table[p][q] = coordinates of b_p * b_q in codim i+j, for i+j <= d
            degree_map: Linear functional on the codim-d piece
            kunneth: Optional pairs ((i, coeffs of λ), (d-i, coeffs of μ)) with Δ = Σ λ × μ
            cellular: Whether rational Chow groups agree with (even) cohomology
            factors: The two factors when this datum is a product
            tensor_layout: For products, the (i, p, j, q) slot of every basis element
            validate: Run the exhaustive structure checks
        """
        self.name = name
        self.dimension = dimension
        self.cellular = cellular
        self.factors = factors
        self.tensor_layout = tensor_layout
        self._tensor_index = None
        if tensor_layout is not None:
            self._tensor_index = {slot: (k, pos) for k, layer in enumerate(tensor_layout)
                                  for pos, slot in enumerate(layer)}

        if dimension < 0:
            raise InvalidDatumError(f"{name}: negative dimension {dimension}")
        if len(graded_basis) != dimension + 1:
            raise InvalidDatumError(f"{name}: expected {dimension + 1} graded pieces, got {len(graded_basis)}")
        self._labels = tuple(tuple(layer) for layer in graded_basis)
        if len(self._labels[0]) != 1:
            raise InvalidDatumError(f"{name}: codim 0 must be one-dimensional")
        if not self._labels[dimension]:
            raise InvalidDatumError(f"{name}: top codimension is empty")

        self._mult = {}
        for i in range(dimension + 1):
            for j in range(dimension + 1 - i):
                if (i, j) not in mult:
                    raise InvalidDatumError(f"{name}: missing structure constants for codims ({i}, {j})")
                table = mult[(i, j)]
                if len(table) != self.rank(i) or any(len(row) != self.rank(j) for row in table):
                    raise InvalidDatumError(f"{name}: structure table ({i}, {j}) has the wrong shape")
                converted = []
                for row in table:
                    converted_row = []
                    for entry in row:
                        if len(entry) != self.rank(i + j):
                            raise InvalidDatumError(f"{name}: product in codim {i + j} has the wrong size")
                        converted_row.append(vector(entry))
                    converted.append(tuple(converted_row))
                self._mult[(i, j)] = tuple(converted)

        if len(degree_map) != self.rank(dimension):
            raise InvalidDatumError(f"{name}: degree map has the wrong size")
        self.degree_map = vector(degree_map)

        self._pairings: Dict[int, RatMatrix] = {}
        self._kunneth = None
        if kunneth is not None:
            self._kunneth = tuple(
                (Class(self, i, vector(lam)), Class(self, j, vector(mu))) for (i, lam), (j, mu) in kunneth)

        if validate:
            self._validate_algebra()
            if self._kunneth is not None:
                self._validate_kunneth(self._kunneth)

    def __repr__(self) -> str:
        return f"ChowDatum({self.name}, dims {self.ranks})"

    # Basic accessors

    def rank(self, codim: int) -> int:
        if 0 <= codim <= self.dimension:
            return len(self._labels[codim])
        return 0

    @property
    def ranks(self) -> List[int]:
        return [self.rank(i) for i in range(self.dimension + 1)]

    def labels(self, codim: int) -> Tuple[str, ...]:
        if 0 <= codim <= self.dimension:
            return self._labels[codim]
        return ()

    @property
    def has_kunneth(self) -> bool:
        return self._kunneth is not None

    def kunneth_pairs(self) -> List[Tuple[Class, Class]]:
        """
        Pairs (a_k, b_k) whose exterior products sum to the diagonal class.

        Returns:
            List of (first-factor class, second-factor class) pairs

        Raises:
            UnsupportedDatumError: If the datum was built without Künneth data
        """
        if self._kunneth is None:
            raise UnsupportedDatumError(f"{self.name} carries no Künneth data")
        return list(self._kunneth)

    def unit(self) -> Class:
        """Fundamental class [X] in codimension 0."""
        return Class(self, 0, (QQ.one,))

    def zero(self, codim: int) -> Class:
        """Zero class in ``codim``."""
        return Class(self, codim, zero_vector(self.rank(codim)))

    def basis_class(self, codim: int, index: int) -> Class:
        """The ``index``-th basis class of CH^codim."""
        return Class(self, codim, unit_vector(self.rank(codim), index))

    def classes(self, codim: int) -> List[Class]:
        return [self.basis_class(codim, p) for p in range(self.rank(codim))]

    def class_from(self, codim: int, coeffs: Sequence) -> Class:
        """Class with the given basis coordinates; entries go through ``rational``."""
        return Class(self, codim, vector(coeffs))

    def product_of_basis(self, i: int, p: int, j: int, q: int) -> Vector:
        """
        Coordinates of e_{i,p} * e_{j,q} in CH^(i+j).

        Args:
            i: Codimension of the first basis class
            p: Index of the first basis class
            j: Codimension of the second basis class
            q: Index of the second basis class

        Returns:
            Coordinate vector, empty when i + j exceeds the dimension
        """
        if i + j > self.dimension:
            return ()
        return self._mult[(i, j)][p][q]

    def multiply_vectors(self, i: int, x: Sequence, j: int, y: Sequence) -> Vector:
        """Coordinates of x*y for coordinate vectors x in codim i and y in codim j."""
        size = self.rank(i + j)
        if size == 0:
            return ()
        if self.rank(i) == 0 or self.rank(j) == 0:
            return zero_vector(size)
        result = [QQ.zero] * size
        table = self._mult[(i, j)]
        for p, a in enumerate(x):
            if not a:
                continue
            row = table[p]
            for q, b in enumerate(y):
                if not b:
                    continue
                ab = a * b
                for k, c in enumerate(row[q]):
                    if c:
                        result[k] += ab * c
        return tuple(result)

    def degree_of(self, codim: int, coeffs: Sequence) -> Rational:
        """Degree of the class with coordinates ``coeffs``; zero outside top codimension."""
        if codim != self.dimension:
            return QQ.zero
        total = QQ.zero
        for a, w in zip(coeffs, self.degree_map):
            if a and w:
                total += a * w
        return total

    def pairing_matrix(self, codim: int) -> RatMatrix:
        """
        Poincaré pairing between CH^codim and CH^(d-codim).

        Returns:
            Matrix with entry [p][q] = deg(b_p * u_q)
        """
        if codim not in self._pairings:
            other = self.dimension - codim
            rows = [[self.degree_of(self.dimension, self.product_of_basis(codim, p, other, q))
                     for q in range(self.rank(other))] for p in range(self.rank(codim))]
            self._pairings[codim] = rat_matrix(rows, self.rank(other))
        return self._pairings[codim]

    # Validation

    def _validate_algebra(self):
        d = self.dimension
        for j in range(d + 1):
            for q in range(self.rank(j)):
                e = unit_vector(self.rank(j), q)
                if self.product_of_basis(0, 0, j, q) != e or self.product_of_basis(j, q, 0, 0) != e:
                    raise InvalidDatumError(f"{self.name}: unit does not act as identity on codim {j} class {q}")

        for i in range(d + 1):
            for j in range(i, d + 1 - i):
                for p in range(self.rank(i)):
                    for q in range(self.rank(j)):
                        if self.product_of_basis(i, p, j, q) != self.product_of_basis(j, q, i, p):
                            raise InvalidDatumError(
                                f"{self.name}: multiplication not commutative on "
                                f"{self.labels(i)[p]}, {self.labels(j)[q]}")

        for i in range(1, d + 1):
            for j in range(1, d + 1 - i):
                for k in range(1, d + 1 - i - j):
                    for p in range(self.rank(i)):
                        for q in range(self.rank(j)):
                            left = self.product_of_basis(i, p, j, q)
                            for r in range(self.rank(k)):
                                lhs = self.multiply_vectors(i + j, left, k, unit_vector(self.rank(k), r))
                                rhs = self.multiply_vectors(i, unit_vector(self.rank(i), p),
                                                            j + k, self.product_of_basis(j, q, k, r))
                                if lhs != rhs:
                                    raise InvalidDatumError(
                                        f"{self.name}: multiplication not associative on "
                                        f"{self.labels(i)[p]}, {self.labels(j)[q]}, {self.labels(k)[r]}")

    def _validate_kunneth(self, pairs: Sequence[Tuple[Class, Class]]):
        d = self.dimension
        for lam, mu in pairs:
            if lam.codim + mu.codim != d:
                raise InvalidDatumError(f"{self.name}: Künneth pair of codims ({lam.codim}, {mu.codim})")
        for i in range(d + 1):
            pairing = self.pairing_matrix(i)
            if self.rank(i) != self.rank(d - i) or matrix_rank(pairing) != self.rank(i):
                raise InvalidDatumError(f"{self.name}: Poincaré pairing degenerate in codim {i}")
        if not self.diagonal_acts_as_identity(pairs):
            raise InvalidDatumError(f"{self.name}: Künneth data does not act as the identity")

    def diagonal_acts_as_identity(self, pairs: Sequence[Tuple[Class, Class]]) -> bool:
        """Whether Σ λ × μ sends every basis class y to Σ deg(y·λ)·μ = y."""
        d = self.dimension
        for i in range(d + 1):
            for y in self.classes(i):
                image = zero_vector(self.rank(i))
                for lam, mu in pairs:
                    if lam.codim != d - i:
                        continue
                    c = self.degree_of(d, self.multiply_vectors(i, y.coeffs, lam.codim, lam.coeffs))
                    if c:
                        image = add_vectors(image, scale_vector(c, mu.coeffs))
                if image != y.coeffs:
                    return False
        return True

    # Products

    def tensor_position(self, slot: TensorSlot) -> Tuple[int, int]:
        """
        Where e_{i,p} x e_{j,q} sits in a product datum.

        Args:
            slot: (i, p, j, q) with the first factor's index first

        Returns:
            (codimension, index) in the product's basis

        Raises:
            UnsupportedDatumError: If the datum is not a product
        """
        if self._tensor_index is None:
            raise UnsupportedDatumError(f"{self.name} is not a product datum")
        return self._tensor_index[slot]


def mul(x: Class, y: Class) -> Class:
    """
    Intersection product of two classes on the same datum.

    Args:
        x: Class in codimension i
        y: Class in codimension j

    Returns:
        x * y in codimension i + j (the empty class past the top degree)

    Raises:
        AmbientMismatchError: If the classes live on different data
    """
    if x.datum is not y.datum:
        raise AmbientMismatchError(f"cannot multiply classes on {x.datum.name} and {y.datum.name}")
    return Class(x.datum, x.codim + y.codim, x.datum.multiply_vectors(x.codim, x.coeffs, y.codim, y.coeffs))


def degree(x: Class) -> Rational:
    """Pushforward to the point; zero unless x has top codimension."""
    return x.datum.degree_of(x.codim, x.coeffs)


def point_class(datum: ChowDatum) -> Class:
    """A degree-one class in the top codimension (the first basis class of nonzero degree)."""
    for p, w in enumerate(datum.degree_map):
        if w:
            return datum.basis_class(datum.dimension, p).scaled(1 / w)
    raise InvalidDatumError(f"{datum.name}: degree map vanishes")


def projective_space(n: int) -> ChowDatum:
    """
    Chow ring Q[l]/(l^(n+1)) of P^n with its standard strong Künneth decomposition.

    Args:
        n: Dimension

    Returns:
        Cellular ChowDatum named ``P^n``
    """
    if n < 0:
        raise InvalidDatumError(f"projective space of negative dimension {n}")
    mult = {(i, j): [[(1,)]] for i in range(n + 1) for j in range(n + 1 - i)}
    kunneth = [((i, (1,)), (n - i, (1,))) for i in range(n + 1)]
    return ChowDatum(f"P^{n}", n, [[f"l^{i}"] for i in range(n + 1)], mult, (1,),
                     kunneth=kunneth, cellular=True)


def point() -> ChowDatum:
    """Chow datum of a point, i.e. P^0."""
    return projective_space(0)


def _tensor_into(layout_index: Dict[TensorSlot, Tuple[int, int]], size: int, i: int, x: Sequence,
                 j: int, y: Sequence) -> Vector:
    result = [QQ.zero] * size
    for p, a in enumerate(x):
        if not a:
            continue
        for q, b in enumerate(y):
            if b:
                result[layout_index[(i, p, j, q)][1]] += a * b
    return tuple(result)


def product(X: ChowDatum, Y: ChowDatum, validate: bool = True) -> ChowDatum:
    """
    Graded tensor product CH(X) ⊗ CH(Y) standing for CH(X × Y).

    Args:
        X: First factor (must carry Künneth data)
        Y: Second factor (must carry Künneth data)
        validate: Run the exhaustive structure checks on the result

    Returns:
        Product datum remembering its factors and tensor layout
    """
    for factor in (X, Y):
        if not factor.has_kunneth:
            raise UnsupportedDatumError(f"cannot form a product with {factor.name}: no Künneth data")

    dx, dy = X.dimension, Y.dimension
    d = dx + dy
    layout = [[(i, p, k - i, q)
               for i in range(max(0, k - dy), min(dx, k) + 1)
               for p in range(X.rank(i)) for q in range(Y.rank(k - i))]
              for k in range(d + 1)]
    index = {slot: (k, pos) for k, layer in enumerate(layout) for pos, slot in enumerate(layer)}
    labels = [[f"{X.labels(i)[p]}⊗{Y.labels(k - i)[q]}" for (i, p, _, q) in layout[k]] for k in range(d + 1)]

    mult = {}
    for k1 in range(d + 1):
        for k2 in range(d + 1 - k1):
            size = len(layout[k1 + k2])
            table = []
            for (i1, p1, j1, q1) in layout[k1]:
                row = []
                for (i2, p2, j2, q2) in layout[k2]:
                    i, j = i1 + i2, j1 + j2
                    if i > dx or j > dy:
                        row.append(zero_vector(size))
                        continue
                    xv = X.product_of_basis(i1, p1, i2, p2)
                    yv = Y.product_of_basis(j1, q1, j2, q2)
                    row.append(_tensor_into(index, size, i, xv, j, yv))
                table.append(row)
            mult[(k1, k2)] = table

    degree_map = [X.degree_map[p] * Y.degree_map[q] for (_, p, _, q) in layout[d]]

    kunneth = []
    for lam, mu in X.kunneth_pairs():
        for lam2, mu2 in Y.kunneth_pairs():
            first = _tensor_into(index, len(layout[lam.codim + lam2.codim]), lam.codim, lam.coeffs,
                                 lam2.codim, lam2.coeffs)
            second = _tensor_into(index, len(layout[mu.codim + mu2.codim]), mu.codim, mu.coeffs,
                                  mu2.codim, mu2.coeffs)
            kunneth.append(((lam.codim + lam2.codim, first), (mu.codim + mu2.codim, second)))

    return ChowDatum(f"{X.name} x {Y.name}", d, labels, mult, degree_map, kunneth=kunneth,
                     cellular=X.cellular and Y.cellular, factors=(X, Y), tensor_layout=layout,
                     validate=validate)


def tensor_class(P: ChowDatum, x: Class, y: Class) -> Class:
    """The exterior product x × y as a class on the product datum P."""
    if P.factors is None or P.factors[0] is not x.datum or P.factors[1] is not y.datum:
        raise AmbientMismatchError(f"{P.name} is not the product of {x.datum.name} and {y.datum.name}")
    k = x.codim + y.codim
    return Class(P, k, _tensor_into(P._tensor_index, P.rank(k), x.codim, x.coeffs, y.codim, y.coeffs))


class MorphismDatum:
    """
    A proper map f: source -> target seen through its pullback and pushforward.

    pullback_maps[i] has shape rank_source(i) x rank_target(i); pushforward_maps[i]
    has shape rank_target(i - e) x rank_source(i) with e = d_source - d_target.
    Missing entries are zero maps.
    """

    def __init__(self, source: ChowDatum, target: ChowDatum, pullback_maps: Dict[int, RatMatrix],
                 pushforward_maps: Dict[int, RatMatrix], generic_degree=1, name: str = "f",
                 validate: bool = True):
        self.source = source
        self.target = target
        self.name = name
        self.generic_degree = rational(generic_degree)
        self.shift = source.dimension - target.dimension
        self._pullback = {}
        self._pushforward = {}

        if self.generic_degree <= 0:
            raise InvalidDatumError(f"{name}: generic degree must be positive")
        for i, matrix in pullback_maps.items():
            if matrix is None or source.rank(i) == 0 or target.rank(i) == 0:
                continue
            if matrix.shape != (source.rank(i), target.rank(i)):
                raise InvalidDatumError(f"{name}: pullback in codim {i} has shape {matrix.shape}")
            self._pullback[i] = matrix
        for i, matrix in pushforward_maps.items():
            if matrix is None or source.rank(i) == 0 or target.rank(i - self.shift) == 0:
                continue
            if matrix.shape != (target.rank(i - self.shift), source.rank(i)):
                raise InvalidDatumError(f"{name}: pushforward in codim {i} has shape {matrix.shape}")
            self._pushforward[i] = matrix

        if validate:
            self._validate()

    def __repr__(self) -> str:
        return f"MorphismDatum({self.name}: {self.source.name} -> {self.target.name}, m={self.generic_degree})"

    def pullback_matrix(self, codim: int) -> Optional[RatMatrix]:
        """Matrix of f^* on CH^codim of the target; None stands for the zero map."""
        return self._pullback.get(codim)

    def pushforward_matrix(self, codim: int) -> Optional[RatMatrix]:
        return self._pushforward.get(codim)

    def _validate(self):
        source, target = self.source, self.target
        if pullback(self, target.unit()) != source.unit():
            raise InvalidDatumError(f"{self.name}: pullback does not preserve the unit")

        for i in range(target.dimension + 1):
            for j in range(target.dimension + 1 - i):
                for y in target.classes(i):
                    for z in target.classes(j):
                        if pullback(self, mul(y, z)) != mul(pullback(self, y), pullback(self, z)):
                            raise InvalidDatumError(f"{self.name}: pullback is not multiplicative on {y}, {z}")

        for j in range(target.dimension + 1):
            for y in target.classes(j):
                pulled = pullback(self, y)
                for i in range(source.dimension + 1 - j):
                    for x in source.classes(i):
                        if pushforward(self, mul(pulled, x)) != mul(y, pushforward(self, x)):
                            raise InvalidDatumError(f"{self.name}: projection formula fails on {y}, {x}")

        if self.shift == 0:
            for j in range(target.dimension + 1):
                for y in target.classes(j):
                    if pushforward(self, pullback(self, y)) != y.scaled(self.generic_degree):
                        raise InvalidDatumError(f"{self.name}: pushforward∘pullback is not "
                                                f"{self.generic_degree}·id on {y}")


def pullback(f: MorphismDatum, y: Class) -> Class:
    """
    Pull a class on the target of ``f`` back to its source.

    Args:
        f: Morphism datum
        y: Class on f.target

    Returns:
        f^* y, in the same codimension

    Raises:
        AmbientMismatchError: If ``y`` does not live on f.target
    """
    if y.datum is not f.target:
        raise AmbientMismatchError(f"{y.datum.name} is not the target of {f.name}")
    matrix = f.pullback_matrix(y.codim)
    if matrix is None:
        return f.source.zero(y.codim)
    return Class(f.source, y.codim, apply(matrix, y.coeffs))


def pushforward(f: MorphismDatum, x: Class) -> Class:
    """
    Push a class on the source of ``f`` forward to its target.

    Args:
        f: Morphism datum
        x: Class on f.source

    Returns:
        f_* x, in codimension x.codim - f.shift

    Raises:
        AmbientMismatchError: If ``x`` does not live on f.source
    """
    if x.datum is not f.source:
        raise AmbientMismatchError(f"{x.datum.name} is not the source of {f.name}")
    codim = x.codim - f.shift
    matrix = f.pushforward_matrix(x.codim)
    if matrix is None:
        return f.target.zero(codim)
    return Class(f.target, codim, apply(matrix, x.coeffs))


def identity_morphism(X: ChowDatum) -> MorphismDatum:
    """Identity of ``X``: both matrices are the identity in every codimension."""
    maps = {i: identity_matrix(X.rank(i)) for i in range(X.dimension + 1)}
    return MorphismDatum(X, X, maps, dict(maps), 1, name=f"id_{X.name}", validate=False)


def compose_morphisms(g: MorphismDatum, f: MorphismDatum, validate: bool = True) -> MorphismDatum:
    """
    The composite g∘f of f: A -> B and g: B -> C.

    Args:
        g: Second map
        f: First map
        validate: Re-check the morphism invariants on the composite

    Returns:
        MorphismDatum A -> C with generic degree m_f * m_g
    """
    if f.target is not g.source:
        raise AmbientMismatchError(f"cannot compose {g.name} after {f.name}")
    pull = {}
    for i in range(g.target.dimension + 1):
        fp, gp = f.pullback_matrix(i), g.pullback_matrix(i)
        if fp is not None and gp is not None:
            pull[i] = fp * gp
    push = {}
    for i in range(f.source.dimension + 1):
        fp, gp = f.pushforward_matrix(i), g.pushforward_matrix(i - f.shift)
        if fp is not None and gp is not None:
            push[i] = gp * fp
    return MorphismDatum(f.source, g.target, pull, push, f.generic_degree * g.generic_degree,
                         name=f"{g.name}∘{f.name}", validate=validate)


def _check_product_of(P: ChowDatum, first: ChowDatum, second: ChowDatum):
    if P.factors is None or P.factors[0] is not first or P.factors[1] is not second:
        raise AmbientMismatchError(f"{P.name} is not the product of {first.name} and {second.name}")


def product_morphism(f: MorphismDatum, g: MorphismDatum, source: ChowDatum, target: ChowDatum,
                     validate: bool = True) -> MorphismDatum:
    """
    f × g between product data.

    Args:
        f: Map on the first factors
        g: Map on the second factors
        source: product(f.source, g.source)
        target: product(f.target, g.target)
        validate: Check the morphism invariants

    Returns:
        MorphismDatum source -> target
    """
    _check_product_of(source, f.source, g.source)
    _check_product_of(target, f.target, g.target)

    pull = {}
    for k in range(target.dimension + 1):
        if source.rank(k) == 0:
            continue
        cols = []
        for (i, p, j, q) in target.tensor_layout[k]:
            x = pullback(f, f.target.basis_class(i, p))
            y = pullback(g, g.target.basis_class(j, q))
            cols.append(_tensor_into(source._tensor_index, source.rank(k), i, x.coeffs, j, y.coeffs)
                        if x.coeffs and y.coeffs else zero_vector(source.rank(k)))
        pull[k] = from_columns(cols, source.rank(k))

    push = {}
    shift = f.shift + g.shift
    for k in range(source.dimension + 1):
        size = target.rank(k - shift)
        if size == 0:
            continue
        cols = []
        for (i, p, j, q) in source.tensor_layout[k]:
            x = pushforward(f, f.source.basis_class(i, p))
            y = pushforward(g, g.source.basis_class(j, q))
            cols.append(_tensor_into(target._tensor_index, size, x.codim, x.coeffs, y.codim, y.coeffs)
                        if x.coeffs and y.coeffs else zero_vector(size))
        push[k] = from_columns(cols, size)

    return MorphismDatum(source, target, pull, push, f.generic_degree * g.generic_degree,
                         name=f"{f.name}×{g.name}", validate=validate)


def drop_middle_factor(triple: ChowDatum, outer: ChowDatum, validate: bool = True) -> MorphismDatum:
    """
    The projection p13: (A × B) × C -> A × C.

    Pullback sends a ⊗ c to (a ⊗ 1) ⊗ c; pushforward applies deg_B to the middle factor.
    """
    if triple.factors is None or triple.factors[0].factors is None:
        raise UnsupportedDatumError(f"{triple.name} is not a triple product")
    ab, c_factor = triple.factors
    a_factor, b_factor = ab.factors
    _check_product_of(outer, a_factor, c_factor)

    pull = {}
    for k in range(outer.dimension + 1):
        cols = []
        for (i, p, j, q) in outer.tensor_layout[k]:
            left = tensor_class(ab, a_factor.basis_class(i, p), b_factor.unit())
            cols.append(tensor_class(triple, left, c_factor.basis_class(j, q)).coeffs)
        pull[k] = from_columns(cols, triple.rank(k))

    db = b_factor.dimension
    push = {}
    for k in range(triple.dimension + 1):
        size = outer.rank(k - db)
        if size == 0:
            continue
        cols = []
        for (s, r, j, q) in triple.tensor_layout[k]:
            i, p, middle, t = ab.tensor_layout[s][r]
            column = zero_vector(size)
            weight = b_factor.degree_of(middle, unit_vector(b_factor.rank(middle), t))
            if weight:
                column = tensor_class(outer, a_factor.basis_class(i, p),
                                      c_factor.basis_class(j, q)).scaled(weight).coeffs
            cols.append(column)
        push[k] = from_columns(cols, size)

    return MorphismDatum(triple, outer, pull, push, 1, name="p13", validate=validate)


class GroupActionDatum:
    """
    A finite group acting on a Chow datum by graded ring automorphisms.

    Each element is a dict codim -> square matrix; the identity must be present.
    """

    def __init__(self, datum: ChowDatum, elements: Sequence[Dict[int, RatMatrix]], name: str = "G"):
        self.datum = datum
        self.elements = [dict(g) for g in elements]
        self.name = name
        self._validate()

    @property
    def order(self) -> int:
        return len(self.elements)

    def _same(self, g: Dict[int, RatMatrix], h: Dict[int, RatMatrix]) -> bool:
        return all(matrices_equal(g[i], h[i]) for i in range(self.datum.dimension + 1))

    def _validate(self):
        X = self.datum
        d = X.dimension
        for g in self.elements:
            for i in range(d + 1):
                if i not in g or g[i].shape != (X.rank(i), X.rank(i)):
                    raise InvalidActionError(f"{self.name}: element has no square map in codim {i}")
                if matrix_rank(g[i]) != X.rank(i):
                    raise InvalidActionError(f"{self.name}: element is not invertible in codim {i}")
            if apply(g[0], X.unit().coeffs) != X.unit().coeffs:
                raise InvalidActionError(f"{self.name}: element moves the unit")
            for b in X.classes(d):
                if X.degree_of(d, apply(g[d], b.coeffs)) != degree(b):
                    raise InvalidActionError(f"{self.name}: element does not preserve degrees")
            for i in range(1, d + 1):
                for j in range(1, d + 1 - i):
                    for x in X.classes(i):
                        for y in X.classes(j):
                            lhs = apply(g[i + j], mul(x, y).coeffs)
                            rhs = X.multiply_vectors(i, apply(g[i], x.coeffs), j, apply(g[j], y.coeffs))
                            if lhs != rhs:
                                raise InvalidActionError(f"{self.name}: element is not multiplicative on {x}, {y}")

        identity = {i: identity_matrix(X.rank(i)) for i in range(d + 1)}
        if not any(self._same(g, identity) for g in self.elements):
            raise InvalidActionError(f"{self.name}: identity element missing")
        for a, g in enumerate(self.elements):
            for h in self.elements[a + 1:]:
                if self._same(g, h):
                    raise InvalidActionError(f"{self.name}: repeated group element")
        for g in self.elements:
            for h in self.elements:
                composite = {i: g[i] * h[i] for i in range(d + 1)}
                if not any(self._same(composite, k) for k in self.elements):
                    raise InvalidActionError(f"{self.name}: elements are not closed under composition")


def trivial_action(X: ChowDatum) -> GroupActionDatum:
    """
    Action of the trivial group on ``X``.

    Args:
        X: Any Chow datum

    Returns:
        Group action with the identity as its only element
    """
    return GroupActionDatum(X, [{i: identity_matrix(X.rank(i)) for i in range(X.dimension + 1)}], name="trivial")


def swap_action(P: ChowDatum) -> GroupActionDatum:
    """Exchange of the two factors of product(X, X)."""
    if P.factors is None or P.factors[0] is not P.factors[1]:
        raise InvalidActionError(f"swap needs a product of a datum with itself, got {P.name}")
    swap = {}
    for k in range(P.dimension + 1):
        cols = [unit_vector(P.rank(k), P.tensor_position((j, q, i, p))[1])
                for (i, p, j, q) in P.tensor_layout[k]]
        swap[k] = from_columns(cols, P.rank(k))
    identity = {i: identity_matrix(P.rank(i)) for i in range(P.dimension + 1)}
    return GroupActionDatum(P, [identity, swap], name="swap")


def quotient(action: GroupActionDatum) -> Tuple[ChowDatum, MorphismDatum]:
    """
    Invariant subalgebra CH(X)^G standing for CH(X/G), plus the quotient map q: X -> X/G.

    The invariant basis in each codimension is the reduced echelon basis of the image
    of the averaging projector R = (1/|G|) Σ g. Coordinates of an invariant vector are
    read at the pivot positions. The degree map is (1/|G|) times the ambient one.

    Args:
        action: Validated finite group action

    Returns:
        (quotient datum, quotient morphism with generic degree |G|)
    """
    X = action.datum
    d = X.dimension
    order = QQ(action.order)

    averaging, bases, pivots = {}, {}, {}
    for i in range(d + 1):
        total = action.elements[0][i]
        for g in action.elements[1:]:
            total = total + g[i]
        averaging[i] = total.scalarmul(1 / order)
        bases[i] = row_basis(columns(averaging[i]), X.rank(i))
        pivots[i] = [next(k for k, a in enumerate(b) if a) for b in bases[i]]

    def coords(i: int, v: Sequence) -> Vector:
        return tuple(v[k] for k in pivots[i])

    labels = [[combination_label(b, X.labels(i)) for b in bases[i]] for i in range(d + 1)]
    mult = {}
    for i in range(d + 1):
        for j in range(d + 1 - i):
            mult[(i, j)] = [[coords(i + j, X.multiply_vectors(i, b, j, c)) for c in bases[j]] for b in bases[i]]
    degree_map = [X.degree_of(d, b) / order for b in bases[d]]

    name = f"({X.name})/{action.name}"
    core = ChowDatum(name, d, labels, mult, degree_map, cellular=X.cellular)

    kunneth = None
    if X.has_kunneth:
        candidate = []
        for lam, mu in X.kunneth_pairs():
            first = scale_vector(order, coords(lam.codim, apply(averaging[lam.codim], lam.coeffs)))
            second = coords(mu.codim, apply(averaging[mu.codim], mu.coeffs))
            if not is_zero_vector(first) and not is_zero_vector(second):
                candidate.append(((lam.codim, first), (mu.codim, second)))
        trial = [(Class(core, i, lam), Class(core, j, mu)) for (i, lam), (j, mu) in candidate]
        if core.diagonal_acts_as_identity(trial):
            kunneth = candidate

    result = core
    if kunneth is not None:
        result = ChowDatum(name, d, labels, mult, degree_map, kunneth=kunneth, cellular=X.cellular)

    pull = {i: from_columns(bases[i], X.rank(i)) for i in range(d + 1) if bases[i]}
    push = {}
    for i in range(d + 1):
        if not bases[i]:
            continue
        selector = rat_matrix([[1 if k == p else 0 for k in range(X.rank(i))] for p in pivots[i]])
        push[i] = (selector * averaging[i]).scalarmul(order)
    q = MorphismDatum(X, result, pull, push, order, name="q")
    return result, q


def check_graded_isomorphism(X: ChowDatum, Y: ChowDatum, maps: Dict[int, RatMatrix]) -> bool:
    """
    Whether the given graded linear maps CH^i(X) -> CH^i(Y) form a ring isomorphism
    compatible with the degree maps.
    """
    if X.dimension != Y.dimension:
        return False
    d = X.dimension
    for i in range(d + 1):
        matrix = maps.get(i)
        if matrix is None or matrix.shape != (Y.rank(i), X.rank(i)) or matrix_rank(matrix) != X.rank(i) \
                or X.rank(i) != Y.rank(i):
            return False
    if apply(maps[0], X.unit().coeffs) != Y.unit().coeffs:
        return False
    for i in range(d + 1):
        for j in range(d + 1 - i):
            for x in X.classes(i):
                for y in X.classes(j):
                    lhs = apply(maps[i + j], mul(x, y).coeffs)
                    rhs = Y.multiply_vectors(i, apply(maps[i], x.coeffs), j, apply(maps[j], y.coeffs))
                    if lhs != rhs:
                        return False
    return all(Y.degree_of(d, apply(maps[d], b.coeffs)) == degree(b) for b in X.classes(d))
