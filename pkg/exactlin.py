"""
Exact rational linear algebra for the workbench.

Scalars are elements of sympy's ``QQ`` domain (always reduced, positive
denominator) and matrices are dense ``DomainMatrix`` objects over ``QQ``.
Subspaces are passed around as lists of tuples (one tuple per basis vector),
which keeps zero-dimensional subspaces representable without empty matrices.
"""

import random
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import sympy
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from errors import AmbientMismatchError

# An element of QQ (python, gmpy2 or flint backed depending on sympy's ground types)
Rational = Any
Vector = Tuple[Rational, ...]
RatMatrix = DomainMatrix

_QQ_TYPE = type(QQ.one)


def rational(value) -> Rational:
    """
    Convert an int, fraction-like object or string such as "-3/4" into QQ.

    Args:
        value: Value to convert

    Returns:
        Reduced rational number in QQ
    """
    if isinstance(value, _QQ_TYPE):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rational coefficients")
    if isinstance(value, str):
        value = sympy.Rational(value.strip())
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, sympy.Rational):
        return QQ(int(value.p), int(value.q))
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return QQ(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {value!r} to a rational number")


def zero_vector(size: int) -> Vector:
    """Zero vector of length ``size``."""
    return tuple(QQ.zero for _ in range(size))


def unit_vector(size: int, index: int) -> Vector:
    """
    Standard basis vector e_index of length ``size``.

    Args:
        size: Ambient dimension
        index: Position of the 1 (an index outside the range gives the zero vector)

    Returns:
        Tuple of QQ entries
    """
    return tuple(QQ.one if k == index else QQ.zero for k in range(size))


def standard_basis(size: int) -> List[Vector]:
    """All unit vectors of length ``size``, in order."""
    return [unit_vector(size, k) for k in range(size)]


def vector(values: Iterable) -> Vector:
    """Convert each entry with ``rational``."""
    return tuple(rational(v) for v in values)


def add_vectors(u: Sequence, v: Sequence) -> Vector:
    """
    Entrywise sum of two vectors.

    Args:
        u: First summand
        v: Second summand, of the same length

    Returns:
        u + v as a tuple

    Raises:
        AmbientMismatchError: If the lengths differ
    """
    if len(u) != len(v):
        raise AmbientMismatchError(f"vector sizes differ: {len(u)} vs {len(v)}")
    return tuple(a + b for a, b in zip(u, v))


def scale_vector(s: Rational, v: Sequence) -> Vector:
    """Multiply every entry of ``v`` by ``s``."""
    return tuple(s * a for a in v)


def is_zero_vector(v: Sequence) -> bool:
    """True when every entry vanishes (also for the empty vector)."""
    return all(a == 0 for a in v)


def rat_matrix(rows: Sequence[Sequence], ncols: Optional[int] = None) -> RatMatrix:
    """
    Build a dense QQ matrix from nested sequences.

    Args:
        rows: Row-major entries (anything ``rational`` accepts)
        ncols: Column count, only needed when ``rows`` is empty

    Returns:
        DomainMatrix over QQ
    """
    converted = [[rational(x) for x in row] for row in rows]
    if converted:
        ncols = len(converted[0])
        if any(len(row) != ncols for row in converted):
            raise AmbientMismatchError("ragged matrix rows")
    return DomainMatrix(converted, (len(converted), ncols or 0), QQ)


def zero_matrix(nrows: int, ncols: int) -> RatMatrix:
    """``nrows`` x ``ncols`` zero matrix over QQ."""
    return DomainMatrix([[QQ.zero] * ncols for _ in range(nrows)], (nrows, ncols), QQ)


def identity_matrix(size: int) -> RatMatrix:
    """Square identity matrix over QQ."""
    return DomainMatrix([list(unit_vector(size, k)) for k in range(size)], (size, size), QQ)


def from_columns(columns: Sequence[Sequence], nrows: int) -> RatMatrix:
    """Matrix whose k-th column is ``columns[k]``."""
    for col in columns:
        if len(col) != nrows:
            raise AmbientMismatchError(f"column of size {len(col)} in a {nrows}-row matrix")
    return DomainMatrix([[columns[k][r] for k in range(len(columns))] for r in range(nrows)],
                        (nrows, len(columns)), QQ)


def columns(matrix: RatMatrix) -> List[Vector]:
    """Columns of ``matrix`` as tuples; inverse of ``from_columns``."""
    rows = matrix.to_list()
    nrows, ncols = matrix.shape
    return [tuple(rows[r][c] for r in range(nrows)) for c in range(ncols)]


def apply(matrix: RatMatrix, v: Sequence) -> Vector:
    """Multiply ``matrix`` by the column vector ``v``."""
    nrows, ncols = matrix.shape
    if len(v) != ncols:
        raise AmbientMismatchError(f"cannot apply a {nrows}x{ncols} matrix to a vector of size {len(v)}")
    result = []
    for row in matrix.to_list():
        total = QQ.zero
        for a, b in zip(row, v):
            if a and b:
                total += a * b
        result.append(total)
    return tuple(result)


def outer(u: Sequence, v: Sequence) -> RatMatrix:
    """Rank-one matrix u v^T."""
    return DomainMatrix([[a * b for b in v] for a in u], (len(u), len(v)), QQ)


def matrices_equal(a: RatMatrix, b: RatMatrix) -> bool:
    """Exact equality of shape and entries."""
    return a.shape == b.shape and a.to_list() == b.to_list()


def is_zero_matrix(matrix: RatMatrix) -> bool:
    return all(x == 0 for row in matrix.to_list() for x in row)


def matrix_rank(matrix: RatMatrix) -> int:
    """
    Rank over QQ, counted from the pivots of the reduced echelon form.

    Args:
        matrix: Any QQ matrix, possibly with a zero dimension

    Returns:
        Number of pivot columns
    """
    nrows, ncols = matrix.shape
    if nrows == 0 or ncols == 0:
        return 0
    return len(matrix.rref()[1])


def kernel(matrix: RatMatrix) -> List[Vector]:
    """
    Basis of the null space of ``matrix``, read off its reduced echelon form.

    Args:
        matrix: Any QQ matrix

    Returns:
        One vector per free column, each with a 1 in its free position
    """
    nrows, ncols = matrix.shape
    if ncols == 0:
        return []
    if nrows == 0 or is_zero_matrix(matrix):
        return standard_basis(ncols)

    reduced, pivots = matrix.rref()
    rows = reduced.to_list()
    pivot_set = set(pivots)

    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        v = [QQ.zero] * ncols
        v[free] = QQ.one
        for r, p in enumerate(pivots):
            v[p] = -rows[r][free]
        basis.append(tuple(v))
    return basis


def _ambient_size(vectors: Sequence[Sequence], dim: Optional[int]) -> Optional[int]:
    sizes = {len(v) for v in vectors}
    if dim is not None:
        sizes.add(dim)
    if len(sizes) > 1:
        raise AmbientMismatchError(f"vectors of different ambient dimensions: {sorted(sizes)}")
    return sizes.pop() if sizes else None


def row_basis(vectors: Sequence[Sequence], dim: Optional[int] = None) -> List[Vector]:
    """
    Canonical basis of span(vectors): the nonzero rows of the reduced echelon form.

    Two families span the same subspace exactly when their row bases are equal.
    """
    size = _ambient_size(vectors, dim)
    if not vectors or not size:
        return []
    stacked = DomainMatrix([list(v) for v in vectors], (len(vectors), size), QQ)
    reduced, pivots = stacked.rref()
    return [tuple(row) for row in reduced.to_list()[:len(pivots)]]


def span_equal(first: Sequence[Sequence], second: Sequence[Sequence], dim: Optional[int] = None) -> bool:
    """
    Whether two families span the same subspace of QQ^dim.

    Args:
        first: Vectors of the first family
        second: Vectors of the second family
        dim: Ambient dimension, needed when both families are empty

    Returns:
        True when the canonical row bases agree
    """
    size = _ambient_size(list(first) + list(second), dim)
    return row_basis(first, size) == row_basis(second, size)


def intersect_subspaces(first: Sequence[Sequence], second: Sequence[Sequence],
                        dim: Optional[int] = None) -> List[Vector]:
    """
    Basis of span(first) ∩ span(second).

    Solves sum a_i u_i = sum b_k v_k through the kernel of [U | -V] and maps the
    solutions back into the ambient space.

    Args:
        first: Spanning vectors of U
        second: Spanning vectors of V
        dim: Ambient dimension (checked against the vectors when given)

    Returns:
        Canonical echelon basis of the intersection
    """
    size = _ambient_size(list(first) + list(second), dim)
    if not first or not second or not size:
        return []

    spanning = [tuple(u) for u in first] + [tuple(-x for x in v) for v in second]
    system = from_columns(spanning, size)
    solutions = kernel(system)

    meet = []
    for coeffs in solutions:
        point = [QQ.zero] * size
        for a, u in zip(coeffs[:len(first)], first):
            if a:
                for k in range(size):
                    point[k] += a * u[k]
        meet.append(tuple(point))
    return row_basis(meet, size)


def random_rational(rng: random.Random, numerator_range: Tuple[int, int] = (-5, 5),
                    denominator_range: Tuple[int, int] = (1, 4)) -> Rational:
    """Seeded random rational with bounded numerator and denominator."""
    return QQ(rng.randint(*numerator_range), rng.randint(*denominator_range))
