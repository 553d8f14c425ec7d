"""
Verification suites for Chow-Künneth decompositions and Murre's conjectures.

Every check returns a VerificationReport instead of raising, so that the
command-line pipeline can show all failures of a run at once.
"""

import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from blowup import BlowupDatum
from chowring import combination_label
from correspond import (CKDecomposition, Correspondence, act, compose, diagonal, transpose)
from errors import AmbientMismatchError, UnsupportedDatumError
from exactlin import (RatMatrix, Vector, apply, columns, from_columns, intersect_subspaces,
                      is_zero_vector, kernel, row_basis, span_equal, standard_basis)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: str = ""
    skipped: bool = False

    @property
    def status(self) -> str:
        if self.skipped:
            return "skip"
        return "pass" if self.passed else "fail"

    def to_dict(self) -> Dict[str, str]:
        return {"name": self.name, "status": self.status, "witness": self.witness}


@dataclass(frozen=True)
class VerificationReport:
    checks: Tuple[CheckResult, ...] = ()

    @property
    def overall(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def merge(self, *others: "VerificationReport") -> "VerificationReport":
        checks = list(self.checks)
        for other in others:
            checks.extend(other.checks)
        return VerificationReport(tuple(checks))

    def to_dict(self) -> List[Dict[str, str]]:
        return [check.to_dict() for check in self.checks]


def _single(name: str, offenders: Sequence[str], limit: int = 5) -> VerificationReport:
    witness = ""
    if offenders:
        shown = "; ".join(offenders[:limit])
        more = f" (+{len(offenders) - limit} more)" if len(offenders) > limit else ""
        witness = shown + more
    return VerificationReport((CheckResult(name, not offenders, witness),))


def action_matrix(pi: Correspondence, j: int) -> RatMatrix:
    """Matrix of pi_* on CH^j(X); column p is the image of the p-th basis class."""
    X = pi.source
    cols = [act(pi, x).coeffs for x in X.classes(j)]
    return from_columns(cols, X.rank(j))


class ActionCache:
    """Action matrices of one decomposition, computed once per (projector, codim)."""

    def __init__(self, dec: CKDecomposition):
        self.dec = dec
        self._matrices: Dict[Tuple[int, int], RatMatrix] = {}

    def matrix(self, index: int, j: int) -> RatMatrix:
        key = (index, j)
        if key not in self._matrices:
            self._matrices[key] = action_matrix(self.dec[index], j)
        return self._matrices[key]


def _expected_type(index: int, d: int) -> Optional[Tuple[int, int]]:
    # π_i corresponds to the Künneth component of cohomological type (2d - i, i)
    if index % 2:
        return None
    return (d - index // 2, index // 2)


def verify_ck(dec: CKDecomposition, progress: bool = False) -> VerificationReport:
    """
    Check the Chow-Künneth axioms: Σπ_i = Δ, orthogonal idempotents, and the
    bigraded type of every projector.

    Args:
        dec: Decomposition to verify
        progress: Show a progress bar over projector pairs

    Returns:
        Report with one entry per axiom
    """
    X = dec.datum
    d = X.dimension

    try:
        difference = dec.total() - diagonal(X)
        offenders = [f"Σπ_i - Δ has nonzero blocks {difference.block_types()}"] if not difference.is_zero() else []
    except UnsupportedDatumError as e:
        offenders = [f"no diagonal available: {e}"]
    report = _single("sum equals diagonal", offenders)

    not_idempotent, not_orthogonal = [], []
    pairs = [(i, j) for i in range(2 * d + 1) for j in range(2 * d + 1)]
    for i, j in tqdm(pairs, desc="Projector pairs", unit="pair", disable=not progress, file=sys.stderr):
        if dec[i].is_zero() or dec[j].is_zero():
            continue
        product = compose(dec[i], dec[j])
        if i == j and product != dec[i]:
            not_idempotent.append(f"π_{i}•π_{i} ≠ π_{i}")
        elif i != j and not product.is_zero():
            not_orthogonal.append(f"π_{i}•π_{j} ≠ 0")
    report = report.merge(_single("idempotence", not_idempotent), _single("orthogonality", not_orthogonal))

    wrong_type = []
    for index, pi in enumerate(dec):
        expected = _expected_type(index, d)
        stray = [key for key in pi.block_types() if key != expected]
        if stray:
            wrong_type.append(f"π_{index} has blocks of type {stray}, expected {[expected] if expected else []}")
    return report.merge(_single("grading", wrong_type))


def check_poincare(dec: CKDecomposition) -> VerificationReport:
    """π_(2d-i) = π_i^t for every i."""
    n = len(dec)
    offenders = [f"π_{i}^t ≠ π_{n - 1 - i}" for i in range(n) if transpose(dec[i]) != dec[n - 1 - i]]
    return _single("poincare", offenders)


def _vanishing(dec: CKDecomposition, name: str, in_range: Callable[[int, int], bool],
               cache: Optional[ActionCache] = None) -> VerificationReport:
    cache = cache or ActionCache(dec)
    X = dec.datum
    offenders = []
    for i in range(len(dec)):
        for j in range(X.dimension + 1):
            if not in_range(i, j):
                continue
            matrix = cache.matrix(i, j)
            for p, image in enumerate(columns(matrix)):
                if not is_zero_vector(image):
                    offenders.append(f"π_{i} acts nontrivially on {X.labels(j)[p]} in CH^{j} "
                                     f"(image {combination_label(image, X.labels(j))})")
                    break
    return _single(name, offenders)


def check_B(dec: CKDecomposition, cache: Optional[ActionCache] = None) -> VerificationReport:
    """π_i acts as 0 on CH^j whenever i < j or i > 2j."""
    return _vanishing(dec, "murre-B", lambda i, j: i < j or i > 2 * j, cache)


def check_Bprime(dec: CKDecomposition, cache: Optional[ActionCache] = None) -> VerificationReport:
    """π_i acts as 0 on CH^j whenever i < j or i > j + d."""
    d = dec.datum.dimension
    return _vanishing(dec, "murre-Bprime", lambda i, j: i < j or i > j + d, cache)


@dataclass(frozen=True)
class Filtration:
    """
    F^0 ⊇ F^1 ⊇ ... of CH^j as canonical echelon bases; trailing repeats are trimmed,
    so the last level is the stable one.
    """
    codim: int
    chain: Tuple[Tuple[Vector, ...], ...]

    def level(self, k: int) -> Tuple[Vector, ...]:
        return self.chain[min(k, len(self.chain) - 1)]

    def __len__(self) -> int:
        return len(self.chain)


def filtration(dec: CKDecomposition, j: int, cache: Optional[ActionCache] = None) -> Filtration:
    """
    F^k CH^j = kernel of π_(2j+1-k) acting on F^(k-1) CH^j, for k = 1..2j+1.

    Args:
        dec: Decomposition defining the projectors
        j: Codimension
        cache: Shared action matrices

    Returns:
        Filtration of CH^j
    """
    X = dec.datum
    if not 0 <= j <= X.dimension:
        raise AmbientMismatchError(f"codim {j} outside 0..{X.dimension}")
    cache = cache or ActionCache(dec)
    size = X.rank(j)

    current = row_basis(standard_basis(size), size)
    chain = [tuple(current)]
    for k in range(1, 2 * j + 2):
        index = 2 * j + 1 - k
        if current:
            current = intersect_subspaces(current, kernel(cache.matrix(index, j)), size)
        chain.append(tuple(current))
    while len(chain) > 1 and chain[-1] == chain[-2]:
        chain.pop()
    return Filtration(j, tuple(chain))


def check_C(variants: Sequence[CKDecomposition]) -> VerificationReport:
    """
    Filtrations induced by the given decompositions agree level by level.

    Raises:
        AmbientMismatchError: variants live on different data
    """
    name = "murre-C (agreement among provided variants)"
    if not variants:
        return _single(name, [])
    X = variants[0].datum
    if any(v.datum is not X for v in variants):
        raise AmbientMismatchError("decomposition variants live on different data")

    offenders = []
    caches = [ActionCache(v) for v in variants]
    for j in range(X.dimension + 1):
        reference = filtration(variants[0], j, caches[0])
        for n, (variant, cache) in enumerate(zip(variants[1:], caches[1:]), start=2):
            other = filtration(variant, j, cache)
            depth = max(len(reference), len(other))
            for k in range(depth):
                if not span_equal(reference.level(k), other.level(k), X.rank(j)):
                    offenders.append(f"variant {n} differs at F^{k} CH^{j}")
                    break
    return _single(name, offenders)


def check_D_cellular(dec: CKDecomposition) -> VerificationReport:
    """
    On cellular data homologically trivial classes vanish, so F^1 CH^j must be 0.

    Raises:
        UnsupportedDatumError: datum is not cellular
    """
    X = dec.datum
    if not X.cellular:
        raise UnsupportedDatumError(f"{X.name} is not cellular; homological triviality is not modelled")
    cache = ActionCache(dec)
    offenders = []
    for j in range(X.dimension + 1):
        first_step = filtration(dec, j, cache).level(1)
        if first_step:
            offenders.append(f"F^1 CH^{j} has dimension {len(first_step)}")
    return _single("murre-D", offenders)


def check_A(dec: CKDecomposition) -> VerificationReport:
    """A Chow-Künneth decomposition exists: this one passes verify_ck."""
    failures = verify_ck(dec).failures()
    return _single("murre-A", [f"{check.name}: {check.witness}" for check in failures])


def check_B_equivalence(pis: CKDecomposition, rhos: CKDecomposition) -> VerificationReport:
    """Conjectures B and B′ hold for the base decomposition iff they hold for the lifted one."""
    offenders = []
    for name, check in (("B", check_B), ("B′", check_Bprime)):
        below, above = check(pis).overall, check(rhos).overall
        if below != above:
            offenders.append(f"{name} is {'satisfied' if below else 'violated'} on {pis.datum.name} "
                             f"but {'satisfied' if above else 'violated'} on {rhos.datum.name}")
    return _single("B equivalence across blow-up", offenders)


def check_filtration_compatibility(pis: CKDecomposition, rhos: CKDecomposition,
                                   b: BlowupDatum) -> VerificationReport:
    """
    F^m CH^j(Y) = f^*F^m CH^j(X) for every m >= 1: the B-part of the filtration vanishes
    past F^0.
    """
    if pis.datum is not b.base or rhos.datum is not b.result:
        raise AmbientMismatchError("decompositions do not match the blow-up")
    offenders = []
    below_cache, above_cache = ActionCache(pis), ActionCache(rhos)
    for j in range(b.dimension + 1):
        below = filtration(pis, j, below_cache)
        above = filtration(rhos, j, above_cache)
        pull = b.f.pullback_matrix(j)
        for m in range(1, max(len(below), len(above))):
            pulled = [apply(pull, v) for v in below.level(m)]
            if not span_equal(above.level(m), pulled, b.result.rank(j)):
                offenders.append(f"F^{m} CH^{j} of {b.result.name} is not the pullback of F^{m} CH^{j}")
    return _single("filtration compatibility", offenders)
