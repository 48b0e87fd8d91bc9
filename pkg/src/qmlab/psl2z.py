"""PSL(2, Z) = Z/2 * Z/3 and its Rademacher-type counting quasimorphism.

The count is #R - #R^2 over the letters of the normal form. Powers are taken
through matrices so that long words never need to be squared letter by letter.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .ladder import LadderEmbedding, build_embedding, integerize, orbit_words
from .qmcore import DEFAULT_CERTIFY_LENGTH, HomogenizationResult, Quasimorphism, defect_lower_bound, homogenize
from .words import PSL2Z, DomainError, IntMatrix, Word, matrix_of, parse_word, word_of

R_INDEX = 1


def rademacher_counting(w: Word) -> int:
    if not w.presentation.is_psl2z:
        raise DomainError("rademacher_counting is defined on Z/2 * Z/3")
    n = 0
    for g, e in w.units:
        if g == R_INDEX:
            n += 1 if e == 1 else -1
    return n


def rademacher_defect(max_length: int) -> Fraction:
    if max_length < 2:
        raise DomainError("max_length must be at least 2")
    return defect_lower_bound(rademacher_counting, PSL2Z, max_length)


@lru_cache(maxsize=None)
def _certified_defect(certify_length: int) -> Fraction:
    return 2 * rademacher_defect(certify_length)


def rademacher_qm(certify_length: int = DEFAULT_CERTIFY_LENGTH) -> Quasimorphism:
    return Quasimorphism(rademacher_counting, _certified_defect(certify_length), "rademacher(#R-#R^2)")


def square_via_matrix(w: Word) -> Word:
    m = matrix_of(w)
    return word_of(m @ m)


def homogenized_rademacher(
    g: Word | IntMatrix | str, doublings: int = 14, certify_length: int = DEFAULT_CERTIFY_LENGTH
) -> HomogenizationResult:
    if isinstance(g, IntMatrix):
        g = word_of(g)
    elif isinstance(g, str):
        g = parse_word(PSL2Z, g)
    qm = rademacher_qm(certify_length)
    return homogenize(qm, g, doublings, qm.claimed_defect, square=square_via_matrix)


def build_psl2z_ladder(max_length: int = 6, extra_words=(), orbit_of=(), orbit_length: int = 0) -> LadderEmbedding:
    """Ladder embedding of PSL(2, Z) for the counting quasimorphism, witness SR."""
    qm = rademacher_qm()
    g0 = parse_word(PSL2Z, "S R")
    iq = integerize(qm, g0)
    extras = list(extra_words) + orbit_words(orbit_of, orbit_length)
    return build_embedding(PSL2Z, iq, max_length, extras)
