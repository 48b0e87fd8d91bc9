"""Group elements as normal-form words.

Two families of presentations are supported: free groups and free products
of cyclic groups (finite or infinite order). A free group of rank r is the
free product of r copies of Z, so both share one word implementation.

Internally a word is a tuple of *units* ``(generator, exponent)``. For an
infinite-order generator every unit has exponent +1 or -1 (so a syllable
``a^3`` is three units); for a finite-order generator a unit carries a
canonical residue in ``1..order-1`` and the syllable is a single unit. Word
length is the number of units, which matches the usual letter count in both
cases.

PSL(2, Z) is realized as Z/2 * Z/3 with generators S, R and the 2x2 integer
matrices S = [[0,-1],[1,0]], R = S*T where T = [[1,1],[0,1]].
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

Unit = tuple[int, int]

_DEFAULT_FREE_NAMES = "abcdefghijklmnopqrstuvwxyz"


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class Presentation:
    kind: str
    orders: tuple[int | None, ...]
    names: tuple[str, ...]
    letters: tuple[Unit, ...] = field(init=False, repr=False, compare=False)
    _rank: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("free", "cyclic-free-product"):
            raise DomainError(f"unknown presentation kind {self.kind!r}")
        if not self.orders:
            raise DomainError("a presentation needs at least one generator")
        if len(self.names) != len(self.orders):
            raise DomainError("one name per generator is required")
        if len(set(self.names)) != len(self.names):
            raise DomainError("generator names must be distinct")
        for o in self.orders:
            if o is not None and o < 1:
                raise DomainError(f"cyclic orders must be positive, got {o}")
        if self.kind == "free" and any(o is not None for o in self.orders):
            raise DomainError("free presentations have only infinite-order generators")
        letters: list[Unit] = []
        for g, o in enumerate(self.orders):
            if o is None:
                letters += [(g, 1), (g, -1)]
            else:
                letters += [(g, e) for e in range(1, o)]
        object.__setattr__(self, "letters", tuple(letters))
        object.__setattr__(self, "_rank", {u: i for i, u in enumerate(letters)})

    @classmethod
    def free(cls, rank: int, names: Sequence[str] | None = None) -> "Presentation":
        if rank < 1:
            raise DomainError("free rank must be positive")
        if names is None:
            if rank > len(_DEFAULT_FREE_NAMES):
                names = [f"x{i}" for i in range(rank)]
            else:
                names = list(_DEFAULT_FREE_NAMES[:rank])
        return cls("free", (None,) * rank, tuple(names))

    @classmethod
    def cyclic_product(
        cls, orders: Sequence[int | None], names: Sequence[str] | None = None
    ) -> "Presentation":
        orders = tuple(orders)
        if names is None:
            if orders == (2, 3):
                names = ("S", "R")
            else:
                names = tuple(f"x{i}" for i in range(len(orders)))
        return cls("cyclic-free-product", orders, tuple(names))

    @classmethod
    def from_config(cls, cfg: dict) -> "Presentation":
        """Build from ``{"kind":"free","rank":2}`` or
        ``{"kind":"cyclic-free-product","orders":[2,3]}``."""
        kind = cfg.get("kind")
        names = cfg.get("names")
        if kind == "free":
            return cls.free(int(cfg["rank"]), names)
        if kind == "cyclic-free-product":
            orders = [None if o in (None, "inf", "infinity") else int(o) for o in cfg["orders"]]
            return cls.cyclic_product(orders, names)
        raise DomainError(f"unknown presentation kind {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "free":
            return {"kind": "free", "rank": len(self.orders), "names": list(self.names)}
        return {
            "kind": "cyclic-free-product",
            "orders": [o if o is not None else "inf" for o in self.orders],
            "names": list(self.names),
        }

    @property
    def is_psl2z(self) -> bool:
        return self.kind == "cyclic-free-product" and self.orders == (2, 3)

    def generator(self, name_or_index: str | int, exponent: int = 1) -> "Word":
        g = self.names.index(name_or_index) if isinstance(name_or_index, str) else name_or_index
        return Word.from_letters(self, [(g, exponent)])

    def identity(self) -> "Word":
        return Word(self, ())

    def letter_rank(self, unit: Unit) -> int:
        return self._rank[unit]

    def unit_inverse(self, unit: Unit) -> Unit:
        g, e = unit
        o = self.orders[g]
        return (g, -e) if o is None else (g, o - e)


class Word:
    """An element of a presented group, always held in normal form."""

    __slots__ = ("presentation", "units", "_hash")

    def __init__(self, presentation: Presentation, units: tuple[Unit, ...]):
        # trusted constructor: `units` must already be normal
        self.presentation = presentation
        self.units = units
        self._hash = None

    @classmethod
    def from_letters(cls, p: Presentation, letters: Iterable[Unit]) -> "Word":
        """Normalize an arbitrary sequence of ``(generator, exponent)`` pairs."""
        out: list[Unit] = []
        for g, e in letters:
            if not 0 <= g < len(p.orders):
                raise DomainError(f"generator index {g} out of range")
            o = p.orders[g]
            if o is None:
                unit = (g, 1 if e > 0 else -1)
                for _ in range(abs(e)):
                    _push(p, out, unit)
            else:
                r = e % o
                if r:
                    _push(p, out, (g, r))
        return cls(p, tuple(out))

    @property
    def letters(self) -> tuple[Unit, ...]:
        """Syllable form: ``(generator, exponent)`` with adjacent generators distinct."""
        out: list[list[int]] = []
        for g, e in self.units:
            if out and out[-1][0] == g:
                out[-1][1] += e
            else:
                out.append([g, e])
        return tuple((g, e) for g, e in out)

    def __len__(self) -> int:
        return len(self.units)

    def is_identity(self) -> bool:
        return not self.units

    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return self.units == other.units and (
            self.presentation is other.presentation or self.presentation == other.presentation
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.units)
        return self._hash

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def __pow__(self, n: int) -> "Word":
        return power(self, n)

    def shortlex_key(self) -> tuple:
        rank = self.presentation._rank
        return (len(self.units), tuple(rank[u] for u in self.units))

    def __lt__(self, other: "Word") -> bool:
        return self.shortlex_key() < other.shortlex_key()

    def __str__(self) -> str:
        return format_word(self)

    def __repr__(self) -> str:
        return f"Word({format_word(self)!r})"


def _push(p: Presentation, out: list[Unit], unit: Unit) -> None:
    g, e = unit
    if out and out[-1][0] == g:
        o = p.orders[g]
        if o is None:
            if out[-1][1] == -e:
                out.pop()
            else:
                out.append(unit)
        else:
            r = (out[-1][1] + e) % o
            if r:
                out[-1] = (g, r)
            else:
                out.pop()
    else:
        out.append(unit)


def _check_same(w1: Word, w2: Word) -> None:
    if w1.presentation is not w2.presentation and w1.presentation != w2.presentation:
        raise DomainError("words belong to different presentations")


def multiply(w1: Word, w2: Word) -> Word:
    _check_same(w1, w2)
    p = w1.presentation
    left, right = w1.units, w2.units
    if not left:
        return w2
    if not right:
        return w1
    orders = p.orders
    n = len(left)
    m = len(right)
    i = 0
    while i < n and i < m:
        g1, e1 = left[n - 1 - i]
        g2, e2 = right[i]
        if g1 != g2:
            break
        o = orders[g1]
        if o is None:
            if e1 == -e2:
                i += 1
                continue
            break
        r = (e1 + e2) % o
        if r == 0:
            i += 1
            continue
        return Word(p, left[: n - 1 - i] + ((g1, r),) + right[i + 1 :])
    return Word(p, left[: n - i] + right[i:])


def invert(w: Word) -> Word:
    p = w.presentation
    return Word(p, tuple(p.unit_inverse(u) for u in reversed(w.units)))


def power(w: Word, n: int) -> Word:
    if n < 0:
        return power(invert(w), -n)
    result = w.presentation.identity()
    base = w
    while n:
        if n & 1:
            result = multiply(result, base)
        n >>= 1
        if n:
            base = multiply(base, base)
    return result


def enumerate_words(p: Presentation, max_length: int) -> Iterator[Word]:
    """Every normal-form word of length <= max_length, once each, in shortlex order."""
    if max_length < 0:
        raise DomainError("max_length must be non-negative")
    layer = [()]
    yield Word(p, ())
    orders = p.orders
    for _ in range(max_length):
        nxt = []
        for units in layer:
            last = units[-1] if units else None
            for unit in p.letters:
                if last is not None and last[0] == unit[0]:
                    if orders[unit[0]] is not None or last[1] != unit[1]:
                        continue
                nxt.append(units + (unit,))
        for units in nxt:
            yield Word(p, units)
        layer = nxt


def _name_regex(p: Presentation) -> re.Pattern:
    names = sorted(p.names, key=len, reverse=True)
    alts = "|".join(re.escape(n) for n in names)
    return re.compile(rf"\s*({alts})(?:\^\s*\(?\s*(-?\d+)\s*\)?)?")


def parse_word(p: Presentation, text: str) -> Word:
    """Parse ``"S R^2 S"``, ``"a b^-1"`` or compact ``"abAB"``.

    An upper-case single letter stands for the inverse of its lower-case
    generator when the upper-case letter is not itself a generator name.
    """
    text = text.strip()
    if text in ("", "1", "e", "id", "identity"):
        return p.identity()
    letters: list[Unit] = []
    pos = 0
    rx = _name_regex(p)
    caps = {
        n.upper(): i
        for i, n in enumerate(p.names)
        if len(n) == 1 and n.islower() and n.upper() not in p.names
    }
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = rx.match(text, pos)
        if m:
            g = p.names.index(m.group(1))
            e = int(m.group(2)) if m.group(2) is not None else 1
            letters.append((g, e))
            pos = m.end()
            continue
        ch = text[pos]
        if ch in caps:
            e = -1
            pos += 1
            m2 = re.compile(r"\^\s*\(?\s*(-?\d+)\s*\)?").match(text, pos)
            if m2:
                e = -int(m2.group(1))
                pos = m2.end()
            letters.append((caps[ch], e))
            continue
        raise DomainError(f"cannot parse word {text!r} at position {pos}")
    return Word.from_letters(p, letters)


def format_word(w: Word) -> str:
    if w.is_identity():
        return "1"
    parts = []
    for g, e in w.letters:
        name = w.presentation.names[g]
        parts.append(name if e == 1 else f"{name}^{e}")
    return " ".join(parts)


# --- PSL(2, Z) -------------------------------------------------------------


@dataclass(frozen=True)
class IntMatrix:
    """A 2x2 integer matrix up to sign: the first nonzero entry of the first
    column is kept positive."""

    a: int
    b: int
    c: int
    d: int

    @classmethod
    def of(cls, a: int, b: int, c: int, d: int) -> "IntMatrix":
        if a < 0 or (a == 0 and c < 0):
            a, b, c, d = -a, -b, -c, -d
        return cls(a, b, c, d)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        (a, b), (c, d) = rows
        m = cls.of(int(a), int(b), int(c), int(d))
        if m.det() != 1:
            raise DomainError(f"matrix {rows} is not in SL(2, Z)")
        return m

    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, o: "IntMatrix") -> "IntMatrix":
        return IntMatrix.of(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)


MATRIX_IDENTITY = IntMatrix(1, 0, 0, 1)
MATRIX_S = IntMatrix.of(0, -1, 1, 0)
MATRIX_T = IntMatrix.of(1, 1, 0, 1)
MATRIX_R = MATRIX_S @ MATRIX_T

PSL2Z = Presentation.cyclic_product((2, 3), ("S", "R"))


def _require_psl2z(p: Presentation) -> None:
    if not p.is_psl2z:
        raise DomainError("operation needs the (2,3) free product of cyclics")


def matrix_of(w: Word) -> IntMatrix:
    _require_psl2z(w.presentation)
    m = MATRIX_IDENTITY
    r2 = MATRIX_R @ MATRIX_R
    for g, e in w.units:
        if g == 0:
            m = m @ MATRIX_S
        else:
            m = m @ (MATRIX_R if e == 1 else r2)
    return m


def word_of(m: IntMatrix, p: Presentation = PSL2Z) -> Word:
    """Inverse of :func:`matrix_of`, by a Euclidean reduction on the first column.

    Each step writes m = T^q S^-1 m' with |c'| < |c|; T = S R and T^-1 = R^2 S
    in PSL(2, Z).
    """
    _require_psl2z(p)
    if m.det() != 1:
        raise DomainError("word_of needs a determinant-one matrix")
    a, b, c, d = m.a, m.b, m.c, m.d
    S = p.generator(0)
    T = multiply(S, p.generator(1))
    T_inv = invert(T)
    # collect letters and normalize once; multiplying as we go is quadratic
    letters: list[Unit] = []

    def push_T(q: int) -> None:
        letters.extend((T if q > 0 else T_inv).units * abs(q))

    while c != 0:
        q = a // c
        # T^-q m, then S m
        a, b = a - q * c, b - q * d
        a, b, c, d = -c, -d, a, b
        push_T(q)
        letters.extend(S.units)
    # m is now +-[[1, b'], [0, 1]]
    if a < 0:
        b = -b
    push_T(b)
    return Word.from_letters(p, letters)
