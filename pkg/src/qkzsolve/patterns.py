"""Closed and open link patterns: enumeration, validation, serialization.

A closed link pattern is a non-crossing perfect matching of N = 2n points
on a line, arches drawn in the upper half plane.  We store the involution
``partner`` with 0-based indices.  An open link pattern on r points allows
unmatched points whose half-lines run off to the side; an open point may
not sit underneath any arch (the half-line could not escape).  Open points
carry partner value -1.

Text form: ``(`` opens an arch, ``)`` closes it, ``.`` is an open point,
e.g. ``(()).`` .

Counts: closed patterns of 2n points are the Catalan number
(2n)!/(n!(n+1)!); open patterns of r points number C(r, floor((r+1)/2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import UsageError

OPEN = -1


def _check_noncrossing(partner: Sequence[int], allow_open: bool) -> None:
    n = len(partner)
    stack: list[int] = []
    for i, p in enumerate(partner):
        if p == OPEN:
            if not allow_open:
                raise UsageError("closed pattern contains an open point")
            if stack:
                raise UsageError("open point nested under an arch")
            continue
        if not (0 <= p < n) or p == i or partner[p] != i:
            raise UsageError(f"partner array {partner} is not an involution")
        if p > i:
            stack.append(p)
        else:
            if not stack or stack.pop() != i:
                raise UsageError(f"crossing arches in {partner}")
    if stack:
        raise UsageError(f"unbalanced arches in {partner}")


@dataclass(frozen=True)
class LinkPattern:
    """Non-crossing perfect matching of an even number of points."""

    partner: tuple[int, ...]

    def __post_init__(self):
        if len(self.partner) % 2:
            raise UsageError("closed patterns need an even number of points")
        _check_noncrossing(self.partner, allow_open=False)

    @property
    def size(self) -> int:
        return len(self.partner)

    def arches(self) -> list[tuple[int, int]]:
        return [(i, p) for i, p in enumerate(self.partner) if p > i]

    @classmethod
    def from_arches(cls, size: int, arches: Sequence[tuple[int, int]]) -> LinkPattern:
        partner = [OPEN] * size
        for a, b in arches:
            partner[a], partner[b] = b, a
        return cls(tuple(partner))

    def has_little_arch(self, i: int) -> bool:
        """Arch between points i and i+1 (0-based site i)."""
        return self.partner[i] == i + 1

    def rotate(self) -> LinkPattern:
        """Relabel every point i -> i+1 (mod N), keeping connectivity."""
        n = self.size
        new = [0] * n
        for i, p in enumerate(self.partner):
            new[(i + 1) % n] = (p + 1) % n
        return LinkPattern(tuple(new))

    def text(self) -> str:
        return "".join("(" if p > i else ")" for i, p in enumerate(self.partner))

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class OpenLinkPattern:
    """Non-crossing partial matching; unmatched points exit to the boundary."""

    partner: tuple[int, ...]

    def __post_init__(self):
        _check_noncrossing(self.partner, allow_open=True)

    @property
    def size(self) -> int:
        return len(self.partner)

    def opens(self) -> list[int]:
        return [i for i, p in enumerate(self.partner) if p == OPEN]

    def arches(self) -> list[tuple[int, int]]:
        return [(i, p) for i, p in enumerate(self.partner) if p != OPEN and p > i]

    def is_open(self, i: int) -> bool:
        return self.partner[i] == OPEN

    def has_little_arch(self, i: int) -> bool:
        return self.partner[i] == i + 1

    def reflect(self) -> OpenLinkPattern:
        """Mirror left-to-right (point j -> r-1-j)."""
        n = self.size
        new = [OPEN] * n
        for i, p in enumerate(self.partner):
            new[n - 1 - i] = OPEN if p == OPEN else n - 1 - p
        return OpenLinkPattern(tuple(new))

    def drop_point(self, i: int) -> OpenLinkPattern:
        """Remove an open point and relabel (used by the size reductions)."""
        if self.partner[i] != OPEN:
            raise UsageError("can only drop an open point")
        new = []
        for j, p in enumerate(self.partner):
            if j == i:
                continue
            new.append(OPEN if p == OPEN else (p if p < i else p - 1))
        return OpenLinkPattern(tuple(new))

    def text(self) -> str:
        return "".join("." if p == OPEN else ("(" if p > i else ")")
                       for i, p in enumerate(self.partner))

    def __str__(self) -> str:
        return self.text()


Pattern = LinkPattern | OpenLinkPattern


def pattern_from_text(s: str) -> Pattern:
    """Parse the '(()).'-style text form."""
    partner = [OPEN] * len(s)
    stack: list[int] = []
    for i, ch in enumerate(s):
        if ch == "(":
            stack.append(i)
        elif ch == ")":
            if not stack:
                raise UsageError(f"unbalanced pattern text {s!r}")
            j = stack.pop()
            partner[i], partner[j] = j, i
        elif ch != ".":
            raise UsageError(f"bad character {ch!r} in pattern text")
    if stack:
        raise UsageError(f"unbalanced pattern text {s!r}")
    if "." in s:
        return OpenLinkPattern(tuple(partner))
    return LinkPattern(tuple(partner))


def _gen_closed(n_points: int) -> Iterator[tuple[int, ...]]:
    """All non-crossing perfect matchings via balanced-bracket recursion."""
    partner = [OPEN] * n_points

    def place(lo: int, hi: int) -> Iterator[None]:
        if lo >= hi:
            yield None
            return
        # point lo pairs with some mate of the right parity
        for mate in range(lo + 1, hi + 1, 2):
            partner[lo], partner[mate] = mate, lo
            for _ in place(lo + 1, mate - 1):
                yield from place(mate + 1, hi)

    for _ in place(0, n_points - 1):
        yield tuple(partner)


def _gen_open(r: int) -> Iterator[tuple[int, ...]]:
    """All open patterns: balanced-bracket words with dots at depth zero."""
    partner = [OPEN] * r

    def place(lo: int) -> Iterator[None]:
        if lo >= r:
            yield None
            return
        # open point
        partner[lo] = OPEN
        yield from place(lo + 1)
        # or an arch from lo enclosing a fully matched block
        for mate in range(lo + 1, r, 2):
            partner[lo], partner[mate] = mate, lo
            for _ in place_closed(lo + 1, mate - 1):
                yield from place(mate + 1)
        partner[lo] = OPEN

    def place_closed(lo: int, hi: int) -> Iterator[None]:
        if lo >= hi:
            yield None
            return
        for mate in range(lo + 1, hi + 1, 2):
            partner[lo], partner[mate] = mate, lo
            for _ in place_closed(lo + 1, mate - 1):
                yield from place_closed(mate + 1, hi)

    for _ in place(0):
        yield tuple(partner)


def catalan(n: int) -> int:
    return math.factorial(2 * n) // (math.factorial(n) * math.factorial(n + 1))


def open_count(r: int) -> int:
    return math.comb(r, (r + 1) // 2)


class PatternIndex:
    """Deterministically ordered basis of patterns with O(1) lookup.

    Order is lexicographic on the partner sequence (open = -1 sorts first),
    which puts the all-open pattern first for open bases.  The distinguished
    base pattern pi0 is exposed separately by name.
    """

    def __init__(self, patterns: Sequence[Pattern], kind: str, base: Pattern):
        self.patterns = list(patterns)
        self.kind = kind
        self._pos = {p: i for i, p in enumerate(self.patterns)}
        self.base = base
        self.base_index = self._pos[base]

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __getitem__(self, i: int) -> Pattern:
        return self.patterns[i]

    def index_of(self, p: Pattern) -> int:
        try:
            return self._pos[p]
        except KeyError:
            raise UsageError(f"pattern {p} not in this basis") from None

    def texts(self) -> list[str]:
        return [p.text() for p in self.patterns]


def closed_base_pattern(n_points: int) -> LinkPattern:
    """The fully nested matching i <-> N-1-i (0-based)."""
    n = n_points
    return LinkPattern(tuple(n - 1 - i for i in range(n)))


def open_base_pattern(r: int) -> OpenLinkPattern:
    """The all-open pattern."""
    return OpenLinkPattern((OPEN,) * r)


def enumerate_closed(n: int) -> PatternIndex:
    """All closed patterns on 2n points, Catalan-many."""
    if n < 1:
        raise UsageError("need n >= 1")
    pats = sorted(_gen_closed(2 * n))
    idx = PatternIndex([LinkPattern(p) for p in pats], "closed", closed_base_pattern(2 * n))
    if len(idx) != catalan(n):
        raise UsageError(f"enumeration bug: {len(idx)} != catalan({n})")
    return idx


def enumerate_open(r: int) -> PatternIndex:
    """All open patterns on r points, C(r, floor((r+1)/2))-many."""
    if r < 1:
        raise UsageError("need r >= 1")
    pats = sorted(_gen_open(r))
    idx = PatternIndex([OpenLinkPattern(p) for p in pats], "open", open_base_pattern(r))
    if len(idx) != open_count(r):
        raise UsageError(f"enumeration bug: {len(idx)} != C({r},{(r+1)//2})")
    return idx


def syt_to_linkpattern(row1: Sequence[int], row2: Sequence[int]) -> LinkPattern:
    """Two-row standard Young tableau -> link pattern.

    First-row labels are arch openings, second-row labels are closings;
    each closing matches the nearest unmatched opening to its left.
    Labels are 1-based as conventionally written.
    """
    n2 = len(row1) + len(row2)
    if len(row1) != len(row2):
        raise UsageError("need a rectangular two-row tableau")
    if sorted(list(row1) + list(row2)) != list(range(1, n2 + 1)):
        raise UsageError("tableau labels must be 1..2n exactly once")
    if any(a >= b for a, b in zip(row1, row2)):
        raise UsageError("not standard: columns must increase downward")
    if list(row1) != sorted(row1) or list(row2) != sorted(row2):
        raise UsageError("not standard: rows must increase")
    openings = set(row1)
    partner = [OPEN] * n2
    stack: list[int] = []
    for label in range(1, n2 + 1):
        if label in openings:
            stack.append(label)
        else:
            if not stack:
                raise UsageError("closing without matching opening")
            a = stack.pop()
            partner[a - 1], partner[label - 1] = label - 1, a - 1
    return LinkPattern(tuple(partner))


# ---------------------------------------------------------------------------
# Colored view of open patterns (used by the D-type boundary operators).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColoredPattern:
    """Open pattern with its open points joined pairwise into dashed arches.

    ``solid`` are the genuine arches, ``dashed`` the arches formed by
    pairing open points, ``half`` the one leftover unpaired open point (or
    None).  Pairing convention "right": repeatedly join the two rightmost
    open points; "left": the two leftmost.  The relation validator selects
    which convention realizes the boundary algebra.
    """

    size: int
    solid: tuple[tuple[int, int], ...]
    dashed: tuple[tuple[int, int], ...]
    half: int | None

    def plain(self) -> OpenLinkPattern:
        partner = [OPEN] * self.size
        for a, b in self.solid:
            partner[a], partner[b] = b, a
        return OpenLinkPattern(tuple(partner))

    def rightmost_structure(self) -> tuple[str, tuple[int, int] | int]:
        """The arch or half-line owning the rightmost relevant endpoint."""
        best: tuple[int, str, object] | None = None
        for a, b in self.solid:
            if best is None or b > best[0]:
                best = (b, "solid", (a, b))
        for a, b in self.dashed:
            if best is None or b > best[0]:
                best = (b, "dashed", (a, b))
        if self.half is not None and (best is None or self.half > best[0]):
            best = (self.half, "half", self.half)
        if best is None:
            raise UsageError("empty pattern has no structures")
        return best[1], best[2]


def pair_open_arches(p: OpenLinkPattern, convention: str = "right") -> ColoredPattern:
    """Join open points pairwise into dashed arches per the convention."""
    opens = p.opens()
    dashed: list[tuple[int, int]] = []
    if convention == "right":
        rest = list(opens)
        while len(rest) >= 2:
            b = rest.pop()
            a = rest.pop()
            dashed.append((a, b))
        half = rest[0] if rest else None
    elif convention == "left":
        rest = list(opens)
        while len(rest) >= 2:
            a = rest.pop(0)
            b = rest.pop(0)
            dashed.append((a, b))
        half = rest[0] if rest else None
    else:
        raise UsageError(f"unknown pairing convention {convention!r}")
    return ColoredPattern(p.size, tuple(sorted(p.arches())), tuple(sorted(dashed)), half)
