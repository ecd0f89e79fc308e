"""Exact algebra of rational theta characteristics.

A characteristic [a; b] with denominator N is stored through its integer
numerator rows: a = top/N and b = bottom/N, with every entry reduced
mod N and the denominator brought to lowest form.  Two characteristics
represent the same point of the Jacobian torus exactly when the reduced
objects compare equal, so instances are hashable and usable in sets.

Half-integer characteristics (denominator 1 or 2) carry the classical
combinatorics: the parity e*(m), the alternating pairing |m, a|, the
triple pairing |m, a, b|, the binomial sign (m choose a), Göpel groups
and their coset systems, and Krazer's rank/type classification of
subgroups of half-periods.  All pairings are exposed as integer
exponents (mod 2, or mod n for denominator-n points) rather than as
unit complex numbers, which keeps every test an exact integer check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DenominatorError, EnumerationGuardError, GenusMismatchError

ENUMERATION_GUARD = 10**7
GOEPEL_GENUS_GUARD = 3
MAX_COMBINED_DENOM = 12


@dataclass(frozen=True)
class Characteristic:
    """Rational characteristic [top/denom ; bottom/denom] of a genus-g torus.

    Entries are normalised on construction: numerators reduced mod denom
    and the denominator divided by the gcd of all numerators, so e.g.
    [2,0;0,0] over 4 collapses to [1,0;0,0] over 2.  The reduced `denom`
    equals the order of the point tau*a + b in the Jacobian.
    """

    genus: int
    denom: int
    top: tuple[int, ...]
    bottom: tuple[int, ...]

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError(f"genus must be positive, got {self.genus}")
        if self.denom < 1:
            raise DenominatorError(f"denominator must be positive, got {self.denom}")
        top = tuple(int(t) % self.denom for t in self.top)
        bottom = tuple(int(b) % self.denom for b in self.bottom)
        if len(top) != self.genus or len(bottom) != self.genus:
            raise ValueError("top/bottom rows must have length equal to the genus")
        d = math.gcd(self.denom, *top, *bottom) if (top or bottom) else self.denom
        object.__setattr__(self, "denom", self.denom // d)
        object.__setattr__(self, "top", tuple(t // d for t in top))
        object.__setattr__(self, "bottom", tuple(b // d for b in bottom))

    @property
    def order(self) -> int:
        """Order of the corresponding torsion point (1 for the zero class)."""
        return self.denom

    def is_half(self) -> bool:
        return self.denom in (1, 2)

    def is_zero(self) -> bool:
        return self.denom == 1

    def numerators(self, denom: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Numerator rows re-expressed over a denominator this one divides."""
        if denom % self.denom:
            raise DenominatorError(f"cannot express denominator-{self.denom} characteristic over {denom}")
        s = denom // self.denom
        return tuple(t * s for t in self.top), tuple(b * s for b in self.bottom)

    def __add__(self, other: "Characteristic") -> "Characteristic":
        if not isinstance(other, Characteristic):
            return NotImplemented
        _same_genus(self, other)
        n = math.lcm(self.denom, other.denom)
        if n > MAX_COMBINED_DENOM:
            raise DenominatorError(f"combined denominator {n} exceeds the supported lcm {MAX_COMBINED_DENOM}")
        st, sb = self.numerators(n)
        ot, ob = other.numerators(n)
        return Characteristic(self.genus, n,
                              tuple(x + y for x, y in zip(st, ot)),
                              tuple(x + y for x, y in zip(sb, ob)))

    def __neg__(self) -> "Characteristic":
        return Characteristic(self.genus, self.denom,
                              tuple(-t for t in self.top),
                              tuple(-b for b in self.bottom))

    def __mul__(self, k: int) -> "Characteristic":
        if not isinstance(k, int):
            return NotImplemented
        return Characteristic(self.genus, self.denom,
                              tuple(k * t for t in self.top),
                              tuple(k * b for b in self.bottom))

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"genus": self.genus, "denom": self.denom,
                "top": list(self.top), "bottom": list(self.bottom)}

    def __str__(self):
        return f"[{','.join(map(str, self.top))}; {','.join(map(str, self.bottom))}]/{self.denom}"


def char_from_dict(data: dict) -> Characteristic:
    return Characteristic(int(data["genus"]), int(data["denom"]),
                          tuple(int(t) for t in data["top"]),
                          tuple(int(b) for b in data["bottom"]))


def zero_char(genus: int) -> Characteristic:
    return Characteristic(genus, 1, (0,) * genus, (0,) * genus)


def half_char(genus: int, top, bottom) -> Characteristic:
    """Half-integer characteristic from 0/1 rows."""
    return Characteristic(genus, 2, tuple(top), tuple(bottom))


def half_from_compact(text: str, genus: int | None = None) -> Characteristic:
    """Parse the compact form "t1…tg/b1…bg" of 0/1 digits."""
    try:
        top_str, bottom_str = text.strip().split("/")
    except ValueError:
        raise ValueError(f"compact characteristic must look like '01/10', got {text!r}") from None
    if len(top_str) != len(bottom_str) or not top_str:
        raise ValueError(f"compact characteristic rows must have equal positive length: {text!r}")
    if set(top_str + bottom_str) - {"0", "1"}:
        raise ValueError(f"compact characteristic digits must be 0/1: {text!r}")
    if genus is not None and len(top_str) != genus:
        raise GenusMismatchError(f"compact characteristic has genus {len(top_str)}, expected {genus}")
    return half_char(len(top_str), tuple(map(int, top_str)), tuple(map(int, bottom_str)))


def half_to_compact(c: Characteristic) -> str:
    t, b = c.numerators(2)
    return "".join(map(str, t)) + "/" + "".join(map(str, b))


def _same_genus(x: Characteristic, y: Characteristic):
    if x.genus != y.genus:
        raise GenusMismatchError(f"incompatible characteristics: genus {x.genus} vs {y.genus}")


def _half_rows(*chars: Characteristic) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    rows = []
    for c in chars:
        if not c.is_half():
            raise DenominatorError(f"operation requires half-integer characteristics, got denominator {c.denom}")
        rows.append(c.numerators(2))
    return rows


def char_code(c: Characteristic, denom: int) -> int:
    """Canonical integer code: top‖bottom read as a base-`denom` number."""
    t, b = c.numerators(denom)
    code = 0
    for digit in t + b:
        code = code * denom + digit
    return code


def char_from_code(genus: int, denom: int, code: int) -> Characteristic:
    digits = []
    for _ in range(2 * genus):
        digits.append(code % denom)
        code //= denom
    digits.reverse()
    return Characteristic(genus, denom, tuple(digits[:genus]), tuple(digits[genus:]))


def add(x: Characteristic, y: Characteristic) -> Characteristic:
    """Group sum of two characteristics over their common denominator."""
    return x + y


def negate(x: Characteristic) -> Characteristic:
    return -x


def parity(m: Characteristic) -> int:
    """Parity sign e*(m) = (-1)^(top·bottom) of a half-integer characteristic."""
    (t, b), = _half_rows(m)
    return -1 if sum(ti * bi for ti, bi in zip(t, b)) % 2 else 1


def is_even(m: Characteristic) -> bool:
    return parity(m) == 1


def pairing(m: Characteristic, a: Characteristic) -> int:
    """Syzygy exponent |m, a| mod 2: 0 syzygetic, 1 azygetic."""
    _same_genus(m, a)
    (mt, mb), (at, ab) = _half_rows(m, a)
    return sum(mb[i] * at[i] + mt[i] * ab[i] for i in range(m.genus)) % 2


def pairing_exponent(x: Characteristic, y: Characteristic) -> tuple[int, int]:
    """Commutator pairing for points of any order.

    Returns (k, n) with n the common denominator; the multiplicative
    pairing value is exp(2*pi*i*k/n).  For half-integer inputs this is
    the |m, a| exponent with n = 2.
    """
    _same_genus(x, y)
    n = math.lcm(x.denom, y.denom)
    if n > MAX_COMBINED_DENOM:
        raise DenominatorError(f"combined denominator {n} exceeds the supported lcm {MAX_COMBINED_DENOM}")
    xt, xb = x.numerators(n)
    yt, yb = y.numerators(n)
    k = sum(xb[i] * yt[i] - xt[i] * yb[i] for i in range(x.genus)) % n
    return k, n


def triple_pairing(m: Characteristic, a: Characteristic, b: Characteristic) -> int:
    """|m, a, b| = |a, b| + |b, m| + |m, a| mod 2."""
    return (pairing(a, b) + pairing(b, m) + pairing(m, a)) % 2


def binom_sign(m: Characteristic, a: Characteristic) -> int:
    """(m choose a) = (-1)^(top(m)·bottom(a))."""
    _same_genus(m, a)
    (mt, _), (_, ab) = _half_rows(m, a)
    return -1 if sum(mt[i] * ab[i] for i in range(m.genus)) % 2 else 1


def enumerate_chars(genus: int, denom: int) -> list[Characteristic]:
    """All denominator-`denom` characteristics in canonical code order."""
    if denom < 1:
        raise DenominatorError(f"denominator must be positive, got {denom}")
    total = denom ** (2 * genus)
    if total > ENUMERATION_GUARD:
        raise EnumerationGuardError(
            f"enumeration of {denom}^(2*{genus}) = {total} characteristics exceeds the guard {ENUMERATION_GUARD}")
    return [char_from_code(genus, denom, code) for code in range(total)]


def char_census(genus: int) -> tuple[int, int]:
    """(even, odd) counts over all half-integer characteristics."""
    even = sum(1 for c in enumerate_chars(genus, 2) if parity(c) == 1)
    return even, 4 ** genus - even


# ---------------------------------------------------------------------------
# Göpel groups and systems.  Internally half-characteristics are handled as
# 2g-bit codes (top bits then bottom bits, most significant first) so group
# closure and coset bookkeeping are cheap integer operations.
# ---------------------------------------------------------------------------

def code_pairing(x: int, y: int, genus: int) -> int:
    """Syzygy exponent |x, y| mod 2 on packed 2g-bit half-characteristic codes."""
    mask = (1 << genus) - 1
    xt, xb = x >> genus, x & mask
    yt, yb = y >> genus, y & mask
    return ((xb & yt).bit_count() + (xt & yb).bit_count()) % 2


_code_pairing = code_pairing


def _code_parity_even(x: int, genus: int) -> bool:
    mask = (1 << genus) - 1
    return ((x >> genus) & x & mask).bit_count() % 2 == 0


@dataclass(frozen=True)
class GoepelGroup:
    """Subgroup of 2^rank half-characteristics, pairwise syzygetic."""

    genus: int
    rank: int
    codes: frozenset[int]

    def characteristics(self) -> list[Characteristic]:
        return [char_from_code(self.genus, 2, code) for code in sorted(self.codes)]

    def __post_init__(self):
        if len(self.codes) != 1 << self.rank:
            raise ValueError(f"Göpel group of rank {self.rank} must have {1 << self.rank} elements")
        if 0 not in self.codes:
            raise ValueError("Göpel group must contain the zero characteristic")


@dataclass(frozen=True)
class GoepelSystem:
    """Coset of a Göpel group, tagged by its even/odd composition."""

    group: GoepelGroup
    shift: int
    tag: str  # 'all-even' | 'all-odd' | 'mixed'

    def codes(self) -> list[int]:
        return sorted(code ^ self.shift for code in self.group.codes)

    def characteristics(self) -> list[Characteristic]:
        return [char_from_code(self.group.genus, 2, code) for code in self.codes()]


def close_codes(gens) -> frozenset[int]:
    """Closure of packed half-characteristic codes under XOR (the group span)."""
    span = {0}
    for gen in gens:
        span |= {x ^ gen for x in span}
    return frozenset(span)


_close_codes = close_codes


def enumerate_goepel_groups(genus: int, rank: int) -> list[GoepelGroup]:
    """All Göpel groups of 2^rank elements, in lexicographic element order."""
    if genus > GOEPEL_GENUS_GUARD:
        raise EnumerationGuardError(f"Göpel enumeration is guarded to genus <= {GOEPEL_GENUS_GUARD}")
    if not 1 <= rank <= genus:
        raise ValueError(f"rank must satisfy 1 <= rank <= genus, got rank={rank} genus={genus}")
    n_codes = 1 << (2 * genus)
    level = {frozenset({0})}
    for _ in range(rank):
        nxt = set()
        for group in level:
            for cand in range(1, n_codes):
                if cand in group:
                    continue
                if all(_code_pairing(cand, x, genus) == 0 for x in group):
                    nxt.add(frozenset(x ^ y for x in group for y in (0, cand)))
        level = nxt
    groups = [GoepelGroup(genus, rank, codes) for codes in level]
    groups.sort(key=lambda grp: tuple(sorted(grp.codes)))
    return groups


def goepel_systems(group: GoepelGroup) -> list[GoepelSystem]:
    """The 2^(2g-r) cosets of a Göpel group, each tagged all-even/all-odd/mixed."""
    genus = group.genus
    seen = set()
    systems = []
    for shift in range(1 << (2 * genus)):
        coset = frozenset(code ^ shift for code in group.codes)
        rep = min(coset)
        if rep in seen:
            continue
        seen.add(rep)
        evens = sum(1 for code in coset if _code_parity_even(code, genus))
        if evens == len(coset):
            tag = "all-even"
        elif evens == 0:
            tag = "all-odd"
        else:
            tag = "mixed"
        systems.append(GoepelSystem(group, rep, tag))
    systems.sort(key=lambda s: s.shift)
    return systems


def system_census(group: GoepelGroup) -> dict[str, int]:
    counts = {"all-even": 0, "all-odd": 0, "mixed": 0}
    for system in goepel_systems(group):
        counts[system.tag] += 1
    return counts


# ---------------------------------------------------------------------------
# Krazer rank/type classification of groups of half-periods.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubgroupType:
    """Krazer invariants of a group of half-periods: rank r and type (m, n)."""

    rank: int
    m: int
    n: int

    def __post_init__(self):
        if self.rank != self.m + 2 * self.n:
            raise ValueError(f"rank {self.rank} must equal m + 2n = {self.m + 2 * self.n}")

    def as_pair(self) -> tuple[int, int]:
        return self.m, self.n


def _gf2_basis(codes) -> list[int]:
    pivots: dict[int, int] = {}
    for code in sorted(codes):
        v = code
        while v:
            hb = v.bit_length() - 1
            if hb in pivots:
                v ^= pivots[hb]
            else:
                pivots[hb] = v
                break
    return [pivots[hb] for hb in sorted(pivots, reverse=True)]


def _gf2_rank(rows: list[int]) -> int:
    return len(_gf2_basis(rows))


def span_codes(generators: list[Characteristic]) -> frozenset[int]:
    """Subgroup of half-characteristic codes generated by the inputs."""
    if not generators:
        return frozenset({0})
    genus = generators[0].genus
    for g in generators[1:]:
        _same_genus(generators[0], g)
    codes = [char_code(c, 2) for c in generators]  # raises unless half-period
    return _close_codes(codes)


def group_type_from_codes(gen_codes, genus: int) -> SubgroupType:
    """Krazer rank/type from packed generator codes (the fast path)."""
    basis = _gf2_basis(close_codes(gen_codes))
    r = len(basis)
    # Gram matrix of the pairing over GF(2), rows packed as bit masks.
    rows = []
    for bi in basis:
        row = 0
        for bj in basis:
            row = (row << 1) | code_pairing(bi, bj, genus)
        rows.append(row)
    two_n = _gf2_rank(rows)
    m = r - two_n
    t = SubgroupType(r, m, two_n // 2)
    if t.m + t.n > genus:
        raise ValueError(f"computed type {t} violates m + n <= genus for genus {genus}")
    return t


def group_type(generators: list[Characteristic]) -> SubgroupType:
    """Krazer rank/type of the group of half-periods spanned by `generators`.

    m is the dimension of the radical of the syzygy pairing restricted to
    the group and 2n the rank of the induced alternating form, so that
    rank = m + 2n.  The value does not depend on the generating set.
    """
    if not generators:
        return SubgroupType(0, 0, 0)
    genus = generators[0].genus
    return group_type_from_codes(span_codes(generators), genus)


def subgroup_elements(generators: list[Characteristic]) -> list[Characteristic]:
    """Closure of arbitrary-order characteristics under addition."""
    if not generators:
        return []
    for g in generators[1:]:
        _same_genus(generators[0], g)
    zero = zero_char(generators[0].genus)
    span = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for x in frontier:
            for gen in generators:
                y = x + gen
                if y not in span:
                    span.add(y)
                    nxt.append(y)
        frontier = nxt
        if len(span) > 4096:
            raise EnumerationGuardError("generated subgroup exceeds the size guard")
    n = math.lcm(*(c.denom for c in span))
    return sorted(span, key=lambda c: char_code(c, n))
