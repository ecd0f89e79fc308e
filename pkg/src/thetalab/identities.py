"""Theta-null identities derived from the two-variable product formula.

Two families are generated for a pair of half-integer characteristics
(a, h):

  product:  theta^2[a] theta^2[a+h]
              = 2^-(g-1) * sum_e s(e) * theta^2[e] theta^2[e+h]
            with s(e) = e*(a+e) * (h choose a+e), over all e with
            |a+e, h| = 0, e and e+h both even, and e != e+h;

  quartic:  theta^4[a] + (-1)^{|a,h|} theta^4[a+h]
              = 2^-(g-1) * sum_e e*(a+e) * (theta^4[e]
                + (-1)^{|a,h|} theta^4[e+h])
            over all e with |h| + |e, h| even, e and e+h both even,
            and e != e+h.

Each admissibility class {e, e+h} contributes once; the representative
with the smaller packed code is kept.  Identities are assembled as
signed term lists so verification is a plain evaluation of theta-nulls,
and they serialise to JSON and LaTeX.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import (Characteristic, binom_sign, char_code, char_from_code,
                              enumerate_chars, is_even, pairing, parity)
from .errors import AdmissibleSetError, GenusMismatchError
from .theta import DEFAULT_CONFIG, EvalConfig, RiemannMatrix, theta_null

KINDS = ("product", "quartic")


@dataclass(frozen=True)
class IdentityTerm:
    """sign * product of theta-nulls of `chars`, each raised to `power`."""

    sign: int
    chars: tuple[Characteristic, ...]
    power: int

    def to_dict(self) -> dict:
        return {"sign": self.sign, "power": self.power,
                "chars": [c.to_dict() for c in self.chars]}


@dataclass(frozen=True)
class Identity:
    """Structured theta-null identity LHS = rhs_scale * sum(RHS terms)."""

    genus: int
    kind: str
    a: Characteristic
    h: Characteristic
    admissible: tuple[Characteristic, ...]
    left_terms: tuple[IdentityTerm, ...]
    right_terms: tuple[IdentityTerm, ...]

    @property
    def rhs_scale(self) -> float:
        return 0.5 ** (self.genus - 1)

    def to_dict(self) -> dict:
        return {"genus": self.genus, "kind": self.kind,
                "a": self.a.to_dict(), "h": self.h.to_dict(),
                "rhs_scale": self.rhs_scale,
                "left_terms": [t.to_dict() for t in self.left_terms],
                "right_terms": [t.to_dict() for t in self.right_terms]}

    def to_latex(self) -> str:
        def chunk(term: IdentityTerm) -> str:
            sign = "-" if term.sign < 0 else "+"
            body = r" \, ".join(
                rf"\theta^{term.power}\!\left[{_latex_char(c)}\right]" for c in term.chars)
            return f"{sign} {body}"

        lhs = " ".join(chunk(t) for t in self.left_terms).lstrip("+ ")
        rhs = " ".join(chunk(t) for t in self.right_terms).lstrip("+ ")
        return rf"{lhs} = \frac{{1}}{{2^{{{self.genus - 1}}}}} \left( {rhs} \right)"


def _latex_char(c: Characteristic) -> str:
    top = " & ".join(f"{t}/{c.denom}" if t else "0" for t in c.top)
    bottom = " & ".join(f"{b}/{c.denom}" if b else "0" for b in c.bottom)
    return rf"\begin{{smallmatrix}} {top} \\ {bottom} \end{{smallmatrix}}"


def _check_half_pair(a: Characteristic, h: Characteristic):
    if a.genus != h.genus:
        raise GenusMismatchError(f"a and h must share a genus: {a.genus} vs {h.genus}")
    for c in (a, h):
        if not c.is_half():
            raise ValueError("identity generation needs half-integer characteristics")


def admissible_e(a: Characteristic, h: Characteristic, kind: str) -> list[Characteristic]:
    """Admissible summation characteristics, one per {e, e+h} class.

    Raises AdmissibleSetError when no e qualifies; h = 0 always does
    that, since e = e+h kills every candidate.
    """
    _check_half_pair(a, h)
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    g = a.genus
    keep = []
    for e in enumerate_chars(g, 2):
        eh = e + h
        if e == eh or not is_even(e) or not is_even(eh):
            continue
        if char_code(eh, 2) < char_code(e, 2):
            continue  # the partner already represents this class
        if kind == "product":
            if pairing(a + e, h) != 0:
                continue
        else:
            top, bottom = h.numerators(2)
            h_norm = sum(t * b for t, b in zip(top, bottom)) % 2
            if (h_norm + pairing(e, h)) % 2 != 0:
                continue
        keep.append(e)
    if not keep:
        detail = "h = 0 makes e = e+h for every e" if h.is_zero() else "conditions exclude every e"
        raise AdmissibleSetError(f"no admissible characteristics for (a={a}, h={h}, {kind}): {detail}")
    return keep


def generate_identity(a: Characteristic, h: Characteristic, kind: str) -> Identity:
    """Assemble the identity for (a, h); raises if the admissible set is empty."""
    es = admissible_e(a, h, kind)
    g = a.genus
    if kind == "product":
        left = (IdentityTerm(1, (a, a + h), 2),)
        right = tuple(IdentityTerm(parity(a + e) * binom_sign(h, a + e), (e, e + h), 2)
                      for e in es)
    else:
        cross = -1 if pairing(a, h) else 1
        left = (IdentityTerm(1, (a,), 4), IdentityTerm(cross, (a + h,), 4))
        right = []
        for e in es:
            s = parity(a + e)
            right.append(IdentityTerm(s, (e,), 4))
            right.append(IdentityTerm(s * cross, (e + h,), 4))
        right = tuple(right)
    return Identity(g, kind, a, h, tuple(es), left, right)


def verify_identity(identity: Identity, tau: RiemannMatrix,
                    cfg: EvalConfig = DEFAULT_CONFIG) -> dict:
    """Evaluate both sides with theta-nulls; returns absolute and relative residuals."""
    if tau.genus != identity.genus:
        raise GenusMismatchError(
            f"identity genus {identity.genus} does not match tau genus {tau.genus}")
    cache: dict[Characteristic, complex] = {}

    def null(c: Characteristic) -> complex:
        if c not in cache:
            cache[c] = theta_null(c, tau, cfg)
        return cache[c]

    def side(terms, scale):
        total = 0.0 + 0.0j
        largest = 0.0
        for term in terms:
            value = term.sign * np.prod([null(c) ** term.power for c in term.chars]) * scale
            largest = max(largest, abs(value))
            total += value
        return total, largest

    lhs, l_max = side(identity.left_terms, 1.0)
    rhs, r_max = side(identity.right_terms, identity.rhs_scale)
    abs_residual = abs(lhs - rhs)
    scale = max(l_max, r_max, 1e-300)
    return {"abs_residual": float(abs_residual),
            "rel_residual": float(abs_residual / scale),
            "largest_term": float(scale)}


def identity_from_dict(data: dict) -> Identity:
    from .characteristics import char_from_dict

    def term(d):
        return IdentityTerm(int(d["sign"]), tuple(char_from_dict(c) for c in d["chars"]),
                            int(d["power"]))

    a = char_from_dict(data["a"])
    h = char_from_dict(data["h"])
    return Identity(int(data["genus"]), data["kind"], a, h,
                    tuple(admissible_e(a, h, data["kind"])),
                    tuple(term(t) for t in data["left_terms"]),
                    tuple(term(t) for t in data["right_terms"]))


def all_admissible_pairs(genus: int, kind: str) -> list[tuple[Characteristic, Characteristic]]:
    """Every (a, h) pair of half-integer characteristics with a nonempty admissible set."""
    pairs = []
    for a in enumerate_chars(genus, 2):
        for h in enumerate_chars(genus, 2):
            try:
                admissible_e(a, h, kind)
            except AdmissibleSetError:
                continue
            pairs.append((a, h))
    return pairs


def verify_identity_batch(genus: int, kind: str, n_pairs: int, n_tau: int,
                          seed: int = 0, cfg: EvalConfig = DEFAULT_CONFIG) -> dict:
    """Random (a, h) pairs verified against random Siegel matrices.

    n_pairs = 0 means every admissible pair (exhaustive at small genus).
    """
    from .theta import random_siegel

    rng = np.random.default_rng(seed)
    if n_pairs == 0:
        pairs = all_admissible_pairs(genus, kind)
    else:
        pairs = []
        seen = set()
        attempts = 0
        while len(pairs) < n_pairs and attempts < 100 * n_pairs:
            attempts += 1
            a = char_from_code(genus, 2, int(rng.integers(0, 4 ** genus)))
            h = char_from_code(genus, 2, int(rng.integers(0, 4 ** genus)))
            if (a, h) in seen:
                continue
            try:
                admissible_e(a, h, kind)
            except AdmissibleSetError:
                continue
            seen.add((a, h))
            pairs.append((a, h))
    taus = [random_siegel(genus, rng) for _ in range(n_tau)]
    worst = 0.0
    worst_case = None
    for a, h in pairs:
        identity = generate_identity(a, h, kind)
        for tau in taus:
            res = verify_identity(identity, tau, cfg)["rel_residual"]
            if res > worst:
                worst = res
                worst_case = {"a": a.to_dict(), "h": h.to_dict()}
    return {"kind": kind, "genus": genus, "pairs": len(pairs), "taus": n_tau,
            "seed": seed, "max_rel_residual": float(worst), "worst_case": worst_case}
