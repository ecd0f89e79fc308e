"""Automorphism-group detection for genus-3 Jacobians from theta-nulls.

The detectors search rational periods tau*a + b whose theta-null
vanishes, then test exact group conditions on the characteristics:

  C2       pairs of quarter-period nulls f1 != +-f2 with 2f1 = 2f2 and
           azygetic |2f1, f1+f2| = 1;
  V4 (hyp) triples of distinct quarter-period nulls with a common double;
  V4 (non) an order-2 vanishing at exactly one half-period plus a C2 pair;
  C3       pairs of order-6 nulls with 3f1 = 3f2 and nonzero mod-3
           commutator pairing of 2f1 with f1+f2;
  C2^3     (necessary direction only) the order-2 half-period plus three
           simple-zero quarter periods over one double;
  S3 / D4  two azygetic quarter pairs over distinct doubles whose derived
           half-period group has Krazer type (0,2) / (2,1);
  S4       a quarter pair and an azygetic triple with type conditions
           (2,1) and (0,2);
  C4^2:S3, six quarter-period nulls in three azygetic pairs with a rank-6
  L3(2)    span and the secondary group M of type (2,1) / (0,2).

Theta-nulls are evaluated once per candidate characteristic through a
per-tau cache; the vanishing threshold is relative to the largest even
half-integer theta-null.  All pairing and type conditions are exact
integer checks on the characteristics, so a detection disagreement can
only come from the vanishing threshold, never from the group algebra.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

import numpy as np

from .characteristics import (Characteristic, char_code, char_from_code, close_codes,
                              code_pairing, group_type_from_codes, is_even, pairing,
                              pairing_exponent, subgroup_elements, zero_char)
from .errors import GenusMismatchError, WitnessError
from .theta import (DEFAULT_CONFIG, EvalConfig, RiemannMatrix, VanishThresholds,
                    theta_gradient, theta_null, theta_null_table)

CASE_IDS = ("C2", "V4_hyperelliptic", "V4_nonhyperelliptic", "C3", "C2^3",
            "S3", "D4", "S4", "C4^2:S3", "L3(2)")

MAX_REPORTED_WITNESSES = 24
SEARCH_BUDGET = 120_000

# Report-level implications of the subgroup lattice: if `case` is detected,
# every listed subordinate case must be detected too.
IMPLICATIONS = {
    "D4": ("C2",),
    "S3": ("C2",),
    "S4": ("D4", "C2"),
    "C4^2:S3": ("S4", "D4", "C2"),
    "L3(2)": ("S3", "D4", "C2"),
}


def thread_cap() -> int:
    """Worker cap for batched evaluation, bounded by THETA_LAB_THREADS."""
    cap = os.cpu_count() or 1
    env = os.environ.get("THETA_LAB_THREADS")
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            pass
    return min(cap, 4)


@dataclass(frozen=True)
class PeriodPoint:
    """Rational period with its cached theta-null modulus (and gradient norm)."""

    char: Characteristic
    theta_abs: float
    grad_norm: float | None = None

    def to_dict(self) -> dict:
        data = {"characteristic": self.char.to_dict(), "theta_abs": self.theta_abs}
        if self.grad_norm is not None:
            data["grad_norm"] = self.grad_norm
        return data


class ThetaNullCache:
    """Write-once cache of theta-null tables and gradients for one tau."""

    def __init__(self, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
                 thresholds: VanishThresholds = VanishThresholds()):
        if tau.genus != 3:
            raise GenusMismatchError(f"detection needs genus 3, got {tau.genus}")
        self.tau = tau
        self.cfg = cfg
        self.thresholds = thresholds
        self._tables: dict[int, np.ndarray] = {}
        self._grads: dict[Characteristic, float] = {}

    def table(self, denom: int) -> np.ndarray:
        if denom not in self._tables:
            workers = thread_cap() if denom >= 4 else 1
            self._tables[denom] = theta_null_table(3, denom, self.tau, self.cfg, workers)
        return self._tables[denom]

    def max_even(self) -> float:
        table = self.table(2)
        best = 0.0
        for code in range(64):
            c = char_from_code(3, 2, code)
            if is_even(c):
                best = max(best, abs(table[code]))
        return best

    def null_abs(self, c: Characteristic) -> float:
        for denom in (2, 4, 6):
            if denom % c.denom == 0 and denom in self._tables:
                return float(abs(self._tables[denom][char_code(c, denom)]))
        for denom in (2, 4, 6):
            if denom % c.denom == 0:
                return float(abs(self.table(denom)[char_code(c, denom)]))
        return float(abs(theta_null(c, self.tau, self.cfg)))

    def is_null(self, c: Characteristic) -> bool:
        return self.null_abs(c) < self.thresholds.value_rel * self.max_even()

    def grad_norm(self, c: Characteristic) -> float:
        if c not in self._grads:
            grad = theta_gradient(c, np.zeros(3), self.tau, self.cfg)
            self._grads[c] = float(np.linalg.norm(grad))
        return self._grads[c]

    def vanishing_order(self, c: Characteristic) -> int:
        if not self.is_null(c):
            return 0
        if self.grad_norm(c) >= self.thresholds.gradient_rel * self.max_even():
            return 1
        return 2

    def point(self, c: Characteristic, with_grad: bool = False) -> PeriodPoint:
        return PeriodPoint(c, self.null_abs(c),
                           self.grad_norm(c) if with_grad else None)


def vanishing_periods(tau: RiemannMatrix, denom: int,
                      cfg: EvalConfig = DEFAULT_CONFIG,
                      thresholds: VanishThresholds = VanishThresholds(),
                      cache: ThetaNullCache | None = None) -> list[PeriodPoint]:
    """All denominator-`denom` characteristics with vanishing theta-null."""
    cache = cache or ThetaNullCache(tau, cfg, thresholds)
    table = cache.table(denom)
    cutoff = thresholds.value_rel * cache.max_even()
    points = []
    for code in range(denom ** 6):
        if abs(table[code]) < cutoff:
            c = char_from_code(3, denom, code)
            points.append(PeriodPoint(c, float(abs(table[code]))))
    return points


def _vanishing_of_order(cache: ThetaNullCache, denom: int, order: int) -> list[Characteristic]:
    return [p.char for p in vanishing_periods(cache.tau, denom, cache.cfg,
                                              cache.thresholds, cache)
            if p.char.denom == order]


def _by_double(quarters: list[Characteristic]) -> dict[Characteristic, list[Characteristic]]:
    buckets: dict[Characteristic, list[Characteristic]] = {}
    for f in quarters:
        buckets.setdefault(2 * f, []).append(f)
    return buckets


def _azygetic_pairs(bucket: list[Characteristic]) -> list[tuple[Characteristic, Characteristic]]:
    """Pairs f1 != +-f2 in a common-double bucket with |2f1, f1+f2| = 1."""
    pairs = []
    for f1, f2 in itertools.combinations(bucket, 2):
        if f2 == -f1:
            continue
        if pairing(2 * f1, f1 + f2) == 1:
            pairs.append((f1, f2))
    return pairs


def detect_c2(tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
              thresholds: VanishThresholds = VanishThresholds(),
              cache: ThetaNullCache | None = None) -> list[tuple[Characteristic, Characteristic]]:
    """Quarter-period theta-null pairs witnessing an order-2 embedding."""
    cache = cache or ThetaNullCache(tau, cfg, thresholds)
    quarters = _vanishing_of_order(cache, 4, 4)
    witnesses = []
    for bucket in _by_double(quarters).values():
        witnesses.extend(_azygetic_pairs(bucket))
    witnesses.sort(key=lambda p: (char_code(p[0], 4), char_code(p[1], 4)))
    return witnesses


@dataclass(frozen=True)
class InvolutionWitness:
    """Quarter-period generators with their derived half- and quarter-groups."""

    f1: Characteristic
    f2: Characteristic
    half_group: tuple[Characteristic, ...]     # {0, 2f1, 2f2, 2(f1+f2)}
    quarter_group: tuple[Characteristic, ...]  # <f1, f2> = C4 x C4, 16 elements

    def order4_elements(self) -> list[Characteristic]:
        return [c for c in self.quarter_group if c.denom == 4]

    def to_dict(self) -> dict:
        return {"f1": self.f1.to_dict(), "f2": self.f2.to_dict(),
                "half_group": [c.to_dict() for c in self.half_group],
                "quarter_group": [c.to_dict() for c in self.quarter_group]}


def involution_group_structure(f1: Characteristic, f2: Characteristic) -> InvolutionWitness:
    """Build and validate the group data of a candidate witness (no theta checks)."""
    for f in (f1, f2):
        if f.denom != 4:
            raise WitnessError(f"{f} is not a quarter period")
    if f1.genus != f2.genus:
        raise GenusMismatchError("witness generators must share a genus")
    # Both generators have order 4, so <f1, f2> = {n f1 + m f2} directly.
    quarter_group = {(n, m): n * f1 + m * f2 for n in range(4) for m in range(4)}
    distinct = set(quarter_group.values())
    if len(distinct) != 16:
        raise WitnessError("<f1> and <f2> intersect nontrivially; the group is not C4 x C4")
    half_group = {zero_char(f1.genus), 2 * f1, 2 * f2, 2 * f1 + 2 * f2}
    if len(half_group) != 4:
        raise WitnessError("<2f1, 2f2> is not a Klein four-group")
    order = lambda c: char_code(c, 4)
    return InvolutionWitness(f1, f2, tuple(sorted(half_group, key=order)),
                             tuple(sorted(distinct, key=order)))


def build_involution_witness(f1: Characteristic, f2: Characteristic, tau: RiemannMatrix,
                             cfg: EvalConfig = DEFAULT_CONFIG,
                             thresholds: VanishThresholds = VanishThresholds(),
                             cache: ThetaNullCache | None = None) -> InvolutionWitness:
    """Validate a C4 x C4 witness: group structure plus all 16 theta-nulls."""
    witness = involution_group_structure(f1, f2)
    cache = cache or ThetaNullCache(tau, cfg, thresholds)
    failing = [c for c in witness.quarter_group if not cache.is_null(c)]
    if failing:
        raise WitnessError(
            f"{len(failing)} of 16 group elements fail the theta-null test, e.g. {failing[0]}")
    return witness


def prop_c2_witnesses(tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
                      thresholds: VanishThresholds = VanishThresholds(),
                      cache: ThetaNullCache | None = None,
                      budget: int = SEARCH_BUDGET) -> list[InvolutionWitness]:
    """Search for pairs whose full C4 x C4 group passes the theta-null test.

    The group always contains the zero characteristic, so a witness
    requires the plain Riemann theta-null to vanish as well; the search
    prunes pairs whose generators alone fail the group conditions.
    """
    cache = cache or ThetaNullCache(tau, cfg, thresholds)
    quarters = _vanishing_of_order(cache, 4, 4)
    found = []
    seen: set[frozenset] = set()
    checks = 0
    for f1, f2 in itertools.combinations(quarters, 2):
        checks += 1
        if checks > budget or len(found) >= MAX_REPORTED_WITNESSES:
            break
        try:
            witness = build_involution_witness(f1, f2, tau, cfg, thresholds, cache)
        except WitnessError:
            continue
        key = frozenset(witness.quarter_group)
        if key not in seen:
            seen.add(key)
            found.append(witness)
    return found


def commuting_involutions(w1: InvolutionWitness, w2: InvolutionWitness) -> bool:
    """True when the derived half-period groups intersect in exactly 2 elements."""
    return len(set(w1.half_group) & set(w2.half_group)) == 2


@dataclass
class CaseResult:
    case: str
    detected: bool
    witnesses: list = field(default_factory=list)
    witness_count: int = 0
    truncated: bool = False
    necessary_only: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        data = {"case": self.case, "detected": self.detected,
                "witness_count": self.witness_count,
                "witnesses": self.witnesses}
        if self.truncated:
            data["truncated"] = True
        if self.necessary_only:
            data["necessary_only"] = True
        if self.note:
            data["note"] = self.note
        return data


class _Search:
    """Bounded witness collector.

    Tuple searches stop once MAX_REPORTED_WITNESSES are in hand or the
    condition-check budget runs out; `truncated` records that the scan
    did not finish, so an empty truncated result means "none found
    within budget", not a certificate of absence.  On vanisher sets of
    the size real curves produce the budget is never reached.
    """

    def __init__(self, budget: int = SEARCH_BUDGET):
        self.budget = budget
        self.checks = 0
        self.witnesses: list = []
        self.truncated = False

    def spend(self, cost: int = 1) -> bool:
        """Account for `cost` condition checks; False once the search should stop."""
        self.checks += cost
        if self.checks > self.budget or len(self.witnesses) >= MAX_REPORTED_WITNESSES:
            self.truncated = True
            return False
        return True

    def add(self, witness) -> bool:
        self.witnesses.append(witness)
        if len(self.witnesses) >= MAX_REPORTED_WITNESSES:
            self.truncated = True
            return False
        return True

    def result(self, case: str, **kwargs) -> CaseResult:
        return CaseResult(case, bool(self.witnesses), self.witnesses,
                          len(self.witnesses), truncated=self.truncated, **kwargs)


def _chars_dict(chars) -> list[dict]:
    return [c.to_dict() for c in chars]


def _case_c2(cache: ThetaNullCache) -> CaseResult:
    pairs = detect_c2(cache.tau, cache.cfg, cache.thresholds, cache)
    return CaseResult("C2", bool(pairs),
                      [_chars_dict(p) for p in pairs[:MAX_REPORTED_WITNESSES]], len(pairs),
                      truncated=len(pairs) > MAX_REPORTED_WITNESSES)


def _case_v4_hyperelliptic(cache: ThetaNullCache) -> CaseResult:
    quarters = _vanishing_of_order(cache, 4, 4)
    search = _Search()
    for bucket in _by_double(quarters).values():
        for triple in itertools.combinations(bucket, 3):
            if not search.spend():
                return search.result("V4_hyperelliptic")
            search.add(_chars_dict(triple))
    return search.result("V4_hyperelliptic")


def _order2_half_periods(cache: ThetaNullCache) -> list[Characteristic]:
    found = []
    for code in range(64):
        c = char_from_code(3, 2, code)
        if cache.vanishing_order(c) >= 2:
            found.append(c)
    return found


def _case_v4_nonhyperelliptic(cache: ThetaNullCache) -> CaseResult:
    deep = _order2_half_periods(cache)
    pairs = detect_c2(cache.tau, cache.cfg, cache.thresholds, cache) if len(deep) == 1 else []
    detected = len(deep) == 1 and bool(pairs)
    witnesses = [{"half_period": deep[0].to_dict(), "pair": _chars_dict(p)}
                 for p in pairs[:MAX_REPORTED_WITNESSES]] if detected else []
    return CaseResult("V4_nonhyperelliptic", detected, witnesses,
                      len(pairs) if detected else 0,
                      note=f"{len(deep)} half-periods vanish to order >= 2")


def _case_c3(cache: ThetaNullCache) -> CaseResult:
    sixths = _vanishing_of_order(cache, 6, 6)
    buckets: dict[Characteristic, list[Characteristic]] = {}
    for f in sixths:
        buckets.setdefault(3 * f, []).append(f)
    search = _Search()
    for bucket in buckets.values():
        for f1, f2 in itertools.combinations(bucket, 2):
            if not search.spend():
                return search.result("C3")
            k, n = pairing_exponent(2 * f1, f1 + f2)
            if n == 1 or k % n == 0:
                continue
            # Order the pair so the reported commutator exponent is 1.
            search.add(_chars_dict((f1, f2) if k % n == 1 else (f2, f1)))
    return search.result("C3")


def _case_c2_cubed(cache: ThetaNullCache) -> CaseResult:
    deep = _order2_half_periods(cache)
    search = _Search()
    if len(deep) == 1:
        quarters = _vanishing_of_order(cache, 4, 4)
        simple = [f for f in quarters if cache.vanishing_order(f) == 1]
        for bucket in _by_double(simple).values():
            for triple in itertools.combinations(bucket, 3):
                if not search.spend():
                    break
                search.add({"half_period": deep[0].to_dict(),
                            "triple": _chars_dict(triple)})
    return search.result("C2^3", necessary_only=True,
                         note="necessary condition only; the source states one direction")


@dataclass(frozen=True)
class _CodedPair:
    """Azygetic quarter pair with the packed codes of its derived half-periods."""

    f1: Characteristic
    f2: Characteristic
    double: int  # code of 2*f1 = 2*f2
    cross: int   # code of f1 + f2


def _pair_data(cache: ThetaNullCache) -> dict[int, list[_CodedPair]]:
    """Azygetic quarter pairs grouped by the code of their common double."""
    quarters = _vanishing_of_order(cache, 4, 4)
    out: dict[int, list[_CodedPair]] = {}
    for double, bucket in _by_double(quarters).items():
        u_code = char_code(double, 2)
        coded = [_CodedPair(f1, f2, u_code, char_code(f1 + f2, 2))
                 for f1, f2 in _azygetic_pairs(bucket)]
        if coded:
            out[u_code] = coded
    return out


def _case_type_pairs(cache: ThetaNullCache, case: str, target: tuple[int, int]) -> CaseResult:
    pair_map = _pair_data(cache)
    search = _Search()
    for u, v in itertools.combinations(sorted(pair_map), 2):
        for p in pair_map[u]:
            for q in pair_map[v]:
                if not search.spend():
                    return search.result(case)
                t = group_type_from_codes((p.double, p.cross, q.double, q.cross), 3)
                if t.rank == 4 and t.as_pair() == target:
                    search.add({"quadruple": _chars_dict([p.f1, p.f2, q.f1, q.f2]),
                                "type": list(target)})
    return search.result(case)


def _case_s4(cache: ThetaNullCache) -> CaseResult:
    pair_map = _pair_data(cache)
    quarters = _vanishing_of_order(cache, 4, 4)
    buckets = _by_double(quarters)
    search = _Search()
    for u, f_pairs in sorted(pair_map.items()):
        for v, bucket in buckets.items():
            v_code = char_code(v, 2)
            if v_code == u or len(bucket) < 3:
                continue
            for h1 in bucket:
                h1_cross = [(h, char_code(h1 + h, 2)) for h in bucket
                            if h != h1 and h != -h1 and pairing(2 * h1, h1 + h) == 1]
                for (h2, c2), (h3, c3) in itertools.permutations(h1_cross, 2):
                    for p in f_pairs:
                        if not search.spend(2):
                            return search.result("S4")
                        base = (p.double, p.cross, v_code)
                        t_21 = group_type_from_codes(base + (c2,), 3)
                        if not (t_21.rank == 4 and t_21.as_pair() == (2, 1)):
                            continue
                        t_02 = group_type_from_codes(base + (c3,), 3)
                        if t_02.rank == 4 and t_02.as_pair() == (0, 2):
                            search.add({"pair": _chars_dict([p.f1, p.f2]),
                                        "triple": _chars_dict([h1, h2, h3])})
    return search.result("S4")


def _case_rank6(cache: ThetaNullCache, case: str, m_target: tuple[int, int]) -> CaseResult:
    pair_map = _pair_data(cache)
    doubles = sorted(pair_map)
    search = _Search()
    for trio in itertools.combinations(doubles, 3):
        for c_idx in range(3):
            w = trio[c_idx]
            u, v = (trio[i] for i in range(3) if i != c_idx)
            for p in pair_map[u]:
                for q in pair_map[v]:
                    if not search.spend():
                        return search.result(case)
                    h_gens = (p.double, p.cross, q.double, q.cross)
                    t = group_type_from_codes(h_gens, 3)
                    if not (t.rank == 4 and t.as_pair() == (2, 1)):
                        continue
                    partners = [y for y in close_codes(h_gens)
                                if all(code_pairing(x, y, 3) == 1 for x in h_gens)]
                    if len(partners) < 2:
                        continue
                    for r in pair_map[w]:
                        if not search.spend(4):
                            return search.result(case)
                        six = h_gens + (r.double, r.cross)
                        if group_type_from_codes(six, 3).rank != 6:
                            continue
                        ok = True
                        for y, z in itertools.combinations(partners, 2):
                            m = group_type_from_codes((y, z, r.double, r.cross), 3)
                            if m.as_pair() != m_target:
                                ok = False
                                break
                        if ok:
                            search.add(
                                {"sextuple": _chars_dict([p.f1, p.f2, q.f1, q.f2, r.f1, r.f2]),
                                 "partners": [char_from_code(3, 2, y).to_dict()
                                              for y in sorted(partners)]})
    return search.result(case)


def detect_case(tau: RiemannMatrix, case: str, cfg: EvalConfig = DEFAULT_CONFIG,
                thresholds: VanishThresholds = VanishThresholds(),
                cache: ThetaNullCache | None = None) -> CaseResult:
    """Run one detection case; see CASE_IDS for the supported names."""
    cache = cache or ThetaNullCache(tau, cfg, thresholds)
    dispatch = {
        "C2": _case_c2,
        "V4_hyperelliptic": _case_v4_hyperelliptic,
        "V4_nonhyperelliptic": _case_v4_nonhyperelliptic,
        "C3": _case_c3,
        "C2^3": _case_c2_cubed,
        "S3": lambda c: _case_type_pairs(c, "S3", (0, 2)),
        "D4": lambda c: _case_type_pairs(c, "D4", (2, 1)),
        "S4": _case_s4,
        "C4^2:S3": lambda c: _case_rank6(c, "C4^2:S3", (2, 1)),
        "L3(2)": lambda c: _case_rank6(c, "L3(2)", (0, 2)),
    }
    if case not in dispatch:
        raise ValueError(f"unknown detection case {case!r}; expected one of {CASE_IDS}")
    return dispatch[case](cache)


@dataclass
class DetectionReport:
    genus: int
    hyperelliptic: bool
    even_vanishing_count: int
    cases: dict[str, CaseResult]
    thresholds: VanishThresholds
    prop_c2_detected: bool
    prop_c2_witnesses: list
    consistency_violations: list[str]

    @property
    def consistent(self) -> bool:
        return not self.consistency_violations

    def detected_cases(self) -> list[str]:
        return [case for case in CASE_IDS if self.cases[case].detected]

    def to_dict(self) -> dict:
        return {"genus": self.genus,
                "hyperelliptic": self.hyperelliptic,
                "even_vanishing_count": self.even_vanishing_count,
                "thresholds": {"value_rel": self.thresholds.value_rel,
                               "gradient_rel": self.thresholds.gradient_rel},
                "cases": {case: self.cases[case].to_dict() for case in CASE_IDS},
                "prop_c2": {"detected": self.prop_c2_detected,
                            "witnesses": self.prop_c2_witnesses},
                "detected": self.detected_cases(),
                "consistent": self.consistent,
                "consistency_violations": list(self.consistency_violations)}


def detect_all(tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
               thresholds: VanishThresholds = VanishThresholds()) -> DetectionReport:
    """Run every detection case and the report-level consistency checks.

    The hyperelliptic/non-hyperelliptic dichotomy is decided by the even
    half-integer vanishing census (exactly one vanisher means the curve
    is hyperelliptic); both V4 variants are evaluated but only the
    applicable one participates in the summary.
    """
    cache = ThetaNullCache(tau, cfg, thresholds)
    even_vanishers = [char_from_code(3, 2, code) for code in range(64)
                      if is_even(char_from_code(3, 2, code))
                      and cache.is_null(char_from_code(3, 2, code))]
    cases = {case: detect_case(tau, case, cfg, thresholds, cache) for case in CASE_IDS}
    prop_witnesses = prop_c2_witnesses(tau, cfg, thresholds, cache)
    violations = []
    for case, subordinates in IMPLICATIONS.items():
        if cases[case].detected:
            for sub in subordinates:
                if not cases[sub].detected:
                    violations.append(f"{case} detected without {sub}")
    return DetectionReport(
        genus=3,
        hyperelliptic=len(even_vanishers) == 1,
        even_vanishing_count=len(even_vanishers),
        cases=cases,
        thresholds=thresholds,
        prop_c2_detected=bool(prop_witnesses),
        prop_c2_witnesses=[w.to_dict() for w in prop_witnesses[:MAX_REPORTED_WITNESSES]],
        consistency_violations=violations,
    )
