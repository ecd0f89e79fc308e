"""Branch-point machinery for hyperelliptic curves y^2 = prod(x - alpha_i).

The curve has 2g+1 finite branch points alpha_1 < ... < alpha_{2g+1}
(infinity is the implicit last one).  The characteristic map eps sends
branch indices to half-integer characteristics; subsets T of the index
set map to eps_T = sum of eps(k), and the classical criterion says the
theta-null of eps_T (|T| even) vanishes exactly when #(T sym-diff U)
differs from g+1, U being the odd indices.

Periods are computed for real sorted branch points only.  Cuts are laid
along [alpha_1, alpha_2], [alpha_3, alpha_4], ..., [alpha_{2g+1}, inf);
the A_k cycle encircles the k-th cut and the B_k cycle runs from the
k-th cut to the last one.  On the real axis approached from above, the
phase of y = sqrt(prod(x - alpha_i)) on the gap (alpha_j, alpha_{j+1})
is i^(j - (2g+1)) times the positive square root of |prod|, which turns
every period integral into a real Gauss-Chebyshev integral times an
exact power of i.  The genus-3 vanishing pattern (exactly one even
theta-null, at eps_U) doubles as the convention detector for this
homology choice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .characteristics import (Characteristic, char_code, enumerate_chars, half_char,
                              is_even, parity, zero_char)
from .errors import BranchPointError, GenusMismatchError, MatrixValidationError, QuadratureError
from .theta import (DEFAULT_CONFIG, EvalConfig, RiemannMatrix, VanishThresholds,
                    max_even_null, theta_null, theta_null_table, theta_raw,
                    validate_period_matrix)

INFINITY = math.inf
SEPARATION_REL = 1e-9
QUADRATURE_REL = 1e-11
QUADRATURE_MAX_NODES = 2 ** 14


@dataclass(frozen=True)
class BranchSet:
    """2g+1 distinct branch points; index set S = {1, ..., 2g+1}."""

    genus: int
    points: tuple[complex, ...]

    @property
    def index_set(self) -> frozenset[int]:
        return frozenset(range(1, 2 * self.genus + 2))

    def is_real_sorted(self) -> bool:
        vals = np.asarray(self.points)
        return bool(np.all(vals.imag == 0) and np.all(np.diff(vals.real) > 0))

    def point(self, i: int) -> complex:
        return self.points[i - 1]

    def to_dict(self) -> dict:
        if self.is_real_sorted():
            return {"genus": self.genus, "branch_points": [float(p.real) for p in self.points]}
        return {"genus": self.genus,
                "branch_points": [{"re": float(p.real), "im": float(p.imag)} for p in self.points]}


def branch_set(points) -> BranchSet:
    pts = [complex(p) if not isinstance(p, dict) else complex(p["re"], p.get("im", 0.0))
           for p in points]
    if len(pts) < 3 or len(pts) % 2 == 0:
        raise BranchPointError(f"need an odd number 2g+1 >= 3 of branch points, got {len(pts)}")
    genus = (len(pts) - 1) // 2
    scale = max(abs(p) for p in pts) or 1.0
    for p, q in itertools.combinations(pts, 2):
        if abs(p - q) <= SEPARATION_REL * scale:
            raise BranchPointError(f"branch points {p} and {q} are closer than {SEPARATION_REL} * scale")
    return BranchSet(genus, tuple(pts))


def branch_set_from_dict(data: dict) -> BranchSet:
    bs = branch_set(data["branch_points"])
    if "genus" in data and int(data["genus"]) != bs.genus:
        raise BranchPointError(f"declared genus {data['genus']} does not match {len(bs.points)} branch points")
    return bs


# ---------------------------------------------------------------------------
# The eps characteristic map and the vanishing criterion.
# ---------------------------------------------------------------------------

def epsilon_map(i, genus: int) -> Characteristic:
    """Half-characteristic of branch point i (1 <= i <= 2g+1, or infinity).

    Index 2k-1 carries top row e_k and bottom row e_1 + ... + e_{k-1};
    index 2k carries top row e_k and bottom row e_1 + ... + e_k.  The
    last odd index 2g+1 has an empty top row (its half lands outside the
    g columns) and bottom row all ones; infinity maps to zero.
    """
    if i == INFINITY:
        return zero_char(genus)
    i = int(i)
    if not 1 <= i <= 2 * genus + 1:
        raise ValueError(f"branch index {i} outside 1..{2 * genus + 1}")
    top = [0] * genus
    bottom = [0] * genus
    if i % 2:
        k = (i + 1) // 2
        if k <= genus:
            top[k - 1] = 1
        bottom[: k - 1] = [1] * (k - 1)
    else:
        k = i // 2
        top[k - 1] = 1
        bottom[:k] = [1] * k
    return half_char(genus, tuple(top), tuple(bottom))


def epsilon_T(T, genus: int) -> Characteristic:
    """Sum of eps(k) over k in T, as a half-integer characteristic."""
    total = zero_char(genus)
    for k in T:
        total = total + epsilon_map(k, genus)
    return total


def odd_index_set(genus: int) -> frozenset[int]:
    return frozenset(range(1, 2 * genus + 2, 2))


def is_vanishing(T, genus: int) -> bool:
    """Vanishing criterion for theta[eps_T] with |T| even: #(T sym U) != g+1."""
    T = frozenset(T)
    if len(T) % 2:
        raise ValueError(f"subset must have even cardinality, got {sorted(T)}")
    if not T <= frozenset(range(1, 2 * genus + 2)):
        raise ValueError("subset contains indices outside the branch index set")
    return len(T ^ odd_index_set(genus)) != genus + 1


def vanishing_table(genus: int) -> list[tuple[Characteristic, bool]]:
    """(even half-characteristic, predicted vanishing) over all even-parity classes.

    Subsets of even cardinality biject onto all 2^(2g) half-integer
    characteristics; the table keeps the even-parity rows, each exactly
    once, ordered by characteristic code.
    """
    if genus > 4:
        raise ValueError("vanishing table is guarded to genus <= 4")
    indices = range(1, 2 * genus + 2)
    rows = {}
    for size in range(0, 2 * genus + 2, 2):
        for T in itertools.combinations(indices, size):
            c = epsilon_T(T, genus)
            if parity(c) == 1:
                code = char_code(c, 2)
                if code in rows:
                    raise AssertionError("subset correspondence failed to be injective")
                rows[code] = (c, is_vanishing(T, genus))
    return [rows[code] for code in sorted(rows)]


# ---------------------------------------------------------------------------
# Period matrices for real sorted branch points.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveData:
    """Branch points together with the computed periods and tau."""

    branch: BranchSet
    tau: RiemannMatrix
    a_periods: np.ndarray  # (power, cycle): integral of x^m dx/y over A_k
    b_periods: np.ndarray

    def __post_init__(self):
        self.a_periods.setflags(write=False)
        self.b_periods.setflags(write=False)


def _gap_integrals(points: np.ndarray, genus: int) -> np.ndarray:
    """I[j, m] = integral over (alpha_j, alpha_{j+1}) of x^m |f(x)|^(-1/2) dx.

    The endpoint inverse square roots are absorbed by mapping the gap to
    [-1, 1] and using Gauss-Chebyshev nodes, doubling the node count
    until successive estimates agree to QUADRATURE_REL.
    """
    n_gaps = len(points) - 1
    out = np.empty((n_gaps, genus), dtype=float)
    for j in range(n_gaps):
        lo, hi = points[j], points[j + 1]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        others = np.delete(points, [j, j + 1])
        prev = None
        nodes = 64
        while nodes <= QUADRATURE_MAX_NODES:
            t = np.cos((2 * np.arange(1, nodes + 1) - 1) * math.pi / (2 * nodes))
            x = mid + half * t
            # dx / sqrt((x-lo)(hi-x)) = dt / sqrt(1-t^2): only the other
            # roots' product is left under the square root.
            weight = 1.0 / np.sqrt(np.abs(np.prod(x[:, None] - others[None, :], axis=1)))
            est = np.array([(x ** m * weight).sum() * math.pi / nodes for m in range(genus)])
            if prev is not None:
                err = np.abs(est - prev).max()
                if err <= QUADRATURE_REL * max(1.0, float(np.abs(est).max())):
                    out[j] = est
                    break
            prev = est
            nodes *= 2
        else:
            raise QuadratureError(
                f"gap ({lo}, {hi}) did not converge within {QUADRATURE_MAX_NODES} nodes")
    return out


def period_matrix(branch: BranchSet, cfg: EvalConfig = DEFAULT_CONFIG) -> CurveData:
    """Periods and tau for a real sorted branch set.

    Raises unless the branch points are real and strictly increasing and
    the resulting tau passes Siegel validation (a failure there signals
    a homology-convention bug or a nearly degenerate curve, not a
    tolerance issue).
    """
    if not branch.is_real_sorted():
        raise BranchPointError("period computation needs real, strictly increasing branch points")
    g = branch.genus
    points = np.array([p.real for p in branch.points], dtype=float)
    gaps = _gap_integrals(points, g)  # (2g gaps, g powers)
    n = 2 * g + 1
    # Continuous branch of 1/y just above the real axis: on gap j the
    # phase of 1/y is i^(j - n); A_k doubles gap 2k-1, B_k doubles the
    # run of gaps 2k .. 2g.
    a_periods = np.empty((g, g), dtype=complex)
    b_periods = np.empty((g, g), dtype=complex)
    for k in range(1, g + 1):
        a_periods[:, k - 1] = 2.0 * 1j ** ((2 * k - 1) - n) * gaps[2 * k - 2]
        acc = np.zeros(g, dtype=complex)
        for j in range(2 * k, 2 * g + 1):
            acc += 1j ** (j - n) * gaps[j - 1]
        b_periods[:, k - 1] = 2.0 * acc
    tau_raw = np.linalg.solve(a_periods, b_periods).T
    # The straight-run B paths mutually intersect once per nested pair, so
    # tau_raw - tau_raw^T is an exact integer matrix.  Subtracting A-cycles
    # (B_i -> B_i - sum_{j>i} n_ij A_j) restores a symplectic basis; on the
    # normalised periods that is an integer shift of the upper triangle.
    asym = tau_raw - tau_raw.T
    shift = np.round(asym.real)
    if np.abs(asym - shift).max() > 1e-9:
        raise MatrixValidationError(
            f"period asymmetry {np.abs(asym - shift).max():.3e} is not an integer cycle defect")
    correction = -np.triu(shift, 1)
    tau = validate_period_matrix(tau_raw + correction, symmetry_tol=1e-9)
    b_periods = b_periods + a_periods @ correction.T
    return CurveData(branch, tau, a_periods, b_periods)


def curve_vanishing_report(curve: CurveData, cfg: EvalConfig = DEFAULT_CONFIG,
                           thresholds: VanishThresholds = VanishThresholds()) -> dict:
    """Compare the predicted even theta-null vanishing pattern with numerics."""
    g = curve.branch.genus
    table = theta_null_table(g, 2, curve.tau, cfg)
    scale = max(abs(table[char_code(c, 2)]) for c in enumerate_chars(g, 2) if is_even(c))
    rows = []
    agree = True
    for c, predicted in vanishing_table(g):
        observed = abs(table[char_code(c, 2)]) < thresholds.value_rel * scale
        agree &= observed == predicted
        rows.append({"characteristic": c.to_dict(), "predicted_vanishing": predicted,
                     "observed_vanishing": observed,
                     "modulus": float(abs(table[char_code(c, 2)]))})
    return {"genus": g, "rows": rows, "max_even_null": float(scale),
            "threshold_rel": thresholds.value_rel, "pass": bool(agree)}


# ---------------------------------------------------------------------------
# Thomae ratios and the Frobenius four-factor identity.
# ---------------------------------------------------------------------------

def _check_thomae_subset(T, genus: int):
    T = frozenset(int(k) for k in T)
    if len(T) % 2:
        raise ValueError(f"Thomae subsets must have even cardinality, got {sorted(T)}")
    if not T <= frozenset(range(1, 2 * genus + 2)):
        raise ValueError("Thomae subsets must lie in the finite branch index set")
    if is_vanishing(T, genus):
        raise ValueError(f"subset {sorted(T)} corresponds to a vanishing theta-null")
    return T


def thomae_product(T, branch: BranchSet) -> complex:
    """Branch-point double product: pairs inside T sym U times pairs outside."""
    g = branch.genus
    V = frozenset(T) ^ odd_index_set(g)
    inside = [branch.point(i) for i in sorted(V)]
    outside = [branch.point(i) for i in sorted(branch.index_set - V)]
    prod = 1.0 + 0.0j
    for group in (inside, outside):
        for a, b in itertools.combinations(group, 2):
            prod *= a - b
    return prod


def thomae_ratio(T1, T2, branch: BranchSet) -> complex:
    """Predicted ratio theta[eps_T1]^4 / theta[eps_T2]^4 from branch points.

    Both subsets must be non-vanishing even classes.  The curve constant
    cancels, leaving the ratio of the two double products; the sign of
    each product is kept, no normalisation is applied.
    """
    g = branch.genus
    T1 = _check_thomae_subset(T1, g)
    T2 = _check_thomae_subset(T2, g)
    if T1 == T2:
        return 1.0 + 0.0j
    return thomae_product(T1, branch) / thomae_product(T2, branch)


def admissible_thomae_subsets(genus: int) -> list[frozenset[int]]:
    """All even-cardinality subsets with non-vanishing theta-null, sorted."""
    U = odd_index_set(genus)
    subsets = [frozenset(V) ^ U for V in
               itertools.combinations(range(1, 2 * genus + 2), genus + 1)]
    return sorted(subsets, key=lambda T: tuple(sorted(T)))


def verify_thomae(branch: BranchSet, samples: int, seed: int = 0,
                  cfg: EvalConfig = DEFAULT_CONFIG,
                  curve: CurveData | None = None) -> dict:
    """Compare fourth-power theta-null ratios against Thomae products.

    Draws `samples` random admissible subset pairs and reports the worst
    relative error between theta[eps_T1]^4 / theta[eps_T2]^4 and the
    branch-point ratio.
    """
    if curve is None:
        curve = period_matrix(branch, cfg)
    rng = np.random.default_rng(seed)
    pool = admissible_thomae_subsets(branch.genus)
    nulls: dict = {}

    def null4(T):
        key = tuple(sorted(T))
        if key not in nulls:
            nulls[key] = theta_null(epsilon_T(T, branch.genus), curve.tau, cfg) ** 4
        return nulls[key]

    worst = 0.0
    worst_pair = None
    results = []
    for _ in range(samples):
        i, j = rng.choice(len(pool), size=2, replace=False)
        T1, T2 = pool[i], pool[j]
        predicted = thomae_ratio(T1, T2, branch)
        observed = null4(T1) / null4(T2)
        err = abs(observed - predicted) / max(abs(predicted), 1e-300)
        results.append(err)
        if err > worst:
            worst = err
            worst_pair = (sorted(T1), sorted(T2))
    return {"samples": samples, "seed": seed, "max_rel_err": float(worst),
            "worst_case": worst_pair, "genus": branch.genus}


def frobenius_sum(b_chars, z_args, curve: CurveData,
                  cfg: EvalConfig = DEFAULT_CONFIG) -> complex:
    """Residual of the four-factor branch-point theta identity.

    For four characteristics with exact sum zero and four arguments with
    exact sum zero, returns sum over j in S united with infinity of
    sign(j) * prod_i theta[b_i + eps(j)](z_i), where sign(j) is +1 on
    odd indices and -1 otherwise.  The sum vanishes on hyperelliptic
    period matrices; the returned value is the numerical residual.

    The four factors only cancel for representatives whose exact sum is
    zero, so the first three characteristics are taken with rows in
    [0, 1) and the fourth representative is rebuilt as minus their sum
    (the passed fourth must reduce to the same class).
    """
    g = curve.branch.genus
    if len(b_chars) != 4 or len(z_args) != 4:
        raise ValueError("need exactly four characteristics and four arguments")
    rows = []
    for c in b_chars:
        if c.genus != g:
            raise GenusMismatchError(f"characteristic genus {c.genus} does not match curve genus {g}")
        rows.append((np.array(c.top, float) / c.denom, np.array(c.bottom, float) / c.denom))
    tops = np.array([r[0] for r in rows])
    bottoms = np.array([r[1] for r in rows])
    exact_top4 = -(tops[0] + tops[1] + tops[2])
    exact_bottom4 = -(bottoms[0] + bottoms[1] + bottoms[2])
    top_dev = exact_top4 - tops[3]
    bottom_dev = exact_bottom4 - bottoms[3]
    if (np.abs(top_dev - np.round(top_dev)).max() > 1e-12
            or np.abs(bottom_dev - np.round(bottom_dev)).max() > 1e-12):
        raise ValueError("characteristic quadruple must sum to zero")
    tops[3], bottoms[3] = exact_top4, exact_bottom4
    zs = [np.atleast_1d(np.asarray(z, dtype=complex)) for z in z_args]
    if np.abs(sum(zs)).max() > 1e-12:
        raise ValueError("arguments must sum to zero")
    U = odd_index_set(g)
    total = 0.0 + 0.0j
    for j in list(range(1, 2 * g + 2)) + [INFINITY]:
        eps = epsilon_map(j, g)
        et = np.array(eps.numerators(2)[0], float) / 2
        eb = np.array(eps.numerators(2)[1], float) / 2
        sign = 1.0 if (j != INFINITY and j in U) else -1.0
        prod = 1.0 + 0.0j
        for i in range(4):
            prod *= theta_raw(tops[i] + et, bottoms[i] + eb, zs[i], curve.tau, cfg)
        total += sign * prod
    return complex(total)


def verify_frobenius(curve: CurveData, samples: int, seed: int = 0,
                     cfg: EvalConfig = DEFAULT_CONFIG, with_z: bool = False) -> dict:
    """Max |frobenius_sum| over random admissible half-integer quadruples."""
    g = curve.branch.genus
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_case = None
    for _ in range(samples):
        picks = [rng.integers(0, 4 ** g) for _ in range(3)]
        chars = [Characteristic(g, 2,
                                tuple(int(d) for d in np.base_repr(code, 2).zfill(2 * g)[:g]),
                                tuple(int(d) for d in np.base_repr(code, 2).zfill(2 * g)[g:]))
                 for code in picks]
        fourth = -(chars[0] + chars[1] + chars[2])
        chars.append(fourth)
        if with_z:
            zs = [0.4 * (rng.standard_normal(g) + 1j * rng.standard_normal(g)) for _ in range(3)]
            zs.append(-(zs[0] + zs[1] + zs[2]))
        else:
            zs = [np.zeros(g)] * 4
        residual = abs(frobenius_sum(chars, zs, curve, cfg))
        if residual > worst:
            worst = residual
            worst_case = [c.to_dict() for c in chars]
    return {"samples": samples, "seed": seed, "with_z": with_z,
            "max_residual": float(worst), "worst_case": worst_case}
