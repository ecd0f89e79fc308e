"""Numerical Riemann theta functions with rational characteristics.

theta[a; b](z, tau) is evaluated as the shifted lattice sum

    sum_{u in Z^g} exp(pi*i*((u+a)^T tau (u+a) + 2 (u+a)^T (z+b)))

truncated to an integer box.  The box is centred on the minimiser of the
Gaussian weight, u0 = round(-a - Y^{-1} Im z) with Y = Im tau, and its
radius R is chosen so that the analytic tail bound

    S * sum_{k>R} 2g (2k+1)^(g-1) exp(-pi*lambda_min*(k - d)^2) <= tol

holds, where lambda_min is the smallest eigenvalue of Y, d the distance
from the box centre to the true centre, and S = exp(pi y^T Y^{-1} y)
the magnitude scale introduced by Im z = y.  The bound uses the shell
count (2k+1)^g - (2k-1)^g <= 2g(2k+1)^(g-1), so the reported values are
good to the configured absolute tolerance whenever R stays below the
radius cap; a cap overflow signals a near-degenerate Im tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characteristics import Characteristic, char_from_code, enumerate_chars, is_even
from .errors import GenusMismatchError, MatrixValidationError, RadiusOverflowError

TOL_FLOOR = 1e-13
DEFAULT_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class EvalConfig:
    """Absolute tail-bound target and the lattice radius cap."""

    tol: float = 1e-12
    radius_cap: int = 60

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tol < TOL_FLOOR:
            raise ValueError(f"tol below the double-precision floor {TOL_FLOOR}")
        if self.radius_cap < 1:
            raise ValueError("radius_cap must be at least 1")


DEFAULT_CONFIG = EvalConfig()


@dataclass(frozen=True)
class RiemannMatrix:
    """Validated point of the Siegel upper-half space (symmetric, Im > 0)."""

    genus: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def imag_min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries.imag)[0])

    def to_dict(self) -> dict:
        return {"genus": self.genus,
                "entries": [[{"re": float(v.real), "im": float(v.imag)} for v in row]
                            for row in self.entries]}

    def __eq__(self, other):
        return isinstance(other, RiemannMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


def validate_period_matrix(raw, symmetry_tol: float = DEFAULT_SYMMETRY_TOL) -> RiemannMatrix:
    """Check symmetry and positive-definite imaginary part, or raise.

    Asymmetry beyond `symmetry_tol` (relative to the matrix scale) is an
    error, never silently fixed; below it the symmetric average is stored
    so downstream Cholesky factorisations are exact.
    """
    m = np.asarray(raw, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MatrixValidationError(f"period matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixValidationError("period matrix has non-finite entries")
    g = m.shape[0]
    scale = max(1.0, float(np.abs(m).max()))
    asym = float(np.abs(m - m.T).max())
    if asym > symmetry_tol * scale:
        raise MatrixValidationError(f"period matrix is not symmetric: max asymmetry {asym:.3e}")
    m = (m + m.T) / 2
    try:
        np.linalg.cholesky(m.imag)
    except np.linalg.LinAlgError:
        raise MatrixValidationError("imaginary part of the period matrix is not positive definite") from None
    return RiemannMatrix(g, m)


def matrix_from_dict(data: dict) -> RiemannMatrix:
    entries = [[complex(cell["re"], cell["im"]) for cell in row] for row in data["entries"]]
    tau = validate_period_matrix(entries)
    if "genus" in data and int(data["genus"]) != tau.genus:
        raise MatrixValidationError(f"declared genus {data['genus']} does not match matrix size {tau.genus}")
    return tau


def random_siegel(genus: int, rng: np.random.Generator, real_scale: float = 0.2) -> RiemannMatrix:
    """Random Siegel point i*(M M^T / g + I) plus a small real symmetric part.

    Dividing the Wishart factor by g keeps Im tau eigenvalues of order
    one, i.e. reasonably reduced: no reduction to a fundamental domain
    happens anywhere in the package, and badly scaled imaginary parts
    push honest theta-nulls below any relative vanishing threshold.
    """
    m = rng.standard_normal((genus, genus))
    real = real_scale * rng.standard_normal((genus, genus))
    tau = (real + real.T) / 2 + 1j * (m @ m.T / genus + np.eye(genus))
    return validate_period_matrix(tau)


def _check_argument(z, genus: int) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(z, dtype=complex))
    if vec.shape != (genus,):
        raise GenusMismatchError(f"theta argument must have length {genus}, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("theta argument has non-finite entries")
    return vec


def _tail_radius(lam_min: float, genus: int, tol: float, offset: float,
                 log_scale: float, cap: int) -> int:
    """Smallest box radius whose analytic tail bound is below tol."""
    c = math.pi * lam_min

    def log_tail_term(k: int) -> float:
        return (math.log(2 * genus) + (genus - 1) * math.log(2 * k + 1)
                - c * (k - offset) ** 2 + log_scale)

    guess = math.sqrt(max(math.log(max(2 * genus * 3 ** genus, 2)) - math.log(tol) + log_scale, 1.0) / c)
    radius = max(1, min(cap, math.ceil(guess + offset)))
    log_tol = math.log(tol)
    while radius <= cap:
        # Certified tail: sum shell bounds until the remainder is provably
        # dominated by a geometric series with ratio < 1/2.
        total = 0.0
        k = radius + 1
        ok = False
        while k < radius + 400:
            term = math.exp(min(log_tail_term(k), 700.0))
            total += term
            ratio = 3 ** (genus - 1) * math.exp(-c * (2 * (k - offset) + 1))
            if k > offset and ratio < 0.5:
                total += term * ratio / (1 - ratio)
                ok = True
                break
            k += 1
        if ok and total <= tol:
            return radius
        radius += 1
    raise RadiusOverflowError(
        f"lattice radius beyond cap {cap} needed for tol {tol:g} (lambda_min = {lam_min:.3e})")


def _lattice(center: np.ndarray, radius: int) -> np.ndarray:
    g = center.shape[0]
    axes = [np.arange(c - radius, c + radius + 1) for c in center]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([ax.ravel() for ax in grid], axis=1).astype(float)


def _sum_setup(a: np.ndarray, z: np.ndarray, tau: RiemannMatrix, cfg: EvalConfig,
               extra_radius: int) -> np.ndarray:
    y = z.imag
    im = tau.entries.imag
    lam_min = float(np.linalg.eigvalsh(im)[0])
    if lam_min <= 0:
        raise MatrixValidationError("imaginary part of tau is not positive definite")
    shift = np.linalg.solve(im, y)
    center_real = -a - shift
    center = np.round(center_real).astype(int)
    offset = float(np.linalg.norm(center - center_real))
    log_scale = float(math.pi * y @ shift)
    radius = _tail_radius(lam_min, tau.genus, cfg.tol, offset + 1e-9, log_scale, cfg.radius_cap)
    return _lattice(center, radius + extra_radius)


def theta_raw(a, b, z, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
              extra_radius: int = 0) -> complex:
    """Shifted-sum theta for arbitrary real characteristic rows a, b.

    No reduction is applied to a or b, so callers relying on the exact
    quasi-periodicity phases (e.g. four-term product identities) can pass
    unreduced rational vectors.  `extra_radius` enlarges the certified
    box; it exists so truncation-stability checks can force a larger sum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = _check_argument(z, tau.genus)
    pts = _sum_setup(a, z, tau, cfg, extra_radius)
    w = pts + a
    quad = np.einsum("ij,jk,ik->i", w, tau.entries, w)
    lin = 2.0 * (w @ (z + b))
    return complex(np.exp(1j * math.pi * (quad + lin)).sum())


def theta_gradient_raw(a, b, z, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
                       extra_radius: int = 0) -> np.ndarray:
    """z-gradient of theta_raw, differentiated term by term."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = _check_argument(z, tau.genus)
    pts = _sum_setup(a, z, tau, cfg, extra_radius)
    w = pts + a
    quad = np.einsum("ij,jk,ik->i", w, tau.entries, w)
    lin = 2.0 * (w @ (z + b))
    terms = np.exp(1j * math.pi * (quad + lin))
    return 2j * math.pi * (terms @ w)


def _char_rows(c: Characteristic, tau: RiemannMatrix) -> tuple[np.ndarray, np.ndarray]:
    if c.genus != tau.genus:
        raise GenusMismatchError(f"characteristic genus {c.genus} does not match tau genus {tau.genus}")
    return (np.array(c.top, dtype=float) / c.denom,
            np.array(c.bottom, dtype=float) / c.denom)


def theta_base(z, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
               extra_radius: int = 0) -> complex:
    """Riemann theta, i.e. the zero characteristic."""
    g = tau.genus
    return theta_raw(np.zeros(g), np.zeros(g), z, tau, cfg, extra_radius)


def theta_char(c: Characteristic, z, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG,
               extra_radius: int = 0) -> complex:
    a, b = _char_rows(c, tau)
    return theta_raw(a, b, z, tau, cfg, extra_radius)


def theta_char_factor_form(c: Characteristic, z, tau: RiemannMatrix,
                           cfg: EvalConfig = DEFAULT_CONFIG) -> complex:
    """Exponential-factor form exp(pi*i*(a^T tau a + 2 a^T(z+b))) * theta(z + tau a + b).

    Mathematically equal to theta_char; kept as an independent route for
    cross-checking the shifted-sum implementation.
    """
    a, b = _char_rows(c, tau)
    z = _check_argument(z, tau.genus)
    factor = np.exp(1j * math.pi * (a @ tau.entries @ a + 2.0 * a @ (z + b)))
    return complex(factor * theta_base(z + tau.entries @ a + b, tau, cfg))


def theta_null(c: Characteristic, tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG) -> complex:
    return theta_char(c, np.zeros(tau.genus), tau, cfg)


def theta_gradient(c: Characteristic, z, tau: RiemannMatrix,
                   cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    a, b = _char_rows(c, tau)
    return theta_gradient_raw(a, b, z, tau, cfg)


def theta_null_table(genus: int, denom: int, tau: RiemannMatrix,
                     cfg: EvalConfig = DEFAULT_CONFIG, workers: int = 1) -> np.ndarray:
    """Theta-nulls of every denominator-`denom` characteristic, in code order.

    The table index is the canonical characteristic code (top row then
    bottom row as base-`denom` digits).  Evaluation is batched: for each
    top row the quadratic phases over the lattice are computed once and
    all bottom rows are applied through a single complex matrix product.
    Top-row blocks are independent, so `workers` > 1 fills them from a
    thread pool without changing any value.
    """
    if tau.genus != genus:
        raise GenusMismatchError(f"tau genus {tau.genus} does not match requested genus {genus}")
    im = tau.entries.imag
    lam_min = float(np.linalg.eigvalsh(im)[0])
    radius = _tail_radius(lam_min, genus, cfg.tol, math.sqrt(genus) + 1e-9, 0.0, cfg.radius_cap)
    n_rows = denom ** genus
    digits = np.array([[ (code // denom ** (genus - 1 - i)) % denom for i in range(genus)]
                       for code in range(n_rows)], dtype=float)
    bottoms = digits / denom
    table = np.empty(n_rows * n_rows, dtype=complex)
    base = _lattice(np.zeros(genus, dtype=int), radius)

    def fill(a_code: int):
        a = digits[a_code] / denom
        w = base + np.round(-a) + a
        quad = np.exp(1j * math.pi * np.einsum("ij,jk,ik->i", w, tau.entries, w))
        phases = np.exp(2j * math.pi * (w @ bottoms.T))
        table[a_code * n_rows:(a_code + 1) * n_rows] = quad @ phases

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_rows)))
    else:
        for a_code in range(n_rows):
            fill(a_code)
    return table


def max_even_null(tau: RiemannMatrix, cfg: EvalConfig = DEFAULT_CONFIG) -> float:
    """Largest modulus among even half-integer theta-nulls; the vanishing scale."""
    table = theta_null_table(tau.genus, 2, tau, cfg)
    best = 0.0
    for code, c in enumerate(enumerate_chars(tau.genus, 2)):
        if is_even(c):
            best = max(best, abs(table[code]))
    return best


@dataclass(frozen=True)
class VanishThresholds:
    """Relative thresholds deciding theta-null vanishing and its order."""

    value_rel: float = 1e-6
    gradient_rel: float = 1e-5


def vanishing_order_at(c: Characteristic, tau: RiemannMatrix,
                       thresholds: VanishThresholds = VanishThresholds(),
                       cfg: EvalConfig = DEFAULT_CONFIG,
                       scale: float | None = None) -> int:
    """0 if theta[c](0) is nonzero at threshold, 1 if simple zero, 2 for order >= 2.

    Thresholds are relative to the largest even half-integer theta-null
    at this tau (computed unless `scale` is supplied).
    """
    if scale is None:
        scale = max_even_null(tau, cfg)
    value = abs(theta_null(c, tau, cfg))
    if value >= thresholds.value_rel * scale:
        return 0
    grad = float(np.linalg.norm(theta_gradient(c, np.zeros(tau.genus), tau, cfg)))
    return 1 if grad >= thresholds.gradient_rel * scale else 2
