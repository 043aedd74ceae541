"""Radial collocation grids, the d-dimensional radial Fourier transform, and single-field norms.

A radial function f(|x|) on R^d has the unitary Fourier transform

    fhat(rho) = rho^(-nu) * Integral_0^inf f(r) J_nu(rho r) r^(nu+1) dr,   nu = d/2 - 1,

i.e. the order-nu Hankel transform of g(r) = f(r) r^nu.  The grid discretizes
this on the positive zeros j_1 < ... < j_n of J_nu scaled into [0, r_max],
which makes the transform matrix symmetric and quasi-unitary and supplies a
companion quadrature rule for integrals against r^(d-1) dr.

Conventions kept throughout the package:
  * unitary transform, so Plancherel holds without constants;
  * angular radial frequency rho, so the free propagator multiplier is
    exp(-i t rho^2);
  * quadrature weights include the sphere-surface factor, so sums over nodes
    approximate integrals over R^d directly.

Only even dimensions are supported (integer Hankel order); d = 4 is the
primary target.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

RESOLVED_TAIL_FRACTION = 1e-6
ROUNDTRIP_TOL = 1e-9
QUADRATURE_TOL = 1e-8


class GridResolutionError(ValueError):
    """Grid cannot represent the certification field to tolerance."""


class GridMismatchError(ValueError):
    """Operation mixes fields living on different grids."""


class UnresolvedFieldError(ValueError):
    """Too much spectral mass sits in the top half of the frequency range."""


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


class RadialGrid:
    """Bessel-zero collocation grid with its radial Fourier transform.

    Immutable after construction; every array is frozen.  Two grids with the
    same (d, n, r_max) are interchangeable.
    """

    def __init__(self, d: int, r_max: float, n: int):
        if not isinstance(d, (int, np.integer)) or d < 2:
            raise ValueError(f"dimension out of range: d={d} (need integer d >= 2)")
        if d % 2 != 0:
            raise ValueError(f"odd dimension d={d} unsupported (integer Hankel orders only)")
        if not (isinstance(n, (int, np.integer)) and n >= 16):
            raise ValueError(f"node count n={n} too small (need n >= 16)")
        if not (np.isfinite(r_max) and r_max > 0):
            raise ValueError(f"r_max must be finite and positive, got {r_max}")

        self.d = int(d)
        self.n = int(n)
        self.r_max = float(r_max)
        self.nu = d // 2 - 1

        zeros = special.jn_zeros(self.nu, self.n + 1)
        j = zeros[: self.n]
        s_edge = zeros[self.n]
        self._bessel_zeros = j
        self._s_edge = float(s_edge)

        self.r = j * (self.r_max / s_edge)
        self.rho = j / self.r_max
        self.rho_max = s_edge / self.r_max

        jnext = special.jv(self.nu + 1, j)
        # kernel C[m, k] = J_nu(j_m j_k / S) / J_{nu+1}(j_k)^2
        kernel = special.jv(self.nu, np.outer(j, j) / s_edge) / jnext[None, :] ** 2
        self._fwd = (2.0 * self.r_max**2 / s_edge**2) * kernel
        self._inv = (2.0 / self.r_max**2) * kernel
        self._jnext = jnext

        # 1D weights: Integral_0^R h(r) r dr ~= sum w1_k h(r_k), same on the rho side
        self.w1 = 2.0 * self.r_max**2 / (s_edge**2 * jnext**2)
        self.wrho1 = 2.0 / (self.r_max**2 * jnext**2)
        area = sphere_area(self.d)
        # full-measure weights: Integral_{R^d} h dx ~= sum w_k h(r_k)
        self.w = area * self.r ** (self.d - 2) * self.w1
        self.wrho = area * self.rho ** (self.d - 2) * self.wrho1

        self._r_nu = self.r**self.nu
        self._rho_nu = self.rho**self.nu
        self._deriv_kernel = None
        self._pv_parts = None

        for arr in (self.r, self.rho, self.w1, self.wrho1, self.w, self.wrho,
                    self._fwd, self._inv, self._r_nu, self._rho_nu):
            arr.setflags(write=False)

        self._certify()

    @property
    def key(self) -> tuple:
        return (self.d, self.n, self.r_max)

    def __eq__(self, other) -> bool:
        return isinstance(other, RadialGrid) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"RadialGrid(d={self.d}, r_max={self.r_max}, n={self.n})"

    def hash_hex(self) -> str:
        h = hashlib.sha256()
        h.update(np.array(self.key, dtype=np.float64).tobytes())
        h.update(self.r.tobytes())
        return h.hexdigest()

    def _certify(self) -> None:
        sigma = min(1.0, self.r_max / 8.0)
        f = np.exp(-((self.r / sigma) ** 2))
        coeffs = self._forward_values(f)
        back = self._inverse_values(coeffs)
        err = math.sqrt(float(np.sum(self.w * np.abs(back - f) ** 2)
                              / np.sum(self.w * f**2)))
        if err > ROUNDTRIP_TOL:
            raise GridResolutionError(
                f"resolution too low: round-trip error {err:.3e} on a width-{sigma:g} "
                f"Gaussian exceeds {ROUNDTRIP_TOL:g} (d={self.d}, r_max={self.r_max}, n={self.n})")
        quad = float(np.sum(self.w * f**2))
        exact = (math.pi / 2.0) ** (self.d / 2.0) * sigma**self.d
        if abs(quad - exact) > QUADRATURE_TOL * exact:
            raise GridResolutionError(
                f"quadrature error {abs(quad - exact) / exact:.3e} on a Gaussian "
                f"exceeds {QUADRATURE_TOL:g}")

    def _forward_values(self, values: np.ndarray) -> np.ndarray:
        return (self._fwd @ (values * self._r_nu)) / self._rho_nu

    def _inverse_values(self, coeffs: np.ndarray) -> np.ndarray:
        return (self._inv @ (coeffs * self._rho_nu)) / self._r_nu

    def derivative_kernel(self) -> np.ndarray:
        """Kernel for the radial derivative: d/dr maps the J_nu series to a J_{nu+1} series."""
        if self._deriv_kernel is None:
            mat = special.jv(self.nu + 1, np.outer(self._bessel_zeros, self._bessel_zeros)
                             / self._s_edge) / self._jnext[None, :] ** 2
            mat = (2.0 / self.r_max**2) * mat
            mat.setflags(write=False)
            self._deriv_kernel = mat
        return self._deriv_kernel


def make_radial_grid(d: int, r_max: float, n: int) -> RadialGrid:
    """Build a certified radial grid (raises GridResolutionError if n is too small)."""
    return RadialGrid(d, r_max, n)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Complex radial profile u(r_j) sampled on a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"sample count {vals.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _check(self, other: "RadialField") -> None:
        if self.grid.key != other.grid.key:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: "RadialField") -> "RadialField":
        self._check(other)
        return RadialField(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialField") -> "RadialField":
        self._check(other)
        return RadialField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "RadialField":
        return RadialField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Radial-frequency coefficients uhat(rho_k) on a grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"coefficient count {vals.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("spectral field contains non-finite coefficients")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def zero_field(grid: RadialGrid) -> RadialField:
    return RadialField(grid, np.zeros(grid.n, dtype=np.complex128))


def field_from_function(grid: RadialGrid, fn) -> RadialField:
    """Sample a callable of the radius on the grid nodes."""
    return RadialField(grid, np.asarray(fn(grid.r), dtype=np.complex128))


def transform_forward(f: RadialField) -> SpectralField:
    return SpectralField(f.grid, f.grid._forward_values(f.values))


def transform_inverse(F: SpectralField) -> RadialField:
    return RadialField(F.grid, F.grid._inverse_values(F.values))


def apply_multiplier(f: RadialField, symbol: np.ndarray) -> RadialField:
    """Return the field with Fourier coefficients symbol(rho_k) * uhat_k."""
    g = f.grid
    return RadialField(g, g._inverse_values(symbol * g._forward_values(f.values)))


# ---------------------------------------------------------------------------
# norms and integrals
# ---------------------------------------------------------------------------

def mass(f: RadialField) -> float:
    """L^2 mass M(f) = Integral |f|^2 dx."""
    return float(np.sum(f.grid.w * np.abs(f.values) ** 2))


def spectral_mass(F: SpectralField) -> float:
    return float(np.sum(F.grid.wrho * np.abs(F.values) ** 2))


def lebesgue_norm(f: RadialField, p: float) -> float:
    """||f||_{L^p}; p = inf gives the sup over grid nodes."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError(f"Lebesgue exponent p={p} out of range (need p >= 1)")
    return float(np.sum(f.grid.w * np.abs(f.values) ** p) ** (1.0 / p))


def sobolev_norm(f: RadialField, s: float) -> float:
    """Homogeneous Sobolev norm || |grad|^s f ||_2 via the multiplier rho^s."""
    if not -2.0 <= s <= 3.0:
        raise ValueError(f"regularity s={s} outside supported range [-2, 3]")
    F = transform_forward(f)
    return float(math.sqrt(np.sum(f.grid.wrho * f.grid.rho ** (2.0 * s)
                                  * np.abs(F.values) ** 2)))


def gradient_norm_sq(f: RadialField) -> float:
    return sobolev_norm(f, 1.0) ** 2


def spectral_tail_fraction(f: RadialField) -> float:
    """Fraction of the field's mass at rho > rho_max / 2 (0 for the zero field)."""
    F = transform_forward(f)
    total = spectral_mass(F)
    if total == 0.0:
        return 0.0
    tail = float(np.sum(F.grid.wrho[F.grid.rho > 0.5 * F.grid.rho_max]
                        * np.abs(F.values[F.grid.rho > 0.5 * F.grid.rho_max]) ** 2))
    return tail / total


def is_resolved(f: RadialField, tail_fraction: float = RESOLVED_TAIL_FRACTION) -> bool:
    return spectral_tail_fraction(f) < tail_fraction


def require_resolved(f: RadialField, what: str = "field") -> None:
    frac = spectral_tail_fraction(f)
    if frac >= RESOLVED_TAIL_FRACTION:
        raise UnresolvedFieldError(
            f"{what} is under-resolved: {frac:.3e} of its mass lies above rho_max/2")


def energy(f: RadialField, mu: int) -> float:
    """E(f) = 1/2 ||grad f||^2 + mu * d/(2(d+2)) * ||f||^{2(d+2)/d}_{2(d+2)/d}.

    mu = -1 is focusing, +1 defocusing, 0 the free flow.  Requires a resolved
    field since the gradient is taken spectrally.
    """
    if mu not in (-1, 0, 1):
        raise ValueError(f"mu must be -1, 0 or +1, got {mu}")
    require_resolved(f, "energy argument")
    d = f.grid.d
    kinetic = 0.5 * gradient_norm_sq(f)
    if mu == 0:
        return kinetic
    p = 2.0 * (d + 2) / d
    potential = float(np.sum(f.grid.w * np.abs(f.values) ** p))
    return kinetic + mu * d / (2.0 * (d + 2)) * potential


# ---------------------------------------------------------------------------
# derivative, off-grid evaluation, rescaling
# ---------------------------------------------------------------------------

def radial_derivative(f: RadialField) -> RadialField:
    """Radial derivative df/dr, computed from the spectral representation.

    Differentiating r^(-nu) J_nu(rho r) in r yields -rho r^(-nu) J_{nu+1}(rho r),
    so the derivative is an order-(nu+1) synthesis of the same coefficients.
    """
    g = f.grid
    coeffs = g._forward_values(f.values)
    deriv = -(g.derivative_kernel() @ (coeffs * g._rho_nu * g.rho)) / g._r_nu
    return RadialField(g, deriv)


def evaluate_at(f: RadialField, radii: np.ndarray, zero_beyond: bool = True) -> np.ndarray:
    """Evaluate the band-limited interpolant of f at arbitrary radii >= 0.

    The Fourier-Bessel series only represents f inside [0, r_max]; radii
    beyond are returned as 0 when zero_beyond is set (fields are assumed to
    decay there) and rejected otherwise.
    """
    g = f.grid
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    outside = radii > g.r_max
    if np.any(outside) and not zero_beyond:
        raise ValueError("radius beyond r_max")
    coeffs = g._forward_values(f.values) * g._rho_nu * g.wrho1 * g.r_max**2 / 2.0
    # f(r) = (2/R^2) sum_k coeffs_k J_nu(rho_k r) r^(-nu) with the wrho1 folded in
    out = np.zeros(radii.shape, dtype=np.complex128)
    inner = ~outside
    rr = radii[inner]
    small = rr < 0.5 * g.r[0]
    reg = inner.copy()
    reg[inner] = ~small
    if np.any(reg):
        rv = radii[reg]
        kern = special.jv(g.nu, np.outer(rv, g.rho)) / rv[:, None] ** g.nu
        out[reg] = (2.0 / g.r_max**2) * (kern @ coeffs)
    if np.any(small):
        sm = inner.copy()
        sm[inner] = small
        rv = radii[sm]
        # J_nu(z) r^(-nu) -> (rho/2)^nu / Gamma(nu+1) as r -> 0; next order keeps accuracy
        z = np.outer(rv, g.rho)
        lead = (g.rho[None, :] / 2.0) ** g.nu / math.gamma(g.nu + 1)
        corr = 1.0 - z**2 / (4.0 * (g.nu + 1))
        out[sm] = (2.0 / g.r_max**2) * ((lead * corr) @ coeffs)
    return out


def rescale(f: RadialField, lam: float) -> RadialField:
    """Mass-preserving rescaling f -> lam^{d/2} f(lam x), sampled on the same grid."""
    if not (np.isfinite(lam) and lam > 0):
        raise ValueError("scaling factor must be positive and finite")
    g = f.grid
    vals = lam ** (g.d / 2.0) * evaluate_at(f, lam * g.r, zero_beyond=True)
    return RadialField(g, vals)


# ---------------------------------------------------------------------------
# dyadic scales
# ---------------------------------------------------------------------------

def is_dyadic(N: float) -> bool:
    """True when N is exactly a power of two (2^k for integer k, k may be negative)."""
    if not (np.isfinite(N) and N > 0):
        return False
    mantissa, _ = math.frexp(float(N))
    return mantissa == 0.5


def dyadic_range(grid: RadialGrid) -> tuple[float, float]:
    """(N_min, N_max) for the grid's usable dyadic ladder.

    N_max keeps rho_max >= 4 N, so every band symbol is fully inside the
    resolved range; N_min keeps a handful of nodes under the lowest band.
    """
    n_max = 2.0 ** math.floor(math.log2(grid.rho_max / 4.0))
    n_min = 2.0 ** math.ceil(math.log2(6.0 * grid.rho[0]))
    if n_min > n_max:
        raise GridResolutionError("grid has no usable dyadic scales")
    return n_min, n_max


def dyadic_scales(grid: RadialGrid) -> list[float]:
    n_min, n_max = dyadic_range(grid)
    out = []
    N = n_min
    while N <= n_max * 1.0000001:
        out.append(N)
        N *= 2.0
    return out


def validate_scale(grid: RadialGrid, N: float) -> float:
    if not is_dyadic(N):
        raise ValueError(f"scale N={N} is not dyadic")
    n_min, n_max = dyadic_range(grid)
    if not n_min <= N <= n_max:
        raise ValueError(f"scale N={N} outside grid dyadic range [{n_min}, {n_max}]")
    return float(N)


# ---------------------------------------------------------------------------
# randomized smooth corpus (shared by property tests and the selftest)
# ---------------------------------------------------------------------------

def concentrated_field(grid: RadialGrid, r_support: float, rho_lo: float,
                       rho_hi: float) -> RadialField:
    """Unit-mass field, spectrum inside [rho_lo, rho_hi], minimal mass outside r_support.

    Solves the concentration eigenproblem on the span of the grid's spectral
    modes in the window: minimize the outside-ball mass form.  The minimizer
    is the prolate-type bump whose joint space/frequency tails decay like
    exp(-2 r_support * rho_hi), far beyond what any Gaussian achieves; it is
    the natural test field for cutoff-mismatch bounds.  Deterministic.
    """
    from scipy.linalg import eigh

    idx = np.where((grid.rho >= rho_lo) & (grid.rho <= rho_hi))[0]
    if idx.size < 2:
        raise ValueError("spectral window contains fewer than two grid modes")
    basis = np.empty((grid.n, idx.size))
    for j, k in enumerate(idx):
        coeffs = np.zeros(grid.n)
        coeffs[k] = 1.0 / math.sqrt(grid.wrho[k])
        basis[:, j] = grid._inverse_values(coeffs).real
    outside = grid.w * (grid.r > r_support)
    m_out = basis.T @ (outside[:, None] * basis)
    gram = basis.T @ (grid.w[:, None] * basis)
    _, vecs = eigh(m_out, gram)
    f = RadialField(grid, (basis @ vecs[:, 0]).astype(np.complex128))
    return RadialField(grid, f.values / math.sqrt(mass(f)))


def random_smooth_field(grid: RadialGrid, rng: np.random.Generator,
                        rho_cap: float | None = None) -> RadialField:
    """Random smooth radial field, spatially localized, spectrum below rho_cap.

    Spectral coefficients are complex Gaussian under a smooth envelope that
    dies well before rho_cap (default: the top of the grid's dyadic ladder,
    so band partitions reconstruct such fields); the synthesized field is then
    tapered by a Gaussian of width r_max/6 so rescalings by factors in
    [1/2, 2] stay inside the domain.  Unit mass; deterministic given the
    generator state.
    """
    g = grid
    cap = dyadic_range(g)[1] if rho_cap is None else float(rho_cap)
    if not 0 < cap <= g.rho_max:
        raise ValueError("rho_cap outside the grid's spectral range")
    center = cap * rng.uniform(0.1, 0.5)
    width = cap * rng.uniform(0.1, 0.3)
    envelope = np.exp(-(((g.rho - center) / width) ** 2)) + 0.2 * np.exp(-((g.rho / (0.3 * cap)) ** 2))
    envelope[g.rho > 0.7 * cap] *= np.exp(-(((g.rho[g.rho > 0.7 * cap] - 0.7 * cap)
                                             / (0.05 * cap)) ** 4))
    coeffs = envelope * (rng.standard_normal(g.n) + 1j * rng.standard_normal(g.n))
    f = transform_inverse(SpectralField(g, coeffs))
    vals = f.values * np.exp(-((g.r / (g.r_max / 6.0)) ** 2))
    m = float(np.sum(g.w * np.abs(vals) ** 2))
    if m == 0.0:
        return RadialField(g, vals)
    return RadialField(g, vals / math.sqrt(m))
