"""The localized control operator G and the free propagators.

The input map is G(h) = g * (h - int g h), with a real non-negative localizer
g of unit integral supported on an interval of the torus.  Its matrix in the
orthonormal basis psi_k has the closed form

    m[j, k] = <G psi_j, psi_k> = ghat(k-j) - 2*pi*ghat(-j)*ghat(k),

obtained by expanding the product g*psi_j and the averaged term in Fourier
modes.  Column and row 0 vanish (G annihilates constants and produces
mean-zero output) and the matrix is Hermitian with strictly positive
diagonal off mode 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectrum as spect
from .errors import ConfigurationError
from .spectral import TWO_PI, TorusFunction

#: quadrature resolution used when profiling a bump into Fourier coefficients
BUMP_SAMPLES = 8192

BUMP_KINDS = ("uniform", "raised_cosine", "smooth_exp_bump")


def _wrap(y):
    """Wrap offsets into [-pi, pi)."""
    return (np.asarray(y, dtype=float) + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class BumpProfile:
    """Localizer g: unit-mean, non-negative, supported on (center +/- width/2).

    ``ghat`` stores Fourier coefficients for |k| <= kmax, normalized so that
    ghat(0) = 1/(2pi) exactly; ``tail_l1`` reports the l1 mass of coefficients
    beyond kmax dropped at profiling time.
    """

    kind: str
    center: float
    width: float
    kmax: int
    ghat: np.ndarray          # index k + kmax
    tail_l1: float
    scale: float = 1.0        # normalization applied to raw profile samples

    def __post_init__(self):
        g = np.ascontiguousarray(np.asarray(self.ghat, dtype=complex))
        g.flags.writeable = False
        object.__setattr__(self, "ghat", g)

    @property
    def support(self):
        a = self.center - self.width / 2.0
        b = self.center + self.width / 2.0
        return (a, b)

    def ghat_at(self, k):
        """ghat(k) for scalar or array k, zero outside the stored band."""
        karr = np.atleast_1d(np.asarray(k))
        out = np.zeros(karr.shape, dtype=complex)
        inside = np.abs(karr) <= self.kmax
        out[inside] = self.ghat[karr[inside] + self.kmax]
        return complex(out[0]) if np.ndim(k) == 0 else out

    def sample(self, x):
        """Pointwise values of g (the true profile, not its truncation)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.full(x.shape, 1.0 / TWO_PI) * self.scale
        y = _wrap(x - self.center)
        half = self.width / 2.0
        if self.kind == "raised_cosine":
            raw = np.where(np.abs(y) <= half,
                           (2.0 / self.width) * np.cos(np.pi * y / self.width) ** 2,
                           0.0)
        elif self.kind == "smooth_exp_bump":
            u = y / half
            raw = np.zeros(x.shape)
            inside = np.abs(u) < 1.0
            raw[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        else:
            raise ConfigurationError(f"unknown bump kind {self.kind!r}")
        return raw * self.scale


def build_bump(kind: str = "raised_cosine", center: float = np.pi,
               width: float = np.pi / 2, kmax: int = 64,
               samples: int = BUMP_SAMPLES) -> BumpProfile:
    """Construct a localizer and profile its Fourier coefficients.

    Coefficients are taken by uniform-grid quadrature at ``samples`` points
    and rescaled so ghat(0) = 1/(2pi) holds to rounding (unit integral).
    The uniform kind is the constant 1/(2pi), whose coefficients are exact.
    """
    if kind not in BUMP_KINDS:
        raise ConfigurationError(f"bump kind must be one of {BUMP_KINDS}")
    if kind == "uniform":
        ghat = np.zeros(2 * kmax + 1, dtype=complex)
        ghat[kmax] = 1.0 / TWO_PI
        return BumpProfile("uniform", np.pi, TWO_PI, kmax, ghat, 0.0, 1.0)

    if not 0 < width < TWO_PI:
        raise ConfigurationError("bump width must lie in (0, 2pi)")
    a, b = center - width / 2.0, center + width / 2.0
    if not (0.0 < a and b < TWO_PI):
        raise ConfigurationError(
            f"bump support ({a:.4f}, {b:.4f}) must be contained in (0, 2pi)")
    if samples < 2 * kmax + 1:
        raise ConfigurationError("too few samples for the requested band")

    proto = BumpProfile(kind, center, width, kmax,
                        np.zeros(2 * kmax + 1, complex), 0.0, 1.0)
    x = np.arange(samples) * (TWO_PI / samples)
    vals = proto.sample(x)
    if vals.min() < -1e-12:
        raise ConfigurationError("bump profile must be non-negative")
    full = np.fft.fft(vals) / samples        # full[k % samples] ~ ghat(k)
    scale = 1.0 / (TWO_PI * full[0].real)    # enforce unit integral
    full = full * scale
    idx = np.arange(-kmax, kmax + 1) % samples
    ghat = full[idx]
    half = samples // 2
    tail = np.concatenate([full[kmax + 1: half], full[half: samples - kmax]])
    return BumpProfile(kind, center, width, kmax, ghat,
                       float(np.abs(tail).sum()), scale)


def bump_from_coefficients(ghat, kind: str = "custom", center: float = np.pi,
                           width: float = np.pi) -> BumpProfile:
    """Wrap an explicit coefficient list (index -kmax..kmax) as a profile."""
    ghat = np.asarray(ghat, dtype=complex)
    if ghat.ndim != 1 or ghat.size % 2 == 0:
        raise ConfigurationError("coefficient list must have odd length")
    kmax = ghat.size // 2
    if not np.isclose(ghat[kmax].real, 1.0 / TWO_PI, rtol=1e-12, atol=1e-14):
        raise ConfigurationError("ghat(0) must equal 1/(2pi) (unit integral)")
    return BumpProfile(kind, center, width, kmax, ghat, 0.0, 1.0)


# -- the m-matrix ----------------------------------------------------------


@dataclass(frozen=True)
class MMatrix:
    """Matrix of G in the orthonormal psi basis, m[j,k] = <G psi_j, psi_k>.

    ``entries[j+n, k+n]`` holds m[j,k]; ``beta`` is the minimum diagonal
    entry off mode 0 and ``delta_min`` the minimum of
    delta_k = ||G psi_k||^2 = sum_j |m[k,j]|^2 over k != 0.
    """

    n: int
    entries: np.ndarray
    beta: float
    delta_min: float
    delta_k: np.ndarray

    def __post_init__(self):
        for name in ("entries", "delta_k"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def operator(self) -> np.ndarray:
        """Matrix acting on psi coefficient vectors: (Gv)_k = sum_j op[k,j] v_j."""
        return self.entries.T

    def block(self, wavenumbers) -> np.ndarray:
        idx = [k + self.n for k in wavenumbers]
        return self.entries[np.ix_(idx, idx)]


def m_matrix(bump: BumpProfile, n: int) -> MMatrix:
    """Assemble m[j,k] = ghat(k-j) - 2*pi*ghat(-j)*ghat(k) for |j|,|k| <= n."""
    if bump.kmax < 2 * n:
        raise ConfigurationError(
            f"bump profiled to kmax={bump.kmax} < 2n={2 * n}; rebuild with a "
            "wider band")
    ks = np.arange(-n, n + 1)
    J, K = np.meshgrid(ks, ks, indexing="ij")
    entries = bump.ghat_at(K - J) - TWO_PI * bump.ghat_at(-J) * bump.ghat_at(K)
    diag = entries[np.arange(2 * n + 1), np.arange(2 * n + 1)].real
    off0 = np.abs(ks) > 0
    beta = float(diag[off0].min())
    if beta <= 0.0:
        raise ConfigurationError(
            f"m[k,k] reaches {beta:.3e} <= 0 at this truncation; the "
            "localizer is too oscillatory for n={n}".format(n=n))
    delta_k = np.sum(np.abs(entries) ** 2, axis=1)
    delta_min = float(delta_k[off0].min())
    return MMatrix(n, entries, beta, delta_min, delta_k)


def m_entry_quadrature(bump: BumpProfile, j: int, k: int,
                       samples: int = BUMP_SAMPLES) -> complex:
    """Direct quadrature of m[j,k] = int G(psi_j)(x) conj(psi_k)(x) dx.

    Independent oracle for the closed form: samples the true profile,
    applies G pointwise, and integrates on the uniform grid.
    """
    x = np.arange(samples) * (TWO_PI / samples)
    g = bump.sample(x)
    psi_j = np.exp(1j * j * x) / np.sqrt(TWO_PI)
    avg = np.sum(g * psi_j) * (TWO_PI / samples)
    gpsi = g * (psi_j - avg)
    return complex(np.sum(gpsi * np.exp(-1j * k * x)) / np.sqrt(TWO_PI)
                   * (TWO_PI / samples))


def apply_G(bump: BumpProfile, h: TorusFunction, out_n: int | None = None,
            return_spillover: bool = False):
    """G(h) = g*(h - int g h), truncated to out_n (default: h.n).

    The product with g widens the band; coefficients are computed exactly for
    all modes |k| <= bump.kmax - h.n and the l2 mass beyond the output band
    is available as the spillover diagnostic.  The output has zero mean
    exactly up to rounding.
    """
    if out_n is None:
        out_n = h.n
    reach = bump.kmax - h.n
    if out_n > reach:
        raise ConfigurationError(
            f"cannot produce modes up to {out_n}: bump band supports {reach}")
    ks_out = np.arange(-reach, reach + 1)
    js = h.wavenumbers
    K, J = np.meshgrid(ks_out, js, indexing="ij")
    mat = bump.ghat_at(K - J) - TWO_PI * bump.ghat_at(K) * bump.ghat_at(-J)
    wide = mat @ h.coeffs
    mid = reach
    out = wide[mid - out_n: mid + out_n + 1]
    result = TorusFunction(out_n, out, real_flag=h.real_flag)
    if return_spillover:
        dropped = np.concatenate([wide[: mid - out_n], wide[mid + out_n + 1:]])
        return result, float(np.sqrt(TWO_PI * np.sum(np.abs(dropped) ** 2)))
    return result


def gg_star_matrix(mm: MMatrix) -> np.ndarray:
    """Matrix of G G* on psi coefficients: PSD, Hermitian, kernel contains mode 0."""
    gop = mm.operator
    out = gop @ gop.conj().T
    return 0.5 * (out + out.conj().T)


# -- free propagators --------------------------------------------------------


def propagator_multiplier(k: int, t: float, alpha, mu=0) -> complex:
    """e^{-i*lambda_k*t}; unit modulus for all real t."""
    return complex(np.exp(-1j * float(spect.eigenvalue(k, alpha, mu)) * t))


def evolve_free(u0: TorusFunction, t: float, alpha, mu=0) -> TorusFunction:
    """Free group: multiply mode k by e^{-i*lambda_k*t}.  Isometry in every H^s."""
    lam = spect.eigenvalues(u0.n, alpha, mu)
    return u0.with_coeffs(np.exp(-1j * lam * t) * u0.coeffs)
