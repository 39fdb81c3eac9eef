"""Exact control synthesis by the moment method, with a Gramian oracle.

Steering u0 to u1 over [0, T] reduces, after removing the free flow, to the
moment equations

    int_0^T int_T G(h)(x,t) e^{-i lam_k (T-t)} conj(psi_k(x)) dx dt = c_k,

where c = psi-coefficients of u1 - U(T)u0.  The control is sought in the
separated form h = sum_j h_j conj(q_j)(t) psi_j(x), where {q_j} is the
biorthogonal dual of the exponentials {e^{i lam t}} over the distinct
eigenvalues: plugging in decouples the moments into per-mode scalar
equations, except inside eigenvalue clusters where a 2x2 or 3x3 block of
m-matrix entries must be inverted.

Everything stays in coefficients-of-exponentials form, so moments, terminal
states, and L2-in-time norms all evaluate in closed form; composite
Gauss-Legendre quadrature provides the independent cross-check.  A second,
independently-derived control comes from the controllability Gramian
W_T = int_0^T U(T-s) GG* U(T-s)^* ds: h = G* U(T-t)^* W_T^{-1} c is the
minimal-L2-norm control and serves as the oracle for the moment route.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import spectrum as spectrum_mod
from ._closedform import exp_gram, gauss_legendre_nodes, phi_osc, weighted_gramian
from .errors import ConfigurationError, ObservabilityError, SingularClusterBlockError, \
    SingularGramError
from .operators import BumpProfile, MMatrix, evolve_free, m_matrix
from .spectral import TorusFunction, sobolev_norm
from .spectrum import Spectrum, eigenvalues

#: Gram matrices with condition number beyond this are declared singular.
GRAM_COND_LIMIT = 1e14

#: singular-value cutoff (relative) for the rank-revealing fallback solve
LSTSQ_RCOND = 1e-13


@dataclass(frozen=True)
class ControlProblem:
    """Steering task: from u0 to u1 in time T, measured in H^s, order n."""

    alpha: float
    mu: float
    T: float
    s: float
    n: int
    bump: BumpProfile
    u0: TorusFunction
    u1: TorusFunction

    def __post_init__(self):
        if self.T <= 0:
            raise ConfigurationError("horizon T must be positive")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.s < 0:
            raise ConfigurationError("Sobolev index s must be >= 0")
        if self.u0.n != self.n or self.u1.n != self.n:
            raise ConfigurationError("state truncation must match problem order")
        gap = abs(self.u0.coeff(0) - self.u1.coeff(0))
        if gap > 1e-12 * max(1.0, abs(self.u1.coeff(0))):
            raise ConfigurationError(
                f"means of u0 and u1 differ by {gap:.3e}; steering preserves the mean")


def reduce_to_zero_start(problem: ControlProblem) -> np.ndarray:
    """psi-coefficients of the reduced target u1 - U(T)u0; entry 0 vanishes."""
    drifted = evolve_free(problem.u0, problem.T, problem.alpha, problem.mu)
    return problem.u1.psi_coeffs - drifted.psi_coeffs


@dataclass(frozen=True)
class BiorthogonalFamily:
    """Dual family of the exponentials e^{i lam t} over distinct eigenvalues.

    ``dual_coeffs[j, m]`` expresses q_j = sum_m dual_coeffs[j, m] e^{i lam_m t};
    with the Gram matrix Gamma of the exponentials the duals are exactly the
    rows of Gamma^{-1}.  ``mode_family[k+n]`` maps each wavenumber to the
    distinct-eigenvalue slot of its cluster.
    """

    T: float
    lambdas: np.ndarray          # distinct eigenvalues, one per cluster
    gram: np.ndarray             # Gamma[k, m] = int_0^T e^{i(lam_k-lam_m)t} dt
    dual_coeffs: np.ndarray
    cond: float
    mode_family: np.ndarray      # wavenumber k -> row index into dual_coeffs
    degenerate: bool = False     # rank-revealing fallback was used

    def biorthogonality_residual(self) -> float:
        """max |int e^{i lam_k t} conj(q_j) dt - delta_kj| in closed form."""
        prod = self.gram @ self.dual_coeffs.conj().T
        return float(np.abs(prod - np.eye(len(self.lambdas))).max())

    def dual_at_times(self, times) -> np.ndarray:
        """q_j(t) sampled on a grid; rows index j, columns t."""
        e = np.exp(1j * np.outer(self.lambdas, np.asarray(times, float)))
        return self.dual_coeffs @ e


def build_biorthogonal(spec: Spectrum, T: float,
                       on_singular: str = "error") -> BiorthogonalFamily:
    """Solve for the biorthogonal duals of the distinct exponentials.

    The Gram matrix Gamma has diagonal T and off-diagonal
    (e^{i(lam_k-lam_m)T} - 1)/(i(lam_k-lam_m)).  When cond(Gamma) exceeds
    1e14 the family is numerically dependent on [0, T]; the near-resonant
    pair is named in the error.  ``on_singular="lstsq"`` instead builds
    least-squares duals by a rank-revealing pseudo-inverse and flags the
    family as degenerate (biorthogonality then holds only on the resolvable
    subspace).
    """
    if T <= 0:
        raise ConfigurationError("horizon T must be positive")
    lam = spec.distinct_lambdas()
    gram = exp_gram(lam, T)
    nfam = len(lam)
    sing = np.linalg.svd(gram, compute_uv=False)
    cond = float(sing[0] / sing[-1]) if sing[-1] > 0 else np.inf
    degenerate = False
    if cond > GRAM_COND_LIMIT:
        if on_singular == "error":
            order = np.argsort(lam)
            gaps = np.diff(lam[order])
            i = int(np.argmin(gaps))
            raise SingularGramError(
                f"Gram matrix of exponentials numerically singular "
                f"(cond={cond:.3e} > {GRAM_COND_LIMIT:.0e}); nearest pair "
                f"lambda={lam[order[i]]:.6g}, {lam[order[i + 1]]:.6g} at "
                f"distance {gaps[i]:.3e} over T={T}",
                pair=(float(lam[order[i]]), float(lam[order[i + 1]])),
                cond=cond)
        elif on_singular == "lstsq":
            degenerate = True
        else:
            raise ValueError("on_singular must be 'error' or 'lstsq'")
    if degenerate:
        dual = np.linalg.pinv(gram, rcond=LSTSQ_RCOND).conj().T
        warnings.warn(
            f"Gram matrix has cond {cond:.2e}; duals built by rank-revealing "
            "least squares, biorthogonality only approximate", RuntimeWarning)
    else:
        # Gamma * conj(D)^T = I  =>  D = (Gamma^{-1})^H; one refinement step
        x = np.linalg.solve(gram, np.eye(nfam, dtype=complex))
        x += np.linalg.solve(gram, np.eye(nfam) - gram @ x)
        dual = x.conj().T
    mode_family = np.array([spec.cluster_of(int(k)) for k in spec.wavenumbers])
    return BiorthogonalFamily(T=T, lambdas=lam, gram=gram, dual_coeffs=dual,
                              cond=cond, mode_family=mode_family,
                              degenerate=degenerate)


def solve_coefficients(c: np.ndarray, mm: MMatrix, spec: Spectrum,
                       T: float) -> np.ndarray:
    """Amplitudes h_j of the separated control; h_0 = 0.

    Singleton modes: h_k = c_k e^{i lam_k T} / m[k,k].  Inside a cluster the
    members couple through the block M_j of m-entries; the block system
    c~ = M_j^T h is solved with mode 0 removed (its moment is automatic and
    h_0 = 0, and keeping it would make the block singular since the zero
    column of m vanishes).
    """
    n = spec.n
    c = np.asarray(c, dtype=complex)
    if abs(c[n]) > 1e-10 * max(1.0, float(np.abs(c).max())):
        raise ConfigurationError(
            f"target coefficient c_0 = {c[n]:.3e} != 0: mode 0 is unreachable")
    lam = spec.lambdas
    h = np.zeros(2 * n + 1, dtype=complex)
    for grp in spec.clusters:
        nz = [k for k in grp if k != 0]
        if not nz:
            continue
        pos = [k + n for k in nz]
        ctil = c[pos] * np.exp(1j * lam[pos] * T)
        if len(nz) == 1:
            h[pos[0]] = ctil[0] / mm.entries[pos[0], pos[0]]
        else:
            block = mm.block(nz)
            if np.linalg.cond(block) > 1e14:
                raise SingularClusterBlockError(
                    f"cluster block {nz} numerically singular for this localizer")
            h[pos] = np.linalg.solve(block.T, ctil)
    return h


@dataclass(frozen=True)
class ControlSignal:
    """Control in coefficients-of-exponentials form.

    The psi-coefficient of mode j at time t is
    sum_m exp_coeffs[j, m] * e^{-i lambdas[m] t}; this exact representation
    drives all closed-form integrals.  Sampled (x, t) grids are generated
    only for export.
    """

    n: int
    T: float
    lambdas: np.ndarray          # distinct eigenvalues (frequency slots)
    exp_coeffs: np.ndarray       # (2n+1) x len(lambdas)
    amplitudes: np.ndarray | None = None   # moment-method h_j when applicable

    def mode_values(self, times) -> np.ndarray:
        """psi-coefficients of h(., t) for each t; shape (2n+1, len(times))."""
        e = np.exp(-1j * np.outer(self.lambdas, np.asarray(times, float)))
        return self.exp_coeffs @ e

    def at_time(self, t: float) -> TorusFunction:
        v = self.mode_values([t])[:, 0]
        return TorusFunction.from_psi_coeffs(v, self.n)

    def sample_grid(self, xs, times) -> np.ndarray:
        """h(x, t) on a grid; shape (len(times), len(xs))."""
        xs = np.asarray(xs, dtype=float)
        ks = np.arange(-self.n, self.n + 1)
        basis = np.exp(1j * np.outer(ks, xs)) / np.sqrt(2 * np.pi)
        return self.mode_values(times).T @ basis

    def l2_hs_norm(self, s: float = 0.0) -> float:
        """||h||_{L2([0,T]; H^s)} evaluated exactly through the Gram matrix."""
        gram = exp_gram(-self.lambdas, self.T)  # conj frequencies e^{-i lam t}
        vals, vecs = np.linalg.eigh(gram)
        vals = np.clip(vals, 0.0, None)
        proj = self.exp_coeffs @ vecs            # rows: modes
        k = np.arange(-self.n, self.n + 1, dtype=float)
        weights = (1.0 + k**2) ** s
        total = float(np.sum(weights[:, None] * vals[None, :]
                             * np.abs(proj) ** 2))
        return float(np.sqrt(max(total, 0.0)))

    def hermitian_defect(self) -> float:
        """Relative deviation of h(., t) from real-valuedness.

        Real h requires v_{-j}(t) = conj(v_j(t)); in exponential coefficients
        that pairs slot m with the slot carrying -lambda_m.  Measured on a
        31-point time grid against the signal's own magnitude.
        """
        times = np.linspace(0.0, self.T, 31)
        v = self.mode_values(times)
        defect = np.abs(v - np.conj(v[::-1, :])).max()
        scale = max(np.abs(v).max(), 1e-300)
        return float(defect / scale)

    def symmetrized(self) -> "ControlSignal":
        """Hermitian-symmetrized (real-part) signal, same exponential slots.

        conj(v_{-j}(t)) contributes conj(E[-j, m']) on the slot with
        -lambda_{m'}; the eigenvalue set is symmetric so the slot exists.
        """
        lam = self.lambdas
        # slot permutation sending lambda_m -> -lambda_m
        order = np.argsort(lam)
        rev = np.argsort(-lam)
        perm = np.empty(len(lam), dtype=int)
        perm[order] = rev
        mirrored = np.conj(self.exp_coeffs[::-1, :][:, perm])
        return ControlSignal(self.n, self.T, lam,
                             0.5 * (self.exp_coeffs + mirrored),
                             amplitudes=self.amplitudes)


def assemble_control(h: np.ndarray, family: BiorthogonalFamily,
                     spec: Spectrum) -> ControlSignal:
    """h(x,t) = sum_j h_j conj(q_j)(t) psi_j(x) in exponential-coefficient form.

    conj(q_j) = sum_m conj(dual_coeffs[j, m]) e^{-i lam_m t}, so mode j's
    row is h_j * conj(dual row of its cluster).
    """
    rows = np.conj(family.dual_coeffs)[family.mode_family, :]
    return ControlSignal(spec.n, family.T, family.lambdas,
                         np.asarray(h, complex)[:, None] * rows,
                         amplitudes=np.asarray(h, complex))


def verify_moments(signal: ControlSignal, c: np.ndarray, spec: Spectrum,
                   mm: MMatrix, method: str = "closed",
                   total_nodes: int = 10_016) -> dict:
    """Evaluate the moment integrals and compare with the targets c_k.

    moment_k = e^{-i lam_k T} sum_j m[j,k] int_0^T a_j(t) e^{i lam_k t} dt
    with a_j the mode-j time profile; closed form resolves the inner
    integral exactly, the quadrature path uses composite Gauss-Legendre.
    """
    lam = spec.lambdas
    T = signal.T
    if method == "closed":
        inner = phi_osc(lam[:, None] - signal.lambdas[None, :], T)
        moments = np.exp(-1j * lam * T) * \
            ((mm.operator @ signal.exp_coeffs) * inner).sum(axis=1)
    elif method == "quadrature":
        nodes, wts = gauss_legendre_nodes(T, total_nodes)
        a = signal.mode_values(nodes)
        b = mm.operator @ a
        integ = b * np.exp(1j * np.outer(lam, nodes))
        moments = np.exp(-1j * lam * T) * (integ @ wts)
    else:
        raise ValueError("method must be 'closed' or 'quadrature'")
    resid = np.abs(moments - np.asarray(c, complex))
    return {"moments": moments, "max_residual": float(resid.max()),
            "residuals": resid}


def evolve_controlled(u0: TorusFunction, signal: ControlSignal, t: float,
                      alpha, mu, mm: MMatrix,
                      method: str = "closed",
                      total_nodes: int = 10_016) -> TorusFunction:
    """Variation-of-constants solution u(t) = U(t)u0 + int_0^t U(t-s) Gh(s) ds.

    Per mode the Duhamel integrand is a finite sum of exponentials, so
    u(t)_k = e^{-i lam_k t}(v0_k + sum_j op[k,j] sum_m E[j,m] phi(i(lam_k -
    lam_m), t)); quadrature is available as an independent fallback.
    """
    if t < 0 or t > signal.T + 1e-12:
        raise ConfigurationError("time must lie in [0, T]")
    lam = eigenvalues(u0.n, alpha, mu)
    forced = mm.operator @ signal.exp_coeffs
    if method == "closed":
        inner = phi_osc(lam[:, None] - signal.lambdas[None, :], t)
        duh = (forced * inner).sum(axis=1)
    elif method == "quadrature":
        if t == 0.0:
            duh = np.zeros(2 * u0.n + 1, dtype=complex)
        else:
            nodes, wts = gauss_legendre_nodes(t, total_nodes)
            b = forced @ np.exp(-1j * np.outer(signal.lambdas, nodes))
            duh = (b * np.exp(1j * np.outer(lam, nodes))) @ wts
    else:
        raise ValueError("method must be 'closed' or 'quadrature'")
    v = np.exp(-1j * lam * t) * (u0.psi_coeffs + duh)
    return TorusFunction.from_psi_coeffs(v, u0.n)


def controllability_gramian(mm: MMatrix, spec: Spectrum, T: float) -> np.ndarray:
    """W_T = int_0^T U(T-s) GG* U(T-s)^* ds on psi coefficients (closed form).

    Substituting tau = T-s shows this is the forward-flow Gramian
    int_0^T U(tau) GG* U(tau)^* dtau, which also governs observability."""
    gop = mm.operator
    gg = gop @ gop.conj().T
    return weighted_gramian(gg, spec.lambdas, T, rate=0.0, flow="forward")


def hum_control(problem: ControlProblem, spec: Spectrum | None = None,
                mm: MMatrix | None = None) -> tuple[ControlSignal, dict]:
    """Minimal-norm control through the controllability Gramian.

    h(t) = G* U(T-t)^* eta with W_T eta = u1 - U(T)u0 (restricted to
    mean-zero modes).  Independent of the moment construction; by the
    minimizer property its L2([0,T]; L2) norm is a lower bound for any
    steering control's.
    """
    if spec is None:
        spec = spectrum_mod.analyze(problem.n, problem.alpha, problem.mu)
    if mm is None:
        mm = m_matrix(problem.bump, problem.n)
    n = problem.n
    c = reduce_to_zero_start(problem)
    W = controllability_gramian(mm, spec, problem.T)
    nz = spec.wavenumbers != 0
    Wr = W[np.ix_(nz, nz)]
    vals = np.linalg.eigvalsh(Wr)
    if vals.min() <= 0.0:
        raise ObservabilityError(
            f"controllability Gramian singular on mean-zero modes "
            f"(min eigenvalue {vals.min():.3e}) at T={problem.T}, n={n}")
    cond = float(vals.max() / vals.min())
    eta_r = np.linalg.solve(Wr, c[nz])
    eta_r += np.linalg.solve(Wr, c[nz] - Wr @ eta_r)   # one refinement step
    eta = np.zeros(2 * n + 1, dtype=complex)
    eta[nz] = eta_r

    # mode-k profile: sum_l G*[k,l] eta_l e^{i lam_l (T-t)}; group eigenvalues
    gstar = mm.operator.conj().T
    lam_dist = spec.distinct_lambdas()
    E = np.zeros((2 * n + 1, len(lam_dist)), dtype=complex)
    for ci, grp in enumerate(spec.clusters):
        pos = [k + n for k in grp]
        E[:, ci] = (gstar[:, pos] @ eta[pos]) * np.exp(1j * lam_dist[ci] * problem.T)
    signal = ControlSignal(n, problem.T, lam_dist, E)
    return signal, {"cond_W": cond, "min_eig_W": float(vals.min())}


@dataclass(frozen=True)
class SynthesisResult:
    """Everything produced by one moment-method synthesis run."""

    problem: ControlProblem
    spectrum: Spectrum
    mmatrix: MMatrix
    family: BiorthogonalFamily
    targets: np.ndarray
    signal: ControlSignal
    terminal_residual: float
    moment_residual: float
    control_norm: float
    nu_empirical: float
    cond_gamma: float


def terminal_residual(problem: ControlProblem, signal: ControlSignal,
                      mm: MMatrix) -> float:
    """Relative H^s distance of the steered terminal state from u1."""
    uT = evolve_controlled(problem.u0, signal, problem.T, problem.alpha,
                           problem.mu, mm)
    err = uT.coeffs - problem.u1.coeffs
    k = np.arange(-problem.n, problem.n + 1, dtype=float)
    w = (1.0 + k**2) ** problem.s
    num = np.sqrt(np.sum(w * np.abs(err) ** 2))
    den = np.sqrt(np.sum(w * np.abs(problem.u1.coeffs) ** 2))
    return float(num / den) if den > 0 else float(num)


def synthesize_control(problem: ControlProblem, spec: Spectrum | None = None,
                       mm: MMatrix | None = None,
                       family: BiorthogonalFamily | None = None,
                       on_singular: str = "error") -> SynthesisResult:
    """Full moment-method pipeline: targets, duals, amplitudes, diagnostics."""
    if spec is None:
        spec = spectrum_mod.analyze(problem.n, problem.alpha, problem.mu)
    if mm is None:
        mm = m_matrix(problem.bump, problem.n)
    if family is None:
        family = build_biorthogonal(spec, problem.T, on_singular=on_singular)
    c = reduce_to_zero_start(problem)
    h = solve_coefficients(c, mm, spec, problem.T)
    signal = assemble_control(h, family, spec)
    t_res = terminal_residual(problem, signal, mm)
    m_res = verify_moments(signal, c, spec, mm)["max_residual"]
    norm = signal.l2_hs_norm(problem.s)
    denom = sobolev_norm(problem.u0, problem.s) + sobolev_norm(problem.u1, problem.s)
    nu = norm / denom if denom > 0 else 0.0
    return SynthesisResult(problem, spec, mm, family, c, signal,
                           t_res, m_res, norm, nu, family.cond)
