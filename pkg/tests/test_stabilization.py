import numpy as np
import pytest

import benctrl.spectrum as spectrum_mod
from benctrl._closedform import weighted_gramian, weighted_gramian_quadrature
from benctrl.cli import random_state
from benctrl.errors import ConfigurationError
from benctrl.operators import build_bump, evolve_free, gg_star_matrix, m_matrix
from benctrl.spectral import TWO_PI, TorusFunction, mean
from benctrl.stabilization import (build_L_lambda, energy_identity_defect,
                                   estimate_decay_rate, feedback_gramian,
                                   feedback_none, feedback_simple,
                                   norm_history, observability_constant,
                                   simulate_closed_loop, spectral_abscissa)


def setup(n=8, alpha=1.0, mu=0.0, kind="raised_cosine"):
    spec = spectrum_mod.analyze(n, alpha, mu)
    mm = m_matrix(build_bump(kind, kmax=2 * n), n)
    return spec, mm


class TestLLambda:
    def test_diagonal_entries_closed_form(self):
        spec, mm = setup(kind="uniform")
        lam, T = 1.3, 0.8
        L = build_L_lambda(mm, spec, lam, T)
        gg = gg_star_matrix(mm)
        expect = np.diag(gg).real * (1.0 - np.exp(-2 * lam * T)) / (2 * lam)
        assert np.abs(np.diag(L.matrix).real - expect).max() <= 1e-14

    def test_uniform_is_diagonal(self):
        spec, mm = setup(kind="uniform")
        L = build_L_lambda(mm, spec, 1.0, 1.0)
        off = L.matrix - np.diag(np.diag(L.matrix))
        assert np.abs(off).max() <= 1e-15

    def test_small_lambda_limit_recovers_unweighted(self):
        spec, mm = setup()
        gg = gg_star_matrix(mm)
        L = build_L_lambda(mm, spec, 1e-8, 1.0)
        unweighted = weighted_gramian(gg, spec.lambdas, 1.0, rate=0.0)
        assert np.abs(L.matrix - unweighted).max() <= 1e-7
        quad = weighted_gramian_quadrature(gg, spec.lambdas, 1.0, rate=0.0,
                                           total_nodes=2048)
        assert np.abs(unweighted - quad).max() <= 1e-9

    def test_closed_form_vs_quadrature(self):
        spec, mm = setup()
        gg = gg_star_matrix(mm)
        lam, T = 0.7, 1.0
        L = build_L_lambda(mm, spec, lam, T)
        quad = weighted_gramian_quadrature(gg, spec.lambdas, T, rate=lam,
                                           total_nodes=1024)
        scale = np.abs(L.matrix).max()
        assert np.abs(L.matrix - quad).max() <= 1e-9 * scale

    def test_positive_definite_on_mean_zero(self):
        spec, mm = setup(n=16)
        L = build_L_lambda(mm, spec, 2.0, 1.0)
        assert L.min_eig_meanzero > 0
        assert L.cond < 1e12

    def test_validation(self):
        spec, mm = setup()
        with pytest.raises(ConfigurationError):
            build_L_lambda(mm, spec, -1.0, 1.0)
        with pytest.raises(ConfigurationError):
            build_L_lambda(mm, spec, 1.0, 0.0)


class TestSimpleFeedback:
    def test_uniform_closed_loop_eigenvalues(self):
        spec, mm = setup(kind="uniform")
        law = feedback_simple(mm, spec)
        nz = spec.wavenumbers != 0
        ev = np.sort_complex(np.linalg.eigvals(law.closed_loop[np.ix_(nz, nz)]))
        lam_nz = spec.lambdas[nz]
        expect = np.sort_complex(-1.0 / TWO_PI**2 + 1j * lam_nz)
        assert np.abs(ev - expect).max() <= 1e-12

    def test_abscissa_negative(self):
        for alpha, mu in [(1.0, 0.0), (0.1, 0.3), (7 / 3, 0.0)]:
            spec, mm = setup(n=12, alpha=alpha, mu=mu)
            law = feedback_simple(mm, spec)
            assert spectral_abscissa(law) < 0

    def test_energy_identity(self):
        spec, mm = setup(n=16)
        law = feedback_simple(mm, spec)
        u0 = random_state(3, 16, 1.0)
        times = np.linspace(1.0, 400.0, 20)
        defects = energy_identity_defect(u0, law, times)
        assert defects.max() <= 1e-10  # u0 has unit H^1 norm, L2 norm < 1

    def test_monotone_decay(self):
        spec, mm = setup(n=12)
        law = feedback_simple(mm, spec)
        u0 = random_state(9, 12, 0.0)
        hist = norm_history(u0, law, np.linspace(0, 50, 40))
        norms = hist[0.0]
        assert np.all(norms[1:] <= norms[:-1] * (1 + 1e-12))

    def test_zero_stays_zero(self):
        spec, mm = setup()
        law = feedback_simple(mm, spec)
        traj = simulate_closed_loop(TorusFunction.zero(8), law, [0.0, 1.0, 5.0])
        assert all(np.abs(u.coeffs).max() == 0 for u in traj)

    def test_constant_state_invariant(self):
        spec, mm = setup()
        c = np.zeros(17, dtype=complex)
        c[8] = 0.7
        u0 = TorusFunction(8, c, real_flag=True)
        traj = simulate_closed_loop(u0, feedback_simple(mm, spec), [0.5, 2.0])
        for u in traj:
            assert np.abs(u.coeffs - u0.coeffs).max() <= 1e-14

    def test_mean_invariant(self):
        spec, mm = setup()
        u0 = random_state(4, 8, 0.0)
        u0 = u0.with_coeffs(u0.coeffs + np.eye(1, 17, 8)[0] * 0.3)
        for u in simulate_closed_loop(u0, feedback_simple(mm, spec), [1.0, 10.0]):
            assert abs(mean(u) - 0.3) <= 1e-12


class TestGramianFeedback:
    def test_uniform_per_mode_rate(self):
        spec, mm = setup(kind="uniform")
        lam, T = 1.0, 1.0
        L = build_L_lambda(mm, spec, lam, T)
        law = feedback_gramian(L, mm, spec)
        nz = spec.wavenumbers != 0
        rates = np.diag(law.matrix)[nz].real
        expect = 2 * lam / (1.0 - np.exp(-2 * lam * T))
        assert np.abs(rates - expect).max() <= 1e-12
        assert expect >= 2 * lam

    def test_prescribed_rate_achieved(self):
        spec, mm = setup(n=16)
        for lam in (0.5, 1.0, 2.0):
            L = build_L_lambda(mm, spec, lam, 1.0)
            law = feedback_gramian(L, mm, spec)
            assert spectral_abscissa(law) <= -lam * (1 - 1e-6)

    def test_mode_zero_annihilated(self):
        spec, mm = setup()
        L = build_L_lambda(mm, spec, 1.0, 1.0)
        law = feedback_gramian(L, mm, spec)
        assert np.abs(law.matrix[:, 8]).max() == 0.0
        assert np.abs(law.matrix[8, :]).max() == 0.0


class TestSimulation:
    def test_zero_feedback_matches_free_flow(self):
        spec, _ = setup(alpha=0.7, mu=0.2)
        u0 = random_state(12, 8, 0.0)
        for t, u in zip([0.3, 1.1], simulate_closed_loop(
                u0, feedback_none(spec), [0.3, 1.1])):
            free = evolve_free(u0, t, 0.7, 0.2)
            assert np.abs(u.coeffs - free.coeffs).max() <= 1e-10

    def test_requires_law(self):
        with pytest.raises(ConfigurationError):
            simulate_closed_loop(TorusFunction.zero(4), None, [1.0])


class TestDecayFit:
    def test_exact_synthetic_data(self):
        t = np.linspace(0, 5, 50)
        fit = estimate_decay_rate(t, 3.0 * np.exp(-2.0 * t))
        assert fit.rate == pytest.approx(2.0, abs=1e-10)
        assert fit.M == pytest.approx(3.0, abs=1e-10)

    def test_noise_floor_excluded(self):
        t = np.linspace(0, 30, 60)
        norms = 1e-10 * np.exp(-t)          # tail dives below 1e-13
        fit = estimate_decay_rate(t, norms)
        assert fit.n_used < len(t)
        assert fit.rate == pytest.approx(1.0, rel=1e-6)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            estimate_decay_rate([0, 1, 2], [1, 0.1, 0.01])

    def test_simple_law_rate_matches_abscissa(self):
        spec, mm = setup(n=16)
        law = feedback_simple(mm, spec)
        a = spectral_abscissa(law)
        u0 = random_state(23, 16, 0.0)
        times = np.linspace(0.0, 12.0 / abs(a), 160)
        hist = norm_history(u0, law, times)
        fit = estimate_decay_rate(hist["times"], hist[0.0])
        assert fit.rate == pytest.approx(-a, rel=0.05)

    def test_gramian_law_rate_at_least_prescribed(self):
        spec, mm = setup(n=16)
        lam = 1.0
        law = feedback_gramian(build_L_lambda(mm, spec, lam, 1.0), mm, spec)
        a = spectral_abscissa(law)
        u0 = random_state(29, 16, 0.0)
        times = np.linspace(0.0, 12.0 / abs(a), 160)
        hist = norm_history(u0, law, times)
        fit = estimate_decay_rate(hist["times"], hist[0.0])
        assert fit.rate >= 0.99 * lam


class TestObservability:
    def test_uniform_closed_form(self):
        spec, mm = setup(kind="uniform")
        for T in (0.5, 1.0, 2.0):
            delta, _ = observability_constant(mm, spec, T)
            assert delta == pytest.approx(np.sqrt(T) / TWO_PI, rel=1e-12)

    def test_monotone_in_horizon(self):
        spec, mm = setup(n=16)
        d1, _ = observability_constant(mm, spec, 0.5)
        d2, _ = observability_constant(mm, spec, 1.0)
        assert d1 <= d2

    def test_positive_at_short_horizons(self):
        spec, mm = setup(n=16)
        for T in (0.01, 0.1, 1.0):
            delta, minimizer = observability_constant(mm, spec, T)
            assert delta > 0
            assert abs(mean(minimizer)) == 0.0
