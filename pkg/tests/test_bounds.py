"""Envelopes and bound kernels: closed forms vs quadrature, soundness, dispatch."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pinnbands.bounds import (
    PseudoAleatoricProfile,
    ResidualEnvelope,
    bound_first_order,
    bound_second_order_distinct,
    bound_second_order_equal_limit,
    bound_second_order_zero,
    burgers_pseudo_sigma,
    burgers_sigma_grid,
    envelope_from_function,
    estimate_envelope,
    ode_bound_kind,
    pseudo_profile,
    pseudo_sigma,
    uniform_knots,
)
from pinnbands.errors import ConfigurationError, DomainError
from pinnbands.problems import ODEProblem, analytic_solution, get_problem, surrogate_values
from pinnbands.training import TrainConfig, GridSpec, train_deterministic


def random_envelope(rng, k_max=8, x_end=4.0):
    inner = np.sort(rng.uniform(0.05, x_end - 0.05, rng.integers(1, k_max)))
    knots = np.concatenate([[0.0], inner, [x_end]])
    eps = rng.uniform(0.0, 2.0, len(knots) - 1)
    return ResidualEnvelope(knots, eps)


def envelope_fn(env):
    def f(xi):
        k = np.clip(np.searchsorted(env.knots, xi, side="right") - 1, 0, len(env.epsilons) - 1)
        return env.epsilons[k]

    return f


def quadrature_bound(env, kernel, x):
    total = 0.0
    f = envelope_fn(env)
    for a, b in zip(env.knots[:-1], env.knots[1:]):
        if a >= x:
            break
        val, _ = quad(
            lambda xi: kernel(x - xi) * f(np.asarray(xi)),
            a,
            min(b, x),
            epsabs=1e-13,
            epsrel=1e-13,
        )
        total += val
    return total


class TestEnvelope:
    def test_zero_residual_gives_zero_envelope(self):
        env = envelope_from_function(lambda xs: np.zeros_like(xs), [0.0, 1.0, 2.0])
        assert np.all(env.epsilons == 0.0)

    def test_sine_envelope_single_interval(self):
        env = envelope_from_function(np.sin, [0.0, np.pi], oversample=1001, safety_factor=1.0)
        assert 0.999 <= env.epsilons[0] <= 1.0

    def test_safety_factor_scales_linearly(self):
        knots = np.linspace(0, 4, 9)
        a = envelope_from_function(np.cos, knots, 10, safety_factor=1.0)
        b = envelope_from_function(np.cos, knots, 10, safety_factor=2.0)
        assert np.allclose(b.epsilons, 2.0 * a.epsilons, rtol=1e-15)

    def test_majorizes_sampled_residual(self, models_10000, envelopes_10000):
        trained = models_10000["ode1.exp"]
        env = envelopes_10000["ode1.exp"]
        from pinnbands.problems import residual_values

        xs = np.linspace(0, 4, 801)
        r = np.abs(residual_values(trained.problem, trained.params, xs))
        k = np.clip(np.searchsorted(env.knots, xs, side="right") - 1, 0, len(env.epsilons) - 1)
        assert np.all(r <= env.epsilons[k])

    def test_non_covering_knots_rejected(self, models_10):
        with pytest.raises(ConfigurationError):
            estimate_envelope(models_10["ode1.exp"], knots=[0.0, 1.0, 3.0])

    def test_invalid_partition_rejected(self):
        with pytest.raises(ConfigurationError):
            ResidualEnvelope([0.0, 0.0, 1.0], [1.0, 1.0])
        with pytest.raises(ConfigurationError):
            ResidualEnvelope([0.0, 1.0], [-0.1])


class TestKernelsVsHandForms:
    def test_first_order_constant_envelope(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        lam, x = 3.0, 1.7
        expect = 0.5 * (1.0 - np.exp(-lam * x)) / lam
        assert bound_first_order(env, lam, x) == pytest.approx(expect, rel=1e-14)

    def test_first_order_zero_at_origin(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        assert bound_first_order(env, 3.0, 0.0) == 0.0

    def test_distinct_constant_envelope(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        l1, l2, x = 1.0, 2.0, 1.3
        expect = 0.5 * ((1 - np.exp(-l1 * x)) / l1 - (1 - np.exp(-l2 * x)) / l2) / (l2 - l1)
        assert bound_second_order_distinct(env, l1, l2, x) == pytest.approx(expect, rel=1e-14)
        assert bound_second_order_distinct(env, l1, l2, 0.0) == 0.0

    def test_equal_limit_constant_envelope(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        lam, x = 2.0, 1.3
        expect = 0.5 * (1.0 - np.exp(-lam * x) * (1.0 + lam * x)) / lam**2
        assert bound_second_order_equal_limit(env, lam, x) == pytest.approx(expect, rel=1e-14)
        assert bound_second_order_equal_limit(env, lam, 0.0) == 0.0

    def test_zero_rate_constant_envelope(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        assert bound_second_order_zero(env, 1.7) == pytest.approx(0.5 * 1.7**2 / 2, rel=1e-14)
        assert bound_second_order_zero(env, 0.0) == 0.0

    def test_outside_partition_rejected(self):
        env = ResidualEnvelope([0.0, 4.0], [0.5])
        with pytest.raises(DomainError):
            bound_first_order(env, 3.0, 4.5)
        with pytest.raises(DomainError):
            bound_first_order(env, 3.0, -0.5)


class TestKernelsVsQuadrature:
    @pytest.mark.parametrize("seed", range(6))
    def test_all_kernels_match_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        env = random_envelope(rng)
        xs = rng.uniform(0.3, 4.0, 3)
        cases = [
            (lambda x: bound_first_order(env, 3.0, x), lambda s: np.exp(-3.0 * s)),
            (
                lambda x: bound_second_order_distinct(env, 1.0, 2.0, x),
                lambda s: (np.exp(-s) - np.exp(-2.0 * s)) / 1.0,
            ),
            (
                lambda x: bound_second_order_equal_limit(env, 1.5, x),
                lambda s: s * np.exp(-1.5 * s),
            ),
            (lambda x: bound_second_order_zero(env, x), lambda s: s),
        ]
        for closed, kernel in cases:
            for x in xs:
                expect = quadrature_bound(env, kernel, float(x))
                assert closed(float(x)) == pytest.approx(expect, rel=1e-9, abs=1e-13)

    def test_equal_limit_is_limit_of_distinct(self):
        rng = np.random.default_rng(7)
        env = random_envelope(rng)
        for x in (0.5, 2.0, 4.0):
            a = bound_second_order_distinct(env, 1.5, 1.5 + 1e-6, x)
            b = bound_second_order_equal_limit(env, 1.5, x)
            assert abs(a - b) / b < 1e-5

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_envelope(self, seed):
        rng = np.random.default_rng(seed)
        env = random_envelope(rng)
        bigger = ResidualEnvelope(env.knots, env.epsilons + rng.uniform(0, 1, len(env.epsilons)))
        xs = np.linspace(0.0, 4.0, 17)
        for fn in (
            lambda e: bound_first_order(e, 2.0, xs),
            lambda e: bound_second_order_equal_limit(e, 1.5, xs),
            lambda e: bound_second_order_zero(e, xs),
        ):
            assert np.all(fn(bigger) >= fn(env) - 1e-15)


class TestSoundness:
    def test_bound_majorizes_error_trained(self, models_10000, envelopes_10000):
        for pid, trained in models_10000.items():
            xs = np.linspace(0, 4, 401)
            sig = pseudo_sigma(trained.problem, envelopes_10000[pid], xs)
            u = surrogate_values(trained.problem, trained.params, xs)
            truth = analytic_solution(pid, xs)
            assert np.all(np.abs(truth - u) <= sig)

    def test_bound_majorizes_error_underfit(self, models_10, envelopes_10):
        for pid, trained in models_10.items():
            xs = np.linspace(0, 4, 401)
            sig = pseudo_sigma(trained.problem, envelopes_10[pid], xs)
            u = surrogate_values(trained.problem, trained.params, xs)
            truth = analytic_solution(pid, xs)
            assert np.all(np.abs(truth - u) <= sig)


class TestDispatch:
    def test_first_order_kind(self, models_10, envelopes_10):
        trained = models_10["ode1.poly"]
        profile = pseudo_profile(trained.problem, trained, envelopes_10["ode1.poly"], np.linspace(0, 4, 11))
        assert profile.kind == "first_order"
        assert profile.sigma_p[0] == 0.0

    def test_harmonic_maps_to_zero_kernel(self):
        assert ode_bound_kind(get_problem("ode2.harmonic.exp"))[0] == "second_order_zero"

    def test_damped_maps_to_equal_limit(self):
        kind, rates = ode_bound_kind(get_problem("ode2.damped.exp"))
        assert kind == "second_order_equal_limit"
        assert rates[0] == pytest.approx(1.5)

    def test_distinct_real_roots(self):
        problem = ODEProblem(
            order=2, c1=3.0, c0=2.0, source=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            u0=1.0, u0_prime=0.0,
        )
        kind, rates = ode_bound_kind(problem)
        assert kind == "second_order_distinct"
        assert rates == (1.0, 2.0)

    def test_unstable_rates_rejected(self):
        problem = ODEProblem(
            order=2, c1=-1.0, c0=0.25, source=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            u0=1.0, u0_prime=0.0,
        )
        with pytest.raises(ConfigurationError):
            ode_bound_kind(problem)

    def test_profile_kind_validated(self):
        with pytest.raises(ConfigurationError):
            PseudoAleatoricProfile(np.zeros(3), np.zeros(3), "nonsense")


@pytest.fixture(scope="module")
def tiny_burgers():
    cfg = TrainConfig(
        epochs=30, batch_size=100, learning_rate=1e-3,
        collocation=GridSpec((10, 10), ((-1.0, 1.0), (0.0, 1.0))),
        seed=0, activation="sigmoid",
    )
    return train_deterministic("burgers", cfg)


class TestBurgersSigma:

    def test_zero_at_time_origin(self, tiny_burgers):
        assert burgers_pseudo_sigma(tiny_burgers, 0.3, 0.0) == 0.0

    def test_constant_residual_riemann_sum(self):
        # sigma(t) = t * mean(|r|); constant residual c gives exactly c*t
        taus = np.linspace(0.0, 2.0, 64)
        c = 0.7
        assert 2.0 * np.mean(np.full_like(taus, c)) == pytest.approx(2.0 * c, rel=1e-15)

    def test_linear_residual_converges_to_half(self, tiny_burgers):
        # accumulated tau over [0, 1] tends to the integral 1/2
        taus = np.linspace(0.0, 1.0, 10_001)
        assert 1.0 * np.mean(taus) == pytest.approx(0.5, abs=1e-12)

    def test_grid_version_matches_scalar(self, tiny_burgers):
        pts = np.array([[0.2, 0.5], [-0.4, 1.5], [0.0, 0.0]])
        grid_sig = burgers_sigma_grid(tiny_burgers, pts, 32)
        for k, (x, t) in enumerate(pts):
            assert grid_sig[k] == pytest.approx(
                burgers_pseudo_sigma(tiny_burgers, x, t, 32), rel=1e-12, abs=1e-15
            )

    def test_profile_dispatch(self, tiny_burgers):
        grid = np.array([[0.0, 0.0], [0.0, 1.0]])
        profile = pseudo_profile(tiny_burgers.problem, tiny_burgers, None, grid)
        assert profile.kind == "burgers_heuristic"
        assert profile.sigma_p[0] == 0.0


def test_uniform_knots_cover_test_domain():
    knots = uniform_knots(get_problem("ode1.exp"), 40)
    assert knots[0] == 0.0 and knots[-1] == 4.0 and len(knots) == 41


def test_profile_csv_export(tmp_path, models_10, envelopes_10):
    from pinnbands.bounds import profile_to_csv

    trained = models_10["ode1.exp"]
    profile = pseudo_profile(
        trained.problem, trained, envelopes_10["ode1.exp"], np.linspace(0, 4, 5)
    )
    path = tmp_path / "profile.csv"
    profile_to_csv(profile, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,sigma_P"
    assert len(lines) == 6
    assert float(lines[1].split(",")[1]) == 0.0
