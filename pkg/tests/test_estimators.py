import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablefit.core import Sample, StableParams
from stablefit.ecf import ExactCF
from stablefit.errors import (DegenerateFrequencyError, EstimationError,
                              InvalidParamsError, PointSelectionError,
                              ScaleSearchError)
from stablefit.estimators import (EstimationReport, ProposedConfig,
                                  RefinementStep, TwoPoints,
                                  estimate_alpha_gamma, estimate_beta_delta,
                                  eta_of_alpha, fit_bibalan, fit_krutto,
                                  fit_proposed, temp_gamma,
                                  weighted_sensitivity_g)

# alpha grid for exact-recovery checks; skips the log-kernel neighborhood
ALPHA_GRID = (0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9)


class _FlatCF:
    """Stub CF source with constant log-modulus, for error-path tests."""

    principal_branch = False
    n = None
    scale_hint = 1.0

    def __init__(self, level):
        self.level = level

    def log_abs(self, k):
        return self.level

    def imag_log(self, k):
        return 0.0


@pytest.fixture(scope="module")
def heavy_tail_sample():
    rng = np.random.default_rng(7)
    return Sample(rng.standard_t(1.5, size=5000))


class TestTwoPoints:
    def test_valid(self):
        pts = TwoPoints(0.25, 1.0)
        assert pts.k0 == 0.25 and pts.k1 == 1.0

    @pytest.mark.parametrize("k0,k1", [
        (0.5, 0.5), (0.0, 1.0), (-0.2, 1.0), (1.0, math.inf),
        (math.nan, 1.0),
    ])
    def test_invalid(self, k0, k1):
        with pytest.raises(InvalidParamsError):
            TwoPoints(k0, k1)


class TestProposedConfig:
    def test_defaults(self):
        cfg = ProposedConfig()
        assert cfg.xi == 0.5
        assert cfg.delta_alpha == 0.01
        assert cfg.tau == 2.5
        assert cfg.refinement_rounds == 2
        assert cfg.root_tol == 1e-10

    @pytest.mark.parametrize("kw", [
        {"xi": 0.0}, {"xi": 1.0}, {"xi": -0.3}, {"delta_alpha": 0.0},
        {"delta_alpha": -0.01}, {"tau": 0.0}, {"refinement_rounds": 0},
        {"refinement_rounds": 1.5}, {"root_tol": 0.0},
    ])
    def test_invariants_enforced(self, kw):
        with pytest.raises(InvalidParamsError):
            ProposedConfig(**kw)


class TestEstimationReport:
    def _clamp(self):
        from stablefit.core import clamp_to_domain
        return clamp_to_domain(1.5, 0.0, 1.0, 0.0)

    def test_proposed_requires_trace(self):
        c = self._clamp()
        with pytest.raises(InvalidParamsError):
            EstimationReport(params=c.params, method="proposed", points=None,
                             eta=None, gamma_temp=None, iterations=(),
                             clamp=c, n=10)

    def test_zero_form_params_rejected(self):
        from stablefit.core import ParamForm, clamp_to_domain
        c = clamp_to_domain(1.5, 0.0, 1.0, 0.0, param_form=ParamForm.ZERO)
        with pytest.raises(InvalidParamsError):
            EstimationReport(params=c.params, method="krutto", points=None,
                             eta=None, gamma_temp=None, iterations=(),
                             clamp=c, n=10)


class TestEstimateAlphaGamma:
    def test_reference_point(self):
        cf = ExactCF(StableParams(1.5, 0.3, 1.0, 0.7))
        a, g = estimate_alpha_gamma(cf, TwoPoints(0.5, 1.0))
        assert a == pytest.approx(1.5, abs=1e-13)
        assert g == pytest.approx(1.0, abs=1e-13)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    @pytest.mark.parametrize("gamma", (0.1, 1.0, 10.0))
    def test_exact_recovery_grid(self, alpha, gamma):
        cf = ExactCF(StableParams(alpha, -0.4, gamma, 2.0))
        pts = TwoPoints(0.3 / gamma, 1.1 / gamma)
        a, g = estimate_alpha_gamma(cf, pts)
        assert abs(a - alpha) < 1e-12
        assert abs(g - gamma) < 1e-12 * gamma

    def test_order_of_points_is_irrelevant(self):
        cf = ExactCF(StableParams(0.8, 0.0, 2.0, 0.0))
        a1 = estimate_alpha_gamma(cf, TwoPoints(0.2, 0.9))
        a2 = estimate_alpha_gamma(cf, TwoPoints(0.9, 0.2))
        assert a1 == pytest.approx(a2, abs=1e-14)

    def test_nonnegative_log_modulus_rejected(self):
        with pytest.raises(DegenerateFrequencyError):
            estimate_alpha_gamma(_FlatCF(0.0), TwoPoints(0.5, 1.0))

    def test_identical_modulus_rejected(self):
        with pytest.raises(DegenerateFrequencyError):
            estimate_alpha_gamma(_FlatCF(-0.5), TwoPoints(0.5, 1.0))

    def test_coincident_points_rejected(self):
        with pytest.raises(InvalidParamsError):
            TwoPoints(0.5, 0.5)

    @given(
        alpha=st.one_of(st.floats(0.1, 0.95), st.floats(1.05, 2.0)),
        gamma=st.floats(0.05, 20.0),
        ratio=st.floats(0.05, 0.9),
    )
    @settings(max_examples=60, deadline=None)
    def test_recovery_property(self, alpha, gamma, ratio):
        cf = ExactCF(StableParams(alpha, 0.2, gamma, -1.0))
        pts = TwoPoints(ratio / gamma, 1.0 / gamma)
        a, g = estimate_alpha_gamma(cf, pts)
        assert abs(a - alpha) < 1e-9
        assert abs(g - gamma) < 1e-9 * max(1.0, gamma)


class TestEstimateBetaDelta:
    def test_symmetric_centered_gives_zero(self):
        cf = ExactCF(StableParams(1.5, 0.0, 1.0, 0.0))
        b, d = estimate_beta_delta(cf, TwoPoints(0.3, 0.8), 1.5, 1.0)
        assert b == 0.0
        assert d == 0.0

    def test_pure_shift_recovered_exactly(self):
        cf = ExactCF(StableParams(1.5, 0.0, 1.0, -2.5))
        b, d = estimate_beta_delta(cf, TwoPoints(0.3, 0.8), 1.5, 1.0)
        assert b == pytest.approx(0.0, abs=1e-13)
        assert d == pytest.approx(-2.5, abs=1e-12)

    def test_log_kernel_branch_reference(self):
        cf = ExactCF(StableParams(1.0, 0.5, 1.0, 0.0))
        b, d = estimate_beta_delta(cf, TwoPoints(0.25, 1.0), 1.0, 1.0)
        assert b == pytest.approx(0.5, abs=1e-13)
        assert d == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("alpha", ALPHA_GRID)
    def test_exact_recovery_grid(self, alpha):
        cf = ExactCF(StableParams(alpha, 0.7, 2.0, -1.0))
        pts = TwoPoints(0.2, 0.45)
        b, d = estimate_beta_delta(cf, pts, alpha, 2.0)
        assert abs(b - 0.7) < 1e-10
        assert abs(d - (-1.0)) < 1e-10

    def test_branch_threshold(self):
        # just inside the band uses the log-kernel formulas, so exact
        # alpha=1 data is recovered; just outside uses the generic ones
        cf = ExactCF(StableParams(1.0, 0.5, 1.0, 0.3))
        b_in, d_in = estimate_beta_delta(cf, TwoPoints(0.25, 1.0), 1.0051, 1.0)
        b_out, _ = estimate_beta_delta(cf, TwoPoints(0.25, 1.0), 1.05, 1.0)
        assert abs(b_in - 0.5) < 0.01
        assert abs(d_in - 0.3) < 0.01
        assert b_in != b_out

    def test_invalid_inputs(self):
        cf = ExactCF(StableParams(1.5, 0.0, 1.0, 0.0))
        with pytest.raises(InvalidParamsError):
            estimate_beta_delta(cf, TwoPoints(0.3, 0.8), -1.0, 1.0)
        with pytest.raises(InvalidParamsError):
            estimate_beta_delta(cf, TwoPoints(0.3, 0.8), 1.5, 0.0)


class TestWeightedSensitivityG:
    def test_zero_offset_collapses_identically(self):
        for alpha in (0.4, 1.0, 1.7):
            for eta in (0.05, 0.3, 0.9):
                assert weighted_sensitivity_g(alpha, eta,
                                              delta_alpha=0.0) == 0.0

    def test_matches_finite_difference_of_weighted_gap(self):
        cfg = ProposedConfig()

        def gap(alpha, eta):
            return ((math.exp(-eta ** (alpha + cfg.delta_alpha))
                     - math.exp(-eta ** alpha))
                    * math.exp(-cfg.tau * eta))

        h = 1e-6
        for eta in np.arange(0.1, 2.01, 0.1):
            fd = (gap(1.5, eta + h) - gap(1.5, eta - h)) / (2.0 * h)
            g = weighted_sensitivity_g(1.5, float(eta), cfg)
            assert abs(g - fd) < 1e-6

    def test_value_at_unit_frequency(self):
        # g(alpha, 1) = -delta_alpha * exp(-1 - tau) for every alpha
        cfg = ProposedConfig()
        want = -cfg.delta_alpha * math.exp(-1.0 - cfg.tau)
        for alpha in (0.3, 1.0, 1.9):
            assert weighted_sensitivity_g(alpha, 1.0, cfg) == \
                pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.9, 1.3, 1.7, 1.95))
    def test_single_sign_change_below_one(self, alpha):
        etas = np.geomspace(1e-6, 1.0, 4000)
        vals = np.array([weighted_sensitivity_g(alpha, float(e))
                         for e in etas])
        flips = int(np.sum(np.sign(vals[:-1]) != np.sign(vals[1:])))
        assert vals[0] > 0.0
        assert vals[-1] < 0.0
        assert flips == 1


class TestEtaOfAlpha:
    @pytest.mark.parametrize("alpha", (0.2, 0.6, 1.0, 1.4, 1.8, 2.0))
    def test_root_residual(self, alpha):
        eta = eta_of_alpha(alpha)
        assert 0.0 < eta < 1.0
        assert abs(weighted_sensitivity_g(alpha, eta)) <= 1e-10

    @pytest.mark.parametrize("alpha", (0.5, 1.0, 1.5, 2.0))
    def test_returns_the_smaller_root(self, alpha):
        from stablefit.numerics import find_root
        small = eta_of_alpha(alpha)
        # the weighted gap decays again past its minimum, so a second zero
        # sits somewhere above 1
        grid = np.geomspace(1.0, 200.0, 400)
        vals = [weighted_sensitivity_g(alpha, float(e)) for e in grid]
        idx = next(i for i in range(len(grid) - 1)
                   if vals[i] < 0.0 <= vals[i + 1] or vals[i] <= 0.0 < vals[i + 1])
        big = find_root(lambda e: weighted_sensitivity_g(alpha, e),
                        grid[idx], grid[idx + 1]).root
        assert small < big

    def test_curve_is_continuous_and_increasing(self):
        grid = np.arange(0.2, 2.0001, 0.05)
        etas = np.array([eta_of_alpha(float(a)) for a in grid])
        steps = np.diff(etas)
        assert np.all(steps > 0.0)
        assert steps.max() < 0.05

    def test_below_probe_floor_raises(self):
        # at the very bottom of the alpha domain the crossing moves below
        # the scanned range; the documented outcome is the fallback error
        with pytest.raises(PointSelectionError):
            eta_of_alpha(0.01)


class TestTempGamma:
    @pytest.mark.parametrize("alpha", (0.5, 1.0, 1.5, 2.0))
    def test_exact_cf_recovers_gamma(self, alpha):
        beta = 0.3 if alpha != 2.0 else 0.0
        cf = ExactCF(StableParams(alpha, beta, 5.0, -2.0))
        assert temp_gamma(cf) == pytest.approx(5.0, abs=1e-6)

    def test_scale_covariance(self, heavy_tail_sample):
        g1 = temp_gamma(heavy_tail_sample)
        g2 = temp_gamma(Sample(heavy_tail_sample.values * 37.0))
        assert g2 == pytest.approx(37.0 * g1, rel=1e-8)

    def test_constant_sample_fails(self):
        with pytest.raises(ScaleSearchError):
            temp_gamma(Sample([3.0, 3.0, 3.0, 3.0]))

    def test_monte_carlo_band(self, heavy_tail_sample):
        # not a stable sample, but the unit-modulus scale must land at a
        # stable order of magnitude and be deterministic
        g = temp_gamma(heavy_tail_sample)
        assert 0.1 < g < 10.0
        assert temp_gamma(heavy_tail_sample) == g


class TestFitProposed:
    @pytest.mark.parametrize("alpha", (0.5, 0.8, 1.3, 1.7))
    def test_exact_cf_recovery(self, alpha):
        cf = ExactCF(StableParams(alpha, 0.5, 2.0, 1.0))
        rep = fit_proposed(cf)
        a, b, g, d = rep.params.astuple()
        assert abs(a - alpha) < 1e-7
        assert abs(b - 0.5) < 1e-6
        assert abs(g - 2.0) < 1e-7
        assert abs(d - 1.0) < 1e-6

    def test_trace_structure(self):
        cf = ExactCF(StableParams(1.3, 0.0, 1.0, 0.0))
        rep = fit_proposed(cf)
        assert len(rep.iterations) == 3
        assert all(isinstance(s, RefinementStep) for s in rep.iterations)
        assert rep.iterations[0].eta == 0.5
        assert rep.gamma_temp == pytest.approx(1.0, abs=1e-6)
        assert rep.eta == rep.iterations[-1].eta
        assert rep.points.k1 == pytest.approx(1.0 / rep.iterations[1].gamma)

    def test_more_refinement_rounds(self):
        cf = ExactCF(StableParams(0.7, 0.2, 1.0, 0.0))
        rep = fit_proposed(cf, ProposedConfig(refinement_rounds=4))
        assert len(rep.iterations) == 5

    def test_deterministic(self, heavy_tail_sample):
        r1 = fit_proposed(heavy_tail_sample)
        r2 = fit_proposed(heavy_tail_sample)
        assert r1 == r2

    def test_affine_equivariance(self, heavy_tail_sample):
        c, d0 = 3.0, 0.7
        rx = fit_proposed(heavy_tail_sample)
        ry = fit_proposed(Sample(c * heavy_tail_sample.values + d0))
        ax, bx, gx, dx = rx.params.astuple()
        ay, by, gy, dy = ry.params.astuple()
        assert abs(ay - ax) < 1e-6
        assert abs(by - bx) < 1e-6
        assert abs(gy - c * gx) < 1e-6 * c * gx
        assert abs(dy - (c * dx + d0)) < 1e-6
        assert ry.points.k0 == pytest.approx(rx.points.k0 / c, rel=1e-9)
        assert ry.eta == pytest.approx(rx.eta, abs=1e-9)

    def test_error_carries_partial_trace(self):
        try:
            fit_proposed(Sample([5.0] * 50))
        except ScaleSearchError as e:
            assert e.trace == ()
        else:
            pytest.fail("constant sample should not fit")

    def test_beta_clamped_when_phase_inflated(self):
        # inflating the phase drives the raw beta past 1; the report must
        # clip it and record the excursion
        base = ExactCF(StableParams(1.5, 0.8, 1.0, 0.0))

        class Inflated:
            principal_branch = False
            n = None
            scale_hint = 1.0

            def log_abs(self, k):
                return base.log_abs(k)

            def imag_log(self, k):
                return 1.5 * base.imag_log(k)

        rep = fit_proposed(Inflated())
        assert rep.params.beta == 1.0
        assert "beta" in rep.clamp.clamped_fields
        assert rep.clamp.raw_values["beta"] > 1.0


class TestFitKrutto:
    def test_exact_levels_alpha_one(self):
        cf = ExactCF(StableParams(1.0, 0.2, 1.0, 0.3))
        rep = fit_krutto(cf)
        assert rep.points.k0 == pytest.approx(0.1, abs=1e-9)
        assert rep.points.k1 == pytest.approx(0.5, abs=1e-9)

    def test_exact_levels_alpha_three_halves(self):
        cf = ExactCF(StableParams(1.5, 0.0, 1.0, 0.0))
        rep = fit_krutto(cf)
        assert rep.points.k0 == pytest.approx(0.1 ** (2.0 / 3.0), abs=1e-9)
        assert rep.points.k1 == pytest.approx(0.5 ** (2.0 / 3.0), abs=1e-9)
        a, b, g, d = rep.params.astuple()
        assert abs(a - 1.5) < 1e-8 and abs(g - 1.0) < 1e-8
        assert abs(b) < 1e-8 and abs(d) < 1e-8

    def test_report_shape(self, heavy_tail_sample):
        rep = fit_krutto(heavy_tail_sample)
        assert rep.method == "krutto"
        assert rep.eta is None and rep.gamma_temp is None
        assert rep.iterations == ()
        assert rep.n == heavy_tail_sample.n

    def test_unreachable_level_names_it(self):
        with pytest.raises(EstimationError, match="-0.1"):
            fit_krutto(_FlatCF(-0.05))

    def test_scale_equivariance(self, heavy_tail_sample):
        c = 37.0
        r1 = fit_krutto(heavy_tail_sample)
        r2 = fit_krutto(Sample(c * heavy_tail_sample.values))
        assert r2.params.alpha == pytest.approx(r1.params.alpha, abs=1e-7)
        assert r2.params.gamma == pytest.approx(c * r1.params.gamma,
                                                rel=1e-7)


class TestFitBibalan:
    def test_unit_scale_reads_c_directly(self):
        cf = ExactCF(StableParams(1.8, 0.5, 1.0, 0.0))
        rep = fit_bibalan(cf)
        a, b, g, d = rep.params.astuple()
        assert abs(a - 1.8) < 1e-8
        assert abs(b - 0.5) < 1e-7
        assert abs(g - 1.0) < 1e-8
        assert abs(d) < 1e-8
        assert rep.points.k1 == 1.0

    def test_recovery_away_from_unit_scale(self):
        cf = ExactCF(StableParams(1.4, -0.3, 2.0, 0.5))
        rep = fit_bibalan(cf)
        a, b, g, d = rep.params.astuple()
        assert abs(a - 1.4) < 1e-7
        assert abs(b - (-0.3)) < 1e-6
        assert abs(g - 2.0) < 1e-7
        assert abs(d - 0.5) < 1e-6

    def test_k0_matches_dense_grid_argmax(self):
        cf = ExactCF(StableParams(1.2, 0.0, 1.0, 0.0))
        rep = fit_bibalan(cf)
        ks = np.linspace(1e-6, 1.0, 2_000_001)
        gap = np.abs(np.exp(-ks * ks) - np.exp(-ks))
        k_best = ks[int(np.argmax(gap))]
        assert rep.points.k0 == pytest.approx(k_best, abs=1e-5)

    def test_degenerate_scale_suggests_rescaling(self):
        with pytest.raises(EstimationError, match="100"):
            fit_bibalan(_FlatCF(0.0))

    def test_report_shape(self, heavy_tail_sample):
        rep = fit_bibalan(heavy_tail_sample)
        assert rep.method == "bibalan"
        assert rep.iterations == ()
        assert 0.0 < rep.points.k0 < 1.0


class TestCrossMethodOnData:
    def test_all_methods_land_in_same_region(self, heavy_tail_sample):
        fits = [fit_proposed(heavy_tail_sample),
                fit_krutto(heavy_tail_sample),
                fit_bibalan(heavy_tail_sample)]
        alphas = [f.params.alpha for f in fits]
        gammas = [f.params.gamma for f in fits]
        assert max(alphas) - min(alphas) < 0.25
        assert max(gammas) / min(gammas) < 1.3
        for f in fits:
            assert abs(f.params.beta) < 0.2
            assert abs(f.params.delta) < 0.2
