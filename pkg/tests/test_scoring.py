"""Tests for CRPS, LogS and PIT."""

import math
from typing import Any

import numpy as np
import pytest
from pydantic import ValidationError

from src.distributions import (
    CensoredGevParams,
    CsgParams,
    LogNormalParams,
    MixtureSpec,
    TruncatedNormalParams,
)
from src.errors import GridError, ParameterDomainError
from src.scoring import (
    IntegrationGrid,
    ScoreKind,
    ScoreValue,
    crps_closed,
    crps_cross_term,
    crps_numeric,
    default_grid,
    ensemble_crps,
    logs,
    pit,
    randomized_pit,
)
from src.scoring import kernels as sk

CASES = [
    (TruncatedNormalParams(mu=3.0, sigma=1.2), 0.0),
    (TruncatedNormalParams(mu=3.0, sigma=1.2), 4.7),
    (TruncatedNormalParams(mu=-1.0, sigma=2.0), 0.3),
    (LogNormalParams(mu=1.0, sigma=0.5), 0.0),
    (LogNormalParams(mu=1.0, sigma=0.5), 2.2),
    (CsgParams(kappa=0.8, theta=2.5, delta=0.4), 0.0),
    (CsgParams(kappa=2.0, theta=1.0, delta=0.5), 3.1),
    (CensoredGevParams(mu=1.0, sigma=1.5, xi=0.2), 0.0),
    (CensoredGevParams(mu=1.0, sigma=1.5, xi=0.2), 6.0),
    (CensoredGevParams(mu=2.0, sigma=1.0, xi=-0.15), 1.4),
    (CensoredGevParams(mu=0.5, sigma=1.0, xi=0.0), 2.0),
]


def _random_law(family: str, rng: np.random.Generator) -> Any:
    match family:
        case "tn":
            return TruncatedNormalParams(mu=rng.uniform(-2.0, 8.0), sigma=rng.uniform(0.5, 3.0))
        case "ln":
            return LogNormalParams(mu=rng.uniform(-0.5, 2.0), sigma=rng.uniform(0.2, 1.0))
        case "csg":
            return CsgParams(
                kappa=rng.uniform(0.8, 4.0),
                theta=rng.uniform(0.5, 2.5),
                delta=rng.uniform(0.1, 1.5),
            )
        case _:
            return CensoredGevParams(
                mu=rng.uniform(0.0, 4.0), sigma=rng.uniform(0.5, 2.5), xi=rng.uniform(-0.2, 0.5)
            )


class TestClosedFormCrps:
    """Closed forms against the split trapezoidal rule."""

    @pytest.mark.parametrize(("law", "x"), CASES, ids=lambda v: str(v)[:24])
    def test_closed_form_matches_numeric(self, law: Any, x: float) -> None:
        """Both routes agree on the default fine grid."""
        closed = crps_closed(law, x)
        numeric = crps_numeric(law, x, default_grid(law, x))
        assert closed.kind == ScoreKind.CRPS
        assert closed.value == pytest.approx(numeric.value, abs=1e-5)

    def test_reference_value_for_untruncated_normal(self) -> None:
        """Far from zero the TN CRPS at the center is sigma (2 phi(0) - 1/sqrt(pi))."""
        value = crps_closed(TruncatedNormalParams(mu=10.0, sigma=1.0), 10.0).value
        expected = 2.0 / math.sqrt(2.0 * math.pi) - 1.0 / math.sqrt(math.pi)
        assert value == pytest.approx(expected, abs=1e-10)

    def test_kernels_vectorize(self) -> None:
        """Array kernels match scalar calls element by element."""
        y = np.array([0.5, 1.0, 4.0])
        mu = np.array([1.0, 2.0, 3.0])
        sigma = np.array([0.5, 1.0, 2.0])
        values = sk.tn_crps(y, mu, sigma)
        for i in range(3):
            law = TruncatedNormalParams(mu=mu[i], sigma=sigma[i])
            assert values[i] == pytest.approx(crps_closed(law, y[i]).value, rel=1e-12)

    def test_mixture_has_no_closed_form(self) -> None:
        """Mixtures are scored numerically."""
        mixture = MixtureSpec(
            components=[
                TruncatedNormalParams(mu=3.0, sigma=1.0),
                LogNormalParams(mu=1.0, sigma=0.4),
            ],
            weights=[0.5, 0.5],
        )
        with pytest.raises(NotImplementedError):
            crps_closed(mixture, 2.0)
        assert crps_numeric(mixture, 2.0, default_grid(mixture, 2.0)).value > 0.0

    def test_gev_without_mean_rejected(self) -> None:
        """The CRPS of a GEV law with xi >= 1 is infinite."""
        with pytest.raises(ParameterDomainError):
            crps_closed(CensoredGevParams(mu=1.0, sigma=1.0, xi=1.0), 2.0)



    def test_strongly_negative_location_stays_accurate(self) -> None:
        """A TN law whose normalizer underflows in float64 still scores correctly."""
        law = TruncatedNormalParams(mu=-8.0, sigma=1.0)
        value = crps_closed(law, 0.5).value
        assert value == pytest.approx(0.32187, abs=1e-4)
        assert value == pytest.approx(
            crps_numeric(law, 0.5, default_grid(law, 0.5)).value, abs=1e-6
        )

    @pytest.mark.parametrize("ratio", [-40.0, -30.0, -12.0, -3.0, -1e-9, 0.0, 1e-9, 5.0])
    def test_tn_closed_form_finite_and_nonnegative(self, ratio: float) -> None:
        """mu / sigma far below zero never yields NaN or a negative score."""
        y = np.array([0.0, 0.01, 0.1, 1.0, 10.0])
        values = sk.tn_crps(y, ratio * 2.0, 2.0)
        assert np.all(np.isfinite(values))
        assert np.all(values >= 0.0)

    def test_tn_closed_form_continuous_at_zero_location(self) -> None:
        """Both branches meet where mu / sigma changes sign."""
        y = np.array([0.0, 0.4, 3.0])
        below = sk.tn_crps(y, -1e-10, 1.3)
        above = sk.tn_crps(y, 1e-10, 1.3)
        np.testing.assert_allclose(below, above, atol=1e-9)

    @pytest.mark.parametrize("family", ["tn", "ln", "csg", "gev"])
    def test_random_laws_match_numeric(self, family: str) -> None:
        """A thousand random laws per family agree with quadrature to 1e-6."""
        rng = np.random.default_rng(8_191)
        worst = 0.0
        for _ in range(1_000):
            law = _random_law(family, rng)
            x = max(float(law.quantile(rng.uniform(0.01, 0.99))), 0.0)
            if rng.uniform() < 0.2:
                x = 0.0
            closed = crps_closed(law, x).value
            numeric = crps_numeric(law, x, default_grid(law, x)).value
            worst = max(worst, abs(closed - numeric))
        assert worst < 1e-6


class TestNumericCrps:
    """Grid handling of the numeric CRPS."""

    def test_default_grid_covers_observation(self) -> None:
        """The upper bound is an integer at or above x and the upper quantile."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        grid = default_grid(law, 17.3, n_points=101)
        assert grid.upper == 18.0
        assert grid.lower == 0.0
        assert grid.n_points == 101

    def test_observation_outside_grid_rejected(self) -> None:
        """The split integral needs x on the grid."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        grid = IntegrationGrid(lower=0.0, upper=5.0, n_points=101)
        with pytest.raises(GridError):
            crps_numeric(law, 7.0, grid)

    def test_cross_term_of_law_with_itself_is_crps(self) -> None:
        """M(F, F) reduces to the CRPS integrand."""
        law = LogNormalParams(mu=0.7, sigma=0.6)
        grid = default_grid(law, 1.5)
        assert crps_cross_term(law, law, 1.5, grid) == pytest.approx(
            crps_numeric(law, 1.5, grid).value, rel=1e-12
        )

    def test_accepts_plain_callable(self) -> None:
        """Any vectorized CDF callable can be scored."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        grid = default_grid(law, 1.0)
        assert crps_numeric(law.cdf, 1.0, grid).value == pytest.approx(
            crps_numeric(law, 1.0, grid).value
        )

    def test_grid_bounds_validated(self) -> None:
        """An empty interval is not a grid."""
        with pytest.raises(ValidationError):
            IntegrationGrid(lower=2.0, upper=2.0)



    def test_bulk_end_validated(self) -> None:
        """The uniform part must end inside the grid."""
        with pytest.raises(ValidationError):
            IntegrationGrid(lower=0.0, upper=5.0, bulk_upper=6.0)
        with pytest.raises(ValidationError):
            IntegrationGrid(lower=0.0, upper=5.0, bulk_upper=0.0)

    def test_default_grid_is_stretched(self) -> None:
        """Nodes are uniform up to the bulk quantile and widen beyond it."""
        law = CensoredGevParams(mu=1.0, sigma=2.0, xi=0.6)
        grid = default_grid(law, 3.0, n_points=501)
        nodes = grid.nodes()
        steps = np.diff(nodes)
        assert grid.bulk_upper is not None
        assert grid.bulk_upper < grid.upper
        assert nodes[0] == 0.0
        assert nodes[-1] == grid.upper
        assert np.all(steps > 0.0)
        assert steps[0] == pytest.approx(steps[10])
        assert steps[-1] > 100.0 * steps[0]

    def test_stretched_nodes_without_tail_are_uniform(self) -> None:
        """A bulk end at the upper end gives the plain linspace."""
        np.testing.assert_allclose(
            sk.stretched_nodes(0.0, 4.0, 4.0, 9), np.linspace(0.0, 4.0, 9)
        )

    def test_heavy_tailed_cross_term(self) -> None:
        """A GEV law with a long tail is integrated far enough on a modest grid."""
        gev = CensoredGevParams(mu=1.0, sigma=2.0, xi=0.6)
        csg = CsgParams(kappa=0.8, theta=2.5, delta=0.4)
        fine = crps_cross_term(gev, csg, 3.0, default_grid(gev, 3.0))
        coarse = crps_cross_term(gev, csg, 3.0, default_grid(gev, 3.0, n_points=501))
        assert fine == pytest.approx(0.9496, abs=1e-3)
        assert coarse == pytest.approx(fine, abs=0.05)

    def test_error_shrinks_when_grid_is_refined(self) -> None:
        """Successive halvings of a uniform grid change the result less and less."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        values = [
            crps_numeric(law, 2.5, IntegrationGrid(lower=0.0, upper=10.0, n_points=n)).value
            for n in (41, 81, 161, 321, 641)
        ]
        changes = np.abs(np.diff(values))
        assert np.all(np.diff(changes) < 0.0)
        assert changes[-1] < 1e-5
        assert values[-1] == pytest.approx(crps_closed(law, 2.5).value, abs=1e-6)


class TestLogScore:
    """Logarithmic score with point masses."""

    def test_continuous_density(self) -> None:
        """LogS is -log f(x) for a continuous law."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        assert logs(law, 2.5).value == pytest.approx(-math.log(float(law.pdf(2.5))))

    def test_censored_zero_uses_atom(self) -> None:
        """At zero a censored law is scored by its point mass."""
        law = CsgParams(kappa=1.0, theta=1.0, delta=1.0)
        assert logs(law, 0.0).value == pytest.approx(-math.log(law.point_mass_at_zero()))

    def test_zero_density_gives_infinite_score(self) -> None:
        """A log-normal forecast has zero density at zero."""
        score = logs(LogNormalParams(mu=0.0, sigma=1.0), 0.0)
        assert score.kind == ScoreKind.LOGS
        assert score.value == math.inf
        assert not score.is_finite

    def test_crps_must_be_finite_and_nonnegative(self) -> None:
        """CRPS score values are validated."""
        with pytest.raises(ValidationError):
            ScoreValue(value=-0.1, kind=ScoreKind.CRPS)
        with pytest.raises(ValidationError):
            ScoreValue(value=math.inf, kind=ScoreKind.CRPS)


class TestPit:
    """Plain and randomized PIT."""

    def test_pit_is_cdf_value(self) -> None:
        """PIT of a continuous law is F(x)."""
        law = TruncatedNormalParams(mu=2.0, sigma=1.0)
        assert pit(law, 2.0) == pytest.approx(float(law.cdf(2.0)))

    def test_randomized_pit_at_zero_scales_atom(self) -> None:
        """A zero observation gets u * F(0)."""
        law = CsgParams(kappa=1.0, theta=1.0, delta=1.0)
        mass = law.point_mass_at_zero()
        assert randomized_pit(law, 0.0, 0.25) == pytest.approx(0.25 * mass)
        assert randomized_pit(law, 0.5, 0.25) == pytest.approx(float(law.cdf(0.5)))

    def test_randomized_pit_rejects_bad_draw(self) -> None:
        """The uniform draw must lie in [0, 1]."""
        with pytest.raises(ParameterDomainError):
            randomized_pit(LogNormalParams(mu=0.0, sigma=1.0), 0.0, 1.5)


class TestEnsembleCrps:
    """CRPS of the empirical ensemble law."""

    def test_matches_pairwise_definition(self, rng: np.random.Generator) -> None:
        """Sorted-sum identity equals the O(M^2) definition."""
        members = rng.gamma(2.0, 1.5, size=11)
        x = 2.7
        brute = np.mean(np.abs(members - x)) - 0.5 * np.mean(
            np.abs(members[:, None] - members[None, :])
        )
        assert ensemble_crps(members, x) == pytest.approx(brute, rel=1e-12)

    def test_single_member_is_absolute_error(self) -> None:
        """A one-member ensemble scores |f - x|."""
        assert ensemble_crps([3.0], 1.0) == pytest.approx(2.0)

    def test_vectorized_rows(self, rng: np.random.Generator) -> None:
        """Rows of the kernel match scalar calls."""
        members = rng.gamma(2.0, 1.0, size=(4, 6))
        obs = np.array([0.0, 1.0, 2.0, 5.0])
        values = sk.ensemble_crps(members, obs)
        for i in range(4):
            assert values[i] == pytest.approx(ensemble_crps(members[i], obs[i]))
