import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings
from hypothesis import strategies as st
from pydantic import ValidationError

from carnot_kit.backends import make_backend
from carnot_kit.data_models.hopf_lax import DatumParams
from carnot_kit.data_models.hopf_lax import HopfLaxOptions
from carnot_kit.data_models.hopf_lax import HopfLaxProblem
from carnot_kit.data_models.hopf_lax import InitialDatum
from carnot_kit.enums import InitialDatumKindEnum
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.exceptions import DimensionMismatchError
from carnot_kit.exceptions import DomainError
from carnot_kit.exceptions import NonSmoothLocusError
from carnot_kit.exceptions import PhiValidationError
from carnot_kit.fields import d0_field
from carnot_kit.groups import get_group
from carnot_kit.heisenberg import HEISENBERG
from carnot_kit.heisenberg import d0_exact
from carnot_kit.hopf_lax import ball_minimum
from carnot_kit.hopf_lax import datum_field
from carnot_kit.hopf_lax import dense_oracle_options
from carnot_kit.hopf_lax import dist_to_set
from carnot_kit.hopf_lax import dist_to_set_field
from carnot_kit.hopf_lax import eikonal_residual
from carnot_kit.hopf_lax import hopf_lax_field
from carnot_kit.hopf_lax import hopf_lax_value
from carnot_kit.hopf_lax import legendre_conjugate
from carnot_kit.hopf_lax import legendre_conjugate_many
from carnot_kit.hopf_lax import phi_value
from carnot_kit.hopf_lax import power_phi
from carnot_kit.hopf_lax import quadratic_phi
from carnot_kit.hopf_lax import search_radius
from carnot_kit.hopf_lax import tabulated_phi

FAST = HopfLaxOptions(samples=512, refine_seeds=2, max_refine_evaluations=200)
QUADRATIC_TABLE = [(tau, 0.5 * tau * tau) for tau in np.linspace(0, 4, 41)]
TABULATED = tabulated_phi(QUADRATIC_TABLE)
ALPHAS = st.floats(min_value=1.05, max_value=2.0)
ARGUMENTS = st.floats(min_value=0.0, max_value=5.0)


def distance_datum(cap: float | None = None) -> InitialDatum:
    return InitialDatum(
        kind=InitialDatumKindEnum.DISTANCE, params=DatumParams(cap=cap)
    )


def constant_datum(value: float) -> InitialDatum:
    return InitialDatum(
        kind=InitialDatumKindEnum.CONSTANT, params=DatumParams(value=value)
    )


class TestPhi:

    def test_power_validation(self) -> None:
        with pytest.raises(PhiValidationError):
            power_phi(1.0)
        with pytest.raises(PhiValidationError):
            power_phi(2.5)

    def test_values(self) -> None:
        assert phi_value(quadratic_phi(), 3.0) == 4.5
        assert phi_value(power_phi(1.5), 4.0) == pytest.approx(8.0 / 1.5)

    def test_tabulated_is_infinite_past_the_last_node(self) -> None:
        phi = tabulated_phi(QUADRATIC_TABLE)
        assert phi_value(phi, 2.0) == pytest.approx(2.0, abs=1e-3)
        assert phi_value(phi, 5.0) == math.inf

    def test_tabulated_must_be_convex(self) -> None:
        with pytest.raises(PhiValidationError):
            tabulated_phi([(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)])

    def test_tabulated_must_start_at_the_origin(self) -> None:
        with pytest.raises(PhiValidationError):
            tabulated_phi([(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)])

    def test_tabulated_needs_three_nodes(self) -> None:
        with pytest.raises(PhiValidationError):
            tabulated_phi([(0.0, 0.0), (1.0, 1.0)])

    def test_negative_phi_values_are_rejected(self) -> None:
        with pytest.raises(DomainError):
            phi_value(quadratic_phi(), -1.0)


class TestConjugate:

    def test_closed_forms(self) -> None:
        assert legendre_conjugate(quadratic_phi(), 3.0) == 4.5
        # alpha = 3/2 has conjugate exponent 3
        assert legendre_conjugate(power_phi(1.5), 2.0) == pytest.approx(
            8.0 / 3.0
        )

    def test_tabulated_matches_the_quadratic(self) -> None:
        # Given tau^2 / 2 on nodes of [0, 4]
        phi = tabulated_phi(QUADRATIC_TABLE)

        # Then the conjugate is s^2 / 2 where the maximizer is interior
        for s in (0.0, 0.5, 1.0, 2.5):
            assert legendre_conjugate(phi, s) == pytest.approx(
                0.5 * s * s, abs=1e-3
            )

    def test_tabulated_conjugate_grows_linearly_past_the_table(self) -> None:
        # Past the last slope the sup sits at the last node: 10 * 4 - 8
        phi = tabulated_phi(QUADRATIC_TABLE)
        assert legendre_conjugate(phi, 10.0) == pytest.approx(32.0)

    def test_rejects_negative_arguments(self) -> None:
        with pytest.raises(DomainError):
            legendre_conjugate(quadratic_phi(), -0.1)
        with pytest.raises(DomainError):
            legendre_conjugate_many(quadratic_phi(), [1.0, math.inf])

    def test_vectorised(self) -> None:
        values = legendre_conjugate_many(power_phi(2.0), [0.0, 1.0, 2.0])
        assert values.tolist() == pytest.approx([0.0, 0.5, 2.0])


class TestFenchelYoung:

    @settings(max_examples=100, deadline=None)
    @given(alpha=ALPHAS, tau=ARGUMENTS, s=ARGUMENTS)
    def test_power_inequality(
        self, alpha: float, tau: float, s: float
    ) -> None:
        phi = power_phi(alpha)
        total = phi_value(phi, tau) + legendre_conjugate(phi, s)
        assert total >= s * tau - 1e-9 * (1.0 + s * tau)

    @settings(max_examples=100, deadline=None)
    @given(tau=ARGUMENTS, s=ARGUMENTS)
    def test_quadratic_inequality(self, tau: float, s: float) -> None:
        phi = quadratic_phi()
        total = phi_value(phi, tau) + legendre_conjugate(phi, s)
        assert total >= s * tau - 1e-9 * (1.0 + s * tau)

    @settings(max_examples=50, deadline=None)
    @given(
        tau=st.floats(min_value=0.0, max_value=4.0),
        s=st.floats(min_value=0.0, max_value=4.0),
    )
    def test_tabulated_inequality(self, tau: float, s: float) -> None:
        phi = TABULATED
        total = phi_value(phi, tau) + legendre_conjugate(phi, s)
        assert total >= s * tau - 1e-3

    @settings(max_examples=100, deadline=None)
    @given(alpha=ALPHAS, tau=ARGUMENTS)
    def test_equality_at_the_derivative(
        self, alpha: float, tau: float
    ) -> None:
        # Given s = Phi'(tau) = tau^(alpha - 1)
        phi = power_phi(alpha)
        s = tau ** (alpha - 1.0)

        # Then Phi(tau) + Phi*(s) = s tau
        total = phi_value(phi, tau) + legendre_conjugate(phi, s)
        assert total == pytest.approx(s * tau, rel=1e-9, abs=1e-6)

    def test_quadratic_equality_at_the_derivative(self) -> None:
        phi = quadratic_phi()
        for tau in np.linspace(0.0, 5.0, 11):
            total = phi_value(phi, tau) + legendre_conjugate(phi, tau)
            assert total == pytest.approx(tau * tau, abs=1e-6)


class TestSearchRadius:

    def test_quadratic(self) -> None:
        # t (R/t)^2 / 2 = budget gives R = sqrt(2 t budget)
        assert search_radius(quadratic_phi(), 1.0, 2.0) == pytest.approx(2.0)
        assert search_radius(quadratic_phi(), 0.5, 4.0) == pytest.approx(2.0)

    def test_rejects_an_empty_budget(self) -> None:
        with pytest.raises(DomainError):
            search_radius(quadratic_phi(), 1.0, 0.0)


class TestInitialDatum:

    def test_point_cloud_needs_points(self) -> None:
        with pytest.raises(ValidationError):
            InitialDatum(kind=InitialDatumKindEnum.POINT_CLOUD)

    def test_table_shape_must_match_axes(self) -> None:
        with pytest.raises(ValidationError):
            InitialDatum(
                kind=InitialDatumKindEnum.TABLE,
                params=DatumParams(axes=[[0.0, 1.0]], values=[1.0, 2.0, 3.0]),
            )

    def test_bounds(self) -> None:
        assert constant_datum(2.0).bounds == (2.0, 2.0)
        assert distance_datum().bounds == (0.0, None)
        assert distance_datum(cap=1.0).bounded
        assert not distance_datum().bounded
        assert distance_datum().lipschitz == 1.0

    def test_table_field_interpolates_and_clamps(self) -> None:
        # Given g = x + y + z tabulated on the unit cube
        axes = [[0.0, 1.0]] * 3
        values = [
            [[x + y + z for z in (0.0, 1.0)] for y in (0.0, 1.0)]
            for x in (0.0, 1.0)
        ]
        datum = InitialDatum(
            kind=InitialDatumKindEnum.TABLE,
            params=DatumParams(axes=axes, values=values),
        )

        # When evaluating inside and outside the box
        field = datum_field(HEISENBERG, datum)

        # Then multilinear interpolation is exact and queries are clamped
        assert field([0.25, 0.5, 0.125]) == pytest.approx(0.875)
        assert field([5.0, -1.0, 0.5]) == pytest.approx(1.5)

    def test_table_axes_must_match_the_group(self) -> None:
        datum = InitialDatum(
            kind=InitialDatumKindEnum.TABLE,
            params=DatumParams(
                axes=[[0.0, 1.0], [0.0, 1.0]], values=[[0.0, 1.0], [1.0, 2.0]]
            ),
        )
        with pytest.raises(ConfigurationError):
            datum_field(HEISENBERG, datum)

    def test_capped_distance_field(self) -> None:
        field = datum_field(HEISENBERG, distance_datum(cap=1.0))
        assert field([0.5, 0.0, 0.0]) == pytest.approx(0.5)
        assert field([0.0, 0.0, 1.0]) == 1.0


class TestHopfLaxValue:

    def test_constant_datum(self) -> None:
        # Given a constant datum, the minimizer is p itself
        p = [0.3, -0.2, 0.1]
        result = hopf_lax_value(
            HEISENBERG,
            constant_datum(3.0),
            quadratic_phi(),
            1.0,
            p,
            options=FAST,
        )
        assert result.value == 3.0
        assert result.argmin == pytest.approx(p)
        assert result.refinement_gap == 0.0

    def test_distance_datum_inside_the_reach(self) -> None:
        # Given g = d0 and d0(p) <= t, the minimizer is the identity
        p = [0.5, 0.0, 0.0]
        result = hopf_lax_value(
            HEISENBERG, distance_datum(), quadratic_phi(), 1.0, p, None, FAST
        )

        # Then u = d0(p)^2 / (2 t)
        assert result.value == pytest.approx(0.125, abs=1e-12)
        assert result.argmin == pytest.approx([0.0, 0.0, 0.0])
        assert result.search_radius == pytest.approx(math.sqrt(3.0))

    def test_distance_datum_beyond_the_reach(self) -> None:
        # Given d0(p) = 2 > t = 1, the minimizer lies on the segment
        result = hopf_lax_value(
            HEISENBERG,
            distance_datum(),
            quadratic_phi(),
            1.0,
            [2.0, 0.0, 0.0],
            None,
            FAST,
        )

        # Then u = d0(p) - t / 2
        assert result.value >= 1.5 - 1e-9
        assert result.value == pytest.approx(1.5, rel=1e-3)

    def test_capped_distance_off_axis(self) -> None:
        p = [0.3, 0.2, 0.05]
        t = 2.0
        result = hopf_lax_value(
            HEISENBERG,
            distance_datum(cap=1.0),
            quadratic_phi(),
            t,
            p,
            options=FAST,
        )
        assert result.value == pytest.approx(d0_exact(p) ** 2 / (2 * t))

    def test_value_never_exceeds_the_datum(self) -> None:
        # Given the capped distance datum and several times
        g = distance_datum(cap=1.0)
        p = [0.8, -0.6, 0.4]
        values = [
            hopf_lax_value(
                HEISENBERG, g, power_phi(1.5), t, p, None, FAST
            ).value
            for t in (0.25, 0.5, 1.0)
        ]

        # Then u <= g(p) and u decreases in t
        assert all(v <= min(d0_exact(p), 1.0) + 1e-12 for v in values)
        assert values[0] >= values[1] >= values[2]

    def test_unbounded_datum_needs_a_quadratic_phi(self) -> None:
        with pytest.raises(ConfigurationError):
            hopf_lax_value(
                HEISENBERG,
                distance_datum(),
                power_phi(1.5),
                1.0,
                [0.1, 0.0, 0.0],
                None,
                FAST,
            )

    def test_rejects_nonpositive_time(self) -> None:
        with pytest.raises(DomainError):
            hopf_lax_value(
                HEISENBERG,
                constant_datum(0.0),
                quadratic_phi(),
                0.0,
                [0.0, 0.0, 0.0],
            )

    def test_rejects_batches(self) -> None:
        with pytest.raises(DimensionMismatchError):
            hopf_lax_value(
                HEISENBERG,
                constant_datum(0.0),
                quadratic_phi(),
                1.0,
                [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            )

    def test_rejects_step_three(self) -> None:
        engel = get_group("engel")
        with pytest.raises(ConfigurationError):
            hopf_lax_value(
                engel, constant_datum(0.0), quadratic_phi(), 1.0, [0] * 4
            )

    def test_point_cloud_datum(self) -> None:
        # Given the capped distance to a two-point cloud
        g = InitialDatum(
            kind=InitialDatumKindEnum.POINT_CLOUD,
            params=DatumParams(
                cloud=[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], cap=5.0
            ),
        )
        options = HopfLaxOptions(samples=64, refine_seeds=0)

        # When evaluating at a cloud point
        result = hopf_lax_value(
            HEISENBERG, g, quadratic_phi(), 1.0, [1.0, 0.0, 0.0], None, options
        )

        # Then the value is zero
        assert result.value == pytest.approx(0.0, abs=1e-9)

    def test_field_is_deterministic(self) -> None:
        field = hopf_lax_field(
            HEISENBERG,
            distance_datum(cap=1.0),
            power_phi(1.5),
            1.0,
            options=FAST,
        )
        assert field.name == "u[t=1]"
        p = [0.7, 0.1, 0.2]
        assert field(p) == field(p)


class TestBallMinimum:

    def test_distance_to_a_far_center(self) -> None:
        # Given g = d(., c) with d(0, c) = 2 and the unit ball around 0
        g = InitialDatum(
            kind=InitialDatumKindEnum.DISTANCE,
            params=DatumParams(center=[2.0, 0.0, 0.0]),
        )

        # When minimizing over the ball
        result = ball_minimum(HEISENBERG, g, 1.0, [0.0, 0.0, 0.0])

        # Then the minimum is 2 - 1 by the triangle inequality
        assert result.value >= 1.0 - 1e-9
        assert result.value == pytest.approx(1.0, rel=2e-2)

    def test_center_inside_the_ball(self) -> None:
        g = InitialDatum(
            kind=InitialDatumKindEnum.DISTANCE,
            params=DatumParams(center=[0.2, 0.0, 0.0]),
        )
        result = ball_minimum(HEISENBERG, g, 1.0, [0.0, 0.0, 0.0], None, FAST)
        assert result.value == 0.0
        assert result.argmin == pytest.approx([0.2, 0.0, 0.0])


class TestDistanceToSet:

    def test_two_points(self) -> None:
        S = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]
        assert dist_to_set(HEISENBERG, S, [0.5, 0.0, 0.0]) == pytest.approx(
            0.5
        )

    def test_empty_set(self) -> None:
        with pytest.raises(DomainError):
            dist_to_set(HEISENBERG, [], [0.0, 0.0, 0.0])

    def test_squared_field(self) -> None:
        field = dist_to_set_field(HEISENBERG, [[1.0, 0.0, 0.0]], squared=True)
        assert field.name == "dist_S^2"
        assert field([3.0, 0.0, 0.0]) == pytest.approx(4.0)

    def test_eikonal_residual(self) -> None:
        # Given the distance to a two-point set
        field = dist_to_set_field(
            HEISENBERG, [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]
        )

        # Then |X dist_S| = 1 at a smooth point
        assert eikonal_residual(field, [1.4, 0.3, 0.1]) <= 1e-4

    def test_eikonal_residual_excludes_the_bisector(self) -> None:
        field = d0_field(make_backend("exact", HEISENBERG))
        with pytest.raises(NonSmoothLocusError):
            eikonal_residual(
                field, [0.0, 0.5, 0.0], exclude=lambda q: abs(q[0]) < 1e-3
            )


class TestProblemDocument:

    def test_times(self) -> None:
        problem = HopfLaxProblem.model_validate(
            {
                "group": "heisenberg",
                "phi": {"kind": "quadratic"},
                "g": {"kind": "constant", "params": {"value": 1.0}},
                "t": [0.5, 1.0],
                "points": [[0.0, 0.0, 0.0]],
            }
        )
        assert problem.times == [0.5, 1.0]
        assert problem.options.samples == 4096

    def test_single_time(self) -> None:
        problem = HopfLaxProblem.model_validate(
            {
                "group": "heisenberg",
                "phi": {"kind": "power", "params": {"alpha": 1.5}},
                "g": {"kind": "distance"},
                "t": 2,
                "points": [],
            }
        )
        assert problem.times == [2]
        assert problem.phi.beta == pytest.approx(3.0)


class TestDenseOracle:

    def test_options(self) -> None:
        options = dense_oracle_options(seed=3)
        assert options.samples == 100_000
        assert options.refine_seeds == 0
        assert options.seed == 3

    @pytest.mark.slow
    def test_sampler_agrees_with_the_dense_oracle(self) -> None:
        # Given the capped distance datum at the center axis
        g = distance_datum(cap=1.0)
        p = [0.0, 0.0, 1.0]

        # When comparing the refined sampler with brute force
        sampled = hopf_lax_value(HEISENBERG, g, quadratic_phi(), 0.5, p)
        reference = hopf_lax_value(
            HEISENBERG,
            g,
            quadratic_phi(),
            0.5,
            p,
            options=dense_oracle_options(),
        )

        # Then the values agree
        assert sampled.value == pytest.approx(reference.value, abs=1e-2)
