"""
Unit tests for intertwining operators
Tests the primary-field recursion, descent to Kac quotients, the Fock intertwiner,
the hypergeometric identity and the rigidity constants
"""
import pytest
from fractions import Fraction
import sys
import os

from mpmath import mp

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.services.errors import AmbientMismatch, InadmissibleBranch, InvalidP, LevelTooSmall, NotKacWeight
from src.services.intertwiner import (
    BranchChoice,
    allowed_targets,
    allowed_targets_for_weight,
    bpz_numeric_check,
    build_primary_coefficients,
    descends_to_kac_quotient,
    descent_predicted,
    fock_intertwiner_block,
    hypergeometric_parameters,
    kac_image_graded_dims,
    kac_target_dims,
    q2_pairing_from_lowest_order,
    recursion_factor,
    rigidity_constants,
    verify_bpz_hypergeometric,
    verify_primary_condition,
    verify_recursion_identity,
)
from src.services.kactable import CentralCharge, KacLabel, central_charge, heisenberg_weight


@pytest.mark.unit
class TestBranches:
    """Allowed targets h2 for h1 = h_{r,s}"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_vacuum_targets(self):
        """From h_{1,1}: Plus lands on (1,2), Minus on (1,0) with h = 1/3"""
        plus, minus = allowed_targets(self.cc, KacLabel(1, 1))
        assert plus.branch is BranchChoice.PLUS
        assert plus.target_label == KacLabel(1, 2)
        assert plus.target_weight == 0
        assert plus.root == Fraction(1, 2)
        assert minus.target_label == KacLabel(1, 0)
        assert minus.target_weight == Fraction(1, 3)
        assert plus.admissible and minus.admissible

    def test_inadmissible_branches(self):
        """r - ps/q or ps/q - r a positive integer is inadmissible"""
        plus, _ = allowed_targets(self.cc, KacLabel(3, 3))
        _, minus = allowed_targets(self.cc, KacLabel(1, 3))
        assert not plus.admissible
        assert not minus.admissible

    def test_targets_for_weight(self):
        """A bare Kac weight is resolved through its canonical label"""
        targets = allowed_targets_for_weight(self.cc, Fraction(5, 8))
        assert {target.target_label for target in targets} == {KacLabel(2, 6), KacLabel(2, 4)}
        with pytest.raises(NotKacWeight):
            allowed_targets_for_weight(self.cc, Fraction(1, 7))


@pytest.mark.unit
class TestPrimaryRecursion:
    """Coefficients phi_k of Y(v_{1,2}, z) v_{h1}"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_first_coefficient(self):
        """phi_1 = L_{-1} phi_0 for the vacuum on the Plus branch"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(1, 1), BranchChoice.PLUS, 3)
        assert coeffs.exponent == 0
        assert dict(coeffs.phis[0].coeffs) == {(): 1}
        assert dict(coeffs.phis[1].coeffs) == {(1,): 1}
        assert len(coeffs.phis) == 4

    @pytest.mark.parametrize("r,s,branch", [
        (1, 1, BranchChoice.PLUS),
        (1, 1, BranchChoice.MINUS),
        (1, 2, BranchChoice.PLUS),
        (2, 1, BranchChoice.MINUS),
        (2, 3, BranchChoice.PLUS),
        (3, 2, BranchChoice.MINUS),
    ])
    def test_primary_condition(self, r, s, branch):
        """L_m phi_k matches the primary rule and the recursion identity holds"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(r, s), branch, 6)
        assert verify_primary_condition(coeffs, 6)
        assert verify_recursion_identity(coeffs)

    @pytest.mark.parametrize("r,s,branch", [
        (1, 1, BranchChoice.PLUS),
        (2, 1, BranchChoice.MINUS),
        (1, 4, BranchChoice.PLUS),
    ])
    def test_recursion_factor_factors(self, r, s, branch):
        """The unfactored bracket equals k (t k - root)"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(r, s), branch, 2)
        for k in range(1, 6):
            assert recursion_factor(coeffs, k) == k * (self.cc.t * k - coeffs.root)

    def test_inadmissible_branch_raises(self):
        """The recursion factor vanishes at k = 1 for (1,3) Minus"""
        with pytest.raises(InadmissibleBranch):
            build_primary_coefficients(self.cc, KacLabel(1, 3), BranchChoice.MINUS, 2)

    def test_verify_beyond_built_level(self):
        """Verification cannot go past the built level"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(1, 1), BranchChoice.PLUS, 2)
        with pytest.raises(LevelTooSmall):
            verify_primary_condition(coeffs, 3)


@pytest.mark.unit
class TestDescent:
    """Factoring through Kac quotients"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_prediction_table(self):
        """q not dividing s always descends; q | s depends on the branch and r"""
        assert descent_predicted(self.cc, KacLabel(1, 1), BranchChoice.PLUS)
        assert descent_predicted(self.cc, KacLabel(1, 3), BranchChoice.PLUS)
        assert not descent_predicted(self.cc, KacLabel(2, 3), BranchChoice.PLUS)
        assert descent_predicted(self.cc, KacLabel(2, 3), BranchChoice.MINUS)
        assert not descent_predicted(self.cc, KacLabel(1, 3), BranchChoice.MINUS)

    @pytest.mark.parametrize("r,s,branch", [
        (1, 1, BranchChoice.PLUS),
        (1, 2, BranchChoice.PLUS),
        (1, 1, BranchChoice.MINUS),
        (2, 1, BranchChoice.PLUS),
    ])
    def test_predicted_descents_hold(self, r, s, branch):
        """Every predicted descent is confirmed by the computation"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(r, s), branch, 6)
        assert descent_predicted(self.cc, KacLabel(r, s), branch)
        assert descends_to_kac_quotient(coeffs, 6)

    def test_level_too_small(self):
        """The target singular vector must be visible"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(1, 1), BranchChoice.PLUS, 1)
        with pytest.raises(LevelTooSmall):
            descends_to_kac_quotient(coeffs, 1)

    def test_zero_target_always_descends(self):
        """K_{r,0} is zero, so the Minus branch from s = 1 descends trivially"""
        coeffs = build_primary_coefficients(self.cc, KacLabel(1, 1), BranchChoice.MINUS, 2)
        assert descends_to_kac_quotient(coeffs, 2)


@pytest.mark.unit
class TestFockIntertwiner:
    """Y : F_lambda x F_mu -> F_{lambda+mu}"""

    def setup_method(self):
        """Setup lambda_{1,2} and mu_{2,1} at c_{2,3}"""
        self.cc = central_charge(2, 3)
        self.lam = heisenberg_weight(self.cc, 1, 2)
        self.mu = heisenberg_weight(self.cc, 2, 1)
        self.block = fock_intertwiner_block(self.cc, self.lam, self.mu, 4)

    def test_leading_exponent(self):
        """The leading power is lambda mu, a rational number"""
        assert self.block.leading_exponent == (self.lam * self.mu).rational_part()

    def test_generator_series(self):
        """Level 1 of exp(lambda sum a_{-k} z^k / k) is lambda a_{-1}"""
        series = self.block.generator_series()
        assert len(series) == 5
        assert dict(series[0].coeffs) == {(): 1}
        assert dict(series[1].coeffs) == {(1,): self.lam}

    def test_apply_is_bilinear(self):
        """apply on the generators is the generator term; sums split term by term"""
        u = self.block.left.generator()
        w = self.block.source.generator()
        assert self.block.apply(u, w, 2) == self.block.component((), (), 2)
        w2 = self.block.source.vector(1, {(1,): self.cc.scalar(3)})
        combined = self.block.apply(u, w2, 2)
        expected = {part: value * 3 for part, value in self.block.component((), (1,), 2).items()}
        assert combined == expected
        with pytest.raises(AmbientMismatch):
            self.block.apply(w, u, 0)

    @pytest.mark.parametrize("n", [1, 2, -1])
    def test_heisenberg_commutator(self, n):
        """[a_n, Y(u, z)] holds on low-level vectors"""
        for u_part in ((), (1,)):
            for w_part in ((), (1,), (2,)):
                assert self.block.heisenberg_commutator_holds(n, u_part, w_part, 2)

    @pytest.mark.parametrize("m", [1, 2, -1])
    def test_virasoro_commutator(self, m):
        """[L_m, Y(u, z)] holds on low-level vectors"""
        for u_part in ((), (1,)):
            for w_part in ((), (1,)):
                assert self.block.virasoro_commutator_holds(m, u_part, w_part, 2)

    def test_image_of_small_kac_modules(self):
        """The image of K_{1,2} x K_{1,1} fills K_{1,2}"""
        left, right = KacLabel(1, 2), KacLabel(1, 1)
        assert kac_image_graded_dims(self.cc, left, right, 4) == kac_target_dims(self.cc, left, right, 4)

    @pytest.mark.slow
    def test_image_beyond_the_corner(self):
        """K_{1,2} x K_{3,4} maps onto K_{3,5} (both labels past p and q)"""
        left, right = KacLabel(1, 2), KacLabel(3, 4)
        assert kac_image_graded_dims(self.cc, left, right, 6) == kac_target_dims(self.cc, left, right, 6)


@pytest.mark.unit
class TestHypergeometric:
    """The q = 2 hypergeometric identity"""

    def test_parameters(self):
        """(a, b, c) = (p/2, 3p/2 - 1, p)"""
        assert hypergeometric_parameters(3) == (Fraction(3, 2), Fraction(7, 2), Fraction(3))

    @pytest.mark.parametrize("p", [3, 5, 7])
    def test_residual_vanishes(self, p):
        """The exact series solves the ODE through order 38"""
        residual = verify_bpz_hypergeometric(p, 40)
        assert residual.order == 38
        assert residual.is_zero()

    @pytest.mark.parametrize("p", [2, 4, 1])
    def test_invalid_p(self, p):
        """Only odd p >= 3 pair with q = 2"""
        with pytest.raises(InvalidP):
            verify_bpz_hypergeometric(p, 10)

    def test_numeric_agreement(self):
        """mpmath hyp2f1 agrees with the partial sums at u = 1/4"""
        with mp.workprec(256):
            numeric, partial = bpz_numeric_check(5, Fraction(1, 4))
            assert abs(numeric - partial) < mp.mpf(2) ** -200


@pytest.mark.unit
class TestRigidityConstants:
    """Evaluation/coevaluation scalars and intrinsic dimensions"""

    def test_percolation_constants(self):
        """R = -1 and d(K_{1,2}) = 1 at c_{2,3}"""
        with mp.workprec(256):
            constants = rigidity_constants(central_charge(2, 3))
            assert abs(constants.R_pairing + 1) < mp.mpf(2) ** -200
            assert abs(constants.d_K12 - 1) < mp.mpf(2) ** -200
            assert constants.precision == 256

    def test_q_equals_two_dimension_vanishes(self):
        """d(K_{1,2}) = -2 cos(p pi / 2) = 0 for odd p"""
        with mp.workprec(256):
            assert abs(rigidity_constants(CentralCharge(3, 2)).d_K12) < mp.mpf(2) ** -200

    def test_q_equals_two_pairing(self):
        """At p = 3 the pairing constant is -128 / (45 pi), also from the lowest-order rebuild"""
        with mp.workprec(256):
            expected = -128 / (45 * mp.pi)
            assert abs(rigidity_constants(CentralCharge(3, 2)).R_pairing - expected) < mp.mpf(2) ** -100
            assert abs(q2_pairing_from_lowest_order(3) - expected) < mp.mpf(2) ** -100

    def test_mirror_dimension(self):
        """d(K_{2,1}) at c_{p,q} is d(K_{1,2}) at c_{q,p}"""
        with mp.workprec(128):
            left = rigidity_constants(central_charge(3, 4), 128)
            right = rigidity_constants(central_charge(4, 3), 128)
            assert abs(left.d_K21 - right.d_K12) < mp.mpf(2) ** -100
