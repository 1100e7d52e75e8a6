"""
Unit tests for Grothendieck-level fusion
Tests the K_{1,2}/K_{2,1} rules, Zhu constraints, rigidity status and the consistency sweep
"""
import pytest
from collections import Counter
from fractions import Fraction
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.services.fusion import (
    RigidityStatus,
    ZhuCase,
    check_grothendieck_consistency,
    class_character,
    class_contains,
    double_braiding_phase,
    exact_sequence_class_check,
    fuse_class,
    fuse_k12_kac,
    fuse_k12_simple,
    fuse_k21_kac,
    fuse_kr1_k1s,
    iterated_fusion_class,
    kac_class,
    kac_cofinite_dimension,
    kac_resolution,
    rigidity_status,
    same_class,
    staggered_exponent,
    zhu_constraint,
)
import src.services.fusion as fusion
from src.services.kactable import KacLabel, central_charge, h
from src.services.verma import partition_count, simple_character


def alternating_character(cc, chain, base, levels):
    total = [0] * (levels + 1)
    for k, label in enumerate(chain):
        offset = h(cc, label.r, label.s) - base
        assert offset.denominator == 1
        start = int(offset)
        for n in range(levels + 1 - start):
            total[start + n] += (-1) ** k * (partition_count(n) - partition_count(n - label.r * label.s))
    return total


@pytest.mark.unit
class TestKacFusion:
    """K_{1,2} x K_{r,s} and K_{2,1} x K_{r,s} at c_{2,3}"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_non_split_when_q_divides_s(self):
        """K_{1,2} x K_{1,3} is a logarithmic extension of K_{1,4} by K_{1,2}"""
        outcome = fuse_k12_kac(self.cc, 1, 3)
        assert not outcome.splits
        assert outcome.logarithmic
        assert outcome.indecomposable is True
        assert outcome.sequence == (KacLabel(1, 2), KacLabel(1, 4))
        assert same_class(outcome.factors, kac_class(self.cc, 1, 2) + kac_class(self.cc, 1, 4))

    def test_split_product(self):
        """K_{1,2} x K_{1,2} = K_{1,1} + K_{1,3}"""
        outcome = fuse_k12_kac(self.cc, 1, 2)
        assert outcome.splits
        assert outcome.indecomposable is False
        assert outcome.summands == [KacLabel(1, 1), KacLabel(1, 3)]

    def test_zero_module_is_dropped(self):
        """K_{1,2} x K_{1,1} = K_{1,2} since K_{1,0} = 0"""
        outcome = fuse_k12_kac(self.cc, 1, 1)
        assert outcome.summands == [KacLabel(1, 2)]
        assert outcome.notes

    def test_mirror_rule(self):
        """K_{2,1} x K_{2,1} does not split since p = 2 divides r"""
        outcome = fuse_k21_kac(self.cc, 2, 1)
        assert not outcome.splits
        assert outcome.indecomposable is True
        assert outcome.sequence == (KacLabel(1, 1), KacLabel(3, 1))

    def test_kr1_times_k1s(self):
        """K_{r,1} x K_{1,s} is K_{r,s}"""
        cls, isomorphic = fuse_kr1_k1s(self.cc, 2, 2)
        assert isomorphic
        assert same_class(cls, kac_class(self.cc, 2, 2))

    def test_vacuum_kac_class(self):
        """K_{1,1} has factors L_{1,2} and L_{1,5}"""
        assert kac_class(self.cc, 1, 1) == Counter({KacLabel(1, 2): 1, KacLabel(1, 5): 1})
        assert kac_class(self.cc, 1, 0) == Counter()


@pytest.mark.unit
class TestSimpleFusion:
    """K_{1,2} with simple modules"""

    def test_staggered_product(self):
        """K_{1,2} x L_{1,3} at c_{2,3} is staggered with socle L_{1,4}"""
        cc = central_charge(2, 3)
        outcome = fuse_k12_simple(cc, KacLabel(1, 3))
        assert outcome.logarithmic
        assert outcome.sequence == (KacLabel(1, 2), KacLabel(1, 4))
        assert outcome.socle == KacLabel(1, 4)
        assert "staggered" in outcome.notes

    def test_ising_rule(self):
        """K_{1,2} x L_{1,2} at c_{3,4} has two simple summands"""
        cc = central_charge(3, 4)
        outcome = fuse_k12_simple(cc, KacLabel(1, 2))
        assert outcome.splits
        assert set(outcome.summands) == {KacLabel(2, 3), KacLabel(1, 3)}
        assert outcome.indecomposable is False

    def test_fuse_class_is_additive(self):
        """Fusing a class is the sum over its factors"""
        cc = central_charge(2, 3)
        first = fuse_class(cc, "k12", Counter({KacLabel(1, 3): 1}))
        both = fuse_class(cc, "k12", Counter({KacLabel(1, 3): 2}))
        assert both == first + first


@pytest.mark.unit
class TestZhuAndRigidity:
    """Lowest-weight constraints and rigidity classification at c_{2,3}"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    @pytest.mark.parametrize("r,s,case", [
        (1, 1, ZhuCase.TWO_SEMISIMPLE),
        (1, 3, ZhuCase.SINGLE_EIGENVALUE),
        (2, 3, ZhuCase.JORDAN_BLOCK),
    ])
    def test_zhu_cases(self, r, s, case):
        """The case depends on h_{r,s-1} - h_{r,s+1}"""
        assert zhu_constraint(self.cc, "k12", KacLabel(r, s)).case is case

    def test_zhu_roots(self):
        """(x - 0)(x - 1/3) for K_{1,2} x K_{1,1}"""
        constraint = zhu_constraint(self.cc, "k12", KacLabel(1, 1))
        assert constraint.roots == (Fraction(0), Fraction(1, 3))
        assert constraint.coefficients == (Fraction(1), Fraction(-1, 3), Fraction(0))

    def test_unknown_first_factor(self):
        """Only k12 and k21 are recognized"""
        with pytest.raises(ValueError):
            zhu_constraint(self.cc, "k13", KacLabel(1, 1))

    @pytest.mark.parametrize("r,s,status", [
        (1, 1, RigidityStatus.RIGID_SELF_DUAL),
        (2, 3, RigidityStatus.RIGID_SELF_DUAL),
        (1, 4, RigidityStatus.NOT_RIGID),
        (3, 1, RigidityStatus.NOT_RIGID),
        (3, 5, RigidityStatus.OPEN),
    ])
    def test_rigidity_status(self, r, s, status):
        """Rigid inside the p x q box, not rigid just past it"""
        assert rigidity_status(self.cc, KacLabel(r, s)) is status


@pytest.mark.unit
class TestResolutionsAndStaggered:
    """Kac resolutions and staggered data"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_vacuum_resolution(self):
        """L_{1,2} is resolved by K_{1,2}, K_{1,4}, K_{1,8}"""
        assert kac_resolution(self.cc, KacLabel(1, 1), 3) == [KacLabel(1, 2), KacLabel(1, 4), KacLabel(1, 8)]

    @pytest.mark.parametrize("p,q,r,s", [(2, 3, 1, 1), (3, 4, 1, 2), (3, 4, 1, 1), (2, 5, 1, 2)])
    def test_alternating_characters(self, p, q, r, s):
        """The alternating sum of Kac characters along the resolution is the simple character"""
        cc = central_charge(p, q)
        chain = kac_resolution(cc, KacLabel(r, s), 4)
        assert alternating_character(cc, chain, h(cc, r, s), 6) == simple_character(cc, KacLabel(r, s), 6)

    def test_no_resolution_when_q_divides_s(self):
        """L_{1,3} is not resolved by this chain"""
        with pytest.raises(ValueError):
            kac_resolution(self.cc, KacLabel(1, 3), 2)

    def test_staggered_exponent_and_phase(self):
        """h_{1,4} - h_{1,2} - h_{1,3} = 2/3, so the double braiding is non-trivial"""
        assert staggered_exponent(self.cc, 1, 1) == Fraction(2, 3)
        phase = double_braiding_phase(self.cc, 1, 1, 128)
        assert abs(phase - 1) > 0.5


@pytest.mark.unit
class TestConsistency:
    """Characters and classes agree"""

    def setup_method(self):
        """Setup c_{2,3}"""
        self.cc = central_charge(2, 3)

    def test_class_character_of_vacuum(self):
        """L_{1,2} + L_{1,5} reproduces the K_{1,1} character"""
        character = class_character(self.cc, kac_class(self.cc, 1, 1), Fraction(5))
        assert character == {Fraction(0): 1, Fraction(2): 1, Fraction(3): 1, Fraction(4): 2, Fraction(5): 2}

    def test_exact_sequence_classes(self):
        """class(K_{3,3}) = class(K_{1,6}) + class(K_{1,3})"""
        agree, left, right = exact_sequence_class_check(self.cc, 1, 1)
        assert agree
        assert left == right

    def test_sweep_passes(self):
        """The sweep over r, s <= 3 passes"""
        report = check_grothendieck_consistency(self.cc, 3, 3, levels=6)
        assert report.passed
        assert report.first_failure is None
        assert report.checks["additivity[k12]"] == 9

    def test_iterated_product_starts_from_vacuum_class(self):
        """With no fusion applied the iterated product is the class of K_{1,1}"""
        iterated = iterated_fusion_class(self.cc, 1, 1)
        assert same_class(iterated, kac_class(self.cc, 1, 1))
        assert same_class(iterated, Counter({KacLabel(1, 2): 1, KacLabel(1, 5): 1}))

    def test_iterated_product_contains_every_kac_class(self):
        """K_{r,s} sits inside K_{2,1}^(r-1) x K_{1,2}^(s-1) x K_{1,1} for r, s <= 5"""
        missing = [
            (r, s)
            for r in range(1, 6)
            for s in range(1, 6)
            if not class_contains(iterated_fusion_class(self.cc, r, s), kac_class(self.cc, r, s))
        ]
        assert missing == []

    @pytest.mark.slow
    @pytest.mark.parametrize("p,q", [(3, 4), (2, 5), (3, 5)])
    def test_iterated_product_other_charges(self, p, q):
        """The containment holds at other central charges for r, s <= 6"""
        cc = central_charge(p, q)
        for r in range(1, 7):
            for s in range(1, 7):
                assert class_contains(iterated_fusion_class(cc, r, s), kac_class(cc, r, s)), (r, s)

    def test_cofinite_dimensions(self):
        """Brute-force counts within reach, rs beyond, zero for K_{r,0}"""
        assert kac_cofinite_dimension(self.cc, 1, 2, 6) == 2
        assert kac_cofinite_dimension(self.cc, 2, 2, 6) == 4
        assert kac_cofinite_dimension(self.cc, 3, 4, 6) == 12
        assert kac_cofinite_dimension(self.cc, 1, 0, 6) == 0

    def test_miyamoto_bound_uses_cofinite_dimensions(self, monkeypatch):
        """A zero cofinite dimension for K_{1,2} violates the bound at K_{1,2} x K_{1,2}"""
        def fake(c, weight, singular_level, level_cap):
            return 0 if singular_level == 2 else singular_level

        monkeypatch.setattr(fusion, "c1_cofinite_dimension", fake)
        report = check_grothendieck_consistency(self.cc, 1, 2, levels=6)
        assert not report.passed
        assert report.first_failure.startswith("miyamoto_bound")

    def test_corrupted_table_is_caught(self):
        """Dropping the factors of K_{1,4} breaks the sweep"""
        def corrupted(cc, r, s):
            if (r, s) == (1, 4):
                return Counter()
            return kac_class(cc, r, s)

        report = check_grothendieck_consistency(self.cc, 3, 3, levels=6, table=corrupted)
        assert not report.passed
        assert report.first_failure is not None

    @pytest.mark.slow
    def test_wider_sweep(self):
        """r, s <= 6 at c_{3,4}"""
        assert check_grothendieck_consistency(central_charge(3, 4), 6, 6, levels=8).passed
