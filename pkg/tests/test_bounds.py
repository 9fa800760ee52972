import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakexpand import bounds as bd
from weakexpand.errors import ParameterError

SCHEMA = json.loads((Path(bd.__file__).parent / "schemas" / "bound_report.schema.json")
                    .read_text())


def valid(report):
    jsonschema.validate(report.to_dict(), SCHEMA)
    assert (report.value is not None) == report.applicable
    if report.value is not None:
        assert 0.0 <= report.value <= 1.0
    return report


class TestFuBaseline:
    def test_values(self):
        assert valid(bd.fu_baseline_bound(1.0, 0.0)).value == 0.0
        assert bd.fu_baseline_bound(0.5, 0.25).value == pytest.approx(0.875)
        assert bd.fu_baseline_bound(0.0, 0.3).value == 1.0

    def test_range(self):
        with pytest.raises(ParameterError):
            bd.fu_baseline_bound(1.2, 0.1)


class TestWeiApplicability:
    def test_gate(self):
        assert not valid(bd.wei_applicability(0.06)).applicable
        assert bd.wei_applicability(2 / 3).applicable
        assert not bd.wei_applicability(0.5).applicable
        assert bd.wei_applicability(0.9).value is None


class TestPlc:
    def test_covered_table_values(self):
        r = valid(bd.plc_bound(0.848, 0.0, 0.11, 0.12, 0.0))
        assert r.value == pytest.approx(0.050, abs=0.001)
        r = valid(bd.plc_bound(0.497, 0.0, 0.33, 0.29, 0.0))
        assert r.value == pytest.approx(0.374, abs=0.005)

    @pytest.mark.parametrize("alpha", [0.01, 0.1, 0.25, 0.33, 0.49])
    def test_full_expansion_closed_form(self, alpha):
        for err in (0.0, alpha, 0.3, 0.5):
            r = bd.plc_bound(1.0, 0.0, alpha, err, 0.0)
            if r.applicable and r.clamped is None:
                assert r.value == (err - alpha) / (1 - 2 * alpha)
            assert r.raw_value == (err - alpha) / (1 - 2 * alpha)

    def test_gates(self):
        r = bd.plc_bound(0.9, 0.2, 0.2, 0.7, 0.0)
        assert not r.applicable
        assert not r.precondition("gate mass <= 1 - q - alpha").satisfied
        head = bd.plc_bound(0.848, 0.0, 0.11, 0.3, 0.0, gate="headline")
        assert not head.applicable  # 0.3 > (1 - 0.11 + 3*0.848*0.11)/4
        assert bd.plc_bound(0.848, 0.0, 0.11, 0.2, 0.0, gate="headline").applicable

    def test_denominator_gate(self):
        # large c with alpha near 1/2 drives 1 - 2c'alpha below zero
        r = bd.plc_bound(50.0, 0.0, 0.45, 0.0, 0.0)
        assert not r.applicable
        assert not r.precondition("1 - 2 c' alpha > 0").satisfied

    def test_clamp_flag(self):
        r = bd.plc_bound(1.0, 0.0, 0.3, 0.1, 0.0)
        assert r.value == 0.0 and r.clamped == "lower" and r.raw_value < 0

    def test_joint_mass_overrides_proxy(self):
        proxy = bd.plc_bound(1.0, 0.0, 0.3, 0.5, 0.3)
        exact = bd.plc_bound(1.0, 0.0, 0.3, 0.5, 0.3, joint_mass=0.6)
        assert not proxy.applicable and exact.applicable

    def test_strict_mode(self):
        with pytest.raises(ParameterError, match="strict"):
            bd.plc_bound(0.8, 0.0, 0.1, 0.1, None, strict=True)
        assert bd.plc_bound(0.8, 0.0, 0.1, 0.1, None).inputs["nonrobust_mass"] == 0.0

    def test_alpha_range(self):
        for a in (0.0, 0.5, -0.1):
            with pytest.raises(ParameterError):
                bd.plc_bound(0.8, 0.0, a, 0.1)
        with pytest.raises(ParameterError):
            bd.plc_bound(0.0, 0.0, 0.2, 0.1)

    @settings(max_examples=300)
    @given(st.floats(0.01, 0.49), st.floats(0.01, 3.0), st.floats(0.01, 3.0),
           st.floats(0.0, 1.0))
    def test_nonincreasing_in_c(self, alpha, c_lo, c_hi, err):
        c_lo, c_hi = sorted((c_lo, c_hi))
        err = err * (1 - alpha)
        lo = bd.plc_bound(c_lo, 0.0, alpha, err, 0.0)
        hi = bd.plc_bound(c_hi, 0.0, alpha, err, 0.0)
        if lo.raw_value is not None and hi.raw_value is not None:
            assert hi.raw_value <= lo.raw_value + 1e-12


class TestPlcSimplified:
    def test_clamped_perfect_fit(self):
        r = valid(bd.plc_simplified_bound(1.0, 0.2, 0.0, 0.0, delta_param=1.0))
        assert r.raw_value == pytest.approx(-0.2)
        assert r.value == 0.0 and r.clamped == "lower"

    def test_spot_value(self):
        r = bd.plc_simplified_bound(0.848, 0.11, 0.12, 0.0)
        assert r.value == pytest.approx(0.12 + 0.11 * (1 - 1.272))
        assert r.value == pytest.approx(0.0901, abs=1e-4)

    def test_infeasible_delta(self):
        r = bd.plc_simplified_bound(0.5, 0.2, 0.4, 0.0, delta_param=0.9)
        assert not r.applicable and r.value is None

    def test_never_below_main_bound(self):
        # the simplified form relaxes the main bound
        rng = np.random.default_rng(0)
        for _ in range(2000):
            alpha = rng.uniform(0.01, 0.49)
            c = rng.uniform(0.05, 1.0)
            err = rng.uniform(0, 1 - alpha)
            nr = rng.uniform(0, 0.2)
            d = rng.uniform(0.05, 1.0)
            s = bd.plc_simplified_bound(c, alpha, err, nr, delta_param=d)
            m = bd.plc_bound(c, 0.0, alpha, err, nr)
            if s.applicable and m.applicable:
                assert s.raw_value >= m.raw_value - 1e-12


class TestCoverage:
    def test_uncovered_table_value(self):
        r = valid(bd.coverage_bound(0.75, 0.55, 0.0, 0.33, 0.29, 0.0))
        assert r.value == pytest.approx(0.338, abs=0.01)

    def test_unequal_constants_without_nonrobust_mass(self):
        r = valid(bd.coverage_bound(0.16, 0.98, 0.0, 0.11, 0.12, 0.0))
        assert r.applicable
        assert r.value == pytest.approx(0.37, abs=0.03)
        assert r.notes

    def test_coefficient_gate_applies_with_nonrobust_mass(self):
        r = bd.coverage_bound(0.16, 0.98, 0.0, 0.11, 0.01, 0.01)
        assert not r.applicable

    def test_perfect_fit(self):
        assert bd.coverage_bound(1.0, 1.0, 0.0, 0.3, 0.0, 0.0).value == 0.0

    @settings(max_examples=300)
    @given(st.floats(0.01, 0.49), st.floats(0.05, 1.0), st.floats(0.0, 1.0),
           st.floats(0.0, 0.5))
    def test_equal_constants_single_c_form(self, alpha, c, err, q):
        err = err * c * (1 - q - alpha) * 0.999
        r = bd.coverage_bound(c, c, q, alpha, err, 0.0)
        if r.applicable:
            ref = max(q, (err - c * alpha) / (c * (1 - 2 * alpha)))
            assert r.raw_value == ref

    def test_precondition(self):
        r = bd.coverage_bound(0.5, 0.5, 0.0, 0.2, 0.45, 0.0)
        assert not r.applicable


class TestCoverageWeak:
    def test_values(self):
        assert valid(bd.coverage_bound_weak(0.5, 0.0, 0.2, 0.0, 0.0)).value == 0.0
        r = bd.coverage_bound_weak(0.16, 0.0, 0.11, 0.12, 0.0)
        assert r.value == pytest.approx(0.12 / (0.16 * 0.89))
        assert r.value == pytest.approx(0.843, abs=1e-3)
        assert bd.coverage_bound_weak(1.0, 0.4, 0.2, 0.01, 0.05).value == pytest.approx(0.45)


class TestWeiPlc:
    def test_threshold_not_met(self):
        r = valid(bd.wei_plc_bound(0.32, 0.0, 0.33, 0.33, 0.0))
        assert not r.applicable
        assert r.precondition("c > alpha / (1 - alpha)").value == 0.32

    def test_c_gate_passes(self):
        r = bd.wei_plc_bound(0.17, 0.0, 0.11, 0.11, 0.0)
        assert r.precondition("c > alpha / (1 - alpha)").satisfied

    def test_exact_fit(self):
        r = valid(bd.wei_plc_bound(0.9, 0.0, 0.2, 0.2, 0.0))
        assert r.applicable and r.value == 0.0


class TestDispatch:
    def test_evaluate(self):
        assert bd.evaluate("fu-baseline", p_S=1.0, alpha=0.0).value == 0.0
        with pytest.raises(ParameterError):
            bd.evaluate("nope")

    def test_clamping_always_flagged(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            alpha = rng.uniform(0.01, 0.49)
            r = bd.plc_bound(rng.uniform(0.01, 2), rng.uniform(0, 0.3), alpha,
                             rng.uniform(0, 1), rng.uniform(0, 0.5))
            valid(r)
            if r.applicable:
                assert (r.clamped is None) == (r.value == r.raw_value)
