import math

import numpy as np
import pytest

from distortion_outage import (
    COPA,
    CORACP,
    CRCP,
    SCOPA,
    DegenerateSourceError,
    SourceModel,
    SystemParams,
    UnattainableTargetError,
    db_to_linear,
    empirical_gain,
    empirical_gain_at_power,
    exponent,
    exponent_constant_power,
    exponent_copa,
    exponent_scopa,
    gain_copa_vs_coracp,
    gain_coracp_vs_crcp,
    gain_scopa_vs_copa,
    power_for_target,
    solve,
)

DM8 = db_to_linear(8.0)
T_S = 9.0 / DM8 - 1.0


class TestExponents:
    def test_stationary_scopa(self, stationary):
        e = exponent_scopa(stationary, SystemParams(1, DM8, 100.0))
        assert e.value == pytest.approx(100.0 / (math.log(100.0) * T_S), rel=1e-14)
        assert e.value == pytest.approx(50.92525058798787, rel=1e-12)
        assert e.order == "O(P/lnP)"

    def test_stationary_copa(self, stationary):
        e = exponent_copa(stationary, SystemParams(1, DM8, 100.0))
        assert e.value == pytest.approx(50.92525058798787, rel=1e-12)

    def test_doubling_sum_halves(self):
        sys = SystemParams(1, 1.0, 50.0)
        # T = 3 then T = 6 at the same pmf
        a = exponent_scopa(SourceModel.stationary(4.0), sys).value
        b = exponent_scopa(SourceModel.stationary(7.0), sys).value
        assert b == pytest.approx(a / 2, rel=1e-14)

    def test_g2_cells(self, g2):
        assert exponent_scopa(g2, SystemParams(1, DM8, db_to_linear(16))).value == pytest.approx(18.90, rel=0.15)
        assert exponent_copa(g2, SystemParams(1, DM8, db_to_linear(16))).value == pytest.approx(3.89, rel=0.15)
        assert exponent_copa(g2, SystemParams(5, DM8, 100.0)).value == pytest.approx(68.69, rel=0.15)

    @pytest.mark.parametrize("scheme", [CORACP, CRCP])
    def test_constant_power(self, scheme):
        e = exponent_constant_power(scheme)
        assert e.value == 1.0 and e.order == "O(1)" and e.p_bar is None

    def test_dispatch(self, g2):
        sys = SystemParams(1, DM8, 100.0)
        assert exponent(SCOPA, g2, sys) == exponent_scopa(g2, sys)
        assert exponent("crcp", g2, sys).value == 1.0
        with pytest.raises(ValueError):
            exponent_constant_power(SCOPA)

    def test_errors(self, g2):
        with pytest.raises(ValueError):
            exponent_scopa(g2, SystemParams(1, DM8, 1.0))
        with pytest.raises(DegenerateSourceError):
            exponent_copa(SourceModel.stationary(1.0), SystemParams(1, DM8, 100.0))


class TestClosedFormGains:
    def test_g2(self, g2):
        sys = SystemParams(1, DM8, 100.0)
        assert gain_scopa_vs_copa(g2, sys).value_db == pytest.approx(7.14, abs=0.5)
        assert gain_coracp_vs_crcp(g2, sys).value_db == pytest.approx(5.74, abs=0.5)
        assert gain_copa_vs_coracp(g2, sys, db_to_linear(25)).value_db == pytest.approx(12.28, abs=0.5)
        assert gain_copa_vs_coracp(g2, sys, 100.0).value_db == pytest.approx(8.16, abs=0.5)

    def test_stationary(self, stationary):
        sys = SystemParams(1, DM8, 100.0)
        assert gain_scopa_vs_copa(stationary, sys).value_db == 0.0
        assert gain_coracp_vs_crcp(stationary, sys).value_db == 0.0
        g = gain_copa_vs_coracp(stationary, sys, 100.0)
        x = 100.0 / T_S
        assert g.value_db == pytest.approx(10 * math.log10(x / math.log(x)), rel=1e-13)
        assert g.value_db == pytest.approx(16.33182050281465, rel=1e-12)
        assert g.p_bar2 == 100.0

    def test_equal_variances(self):
        src = SourceModel([9.0, 9.0], [0.3, 0.7])
        assert gain_scopa_vs_copa(src, SystemParams(1, DM8, 1.0)).value_db == 0.0

    def test_only_max_above(self):
        src = SourceModel([1.0, 9.0], [0.0, 1.0])
        assert gain_coracp_vs_crcp(src, SystemParams(1, DM8, 1.0)).value_db == 0.0

    def test_power_independent_pairs_have_no_p_bar2(self, g2):
        sys = SystemParams(1, DM8, 100.0)
        assert gain_scopa_vs_copa(g2, sys).p_bar2 is None
        assert gain_coracp_vs_crcp(g2, sys).p_bar2 is None

    def test_increasing_in_p_bar2(self, g2):
        sys = SystemParams(1, DM8, 100.0)
        vals = [gain_copa_vs_coracp(g2, sys, db_to_linear(x)).value_db for x in np.arange(5, 40, 0.5)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_domain(self, g2):
        sys = SystemParams(1, DM8, 1.0)
        mask = g2.variances > DM8
        mean_excess = math.fsum((g2.variances[mask] / DM8 - 1) * g2.pmf[mask])
        with pytest.raises(ValueError):
            gain_copa_vs_coracp(g2, sys, mean_excess)
        with pytest.raises(ValueError):
            gain_copa_vs_coracp(g2, sys, 0.5 * mean_excess)


class TestEmpiricalGains:
    def test_same_scheme(self, g2):
        assert empirical_gain(COPA, COPA, g2, SystemParams(1, DM8, 10.0), 1e-3) == 0.0

    def test_power_for_target_inverts(self, rayleigh, g2):
        sys = SystemParams(1, DM8, 10.0)
        for scheme in (SCOPA, COPA, CORACP, CRCP):
            p = power_for_target(scheme, g2, sys, 1e-3)
            assert solve(scheme, g2, rayleigh, sys.with_power(p)).p_dout == pytest.approx(1e-3, rel=1e-8)

    def test_unattainable(self, g2):
        sys = SystemParams(1, DM8, 10.0)
        floor = g2.prob_above(DM8)
        with pytest.raises(UnattainableTargetError):
            power_for_target(SCOPA, g2, sys, min(0.999, floor * 1.01))

    @pytest.mark.parametrize(
        "pair,closed",
        [((SCOPA, COPA), gain_scopa_vs_copa), ((CORACP, CRCP), gain_coracp_vs_crcp)],
    )
    def test_consistency_small_targets(self, g2, pair, closed):
        sys = SystemParams(1, DM8, 100.0)
        ref = closed(g2, sys).value_db
        vals = [empirical_gain(*pair, g2, sys, t) for t in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)]
        assert all(abs(v - ref) <= 0.3 for v in vals)
        assert max(vals) - min(vals) < 0.3

    def test_copa_vs_coracp_at_20db(self, g2):
        got = empirical_gain_at_power(COPA, CORACP, g2, SystemParams(1, DM8, 100.0), 100.0)
        assert got == pytest.approx(9.1, abs=0.7)
