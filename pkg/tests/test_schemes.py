import math

import numpy as np
import pytest

from distortion_outage import (
    COPA,
    CORACP,
    CRCP,
    SCHEMES,
    SCOPA,
    DegenerateSourceError,
    FadingChannel,
    SourceModel,
    SystemParams,
    db_to_linear,
    exp_integral_e1,
    integrate_tail,
    rate_candidates,
    solve,
    solve_copa,
    solve_coracp,
    solve_crcp,
    solve_q1,
    solve_q2,
    solve_scopa,
)
from distortion_outage.numerics import Tolerance, exp_integral_e1_log
from distortion_outage.schemes import (
    canonical_scheme,
    copa_objective,
    crcp_objective,
    expected_power,
    solve_log_q1,
    solve_log_q2,
)

DM8 = db_to_linear(8.0)
QUAD = Tolerance(rel=1e-10, max_iter=20000)


def _quad_power(solution, source, channel):
    """Policy power by direct quadrature over alpha and summation over s."""
    pol = solution.policy
    if solution.scheme == COPA:
        lower = pol.alpha_threshold
        return pol.excess * integrate_tail(lambda a: channel.pdf(a) / a, lower, QUAD)
    total = []
    for s in range(source.n_states):
        if not pol.qualifies[s] or source.pmf[s] == 0:
            continue
        t = pol.excess[s]
        lower = pol.alpha_threshold[s]
        total.append(source.pmf[s] * t * integrate_tail(lambda a: channel.pdf(a) / a, lower, QUAD))
    return math.fsum(total)


def _random_config(rng):
    n = int(rng.integers(1, 6))
    var = rng.uniform(0.5, 30.0, n)
    pmf = rng.dirichlet(np.ones(n))
    pmf = pmf / math.fsum(pmf)
    src = SourceModel(var, pmf / math.fsum(pmf))
    sys = SystemParams(int(rng.choice([1, 2, 5])), db_to_linear(rng.uniform(0, 12)), db_to_linear(rng.uniform(-5, 25)))
    return src, sys


class TestCandidates:
    def test_two_states(self):
        src = SourceModel([4.0, 9.0], [0.5, 0.5])
        got = rate_candidates(src, SystemParams(1, 1.0, 1.0))
        assert got == pytest.approx([1.0, 0.5 * math.log2(9.0)], rel=1e-15)

    def test_empty(self):
        assert rate_candidates(SourceModel([4.0, 9.0], [0.5, 0.5]), SystemParams(1, 16.0, 1.0)) == []

    def test_stationary(self, stationary):
        got = rate_candidates(stationary, SystemParams(1, DM8, 1.0))
        assert got == pytest.approx([0.5 * math.log2(9.0 / DM8)], rel=1e-15)
        assert got[0] == pytest.approx(0.25643, abs=5e-4)

    def test_deduplicated(self):
        src = SourceModel([9.0, 9.0, 4.0], [0.2, 0.3, 0.5])
        assert len(rate_candidates(src, SystemParams(1, 1.0, 1.0))) == 2


class TestQ1:
    def test_e1_target(self, rayleigh):
        assert solve_q1(0.5, rayleigh, 10.0) == pytest.approx(39229.730686562087, rel=1e-9)

    def test_known_point(self, rayleigh):
        assert solve_q1(0.5, rayleigh, exp_integral_e1(1.0)) == pytest.approx(1.0, rel=1e-12)

    def test_residual(self, rayleigh):
        for rate, p in [(0.1, 0.3), (0.7, 5.0), (2.0, 1e3), (0.25, 1e4)]:
            t = 2 ** (2 * rate) - 1
            lq = solve_log_q1(rate, rayleigh, p)
            assert t * exp_integral_e1_log(math.log(t) - lq) == pytest.approx(p, rel=1e-9)

    def test_huge_cutoff(self, rayleigh):
        # q1 beyond the float range is carried in the log domain
        lq = solve_log_q1(0.1, rayleigh, 1e4)
        assert lq > 709 and solve_q1(0.1, rayleigh, 1e4) == math.inf

    def test_custom_channel_equivalence(self, rayleigh):
        custom = FadingChannel.custom(lambda a: math.exp(-a), name="numeric-rayleigh")
        for rate, p in [(0.5, 10.0), (0.5, exp_integral_e1(1.0)), (1.2, 3.0)]:
            assert solve_q1(rate, custom, p) == pytest.approx(solve_q1(rate, rayleigh, p), rel=1e-6)

    @pytest.mark.parametrize("rate,p", [(0.0, 1.0), (-1.0, 1.0), (0.5, 0.0)])
    def test_domain(self, rayleigh, rate, p):
        with pytest.raises(ValueError):
            solve_q1(rate, rayleigh, p)


class TestQ2:
    def test_stationary_reduction(self, rayleigh, stationary):
        sys = SystemParams(1, DM8, 1.0)
        r = 0.5 * math.log2(9.0 / DM8)
        assert solve_q2(stationary, rayleigh, sys) == pytest.approx(solve_q1(r, rayleigh, 1.0), rel=1e-12)

    def test_pmf_merging(self, rayleigh, stationary):
        sys = SystemParams(1, DM8, 3.0)
        split = SourceModel([9.0, 9.0], [0.5, 0.5])
        assert solve_log_q2(split, rayleigh, sys) == pytest.approx(solve_log_q2(stationary, rayleigh, sys), rel=1e-12)

    def test_resubstitution(self, rayleigh, g2):
        sys = SystemParams(1, DM8, 100.0)
        lq = solve_log_q2(g2, rayleigh, sys)
        mask = g2.variances > DM8
        t = g2.variances[mask] / DM8 - 1
        spent = math.fsum(t * g2.pmf[mask] * np.array([exp_integral_e1(x / math.exp(lq)) for x in t]))
        assert spent == pytest.approx(100.0, rel=1e-9)

    def test_no_qualifying_state(self, rayleigh):
        with pytest.raises(DegenerateSourceError):
            solve_q2(SourceModel([1.0, 2.0], [0.5, 0.5]), rayleigh, SystemParams(1, 5.0, 1.0))


class TestCopa:
    def test_stationary_example(self, rayleigh, stationary):
        sol = solve_copa(stationary, rayleigh, SystemParams(1, DM8, 1.0))
        assert sol.r_star == pytest.approx(0.2561912627662112, rel=1e-12)
        # 40-digit reference: 1 - exp(-T/q1) with T E1(T/q1) = 1
        assert sol.p_dout == pytest.approx(0.05532003288195351, rel=1e-9)
        assert sol.threshold == pytest.approx(7.492722835659079, rel=1e-9)

    def test_degenerate(self, rayleigh):
        src = SourceModel([1.0, 4.0], [0.5, 0.5])
        sol = solve_copa(src, rayleigh, SystemParams(1, 5.0, 1.0))
        assert sol.p_dout == 0.0 and sol.r_star == 0.0
        assert np.all(sol.policy.power(np.array([0, 1]), np.array([0.3, 2.0])) == 0.0)

    def test_large_power_rate(self, rayleigh, g2):
        sol = solve_copa(g2, rayleigh, SystemParams(1, DM8, 1e4))
        assert sol.r_star == pytest.approx(0.5 * math.log2(25.0 / DM8), rel=1e-12)
        assert sol.r_star == pytest.approx(0.99312, abs=5e-5)

    def test_tiny_outage_in_log_domain(self, rayleigh, stationary):
        sol = solve_copa(stationary, rayleigh, SystemParams(1, DM8, 100.0))
        assert sol.p_dout == 0.0 or sol.p_dout < 1e-100
        t = 9.0 / DM8 - 1
        # ln p ~ -T/q with ln q ~ P/T - gamma + ln T
        assert sol.log_p_dout == pytest.approx(math.log(t) - sol.log_threshold, rel=1e-9)
        assert sol.log_p_dout < -200


class TestScopa:
    def test_stationary_equals_copa(self, rayleigh, stationary):
        sys = SystemParams(1, DM8, 1.0)
        assert solve_scopa(stationary, rayleigh, sys).p_dout == pytest.approx(
            solve_copa(stationary, rayleigh, sys).p_dout, rel=1e-9
        )

    def test_degenerate(self, rayleigh):
        sol = solve_scopa(SourceModel([1.0, 4.0], [0.5, 0.5]), rayleigh, SystemParams(1, 4.0, 1.0))
        assert sol.p_dout == 0.0

    def test_high_power_asymptote(self, rayleigh, g2):
        sys = SystemParams(1, DM8, 100.0)
        sol = solve_scopa(g2, rayleigh, sys)
        assert sol.threshold > 1e3
        mask = g2.variances > DM8
        approx = math.fsum((g2.variances[mask] / DM8 - 1) * g2.pmf[mask]) / sol.threshold
        assert sol.p_dout == pytest.approx(approx, rel=0.01)

    def test_custom_channel_equivalence(self, rayleigh, g2):
        custom = FadingChannel.custom(lambda a: math.exp(-a), name="numeric-rayleigh")
        sys = SystemParams(1, DM8, db_to_linear(5))
        assert solve_scopa(g2, custom, sys).p_dout == pytest.approx(solve_scopa(g2, rayleigh, sys).p_dout, rel=1e-6)


class TestConstantPower:
    def test_coracp_single_state(self, rayleigh):
        sol = solve_coracp(SourceModel.stationary(25.0), rayleigh, SystemParams(1, DM8, 100.0))
        assert sol.p_dout == pytest.approx(0.02918788888558261, rel=1e-12)
        assert sol.p_dout == pytest.approx(0.02919, abs=1e-5)

    def test_coracp_stationary(self, rayleigh, stationary):
        sol = solve_coracp(stationary, rayleigh, SystemParams(1, DM8, 100.0))
        assert sol.p_dout == pytest.approx(0.004254960626710104, rel=1e-12)

    def test_coracp_degenerate(self, rayleigh):
        assert solve_coracp(SourceModel([1.0, 4.0], [0.5, 0.5]), rayleigh, SystemParams(1, 4.0, 1.0)).p_dout == 0.0

    def test_crcp_stationary(self, rayleigh, stationary):
        sys = SystemParams(1, DM8, 100.0)
        sol = solve_crcp(stationary, rayleigh, sys)
        assert sol.r_star == pytest.approx(0.5 * math.log2(9.0 / DM8), rel=1e-15)
        assert sol.p_dout == pytest.approx(solve_coracp(stationary, rayleigh, sys).p_dout, rel=1e-9)

    def test_crcp_empty(self, rayleigh):
        sol = solve_crcp(SourceModel([1.0, 4.0], [0.5, 0.5]), rayleigh, SystemParams(1, 5.0, 1.0))
        assert sol.r_star == 0.0 and sol.p_dout == 0.0

    def test_crcp_large_power_rate(self, rayleigh, g2):
        sol = solve_crcp(g2, rayleigh, SystemParams(1, DM8, 1e4))
        assert sol.r_star == pytest.approx(0.99312, abs=5e-5)

    def test_coracp_policy(self):
        from distortion_outage.schemes import ConstantPowerAdaptiveRatePolicy

        pol = ConstantPowerAdaptiveRatePolicy(3.0)
        assert pol.power(0, 1.0) == 3.0 and pol.rate(0, 1.0) == pytest.approx(1.0)


class TestSolutionShape:
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_fields(self, rayleigh, g2, scheme):
        sol = solve(scheme, g2, rayleigh, SystemParams(1, DM8, 10.0))
        assert 0 <= sol.p_dout <= 1
        assert (sol.r_star is not None) == (scheme in (COPA, CRCP))
        assert (sol.threshold is not None) == (scheme in (COPA, SCOPA))
        assert sol.log_p_dout == pytest.approx(math.log(sol.p_dout), rel=1e-12)

    def test_aliases(self):
        assert canonical_scheme("scopa") == SCOPA
        assert canonical_scheme("copa-mdo") == COPA
        with pytest.raises(ValueError):
            canonical_scheme("nope")


class TestProperties:
    @pytest.mark.parametrize("scheme", [SCOPA, COPA])
    @pytest.mark.parametrize("label", ["G1", "G2", "U", "S"])
    @pytest.mark.parametrize("p_db", [0.0, 5.0, 10.0])
    def test_power_constraint_equality(self, rayleigh, scheme, label, p_db):
        from distortion_outage import build_experimental_source

        src = build_experimental_source(label)
        sys = SystemParams(1, DM8, db_to_linear(p_db))
        sol = solve(scheme, src, rayleigh, sys)
        assert _quad_power(sol, src, rayleigh) == pytest.approx(sys.p_avg, rel=1e-6)
        assert expected_power(sol, src, rayleigh) == pytest.approx(sys.p_avg, rel=1e-9)

    def test_dominance_random_grid(self, rayleigh):
        rng = np.random.default_rng(20240601)
        for _ in range(50):
            src, sys = _random_config(rng)
            p = {s: solve(s, src, rayleigh, sys) for s in SCHEMES}
            assert p[SCOPA].p_dout <= p[COPA].p_dout + 1e-12
            assert p[COPA].p_dout <= p[CRCP].p_dout + 1e-12
            assert p[SCOPA].log_p_dout <= p[COPA].log_p_dout + 1e-9
            assert p[SCOPA].p_dout <= p[CORACP].p_dout + 1e-12

    @pytest.mark.parametrize("scheme", SCHEMES)
    @pytest.mark.parametrize("label", ["G2", "U", "S"])
    def test_monotone_in_power(self, rayleigh, scheme, label):
        from distortion_outage import build_experimental_source

        src = build_experimental_source(label)
        lp = [solve(scheme, src, rayleigh, SystemParams(1, DM8, db_to_linear(x))).log_p_dout for x in range(-10, 31)]
        assert all(b <= a + 1e-12 * abs(a) for a, b in zip(lp, lp[1:]))

    @pytest.mark.parametrize("seed", range(5))
    def test_candidate_optimality(self, rayleigh, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        src = SourceModel(rng.uniform(1.0, 25.0, n), rng.dirichlet(np.ones(n)))
        # renormalize against rounding
        src = SourceModel.from_weights(src.variances, src.pmf)
        sys = SystemParams(int(rng.choice([1, 2])), db_to_linear(rng.uniform(0, 8)), db_to_linear(rng.uniform(0, 15)))
        cands = rate_candidates(src, sys)
        if not cands:
            pytest.skip("no candidate")
        grid = np.arange(0.0, cands[-1] + 1.0, 1e-3)
        for objective, solver in ((copa_objective, solve_copa), (crcp_objective, solve_crcp)):
            best = solver(src, rayleigh, sys)
            best_obj = objective(best.r_star, src, rayleigh, sys)
            for r in grid:
                assert objective(float(r), src, rayleigh, sys) <= best_obj * (1 + 1e-9) + 1e-15

    def test_stationary_collapse(self, rayleigh, stationary):
        for p_db in (0, 5, 10, 15, 20):
            sys = SystemParams(1, DM8, db_to_linear(p_db))
            a, b = solve_scopa(stationary, rayleigh, sys), solve_copa(stationary, rayleigh, sys)
            assert a.log_p_dout == pytest.approx(b.log_p_dout, rel=1e-9)
            c, d = solve_coracp(stationary, rayleigh, sys), solve_crcp(stationary, rayleigh, sys)
            assert c.log_p_dout == pytest.approx(d.log_p_dout, rel=1e-9)

    def test_boundary_variance_is_not_outage(self, rayleigh):
        src = SourceModel([4.0], [1.0])
        for s in SCHEMES:
            assert solve(s, src, rayleigh, SystemParams(1, 4.0, 1.0)).p_dout == 0.0
