import json
import math

import numpy as np
import pytest

from cskor.boundary import membership
from cskor.distributions import Atomic, Uniform
from cskor.embedding import build_map
from cskor.errors import DegenerateDistributionError, NumericalError, RunawayPathError, ValidationError
from cskor.simulate import (
    DomainOracle,
    VerifyConfig,
    consistency_report,
    consistency_sample,
    dumps17,
    estimate_rate,
    ks_test,
    minimal_rate,
    run_verification,
    simulate_batch,
    simulate_exit,
    survival_curve,
)

# fixed seed shared with the CLI examples
SEED = 7


class TestOracle:
    def test_catenary(self, mc, uniform_curve):
        o = mc.catenary_oracle
        assert o.classify(0, 0) == "inside"
        assert o.classify(0, -1) == "outside"
        assert o.classify(2, 0) == "outside"
        for x, y in zip(uniform_curve.x[1:-1:211], uniform_curve.y[1:-1:211]):
            assert o.classify(x, y) == "boundary-band"

    def test_catenary_distance_is_tangent_gap(self, mc):
        # the catenary is flat at x = 0, so the distance is the vertical gap there
        _, dist = mc.catenary_oracle.probe(0.0, 0.0)
        assert dist == pytest.approx(2 * math.log(2) / math.pi, abs=1e-7)

    def test_strip_and_slits(self):
        s = DomainOracle.strip(-1, 1, [(0.0, -0.5)])
        assert s.classify(0.5, -10) == "inside"
        assert s.classify(0.0, -1.0) == "boundary-band"
        assert s.classify(0.0, 0.0) == "inside"
        assert s.classify(1.5, 0.0) == "outside"
        with pytest.raises(ValidationError):
            DomainOracle.strip(1, -1)

    def test_halfplane_and_slot(self):
        h = DomainOracle.halfplane(-1.0)
        assert h.classify(5, 0) == "inside" and h.classify(0, -2) == "outside"
        s = DomainOracle.slot_complement(1.0, -1.0)
        assert s.classify(0, -0.5) == "inside" and s.classify(0, -2) == "outside"
        assert s.classify(3, -50) == "inside"

    def test_point_mass(self):
        with pytest.raises(DegenerateDistributionError):
            DomainOracle.from_atomic(Atomic([1.0], [1.0]))


class TestSimulation:
    def test_exit_record(self, mc, uniform_curve):
        rec = simulate_exit(mc.catenary_oracle, seed=3, path_index=12)
        assert rec.tau > 0 and rec.steps > 0 and rec.path_seed == 12
        assert membership(uniform_curve, rec.exit_point, band=1e-8) == "boundary-band"

    def test_streams_are_per_path(self, mc):
        batch = simulate_batch(mc.catenary_oracle, 40, seed=5)
        rec = simulate_exit(mc.catenary_oracle, seed=5, path_index=17)
        assert rec.exit_point == (batch.x[17], batch.y[17]) and rec.tau == batch.tau[17]

    def test_workers_do_not_change_results(self, mc):
        a = simulate_batch(mc.strip_oracle, 5000, seed=2)
        b = simulate_batch(mc.strip_oracle, 5000, seed=2, workers=2)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.tau, b.tau)

    def test_exits_lie_on_boundary(self, mc):
        batch = simulate_batch(mc.strip_oracle, 500, seed=9)
        assert {mc.strip_oracle.classify(x, y) for x, y in zip(batch.x, batch.y)} == {"boundary-band"}

    def test_runaway(self):
        with pytest.raises(RunawayPathError, match="runaway path"):
            simulate_batch(DomainOracle.halfplane(-1.0), 10, seed=0, max_steps=50)

    @pytest.mark.parametrize(
        "kw",
        [dict(dt_max=1e-2), dict(dt_max=0.0), dict(n_paths=0), dict(seed=-1), dict(start=(5.0, 0.0))],
    )
    def test_bad_arguments(self, mc, kw):
        args = dict(n_paths=4, seed=0)
        args.update(kw)
        with pytest.raises(ValidationError):
            simulate_batch(mc.strip_oracle, **args)


class TestStripBenchmark:
    def test_symmetry(self, mc):
        rep = mc.strip(SEED)
        assert abs(rep.extras["mean_exit_x"]) <= 0.01
        assert rep.extras["atom_frequencies"][1] == pytest.approx(0.5, abs=0.005)

    def test_mean_exit_time(self, mc):
        # E[tau] = (1 - x)(1 + x) at x = 0
        assert mc.strip(SEED).moment_estimates[2.0] == pytest.approx(1.0, abs=0.02)

    def test_step_size_bias(self, mc):
        coarse, fine = mc.strip(SEED, 20_000), mc.strip(SEED, 20_000, dt_max=5e-5)
        # standard error of the two-atom KS statistic
        se = 0.5 / math.sqrt(20_000)
        assert abs(coarse.ks_stat - fine.ks_stat) < se


class TestCatalogDomains:
    def test_catenary_mean(self, mc):
        assert abs(mc.catenary(SEED).extras["mean_exit_x"]) <= 0.01

    def test_catenary_exit_time(self, mc):
        # E[tau] = E[X^2] = 1/3
        assert mc.catenary(SEED).moment_estimates[2.0] == pytest.approx(1 / 3, abs=0.01)

    def test_arcsine_moment_stable(self, arcsine, arcsine_curve):
        o = DomainOracle.from_curve(arcsine_curve)
        first = simulate_batch(o, 20_000, seed=SEED)
        second = simulate_batch(o, 20_000, seed=SEED, first_path=20_000)
        m1 = np.mean(first.tau**0.5)
        m2 = np.mean(np.concatenate((first.tau, second.tau)) ** 0.5)
        assert abs(m2 - m1) / m2 < 0.02
        assert np.mean(np.concatenate((first.tau, second.tau))) == pytest.approx(0.5, abs=0.01)

    def test_hypsech_parabola(self, hypsech, hypsech_curve):
        rep = run_verification(hypsech, hypsech_curve, 100_000, VerifyConfig(seed=SEED))
        assert rep.ks_p_value > 0.01

    def test_slot_complement_has_no_finite_moment(self):
        o = DomainOracle.slot_complement(1.0, -1.0)
        batch = simulate_batch(o, 8000, seed=3, dt_max=1e-3, far_field=1.0, max_steps=10**6, allow_runaway=True)
        root = batch.tau**0.5
        means = np.array([np.mean(root[:n]) for n in (1000, 2000, 4000, 8000)])
        change = np.abs(np.diff(means)) / means[1:]
        assert np.all(change > 0.02)


class TestKS:
    def test_single_point(self):
        res = ks_test([0.5], lambda x: np.clip(x, 0, 1))
        assert res.stat == 0.5 and math.isnan(res.p_value)

    def test_calibration(self):
        d = Uniform(-1, 1)
        fails = sum(ks_test(np.random.default_rng(s).uniform(-1, 1, 10_000), d.cdf).p_value <= 0.01 for s in range(200))
        assert fails <= 2

    def test_shift_detected(self):
        x = np.random.default_rng(0).uniform(-1, 1, 10_000) + 0.1
        assert ks_test(x, Uniform(-1, 1).cdf).p_value < 1e-6

    def test_empty(self):
        with pytest.raises(ValidationError):
            ks_test([], lambda x: x)


class TestRate:
    def test_synthetic_exponential(self):
        t = np.linspace(0, 3, 301)
        fit = estimate_rate(t, np.exp(-3 * t))
        assert fit.rate == pytest.approx(3.0, abs=1e-6) and fit.r2 == pytest.approx(1.0)

    def test_empty_window(self):
        t = np.linspace(0, 1, 50)
        with pytest.raises(NumericalError, match="no exponential regime detected"):
            estimate_rate(t, np.exp(-0.1 * t))

    def test_heavy_tail_rejected(self):
        t = np.geomspace(1e-2, 1e8, 300)
        with pytest.raises(NumericalError, match="no exponential regime detected"):
            estimate_rate(t, np.minimum(1.0, t**-0.25))

    def test_survival_curve(self):
        t, s = survival_curve([1.0, 2.0, 3.0, 4.0], n_grid=4)
        assert t[0] == 1.0 and t[-1] == 4.0
        # grid 1, 4^(1/3), 4^(2/3), 4
        assert np.allclose(s, [0.75, 0.75, 0.5, 0.0])

    @pytest.mark.parametrize(
        "support, expect",
        [((-1, 1), math.pi**2 / 8), ((-math.inf, math.inf), 0.0), ((0, math.pi), 0.5)],
    )
    def test_minimal_rate(self, support, expect):
        assert minimal_rate(support) == pytest.approx(expect, rel=1e-15)


class TestConsistency:
    def test_forced_angle(self, uniform_map):
        from cskor.embedding import boundary_x

        assert boundary_x(uniform_map, math.pi) == 0.0

    def test_arcsine(self, arcsine, arcsine_map):
        vals = consistency_sample(arcsine_map, 100_000, seed=SEED)
        assert ks_test(vals, arcsine.cdf).p_value > 0.01

    def test_uniform_mean(self, uniform_map):
        rep = consistency_report(uniform_map, 100_000, seed=SEED)
        assert rep["mode"] == "consistency" and abs(rep["sample_mean"]) <= 0.01

    def test_needs_source(self):
        from cskor.embedding import AnalyticMap

        with pytest.raises(ValidationError):
            consistency_sample(AnalyticMap(np.zeros(4)), 10)


class TestReport:
    def test_deterministic(self, mc):
        cfg = VerifyConfig(seed=11)
        a = run_verification(mc.two_point, mc.strip_oracle, 3000, cfg).to_json()
        b = run_verification(mc.two_point, mc.strip_oracle, 3000, cfg).to_json()
        assert a == b

    def test_fields(self, mc):
        rep = json.loads(mc.strip(SEED, 20_000).to_json())
        assert 0 <= rep["ks_stat"] <= 1
        assert rep["formula_rate"] == pytest.approx(math.pi**2 / 8)
        assert rep["moment_convention"] == "E[tau^(p/2)]"
        assert rep["rate_fit"]["rate"] >= 0

    def test_dumps17(self):
        text = dumps17({"b": 0.1, "a": [math.inf, math.nan, 2], "c": np.float64(1 / 3)})
        assert text.index('"a"') < text.index('"b"')
        assert '"inf", "nan", 2' in text and "0.33333333333333331" in text
        assert json.loads(text)["b"] == 0.1

    def test_survival_csv(self, mc, tmp_path):
        rep = mc.strip(SEED, 20_000)
        rep.write_survival_csv(tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "t,survival" and len(lines) == 257

    def test_point_mass(self, mc):
        with pytest.raises(DegenerateDistributionError):
            run_verification(Atomic([0.0], [1.0]), mc.strip_oracle, 10)
