"""Acceptance criteria 1-10, one test each, at the stated tolerances.

Every test prints a ``criterion N: PASS|FAIL`` line and records it for the
terminal summary; a FAIL line is always accompanied by a failing assertion.
"""

import math

import numpy as np
import pytest

from stablesketch import bounds as B
from stablesketch import estimators as E
from stablesketch import experiments as X
from stablesketch import projector as P
from stablesketch import sampler
from stablesketch.sparsity import sparse_scale_constant

import oracles as O
from conftest import ACCEPTANCE

SEED = 20070101


def report(number, checks):
    """``checks`` is a list of (label, ok, detail); prints and asserts."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{label} {'ok' if good else 'MISS'} ({info})" for label, good, info in checks)
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE.append((number, ok, detail))
    failed = [c[0] for c in checks if not c[1]]
    assert ok, f"criterion {number} failed: {failed}"


def stable_matrix(alpha, trials, k, stream):
    c = np.arange(trials * k, dtype=np.uint64)
    return sampler.stable_variates(alpha, SEED, stream, c).reshape(trials, k)


def gm_rows(x, alpha):
    """estimate_gm applied to every row (vectorized; spot-checked against the scalar API)."""
    k = x.shape[1]
    with np.errstate(divide="ignore"):
        out = np.exp(np.log(np.abs(x)).mean(axis=1) - E.gm_correction_log(k, alpha))
    for row, v in zip(x[:200], out[:200]):
        assert E.estimate_gm(row, alpha).value == pytest.approx(v, rel=1e-12)
    return out


def test_criterion_01_analytic_goldens():
    corr = math.exp(E.gm_correction_log(2, 1.0))
    c1 = sparse_scale_constant(1.0)
    mom = E.stable_abs_moment(1.0, 1.0, 0.5)
    report(1, [
        ("gm correction(k=2,a=1)=2", abs(corr - 2) <= 1e-12, f"err {abs(corr - 2):.1e}"),
        ("C(1)=pi/2", abs(c1 - math.pi / 2) <= 1e-10, f"err {abs(c1 - math.pi / 2):.1e}"),
        ("E|x|^0.5=sqrt2", abs(mom - math.sqrt(2)) <= 1e-10, f"err {abs(mom - math.sqrt(2)):.1e}"),
    ])


def test_criterion_02_unbiasedness():
    checks = []
    for stream, alpha in enumerate((0.5, 1.0, 1.5, 2.0)):
        est = gm_rows(stable_matrix(alpha, 100_000, 10, stream), alpha)
        se = est.std(ddof=1) / math.sqrt(est.size)
        z = (est.mean() - 1.0) / se
        checks.append((f"a={alpha}", abs(z) <= 3, f"mean {est.mean():.4f}, z {z:+.2f}"))
    report(2, checks)


def test_criterion_03_variance():
    checks = []
    stream = 10
    for alpha in (0.5, 1.0, 2.0):
        for k in (5, 10, 50):
            stream += 1
            est = gm_rows(stable_matrix(alpha, 200_000, k, stream), alpha)
            exact = E.gm_variance(k, alpha)
            rel = est.var(ddof=1) / exact - 1
            checks.append((f"a={alpha},k={k}", abs(rel) <= 0.05, f"{rel:+.1%}"))
    for alpha in (0.5, 1.0, 2.0):
        k = 10**4
        ratio = k * E.gm_variance(k, alpha) / B.c_alpha(alpha)
        checks.append((f"asym a={alpha}", abs(ratio - 1) <= 0.01, f"{ratio - 1:+.2%}"))
    report(3, checks)


def test_criterion_04_correction_monotone():
    checks = []
    for alpha in (0.5, 1.0, 1.5):
        ks = np.arange(math.floor(1 / alpha) + 1, 10**4 + 1)
        vals = np.array([E.gm_correction_log(int(k), alpha) for k in ks])
        limit = -float(np.euler_gamma) * (1 - 1 / alpha)
        mono = bool(np.all(np.diff(vals) < 0) and np.all(vals > limit))
        gap = vals[-1] - limit
        checks.append((f"a={alpha}", mono and abs(gap) <= 1e-3, f"decreasing={mono}, gap {gap:.1e}"))
    report(4, checks)


def test_criterion_05_median_vs_gm():
    r5 = E.median_mse_zero_plus(5) / E.power_gm_variance(5)
    r1001 = E.median_mse_zero_plus(1001) / E.power_gm_variance(1001)
    report(5, [
        ("k=5", abs(r5 - 3.26) <= 0.05, f"{r5:.4f}"),
        ("k=1001", abs(r1001 - 1.2680) <= 0.03, f"{r1001:.4f}"),
    ])


def test_criterion_06_mle_moments():
    k, trials = 20, 100_000
    z = sampler.zero_plus_variates(1.0, SEED, 600, np.arange(k * trials, dtype=np.uint64)).reshape(trials, k)
    est = np.array([E.estimate_mle_zero_plus(row).value for row in z[:200]])
    fast = (k - 1) / np.sum(1.0 / z, axis=1)
    np.testing.assert_allclose(est, fast[:200], rtol=1e-13)
    se = fast.std(ddof=1) / math.sqrt(trials)
    zscore = (fast.mean() - 1) / se
    var_rel = fast.var(ddof=1) / (1 / k + 2 / k**2) - 1
    mse = np.mean((fast - 1) ** 2)
    half_normal = (2.0 / k) / 2
    mse_rel = mse / half_normal - 1
    report(6, [
        ("mean", abs(zscore) <= 3, f"{fast.mean():.4f}, z {zscore:+.2f}"),
        ("var vs 1/k+2/k^2", abs(var_rel) <= 0.05, f"{var_rel:+.1%}"),
        ("mse vs h^2/k", abs(mse_rel) <= 0.10, f"{mse_rel:+.1%}; exact 1/(k-2) gives +11.1%"),
    ])


def test_criterion_07_tail_bounds():
    checks = []
    m_r, m_l = B.m_right(1.0, 0.5), B.m_left(1.0, 0.5, 100)
    checks.append(("M_R(1,0.5)", abs(m_r - float(O.m_right(1, 0.5))) < 1e-10 and abs(m_r - 8.16) < 0.005,
                   f"{m_r:.6f}"))
    checks.append(("M_L(1,0.5,100)", abs(m_l - float(O.m_left(1, 0.5, 100))) < 1e-10 and abs(m_l - 2.89) < 0.005,
                   f"{m_l:.6f}"))
    k, k0, trials = 50, 20, 100_000
    for stream, alpha in enumerate((0.5, 1.0, 2.0)):
        est = gm_rows(stable_matrix(alpha, trials, k, 700 + stream), alpha)
        for eps in (0.25, 0.5):
            for side, freq, bound in (
                ("R", np.mean(est >= 1 + eps), B.tail_probability(B.RIGHT_GM, alpha, eps, k)),
                ("L", np.mean(est <= 1 - eps), B.tail_probability(B.LEFT_GM, alpha, eps, k, k0)),
            ):
                p = min(bound, 1.0)
                slack = 3 * math.sqrt(p * (1 - p) / trials)
                checks.append((f"a={alpha},e={eps},{side}", freq <= bound + slack,
                               f"{freq:.4f} vs {bound:.4f}"))
    report(7, checks)


def test_criterion_08_sparse_convergence():
    cfg = X.ExperimentConfig("fig1-mse", seed=SEED, alpha=1.0, eta=2.0, D=[10**4],
                             beta_rule="D-power:0.5", k=[10, 25, 50, 100], trials=10**4)
    _, rows = X.run_experiment(cfg)
    checks = []
    for D, k, beta, mse, se, theory in rows:
        rel = mse / theory - 1
        checks.append((f"k={k}", abs(rel) <= 0.15, f"{rel:+.1%}"))
    report(8, checks)


def test_criterion_09_streaming():
    rng = np.random.default_rng(SEED)
    checks = []
    specs = [P.ProjectionSpec(1.0, 40, 500, 1), P.ProjectionSpec(0.6, 40, 500, 2, P.SPARSE, 0.05),
             P.ProjectionSpec(1.9, 40, 500, 3)]
    for spec in specs:
        for acc in P.ACCUMULATIONS:
            worst = 0.0
            for _ in range(5):
                n = 400
                idx = rng.integers(1, spec.D + 1, n)
                deltas = rng.normal(scale=10, size=n)
                # cancellations: replay a random subset with negated deltas
                undo = rng.choice(n, n // 3, replace=False)
                idx = np.concatenate([idx, idx[undo]])
                deltas = np.concatenate([deltas, -deltas[undo]])
                order = rng.permutation(idx.size)
                s = P.Sketch.zeros(spec).apply_updates(spec, idx[order], deltas[order], accumulation=acc)
                g = np.zeros(spec.D)
                np.add.at(g, idx - 1, deltas)
                ref = P.project_vector(spec, g).values
                rel = np.max(np.abs(s.values - ref) / np.maximum(np.abs(ref), 1e-300))
                worst = max(worst, rel)
                back, spec2 = P.deserialize_sketch(P.serialize_sketch(s, spec))
                if spec2 != spec or back.values.tobytes() != s.values.tobytes():
                    worst = math.inf
            checks.append((f"{spec.mode[:5]} a={spec.alpha} {acc}", worst <= 1e-9, f"max rel {worst:.1e}"))
    s = P.project_vector(specs[0], rng.normal(size=500))
    t = P.sketch_update(P.sketch_update(s, P.UpdateEvent(7, 3e5), specs[0]), P.UpdateEvent(7, -3e5), specs[0])
    checks.append(("+d/-d bit-exact", t.values.tobytes() == s.values.tobytes(), "exact accumulation"))
    report(9, checks)


def test_criterion_10_planner():
    checks = []
    for n, eps, delta in [(10**4, 0.2, 0.05), (10**3, 0.1, 0.01), (10**6, 0.4, 0.1)]:
        plan = B.plan_sample_size(n, eps, delta, 1.0)
        pairs = n * (n - 1) / 2
        replay = pairs * (math.exp(-plan.k * eps**2 / B.m_right(1.0, eps))
                          + math.exp(-plan.k * eps**2 / B.m_left(1.0, eps, plan.k - 1)))
        checks.append((f"replay n={n}", replay <= delta, f"k={plan.k}, bound {replay:.4f}"))
    k3 = B.plan_sample_size(10**3, 0.2, 0.05, 1.0).k
    k6 = B.plan_sample_size(10**6, 0.2, 0.05, 1.0).k
    checks.append(("log n", k6 / k3 <= 2.2, f"k(1e6)/k(1e3) = {k6}/{k3} = {k6 / k3:.3f}"))
    ke = {e: B.plan_sample_size(10**4, e, 0.05, 1.0).k for e in (0.1, 0.2, 0.4)}
    scaled = np.array([k * e * e for e, k in ke.items()])
    spread = scaled.max() / scaled.min() - 1
    checks.append(("1/eps^2", spread <= 0.10,
                   "k eps^2 = " + ", ".join(f"{v:.1f}" for v in scaled) + f", spread {spread:.0%}"))
    report(10, checks)
