"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Criteria 4 to 7 run the shipped full-scale configs and take a few minutes
each on one core; they use every available core.
"""

import dataclasses
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from monobayes.densities import Triangular
from monobayes.experiments import emit_report, load_config, run_boundary_experiment, run_rate_experiment
from monobayes.grenander import grenander_fit
from monobayes.mixture import (
    K0,
    AtomicMixture,
    StepDensity,
    adaptive_kl_partition,
    distance,
    eval_density,
    kl_divergence,
)
from monobayes.posterior import (
    McmcConfig,
    conjugate_theta_draw,
    effective_sample_size,
    run_posterior,
)
from monobayes.priors import BaseMeasure, PriorSpec, sample_prior
from test_grenander import brute_lcm_density
from test_mixture import brute_density, closed_form_triangular_kl

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
WORKERS = os.cpu_count() or 1


@pytest.fixture
def report_line(capsys):
    def emit(number, ok, detail, seconds):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({seconds:.1f} s) {detail}")

    return emit


def test_criterion_1_oracle_equivalence(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    gren_ok = True
    for _ in range(500):
        data = rng.uniform(0.01, 1.0, int(rng.integers(1, 13)))
        u, dens = brute_lcm_density(data)
        gren_ok &= bool(np.allclose(grenander_fit(data)(u), dens, rtol=1e-9, atol=1e-12))
    eval_ok = True
    for _ in range(1000):
        m = int(rng.integers(1, 10))
        P = AtomicMixture.from_unsorted(rng.uniform(0.01, 1, m), rng.dirichlet(np.ones(m)), 1.0)
        x = float(rng.uniform(0, 1.1))
        eval_ok &= abs(eval_density(P, x) - brute_density(P.atoms, P.weights, x)) <= 1e-12 * max(1, 1 / P.atoms[0])
    u1, u2 = StepDensity.uniform(1.0), StepDensity.uniform(2.0)
    hand = (
        abs(distance(u1, u2, "l1") - 1.0) <= 1e-9
        and abs(distance(u1, u2, "hellinger") - math.sqrt(1 - math.sqrt(0.5))) <= 1e-9
        and abs(kl_divergence(u1, u2) - math.log(2)) <= 1e-9
    )
    dt = time.perf_counter() - t0
    ok = gren_ok and eval_ok and hand and dt < 10
    report_line(1, ok, f"grenander={gren_ok} eval={eval_ok} closed_forms={hand}", dt)
    assert ok


def test_criterion_2_partition_reproduction(report_line):
    t0 = time.perf_counter()
    f = Triangular(1.0)
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    counts, kls, bounds_ok = [], [], True
    for e in eps:
        P, trace = adaptive_kl_partition(f, float(e), 1.0, 2.0)
        counts.append(trace.piece_count)
        bounds_ok &= trace.piece_count <= K0 * 2 ** (2 / 3) / e
        kls.append(closed_form_triangular_kl(P.to_step()))
    slope = float(np.polyfit(np.log(eps), np.log(kls), 1)[0])
    dt = time.perf_counter() - t0
    ok = bounds_ok and abs(slope - 2) <= 0.3 and dt < 30
    report_line(2, ok, f"pieces={counts} KL slope={slope:.3f}", dt)
    assert ok


def test_criterion_3_mcmc_correctness(report_line):
    t0 = time.perf_counter()
    base = BaseMeasure(2.0, 1.0)
    th = conjugate_theta_draw(0.7, 3, base, rng=2024, size=100_000)
    target = 0.3 / math.log(10 / 7)
    conj_ok = abs(th.mean() - target) <= 3 * th.std() / math.sqrt(th.size)

    repro = {}
    for spec in (PriorSpec("dp", 1.0, base), PriorSpec("finite", 1.0, base)):
        d = run_posterior([], spec, McmcConfig(20_000, 1000, 5, seed=5))
        vals = d.values_at(0.5)
        ov = np.array([sample_prior(spec, 500, seed=10**6 + s).to_step()(0.5) for s in range(4000)])
        se = math.sqrt(vals.var() / effective_sample_size(vals).value + ov.var() / ov.size)
        repro[spec.kind] = abs(vals.mean() - ov.mean()) / se
    fin = PriorSpec("finite", 1.0, base)
    k = run_posterior([], fin, McmcConfig(40_000, 1000, 1, seed=3)).k_trace[1000::20]
    q = fin.k_pmf()
    obs = np.array([np.sum(k == 1), np.sum(k == 2), np.sum(k >= 3)])
    chi_ok = bool(stats.chisquare(obs, k.size * np.array([q[0], q[1], q[2:].sum()])).pvalue > 0.01)
    dt = time.perf_counter() - t0
    ok = conj_ok and all(z <= 4 for z in repro.values()) and chi_ok and dt < 120
    z = ", ".join(f"{k} z={v:.2f}" for k, v in repro.items())
    report_line(3, ok, f"conjugate mean {th.mean():.4f} vs {target:.4f}; {z}; K chi-square ok={chi_ok}", dt)
    assert ok


def _rate(name, tmp_path):
    cfg = load_config(CONFIGS / f"{name}.json")
    t0 = time.perf_counter()
    rep = run_rate_experiment(cfg, workers=WORKERS)
    dt = time.perf_counter() - t0
    emit_report(rep, "json", tmp_path / name)
    return rep, dt


def _slope_line(rep):
    radii = ", ".join(f"{r['mean_radius']:.4f}" for r in rep.per_n)
    return f"slope={rep.slope:.3f}±{rep.slope_se:.3f} interval={rep.slope_interval} radii=[{radii}]"


@pytest.mark.slow
def test_criterion_4_global_l1_rate(report_line, tmp_path):
    rep, dt = _rate("l1_rate", tmp_path)
    ok = rep.slope is not None and -0.45 <= rep.slope <= -0.20 and not rep.errors
    report_line(4, ok, _slope_line(rep), dt)
    assert ok


@pytest.mark.slow
def test_criterion_5_boundary(report_line, tmp_path):
    cfg = load_config(CONFIGS / "boundary_zero.json")
    t0 = time.perf_counter()
    rep = run_boundary_experiment(cfg, workers=WORKERS)
    dt = time.perf_counter() - t0
    first, last = rep.per_n[0], rep.per_n[-1]
    pm = (first["posterior_median"]["mae"], last["posterior_median"]["mae"])
    raw = (first["grenander_raw"]["mae"], last["grenander_raw"]["mae"])
    ok = pm[1] < 0.5 * pm[0] and not raw[1] < 0.5 * raw[0] and not rep.errors
    detail = (f"posterior median MAE {pm[0]:.4f} -> {pm[1]:.4f}; "
              f"raw Grenander MAE {raw[0]:.4f} -> {raw[1]:.4f}")
    report_line(5, ok, detail, dt)
    assert ok


@pytest.mark.slow
def test_criterion_6_pointwise_and_sup(report_line, tmp_path):
    lines, ok, total = [], True, 0.0
    for name in ("pointwise_rate", "supnorm_inner"):
        rep, dt = _rate(name, tmp_path)
        total += dt
        good = rep.slope is not None and -0.45 <= rep.slope <= -0.15 and not rep.errors
        ok &= good
        lines.append(f"{name}: {_slope_line(rep)}")
    rep, dt = _rate("supnorm_whole", tmp_path)
    total += dt
    means = [r["mean_radius"] for r in rep.per_n]
    decreasing = rep.monotone_trend and means[-1] < means[0]
    ok &= decreasing
    lines.append("whole-interval radii=[" + ", ".join(f"{m:.3f}" for m in means) + f"] trend={decreasing}")
    report_line(6, ok, "; ".join(lines), total)
    assert ok


@pytest.mark.slow
def test_criterion_7_half_line_rate(report_line, tmp_path):
    rep, dt = _rate("halfline_exponential", tmp_path)
    ok = rep.slope is not None and -0.45 <= rep.slope <= -0.15 and not rep.errors
    report_line(7, ok, f"log correction power {rep.log_correction}; {_slope_line(rep)}", dt)
    assert ok


def test_criterion_8_determinism(report_line, tmp_path):
    t0 = time.perf_counter()
    same = True
    for name, runner in (("l1_rate", run_rate_experiment), ("boundary_zero", run_boundary_experiment),
                         ("l1_rate_finite", run_rate_experiment)):
        cfg = load_config(CONFIGS / f"{name}.json")
        exp = dataclasses.replace(cfg.experiment, n_grid=(250, 500), replications=3)
        if name == "boundary_zero":
            exp = dataclasses.replace(exp, n_grid=(1000, 2000))
        cfg = dataclasses.replace(cfg, experiment=exp, mcmc=dataclasses.replace(cfg.mcmc, iterations=400, burn_in=100))
        outs = []
        for run, workers in enumerate((1, 3, 1)):
            out = tmp_path / f"{name}_{run}"
            rep = runner(cfg, workers=workers)
            emit_report(rep, "json", out)
            emit_report(rep, "csv", out)
            outs.append(out)
        for fname in ("report.json", "radii.csv"):
            blobs = {(o / fname).read_bytes() for o in outs}
            same &= len(blobs) == 1
    dt = time.perf_counter() - t0
    report_line(8, same, "report.json and radii.csv byte-identical across reruns and worker counts", dt)
    assert same
