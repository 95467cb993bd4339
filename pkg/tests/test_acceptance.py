"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line.  Tolerances and replica counts are pinned here from the criteria
statements; pilot-calibrated fixtures (a*, L*) are frozen constants with the
pilot recorded in tests/pilot.py.

The whole module is heavy Monte Carlo; run with -s to watch the lines.
"""

import itertools
import json
import math

import numpy as np
import pytest

from frozenperc import _kernels as K
from frozenperc.dynamics import count_frozen, run_frozen
from frozenperc.harness import ExperimentConfig, emit_outputs, run_experiment
from frozenperc.lattice import Annulus, Parallelogram
from frozenperc.nearcrit import (Estimate, build_pi4_table, correlation_length,
                                 crossing_probability, estimate_pi,
                                 fit_exponent, p_lambda, Unresolved)
from frozenperc.perctools import (ArmSpec, ArrayColors, detect_arms_batch,
                                  has_crossing)
from frozenperc.randfield import TauField, sample_tau

from oracles import arm_oracle, frozen_oracle

pytestmark = pytest.mark.acceptance

SEED = 20260809
ALT = ("o", "c", "o", "c")

# pilot-calibrated fixtures (tests/pilot.py, recorded in the ledger)
A_STAR = 0.25          # criterion 9: P(diam(C(1)) > a* N) >= 0.5 at N = 100
L_STAR = 3             # criterion 11: P(FC(1,2,50) > L*) <= 0.05 pilot value


def report(num, name, ok, detail=""):
    print(f"\nACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


# ---------------------------------------------------------------------------
# shared heavy estimates


@pytest.fixture(scope="module")
def one_arm_bank():
    spec = ArmSpec(1, 0, ("o",))
    bank = {}
    for i, outer in enumerate((8, 16, 32, 64, 128, 256)):
        bank[outer] = estimate_pi(spec, 8, outer, reps=100_000, seed=SEED,
                                  allow_small=True, stream_tag=i, threads=2)
    return bank


@pytest.fixture(scope="module")
def alt4_bank():
    """Direct estimates at small radii plus dyadic octave annuli."""
    spec = ArmSpec(4, 0, ALT)
    bank = {"direct": {}, "octave": {}}
    for i, outer in enumerate((16, 32, 64, 128)):
        bank["direct"][outer] = estimate_pi(
            spec, 8, outer, reps=100_000, seed=SEED + 1, allow_small=True,
            stream_tag=i, threads=2)
    for i, (lo, hi) in enumerate(((16, 32), (32, 64), (64, 128), (128, 256))):
        bank["octave"][(lo, hi)] = estimate_pi(
            spec, lo, hi, reps=100_000, seed=SEED + 1, allow_small=True,
            stream_tag=16 + i, threads=2)
    return bank


def chained_alt4(bank):
    """pi(8, N) estimates: direct to 64, then per-octave calibrated chain.

    kappa is fitted once so that chaining reproduces direct(8, 64) from
    direct(8, 32); quasi-multiplicativity only promises ratios up to a
    constant and a plain product would tilt the fitted slope.
    """
    direct, octv = bank["direct"], bank["octave"]
    kappa = direct[64].mean / (direct[32].mean * octv[(32, 64)].mean)
    rel = {N: direct[N].stderr / direct[N].mean for N in direct}
    out = {16: direct[16], 32: direct[32], 64: direct[64]}
    mean, relvar = direct[64].mean, rel[64] ** 2
    for lo, hi in ((64, 128), (128, 256)):
        est = octv[(lo, hi)]
        mean = mean * est.mean * kappa
        relvar += (est.stderr / est.mean) ** 2
        out[hi] = Estimate(mean=mean, stderr=mean * math.sqrt(relvar),
                           n=est.n)
    return out, kappa


@pytest.fixture(scope="module")
def pi4_table():
    return build_pi4_table([32, 64, 128], reps=40_000, seed=SEED + 2,
                           direct_limit=64)


# ---------------------------------------------------------------------------
# criteria


def test_c01_criticality_sanity():
    est = crossing_probability(0.5, 32, reps=20_000, seed=SEED, threads=2)
    ok_half = abs(est.mean - 0.5) <= 3 * est.stderr
    # duality: exhaustive on boxes up to 12 vertices
    ok_dual = True
    for na, nb in ((2, 2), (3, 3), (3, 4), (4, 3), (2, 6), (6, 2)):
        box = Parallelogram(0, na - 1, 0, nb - 1)
        for bits in range(1 << (na * nb)):
            mask = np.array([(bits >> i) & 1 for i in range(na * nb)],
                            bool).reshape(na, nb)
            v = ArrayColors(box, mask)
            if has_crossing(v, box, "horizontal", "o") == \
                    has_crossing(v, box, "vertical", "c"):
                ok_dual = False
                break
        if not ok_dual:
            break
    # and on sampled larger configurations
    rng = np.random.default_rng(SEED)
    box = Parallelogram.box((0, 0), 6)
    for _ in range(500):
        v = ArrayColors(box, rng.random((13, 13)) < rng.uniform(0.2, 0.8))
        if has_crossing(v, box, "horizontal", "o") == \
                has_crossing(v, box, "vertical", "c"):
            ok_dual = False
            break
    report(1, "criticality sanity", ok_half and ok_dual,
           f"P(H_o(B(32))) = {est.mean:.4f} +- {est.stderr:.4f}, "
           f"duality exhaustive+sampled {'ok' if ok_dual else 'violated'}")


def test_c02_one_arm_exponent(one_arm_bank):
    pts = [(n, e) for n, e in sorted(one_arm_bank.items())
           if not e.degenerate]
    slope, se = fit_exponent(pts)
    ok = 0.07 <= slope <= 0.14
    report(2, "1-arm exponent", ok,
           f"slope = {slope:.4f} +- {se:.4f}, target 5/48 = {5/48:.4f}, "
           f"band [0.07, 0.14]")


def test_c03_four_arm_exponent(alt4_bank):
    chain, kappa = chained_alt4(alt4_bank)
    slope, se = fit_exponent(sorted(chain.items()))
    ok = 1.05 <= slope <= 1.45
    report(3, "4-arm alternating exponent", ok,
           f"slope = {slope:.4f} +- {se:.4f} (kappa = {kappa:.3f}), "
           f"target 1.25, band [1.05, 1.45]")


def test_c04_half_plane_three_arm_exponent():
    spec = ArmSpec(3, 3, ("o", "c", "o"))
    pts = []
    for i, outer in enumerate((16, 32, 64, 128)):
        pts.append((outer, estimate_pi(spec, 8, outer, reps=100_000,
                                       seed=SEED + 3, allow_small=True,
                                       stream_tag=i, threads=2)))
    slope, se = fit_exponent(pts)
    ok = 1.6 <= slope <= 2.4
    report(4, "half-plane 3-arm exponent", ok,
           f"slope = {slope:.4f} +- {se:.4f}, target 2.0, band [1.6, 2.4]")


def test_c05_mixed_arm_decay():
    reps = 100_000
    est = {}
    for i, (l, outer) in enumerate(itertools.product((3, 0), (32, 128))):
        spec = ArmSpec(4, l, ALT)
        est[(l, outer)] = estimate_pi(spec, 16, outer, reps=reps,
                                      seed=SEED + 4, allow_small=True,
                                      stream_tag=i, threads=2)
    r2 = est[(3, 32)].mean / est[(0, 32)].mean
    r8 = est[(3, 128)].mean / est[(0, 128)].mean
    se_r2 = r2 * math.hypot(est[(3, 32)].stderr / est[(3, 32)].mean,
                            est[(0, 32)].stderr / est[(0, 32)].mean)
    se_r8 = r8 * math.hypot(est[(3, 128)].stderr / est[(3, 128)].mean,
                            est[(0, 128)].stderr / est[(0, 128)].mean)
    gap = r2 - r8
    se = math.hypot(se_r2, se_r8)
    ok = gap >= 2 * se
    report(5, "mixed-arm decay", ok,
           f"ratio(16,32) = {r2:.4f} +- {se_r2:.4f} vs ratio(16,128) = "
           f"{r8:.4f} +- {se_r8:.4f}; gap {gap:.4f} >= 2 se ({2*se:.4f})")


def test_c06_quasi_multiplicativity(one_arm_bank, alt4_bank):
    out = []
    # (1, 0, o)
    mid = estimate_pi(ArmSpec(1, 0, ("o",)), 32, 128, reps=100_000,
                      seed=SEED + 5, allow_small=True, stream_tag=0, threads=2)
    q1 = one_arm_bank[32].mean * mid.mean / one_arm_bank[128].mean
    out.append(("1-arm", q1))
    # (4, 0, alt)
    mid4 = estimate_pi(ArmSpec(4, 0, ALT), 32, 128, reps=100_000,
                       seed=SEED + 5, allow_small=True, stream_tag=1, threads=2)
    q4 = alt4_bank["direct"][32].mean * mid4.mean / alt4_bank["direct"][128].mean
    out.append(("4-arm-alt", q4))
    ok = all(0.1 <= q <= 10 for _, q in out)
    report(6, "quasi-multiplicativity band", ok,
           "; ".join(f"{name}: pi(8,32)pi(32,128)/pi(8,128) = {q:.3f}"
                     for name, q in out))


def test_c07_correlation_length_scaling(pi4_table):
    ratios = {}
    for N in (32, 64, 128):
        p = p_lambda(1.0, N, pi4_table)
        L = correlation_length(p.p, 0.25, n_max=2048, reps=2000, seed=SEED + N)
        assert not isinstance(L, Unresolved), f"L unresolved at N={N}, p={p.p}"
        ratios[N] = L / N
    spread = max(ratios.values()) / min(ratios.values())
    ok = spread <= 2.0
    report(7, "correlation-length scaling", ok,
           f"L/N = { {n: round(r, 3) for n, r in ratios.items()} }, "
           f"max/min = {spread:.3f} <= 2")


def test_c08_frozen_probability_decay():
    cfg = ExperimentConfig(experiment="origin-freeze", N=[25, 50, 100],
                           reps=2000, seed=SEED + 6, margin_factor=2.0)
    res = run_experiment(cfg).results
    means = [res[str(n)]["mean"] for n in (25, 50, 100)]
    ses = [res[str(n)]["stderr"] for n in (25, 50, 100)]
    ok = all(means[i + 1] <= means[i] + 2 * math.hypot(ses[i], ses[i + 1])
             for i in range(2))
    report(8, "frozen-probability decay", ok,
           f"P(origin frozen) = {[round(m, 4) for m in means]} over N = "
           f"[25, 50, 100] (2 se rule)")


def test_c09_macroscopic_but_subcritical():
    cfg = ExperimentConfig(experiment="diam-hist", N=[100], K=0.0,
                           margin_factor=2.0, reps=2000, seed=SEED + 7)
    rec = run_experiment(cfg).results["100"]
    p_below = rec["p_below_1"]
    # recompute P(diam > a* N) from the stored quantile grid is too coarse;
    # rerun the ratio tally directly
    hist = np.array(rec["hist"])
    edges = np.array(rec["bin_edges"])
    idx = np.searchsorted(edges, A_STAR)
    p_above_astar = hist[idx:].sum() / rec["n"]
    ok_b = p_below >= 0.9
    ok_a = p_above_astar >= 0.5
    # Known finite-size gap: the frozen fraction decays like N^(-5/48), which
    # is ~0.4 at N = 100, so P(diam < N) ~ 0.6 at any desk scale; the 0.9
    # threshold is recorded as unattainable in the ledger. The assertion is
    # kept as stated.
    report(9, "macroscopic-but-subcritical diameters", ok_b and ok_a,
           f"P(diam < N) = {p_below:.3f} (>= 0.9 required), "
           f"P(diam > {A_STAR} N) = {p_above_astar:.3f} (>= 0.5 required)")


@pytest.fixture(scope="module")
def freeze_lambda_runs(pi4_table, tmp_path_factory):
    path = tmp_path_factory.mktemp("pi4") / "table.json"
    # table with entries at 50 and 100 for the lambda map
    table = build_pi4_table([50, 100], reps=40_000, seed=SEED + 8,
                            direct_limit=128)
    table.save(path)
    out = {}
    for N in (50, 100):
        cfg = ExperimentConfig(experiment="freeze-lambda", N=[N], K=2.0,
                               margin_factor=2.0, reps=2000, seed=SEED + 9,
                               table_path=str(path))
        out[N] = run_experiment(cfg).results[str(N)]
    return out


def test_c10_freeze_window_concentration(freeze_lambda_runs):
    lam_star = {}
    mono_ok = True
    for N, rec in freeze_lambda_runs.items():
        hist = np.array(rec["hist"], float)
        edges = np.array(rec["bin_edges"])
        total = rec["count"]
        tails = [(edges[i], (hist[i:].sum() + rec["overflow"]) / total)
                 for i in range(len(hist))]
        masses = [t for _, t in tails]
        mono_ok = mono_ok and all(x >= y - 1e-12 for x, y in zip(masses, masses[1:]))
        lam_star[N] = next(lam for lam, t in tails if t <= 0.1)
    ratio = lam_star[100] / lam_star[50] if lam_star[50] != 0 else float("inf")
    ok = mono_ok and 0.5 <= ratio <= 2.0
    report(10, "freeze-window concentration", ok,
           f"Lambda*(50) = {lam_star[50]}, Lambda*(100) = {lam_star[100]}, "
           f"ratio {ratio:.2f} in [1/2, 2]; tails nonincreasing: {mono_ok}")


def test_c11_fc_tightness():
    recs = {}
    for N in (50, 100):
        cfg = ExperimentConfig(experiment="fc-count", N=[N], K=2.0,
                               margin_factor=2.0, reps=2000, seed=SEED + 10)
        recs[N] = run_experiment(cfg).results[str(N)]

    def tail(rec, L):
        dist = {int(k): v for k, v in rec["dist"].items()}
        n = sum(dist.values())
        return sum(v for k, v in dist.items() if k > L) / n

    t50 = tail(recs[50], L_STAR)
    t100 = tail(recs[100], L_STAR)
    ok = t50 <= 0.05 and t100 <= 0.10
    report(11, "FC tightness", ok,
           f"L* = {L_STAR}: P(FC(1,2,50) > L*) = {t50:.4f} <= 0.05, "
           f"P(FC(1,2,100) > L*) = {t100:.4f} <= 0.10")


def _all_specs():
    specs = []
    for k in (1, 2, 3, 4):
        for sigma in itertools.product("oc", repeat=k):
            for l in range(k + 1):
                halves = ("upper",) if l == 0 else ("upper", "lower",
                                                    "left", "right")
                for half in halves:
                    specs.append(ArmSpec(k, l, sigma, half))
    return specs


def test_c12_arm_detector_exactness():
    specs = _all_specs()
    rng = np.random.default_rng(SEED + 11)
    mismatches = 0
    fields = 0
    for outer in (5, 6):
        ann = Annulus((0, 0), 2, outer)
        n = 2 * outer + 1
        box = Parallelogram.box((0, 0), outer)
        for _ in range(256):
            fields += 1
            view = ArrayColors(box, rng.random((n, n)) < 0.5)
            got = detect_arms_batch(view, ann, specs)
            for spec, g in zip(specs, got):
                if g != arm_oracle(view, ann, spec):
                    mismatches += 1
                    print("  mismatch:", outer, spec)
    ok = mismatches == 0 and fields >= 500
    report(12, "arm-detector exactness", ok,
           f"{fields} fields x {len(specs)} specs on A(2,5)+A(2,6): "
           f"{mismatches} mismatches")


def test_c13_frozen_dynamics_exactness():
    rng = np.random.default_rng(SEED + 12)
    shapes = [(1, 12), (2, 6), (3, 4), (4, 3), (12, 1), (6, 2)]
    mism = 0
    for trial in range(1000):
        na, nb = shapes[trial % len(shapes)]
        w = Parallelogram(0, na - 1, 0, nb - 1)
        t = TauField(window=w, seed=0, stream_id=0, values=rng.random((na, nb)))
        N = 1 + trial % 3
        metric = "cartesian-linf" if trial % 2 == 0 else "coeff-linf"
        tr = run_frozen(t, N, metric)
        want_open, want_times = frozen_oracle(t, N, metric)
        if tr.final_open_set() != want_open or \
                not np.allclose(sorted(e.time for e in tr.events),
                                sorted(want_times)):
            mism += 1
    # 4-path N=2 probability vs the 24-ordering enumeration
    cells = [(0, 0), (1, 0), (2, 0), (3, 0)]
    hits = 0
    for perm in itertools.permutations(range(4)):
        vals = np.array([(perm[i] + 1) / 5 for i in range(4)]).reshape(4, 1)
        t = TauField(window=Parallelogram(0, 3, 0, 0), seed=0, stream_id=0,
                     values=vals)
        open_set, _ = frozen_oracle(t, 2)
        hits += (3, 0) in open_set
    exact = hits / 24
    reps = 100_000
    mc = 0
    w = Parallelogram(0, 3, 0, 0)
    for r in range(reps):
        tr = run_frozen(sample_tau(w, SEED + 13, r), 2)
        mc += tr.is_open_at((3, 0), 1.0)
    phat = mc / reps
    se = math.sqrt(phat * (1 - phat) / reps)
    ok = mism == 0 and abs(phat - exact) <= 3 * se
    report(13, "frozen-dynamics exactness", ok,
           f"1000 oracle fields: {mism} mismatches; 4-path P = {phat:.4f} vs "
           f"enumerated {exact:.4f} (3 se = {3*se:.4f})")


def test_c14_gridpath_lemma():
    from frozenperc.nicegeo import (GuaranteeNotMet, Region, extract_gridpath,
                                    verify_gridpath)
    rng = np.random.default_rng(SEED + 14)
    failures = 0
    checked = 0
    for trial in range(100):
        if trial % 2 == 0:
            blobs = []
            x = 0
            for _ in range(int(rng.integers(2, 5))):
                blobs.append((x, int(rng.integers(-70, 70)),
                              int(rng.integers(160, 260))))
                x += int(rng.integers(100, 200))
            reg = Region.blob_union(blobs)
            if not reg.is_connected():
                continue
            a = b = 120
        else:
            reg = Region.corridor(int(rng.integers(2000, 5000)),
                                  int(rng.integers(320, 600)))
            a = b = 150
        checked += 1
        try:
            g = extract_gridpath(reg, a, b)
            okv, diam = verify_gridpath(g, reg)
            if not okv or diam < reg.diameter() - 2 * a - 2 * b - 12:
                failures += 1
        except GuaranteeNotMet:
            failures += 1
    # the lemma-scale corridor at the true constants
    big = Region.corridor(60_000, 2500)
    a = b = 2000
    try:
        g = extract_gridpath(big, a, b)
        okv, diam = verify_gridpath(g, big)
        big_ok = okv and diam >= big.diameter() - 2 * a - 2 * b - 12
        big_detail = f"corridor diam {diam} >= {big.diameter() - 4 * a - 12}"
    except GuaranteeNotMet as e:
        big_ok = False
        big_detail = f"GuaranteeNotMet: {e}"
    ok = failures == 0 and checked >= 90 and big_ok
    report(14, "gridpath lemma", ok,
           f"{checked} generalized regions, {failures} failures; {big_detail}")


def test_c15_lowest_vertex_non_concentration():
    cfg = ExperimentConfig(experiment="lowest-band", N=[64], reps=5000,
                           seed=SEED + 15, lambdas=[0.0],
                           spec={"bands": 8, "b": 1.0, "a": 0.25})
    rec = run_experiment(cfg).results["64"]
    freqs = rec["band_freq"]
    ok = max(freqs) <= 4 / 8 and max(freqs) <= 0.5
    report(15, "lowest-vertex non-concentration", ok,
           f"band freqs = {[round(f, 3) for f in freqs]}, "
           f"max {max(freqs):.3f} <= 0.5")


def test_c16_determinism_across_threads(tmp_path):
    outs = {}
    for threads in (1, 2):
        cfg = ExperimentConfig(experiment="origin-freeze", N=[12, 16],
                               reps=400, seed=SEED + 16, threads=threads,
                               out_dir=str(tmp_path / f"t{threads}"))
        bundle = run_experiment(cfg)
        paths = emit_outputs(bundle, ("csv", "json"))
        outs[threads] = {p.split("/")[-1]: open(p, "rb").read()
                         for p in paths if not p.endswith(".time.txt")}
    ok = outs[1] == outs[2] and len(outs[1]) == 2
    report(16, "determinism across threads", ok,
           f"CSV/JSON byte-identical across --threads 1/2: {ok}")
