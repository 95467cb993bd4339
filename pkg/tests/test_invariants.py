"""Cross-module spec invariants that are cheap enough for the module suite:
color symmetry, thin-parallelogram crossing decay, net probability at strong
thresholds, monotone freezing, and mixed-vs-plain arm domination."""

import numpy as np

from frozenperc.dynamics import frozen_vertices_at, run_frozen
from frozenperc.lattice import Parallelogram
from frozenperc.nearcrit import crossing_probability, estimate_pi
from frozenperc.perctools import ArmSpec, has_net
from frozenperc.randfield import color_at, sample_tau


def test_color_symmetry_at_half():
    po = crossing_probability(0.5, 16, reps=20_000, seed=5, color="o")
    pc = crossing_probability(0.5, 16, reps=20_000, seed=6, color="c")
    se = (po.stderr ** 2 + pc.stderr ** 2) ** 0.5
    assert abs(po.mean - pc.mean) <= 3 * se


def test_thin_parallelogram_crossing_decays_with_aspect():
    means = []
    for aspect in (2, 4, 8):
        box = Parallelogram(0, 16 * aspect, 0, 16)
        est = crossing_probability(0.5, 0, reps=4000, seed=7, box=box)
        means.append(est.mean)
    assert means[0] > means[1] > means[2]


def test_net_probability_high_at_strong_threshold():
    # "lambda driven large": strip crossings in the hard direction approach
    # one, so the whole net does; at p = 0.9 every 6 x 25 strip crosses whp
    hits = 0
    reps = 120
    box = Parallelogram.box((0, 0), 12)
    for r in range(reps):
        tau = sample_tau(Parallelogram.box((0, 0), 20), 91, r)
        if has_net(color_at(tau, 0.9), box, 6.0, "o"):
            hits += 1
    assert hits / reps > 0.9
    # and the closed net at the mirrored threshold
    hits_c = 0
    for r in range(reps):
        tau = sample_tau(Parallelogram.box((0, 0), 20), 91, r)
        if has_net(color_at(tau, 0.1), box, 6.0, "c"):
            hits_c += 1
    assert hits_c / reps > 0.9


def test_frozen_set_monotone_in_time():
    tau = sample_tau(Parallelogram.box((0, 0), 10), 17, 3)
    trace = run_frozen(tau, 4)
    prev = set()
    for t in np.linspace(0.0, 1.0, 9):
        cur = frozen_vertices_at(trace, float(t))
        assert prev <= cur
        prev = cur


def test_half_restricted_pi_below_unrestricted():
    full = estimate_pi(ArmSpec(2, 0, ("o", "c")), 4, 12, reps=4000, seed=9,
                       allow_small=True)
    half = estimate_pi(ArmSpec(2, 1, ("o", "c")), 4, 12, reps=4000, seed=9,
                       allow_small=True)
    assert half.mean <= full.mean + 2 * (half.stderr + full.stderr)
