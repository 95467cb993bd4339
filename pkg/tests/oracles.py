"""Independent brute-force oracles used by the test suite.

These deliberately avoid the package's sector/union-find machinery: arm
events are decided by backtracking over explicit vertex-disjoint paths,
frozen dynamics by recomputing every cluster diameter from scratch at every
step, and the lowest two-arm set by enumerating path pairs.
"""

import itertools

from frozenperc.lattice import neighbors

STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


def ring_walk(m, center=(0, 0)):
    ca, cb = center
    walk = []
    walk.extend(((ca - m + t, cb - m) for t in range(2 * m)))
    walk.extend(((ca + m, cb - m + t) for t in range(2 * m)))
    walk.extend(((ca + m - t, cb + m) for t in range(2 * m)))
    walk.extend(((ca - m, cb + m - t) for t in range(2 * m)))
    return walk


def in_half(v, center, half):
    a, b = v[0] - center[0], v[1] - center[1]
    return {"upper": b >= 0, "lower": b <= 0, "left": a <= 0, "right": a >= 0}[half]


class _BitAnnulus:
    """Annulus scratch for the oracle: cells indexed into machine-int
    bitmasks (adjacency, colors, rim, halves, anchored contacts)."""

    def __init__(self, view, ann):
        center, inner, outer = ann.center, ann.inner, ann.outer
        cells = []
        idx = {}
        for v in ann.vertices():
            idx[v] = len(cells)
            cells.append(v)
        self.cells = cells
        self.idx = idx
        self.nbr = []
        for v in cells:
            m = 0
            for d in STEPS:
                w = (v[0] + d[0], v[1] + d[1])
                if w in idx:
                    m |= 1 << idx[w]
            self.nbr.append(m)
        self.rim = 0
        for v in cells:
            if max(abs(v[0] - center[0]), abs(v[1] - center[1])) == outer:
                self.rim |= 1 << idx[v]
        self.open_bits = 0
        self.closed_bits = 0
        for v in cells:
            if view.is_open(v):
                self.open_bits |= 1 << idx[v]
            if view.is_closed(v):
                self.closed_bits |= 1 << idx[v]
        self.half_bits = {}
        for half in ("upper", "lower", "left", "right"):
            m = 0
            for v in cells:
                if in_half(v, center, half):
                    m |= 1 << idx[v]
            self.half_bits[half] = m
        mm = inner + 1
        self.contacts = []
        for t, v in enumerate(ring_walk(mm, center)):
            da, db = v[0] - center[0], v[1] - center[1]
            if (da, db) in ((mm, mm), (-mm, -mm)):
                continue
            if v in idx:
                self.contacts.append((t, idx[v]))


def arm_oracle(view, ann, spec):
    """Backtracking disjoint-path search for the mixed arm event.

    Arms are chordless paths (any valid family shortcut in place stays
    valid), enumerated in strictly increasing inner-anchor order; every
    cyclic rotation of sigma with its half designations attached is tried,
    so any valid counterclockwise family is found when cut at its minimal
    anchor.
    """
    ba = _BitAnnulus(view, ann)
    nbr, rim = ba.nbr, ba.rim
    k, l = spec.k, spec.l

    def region_bits(color, confined):
        bits = ba.open_bits if color == "o" else ba.closed_bits
        if confined:
            bits &= ba.half_bits[spec.half]
        return bits

    def reach_rim(start_mask, allowed):
        seen = start_mask & allowed
        frontier = seen
        while frontier:
            if frontier & rim:
                return True
            acc = 0
            f = frontier
            while f:
                b = f & -f
                acc |= nbr[b.bit_length() - 1]
                f ^= b
            frontier = acc & allowed & ~seen
            seen |= frontier
        return False

    def try_rotation(rot):
        def place(j, min_anchor, used):
            if j == k:
                return True
            color, confined = rot[j]
            allowed = region_bits(color, confined) & ~used
            for t, s in ba.contacts:
                if t < min_anchor:
                    continue
                sbit = 1 << s
                if not (sbit & allowed):
                    continue
                path = [s]
                onpath = sbit

                def walk_path():
                    nonlocal onpath
                    head = path[-1]
                    hbit = 1 << head
                    if hbit & rim:
                        # extending past the rim only uses more vertices
                        return place(j + 1, t + 1, used | onpath)
                    if not reach_rim(nbr[head] | hbit, allowed & ~(onpath & ~hbit)):
                        return False
                    cand = nbr[head] & allowed & ~onpath
                    while cand:
                        b = cand & -cand
                        cand ^= b
                        w = b.bit_length() - 1
                        # chordless: w may touch only the current head
                        if nbr[w] & onpath & ~hbit:
                            continue
                        path.append(w)
                        onpath |= b
                        if walk_path():
                            return True
                        onpath ^= b
                        path.pop()
                    return False

                if walk_path():
                    return True
            return False

        return place(0, -1, 0)

    base = [(spec.sigma[i], i < l) for i in range(k)]
    seen = set()
    for r in range(k):
        rot = tuple(base[(i + r) % k] for i in range(k))
        if rot in seen:
            continue
        seen.add(rot)
        if try_rotation(list(rot)):
            return True
    return False


def frozen_oracle(tau_field, N, metric="cartesian-linf"):
    """Naive frozen dynamics: recompute every open-cluster diameter from
    scratch at each opening attempt.  Returns (opened set, freeze times)."""
    from frozenperc.lattice import set_diameter

    w = tau_field.window
    cells = list(w.vertices())
    tau = {v: tau_field.tau(v) for v in cells}
    order = sorted(cells, key=lambda v: (tau[v], v[0], v[1]))
    open_set = set()

    def cluster(v, opens):
        comp = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for x in neighbors(u):
                if x in opens and x not in comp:
                    comp.add(x)
                    stack.append(x)
        return comp

    freeze_times = []
    frozen_clusters = []
    for v in order:
        ok = True
        for x in neighbors(v):
            if x in open_set:
                c = cluster(x, open_set)
                if set_diameter(c, metric) >= N:
                    ok = False
                    break
        if not ok:
            continue
        open_set.add(v)
        c = cluster(v, open_set)
        if set_diameter(c, metric) >= N:
            already = any(c > f or c == f for f in frozen_clusters)
            # the merge that created c is new by construction
            freeze_times.append(tau[v])
            frozen_clusters.append(set(c))
    return open_set, freeze_times


def lowest_two_arm_oracle(view, R, r):
    """All closed vertices of R with two non-touching closed paths to r, by
    exhaustive enumeration of the first path; returns the lowest tied set."""
    closed = [v for v in R.vertices() if view.is_closed(v)]
    closed_set = set(closed)
    rset = set(tuple(u) for u in r)
    target = {v for v in closed_set if any(u in rset for u in neighbors(v))}

    def nb_in(v):
        return [x for x in neighbors(v) if x in closed_set]

    def reaches(src, blocked):
        if src in blocked or src not in closed_set:
            return False
        stack, seen = [src], {src}
        while stack:
            u = stack.pop()
            if u in target:
                return True
            for x in neighbors(u):
                if x in closed_set and x not in seen and x not in blocked:
                    seen.add(x)
                    stack.append(x)
        return False

    def qualifies(v):
        nbrs = nb_in(v)
        for s1, s2 in itertools.permutations(nbrs, 2):
            if s2 in neighbors(s1):
                continue
            # enumerate all simple closed paths from s1 to the target
            path = [s1]
            onpath = {s1}

            def dfs():
                head = path[-1]
                if head in target:
                    blocked = set()
                    for u in path:
                        blocked.add(u)
                        blocked.update(neighbors(u))
                    blocked.add(v)
                    if reaches(s2, blocked):
                        return True
                for d in STEPS:
                    w = (head[0] + d[0], head[1] + d[1])
                    if w in onpath or w == v or w not in closed_set:
                        continue
                    path.append(w)
                    onpath.add(w)
                    if dfs():
                        return True
                    onpath.discard(path.pop())
                return False

            if dfs():
                return True
        return False

    hits = [v for v in closed if qualifies(v)]
    if not hits:
        return []
    bmin = min(v[1] for v in hits)
    return sorted(v for v in hits if v[1] == bmin)
