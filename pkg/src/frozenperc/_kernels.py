"""Numba kernels: color-field generation, cluster labeling, crossing and
arm-event replica drivers, and the event-driven frozen-percolation sweep.

Estimator kernels draw their colors from a counter-based SplitMix64 stream so
a replica is a pure function of its stream seed; `regen_colors` reproduces the
same bits in numpy for the rare replicas that get escalated to the exact
Python detector.

Arm-event decisions made in-kernel are exact for the alternating specs they
serve (see `EVENT_*` codes); anything the sector word alone cannot decide is
reported as ESCALATE and re-decided by the caller on the regenerated field.
"""

import numpy as np
from numba import njit, uint64

GOLDEN = uint64(0x9E3779B97F4A7C15)
MIX1 = uint64(0xBF58476D1CE4E5B9)
MIX2 = uint64(0x94D049BB133111EB)

METRIC_CARTESIAN = 0
METRIC_COEFF = 1

EVENT_ONE_ARM_OPEN = 1
EVENT_ALT_FULL = 2       # (k, 0, alternating sigma), k even or k == 1 handled by ONE_ARM
EVENT_HALF_OCO = 3       # (3, 3, (o, c, o)) confined to a half annulus
EVENT_MIXED_43_ALT = 4   # (4, 3, (o, c, o, c)), first three arms in the half

HALF_UPPER = 0
HALF_LOWER = 1
HALF_LEFT = 2
HALF_RIGHT = 3

RES_FALSE = 0
RES_TRUE = 1
RES_ESCALATE = 2


@njit(inline="always")
def _mix(x):
    z = uint64(x) + GOLDEN
    z = (z ^ (z >> uint64(30))) * MIX1
    z = (z ^ (z >> uint64(27))) * MIX2
    return z ^ (z >> uint64(31))


@njit(inline="always")
def _rep_seed(stream0, rep):
    return _mix(uint64(stream0) ^ uint64(rep + 1))


@njit(inline="always")
def _vertex_word(rs, i):
    return _mix(uint64(rs) + uint64(i + 1) * GOLDEN)


_M64 = (1 << 64) - 1


def _mix_int(x: int) -> int:
    """Pure-int SplitMix64 finalizer, bit-identical to the kernel `_mix`."""
    z = (x + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def regen_words(stream0: int, rep: int, nv: int) -> np.ndarray:
    """Numpy reproduction of the in-kernel per-vertex 64-bit draws of one
    replica: word(i) = mix(rep_seed + (i + 1) * GOLDEN)."""
    rs = _mix_int((stream0 ^ (rep + 1)) & _M64)
    z = np.arange(1, nv + 1, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    z += np.uint64(rs)
    z += np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def p_to_threshold(p: float) -> int:
    """Map an open-probability to the u64 comparison threshold used in kernels."""
    t = int(round(p * 2.0 ** 64))
    return min(max(t, 0), 2 ** 64 - 1)


@njit(inline="always")
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


# ---------------------------------------------------------------------------
# crossings


@njit(cache=True, nogil=True)
def reps_box_crossing(stream0, na, nb, thresh, horizontal, want_open, rep_lo, rep_hi):
    """Count replicas with a monochromatic crossing of the na x nb box.

    Horizontal crossing joins the a_lo and a_hi columns; vertical joins the
    b rows.  Returns the number of hits over replicas [rep_lo, rep_hi).
    """
    nv = na * nb
    colors = np.empty(nv, np.uint8)
    stack = np.empty(nv, np.int32)
    state = np.empty(nv, np.uint8)  # 0 unseen, 1 queued
    hits = 0
    for rep in range(rep_lo, rep_hi):
        rs = _rep_seed(stream0, rep)
        for i in range(nv):
            w = _vertex_word(rs, i)
            good = w < uint64(thresh)
            if not want_open:
                good = not good
            colors[i] = 1 if good else 0
        for i in range(nv):
            state[i] = 0
        top = 0
        if horizontal:
            for b in range(nb):
                if colors[b] != 0:  # a = 0 column
                    stack[top] = b
                    top += 1
                    state[b] = 1
        else:
            for a in range(na):
                i = a * nb
                if colors[i] != 0:  # b = 0 row
                    stack[top] = i
                    top += 1
                    state[i] = 1
        found = False
        while top > 0 and not found:
            top -= 1
            i = stack[top]
            a = i // nb
            b = i - a * nb
            if horizontal:
                if a == na - 1:
                    found = True
                    break
            else:
                if b == nb - 1:
                    found = True
                    break
            for step in range(6):
                if step == 0:
                    a2 = a + 1; b2 = b
                elif step == 1:
                    a2 = a - 1; b2 = b
                elif step == 2:
                    a2 = a; b2 = b + 1
                elif step == 3:
                    a2 = a; b2 = b - 1
                elif step == 4:
                    a2 = a + 1; b2 = b - 1
                else:
                    a2 = a - 1; b2 = b + 1
                if 0 <= a2 < na and 0 <= b2 < nb:
                    j = a2 * nb + b2
                    if colors[j] != 0 and state[j] == 0:
                        state[j] = 1
                        stack[top] = j
                        top += 1
        if found:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# annulus sector words and arm events


@njit(inline="always")
def _in_half(a, b, half_code):
    # coefficient half-planes relative to the annulus center at (0, 0)
    if half_code == HALF_UPPER:
        return b >= 0
    if half_code == HALF_LOWER:
        return b <= 0
    if half_code == HALF_LEFT:
        return a <= 0
    return a >= 0


@njit(cache=True, nogil=True)
def _sector_word(colors, n, inner, outer, restrict_half, half_code,
                 anchors, word, sector_roots, cell_root):
    """Crossing-cluster word of the annulus (optionally intersected with a half).

    colors: uint8 grid over B(outer), flat a-major, side n = 2*outer + 1.
    Fills anchors/word/sector_roots per crossing cluster, sorted by anchor,
    and cell_root with the union-find root of every in-region cell (-1
    outside).  Returns the number of crossing clusters, or -1 when the
    preallocated arrays are too small.
    """
    nv = n * n
    parent = np.empty(nv, np.int32)
    for i in range(nv):
        parent[i] = i
    # union same-colored annulus neighbors (3 forward directions suffice)
    for a in range(-outer, outer + 1):
        for b in range(-outer, outer + 1):
            if abs(a) <= inner and abs(b) <= inner:
                continue
            if restrict_half and not _in_half(a, b, half_code):
                continue
            i = (a + outer) * n + (b + outer)
            c = colors[i]
            for step in range(3):
                if step == 0:
                    a2 = a + 1; b2 = b
                elif step == 1:
                    a2 = a; b2 = b + 1
                else:
                    a2 = a + 1; b2 = b - 1
                if a2 < -outer or a2 > outer or b2 < -outer or b2 > outer:
                    continue
                if abs(a2) <= inner and abs(b2) <= inner:
                    continue
                if restrict_half and not _in_half(a2, b2, half_code):
                    continue
                j = (a2 + outer) * n + (b2 + outer)
                if colors[j] == c:
                    ra = _uf_find(parent, i)
                    rb = _uf_find(parent, j)
                    if ra != rb:
                        if ra < rb:
                            parent[rb] = ra
                        else:
                            parent[ra] = rb
    # contacts: inner anchor = ring walk position of B(inner + 1), rim = ring outer
    m = inner + 1
    ring_len = 8 * m
    root_anchor = np.full(nv, -1, np.int32)
    root_rim = np.zeros(nv, np.uint8)
    # ccw ring walk from bottom-left corner (-m, -m)
    for t in range(ring_len):
        if t <= 2 * m:
            a = -m + t; b = -m
        elif t <= 4 * m:
            a = m; b = -m + (t - 2 * m)
        elif t <= 6 * m:
            a = m - (t - 4 * m); b = m
        else:
            a = -m; b = m - (t - 6 * m)
        # the (+,+) and (-,-) corners are not adjacent to the inner box
        if (a == m and b == m) or (a == -m and b == -m):
            continue
        if restrict_half and not _in_half(a, b, half_code):
            continue
        if a < -outer or a > outer or b < -outer or b > outer:
            continue
        i = (a + outer) * n + (b + outer)
        r = _uf_find(parent, i)
        if root_anchor[r] < 0:
            root_anchor[r] = t
    for t in range(8 * outer):
        if t <= 2 * outer:
            a = -outer + t; b = -outer
        elif t <= 4 * outer:
            a = outer; b = -outer + (t - 2 * outer)
        elif t <= 6 * outer:
            a = outer - (t - 4 * outer); b = outer
        else:
            a = -outer; b = outer - (t - 6 * outer)
        if restrict_half and not _in_half(a, b, half_code):
            continue
        i = (a + outer) * n + (b + outer)
        r = _uf_find(parent, i)
        root_rim[r] = 1
    cap = anchors.shape[0]
    cnt = 0
    for r in range(nv):
        if root_anchor[r] >= 0 and root_rim[r] == 1:
            if cnt >= cap:
                return -1
            anchors[cnt] = root_anchor[r]
            word[cnt] = colors[r]  # root index is a vertex of the cluster
            sector_roots[cnt] = r
            cnt += 1
    # insertion sort by anchor
    for i in range(1, cnt):
        ka = anchors[i]
        kw = word[i]
        kr = sector_roots[i]
        j = i - 1
        while j >= 0 and anchors[j] > ka:
            anchors[j + 1] = anchors[j]
            word[j + 1] = word[j]
            sector_roots[j + 1] = sector_roots[j]
            j -= 1
        anchors[j + 1] = ka
        word[j + 1] = kw
        sector_roots[j + 1] = kr
    # final per-cell roots for membership queries
    for a in range(-outer, outer + 1):
        for b in range(-outer, outer + 1):
            i = (a + outer) * n + (b + outer)
            if abs(a) <= inner and abs(b) <= inner:
                cell_root[i] = -1
            elif restrict_half and not _in_half(a, b, half_code):
                cell_root[i] = -1
            else:
                cell_root[i] = _uf_find(parent, i)
    return cnt


@njit(cache=True, nogil=True)
def _two_disjoint_inner_to_rim(member, n, inner, outer, restrict_half, half_code):
    """Exact test: two vertex-disjoint inner-contact-to-rim paths inside the
    member mask (one monochromatic sector).

    Unit-vertex-capacity max flow on the split graph, at most two augmenting
    BFS passes.  States are 2*cell + side (0 = in, 1 = out); residual rules:
    in->out free unless the vertex carries flow, out->in of a neighbor always
    forward, v_in -> u_out backward only along carried flow (succ[u] == v).
    """
    nv = n * n
    m = inner + 1
    # sources: member cells on the inner contact ring; sinks: member rim cells
    is_src = np.zeros(nv, np.uint8)
    ring_len = 8 * m
    for t in range(ring_len):
        if t <= 2 * m:
            a = -m + t; b = -m
        elif t <= 4 * m:
            a = m; b = -m + (t - 2 * m)
        elif t <= 6 * m:
            a = m - (t - 4 * m); b = m
        else:
            a = -m; b = m - (t - 6 * m)
        if (a == m and b == m) or (a == -m and b == -m):
            continue
        if restrict_half and not _in_half(a, b, half_code):
            continue
        if a < -outer or a > outer or b < -outer or b > outer:
            continue
        i = (a + outer) * n + (b + outer)
        if member[i]:
            is_src[i] = 1
    carried = np.zeros(nv, np.uint8)   # vertex carries one unit of flow
    succ = np.full(nv, -1, np.int32)   # flow successor cell
    pred_state = np.empty(2 * nv, np.int32)
    queue = np.empty(2 * nv, np.int32)
    flow = 0
    for _ in range(2):
        for s in range(2 * nv):
            pred_state[s] = -2
        head = 0
        tail = 0
        for i in range(nv):
            if is_src[i] and member[i]:
                st = 2 * i  # enter at in-side
                if pred_state[st] == -2:
                    pred_state[st] = -1
                    queue[tail] = st
                    tail += 1
        goal = -1
        while head < tail and goal < 0:
            st = queue[head]
            head += 1
            cell = st >> 1
            side = st & 1
            a = cell // n - outer
            b = cell % n - outer
            if side == 0:
                # in -> out if no flow through the vertex
                if carried[cell] == 0:
                    nxt = 2 * cell + 1
                    if pred_state[nxt] == -2:
                        pred_state[nxt] = st
                        queue[tail] = nxt
                        tail += 1
                # backward along incoming flow: v_in -> u_out with succ[u] = v
                for step in range(6):
                    if step == 0:
                        a2 = a + 1; b2 = b
                    elif step == 1:
                        a2 = a - 1; b2 = b
                    elif step == 2:
                        a2 = a; b2 = b + 1
                    elif step == 3:
                        a2 = a; b2 = b - 1
                    elif step == 4:
                        a2 = a + 1; b2 = b - 1
                    else:
                        a2 = a - 1; b2 = b + 1
                    if a2 < -outer or a2 > outer or b2 < -outer or b2 > outer:
                        continue
                    u = (a2 + outer) * n + (b2 + outer)
                    if member[u] and succ[u] == cell:
                        nxt = 2 * u + 1
                        if pred_state[nxt] == -2:
                            pred_state[nxt] = st
                            queue[tail] = nxt
                            tail += 1
            else:
                # out side: reach the rim?
                if max(abs(a), abs(b)) == outer:
                    goal = st
                    break
                # backward through own vertex
                if carried[cell] == 1:
                    nxt = 2 * cell
                    if pred_state[nxt] == -2:
                        pred_state[nxt] = st
                        queue[tail] = nxt
                        tail += 1
                for step in range(6):
                    if step == 0:
                        a2 = a + 1; b2 = b
                    elif step == 1:
                        a2 = a - 1; b2 = b
                    elif step == 2:
                        a2 = a; b2 = b + 1
                    elif step == 3:
                        a2 = a; b2 = b - 1
                    elif step == 4:
                        a2 = a + 1; b2 = b - 1
                    else:
                        a2 = a - 1; b2 = b + 1
                    if a2 < -outer or a2 > outer or b2 < -outer or b2 > outer:
                        continue
                    v = (a2 + outer) * n + (b2 + outer)
                    if member[v]:
                        nxt = 2 * v
                        if pred_state[nxt] == -2:
                            pred_state[nxt] = st
                            queue[tail] = nxt
                            tail += 1
        if goal < 0:
            break
        flow += 1
        if flow >= 2:
            return True
        # apply the augmenting path: walk predecessors, set carried/succ
        st = goal
        while pred_state[st] >= 0:
            prv = pred_state[st]
            c1 = prv >> 1
            s1 = prv & 1
            c2 = st >> 1
            s2 = st & 1
            if c1 == c2:
                if s1 == 0 and s2 == 1:
                    carried[c1] = 1       # forward through the vertex
                else:
                    carried[c1] = 0       # retreat
            else:
                if s1 == 1 and s2 == 0:
                    succ[c1] = c2         # forward adjacency u_out -> v_in
                elif s1 == 0 and s2 == 1:
                    succ[c2] = -1         # cancel flow edge v_in -> u_out
            st = prv
    return flow >= 2


@njit(inline="always")
def _cyclic_blocks(word, cnt):
    """Number of maximal same-color blocks of the cyclic word."""
    if cnt <= 1:
        return cnt
    blocks = 0
    for i in range(cnt):
        if word[i] != word[(i + 1) % cnt]:
            blocks += 1
    if blocks == 0:
        return 1
    return blocks


@njit(cache=True, nogil=True)
def reps_annulus_event(stream0, inner, outer, thresh_open, thresh_closed,
                       event_code, k, half_code, rep_lo, rep_hi, results):
    """Decide an arm event per replica; fills results[rep - rep_lo].

    Colors: 1 = open (word < thresh_open), 0 = closed (word >= thresh_closed).
    Two-threshold views label per color mask; only single-color events stay
    in-kernel there, the rest escalate to the exact detector.
    """
    n = 2 * outer + 1
    nv = n * n
    colors = np.empty(nv, np.uint8)
    open_colors = np.empty(nv, np.uint8)
    member = np.empty(nv, np.uint8)
    two_threshold = thresh_open != thresh_closed
    anchors = np.empty(512, np.int32)
    word = np.empty(512, np.uint8)
    roots = np.empty(512, np.int32)
    anchors_h = np.empty(512, np.int32)
    word_h = np.empty(512, np.uint8)
    roots_h = np.empty(512, np.int32)
    cell_root = np.empty(nv, np.int32)
    cell_root_h = np.empty(nv, np.int32)
    for rep in range(rep_lo, rep_hi):
        rs = _rep_seed(stream0, rep)
        for i in range(nv):
            w = _vertex_word(rs, i)
            is_open = w < uint64(thresh_open)
            colors[i] = 1 if is_open else 0
            if two_threshold:
                open_colors[i] = 1 if w < uint64(thresh_open) else 0
        out = RES_FALSE
        if two_threshold:
            if event_code == EVENT_ONE_ARM_OPEN:
                cnt = _sector_word(open_colors, n, inner, outer, False, 0,
                                   anchors, word, roots, cell_root)
                if cnt < 0:
                    out = RES_ESCALATE
                else:
                    for s in range(cnt):
                        if word[s] == 1:
                            out = RES_TRUE
                            break
            else:
                out = RES_ESCALATE
        else:
            cnt = _sector_word(colors, n, inner, outer, False, 0,
                               anchors, word, roots, cell_root)
            if cnt < 0:
                out = RES_ESCALATE
            elif event_code == EVENT_ONE_ARM_OPEN:
                for s in range(cnt):
                    if word[s] == 1:
                        out = RES_TRUE
                        break
            elif event_code == EVENT_ALT_FULL:
                # alternating sigma of even length k: exact iff >= k cyclic blocks
                if _cyclic_blocks(word, cnt) >= k:
                    out = RES_TRUE
            elif event_code == EVENT_HALF_OCO:
                hcnt = _sector_word(colors, n, inner, outer, True, half_code,
                                    anchors_h, word_h, roots_h, cell_root_h)
                if hcnt < 0:
                    out = RES_ESCALATE
                else:
                    n_o = 0
                    n_c = 0
                    oroot = -1
                    for s in range(hcnt):
                        if word_h[s] == 1:
                            n_o += 1
                            oroot = roots_h[s]
                        else:
                            n_c += 1
                    if n_c == 0 or n_o == 0:
                        out = RES_FALSE
                    elif n_o >= 2:
                        out = RES_TRUE
                    else:
                        # single open half-sector: true iff it carries two
                        # disjoint arms (exact Menger-2 inside the kernel)
                        for i in range(nv):
                            member[i] = 1 if cell_root_h[i] == oroot else 0
                        if _two_disjoint_inner_to_rim(member, n, inner, outer,
                                                      True, half_code):
                            out = RES_TRUE
            elif event_code == EVENT_MIXED_43_ALT:
                # sound filter: full-plane alternating 4-arm must hold and the
                # half annulus must carry both colors; exact check is escalated
                if _cyclic_blocks(word, cnt) >= 4:
                    hcnt = _sector_word(colors, n, inner, outer, True, half_code,
                                        anchors_h, word_h, roots_h, cell_root_h)
                    if hcnt < 0:
                        out = RES_ESCALATE
                    else:
                        n_o = 0
                        n_c = 0
                        for s in range(hcnt):
                            if word_h[s] == 1:
                                n_o += 1
                            else:
                                n_c += 1
                        if n_o >= 1 and n_c >= 1:
                            out = RES_ESCALATE
            else:
                out = RES_ESCALATE
        results[rep - rep_lo] = out
    return 0


# ---------------------------------------------------------------------------
# frozen percolation dynamics


@njit(inline="always")
def _diam_at_least(amin, amax, bmin, bmax, xmin, xmax, N, metric_code):
    if metric_code == METRIC_CARTESIAN:
        if xmax - xmin >= 2 * N:
            return True
        dy = bmax - bmin
        return 3 * dy * dy >= 4 * N * N
    return amax - amin >= N or bmax - bmin >= N


@njit(cache=True, nogil=True)
def frozen_sweep(tau, order, na, nb, a_lo, b_lo, N, metric_code,
                 opened, root_out, frozen_out, csize_out,
                 bb_amin, bb_amax, bb_bmin, bb_bmax, bb_xmin, bb_xmax,
                 ev_vidx):
    """Event-driven sweep of the N-parameter frozen process on a window.

    Vertices are visited in increasing tau (ties pre-broken in `order`).  A
    vertex opens iff no neighboring open cluster has L-inf diameter >= N; the
    merged cluster freezes the moment its diameter reaches N.  Everything
    outside the window is permanently closed.

    Cluster bounding boxes track the coefficient extents (a, b) and the
    scaled cartesian extent X = 2a + b, all exact integers, so both L-inf
    metrics are served.  Returns the number of freeze events.
    """
    nv = na * nb
    parent = np.empty(nv, np.int32)
    nbr_roots = np.empty(6, np.int32)
    n_events = 0
    for q in range(nv):
        opened[q] = 0
        frozen_out[q] = 0
        csize_out[q] = 0
    for q in range(nv):
        v = order[q]
        a = v // nb
        b = v - a * nb
        # collect distinct neighboring open-cluster roots; refuse if any frozen
        n_roots = 0
        any_frozen = False
        for step in range(6):
            if step == 0:
                a2 = a + 1; b2 = b
            elif step == 1:
                a2 = a - 1; b2 = b
            elif step == 2:
                a2 = a; b2 = b + 1
            elif step == 3:
                a2 = a; b2 = b - 1
            elif step == 4:
                a2 = a + 1; b2 = b - 1
            else:
                a2 = a - 1; b2 = b + 1
            if a2 < 0 or a2 >= na or b2 < 0 or b2 >= nb:
                continue
            w = a2 * nb + b2
            if opened[w] == 0:
                continue
            r = _uf_find(parent, w)
            if frozen_out[r] != 0:
                any_frozen = True
                break
            new = True
            for t in range(n_roots):
                if nbr_roots[t] == r:
                    new = False
                    break
            if new:
                nbr_roots[n_roots] = r
                n_roots += 1
        if any_frozen:
            continue  # blocked forever
        opened[v] = 1
        parent[v] = v
        aa = a + a_lo
        bb = b + b_lo
        bb_amin[v] = aa
        bb_amax[v] = aa
        bb_bmin[v] = bb
        bb_bmax[v] = bb
        bb_xmin[v] = 2 * aa + bb
        bb_xmax[v] = 2 * aa + bb
        csize_out[v] = 1
        root = v
        for t in range(n_roots):
            r = nbr_roots[t]
            # union by size
            if csize_out[root] < csize_out[r]:
                big, small = r, root
            else:
                big, small = root, r
            parent[small] = big
            csize_out[big] += csize_out[small]
            if bb_amin[small] < bb_amin[big]:
                bb_amin[big] = bb_amin[small]
            if bb_amax[small] > bb_amax[big]:
                bb_amax[big] = bb_amax[small]
            if bb_bmin[small] < bb_bmin[big]:
                bb_bmin[big] = bb_bmin[small]
            if bb_bmax[small] > bb_bmax[big]:
                bb_bmax[big] = bb_bmax[small]
            if bb_xmin[small] < bb_xmin[big]:
                bb_xmin[big] = bb_xmin[small]
            if bb_xmax[small] > bb_xmax[big]:
                bb_xmax[big] = bb_xmax[small]
            root = big
        if _diam_at_least(bb_amin[root], bb_amax[root], bb_bmin[root], bb_bmax[root],
                          bb_xmin[root], bb_xmax[root], N, metric_code):
            frozen_out[root] = 1
            ev_vidx[n_events] = v
            n_events += 1
    # final root compression
    for q in range(nv):
        if opened[q] != 0:
            root_out[q] = _uf_find(parent, q)
        else:
            root_out[q] = -1
    return n_events


@njit(cache=True, nogil=True)
def replay_count_frozen(tau, order, opened, na, nb, a_lo, b_lo, N, metric_code,
                        t, box_alo, box_ahi, box_blo, box_bhi):
    """Distinct open clusters at time t with diameter >= N meeting the box.

    Replays the union structure over the vertices that opened at tau <= t;
    open/blocked outcomes are those of the completed run (blocked vertices
    never open at any time).
    """
    nv = na * nb
    parent = np.full(nv, -1, np.int32)
    csize = np.zeros(nv, np.int32)
    amin = np.empty(nv, np.int64)
    amax = np.empty(nv, np.int64)
    bmin = np.empty(nv, np.int64)
    bmax = np.empty(nv, np.int64)
    xmin = np.empty(nv, np.int64)
    xmax = np.empty(nv, np.int64)
    inbox = np.zeros(nv, np.uint8)
    for q in range(nv):
        v = order[q]
        if tau[v] > t:
            break
        if opened[v] == 0:
            continue
        a = v // nb
        b = v - a * nb
        aa = a + a_lo
        bb = b + b_lo
        parent[v] = v
        csize[v] = 1
        amin[v] = aa
        amax[v] = aa
        bmin[v] = bb
        bmax[v] = bb
        xmin[v] = 2 * aa + bb
        xmax[v] = 2 * aa + bb
        inbox[v] = 1 if (box_alo <= aa <= box_ahi and box_blo <= bb <= box_bhi) else 0
        for step in range(6):
            if step == 0:
                a2 = a + 1; b2 = b
            elif step == 1:
                a2 = a - 1; b2 = b
            elif step == 2:
                a2 = a; b2 = b + 1
            elif step == 3:
                a2 = a; b2 = b - 1
            elif step == 4:
                a2 = a + 1; b2 = b - 1
            else:
                a2 = a - 1; b2 = b + 1
            if a2 < 0 or a2 >= na or b2 < 0 or b2 >= nb:
                continue
            w = a2 * nb + b2
            if parent[w] < 0:
                continue
            ra = _uf_find(parent, v)
            rb = _uf_find(parent, w)
            if ra == rb:
                continue
            if csize[ra] < csize[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            csize[ra] += csize[rb]
            if amin[rb] < amin[ra]:
                amin[ra] = amin[rb]
            if amax[rb] > amax[ra]:
                amax[ra] = amax[rb]
            if bmin[rb] < bmin[ra]:
                bmin[ra] = bmin[rb]
            if bmax[rb] > bmax[ra]:
                bmax[ra] = bmax[rb]
            if xmin[rb] < xmin[ra]:
                xmin[ra] = xmin[rb]
            if xmax[rb] > xmax[ra]:
                xmax[ra] = xmax[rb]
            if inbox[rb]:
                inbox[ra] = 1
    count = 0
    for q in range(nv):
        if parent[q] == q and inbox[q] == 1:
            if _diam_at_least(amin[q], amax[q], bmin[q], bmax[q],
                              xmin[q], xmax[q], N, metric_code):
                count += 1
    return count


# ---------------------------------------------------------------------------
# grid geometry helpers (clearance, BFS) for thick-path extraction


@njit(cache=True, nogil=True)
def chamfer_clearance(mask, cap):
    """Clearance radius per cell: largest r with the coefficient box
    B(v; r) inside the mask; outside the grid counts as obstacle.

    Exact for the Chebyshev (coefficient box) metric via two chamfer passes.
    Values are capped at `cap` (uint16 output).
    """
    na, nb = mask.shape
    inf = np.uint16(cap + 1)
    d = np.empty((na, nb), np.uint16)
    for i in range(na):
        for j in range(nb):
            if mask[i, j] == 0:
                d[i, j] = 0
            else:
                best = inf
                if i == 0 or j == 0 or i == na - 1 or j == nb - 1:
                    best = 1
                if i > 0:
                    if d[i - 1, j] + 1 < best:
                        best = d[i - 1, j] + 1
                    if j > 0 and d[i - 1, j - 1] + 1 < best:
                        best = d[i - 1, j - 1] + 1
                    if j < nb - 1 and d[i - 1, j + 1] + 1 < best:
                        best = d[i - 1, j + 1] + 1
                if j > 0 and d[i, j - 1] + 1 < best:
                    best = d[i, j - 1] + 1
                d[i, j] = best
    for i in range(na - 1, -1, -1):
        for j in range(nb - 1, -1, -1):
            if mask[i, j] == 0:
                continue
            best = d[i, j]
            if i < na - 1:
                if d[i + 1, j] + 1 < best:
                    best = d[i + 1, j] + 1
                if j > 0 and d[i + 1, j - 1] + 1 < best:
                    best = d[i + 1, j - 1] + 1
                if j < nb - 1 and d[i + 1, j + 1] + 1 < best:
                    best = d[i + 1, j + 1] + 1
            if j < nb - 1 and d[i, j + 1] + 1 < best:
                best = d[i, j + 1] + 1
            d[i, j] = best
    # clearance = chebyshev distance to the complement, minus 1
    for i in range(na):
        for j in range(nb):
            if d[i, j] > 0:
                d[i, j] -= 1
    return d


@njit(cache=True, nogil=True)
def grid_bfs(mask, si, sj, dist, queue):
    """BFS over the 6-neighbor lattice restricted to mask; fills dist (uint32,
    0xFFFFFFFF = unreached). Returns the index of the last dequeued cell."""
    na, nb = mask.shape
    unreached = np.uint32(0xFFFFFFFF)
    for i in range(na):
        for j in range(nb):
            dist[i, j] = unreached
    head = 0
    tail = 0
    start = si * nb + sj
    queue[tail] = start
    tail += 1
    dist[si, sj] = 0
    last = start
    while head < tail:
        cur = queue[head]
        head += 1
        last = cur
        i = cur // nb
        j = cur - i * nb
        dcur = dist[i, j]
        for step in range(6):
            if step == 0:
                i2 = i + 1; j2 = j
            elif step == 1:
                i2 = i - 1; j2 = j
            elif step == 2:
                i2 = i; j2 = j + 1
            elif step == 3:
                i2 = i; j2 = j - 1
            elif step == 4:
                i2 = i + 1; j2 = j - 1
            else:
                i2 = i - 1; j2 = j + 1
            if 0 <= i2 < na and 0 <= j2 < nb:
                if mask[i2, j2] != 0 and dist[i2, j2] == unreached:
                    dist[i2, j2] = dcur + 1
                    queue[tail] = i2 * nb + j2
                    tail += 1
    return last


@njit(cache=True, nogil=True)
def descend_path(dist, mask, si, sj, out):
    """Greedy descent from (si, sj) along dist-1 neighbors to the dist-0 cell.

    out must have length dist[si, sj] + 1; returns the path length.
    """
    nb = dist.shape[1]
    i, j = si, sj
    d = dist[i, j]
    out[0] = i * nb + j
    pos = 1
    while d > 0:
        found = False
        for step in range(6):
            if step == 0:
                i2 = i + 1; j2 = j
            elif step == 1:
                i2 = i - 1; j2 = j
            elif step == 2:
                i2 = i; j2 = j + 1
            elif step == 3:
                i2 = i; j2 = j - 1
            elif step == 4:
                i2 = i + 1; j2 = j - 1
            else:
                i2 = i - 1; j2 = j + 1
            if 0 <= i2 < dist.shape[0] and 0 <= j2 < nb:
                if mask[i2, j2] != 0 and dist[i2, j2] == d - 1:
                    i, j = i2, j2
                    out[pos] = i * nb + j
                    pos += 1
                    d -= 1
                    found = True
                    break
        if not found:
            return -1
    return pos
