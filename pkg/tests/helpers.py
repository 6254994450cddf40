"""Brute-force oracles used across the test suite.

Everything here enumerates the evolution tree of a single pair explicitly,
path by path, on purpose: it shares no code with the dynamic programs or
the matrix iteration it is used to check.
"""

from __future__ import annotations

from wmcap.schemes import Scheme, pack


def enumerate_paths(scheme: Scheme, x: int, y: int, passes: int):
    """All root paths s[0..passes-1] with their probability factor lists.

    Yields (nodes, factors) where factors[k] is 'p', 'q' (for 1-p) or None
    (forced move) for the transition out of s[k]; len(nodes) == passes.
    """
    paths = [([pack(x, y)], [])]
    for _ in range(passes - 1):
        grown = []
        for nodes, factors in paths:
            i = nodes[-1]
            if scheme.emb[i]:
                grown.append((nodes + [int(scheme.child0[i])], factors + ["q"]))
                grown.append((nodes + [int(scheme.child1[i])], factors + ["p"]))
            else:
                grown.append((nodes + [int(scheme.childphi[i])], factors + [None]))
        paths = grown
    return paths


def path_probability(factors, p: float) -> float:
    prob = 1.0
    for f in factors:
        if f == "p":
            prob *= p
        elif f == "q":
            prob *= 1.0 - p
    return prob


def brute_force_pair(scheme: Scheme, x: int, y: int, passes: int, p: float, grid) -> dict:
    """Per-pair statistics of a 0/1 grid over all explicit paths.

    Returns stage expectations, the total expectation, and the max/min of
    the per-stage and total contributions over paths.
    """
    paths = enumerate_paths(scheme, x, y, passes)
    stage_exp = [0.0] * passes
    total_exp = 0.0
    stage_max = [0.0] * passes
    stage_min = [float("inf")] * passes
    total_max = float("-inf")
    total_min = float("inf")
    for nodes, factors in paths:
        prob = path_probability(factors, p)
        contrib = [float(grid[n]) for n in nodes]
        total = sum(contrib)
        total_exp += prob * total
        total_max = max(total_max, total)
        total_min = min(total_min, total)
        for k in range(passes):
            stage_exp[k] += prob * contrib[k]
            stage_max[k] = max(stage_max[k], contrib[k])
            stage_min[k] = min(stage_min[k], contrib[k])
    return {
        "stage_exp": stage_exp,
        "total_exp": total_exp,
        "stage_max": stage_max,
        "stage_min": stage_min,
        "total_max": total_max,
        "total_min": total_min,
    }


def brute_force_net_max(scheme: Scheme, x: int, y: int, passes: int, payload_grid, cost_grid) -> float:
    """Max over paths of sum(payload - cost) along the path."""
    best = float("-inf")
    for nodes, _ in enumerate_paths(scheme, x, y, passes):
        best = max(best, sum(float(payload_grid[n]) - float(cost_grid[n]) for n in nodes))
    return best


def simulate_deterministic(scheme: Scheme, cooc_counts: dict[int, float], bit: int, passes: int):
    """Per-pair deterministic evolution when every embedded bit equals `bit`.

    Returns the per-stage (size_I, size_F, ones_F, ones_L) sums computed by
    walking each pair individually — no matrix arithmetic involved.
    """
    child = scheme.child1 if bit else scheme.child0
    out = []
    state = dict(cooc_counts)
    for _ in range(passes):
        size_i = size_f = ones_f = ones_l = 0.0
        for idx, c in state.items():
            if scheme.emb[idx]:
                size_i += c
            if scheme.flag[idx] >= 0:
                size_f += c
                if scheme.flag[idx] == 1:
                    ones_f += c
            if scheme.loc[idx] == 1:
                ones_l += c
        out.append((size_i, size_f, ones_f, ones_l))
        nxt: dict[int, float] = {}
        for idx, c in state.items():
            dest = int(child[idx]) if scheme.emb[idx] else int(scheme.childphi[idx])
            nxt[dest] = nxt.get(dest, 0.0) + c
        state = nxt
    return out
