"""Independent reference implementations used by the tests.

Everything here is deliberately naive: literal path enumeration for
d-separation, full scans for counts, exhaustive enumeration for means.
"""

from __future__ import annotations

import itertools


def simple_paths(n, edges, a, b):
    """All simple paths from ``a`` to ``b`` in the skeleton of the graph."""
    nbrs = {v: set() for v in range(n)}
    for p, c in edges:
        nbrs[p].add(c)
        nbrs[c].add(p)
    out = []

    def walk(path):
        v = path[-1]
        if v == b:
            out.append(list(path))
            return
        for w in sorted(nbrs[v]):
            if w not in path:
                path.append(w)
                walk(path)
                path.pop()

    walk([a])
    return out


def ancestors(n, edges, nodes):
    """Nodes with a directed path into ``nodes`` (each node counts as its own ancestor)."""
    result = set(nodes)
    changed = True
    while changed:
        changed = False
        for p, c in edges:
            if c in result and p not in result:
                result.add(p)
                changed = True
    return result


def path_blocked(path, edges, c, anc_c):
    """A path is blocked if an endpoint is in ``c``, a non-collider on it is in
    ``c``, or a collider on it is outside ``an(c)``."""
    if path[0] in c or path[-1] in c:
        return True
    for i in range(1, len(path) - 1):
        prev, v, nxt = path[i - 1], path[i], path[i + 1]
        collider = (prev, v) in edges and (nxt, v) in edges
        if collider and v not in anc_c:
            return True
        if not collider and v in c:
            return True
    return False


def brute_d_separated(n, edges, a, b, c):
    edges = set(edges)
    anc_c = ancestors(n, edges, c)
    for x in a:
        for y in b:
            for path in simple_paths(n, edges, x, y):
                if not path_blocked(path, edges, set(c), anc_c):
                    return False
    return True


def random_dag_edges(rng, n, p_edge=None):
    """Random DAG: edges follow a random permutation of the nodes."""
    order = rng.permutation(n)
    p = rng.uniform(0.2, 0.7) if p_edge is None else p_edge
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((int(order[i]), int(order[j])))
    return edges


def enumerate_mean(scm, arm):
    """E[Y | arm] by summing the factored joint over every assignment."""
    g = scm.graph
    fixed = {}
    for c, val in zip(g.context_nodes, arm):
        if val is not None:
            for t in g.children(c):
                fixed[t] = val
    sys_nodes = list(g.system_nodes)
    total = 0.0
    for vals in itertools.product(*[range(scm.domain_sizes[v]) for v in sys_nodes]):
        x = dict(zip(sys_nodes, vals))
        prob = 1.0
        for v in sys_nodes:
            if v in fixed:
                prob *= 1.0 if x[v] == fixed[v] else 0.0
                continue
            pa = g.system_parents(v)
            row = 0
            for p in pa:
                row = row * scm.domain_sizes[p] + x[p]
            prob *= scm.cpts[v][row][x[v]]
        total += prob * x[g.target]
    return total


def chi2_sf_mpmath(x, df):
    import mpmath

    mpmath.mp.dps = 40
    return float(mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(x) / 2, mpmath.inf, regularized=True))


def binomial_upper_limit(p, n, conf=0.99):
    """Largest event count among ``n`` trials still compatible with rate ``p`` at ``conf``."""
    from scipy.stats import binom

    return int(binom.ppf(conf, n, p))


def scan_count(records, values=None, arm=None):
    n = 0
    for a, row in records:
        if arm is not None and a != arm:
            continue
        if all(row[v] == val for v, val in (values or {}).items()):
            n += 1
    return n
