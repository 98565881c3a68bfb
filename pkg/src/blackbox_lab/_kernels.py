"""Compiled inner loops for the two oracles."""
import numpy as np
from numba import njit


@njit(cache=True)
def mst_eval(bits, eu, ev, w, n):
    parent = np.arange(n)
    comps = n
    total = 0.0
    for i in range(bits.shape[0]):
        if bits[i]:
            total += w[i]
            a = eu[i]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = ev[i]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                comps -= 1
    return comps, total


@njit(cache=True)
def chain_dists(pred, weights):
    """Distances along predecessor chains; inf for broken chains, loops and cycles.

    pred[i - 2] is the predecessor of node i (labels 1..n), weights is an
    (n+1)x(n+1) matrix with inf where no edge exists.
    """
    n = pred.shape[0] + 1
    state = np.zeros(n + 1, np.int8)
    dist = np.empty(n + 1)
    dist[1] = 0.0
    state[1] = 2
    stack = np.empty(n, np.int64)
    for s in range(2, n + 1):
        if state[s] == 2:
            continue
        top = 0
        v = s
        while True:
            if state[v] == 2:
                base = dist[v]
                break
            if state[v] == 1:
                base = np.inf
                break
            state[v] = 1
            stack[top] = v
            top += 1
            v = pred[v - 2]
        while top > 0:
            top -= 1
            u = stack[top]
            base = base + weights[u, pred[u - 2]]
            dist[u] = base
            state[u] = 2
    return dist[2:]


@njit(cache=True)
def chain_sum(pred, weights, penalty):
    d = chain_dists(pred, weights)
    total = 0.0
    for i in range(d.shape[0]):
        total += penalty if d[i] >= penalty else d[i]
    return total


@njit(cache=True)
def reach_mask(pred):
    """mask[v] is True iff the pointer chain from v reaches node 1 (structure only)."""
    n = pred.shape[0] + 1
    state = np.zeros(n + 1, np.int8)  # 0 unknown, 1 on stack, 2 reaches, 3 does not
    state[1] = 2
    stack = np.empty(n, np.int64)
    for s in range(2, n + 1):
        if state[s] >= 2:
            continue
        top = 0
        v = s
        while state[v] == 0:
            state[v] = 1
            stack[top] = v
            top += 1
            v = pred[v - 2]
        res = 2 if state[v] == 2 else 3
        while top > 0:
            top -= 1
            state[stack[top]] = res
    mask = np.zeros(n + 1, np.bool_)
    for v in range(1, n + 1):
        mask[v] = state[v] == 2
    return mask


@njit(cache=True)
def tree_shape_ok(pred):
    """True iff every node either reaches the source or points to itself."""
    mask = reach_mask(pred)
    for v in range(2, pred.shape[0] + 2):
        if not mask[v] and pred[v - 2] != v:
            return False
    return True


@njit(cache=True)
def path_endpoint(pred):
    """Endpoint of a source path with all other nodes self-looping, or -1."""
    n = pred.shape[0] + 1
    mask = reach_mask(pred)
    children = np.zeros(n + 1, np.int64)
    for v in range(2, n + 1):
        if mask[v]:
            children[pred[v - 2]] += 1
        elif pred[v - 2] != v:
            return -1
    end = 1
    for v in range(1, n + 1):
        if mask[v]:
            if children[v] > 1:
                return -1
            if children[v] == 0:
                end = v
    return end


@njit(cache=True)
def dense_dijkstra(W, n):
    """O(n^2) Dijkstra on a weight matrix, keyed by (distance, hops, label).

    Relaxing with an equal key keeps the smaller predecessor label.
    """
    dist = np.full(n + 1, np.inf)
    hops = np.zeros(n + 1, np.int64)
    pred = np.arange(n + 1)
    done = np.zeros(n + 1, np.bool_)
    dist[1] = 0.0
    for _ in range(n):
        u = -1
        for v in range(1, n + 1):
            if done[v] or dist[v] == np.inf:
                continue
            if u < 0 or dist[v] < dist[u] or (dist[v] == dist[u] and hops[v] < hops[u]):
                u = v
        if u < 0:
            break
        done[u] = True
        for v in range(2, n + 1):
            w = W[u, v]
            if done[v] or w == np.inf:
                continue
            d, h = dist[u] + w, hops[u] + 1
            if d < dist[v] or (d == dist[v] and (h < hops[v] or (h == hops[v] and u < pred[v]))):
                dist[v], hops[v], pred[v] = d, h, u
    return dist, hops, pred
