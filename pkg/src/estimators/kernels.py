"""
计数核

轨道数组形状 (N, n, d)。距离为各坐标（可选周期折叠）差的上确界，再沿轨道取最大。
所有核 nogil，可在线程池中并行。
"""
import numba
import numpy as np


@numba.jit(nopython=True, nogil=True)
def orbit_distance(orbits, i, j, n, periods, stop):
    """d_n(x_i, x_j)；超过 stop 后提前返回"""
    worst = 0.0
    for k in range(n):
        for c in range(orbits.shape[2]):
            diff = abs(orbits[i, k, c] - orbits[j, k, c])
            p = periods[c]
            if p > 0.0:
                diff = diff % p
                if p - diff < diff:
                    diff = p - diff
            if diff > worst:
                worst = diff
                if worst > stop:
                    return worst
    return worst


@numba.jit(nopython=True, nogil=True)
def greedy_family(orbits, order, n, close_eps, sep_delta, periods):
    """按 order 贪心接受: 与已接受点两两满足 δ < d_n ≤ ε"""
    accepted = np.empty(order.shape[0], dtype=np.int64)
    count = 0
    stop = close_eps if close_eps < np.inf else sep_delta
    for idx in range(order.shape[0]):
        i = order[idx]
        ok = True
        for a in range(count):
            d = orbit_distance(orbits, i, accepted[a], n, periods, stop)
            if d <= sep_delta or d > close_eps:
                ok = False
                break
        if ok:
            accepted[count] = i
            count += 1
    return count


@numba.jit(nopython=True, nogil=True)
def ball_adjacency(orbits, n, eps, periods):
    """adj[i, j] = d_n(x_i, x_j) < eps（开 Bowen 球）"""
    size = orbits.shape[0]
    adj = np.zeros((size, size), dtype=np.bool_)
    for i in range(size):
        adj[i, i] = True
        for j in range(i + 1, size):
            if orbit_distance(orbits, i, j, n, periods, eps) < eps:
                adj[i, j] = True
                adj[j, i] = True
    return adj


@numba.jit(nopython=True, nogil=True)
def greedy_half_cover(adj, target):
    """贪心最大覆盖: 反复取覆盖未覆盖点最多的球，直到覆盖数 > target"""
    size = adj.shape[0]
    gain = np.zeros(size, dtype=np.int64)
    for i in range(size):
        for j in range(size):
            if adj[i, j]:
                gain[i] += 1
    covered = np.zeros(size, dtype=np.bool_)
    total = 0
    balls = 0
    while total <= target:
        best = 0
        for i in range(1, size):
            if gain[i] > gain[best]:
                best = i
        if gain[best] == 0:
            break
        balls += 1
        for j in range(size):
            if adj[best, j] and not covered[j]:
                covered[j] = True
                total += 1
                for i in range(size):
                    if adj[i, j]:
                        gain[i] -= 1
    return balls
