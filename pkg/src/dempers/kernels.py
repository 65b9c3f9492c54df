"""Hot inner loops: elder-rule union-find and dense linear assignment.

Each kernel has a numba-compiled variant (``*_nb``) and a numpy/Python
variant (``*_py``). The module-level names ``sublevel_pairs`` and
``solve_assignment`` point at whichever the ``DEMPERS_BACKEND`` flag selects.
"""

import numpy as np

from ._backend import USE_NUMBA, njit

__all__ = [
    "BACKEND",
    "sublevel_pairs",
    "sublevel_pairs_nb",
    "sublevel_pairs_py",
    "solve_assignment",
    "solve_assignment_nb",
    "solve_assignment_py",
    "InfeasibleAssignment",
]


class InfeasibleAssignment(ValueError):
    """The cost matrix admits no perfect matching of finite cost."""


# --------------------------------------------------------------------------
# 0-dimensional sublevel persistence
# --------------------------------------------------------------------------

@njit(nogil=True)
def sublevel_pairs_nb(order, values, indptr, indices):
    n = order.shape[0]
    rank = np.empty(n, np.int64)
    for pos in range(n):
        rank[order[pos]] = pos
    parent = np.full(n, -1, np.int64)
    births = np.empty(n, np.int64)
    deaths = np.empty(n, np.int64)
    count = 0
    for pos in range(n):
        v = order[pos]
        parent[v] = v
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if parent[u] < 0:
                continue
            ru = u
            while parent[ru] != ru:
                parent[ru] = parent[parent[ru]]
                ru = parent[ru]
            rv = v
            while parent[rv] != rv:
                parent[rv] = parent[parent[rv]]
                rv = parent[rv]
            if ru == rv:
                continue
            if rank[ru] < rank[rv]:
                elder = ru
                younger = rv
            else:
                elder = rv
                younger = ru
            parent[younger] = elder
            if values[younger] < values[v]:
                births[count] = younger
                deaths[count] = v
                count += 1
    for pos in range(n):
        v = order[pos]
        if parent[v] == v:
            births[count] = v
            deaths[count] = -1
            count += 1
    return births[:count], deaths[:count]


def sublevel_pairs_py(order, values, indptr, indices):
    order = order.tolist()
    values = values.tolist()
    indptr = indptr.tolist()
    indices = indices.tolist()
    n = len(order)
    rank = [0] * n
    for pos, v in enumerate(order):
        rank[v] = pos
    parent = [-1] * n
    births = []
    deaths = []
    for v in order:
        parent[v] = v
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if parent[u] < 0:
                continue
            ru = u
            while parent[ru] != ru:
                parent[ru] = parent[parent[ru]]
                ru = parent[ru]
            rv = v
            while parent[rv] != rv:
                parent[rv] = parent[parent[rv]]
                rv = parent[rv]
            if ru == rv:
                continue
            if rank[ru] < rank[rv]:
                elder, younger = ru, rv
            else:
                elder, younger = rv, ru
            parent[younger] = elder
            if values[younger] < values[v]:
                births.append(younger)
                deaths.append(v)
    for v in order:
        if parent[v] == v:
            births.append(v)
            deaths.append(-1)
    return np.asarray(births, dtype=np.int64), np.asarray(deaths, dtype=np.int64)


# --------------------------------------------------------------------------
# Linear sum assignment (shortest augmenting path, Jonker-Volgenant family)
# --------------------------------------------------------------------------

@njit(nogil=True)
def _lsap_nb(cost):
    n = cost.shape[0]
    u = np.zeros(n)
    v = np.zeros(n)
    col4row = np.full(n, -1, np.int64)
    row4col = np.full(n, -1, np.int64)
    shortest = np.empty(n)
    path = np.empty(n, np.int64)
    scanned_rows = np.empty(n, np.bool_)
    scanned_cols = np.empty(n, np.bool_)
    for cur_row in range(n):
        shortest[:] = np.inf
        path[:] = -1
        scanned_rows[:] = False
        scanned_cols[:] = False
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            scanned_rows[i] = True
            lowest = np.inf
            index = -1
            for j in range(n):
                if scanned_cols[j]:
                    continue
                r = min_val + cost[i, j] - u[i] - v[j]
                if r < shortest[j]:
                    path[j] = i
                    shortest[j] = r
                if shortest[j] < lowest:
                    lowest = shortest[j]
                    index = j
                elif (shortest[j] == lowest and index >= 0
                      and row4col[j] == -1 and row4col[index] != -1):
                    index = j
            if index < 0:
                return col4row, False
            min_val = lowest
            scanned_cols[index] = True
            if row4col[index] == -1:
                sink = index
            else:
                i = row4col[index]
        u[cur_row] += min_val
        for i in range(n):
            if scanned_rows[i] and i != cur_row:
                u[i] += min_val - shortest[col4row[i]]
        for j in range(n):
            if scanned_cols[j]:
                v[j] -= min_val - shortest[j]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            nxt = col4row[i]
            col4row[i] = j
            j = nxt
            if i == cur_row:
                break
    return col4row, True


def _lsap_py(cost):
    n = cost.shape[0]
    u = np.zeros(n)
    v = np.zeros(n)
    col4row = np.full(n, -1, np.int64)
    row4col = np.full(n, -1, np.int64)
    shortest = np.empty(n)
    avail = np.empty(n)  # shortest, with scanned columns masked to inf
    path = np.empty(n, np.int64)
    r = np.empty(n)
    better = np.empty(n, dtype=bool)
    free = np.empty(n, dtype=bool)
    scanned_rows = np.empty(n, dtype=bool)
    for cur_row in range(n):
        shortest.fill(np.inf)
        avail.fill(np.inf)
        path.fill(-1)
        free.fill(True)
        scanned_rows.fill(False)
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            scanned_rows[i] = True
            np.add(cost[i], min_val, out=r)
            r -= u[i]
            r -= v
            np.less(r, shortest, out=better)
            better &= free
            np.copyto(path, i, where=better)
            np.copyto(shortest, r, where=better)
            np.copyto(avail, r, where=better)
            lowest = avail.min()
            if lowest == np.inf:
                return col4row, False
            cand = np.flatnonzero(avail == lowest)
            unassigned = cand[row4col[cand] == -1]
            index = int(unassigned[0]) if unassigned.size else int(cand[0])
            min_val = lowest
            free[index] = False
            avail[index] = np.inf
            if row4col[index] == -1:
                sink = index
            else:
                i = int(row4col[index])
        u[cur_row] += min_val
        scanned_rows[cur_row] = False
        rows = np.flatnonzero(scanned_rows)
        u[rows] += min_val - shortest[col4row[rows]]
        scanned = ~free
        v[scanned] -= min_val - shortest[scanned]
        j = sink
        while True:
            i = int(path[j])
            row4col[j] = i
            nxt = int(col4row[i])
            col4row[i] = j
            j = nxt
            if i == cur_row:
                break
    return col4row, True


def _checked(solver):
    def solve(cost):
        cost = np.ascontiguousarray(cost, dtype=np.float64)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
        if np.isnan(cost).any() or (cost == -np.inf).any():
            raise ValueError("cost matrix contains NaN or -inf")
        if cost.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        col4row, ok = solver(cost)
        if not ok:
            raise InfeasibleAssignment("no finite-cost perfect matching exists")
        return col4row

    solve.__name__ = solver.__name__.lstrip("_")
    solve.__doc__ = (
        "Return ``col4row`` minimising ``sum(cost[i, col4row[i]])`` over square ``cost``.\n\n"
        "``+inf`` entries mark forbidden pairs."
    )
    return solve


solve_assignment_nb = _checked(_lsap_nb)
solve_assignment_py = _checked(_lsap_py)

if USE_NUMBA:
    BACKEND = "numba"
    sublevel_pairs = sublevel_pairs_nb
    solve_assignment = solve_assignment_nb
else:
    BACKEND = "numpy"
    sublevel_pairs = sublevel_pairs_py
    solve_assignment = solve_assignment_py
