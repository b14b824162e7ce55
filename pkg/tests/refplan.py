"""Independent reference shortest-path for cross-checking the planner.

Plain Dijkstra over an explicit blocked-cell set, no heuristic, no shared
code with the package's A* beyond the step geometry constants.
"""

import heapq
import math

SQRT2 = math.sqrt(2.0)


def dijkstra_cost(width, height, blocked, start, goal, resolution=1.0, connectivity=8):
    """Exact shortest-path cost, or None when unreachable."""
    if start in blocked or goal in blocked:
        return None
    steps = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)]
    if connectivity == 8:
        steps += [(1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]
    dist = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, cell = heapq.heappop(heap)
        if cell in done:
            continue
        done.add(cell)
        if cell == goal:
            return d
        for dx, dy, w in steps:
            nxt = (cell[0] + dx, cell[1] + dy)
            if not (0 <= nxt[0] < width and 0 <= nxt[1] < height):
                continue
            if nxt in blocked or nxt in done:
                continue
            nd = d + w * resolution
            if nd < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = nd
                heapq.heappush(heap, (nd, nxt))
    return None
