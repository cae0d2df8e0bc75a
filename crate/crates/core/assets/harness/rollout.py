"""Rollout-mode harness: runs the fixed construction loop around the
candidate's step selector for every instance and prints the objectives.

usage: python rollout.py CANDIDATE_FILE FUNC_NAME < {"instances": [...]}
"""
import importlib.util
import json
import math
import sys

import numpy as np

EPS = 1e-9


def load(path, name):
    spec = importlib.util.spec_from_file_location("candidate", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return getattr(module, name)


def within(value, limit):
    return value <= limit + EPS


def as_int(x):
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("selector returned a boolean")
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)) and float(x).is_integer():
        return int(x)
    raise TypeError(f"selector returned {x!r}, expected an index")


def as_pair(x):
    a, b = x
    return as_int(a), as_int(b)


def cycle_length(d, order):
    total = 0.0
    for k in range(len(order)):
        total += d[order[k]][order[(k + 1) % len(order)]]
    return total


def tsp(inst, select):
    d = np.array(inst["dist"], dtype=float)
    n = len(d)
    unvisited = set(range(1, n))
    tour = [0]
    current = 0
    while unvisited:
        nxt = as_int(select(current, 0, set(unvisited), d))
        if nxt not in unvisited:
            raise ValueError(f"city {nxt} is not unvisited")
        unvisited.remove(nxt)
        tour.append(nxt)
        current = nxt
    return cycle_length(d, tour)


def route_cost(inst, d, routes):
    total = 0.0
    open_routes = inst["variant"] == "open"
    for route in routes:
        if not route:
            continue
        legs = 0.0
        for a, b in zip(route, route[1:]):
            legs += d[a][b]
        length = d[0][route[0]] + legs
        if not open_routes:
            length += d[route[-1]][0]
        total += length
    return total


def cvrp(inst, select):
    d = np.array(inst["dist"], dtype=float)
    demands = np.array(inst["demands"], dtype=float)
    capacity = float(inst["capacity"])
    n = len(d)
    unvisited = list(range(1, n))
    routes, route = [], []
    current, remaining = 0, capacity
    while unvisited:
        feasible = [c for c in unvisited if within(demands[c], remaining)]
        if not feasible:
            if current == 0:
                raise ValueError("customer demand exceeds capacity")
            routes.append(route)
            route, current, remaining = [], 0, capacity
            continue
        nxt = as_int(select(current, 0, list(feasible), d, demands, remaining, capacity))
        if nxt == 0 and current != 0:
            routes.append(route)
            route, current, remaining = [], 0, capacity
            continue
        if nxt not in feasible:
            raise ValueError(f"customer {nxt} is not feasible")
        unvisited.remove(nxt)
        route.append(nxt)
        remaining -= demands[nxt]
        current = nxt
    if route:
        routes.append(route)
    return route_cost(inst, d, routes)


def op(inst, select):
    d = np.array(inst["dist"], dtype=float)
    prizes = np.array(inst["prizes"], dtype=float)
    budget = float(inst["budget"])
    n = len(d)
    visited = [False] * n
    visited[0] = True
    current, used, prize = 0, 0.0, 0.0
    while True:
        remaining = budget - used
        feasible = [j for j in range(1, n) if not visited[j] and within(d[current][j] + d[j][0], remaining)]
        if not feasible:
            break
        nxt = as_int(select(current, 0, list(feasible), d, prizes, remaining))
        if nxt == 0:
            break
        if nxt not in feasible:
            raise ValueError(f"node {nxt} is not feasible")
        used += d[current][nxt]
        prize += prizes[nxt]
        visited[nxt] = True
        current = nxt
    return prize


def jssp(inst, select):
    times = np.array(inst["processing_times"], dtype=float)
    machines_of = np.array(inst["machine_order"], dtype=int)
    jobs, machines = times.shape
    next_op = [0] * jobs
    job_available = np.zeros(jobs)
    machine_available = np.zeros(machines)
    for _ in range(jobs * machines):
        ready = [(j, next_op[j]) for j in range(jobs) if next_op[j] < machines]
        j, k = as_pair(select(list(ready), times, machines_of, machine_available.copy(), job_available.copy()))
        if (j, k) not in ready:
            raise ValueError(f"operation {(j, k)} is not ready")
        m = machines_of[j][k]
        end = max(job_available[j], machine_available[m]) + times[j][k]
        job_available[j] = end
        machine_available[m] = end
        next_op[j] += 1
    return float(job_available.max()) if jobs else 0.0


def qap(inst, select):
    flow = np.array(inst["flow"], dtype=float)
    d = np.array(inst["dist"], dtype=float)
    n = len(d)
    assignment = {}
    facilities, locations = list(range(n)), list(range(n))
    while facilities:
        f, l = as_pair(select(list(facilities), list(locations), flow, d, dict(assignment)))
        if f not in facilities or l not in locations:
            raise ValueError(f"pair {(f, l)} is not available")
        facilities.remove(f)
        locations.remove(l)
        assignment[f] = l
    total = 0.0
    for a in range(n):
        for b in range(n):
            total += flow[a][b] * d[assignment[a]][assignment[b]]
    return total


def sco(inst, select):
    p = inst["payload"]
    variant = p["variant"]
    if variant == "cts":
        q = np.array(p["qualities"], dtype=float)
        topics = np.array(p["topics"], dtype=float)
        available = set(range(len(q)))
        previous, total = None, 0.0
        for _ in range(p["horizon"]):
            if not available:
                break
            prev_topic = np.zeros(topics.shape[1]) if previous is None else topics[previous].copy()
            a = as_int(select(sorted(available), q, topics, prev_topic))
            if a not in available:
                raise ValueError(f"talk {a} is not available")
            reward = q[a]
            if previous is not None:
                dot = 0.0
                for x, y in zip(topics[a], topics[previous]):
                    dot += x * y
                reward = q[a] - p["penalty"] * max(dot, 0.0)
            total += reward
            available.remove(a)
            previous = a
        return total
    if variant == "oas":
        b = np.array(p["base_values"], dtype=float)
        rho = np.array(p["fatigue_rates"], dtype=float)
        counts = np.zeros(len(b), dtype=int)
        total = 0.0
        for step in range(1, p["horizon"] + 1):
            a = as_int(select(b, rho, counts.copy(), p["horizon"] + 1 - step))
            if not 0 <= a < len(b):
                raise ValueError(f"ad {a} does not exist")
            total += b[a] * (1.0 - rho[a]) ** int(counts[a])
            counts[a] += 1
        return total
    if variant == "ftr":
        locs = np.array(p["locations"], dtype=float)
        pop = np.array(p["popularities"], dtype=float)
        last_visit = [None] * len(pop)
        position = tuple(p["start"])
        previous, total = None, 0.0
        for step in range(1, p["horizon"] + 1):
            since = np.array([math.inf if v is None else float(step - v) for v in last_visit])
            a = as_int(select(locs, pop, since, previous))
            if not 0 <= a < len(pop):
                raise ValueError(f"location {a} does not exist")
            recovered = 1.0 - math.exp(-p["recovery"] * since[a])
            dx, dy = locs[a][0] - position[0], locs[a][1] - position[1]
            total += pop[a] * recovered - p["travel_cost"] * math.sqrt(dx * dx + dy * dy)
            last_visit[a] = step
            position = (locs[a][0], locs[a][1])
            previous = a
        return total
    if variant == "wpf":
        v = np.array(p["values"], dtype=float)
        w = np.array(p["base_times"], dtype=float)
        available = set(range(len(v)))
        budget, total, step = float(p["budget"]), 0.0, 1
        while True:
            fatigue = 1.0 + p["fatigue_growth"] * (step - 1)
            feasible = [i for i in sorted(available) if w[i] * fatigue <= budget]
            if not feasible:
                return total
            a = as_int(select(feasible, v, w, budget / fatigue))
            if a not in feasible:
                raise ValueError(f"order {a} is not feasible")
            available.remove(a)
            budget -= w[a] * fatigue
            total += v[a]
            step += 1
    raise ValueError(f"unknown SCO variant {variant!r}")


LOOPS = {"tsp": tsp, "vrp": cvrp, "op": op, "jssp": jssp, "qap": qap, "sco": sco}


def main():
    path, func_name = sys.argv[1:3]
    doc = json.load(sys.stdin)
    select = load(path, func_name)
    objectives = [float(LOOPS[inst["problem"]](inst, select)) for inst in doc["instances"]]
    json.dump({"objectives": objectives}, sys.stdout, allow_nan=False)


if __name__ == "__main__":
    main()
