"""Artifact-mode harness: one instance on stdin, one artifact on stdout.

usage: python artifact.py CANDIDATE_FILE FUNC_NAME KIND
"""
import importlib.util
import json
import sys

import numpy as np


def load(path, name):
    spec = importlib.util.spec_from_file_location("candidate", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return getattr(module, name)


def arguments(inst):
    dist = np.array(inst["dist"], dtype=float)
    problem = inst["problem"]
    if problem == "tsp":
        return [dist]
    if problem == "vrp":
        args = [dist, np.array(inst["demands"], dtype=float), float(inst["capacity"])]
        if inst["variant"] == "duration_limited":
            args.append(float(inst["max_duration"]))
        return args
    if problem == "dlp":
        if inst["variant"] == "cover":
            return [dist, np.array(inst["demands"], dtype=float), float(inst["cover_radius"])]
        return [dist]
    raise ValueError(f"no artifact signature for problem {problem!r}")


def main():
    path, func_name, kind = sys.argv[1:4]
    inst = json.load(sys.stdin)
    func = load(path, func_name)
    out = np.array(func(*arguments(inst)), dtype=float)
    if kind == "node_scores":
        if out.ndim != 1:
            raise ValueError(f"expected a vector, got shape {out.shape}")
    else:
        if out.ndim != 2 or out.shape[0] != out.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {out.shape}")
        np.fill_diagonal(out, 0.0)
    json.dump({"artifact": {"kind": kind, "values": out.tolist()}}, sys.stdout, allow_nan=False)


if __name__ == "__main__":
    main()
