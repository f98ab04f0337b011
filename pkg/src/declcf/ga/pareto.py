"""Non-dominated sorting and front-based survival selection (minimization)."""

from __future__ import annotations

import numpy as np


def dominates(a, b) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(objectives) -> list[list[int]]:
    """Pareto fronts as index lists; indices keep insertion order inside a front."""
    F = np.asarray(objectives, dtype=float)
    n = len(F)
    if n == 0:
        return []
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.nonzero(remaining & (n_dominators == 0))[0]
        fronts.append(front.tolist())
        remaining[front] = False
        n_dominators = n_dominators - dom[front].sum(axis=0)
    return fronts


def survival_scores(front_objectives) -> tuple[np.ndarray, np.ndarray]:
    """Score = diversity / proximity for one front, plus an extreme-point mask.

    Objectives are rescaled to [0, 1] within the front, so the ideal point is the
    origin. Proximity is the L2 norm of the rescaled vector; diversity is the sum
    of the two smallest L2 distances to other members.
    """
    F = np.asarray(front_objectives, dtype=float)
    n, m = F.shape
    ideal, nadir = F.min(axis=0), F.max(axis=0)
    span = nadir - ideal
    N = np.where(span > 0, (F - ideal) / np.where(span > 0, span, 1.0), 0.0)
    proximity = np.sqrt((N ** 2).sum(axis=1))
    if n > 1:
        pair = np.sqrt(((N[:, None, :] - N[None, :, :]) ** 2).sum(axis=2))
        np.fill_diagonal(pair, np.inf)
        nearest = np.sort(pair, axis=1)[:, :2]
        diversity = np.where(np.isfinite(nearest), nearest, 0.0).sum(axis=1)
    else:
        diversity = np.zeros(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(proximity > 0, diversity / np.where(proximity > 0, proximity, 1.0), np.inf)
    extreme = np.zeros(n, dtype=bool)
    extreme[np.argmin(F, axis=0)] = True
    return score, extreme


def crowding_distance(front_objectives) -> np.ndarray:
    F = np.asarray(front_objectives, dtype=float)
    n, m = F.shape
    dist = np.zeros(n)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        span = F[order[-1], j] - F[order[0], j]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0 and n > 2:
            dist[order[1:-1]] += (F[order[2:], j] - F[order[:-2], j]) / span
    return dist


def survival_select(fronts: list[list[int]], objectives, n_survivors: int,
                    method: str = "age") -> list[int]:
    """Admit whole fronts in order, then the best-scored members of the splitting front."""
    F = np.asarray(objectives, dtype=float)
    if n_survivors > len(F):
        raise ValueError("more survivors requested than individuals available")
    chosen: list[int] = []
    for front in fronts:
        room = n_survivors - len(chosen)
        if room <= 0:
            break
        if len(front) <= room:
            chosen.extend(front)
            continue
        sub = F[front]
        if method == "age":
            score, extreme = survival_scores(sub)
            order = sorted(range(len(front)), key=lambda i: (not extreme[i], -score[i], i))
        elif method == "crowding":
            cd = crowding_distance(sub)
            order = sorted(range(len(front)), key=lambda i: (-cd[i], i))
        else:
            raise ValueError(f"unknown survival method {method!r}")
        chosen.extend(front[i] for i in order[:room])
    return chosen
