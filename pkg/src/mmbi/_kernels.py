"""Compiled inner loops for the hot dynamic-programming paths.

The online agents call these hundreds of thousands of times per experiment,
so they are written as explicit loops for numba. Argmax ties always resolve
to the lowest action index (strict ``>`` comparison).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def mmbi_kernel(P, R, w, gamma, T, keep_all):
    """Backwards induction over a weighted stack of MDPs.

    P: (n, S, A, S) transitions, R: (n, S, A) mean rewards, w: (n,) weights.
    Returns (plan (T, S), belief_q (T, S, A), values) where ``values`` has
    shape (T + 1, n, S) if ``keep_all`` else (1, n, S) holding stage 0.
    """
    n, S, A, _ = P.shape
    plan = np.empty((T, S), dtype=np.int64)
    belief_q = np.empty((T, S, A))
    if keep_all:
        values = np.zeros((T + 1, n, S))
    else:
        values = np.zeros((1, n, S))
    v_next = np.zeros((n, S))
    v_cur = np.zeros((n, S))
    q_mdp = np.empty((n, A))
    for t in range(T - 1, -1, -1):
        for s in range(S):
            for a in range(A):
                acc = 0.0
                for m in range(n):
                    cont = 0.0
                    for s2 in range(S):
                        cont += P[m, s, a, s2] * v_next[m, s2]
                    q = R[m, s, a] + gamma * cont
                    q_mdp[m, a] = q
                    acc += w[m] * q
                belief_q[t, s, a] = acc
            best = 0
            for a in range(1, A):
                if belief_q[t, s, a] > belief_q[t, s, best]:
                    best = a
            plan[t, s] = best
            for m in range(n):
                v_cur[m, s] = q_mdp[m, best]
        for m in range(n):
            for s in range(S):
                v_next[m, s] = v_cur[m, s]
        if keep_all:
            values[t] = v_next
    if not keep_all:
        values[0] = v_next
    return plan, belief_q, values


@njit(cache=True)
def value_iteration_kernel(P, R, gamma, sweeps):
    """Run ``sweeps`` synchronous Bellman-optimality sweeps from Q = 0.

    Returns (Q (S, A), greedy policy (S,), sup-norm change of the last sweep).
    """
    S, A, _ = P.shape
    q = np.zeros((S, A))
    v = np.zeros(S)
    last_delta = 0.0
    for _ in range(sweeps):
        last_delta = 0.0
        for s in range(S):
            for a in range(A):
                cont = 0.0
                for s2 in range(S):
                    cont += P[s, a, s2] * v[s2]
                new = R[s, a] + gamma * cont
                d = abs(new - q[s, a])
                if d > last_delta:
                    last_delta = d
                q[s, a] = new
        for s in range(S):
            best = q[s, 0]
            for a in range(1, A):
                if q[s, a] > best:
                    best = q[s, a]
            v[s] = best
    policy = np.zeros(S, dtype=np.int64)
    for s in range(S):
        for a in range(1, A):
            if q[s, a] > q[s, policy[s]]:
                policy[s] = a
    return q, policy, last_delta
