"""Offline value iteration over the interpolated state grid.

Q-values are laid out as ``(node, previous advisory, action)`` with nodes in
row-major order over ``(h, dh_own, dh_int, tau)``. Taking action ``a`` makes
``a`` the previous advisory of the successor, so the expected successor value
of action ``a`` only needs column ``a`` of the value function.

The transition of each action factors into a sparse operator over
``(h, dh_own, dh_int)`` and a shared tau operator, applied to the value
function reshaped as ``(n_h * n_dh_own * n_dh_int, n_tau)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from ..core.errors import ConvergenceError
from .advisories import advisory_command, next_vertical_rates
from .interpolation import interpolation_stencil, interpolation_weights
from .mdp import MdpSpec, action_rewards
from .table import PolicyTable

logger = logging.getLogger(__name__)


def _stencil_matrix(
    indices: np.ndarray, weights: np.ndarray, n_cols: int, probs: np.ndarray
) -> sparse.csr_matrix:
    """Sparse matrix from per-outcome stencils shaped (outcomes, rows, corners)."""
    _, n_rows, _ = indices.shape
    rows = np.broadcast_to(np.arange(n_rows)[None, :, None], indices.shape)
    data = weights * probs[:, None, None]
    matrix = sparse.coo_matrix(
        (data.ravel(), (rows.ravel(), indices.ravel())), shape=(n_rows, n_cols)
    )
    return matrix.tocsr()


def tau_transition(spec: MdpSpec) -> sparse.csr_matrix:
    """Deterministic countdown ``tau' = max(tau - dt, 0)``; tau = 0 is terminal."""
    tau = np.asarray(spec.tau_grid)
    lower, weight = interpolation_weights(tau, np.maximum(tau - spec.dt, 0.0))
    rows = np.concatenate([np.arange(len(tau)), np.arange(len(tau))])
    cols = np.concatenate([lower, lower + 1])
    data = np.concatenate([1.0 - weight, weight])
    data[tau[rows] == 0.0] = 0.0
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(len(tau), len(tau))).tocsr()
    matrix.eliminate_zeros()
    return matrix


def vertical_transitions(spec: MdpSpec) -> list[sparse.csr_matrix]:
    """Per-action transition over (h, dh_own, dh_int) with intruder rate noise."""
    h_grid, own_grid, int_grid = (np.asarray(g) for g in spec.grids[:3])
    mesh = np.meshgrid(h_grid, own_grid, int_grid, indexing="ij")
    h, dh_own, dh_int = (m.ravel() for m in mesh)
    n_vertical = h.size
    probs = np.asarray(spec.intruder_accel_probs)
    accels = np.array([-spec.intruder_accel, 0.0, spec.intruder_accel])
    matrices = []
    for advisory in spec.actions:
        command = advisory_command(advisory)
        next_own = next_vertical_rates(dh_own, command, spec.compliance_accel, spec.dt)
        stencils = []
        for accel in accels:
            next_int = dh_int + accel * spec.dt
            mean_int = (dh_int + next_int) / 2.0
            mean_own = (dh_own + next_own) / 2.0
            next_h = h + spec.dt * (mean_int - mean_own)
            successors = np.stack([next_h, next_own, next_int], axis=1)
            stencils.append(interpolation_stencil(spec.grids[:3], successors))
        indices = np.stack([s[0] for s in stencils])
        weights = np.stack([s[1] for s in stencils])
        matrices.append(_stencil_matrix(indices, weights, n_vertical, probs))
    return matrices


def transition_operators(spec: MdpSpec) -> list[LinearOperator]:
    """Expected-successor operators ``E_a`` acting on value vectors over all nodes."""
    tau_matrix = tau_transition(spec)
    n_tau = len(spec.tau_grid)
    n_nodes = spec.n_nodes
    n_vertical = n_nodes // n_tau

    def make(vertical: sparse.csr_matrix) -> LinearOperator:
        def matvec(x: np.ndarray) -> np.ndarray:
            values = np.asarray(x).reshape(n_vertical, n_tau)
            return np.asarray(vertical @ values @ tau_matrix.T).ravel()

        return LinearOperator((n_nodes, n_nodes), matvec=matvec, dtype=float)

    return [make(vertical) for vertical in vertical_transitions(spec)]


def bellman_backup(
    q: np.ndarray,
    rewards: np.ndarray,
    operators: Sequence[Any],
    successor_prev: Sequence[int],
    discount: float,
) -> np.ndarray:
    """One synchronous backup: reads ``q`` and returns a new array."""
    values = q.max(axis=2)
    backed_up = np.empty_like(q)
    for a, operator in enumerate(operators):
        expected = np.asarray(operator @ values[:, successor_prev[a]]).ravel()
        backed_up[:, :, a] = rewards[:, :, a] + discount * expected[:, None]
    return backed_up


def solve_q_values(
    rewards: np.ndarray,
    operators: Sequence[Any],
    successor_prev: Sequence[int],
    discount: float,
    tolerance: float,
    max_iterations: int,
) -> tuple[np.ndarray, int, float]:
    """Iterate backups from zero until the largest change is within ``tolerance``.

    Args:
        rewards: Immediate rewards shaped (nodes, previous, actions)
        operators: One expected-successor operator per action, anything
            supporting ``@`` with a vector (sparse matrices included)
        successor_prev: Previous-advisory index of the successor per action
        discount: Discount factor in (0, 1]
        tolerance: Convergence threshold on the max-norm residual
        max_iterations: Sweep limit

    Returns:
        (Q-values, iterations, final residual)

    Raises:
        ConvergenceError: If the residual is still above ``tolerance`` after
            ``max_iterations`` sweeps
    """
    if tolerance <= 0.0:
        msg = f"tolerance must be positive, got {tolerance}"
        raise ValueError(msg)
    q = np.zeros_like(rewards, dtype=float)
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        updated = bellman_backup(q, rewards, operators, successor_prev, discount)
        residual = float(np.max(np.abs(updated - q)))
        q = updated
        logger.debug("Sweep %d: residual %.3e", iteration, residual)
        if residual <= tolerance:
            return q, iteration, residual
    msg = (
        f"Value iteration did not converge in {max_iterations} sweeps "
        f"(residual {residual:.3e})"
    )
    raise ConvergenceError(msg, last_residual=residual, iterations=max_iterations)


def value_iteration(spec: MdpSpec, tolerance: float | None = None) -> PolicyTable:
    """Solve ``spec`` and wrap the result in a ``PolicyTable``.

    Raises:
        ConvergenceError: If the solve does not reach ``tolerance``
    """
    tolerance = spec.tolerance if tolerance is None else tolerance
    logger.info(
        "Solving MDP: %d nodes x %d advisories, tolerance %.1e",
        spec.n_nodes,
        len(spec.actions),
        tolerance,
    )
    q, iterations, residual = solve_q_values(
        action_rewards(spec),
        transition_operators(spec),
        successor_prev=list(range(len(spec.actions))),
        discount=spec.discount,
        tolerance=tolerance,
        max_iterations=spec.max_iterations,
    )
    logger.info("Converged after %d sweeps (residual %.3e)", iterations, residual)
    return PolicyTable(
        spec=spec.model_copy(update={"tolerance": tolerance}),
        q_values=q.astype(np.float32),
        iterations=iterations,
        residual=residual,
    )
