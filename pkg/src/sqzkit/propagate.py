"""Krylov-subspace propagation of exp(-i H t) for Hermitian generators.

One Lanczos decomposition serves several nearby output times: the basis is
built once per step, the tridiagonal projection is exponentiated per output
time, and the step size adapts to a local error estimate.  Used by the exact
Fermi-Hubbard and spin-model backends, which hand in either sparse matrices
or matrix-free operators.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import LinearOperator


class KrylovConvergenceError(RuntimeError):
    """Raised when the subspace cannot reach the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def as_matvec(operator):
    """Return (matvec, dim) for a sparse matrix, ndarray, LinearOperator or callable."""
    if sparse.issparse(operator):
        csr = operator.tocsr()
        return csr.dot, csr.shape[0]
    if isinstance(operator, np.ndarray):
        return operator.dot, operator.shape[0]
    if isinstance(operator, LinearOperator):
        return operator.matvec, operator.shape[0]
    if callable(operator):
        raise TypeError("bare callables carry no dimension; wrap in a LinearOperator")
    raise TypeError(f"unsupported operator type {type(operator)!r}")


def _lanczos_basis(matvec, psi, m_max, full_reorth):
    """Lanczos tridiagonalization started from psi (assumed normalized).

    Returns (Q, alpha, beta, breakdown) with Q of shape (k, dim), alpha the
    k diagonal and beta the k-1 off-diagonal entries.
    """
    dim = psi.shape[0]
    Q = np.empty((m_max, dim), dtype=complex)
    alpha = np.empty(m_max)
    beta = np.empty(max(m_max - 1, 0))
    Q[0] = psi
    q_prev = None
    breakdown = False
    k = 0
    for k in range(m_max):
        w = matvec(Q[k])
        a = np.vdot(Q[k], w).real
        alpha[k] = a
        w = w - a * Q[k]
        if q_prev is not None:
            w -= beta[k - 1] * q_prev
        if full_reorth:
            # one modified Gram-Schmidt sweep against the whole basis
            for j in range(k + 1):
                w -= np.vdot(Q[j], w) * Q[j]
        b = np.linalg.norm(w)
        if k + 1 == m_max:
            return Q[: k + 1], alpha[: k + 1], beta[:k], False, b
        beta[k] = b
        if b < 1e-14:
            breakdown = True
            return Q[: k + 1], alpha[: k + 1], beta[:k], breakdown, b
        q_prev = Q[k]
        Q[k + 1] = w / b
    return Q[: k + 1], alpha[: k + 1], beta[:k], breakdown, 0.0


def _expm_tridiag(alpha, beta, dt):
    """exp(-i dt T) e_1 for the real symmetric tridiagonal T, plus tail entry."""
    vals, vecs = np.linalg.eigh(
        np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        if len(alpha) > 1
        else np.array([[alpha[0]]])
    )
    phases = np.exp(-1j * dt * vals)
    coef = vecs @ (phases * vecs[0].conj())
    return coef


class KrylovPropagator:
    """Stepwise exp(-i H t) propagation emitting states at requested times."""

    def __init__(self, operator, tol=1e-9, m_max=30, full_reorth=None):
        self.matvec, self.dim = as_matvec(operator)
        self.tol = float(tol)
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.m_max = int(m_max)
        if full_reorth is None:
            full_reorth = self.m_max * self.dim <= 4e7
        self.full_reorth = full_reorth

    def _step_error(self, alpha, beta, tail, dt):
        # a-posteriori estimate: weight of the first discarded basis vector
        coef = _expm_tridiag(alpha, beta, dt)
        return abs(tail * coef[-1]), coef

    def run(self, psi0, times, callback):
        """Propagate psi0 and invoke callback(t, psi) at each requested time.

        ``times`` must be nondecreasing and nonnegative; t = 0 entries reuse
        the initial state.  Raises KrylovConvergenceError if even the
        smallest admissible step cannot meet the local tolerance.
        """
        times = np.asarray(times, dtype=float)
        if times.size and (np.any(np.diff(times) < 0) or times[0] < 0):
            raise ValueError("times must be nondecreasing and nonnegative")
        psi = np.array(psi0, dtype=complex)
        t_now = 0.0
        idx = 0
        while idx < times.size and times[idx] <= t_now + 1e-300:
            callback(times[idx], psi)
            idx += 1
        while idx < times.size:
            t_end = times[-1]
            norm = np.linalg.norm(psi)
            Q, alpha, beta, breakdown, tail = _lanczos_basis(
                self.matvec, psi / norm, self.m_max, self.full_reorth
            )
            remaining = t_end - t_now
            if breakdown or tail == 0.0:
                dt = remaining  # invariant subspace: exact for any step
                coef = _expm_tridiag(alpha, beta, dt)
            else:
                # per-step error budget proportional to the step fraction
                dt = remaining
                for _ in range(60):
                    err, coef = self._step_error(alpha, beta, tail, dt)
                    if err <= self.tol * max(dt / max(t_end, 1e-300), 1e-6):
                        break
                    dt *= 0.5
                else:
                    raise KrylovConvergenceError(
                        f"no admissible step at m_max={self.m_max}", residual=err
                    )
            # emit every requested time inside (t_now, t_now + dt]
            while idx < times.size and times[idx] <= t_now + dt + 1e-12 * max(t_now, 1.0):
                c = _expm_tridiag(alpha, beta, times[idx] - t_now)
                callback(times[idx], norm * (c @ Q))
                idx += 1
            psi = norm * (coef @ Q)
            t_now += dt
        return psi


def krylov_expm(operator, psi, t, tol=1e-9, m_max=30):
    """exp(-i operator t) psi with norm-preservation check.

    The evolved state keeps its norm within 10*tol of the input norm; a
    violation raises KrylovConvergenceError with the achieved residual.
    """
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    prop = KrylovPropagator(operator, tol=tol, m_max=m_max)
    out = {}

    def grab(time, state):
        out["psi"] = state

    if t == 0.0:
        return np.array(psi, dtype=complex)
    sign = 1.0
    mv = prop.matvec
    if t < 0:
        sign, t = -1.0, -t
        prop.matvec = lambda v: -mv(v)
    prop.run(np.asarray(psi, dtype=complex), np.array([t]), grab)
    psi_t = out["psi"]
    drift = abs(np.linalg.norm(psi_t) - np.linalg.norm(psi))
    if drift > 10 * tol * max(np.linalg.norm(psi), 1.0):
        raise KrylovConvergenceError("norm drift exceeds tolerance", residual=drift)
    return psi_t


def krylov_trajectory(operator, psi0, times, tol=1e-9, m_max=30, observables=None):
    """States (or observable values) of exp(-i H t) psi0 on a time grid.

    With ``observables`` (a callable psi -> record) only records are kept,
    which avoids storing full states on large Hilbert spaces.
    """
    prop = KrylovPropagator(operator, tol=tol, m_max=m_max)
    records = []

    def grab(time, state):
        records.append(observables(state) if observables else state.copy())

    prop.run(np.asarray(psi0, dtype=complex), np.asarray(times, dtype=float), grab)
    return records
