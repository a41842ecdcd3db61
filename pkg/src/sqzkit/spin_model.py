"""Frozen-mode spin model on the 2^N space of occupied quasimomentum modes.

Atoms pinned to quasimomentum modes interact through a collective
ferromagnetic Heisenberg term -(U/L) S.S and precess in a mode-dependent
axial field B_q = -4 J sin(q a + phi/2) sin(phi/2).  The variance of that
field sets the one-axis-twisting strength chi = Btilde^2 / ((N-1) f U).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import LinearOperator

from .metrics import SpinSnapshot, SqueezingTrace
from .propagate import KrylovPropagator

DENSE_SPIN_CAP = 14  # explicit matrices are fine below this
SPARSE_SPIN_CAP = 20  # matrix-free above 16, rejected above 20
_CSR_CAP = 16


def quasimomenta(n_sites):
    """q*a values of the first Brillouin zone for a periodic chain, in (-pi, pi]."""
    qa = 2 * np.pi * np.arange(n_sites) / n_sites
    return np.where(qa > np.pi + 1e-12, qa - 2 * np.pi, qa)


@dataclass(frozen=True)
class ModeSet:
    """Occupied quasimomentum modes; 1D shape (N,) or 2D shape (N, 2) of q*a values."""

    occupied_qa: np.ndarray
    filling: float

    def __post_init__(self):
        qa = np.atleast_1d(np.asarray(self.occupied_qa, dtype=float))
        object.__setattr__(self, "occupied_qa", qa)
        flat = qa.reshape(len(qa), -1)
        if len(np.unique([tuple(row) for row in np.round(flat, 12)], axis=0)) != len(qa):
            raise ValueError("occupied quasimomenta must be distinct")

    @property
    def n_atoms(self):
        return len(self.occupied_qa)

    @property
    def ndim(self):
        return 1 if self.occupied_qa.ndim == 1 else self.occupied_qa.shape[1]


def _occupation_order(qa_modes, energies):
    """Deterministic filling order: energy first, ties broken toward positive q."""
    qa = np.atleast_2d(qa_modes.reshape(len(qa_modes), -1))
    keys = [
        (
            round(float(energies[i]), 12),
            round(float(np.sum(np.abs(qa[i]))), 12),
            tuple(-np.sign(qa[i])),
            tuple(-qa[i]),
        )
        for i in range(len(energies))
    ]
    return sorted(range(len(energies)), key=lambda i: keys[i])


def mode_set_1d(n_sites, n_atoms, tunneling=1.0):
    """N lowest modes of the 1D lowest band, filled symmetrically around q=0."""
    if not 1 <= n_atoms <= n_sites:
        raise ValueError("need 1 <= N <= L")
    qa = quasimomenta(n_sites)
    energies = -2 * tunneling * np.cos(qa)
    order = _occupation_order(qa, energies)
    return ModeSet(occupied_qa=qa[order[:n_atoms]], filling=n_atoms / n_sites)


def mode_set_2d(ell, n_atoms, tunneling=1.0):
    """N lowest modes of an ell x ell Brillouin-zone grid (square lattice layer)."""
    if not 1 <= n_atoms <= ell * ell:
        raise ValueError("need 1 <= N <= ell^2")
    qa = quasimomenta(ell)
    qx, qy = np.meshgrid(qa, qa, indexing="ij")
    grid = np.column_stack([qx.ravel(), qy.ravel()])
    energies = -2 * tunneling * (np.cos(grid[:, 0]) + np.cos(grid[:, 1]))
    order = _occupation_order(grid, energies)
    return ModeSet(occupied_qa=grid[order[:n_atoms]], filling=n_atoms / ell**2)


@dataclass(frozen=True)
class AxialField:
    """Per-mode axial field with its mean and root-variance statistics."""

    b_q: np.ndarray
    mean_b: float
    var_root_b: float

    @property
    def n_modes(self):
        return len(self.b_q)


def axial_fields(tunneling, phi, modes: ModeSet) -> AxialField:
    """Mode-dependent axial field B_q = -4 J sin(q a + phi/2) sin(phi/2).

    For 2D mode sets the per-axis contributions add (equal SOC angle along
    both axes).
    """
    if modes.n_atoms == 0:
        raise ValueError("empty mode set")
    qa = modes.occupied_qa
    if qa.ndim == 1:
        b = -4 * tunneling * np.sin(qa + phi / 2) * np.sin(phi / 2)
    else:
        b = np.sum(-4 * tunneling * np.sin(qa + phi / 2) * np.sin(phi / 2), axis=1)
    mean = float(np.sum(b) / len(b))
    var = float(np.sum((b - mean) ** 2) / len(b))
    return AxialField(b_q=b, mean_b=mean, var_root_b=np.sqrt(var))


@dataclass(frozen=True)
class OATParams:
    """Effective one-axis-twisting parameters extracted from the axial field."""

    chi: float
    mean_b: float
    gap: float  # f*U, the collective protection gap
    n_spins: int
    btilde_over_u: float


def oat_parameters(field: AxialField, interaction_u, filling, n_spins) -> OATParams:
    """chi = Btilde^2 / ((N-1) f U) plus the gap-validity ratio Btilde/U."""
    if interaction_u <= 0:
        raise ValueError("gap protection requires U > 0")
    if n_spins < 2:
        raise ValueError("need at least two spins")
    chi = field.var_root_b**2 / ((n_spins - 1) * filling * interaction_u)
    return OATParams(
        chi=chi,
        mean_b=field.mean_b,
        gap=filling * interaction_u,
        n_spins=n_spins,
        btilde_over_u=field.var_root_b / interaction_u,
    )


# ---------------------------------------------------------------------------
# 2^N representation: bit q of a basis index is 1 when mode q carries spin up
# ---------------------------------------------------------------------------


def _popcounts(n_spins):
    idx = np.arange(1 << n_spins, dtype=np.uint32)
    counts = np.zeros(1 << n_spins, dtype=np.int32)
    for q in range(n_spins):
        counts += (idx >> q) & 1
    return counts


def _field_diagonal(b_q):
    n = len(b_q)
    diag = np.zeros(1 << n)
    idx = np.arange(1 << n, dtype=np.uint32)
    for q, b in enumerate(b_q):
        diag += b * (((idx >> q) & 1) - 0.5)
    return diag


def _apply_lower(psi, n_spins, out=None):
    """S_- psi via per-spin slicing; bit=1 (up) maps to bit=0 (down)."""
    if out is None:
        out = np.zeros_like(psi)
    for q in range(n_spins):
        view = psi.reshape(1 << (n_spins - 1 - q), 2, 1 << q)
        dest = out.reshape(1 << (n_spins - 1 - q), 2, 1 << q)
        dest[:, 0, :] += view[:, 1, :]
    return out


def _apply_raise(psi, n_spins, out=None):
    if out is None:
        out = np.zeros_like(psi)
    for q in range(n_spins):
        view = psi.reshape(1 << (n_spins - 1 - q), 2, 1 << q)
        dest = out.reshape(1 << (n_spins - 1 - q), 2, 1 << q)
        dest[:, 1, :] += view[:, 0, :]
    return out


def collective_ops_sparse(n_spins):
    """Sparse S_x, S_y, S_z on the 2^N space."""
    dim = 1 << n_spins
    idx = np.arange(dim, dtype=np.int64)
    sz = sparse.diags(_popcounts(n_spins) - n_spins / 2).tocsr()
    rows, cols = [], []
    for q in range(n_spins):
        up = (idx >> q) & 1
        src = idx[up == 1]
        rows.append(src ^ (1 << q))
        cols.append(src)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    sm = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(dim, dim)
    )  # S_-: up -> down
    sp = sm.T.tocsr()
    sx = ((sp + sm) / 2).tocsr()
    sy = ((sp - sm) / (2j)).tocsr()
    return sx, sy, sz


def spin_hamiltonian(field: AxialField, interaction_u, n_sites, n_spins):
    """-(U/L) S.S - sum_q B_q s_q^z on the 2^N space.

    Returns a CSR matrix for N <= 16 and a matrix-free LinearOperator up to
    N = 20; larger N is rejected.  Uses S.S = S_+ S_- + S_z^2 - S_z.
    """
    if n_spins > SPARSE_SPIN_CAP:
        raise ValueError(f"N={n_spins} exceeds the 2^N cap of {SPARSE_SPIN_CAP}")
    if len(field.b_q) != n_spins:
        raise ValueError("field must supply one B_q per spin")
    u_over_l = interaction_u / n_sites
    dim = 1 << n_spins
    m = _popcounts(n_spins) - n_spins / 2
    # i = j part of S_+ S_- is N/2 + S_z, so the full diagonal of S.S reads
    # m^2 + N/2 once the pair flips are split off
    diag = -u_over_l * (m**2 + n_spins / 2) - _field_diagonal(field.b_q)

    if n_spins <= _CSR_CAP:
        idx = np.arange(dim, dtype=np.int64)
        rows, cols = [], []
        for i in range(n_spins):
            for j in range(n_spins):
                if i == j:
                    continue
                mask_ok = (((idx >> j) & 1) == 1) & (((idx >> i) & 1) == 0)
                src = idx[mask_ok]
                cols.append(src)
                rows.append(src ^ (1 << i) ^ (1 << j))
        rows = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
        cols = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
        flips = sparse.csr_matrix(
            (np.full(len(rows), -u_over_l), (rows, cols)), shape=(dim, dim)
        )
        return (flips + sparse.diags(diag)).tocsr()

    field_diag = _field_diagonal(field.b_q)
    free_diag = -u_over_l * (m.astype(float) ** 2 - m) - field_diag

    def matvec(psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        lowered = _apply_lower(psi, n_spins)
        out = _apply_raise(lowered, n_spins)
        out *= -u_over_l
        out += free_diag * psi
        return out

    return LinearOperator((dim, dim), matvec=matvec, dtype=complex)


def x_polarized_state(n_spins):
    """Product state with every spin along +x."""
    dim = 1 << n_spins
    return np.full(dim, dim**-0.5, dtype=complex)


def z_polarized_state(n_spins, up=False):
    psi = np.zeros(1 << n_spins, dtype=complex)
    psi[-1 if up else 0] = 1.0
    return psi


def flip_all(psi):
    """Global pi pulse about x, up to a physically irrelevant phase."""
    return psi[::-1].copy()


def dicke_population(psi):
    """Probability weight inside the fully symmetric S = N/2 manifold.

    Projects by summing overlaps with the N+1 Dicke states, whose amplitudes
    are uniform 1/sqrt(C(N, m)) over bitstrings of fixed popcount m.
    """
    n_spins = int(np.log2(len(psi)))
    if (1 << n_spins) != len(psi):
        raise ValueError("state dimension must be 2^N")
    counts = _popcounts(n_spins)
    sums = np.bincount(counts, weights=psi.real, minlength=n_spins + 1) + 1j * np.bincount(
        counts, weights=psi.imag, minlength=n_spins + 1
    )
    from scipy.special import gammaln

    m = np.arange(n_spins + 1)
    ln_binom = gammaln(n_spins + 1) - gammaln(m + 1) - gammaln(n_spins - m + 1)
    overlaps2 = np.abs(sums) ** 2 * np.exp(-ln_binom)
    return float(np.sum(overlaps2))


def collective_snapshot(psi, n_spins, time=0.0):
    """SpinSnapshot of a 2^N state from three collective matvecs."""
    m = _popcounts(n_spins) - n_spins / 2
    vz = m * psi
    lowered = _apply_lower(psi, n_spins)
    raised = _apply_raise(psi, n_spins)
    vx = 0.5 * (raised + lowered)
    vy = -0.5j * (raised - lowered)
    vecs = [vx, vy, vz]
    mean = np.array([np.vdot(psi, v).real for v in vecs])
    mat = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            mat[a, b] = mat[b, a] = np.vdot(vecs[a], vecs[b]).real
    return SpinSnapshot(mean_spin=mean, second_moments=mat, n_spins=n_spins, time=time)


def ramsey_trace(
    field: AxialField,
    interaction_u,
    n_sites,
    n_spins,
    times,
    echo=False,
    tol=1e-9,
    m_max=25,
    track_dicke=False,
):
    """Squeezing trace of the spin model starting from the x-polarized state.

    With ``echo`` a pi pulse about x is inserted at t/2 for every requested
    time, which re-runs the second half per time point.
    """
    h = spin_hamiltonian(field, interaction_u, n_sites, n_spins)
    psi0 = x_polarized_state(n_spins)
    times = np.asarray(times, dtype=float)
    snaps = []
    dicke = []

    def record(t, psi):
        snaps.append(collective_snapshot(psi, n_spins, time=t))
        if track_dicke:
            dicke.append(dicke_population(psi))

    if not echo:
        prop = KrylovPropagator(h, tol=tol, m_max=m_max)
        prop.run(psi0, times, record)
    else:
        order = np.argsort(times)
        half_prop = KrylovPropagator(h, tol=tol, m_max=m_max)
        state = {"psi": psi0, "t": 0.0}

        def advance_to(t_half):
            if t_half > state["t"]:
                out = {}
                half_prop.run(
                    state["psi"],
                    np.array([t_half - state["t"]]),
                    lambda _t, p: out.update(psi=p),
                )
                state["psi"], state["t"] = out["psi"], t_half
            return state["psi"]

        buffer = {}
        for k in order:
            t = times[k]
            if t == 0.0:
                buffer[k] = collective_snapshot(psi0, n_spins, time=0.0)
                if track_dicke:
                    buffer[(k, "d")] = dicke_population(psi0)
                continue
            first = advance_to(t / 2)
            flipped = flip_all(first)
            out = {}
            KrylovPropagator(h, tol=tol, m_max=m_max).run(
                flipped, np.array([t / 2]), lambda _t, p: out.update(psi=p)
            )
            buffer[k] = collective_snapshot(out["psi"], n_spins, time=t)
            if track_dicke:
                buffer[(k, "d")] = dicke_population(out["psi"])
        snaps = [buffer[k] for k in range(len(times))]
        if track_dicke:
            dicke = [buffer[(k, "d")] for k in range(len(times))]

    extras = {"dicke_population": np.array(dicke)} if track_dicke else {}
    return SqueezingTrace.from_snapshots(snaps, extras=extras)


def solve_phi_for_btilde(target_ratio, tunneling, interaction_u, mode_builder, tol=1e-12):
    """SOC angle phi in (0, pi] with Btilde(phi)/U equal to the target ratio.

    ``mode_builder`` has no arguments and returns the ModeSet; Btilde grows
    like sin(phi/2) near zero, so bisection on a monotone bracket applies.
    """
    modes = mode_builder() if callable(mode_builder) else mode_builder

    def ratio(phi):
        return axial_fields(tunneling, phi, modes).var_root_b / interaction_u

    lo, hi = 1e-9, np.pi
    if ratio(hi) < target_ratio:
        raise ValueError("target Btilde/U unreachable for phi <= pi")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ratio(mid) < target_ratio:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def oat_error_benchmark(
    n_spins=20,
    btilde_over_u=(0.01, 0.05, 0.1, 0.15, 0.2),
    interaction_u=10.0,
    tunneling=1.0,
    n_times=80,
    tol=1e-9,
):
    """Relative error of the OAT optimal squeezing (dB) against the spin model.

    Runs at unit filling of a periodic chain (L = N), where the mean axial
    field vanishes and no echo is needed.  Returns (ratios, rel_errors).
    """
    from .oat_analytic import oat_squeezing_trace

    modes = mode_set_1d(n_spins, n_spins, tunneling)
    errors = []
    for ratio in btilde_over_u:
        phi = solve_phi_for_btilde(ratio, tunneling, interaction_u, lambda: modes)
        field = axial_fields(tunneling, phi, modes)
        pars = oat_parameters(field, interaction_u, 1.0, n_spins)
        t_opt_guess = 3 ** (1 / 6) * (n_spins / 2) ** (-2 / 3) / pars.chi
        times = np.linspace(0.0, 2.5 * t_opt_guess, n_times)
        spin = ramsey_trace(field, interaction_u, n_spins, n_spins, times, echo=False, tol=tol)
        oat = oat_squeezing_trace(n_spins, pars.chi, times)
        db_spin = spin.optimal().db_opt
        db_oat = oat.optimal().db_opt
        errors.append(abs(db_oat - db_spin) / abs(db_spin))
    return np.asarray(btilde_over_u, dtype=float), np.asarray(errors)
