"""Independent reference implementations used to freeze expected values.

Everything here is deliberately brute force: dense Kronecker products,
direct master-equation integration, scan-based minimization and power
series.  None of it shares code paths with the package.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

SP2 = np.array([[0, 0], [1, 0]], dtype=complex)  # basis order (down, up)
SM2 = SP2.T.conj()
SZ2 = np.diag([-0.5, 0.5]).astype(complex)
SX2 = 0.5 * (SP2 + SM2)
SY2 = -0.5j * (SP2 - SM2)
ID2 = np.eye(2, dtype=complex)


def site_op(op, site, n_spins):
    """op at one site, identity elsewhere; site i maps to bit i of the index."""
    out = np.array([[1.0 + 0j]])
    for k in range(n_spins - 1, -1, -1):
        out = np.kron(out, op if k == site else ID2)
    return out


def collective(op, n_spins):
    dim = 2**n_spins
    total = np.zeros((dim, dim), dtype=complex)
    for i in range(n_spins):
        total += site_op(op, i, n_spins)
    return total


def dense_xyz(n_spins):
    return (
        collective(SX2, n_spins),
        collective(SY2, n_spins),
        collective(SZ2, n_spins),
    )


def x_product_state(n_spins):
    one = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    psi = np.array([1.0 + 0j])
    for _ in range(n_spins):
        psi = np.kron(psi, one)
    return psi


def down_product_state(n_spins):
    one = np.array([1.0, 0.0], dtype=complex)  # (down, up) ordering
    psi = np.array([1.0 + 0j])
    for _ in range(n_spins):
        psi = np.kron(psi, one)
    return psi


def dense_snapshot(psi, n_spins, time=0.0):
    from sqzkit.metrics import SpinSnapshot

    ops = dense_xyz(n_spins)
    vecs = [o @ psi for o in ops]
    mean = np.array([np.vdot(psi, v).real for v in vecs])
    mat = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            mat[a, b] = np.vdot(vecs[a], vecs[b]).real
    return SpinSnapshot(mean_spin=mean, second_moments=mat, n_spins=n_spins, time=time)


def integrate_lindblad(h, jump_list, rho0, times, rtol=1e-10, atol=1e-12):
    """Master-equation integration; jump_list holds (rate, full-space matrix)."""
    dim = h.shape[0]
    ls = [(g, np.asarray(L)) for g, L in jump_list]
    pre = [(g, L.conj().T @ L) for g, L in ls]

    def rhs(_t, flat):
        rho = flat.view(complex).reshape(dim, dim)
        drho = -1j * (h @ rho - rho @ h)
        for (g, L), (_, LdL) in zip(ls, pre):
            drho += g * (L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL))
        return drho.ravel().view(float)

    out = solve_ivp(
        rhs,
        (times[0], times[-1]),
        np.asarray(rho0, dtype=complex).ravel().view(float),
        t_eval=times,
        rtol=rtol,
        atol=atol,
        method="DOP853",
    )
    if not out.success:
        raise RuntimeError(out.message)
    return np.ascontiguousarray(out.y.T).view(complex).reshape(len(times), dim, dim)


def per_spin_jumps(op2, n_spins, rate):
    return [(rate, site_op(op2, i, n_spins)) for i in range(n_spins)]


def dense_evolve(h, psi, t):
    return expm(-1j * t * np.asarray(h)) @ psi


def theta_scan_variance(snapshot, n_samples=10_000):
    """Brute-force minimal transverse variance: coarse fan of directions,
    then a second fan zoomed around the best coarse angle."""
    mean = snapshot.mean_spin
    n = mean / np.linalg.norm(mean)
    seed = np.zeros(3)
    seed[np.argmin(np.abs(n))] = 1.0
    e1 = seed - seed.dot(n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    m = snapshot.second_moments

    def scan(center, width):
        thetas = center + width * np.linspace(-0.5, 0.5, n_samples)
        u = np.outer(np.cos(thetas), e1) + np.outer(np.sin(thetas), e2)
        vals = np.einsum("ki,ij,kj->k", u, m, u)
        k = int(np.argmin(vals))
        return thetas[k], float(vals[k])

    theta0, _ = scan(np.pi / 2, np.pi)
    _, best = scan(theta0, 2 * np.pi / n_samples)
    return best


def bessel_j0_series(x, terms=60):
    """Power series for J0; converges quickly for |x| <= 10."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    term = np.ones_like(x)
    total += term
    for k in range(1, terms):
        term = term * (-((x / 2) ** 2)) / k**2
        total += term
    return total


def welford_stats(values):
    mean = 0.0
    m2 = 0.0
    for k, v in enumerate(values, start=1):
        delta = v - mean
        mean += delta / k
        m2 += delta * (v - mean)
    return mean, np.sqrt(m2 / len(values))


def kitagawa_ueda_xi2(n_spins, chi_t):
    """Standard decoherence-free OAT squeezing parameter."""
    s = n_spins / 2
    a = 1 - np.cos(2 * chi_t) ** (n_spins - 2)
    b = 4 * np.sin(chi_t) * np.cos(chi_t) ** (n_spins - 2)
    var_min = (s / 2) * (1 + (n_spins - 1) / 4 * a) - (s / 2) * (n_spins - 1) / 4 * np.sqrt(
        a * a + b * b
    )
    sx = s * np.cos(chi_t) ** (n_spins - 1)
    return var_min * n_spins / sx**2
