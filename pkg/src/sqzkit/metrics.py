"""Squeezing quantification and trace post-processing.

The Ramsey squeezing parameter is

    xi^2 = min_theta var(S_perp(theta)) * N / |<S>|^2,

with the minimization over directions orthogonal to the mean spin solved in
closed form as the smaller eigenvalue of the transverse 2x2 covariance block.
Squeezing in dB is reported as -10*log10(xi^2), so positive dB means squeezed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AXES = ("x", "y", "z")


class ZeroMeanSpinError(ValueError):
    """Mean spin vanishes, so the squeezing direction is undefined."""


@dataclass(frozen=True)
class SpinSnapshot:
    """Collective-spin first and (symmetrized) second moments at one time.

    mean_spin:      <S_x>, <S_y>, <S_z>
    second_moments: 3x3 symmetric matrix of <S_i S_j + S_j S_i>/2
    """

    mean_spin: np.ndarray
    second_moments: np.ndarray
    n_spins: int
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mean_spin", np.asarray(self.mean_spin, dtype=float))
        object.__setattr__(
            self, "second_moments", np.asarray(self.second_moments, dtype=float)
        )
        if self.mean_spin.shape != (3,):
            raise ValueError("mean_spin must be a 3-vector")
        if self.second_moments.shape != (3, 3):
            raise ValueError("second_moments must be 3x3")
        m = self.second_moments
        if not np.allclose(m, m.T, atol=1e-8):
            raise ValueError("second_moments must be symmetric")
        if np.linalg.norm(self.mean_spin) > self.n_spins / 2 + 1e-8 + 1e-12 * self.n_spins:
            raise ValueError("|mean_spin| exceeds N/2")


def transverse_frame(mean_spin):
    """Orthonormal pair (e1, e2) spanning the plane orthogonal to mean_spin."""
    n = np.asarray(mean_spin, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ZeroMeanSpinError("undefined squeezing direction")
    n = n / norm
    # pick the axis least aligned with n to seed the frame
    seed = np.zeros(3)
    seed[np.argmin(np.abs(n))] = 1.0
    e1 = seed - np.dot(seed, n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def squeezing_parameter(snap: SpinSnapshot):
    """Ramsey squeezing parameter xi^2 and the optimal transverse angle.

    Returns (xi2, theta_min) where theta_min is measured from e1 of
    ``transverse_frame`` in the plane orthogonal to the mean spin.
    """
    s_vec = snap.mean_spin
    norm2 = float(np.dot(s_vec, s_vec))
    if norm2 == 0:
        raise ZeroMeanSpinError("undefined squeezing direction")
    e1, e2 = transverse_frame(s_vec)
    m = snap.second_moments
    # variance along u = u.M.u because <S_u> = 0 for u orthogonal to <S>
    v11 = float(e1 @ m @ e1)
    v22 = float(e2 @ m @ e2)
    v12 = float(e1 @ m @ e2)
    half_tr = 0.5 * (v11 + v22)
    radius = 0.5 * np.hypot(v11 - v22, 2.0 * v12)
    var_min = half_tr - radius
    theta_min = 0.5 * np.arctan2(2.0 * v12, v11 - v22) + np.pi / 2
    xi2 = var_min * snap.n_spins / norm2
    return xi2, theta_min


def squeezing_db(xi2):
    """Squeezing in dB; positive values mean squeezed below the CSS limit."""
    xi2 = np.asarray(xi2, dtype=float)
    return -10.0 * np.log10(xi2)


@dataclass
class SqueezingTrace:
    """Time series of snapshots with xi^2, dB values and validity flags."""

    times: np.ndarray
    snapshots: list
    xi2: np.ndarray
    valid: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def db(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return squeezing_db(self.xi2)

    @classmethod
    def from_snapshots(cls, snapshots, valid=None, extras=None):
        times = np.array([s.time for s in snapshots], dtype=float)
        xi2 = np.empty(len(snapshots))
        ok = np.ones(len(snapshots), dtype=bool)
        for i, snap in enumerate(snapshots):
            try:
                xi2[i], _ = squeezing_parameter(snap)
            except ZeroMeanSpinError:
                xi2[i] = np.nan
                ok[i] = False
        if valid is not None:
            ok &= np.asarray(valid, dtype=bool)
        return cls(times, list(snapshots), xi2, ok, extras or {})

    def optimal(self, tunneling=None):
        return optimal_point(self, tunneling=tunneling)


@dataclass(frozen=True)
class OptimalPoint:
    t_opt: float
    db_opt: float
    xi2_opt: float
    bracketed: bool
    t_opt_tunneling: float | None = None  # in units of 2*pi/J when J given


def optimal_point(trace: SqueezingTrace, tunneling=None):
    """Best squeezing of a trace, refined by local quadratic interpolation.

    The extremum is the minimum of xi^2 among valid points.  When it falls on
    the trace boundary the result is flagged ``bracketed=False`` and returned
    without refinement.
    """
    ok = trace.valid & np.isfinite(trace.xi2)
    if np.count_nonzero(ok) < 3:
        raise ValueError("need at least 3 valid points to locate an optimum")
    idx_valid = np.flatnonzero(ok)
    xi2 = trace.xi2[idx_valid]
    times = trace.times[idx_valid]
    k = int(np.argmin(xi2))
    bracketed = 0 < k < len(xi2) - 1
    t_opt, xi2_opt = times[k], xi2[k]
    if bracketed:
        # vertex of the parabola through the three bracketing points
        t0, t1, t2 = times[k - 1 : k + 2]
        f0, f1, f2 = xi2[k - 1 : k + 2]
        denom = (t1 - t0) * (f1 - f2) - (t1 - t2) * (f1 - f0)
        if denom != 0:
            t_v = t1 - 0.5 * ((t1 - t0) ** 2 * (f1 - f2) - (t1 - t2) ** 2 * (f1 - f0)) / denom
            if t0 <= t_v <= t2:
                # quadratic value at the vertex via Lagrange interpolation
                l0 = (t_v - t1) * (t_v - t2) / ((t0 - t1) * (t0 - t2))
                l1 = (t_v - t0) * (t_v - t2) / ((t1 - t0) * (t1 - t2))
                l2 = (t_v - t0) * (t_v - t1) / ((t2 - t0) * (t2 - t1))
                xi2_v = f0 * l0 + f1 * l1 + f2 * l2
                if xi2_v > 0:
                    t_opt, xi2_opt = t_v, xi2_v
    t_tun = t_opt / (2 * np.pi / tunneling) if tunneling else None
    return OptimalPoint(
        t_opt=float(t_opt),
        db_opt=float(squeezing_db(xi2_opt)),
        xi2_opt=float(xi2_opt),
        bracketed=bool(bracketed),
        t_opt_tunneling=t_tun,
    )


def snapshot_from_correlators(corr, n_spins, time=0.0):
    """Build a SpinSnapshot from normal-ordered collective moments.

    ``corr`` maps (m_plus, m_z, m_minus) exponent triples to expectation
    values of S_+^a S_z^b S_-^c; the six entries (0,1,0), (0,2,0), (1,0,0),
    (2,0,0), (1,1,0) and (1,0,1) are required.
    """
    sz = corr[(0, 1, 0)]
    szz = corr[(0, 2, 0)]
    sp = corr[(1, 0, 0)]
    spp = corr[(2, 0, 0)]
    spz = corr[(1, 1, 0)]
    spm = corr[(1, 0, 1)]

    sx = sp.real
    sy = sp.imag
    smm = np.conj(spp)
    smp = spm - 2 * sz
    smz = np.conj(spz) + np.conj(sp)

    sxz = 0.5 * (spz + smz)
    syz = -0.5j * (spz - smz)
    sxx = 0.25 * (spp + smm + spm + smp)
    syy = -0.25 * (spp + smm - spm - smp)
    sxy = -0.25j * (spp - smm - spm + smp)

    mean = np.array([sx, sy, sz]).real
    # symmetrize: products above are <S_a S_b>, the snapshot wants the
    # anticommutator half which is just the real part for Hermitian factors
    mat = np.array(
        [
            [sxx, sxy, sxz],
            [sxy, syy, syz],
            [sxz, syz, szz],
        ]
    ).real
    return SpinSnapshot(mean_spin=mean, second_moments=mat, n_spins=n_spins, time=time)
