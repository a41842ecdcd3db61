"""Uncorrelated single-spin decoherence channels and their rotating-frame form.

Light scattering acts on every atom identically through decay (jump s_-) and
dephasing (jump s_z) at rates around 0.1 per second.  Under an amplitude
modulated drive with index beta the jump operators acquire the zero-order
Bessel factor J0(beta): s_z is rescaled and s_- mixes with s_+.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class JumpOperator:
    """rate * D[c_plus s_+ + c_minus s_- + c_z s_z] acting on every spin."""

    rate: float
    c_plus: complex = 0.0
    c_minus: complex = 0.0
    c_z: complex = 0.0

    def matrix(self):
        sp = np.array([[0, 0], [1, 0]], dtype=complex)  # basis order (down, up)
        sm = sp.T.conj()
        sz = np.diag([-0.5, 0.5]).astype(complex)
        return self.c_plus * sp + self.c_minus * sm + self.c_z * sz


@dataclass(frozen=True)
class DecoherenceSpec:
    """Single-spin decoherence rates; frame_bessel is J0(beta), 1 when undriven."""

    rate_decay: float = 0.0  # jump s_-
    rate_dephase: float = 0.0  # jump s_z
    frame_bessel: float = 1.0

    def __post_init__(self):
        if self.rate_decay < 0 or self.rate_dephase < 0:
            raise ValueError("rates must be nonnegative")
        if not -1.0 <= self.frame_bessel <= 1.0:
            raise ValueError("frame_bessel must lie in [-1, 1]")

    @property
    def is_trivial(self):
        return self.rate_decay == 0 and self.rate_dephase == 0

    def jump_operators(self):
        """Jump operators including the rotating-frame mixing, if any."""
        j0 = self.frame_bessel
        jumps = []
        if self.rate_decay:
            if j0 == 1.0:
                jumps.append(JumpOperator(self.rate_decay, c_minus=1.0))
            else:
                # s_- maps to (1 - J0)/2 s_+ + (1 + J0)/2 s_-
                jumps.append(
                    JumpOperator(
                        self.rate_decay,
                        c_plus=0.5 * (1 - j0),
                        c_minus=0.5 * (1 + j0),
                    )
                )
        if self.rate_dephase:
            jumps.append(JumpOperator(self.rate_dephase, c_z=j0))
        return jumps


def light_scattering(rate=0.1):
    """Decay plus dephasing at the same rate (both channels, lab frame)."""
    return DecoherenceSpec(rate_decay=rate, rate_dephase=rate)
