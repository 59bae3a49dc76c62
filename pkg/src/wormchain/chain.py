"""The discrete freely rotating chain.

A chain of ``N`` bonds of common length ``a``; consecutive bonds meet at a
fixed angle ``theta`` and the torsion of each joint is uniform on
``[0, 2*pi)``.  The chain is pinned: bead 0 sits at the origin and the first
bond points along ``+z``, so the first bond consumes no randomness and the
``N - 1`` torsions belong to bonds ``2..N``.

Construction is by accumulated rotations: bond ``n`` is ``Z_n`` applied to
``a*e3``, where ``Z_n = Z_{n-1} H_n`` and ``H_n`` rotates by ``theta`` about
the axis ``(cos phi_n, sin phi_n, 0)``.  Right-multiplication means the
torsion axis lives in the body frame, i.e. in the plane perpendicular to the
current bond, which enforces the bond-length and bond-angle constraints
exactly (up to float roundoff).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .so3 import mgs_orthonormalize_batch

__all__ = [
    "FrcConfig",
    "DiscreteChain",
    "sample_frc",
    "interpolate_path",
    "frc_bond_correlation_oracle",
    "frc_msd_oracle",
    "write_chain_csv",
]

# Re-orthonormalize the accumulated rotation after this many bond steps.
# Drift of 3x3 float products grows like sqrt(steps) * eps, so this keeps
# the defect orders of magnitude below every stated tolerance.
REORTHONORMALIZE_EVERY = 1024

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class FrcConfig:
    """Parameters of a freely rotating chain.

    ``n_bonds`` is N, ``bond_length`` is a, ``bond_angle`` is theta in
    radians.  Use :meth:`raw` or :meth:`scaled` instead of the bare
    constructor; ``scaled`` derives ``a = L/N`` and ``theta = kappa/sqrt(N)``.
    """

    n_bonds: int
    bond_length: float
    bond_angle: float

    def __post_init__(self) -> None:
        if not isinstance(self.n_bonds, (int, np.integer)) or self.n_bonds < 1:
            raise ValueError(f"n_bonds must be a positive integer, got {self.n_bonds!r}")
        if not (math.isfinite(self.bond_length) and self.bond_length > 0.0):
            raise ValueError(f"bond_length must be positive, got {self.bond_length!r}")
        if not (0.0 <= self.bond_angle < math.pi):
            raise ValueError(f"bond_angle must lie in [0, pi), got {self.bond_angle!r}")

    @classmethod
    def raw(cls, n_bonds: int, bond_length: float, bond_angle: float,
            *, allow_zero_angle: bool = False) -> "FrcConfig":
        """Build from explicit bond length and bond angle.

        ``bond_angle == 0`` is a degenerate straight rod and is rejected
        unless ``allow_zero_angle`` is set (useful as a test oracle).
        """
        if bond_angle == 0.0 and not allow_zero_angle:
            raise ValueError("bond_angle = 0 is degenerate; pass allow_zero_angle=True for testing")
        return cls(int(n_bonds), float(bond_length), float(bond_angle))

    @classmethod
    def scaled(cls, n_bonds: int, contour_length: float, kappa: float) -> "FrcConfig":
        """Build from contour length L and stiffness kappa.

        Derives ``a = L/N`` and ``theta = kappa/sqrt(N)``; requires
        ``kappa > 0`` and ``theta < pi``.
        """
        n = int(n_bonds)
        if n < 1:
            raise ValueError(f"n_bonds must be a positive integer, got {n_bonds!r}")
        if not (math.isfinite(contour_length) and contour_length > 0.0):
            raise ValueError(f"contour_length must be positive, got {contour_length!r}")
        if not (math.isfinite(kappa) and kappa > 0.0):
            raise ValueError(f"kappa must be positive, got {kappa!r}")
        theta = kappa / math.sqrt(n)
        if theta >= math.pi:
            raise ValueError(
                f"kappa/sqrt(N) = {theta!r} must be < pi; increase n_bonds or decrease kappa")
        return cls(n, contour_length / n, theta)

    @property
    def contour_length(self) -> float:
        return self.n_bonds * self.bond_length

    @property
    def kappa(self) -> float:
        return self.bond_angle * math.sqrt(self.n_bonds)

    @property
    def ell_p(self) -> float:
        """Persistence length 2L/kappa^2 = 2a/theta^2 (inf for a rigid rod)."""
        if self.bond_angle == 0.0:
            return math.inf
        return 2.0 * self.bond_length / self.bond_angle**2


@dataclass(frozen=True, eq=False)
class DiscreteChain:
    """One realization: bead positions R_0..R_N and the torsions that built it."""

    beads: np.ndarray  # (N+1, 3)
    phis: np.ndarray   # (N-1,), torsions of bonds 2..N

    def __post_init__(self) -> None:
        beads = np.asarray(self.beads, dtype=np.float64)
        phis = np.asarray(self.phis, dtype=np.float64)
        if beads.ndim != 2 or beads.shape[1] != 3 or beads.shape[0] < 2:
            raise ValueError(f"beads must have shape (N+1, 3) with N >= 1, got {beads.shape}")
        if phis.shape != (beads.shape[0] - 2,):
            raise ValueError(
                f"phis must have shape (N-1,) = {(beads.shape[0] - 2,)}, got {phis.shape}")
        beads = beads.copy()
        phis = phis.copy()
        beads.setflags(write=False)
        phis.setflags(write=False)
        object.__setattr__(self, "beads", beads)
        object.__setattr__(self, "phis", phis)

    @property
    def n_bonds(self) -> int:
        return self.beads.shape[0] - 1

    @property
    def bond_length(self) -> float:
        # R_1 = (0, 0, a) exactly by construction
        return float(self.beads[1, 2])


def _cone_rotations(cos_t: float, sin_t: float, cphi: np.ndarray, sphi: np.ndarray) -> np.ndarray:
    """Stack of rotations by a fixed angle about axes (cos phi, sin phi, 0).

    Closed form of ``cos(t) I + sin(t) hat(u) + (1 - cos t) u u^T`` for unit
    axes in the x-y plane; cheaper than the general Rodrigues kernel because
    the angle is shared.
    """
    one_m = 1.0 - cos_t
    h = np.empty((cphi.shape[0], 3, 3))
    h[:, 0, 0] = cos_t + one_m * cphi * cphi
    h[:, 0, 1] = one_m * cphi * sphi
    h[:, 0, 2] = sin_t * sphi
    h[:, 1, 0] = h[:, 0, 1]
    h[:, 1, 1] = cos_t + one_m * sphi * sphi
    h[:, 1, 2] = -sin_t * cphi
    h[:, 2, 0] = -h[:, 0, 2]
    h[:, 2, 1] = -h[:, 1, 2]
    h[:, 2, 2] = cos_t
    return h


def _frc_scan(cfg: FrcConfig, phis: np.ndarray, *, keep_beads: bool = False,
              bond_marks: tuple[int, ...] = (), bead_marks: tuple[int, ...] = ()) -> dict:
    """Run the rotation-product construction for a batch of chains.

    ``phis`` has shape (C, N-1), one torsion row per chain.  Returns recorded
    unit bond directions at 1-based bond indices ``bond_marks``, bead
    positions at ``bead_marks``, and optionally the full bead arrays.
    """
    n = cfg.n_bonds
    a = cfg.bond_length
    paths, n_phis = phis.shape
    if n_phis != n - 1:
        raise ValueError(f"phis must have shape (C, {n - 1}), got {phis.shape}")
    for m in bond_marks:
        if not 1 <= m <= n:
            raise ValueError(f"bond mark {m} outside 1..{n}")
    for m in bead_marks:
        if not 0 <= m <= n:
            raise ValueError(f"bead mark {m} outside 0..{n}")

    cos_t = math.cos(cfg.bond_angle)
    sin_t = math.sin(cfg.bond_angle)
    z = np.broadcast_to(np.eye(3), (paths, 3, 3)).copy()
    r = np.zeros((paths, 3))
    bonds_out = {m: None for m in bond_marks}
    beads_out = {m: None for m in bead_marks}
    beads_all = np.zeros((paths, n + 1, 3)) if keep_beads else None

    if 0 in beads_out:
        beads_out[0] = np.zeros((paths, 3))

    # bond 1 is deterministic: a * e3
    direction = np.broadcast_to(_E3, (paths, 3))
    r = r + a * direction
    if keep_beads:
        beads_all[:, 1] = r
    if 1 in bonds_out:
        bonds_out[1] = direction.copy()
    if 1 in beads_out:
        beads_out[1] = r.copy()

    for bond in range(2, n + 1):
        phi = phis[:, bond - 2]
        h = _cone_rotations(cos_t, sin_t, np.cos(phi), np.sin(phi))
        z = z @ h
        if bond % REORTHONORMALIZE_EVERY == 0:
            z = mgs_orthonormalize_batch(z)
        direction = z[:, :, 2]
        r = r + a * direction
        if keep_beads:
            beads_all[:, bond] = r
        if bond in bonds_out:
            bonds_out[bond] = direction.copy()
        if bond in beads_out:
            beads_out[bond] = r.copy()

    return {"bonds": bonds_out, "beads": beads_out, "beads_all": beads_all}


def sample_frc(cfg: FrcConfig, rng: np.random.Generator) -> DiscreteChain:
    """Draw one chain: N-1 i.i.d. uniform torsions, then the exact construction."""
    phis = rng.uniform(0.0, 2.0 * math.pi, size=cfg.n_bonds - 1)
    rec = _frc_scan(cfg, phis[None, :], keep_beads=True)
    return DiscreteChain(beads=rec["beads_all"][0], phis=phis)


def interpolate_path(chain: DiscreteChain, s: float) -> np.ndarray:
    """Piecewise-linear position at arclength ``s`` along the chain.

    Grid points snap exactly: ``s = n*a`` returns ``beads[n]`` even when the
    float division ``s/a`` lands an ulp off an integer.
    """
    a = chain.bond_length
    n = chain.n_bonds
    if not (math.isfinite(s) and -1e-9 * a <= s <= n * a * (1.0 + 1e-12) + 1e-9 * a):
        raise ValueError(f"arclength s = {s!r} outside [0, {n * a!r}]")
    u = s / a
    nearest = round(u)
    if 0 <= nearest <= n and abs(u - nearest) <= 1e-9:
        return chain.beads[int(nearest)].copy()
    i = min(int(math.floor(u)), n - 1)
    w = u - i
    return (1.0 - w) * chain.beads[i] + w * chain.beads[i + 1]


def frc_bond_correlation_oracle(theta: float, k: int) -> float:
    """Exact bond-bond correlation E[Q_n . Q_{n+k}] / a^2 = cos(theta)^k.

    Averaging one torsion step over its uniform cone about the previous bond
    leaves cos(theta) times that bond; iterating the conditional expectation
    over k joints gives the power.
    """
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ValueError(f"lag k must be a nonnegative integer, got {k!r}")
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    return math.cos(theta) ** int(k)


def frc_msd_oracle(cfg: FrcConfig) -> float:
    """Exact mean squared end-to-end distance E|R_N|^2.

    Bilinearity over the bond correlations gives
    ``a^2 * sum_{i,j=1..N} cos(theta)^|i-j|``; evaluated as the O(N)
    lag-grouped sum ``N + 2 * sum_k (N-k) c^k``.
    """
    n = cfg.n_bonds
    c = math.cos(cfg.bond_angle)
    if n == 1:
        total = 1.0
    else:
        k = np.arange(1, n, dtype=np.float64)
        total = n + 2.0 * float(np.sum((n - k) * np.power(c, k)))
    return cfg.bond_length**2 * total


def write_chain_csv(chain: DiscreteChain, fileobj) -> None:
    """One row per bead: n, x, y, z, phi (phi is the torsion of bond n, n >= 2)."""
    import csv

    writer = csv.writer(fileobj, lineterminator="\n")
    writer.writerow(["n", "x", "y", "z", "phi"])
    for i, bead in enumerate(chain.beads):
        phi = repr(float(chain.phis[i - 2])) if i >= 2 else ""
        writer.writerow([i, repr(float(bead[0])), repr(float(bead[1])), repr(float(bead[2])), phi])
