"""Exact math for the rotation group SO(3) and its algebra so(3).

Conventions used throughout the package:

* ``hat((x, y, z))`` is the skew-symmetric matrix ``[[0, -z, y], [z, 0, -x],
  [-y, x, 0]]``, i.e. ``hat(v) @ w == cross(v, w)``.
* ``exp_rodrigues(hat(theta * u))`` for a unit axis ``u`` is the right-handed
  rotation by angle ``theta`` about ``u``.

Rotations are stored as full 3x3 matrices so that frame columns can be read
off directly.  All values are immutable; operations are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SkewSym3",
    "Rotation3",
    "UnitVec3",
    "hat",
    "exp_rodrigues",
    "compose",
    "apply",
    "reorthonormalize",
    "orthonormal_defect",
    "rodrigues_batch",
    "mgs_orthonormalize_batch",
]

# Below this angle the closed-form coefficients sin(t)/t and (1-cos t)/t^2
# lose relative precision; switch to their 4th-order series.
_SMALL_ANGLE = 1e-4

_ROTATION_TOL = 1e-8
_UNIT_TOL = 1e-10


def _vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SkewSym3:
    """Element of so(3), stored as the coefficient vector of the hat map."""

    omega: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _freeze(_vec3(self.omega, "omega").copy()))

    def as_matrix(self) -> np.ndarray:
        x, y, z = self.omega
        return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])

    def apply(self, w) -> np.ndarray:
        """Matrix action on a vector: hat(omega) @ w == omega x w."""
        return np.cross(self.omega, _vec3(w, "w"))


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Element of SO(3): a 3x3 orthonormal matrix with determinant +1."""

    m: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.m, dtype=np.float64)
        if arr.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("rotation matrix must be finite")
        defect = orthonormal_defect(arr)
        if defect > _ROTATION_TOL:
            raise ValueError(f"matrix is not orthonormal: ||m^T m - I||_F = {defect:.3e}")
        det = float(np.linalg.det(arr))
        if abs(det - 1.0) > _ROTATION_TOL:
            raise ValueError(f"matrix is not a proper rotation: det = {det!r}")
        object.__setattr__(self, "m", _freeze(arr.copy()))

    @classmethod
    def identity(cls) -> "Rotation3":
        return cls(np.eye(3))

    def transposed(self) -> "Rotation3":
        return Rotation3(self.m.T)


@dataclass(frozen=True, eq=False)
class UnitVec3:
    """A direction in R^3 with unit Euclidean norm."""

    v: np.ndarray

    def __post_init__(self) -> None:
        arr = _vec3(self.v, "v")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > _UNIT_TOL:
            raise ValueError(f"vector is not unit length: |v| = {norm!r}")
        object.__setattr__(self, "v", _freeze(arr.copy()))


def hat(v) -> SkewSym3:
    """Coordinate chart for so(3): wrap a 3-vector as a skew-symmetric element."""
    return SkewSym3(_vec3(v, "v"))


def orthonormal_defect(m) -> float:
    """Frobenius norm of m^T m - I; zero for an exactly orthonormal matrix."""
    m = np.asarray(m, dtype=np.float64)
    g = m.T @ m if m.ndim == 2 else np.swapaxes(m, -1, -2) @ m
    return float(np.linalg.norm(g - np.eye(3)))


def rodrigues_batch(omega: np.ndarray) -> np.ndarray:
    """Rodrigues exponential of a stack of rotation vectors.

    Parameters
    ----------
    omega : (..., 3) ndarray
        Rotation vectors (angle times unit axis).

    Returns
    -------
    (..., 3, 3) ndarray
        ``exp(hat(omega))`` for every vector in the stack.  Uses the closed
        form ``R = (1 - B t^2) I + A hat(w) + B w w^T`` with
        ``A = sin(t)/t`` and ``B = (1 - cos t)/t^2``, switching to series
        below ``1e-4`` radians.
    """
    omega = np.asarray(omega, dtype=np.float64)
    t2 = np.sum(omega * omega, axis=-1)
    t = np.sqrt(t2)
    small = t < _SMALL_ANGLE
    safe = np.where(small, 1.0, t)
    a = np.where(small, 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0), np.sin(t) / safe)
    b = np.where(small, 0.5 - t2 / 24.0 * (1.0 - t2 / 30.0), (1.0 - np.cos(t)) / (safe * safe))
    c = 1.0 - b * t2  # equals cos(t), consistently with the series branch

    x, y, z = omega[..., 0], omega[..., 1], omega[..., 2]
    zero = np.zeros_like(x)
    k = np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
    outer = omega[..., :, None] * omega[..., None, :]
    return (
        c[..., None, None] * np.eye(3)
        + a[..., None, None] * k
        + b[..., None, None] * outer
    )


def exp_rodrigues(s: SkewSym3) -> Rotation3:
    """Exponential map so(3) -> SO(3) in Rodrigues closed form."""
    return Rotation3(rodrigues_batch(s.omega))


def compose(a: Rotation3, b: Rotation3) -> Rotation3:
    """Matrix product a b (apply b first, then a)."""
    return Rotation3(a.m @ b.m)


def apply(r: Rotation3, v) -> np.ndarray:
    """Rotate a vector: returns r.m @ v.  Preserves the Euclidean norm."""
    return r.m @ _vec3(v, "v")


def mgs_orthonormalize_batch(m: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the columns of a stack of near-rotations.

    Assumes inputs are small perturbations of rotation matrices (as produced
    by long products of exact rotations); does not detect rank deficiency.
    """
    m = np.asarray(m, dtype=np.float64)
    c0 = m[..., :, 0]
    c1 = m[..., :, 1]
    c2 = m[..., :, 2]
    u0 = c0 / np.linalg.norm(c0, axis=-1, keepdims=True)
    c1 = c1 - np.sum(u0 * c1, axis=-1, keepdims=True) * u0
    u1 = c1 / np.linalg.norm(c1, axis=-1, keepdims=True)
    c2 = c2 - np.sum(u0 * c2, axis=-1, keepdims=True) * u0
    c2 = c2 - np.sum(u1 * c2, axis=-1, keepdims=True) * u1
    u2 = c2 / np.linalg.norm(c2, axis=-1, keepdims=True)
    return np.stack([u0, u1, u2], axis=-1)


def reorthonormalize(r) -> Rotation3:
    """Project a drifted near-rotation back onto SO(3).

    Accepts a ``Rotation3`` or a raw 3x3 array (long products of float
    rotations drift off the group, so the raw-array form is the common one).
    Modified Gram-Schmidt on the columns; the result satisfies
    ``||m^T m - I||_F <= 1e-14`` and ``det = +1``.

    Raises
    ------
    ArithmeticError
        If the input columns are numerically rank-deficient.
    """
    m = r.m if isinstance(r, Rotation3) else np.asarray(r, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("input must be a finite 3x3 matrix")
    cols = []
    work = m.copy()
    for j in range(3):
        v = work[:, j]
        for u in cols:
            v = v - np.dot(u, v) * u
        norm = float(np.linalg.norm(v))
        if norm < 1e-12:
            raise ArithmeticError("rank-deficient matrix cannot be orthonormalized")
        cols.append(v / norm)
    out = np.stack(cols, axis=1)
    if np.linalg.det(out) < 0.0:
        raise ArithmeticError("input is closer to a reflection than a rotation")
    return Rotation3(out)
