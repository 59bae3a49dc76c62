"""Closed-form reference statistics for the wormlike chain.

These are the oracles every Monte Carlo estimate is judged against.  The
tangent-correlation convention is ``E[Q_s . Q_t] = exp(-2|t-s|/ell_p)``;
everything else here is derived from it (see README for the convention
note).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

__all__ = [
    "ClosedForm",
    "kp_tangent_correlation",
    "kp_mean_sq_position",
    "hard_rod_fluctuation_cov",
    "random_coil_cov",
]

# Below t/ell_p = 1e-4 the closed form of the mean squared position loses
# ~4 digits to cancellation; switch to its series in t/ell_p.
_MSD_SERIES_CUTOFF = 1e-4


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be positive, got {value!r}")


def _check_nonnegative(name: str, value: float) -> None:
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"{name} must be nonnegative, got {value!r}")


def kp_tangent_correlation(ell_p: float, s: float, t: float) -> float:
    """Tangent-tangent correlation E[Q_s . Q_t] = exp(-2|t-s|/ell_p)."""
    _check_positive("ell_p", ell_p)
    _check_nonnegative("s", s)
    _check_nonnegative("t", t)
    return math.exp(-2.0 * abs(t - s) / ell_p)


def kp_mean_sq_position(ell_p: float, t: float) -> float:
    """Mean squared position E|R_t|^2 = ell_p*t - (ell_p^2/2)(1 - exp(-2t/ell_p)).

    Equals twice the double integral of the tangent correlation over
    ``0 <= u <= v <= t``.  For ``t/ell_p < 1e-4`` the cancellation-free
    series ``t^2 - (2/3)t^3/ell_p + (1/3)t^4/ell_p^2 - (2/15)t^5/ell_p^3``
    is used instead.
    """
    _check_positive("ell_p", ell_p)
    _check_nonnegative("t", t)
    x = t / ell_p
    if x < _MSD_SERIES_CUTOFF:
        return t * t * (1.0 - x * (2.0 / 3.0 - x * (1.0 / 3.0 - x * (2.0 / 15.0))))
    return ell_p * t - 0.5 * ell_p * ell_p * (1.0 - math.exp(-2.0 * x))


def hard_rod_fluctuation_cov(s: float, t: float) -> float:
    """Covariance of an integrated standard Brownian motion at arclengths s, t.

    ``Cov(W_s, W_t) = int_0^s int_0^t min(u, v) du dv = s^2 (3t - s) / 6``
    for ``s <= t`` (symmetric in its arguments).  This is the per-transverse-
    component covariance of the Gaussian process describing small bending
    fluctuations about the straight rod; the longitudinal component vanishes
    and cross-component covariances are zero.
    """
    _check_nonnegative("s", s)
    _check_nonnegative("t", t)
    lo, hi = (s, t) if s <= t else (t, s)
    return lo * lo * (3.0 * hi - lo) / 6.0


def random_coil_cov(s: float, t: float) -> float:
    """Per-component covariance min(s, t) of the random-coil limit.

    As ``ell_p -> 0`` the rescaled curve ``sqrt(3/ell_p) R`` behaves as a
    standard 3-d Brownian motion: each component has covariance
    ``min(s, t)`` and cross-component covariances vanish.
    """
    _check_nonnegative("s", s)
    _check_nonnegative("t", t)
    return min(s, t)


_FORMS = {
    "kp_tangent_correlation": (kp_tangent_correlation, ("ell_p",), ("s", "t")),
    "kp_mean_sq_position": (kp_mean_sq_position, ("ell_p",), ("t",)),
    "hard_rod_fluctuation_cov": (hard_rod_fluctuation_cov, (), ("s", "t")),
    "random_coil_cov": (random_coil_cov, (), ("s", "t")),
}


@dataclass(frozen=True)
class ClosedForm:
    """A named closed-form curve with bound parameters.

    ``ClosedForm("kp_tangent_correlation", {"ell_p": 1.0})(s=0.0, t=0.5)``
    evaluates the correlation; handy for emitting oracle series.
    """

    name: str
    params: Mapping[str, float]

    def __post_init__(self) -> None:
        if self.name not in _FORMS:
            raise ValueError(f"unknown closed form {self.name!r}; known: {sorted(_FORMS)}")
        fn, required, _ = _FORMS[self.name]
        missing = [p for p in required if p not in self.params]
        if missing:
            raise ValueError(f"{self.name} requires parameters {missing}")
        for key, value in self.params.items():
            if key in required:
                _check_positive(key, value)
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def __call__(self, **arguments: float) -> float:
        fn, required, varying = _FORMS[self.name]
        args = [self.params[p] for p in required]
        args += [arguments[v] for v in varying]
        return fn(*args)
