"""Mixture function xi(x) = sum_p beta_p^2 x^p and its derived quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

# overlaps computed from normalized dot products may exceed 1 by round-off
CLAMP_SLACK = 1e-12


def _check_x(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("x must be finite")
    if np.any(np.abs(arr) > 1.0 + CLAMP_SLACK):
        raise DomainError(f"|x| must be <= 1, got max |x| = {np.max(np.abs(arr))!r}")
    return np.clip(arr, -1.0, 1.0)


def _neumaier(terms: list) -> np.ndarray:
    """Compensated sum of a short list of equally shaped arrays."""
    if not terms:
        return None
    total = np.array(terms[0], dtype=float, copy=True)
    comp = np.zeros_like(total)
    for t in terms[1:]:
        s = total + t
        big = np.abs(total) >= np.abs(t)
        comp += np.where(big, (total - s) + t, (t - s) + total)
        total = s
    return total + comp


@dataclass(frozen=True)
class Mixture:
    """Finite mixture of p-spin interactions.

    ``terms`` holds ``(p, beta_p)`` pairs with distinct ``p >= 1`` sorted
    ascending and ``beta_p >= 0``. Inverse temperature is absorbed into the
    coefficients.
    """

    terms: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        cleaned = []
        last_p = 0
        for item in self.terms:
            p, beta = item
            if isinstance(p, bool) or int(p) != p:
                raise DomainError(f"p must be an integer, got {p!r}")
            p = int(p)
            beta = float(beta)
            if p < 1:
                raise DomainError(f"p must be >= 1, got {p}")
            if p <= last_p:
                raise DomainError("p values must be distinct and strictly increasing")
            if not math.isfinite(beta) or beta < 0:
                raise DomainError(f"beta_{p} must be finite and nonnegative, got {beta!r}")
            if not math.isfinite(2.0**p * beta * beta):
                raise DomainError(f"2^p beta_p^2 is not finite for p={p}")
            cleaned.append((p, beta))
            last_p = p
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def from_betas(cls, betas: dict[int, float]) -> "Mixture":
        return cls(tuple(sorted((int(p), float(b)) for p, b in betas.items())))

    @classmethod
    def from_config(cls, items: Iterable[dict]) -> "Mixture":
        """Build from the config representation ``[{"p": int, "beta": float}, ...]``."""
        pairs = sorted(((item["p"], item["beta"]) for item in items), key=lambda t: t[0])
        return cls(tuple(pairs))

    def to_config(self) -> list[dict]:
        return [{"p": p, "beta": beta} for p, beta in self.terms]

    @property
    def is_zero(self) -> bool:
        return all(beta == 0.0 for _, beta in self.terms)

    @property
    def max_p(self) -> int:
        return self.terms[-1][0] if self.terms else 0

    def beta(self, p: int) -> float:
        for q, b in self.terms:
            if q == p:
                return b
        return 0.0

    def _power_sum(self, x, coef) -> np.ndarray:
        """sum_p coef(p, beta_p) * x^(p - shift) with powers built by repeated multiplication."""
        x = _check_x(x)
        pieces = []
        power = np.ones_like(x)
        current = 0
        for p, beta in self.terms:
            c, exponent = coef(p, beta)
            if exponent < 0:
                continue
            while current < exponent:
                power = power * x
                current += 1
            pieces.append(c * power)
        out = _neumaier(pieces)
        if out is None:
            out = np.zeros_like(x)
        return out

    def xi(self, x, order: int = 0):
        """xi and its first two derivatives at ``x`` in [-1, 1].

        Scalars in, float out; arrays in, arrays out.
        """
        if order == 0:
            coef = lambda p, b: (b * b, p)
        elif order == 1:
            coef = lambda p, b: (b * b * p, p - 1)
        elif order == 2:
            coef = lambda p, b: (b * b * p * (p - 1), p - 2)
        else:
            raise DomainError(f"order must be 0, 1 or 2, got {order!r}")
        out = self._power_sum(x, coef)
        return float(out) if np.ndim(out) == 0 else out

    def theta(self, x):
        """x xi'(x) - xi(x) = sum_p (p - 1) beta_p^2 x^p."""
        out = self._power_sum(x, lambda p, b: ((p - 1) * b * b, p))
        return float(out) if np.ndim(out) == 0 else out


def xi_derivative(m: Mixture, x, order: int = 0):
    return m.xi(x, order)


def theta(m: Mixture, x):
    return m.theta(x)


def pure(p: int, beta: float) -> Mixture:
    return Mixture(((p, beta),))


def mixture_from_pairs(pairs: Sequence[tuple[int, float]]) -> Mixture:
    return Mixture(tuple(sorted(pairs)))
