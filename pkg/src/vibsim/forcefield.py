"""Quartic force fields in mass-weighted normal coordinates (atomic units)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np


class ForceFieldError(ValueError):
    pass


class Polynomial:
    """Sparse real polynomial ``sum c_I q_I`` keyed by sorted index tuples.

    ``()`` is the constant, ``(i,)`` a linear term, ``(i, i)`` is ``q_i**2`` and so on.
    """

    __slots__ = ("n_vars", "coeffs")

    def __init__(self, n_vars: int, coeffs: Mapping[tuple[int, ...], float] | None = None):
        self.n_vars = int(n_vars)
        acc: dict[tuple[int, ...], float] = {}
        for key, c in (coeffs or {}).items():
            key = tuple(sorted(key))
            if key and not (0 <= key[0] and key[-1] < self.n_vars):
                raise ForceFieldError(f"monomial {key} outside {self.n_vars} variables")
            acc[key] = acc.get(key, 0.0) + float(c)
        self.coeffs = acc

    @classmethod
    def variable(cls, n_vars: int, i: int) -> "Polynomial":
        return cls(n_vars, {(i,): 1.0})

    @classmethod
    def linear_form(cls, row, offset: float = 0.0) -> "Polynomial":
        coeffs = {(j,): float(a) for j, a in enumerate(row) if a != 0}
        if offset:
            coeffs[()] = float(offset)
        return cls(len(row), coeffs)

    def degree(self) -> int:
        return max((len(k) for k, c in self.coeffs.items() if c != 0), default=0)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0.0) + c
        return Polynomial(self.n_vars, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(-1.0)

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.n_vars, {k: c * factor for k, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        out: dict[tuple[int, ...], float] = {}
        for ka, ca in self.coeffs.items():
            if ca == 0:
                continue
            for kb, cb in other.coeffs.items():
                if cb == 0:
                    continue
                k = tuple(sorted(ka + kb))
                out[k] = out.get(k, 0.0) + ca * cb
        return Polynomial(self.n_vars, out)

    __rmul__ = scale

    def _check(self, other: "Polynomial") -> None:
        if self.n_vars != other.n_vars:
            raise ForceFieldError(f"variable count mismatch: {self.n_vars} vs {other.n_vars}")

    def truncate(self, max_degree: int) -> "Polynomial":
        return Polynomial(self.n_vars, {k: c for k, c in self.coeffs.items() if len(k) <= max_degree})

    def homogeneous(self, degree: int) -> "Polynomial":
        return Polynomial(self.n_vars, {k: c for k, c in self.coeffs.items() if len(k) == degree})

    def pruned(self, tol: float = 0.0) -> "Polynomial":
        return Polynomial(self.n_vars, {k: c for k, c in self.coeffs.items() if abs(c) > tol})

    def evaluate(self, q) -> float | np.ndarray:
        """Evaluate at points ``q`` of shape (n_vars,) or (n_vars, ...)."""
        q = np.asarray(q, dtype=float)
        total = np.zeros(q.shape[1:]) if q.ndim > 1 else 0.0
        for k, c in self.coeffs.items():
            term = c
            for i in k:
                term = term * q[i]
            total = total + term
        return total

    def max_abs_difference(self, other: "Polynomial") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) for k in keys), default=0.0)

    def __repr__(self):
        return f"Polynomial(n_vars={self.n_vars}, terms={len(self.coeffs)})"


def transform_polynomial(poly: Polynomial, A, b=None) -> Polynomial:
    """Substitute ``q = A q' + b`` and collect monomials in ``q'``.

    The result is a general polynomial of the same or lower degree (constant and
    linear terms included).
    """
    A = np.asarray(A, dtype=float)
    M = poly.n_vars
    if A.shape != (M, M):
        raise ForceFieldError(f"map matrix has shape {A.shape}, expected {(M, M)}")
    b = np.zeros(M) if b is None else np.asarray(b, dtype=float)
    if b.shape != (M,):
        raise ForceFieldError(f"displacement has shape {b.shape}, expected {(M,)}")
    forms = [Polynomial.linear_form(A[i], b[i]) for i in range(M)]
    one = Polynomial(M, {(): 1.0})
    out = Polynomial(M)
    for key, c in poly.coeffs.items():
        if c == 0:
            continue
        out = out + reduce(lambda acc, i: acc * forms[i], key, one).scale(c)
    return out


@dataclass(frozen=True)
class ForceField:
    """Harmonic, cubic and quartic coefficients ``k`` (0-based, sorted indices).

    ``V(q) = sum_i k2[i] q_i**2 + sum k3[ijk] q_i q_j q_k + sum k4[ijkl] q_i q_j q_k q_l``
    so that ``omega_i = sqrt(2 k2[i])``.
    """

    modes: int
    k2: tuple[float, ...]
    k3: Mapping[tuple[int, int, int], float] = field(default_factory=dict)
    k4: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.modes < 1:
            raise ForceFieldError("force field needs at least one mode")
        if len(self.k2) != self.modes:
            raise ForceFieldError(f"expected {self.modes} harmonic coefficients, got {len(self.k2)}")
        for i, k in enumerate(self.k2):
            if not k > 0:
                raise ForceFieldError(
                    f"harmonic coefficient must be positive: k[{i + 1},{i + 1}] = {k}"
                )
        for table, order in ((self.k3, 3), (self.k4, 4)):
            for key, val in table.items():
                if len(key) != order or list(key) != sorted(key):
                    raise ForceFieldError(f"order-{order} key {key} must be a sorted {order}-tuple")
                if not all(0 <= i < self.modes for i in key):
                    raise ForceFieldError(
                        f"index {tuple(i + 1 for i in key)} out of range for {self.modes} modes"
                    )
                if not math.isfinite(val):
                    raise ForceFieldError(f"coefficient {key} is not finite")
        object.__setattr__(self, "k2", tuple(float(k) for k in self.k2))

    @property
    def omega(self) -> np.ndarray:
        return frequencies(self)

    def potential(self, order: int = 4) -> Polynomial:
        """The potential as a polynomial, truncated at ``order`` (2, 3 or 4)."""
        coeffs = {(i, i): k for i, k in enumerate(self.k2)}
        if order >= 3:
            coeffs.update(self.k3)
        if order >= 4:
            coeffs.update(self.k4)
        return Polynomial(self.modes, coeffs)

    def truncated(self, order: int) -> "ForceField":
        return ForceField(
            self.modes,
            self.k2,
            dict(self.k3) if order >= 3 else {},
            dict(self.k4) if order >= 4 else {},
            self.label,
        )

    def scaled_anharmonic(self, lam: float) -> "ForceField":
        return ForceField(
            self.modes,
            self.k2,
            {k: lam * v for k, v in self.k3.items()},
            {k: lam * v for k, v in self.k4.items()},
            self.label,
        )

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "modes": self.modes,
            "k2": [[i + 1, i + 1, k] for i, k in enumerate(self.k2)],
            "k3": [[*(i + 1 for i in key), v] for key, v in self.k3.items()],
            "k4": [[*(i + 1 for i in key), v] for key, v in self.k4.items()],
            "units": "atomic",
        }

    @classmethod
    def harmonic(cls, omega, label: str = "") -> "ForceField":
        return cls(len(omega), tuple(0.5 * w * w for w in omega), {}, {}, label)


def frequencies(ff: ForceField) -> np.ndarray:
    """Harmonic frequencies ``sqrt(2 k_ii)`` in atomic units."""
    k2 = np.asarray(ff.k2, dtype=float)
    if np.any(k2 <= 0):
        raise ForceFieldError("harmonic coefficients must be positive")
    return np.sqrt(2.0 * k2)


def check_orthogonal(U, tol: float = 1e-10) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ForceFieldError(f"expected a square matrix, got shape {U.shape}")
    err = np.abs(U @ U.T - np.eye(U.shape[0])).max()
    if err > tol:
        raise ForceFieldError(f"matrix is not orthogonal (max |U U^T - I| = {err:.3g})")
    return U


@dataclass(frozen=True)
class LocalizationMap:
    """Weights for ``p_i = sum_j Wp_ij p^L_j`` and ``q_i = sum_j Wq_ij q^L_j``."""

    U: np.ndarray
    omega: np.ndarray
    Wp: np.ndarray
    Wq: np.ndarray


def localization_map(U, omega) -> LocalizationMap:
    U = check_orthogonal(U)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (U.shape[0],):
        raise ForceFieldError("frequency vector does not match the rotation size")
    if np.any(omega <= 0):
        raise ForceFieldError("frequencies must be positive")
    ratio = omega[:, None] / omega[None, :]  # omega_i / omega_j
    return LocalizationMap(U, omega, np.sqrt(ratio) * U, np.sqrt(1.0 / ratio) * U)


# ---------------------------------------------------------------------------
# JSON input


def _parse_rows(rows, order: int, modes: int, name: str) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for row in rows:
        if not isinstance(row, (list, tuple)) or len(row) != order + 1:
            raise ForceFieldError(f"{name} entry {row!r} must have {order} indices and a value")
        idx = row[:order]
        if not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
            raise ForceFieldError(f"{name} indices {idx!r} must be integers")
        if not all(1 <= i <= modes for i in idx):
            raise ForceFieldError(f"{name} index {tuple(idx)} out of range 1..{modes}")
        val = row[order]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ForceFieldError(f"{name} value for {tuple(idx)} is not a number")
        key = tuple(sorted(i - 1 for i in idx))
        if key in out:
            raise ForceFieldError(f"{name} index {tuple(idx)} given twice")
        out[key] = float(val)
    return out


def force_field_from_dict(data: Mapping) -> ForceField:
    if not isinstance(data, Mapping):
        raise ForceFieldError("force field JSON must be an object")
    units = data.get("units", "atomic")
    if units != "atomic":
        raise ForceFieldError(f"only atomic units are supported, got {units!r}")
    modes = data.get("modes")
    if not isinstance(modes, int) or isinstance(modes, bool) or modes < 1:
        raise ForceFieldError("'modes' must be a positive integer")
    k2_rows = _parse_rows(data.get("k2", []), 2, modes, "k2")
    k2 = [0.0] * modes
    for (i, j), v in k2_rows.items():
        if i != j:
            raise ForceFieldError(
                f"k2 index ({i + 1},{j + 1}) is off-diagonal; coefficients must be in normal coordinates"
            )
        k2[i] = v
    for i, v in enumerate(k2):
        if not v > 0:
            raise ForceFieldError(
                f"harmonic coefficient must be positive: k[{i + 1},{i + 1}] = {v}"
            )
    k3 = _parse_rows(data.get("k3", []), 3, modes, "k3")
    k4 = _parse_rows(data.get("k4", []), 4, modes, "k4")
    return ForceField(modes, tuple(k2), k3, k4, str(data.get("label", "")))


def parse_force_field(path) -> ForceField:
    """Read a force-field JSON file (1-based indices, atomic units)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ForceFieldError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise ForceFieldError(f"{path}: cannot read file ({exc})") from exc
    return force_field_from_dict(data)


BUNDLED = ("h2o", "so2")


def bundled_path(name: str) -> Path:
    name = name.lower().removesuffix(".json")
    if name not in BUNDLED:
        raise ForceFieldError(f"no bundled force field {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("vibsim") / "data" / f"{name}.json"))


def load_bundled(name: str) -> ForceField:
    return parse_force_field(bundled_path(name))
