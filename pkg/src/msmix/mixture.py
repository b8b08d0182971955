"""Species, angular collision kernels and the binary diffusion matrix.

Normalisation used throughout the package: the L1 norm of an angular kernel
is ``int_{-1}^{1} b(eta) d eta``. The full-sphere integral of ``b(k . sigma)``
over ``sigma`` is then ``2 pi`` times that norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import KernelEvaluationError, SingularKernelError, ValidationError

DEFAULT_QUADRATURE_ORDER = 32


@dataclass(frozen=True)
class Species:
    name: str
    mass: float

    def __post_init__(self):
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ValidationError(f"species {self.name!r}: mass must be > 0, got {self.mass}")


@dataclass(frozen=True)
class PhysicalConstants:
    k_boltzmann: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.k_boltzmann) or self.k_boltzmann <= 0:
            raise ValidationError(f"k_boltzmann must be > 0, got {self.k_boltzmann}")


@dataclass(frozen=True)
class AngularKernel:
    """Even, non-negative angular kernel ``b(cos theta)`` on [-1, 1].

    ``form`` is one of ``"constant"``, ``"poly"`` or ``"table"``. Polynomial
    coefficients are in increasing powers of ``cos theta`` and may not carry
    odd powers. Tables are linearly interpolated and symmetrised: a table with
    all nodes in [0, 1] is read as a function of ``|cos theta|``, a table that
    spans [-1, 1] is averaged with its mirror image.
    """

    form: str
    value: float = 0.0
    coefficients: tuple = ()
    nodes: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.form == "constant":
            if not np.isfinite(self.value) or self.value < 0:
                raise ValidationError(f"constant kernel must be >= 0, got {self.value}")
        elif self.form == "poly":
            coeffs = tuple(float(c) for c in self.coefficients)
            if not coeffs:
                raise ValidationError("polynomial kernel needs at least one coefficient")
            odd = [p for p, c in enumerate(coeffs) if p % 2 == 1 and c != 0.0]
            if odd:
                raise ValidationError(f"polynomial kernel must be even; nonzero odd powers {odd}")
            object.__setattr__(self, "coefficients", coeffs)
            probe = np.linspace(-1.0, 1.0, 2001)
            with np.errstate(over="ignore", invalid="ignore"):
                lowest = np.min(np.polynomial.polynomial.polyval(probe, coeffs))
            if lowest < -1e-14:
                raise ValidationError("polynomial kernel takes negative values on [-1, 1]")
        elif self.form == "table":
            nodes = np.asarray(self.nodes, dtype=float)
            vals = np.asarray(self.values, dtype=float)
            if nodes.ndim != 1 or nodes.shape != vals.shape or nodes.size < 2:
                raise ValidationError("tabulated kernel needs matching node/value lists of length >= 2")
            if np.any(np.diff(nodes) <= 0):
                raise ValidationError("tabulated kernel nodes must be strictly increasing")
            if np.any(vals < 0):
                raise ValidationError("tabulated kernel values must be >= 0")
            half = nodes[0] >= 0.0
            lo, hi = (0.0, 1.0) if half else (-1.0, 1.0)
            if nodes[0] > lo + 1e-12 or nodes[-1] < hi - 1e-12:
                raise ValidationError(f"tabulated kernel nodes must cover [{lo:g}, {hi:g}]")
            object.__setattr__(self, "nodes", tuple(nodes.tolist()))
            object.__setattr__(self, "values", tuple(vals.tolist()))
        else:
            raise ValidationError(f"unknown kernel form {self.form!r}")

    @classmethod
    def constant(cls, value: float) -> "AngularKernel":
        return cls("constant", value=float(value))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "AngularKernel":
        return cls("poly", coefficients=tuple(coefficients))

    @classmethod
    def tabulated(cls, nodes: Sequence[float], values: Sequence[float]) -> "AngularKernel":
        return cls("table", nodes=tuple(nodes), values=tuple(values))

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.form == "constant":
            return np.full_like(eta, self.value)
        if self.form == "poly":
            return np.polynomial.polynomial.polyval(eta, self.coefficients)
        nodes, vals = np.asarray(self.nodes), np.asarray(self.values)
        if nodes[0] >= 0.0:
            return np.interp(np.abs(eta), nodes, vals)
        return 0.5 * (np.interp(eta, nodes, vals) + np.interp(-eta, nodes, vals))

    def scaled(self, factor: float) -> "AngularKernel":
        if self.form == "constant":
            return AngularKernel.constant(self.value * factor)
        if self.form == "poly":
            return AngularKernel.polynomial([c * factor for c in self.coefficients])
        return AngularKernel.tabulated(self.nodes, [v * factor for v in self.values])

    def to_dict(self) -> dict:
        if self.form == "constant":
            return {"form": "constant", "value": self.value}
        if self.form == "poly":
            return {"form": "poly", "coefficients": list(self.coefficients)}
        return {"form": "table", "nodes": list(self.nodes), "values": list(self.values)}


def kernel_l1_norm(kernel: AngularKernel, quadrature_order: int = DEFAULT_QUADRATURE_ORDER) -> float:
    """Gauss-Legendre approximation of ``int_{-1}^{1} b(eta) d eta``.

    Exact to rounding for polynomial kernels of degree ``<= 2*order - 1``.
    """
    if quadrature_order < 2:
        raise ValidationError(f"quadrature_order must be >= 2, got {quadrature_order}")
    nodes, weights = np.polynomial.legendre.leggauss(int(quadrature_order))
    with np.errstate(over="ignore", invalid="ignore"):
        vals = kernel(nodes)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        at = nodes[np.argmax(bad)]
        raise KernelEvaluationError(f"kernel is not finite at node cos(theta)={at:.17g}")
    return float(weights @ vals)


@dataclass(frozen=True)
class Mixture:
    """Ordered species list with a symmetric kernel table.

    ``kernels`` maps index pairs ``(i, j)`` to kernels; the pair is stored
    with ``i <= j`` so that ``kernel(i, j) is kernel(j, i)``. Every unordered
    pair of distinct species needs a kernel; diagonal entries are optional.
    """

    species: tuple
    kernels: Mapping = field(default_factory=dict)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    quadrature_order: int = DEFAULT_QUADRATURE_ORDER

    def __post_init__(self):
        species = tuple(self.species)
        object.__setattr__(self, "species", species)
        n = len(species)
        if n < 2:
            raise ValidationError(f"a mixture needs at least 2 species, got {n}")
        names = [s.name for s in species]
        if len(set(names)) != n:
            raise ValidationError(f"species names must be unique: {names}")
        table = {}
        for (i, j), kern in dict(self.kernels).items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"kernel pair ({i}, {j}) out of range for {n} species")
            key = (min(i, j), max(i, j))
            if key in table and table[key] != kern:
                raise ValidationError(f"conflicting kernels given for pair {key}")
            table[key] = kern
        missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in table]
        if missing:
            pairs = ", ".join(f"{names[i]}-{names[j]}" for i, j in missing)
            raise ValidationError(f"missing kernels for species pairs: {pairs}")
        object.__setattr__(self, "kernels", table)
        norms = np.zeros((n, n))
        for (i, j), kern in table.items():
            norms[i, j] = norms[j, i] = kernel_l1_norm(kern, self.quadrature_order)
        norms.setflags(write=False)
        object.__setattr__(self, "_norms", norms)

    @classmethod
    def uniform(cls, masses: Iterable[float], kernel: AngularKernel, names=None,
                k_boltzmann: float = 1.0) -> "Mixture":
        """Mixture where every pair (including the diagonal) shares one kernel."""
        masses = list(masses)
        names = names or [f"s{i + 1}" for i in range(len(masses))]
        species = tuple(Species(nm, float(m)) for nm, m in zip(names, masses))
        n = len(species)
        kernels = {(i, j): kernel for i in range(n) for j in range(i, n)}
        return cls(species, kernels, PhysicalConstants(k_boltzmann))

    @property
    def n(self) -> int:
        return len(self.species)

    @property
    def names(self) -> list:
        return [s.name for s in self.species]

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.mass for s in self.species])

    @property
    def k(self) -> float:
        return self.constants.k_boltzmann

    def kernel(self, i: int, j: int) -> AngularKernel:
        return self.kernels[(min(i, j), max(i, j))]

    def kernel_norms(self) -> np.ndarray:
        """n x n table of ``||b_ij||_L1`` (zero where no diagonal kernel is given)."""
        return self._norms

    def sphere_factors(self) -> np.ndarray:
        """``2 pi ||b_ij||_L1``: the full-sphere integral of each kernel."""
        return 2.0 * np.pi * self._norms


@dataclass(frozen=True)
class DiffusionMatrix:
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij):
        return self.values[ij]


def build_diffusion_matrix(mixture: Mixture) -> DiffusionMatrix:
    """Binary coefficients ``D_ij = k (m_i + m_j) / (2 pi ||b_ij|| m_i m_j)``."""
    n = mixture.n
    m = mixture.masses
    norms = mixture.kernel_norms()
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if norms[i, j] <= 0.0:
                a, b = mixture.names[i], mixture.names[j]
                raise SingularKernelError(f"kernel for pair {a}-{b} has zero L1 norm")
            d = mixture.k / (2.0 * np.pi * norms[i, j]) * (m[i] + m[j]) / (m[i] * m[j])
            values[i, j] = values[j, i] = d
    return DiffusionMatrix(values)
