"""Uniform 1D finite-volume grid with periodic or no-flux boundaries.

Faces are numbered so that face ``k`` is the left face of cell ``k``; there
are always ``n_cells + 1`` faces. On a periodic grid the last face is the
first one again and carries identical values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

BOUNDARIES = ("periodic", "no-flux")


@dataclass(frozen=True)
class Grid1D:
    x_min: float = 0.0
    x_max: float = 1.0
    n_cells: int = 256
    boundary: str = "periodic"

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValidationError(f"grid: x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ValidationError(f"grid: n_cells must be an integer >= 8, got {self.n_cells}")
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"grid: boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.n_cells * factor, self.boundary)

    def _extend(self, f):
        """Cell field with one ghost cell on each side (periodic copy or zero-gradient mirror)."""
        f = np.asarray(f, dtype=float)
        if self.periodic:
            return np.concatenate([f[..., -1:], f, f[..., :1]], axis=-1)
        return np.concatenate([f[..., :1], f, f[..., -1:]], axis=-1)

    def face_gradient(self, f) -> np.ndarray:
        """Compact difference across every face; zero on no-flux boundary faces."""
        ext = self._extend(f)
        return (ext[..., 1:] - ext[..., :-1]) / self.dx

    def face_average(self, f) -> np.ndarray:
        ext = self._extend(f)
        return 0.5 * (ext[..., 1:] + ext[..., :-1])

    def divergence(self, flux) -> np.ndarray:
        flux = np.asarray(flux, dtype=float)
        return (flux[..., 1:] - flux[..., :-1]) / self.dx

    def laplacian(self, f) -> np.ndarray:
        return self.divergence(self.face_gradient(f))

    def cell_average(self, face_field) -> np.ndarray:
        """Mean of the two faces of each cell."""
        face_field = np.asarray(face_field, dtype=float)
        return 0.5 * (face_field[..., 1:] + face_field[..., :-1])

    def integrate(self, f) -> np.ndarray:
        return np.sum(f, axis=-1) * self.dx

    def interior_faces(self) -> np.ndarray:
        """Boolean mask of faces that carry flux (all of them unless no-flux)."""
        mask = np.ones(self.n_cells + 1, dtype=bool)
        if not self.periodic:
            mask[0] = mask[-1] = False
        return mask
