"""Non-Hermitian spectra, disk counting functions, and the classical prediction.

The empirical side is the uniform probability measure on the eigenvalues of a
(perturbed) quantization matrix; the classical side is the push-forward of the
normalized Liouville measure by the principal symbol.  Counting regions are
families of concentric disks (matching the figure convention) or axis-aligned
rectangles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    PhaseSpace,
    SymbolSpec,
    evaluate_symbol_grid,
    liouville_quadrature,
    sample_points,
)


@dataclass(frozen=True)
class SpectrumResult:
    """Full eigenvalue multiset of a matrix, with provenance."""

    eigenvalues: np.ndarray
    source: str


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform probability measure on a spectrum's eigenvalues."""

    atoms: np.ndarray

    @property
    def weight(self) -> float:
        return 1.0 / len(self.atoms)

    @classmethod
    def from_spectrum(cls, spec: SpectrumResult) -> "EmpiricalMeasure":
        return cls(atoms=spec.eigenvalues)


@dataclass(frozen=True)
class DiskFamily:
    """Concentric disks |z - center| <= r for an ascending radii list."""

    center: complex
    radii: tuple

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.size and (np.any(r < 0.0) or np.any(np.diff(r) < 0.0)):
            raise ValueError("disk radii must be nonnegative and ascending")

    def __len__(self):
        return len(self.radii)

    def membership(self, values: np.ndarray) -> np.ndarray:
        d = np.abs(np.asarray(values) - self.center)
        return d[None, :] <= np.asarray(self.radii, dtype=float)[:, None]


@dataclass(frozen=True)
class RectangleFamily:
    """Axis-aligned rectangles (re_min, re_max, im_min, im_max)."""

    rectangles: tuple

    def __len__(self):
        return len(self.rectangles)

    def membership(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values)
        rows = []
        for (a, b, c, d) in self.rectangles:
            rows.append((v.real >= a) & (v.real <= b) & (v.imag >= c) & (v.imag <= d))
        return np.array(rows)


@dataclass(frozen=True)
class WeylPrediction:
    """Classical fraction mu{f0 in region} / vol per counting region."""

    regions: object
    fractions: np.ndarray
    stderr: np.ndarray | None = None


@dataclass(frozen=True)
class WeylComparison:
    sup_deviation: float
    table: tuple  # rows (region index, empirical, predicted, |difference|)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def eigenvalues(M: np.ndarray, source: str = "") -> SpectrumResult:
    """Full spectrum via a dense eigendecomposition.

    Hermitian inputs take the symmetric path.  LAPACK non-convergence is
    re-raised with the matrix id attached.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("eigenvalues requires a square matrix")
    if not np.all(np.isfinite(M.real)) or (np.iscomplexobj(M) and not np.all(np.isfinite(M.imag))):
        raise ValueError(f"matrix {source or '<unnamed>'} has non-finite entries")
    try:
        if np.allclose(M, np.asarray(M).conj().T, atol=1e-14, rtol=0.0):
            vals = np.linalg.eigvalsh(M).astype(complex)
        else:
            vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigendecomposition failed for matrix {source or '<unnamed>'}: {exc}") from exc
    return SpectrumResult(eigenvalues=vals, source=source)


def empirical_cdf_disks(spec: SpectrumResult, center: complex, radii) -> np.ndarray:
    """Fraction of eigenvalues with |lambda - center| <= r, per radius."""
    family = DiskFamily(complex(center), tuple(float(r) for r in radii))
    return family.membership(spec.eigenvalues).mean(axis=1)


def weyl_predict(f: SymbolSpec, space: PhaseSpace, regions,
                 method: str = "quadrature", resolution: int | None = None,
                 samples: int = 10**5, seed: int = 0) -> WeylPrediction:
    """Classical counting prediction for the principal symbol.

    ``method="quadrature"`` integrates region indicators on the Liouville
    grid; ``method="montecarlo"`` uses uniform samples and reports binomial
    standard errors.
    """
    if method == "quadrature":
        grid = liouville_quadrature(space, resolution or space.quadrature_default)
        vals = evaluate_symbol_grid(f.principal(), grid.points)
        if isinstance(regions, DiskFamily):
            # cumulative weights over sorted distances: exactly monotone in r
            dist = np.abs(vals - regions.center)
            order = np.argsort(dist)
            cum = np.concatenate([[0.0], np.cumsum(grid.weights[order])])
            idx = np.searchsorted(dist[order], np.asarray(regions.radii, dtype=float),
                                  side="right")
            fractions = cum[idx] / space.volume
        else:
            fractions = regions.membership(vals) @ grid.weights / space.volume
        return WeylPrediction(regions, fractions, None)
    if method == "montecarlo":
        pts = sample_points(space, samples, seed)
        vals = evaluate_symbol_grid(f.principal(), pts)
        inside = regions.membership(vals)
        fractions = inside.mean(axis=1)
        stderr = np.sqrt(fractions * (1.0 - fractions) / samples)
        return WeylPrediction(regions, fractions, stderr)
    raise ValueError(f"unknown prediction method {method!r}")


def weyl_compare(empirical, predicted: WeylPrediction) -> WeylComparison:
    """Sup deviation between empirical fractions and the prediction."""
    emp = np.asarray(empirical, dtype=float)
    pred = np.asarray(predicted.fractions, dtype=float)
    if emp.shape != pred.shape:
        raise ValueError(f"region families do not match: {emp.shape} vs {pred.shape}")
    diff = np.abs(emp - pred)
    table = tuple((i, float(emp[i]), float(pred[i]), float(diff[i])) for i in range(len(emp)))
    return WeylComparison(float(diff.max(initial=0.0)), table)


def match_eigenvalues(a, b) -> float:
    """Greedy nearest-neighbor multiset pairing; returns the largest pair gap."""
    a = np.asarray(a, dtype=complex).copy()
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        raise ValueError("spectra have different sizes")
    worst = 0.0
    for lam in a:
        dist = np.abs(np.asarray(b) - lam)
        j = int(np.argmin(dist))
        worst = max(worst, float(dist[j]))
        b.pop(j)
    return worst


def spectrum_csv_rows(spec: SpectrumResult):
    yield "re,im"
    for lam in spec.eigenvalues:
        yield f"{float(lam.real)!r},{float(lam.imag)!r}"
