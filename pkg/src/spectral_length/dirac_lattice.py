"""Discrete Dirac operators on periodic lattices.

1D circle lattices (flat or conformally curved metric) use the doubled
spinor block form ``D = [[0, d], [d^H, 0]]`` with a forward difference
``d``; this keeps D self-adjoint and makes ``||[D, f]||`` a maximum over
edges. 2D flat tori offer a central-difference and a block scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .clifford import pauli_matrices
from .spectral_triple import SpectralTriple, new_triple

# Spinor-space operators for the block form: D = kron(d, RAISE) + kron(d^H, LOWER).
_RAISE = sp.csr_array(np.array([[0, 1], [0, 0]], dtype=complex))
_LOWER = sp.csr_array(np.array([[0, 0], [1, 0]], dtype=complex))


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeGeometry:
    """Lattice data used to assemble a Dirac operator.

    For ``circle1d`` ``sites`` is ``(N,)``; for ``torus2d`` it is ``(Nx, Ny)``.
    ``spin_connection`` holds omega_{mu ab} per site and is identically zero
    for every geometry built here (1D, or flat 2D).
    """

    kind: str
    sites: tuple
    lengths: tuple
    spacing: tuple
    metric_samples: np.ndarray
    vielbein_samples: np.ndarray
    spin_connection: np.ndarray
    metric: Callable | None = field(default=None, compare=False)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.sites))

    def coordinates(self) -> np.ndarray:
        if self.kind == "circle1d":
            return (np.arange(self.sites[0]) * self.spacing[0]).reshape(-1, 1)
        nx, ny = self.sites
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        return np.column_stack([ix.ravel() * self.spacing[0], iy.ravel() * self.spacing[1]])


def constant_metric(c: float) -> Callable:
    if not c > 0:
        raise LatticeError(f"metric constant must be positive, got {c}")
    return lambda x: np.full_like(np.asarray(x, dtype=float), float(c))


def conformal_sine_metric(amplitude: float, k: int, length: float) -> Callable:
    """g(x) = (1 + A sin(2 pi k x / L))^2, positive for |A| < 1."""
    if not abs(amplitude) < 1:
        raise LatticeError(f"conformal-sine amplitude must satisfy |A| < 1, got {amplitude}")
    if not length > 0:
        raise LatticeError(f"length must be positive, got {length}")
    w = 2 * math.pi * k / length
    return lambda x: (1 + amplitude * np.sin(w * np.asarray(x, dtype=float))) ** 2


def vielbein_from_metric_1d(g) -> np.ndarray:
    """Per-site 1-bein e = 1/sqrt(g), so that g^{11} = e^2 = 1/g."""
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise LatticeError("metric samples must be finite and strictly positive")
    return 1.0 / np.sqrt(g)


def _shift(n: int) -> sp.csr_array:
    """(S psi)(i) = psi(i + 1 mod n)."""
    rows = np.arange(n)
    return sp.csr_array((np.ones(n), (rows, (rows + 1) % n)), shape=(n, n))


def circle_geometry(n: int, length: float, g=1.0) -> LatticeGeometry:
    if n < 2:
        raise LatticeError(f"circle lattice needs at least 2 sites, got {n}")
    if not length > 0:
        raise LatticeError(f"circumference must be positive, got {length}")
    a = length / n
    x = np.arange(n) * a
    metric = None
    if callable(g):
        metric = g
        samples = np.asarray(g(x), dtype=float)
    elif np.ndim(g) == 0:
        metric = constant_metric(float(g))
        samples = np.full(n, float(g))
    else:
        samples = np.asarray(g, dtype=float)
        if samples.shape != (n,):
            raise LatticeError(f"expected {n} metric samples, got shape {samples.shape}")
    e = vielbein_from_metric_1d(samples)
    return LatticeGeometry(
        kind="circle1d", sites=(n,), lengths=(float(length),), spacing=(a,),
        metric_samples=samples, vielbein_samples=e.reshape(n, 1, 1),
        spin_connection=np.zeros((n, 1, 1, 1)), metric=metric,
    )


def circle_triple(n: int, length: float, g=1.0) -> SpectralTriple:
    """Dirac operator on an N-site circle of circumference L with metric g.

    ``g`` is a positive constant, a callable g(x), or N per-site samples.
    The forward difference on edge (x, x+a) carries the geometric mean
    ebar = sqrt(e(x) e(x+a)) of the 1-bein, so the edge length seen by the
    distance is a / ebar. Site weights are the Riemannian measure sqrt(g) a.
    """
    geo = circle_geometry(n, length, g)
    a = geo.spacing[0]
    e = geo.vielbein_samples.reshape(n)
    ebar = np.sqrt(e * np.roll(e, -1))
    coef = ebar / a
    d = sp.diags_array(coef) @ (_shift(n) - sp.eye_array(n))
    dirac = sp.kron(d, _RAISE) + sp.kron(d.conj().T, _LOWER)
    edges = [(i, (i + 1) % n, a / ebar[i]) for i in range(n)]
    weights = np.sqrt(geo.metric_samples) * a
    return new_triple(geo.coordinates(), 2, dirac, weights, edges=edges, geometry=geo)


def torus_geometry(nx: int, ny: int, lx: float, ly: float) -> LatticeGeometry:
    if nx < 2 or ny < 2:
        raise LatticeError(f"torus lattice needs at least 2x2 sites, got {nx}x{ny}")
    if not (lx > 0 and ly > 0):
        raise LatticeError("side lengths must be positive")
    n = nx * ny
    return LatticeGeometry(
        kind="torus2d", sites=(nx, ny), lengths=(float(lx), float(ly)),
        spacing=(lx / nx, ly / ny),
        metric_samples=np.tile(np.eye(2), (n, 1, 1)),
        vielbein_samples=np.tile(np.eye(2), (n, 1, 1)),
        spin_connection=np.zeros((n, 2, 2, 2)),
    )


def torus_triple(nx: int, ny: int, lx: float, ly: float, scheme: str = "block") -> SpectralTriple:
    """Flat 2D Dirac operator on an Nx x Ny periodic lattice.

    Sites are numbered ``i * Ny + j`` with ``i`` along x.

    central: D = kron(delta_x, sx) + kron(delta_y, sy) with the Hermitian
    central difference delta = -i (S - S^H) / (2a).
    block: D = [[0, d_x - i d_y], [(d_x - i d_y)^H, 0]] with forward
    differences d = (S - I) / a.
    """
    geo = torus_geometry(nx, ny, lx, ly)
    ax, ay = geo.spacing
    sx_site = sp.kron(_shift(nx), sp.eye_array(ny))
    sy_site = sp.kron(sp.eye_array(nx), _shift(ny))
    ident = sp.eye_array(nx * ny)
    if scheme == "central":
        sig_x, sig_y, _ = pauli_matrices()
        dx = (sx_site - sx_site.T) * (-0.5j / ax)
        dy = (sy_site - sy_site.T) * (-0.5j / ay)
        dirac = sp.kron(dx, sp.csr_array(sig_x)) + sp.kron(dy, sp.csr_array(sig_y))
    elif scheme == "block":
        dx = (sx_site - ident) / ax
        dy = (sy_site - ident) / ay
        a_op = dx - 1j * dy
        dirac = sp.kron(a_op, _RAISE) + sp.kron(a_op.conj().T, _LOWER)
    else:
        raise LatticeError(f"unknown torus scheme {scheme!r} (expected 'central' or 'block')")
    n = nx * ny
    return new_triple(geo.coordinates(), 2, dirac, np.full(n, ax * ay), geometry=geo)


def two_point_triple(m: float) -> SpectralTriple:
    """Two points, s = 1, D = [[0, m], [m, 0]]; the distance is 1/m."""
    if not m > 0:
        raise LatticeError(f"m must be positive, got {m}")
    dirac = np.array([[0.0, m], [m, 0.0]])
    return new_triple([[0.0], [1.0]], 1, dirac, [1.0, 1.0], edges=[(0, 1, 1.0 / m)])


def dirac_laplacian(t: SpectralTriple) -> sp.csr_array:
    """D^2."""
    return (t.dirac @ t.dirac).tocsr()
