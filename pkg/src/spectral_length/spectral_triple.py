"""Finite odd K-cycles: point set, spinor factor, measure and Dirac matrix.

Hilbert-space vectors are laid out site-major: index ``site * spinor_dim + s``.
Functions on the point set are real and act as ``f(x) * I_s`` on each
site's spinor block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

SCHEMA_VERSION = 1
SELF_ADJOINT_TOL = 1e-12
DENSE_SVD_MAX_DIM = 64


class SpectralTripleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Power iteration ran out of iterations; ``best`` holds the last estimate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SpectralTriple:
    """Finite spectral triple (A, pi, H, D) over ``N`` points.

    ``edges``, when present, lists ``(i, j, length)`` such that
    ``||[D, f]|| = max |f(j) - f(i)| / length`` over the edges. Its presence
    is what makes the triple edge-local.
    """

    points: np.ndarray
    spinor_dim: int
    dirac: sp.csr_array
    weights: np.ndarray
    labels: tuple = ()
    edges: tuple | None = None
    geometry: object = field(default=None, compare=False, repr=False)

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def hilbert_dim(self) -> int:
        return self.n_points * self.spinor_dim

    @property
    def edge_local(self) -> bool:
        return self.edges is not None

    def dense_dirac(self) -> np.ndarray:
        return self.dirac.toarray()

    def site_of(self, index) -> np.ndarray:
        """Site owning each Hilbert-space index."""
        return np.asarray(index) // self.spinor_dim

    def scaled(self, lam: float) -> "SpectralTriple":
        """The triple with D replaced by lam * D (lam > 0)."""
        if not lam > 0:
            raise SpectralTripleError(f"scale factor must be positive, got {lam}")
        edges = None
        if self.edges is not None:
            edges = tuple((i, j, length / lam) for i, j, length in self.edges)
        return SpectralTriple(
            self.points, self.spinor_dim, (self.dirac * lam).tocsr(), self.weights,
            self.labels, edges, self.geometry,
        )


def _hermitian_residual(d: sp.csr_array) -> float:
    scale = float(abs(d).sum(axis=1).max()) if d.nnz else 0.0
    if scale == 0.0:
        return 0.0
    diff = d - d.conj().T
    return float(abs(diff).max()) / scale if diff.nnz else 0.0


def new_triple(points, spinor_dim: int, dirac, weights, *, labels=None, edges=None,
               symmetrize: bool = False, geometry=None) -> SpectralTriple:
    """Validate and assemble a :class:`SpectralTriple`.

    ``points`` is an (N,) or (N, d) array of coordinates. A Dirac matrix that
    is not self-adjoint within 1e-12 (relative to its infinity norm) is
    rejected unless ``symmetrize`` is set, in which case (D + D^H)/2 is used.
    """
    weights = np.array(weights, dtype=float).reshape(-1)
    n = len(weights)
    points = np.array(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] != n:
        raise SpectralTripleError(f"{points.shape[0]} points but {n} weights")
    if spinor_dim < 1:
        raise SpectralTripleError(f"spinor dimension must be >= 1, got {spinor_dim}")
    if n < 1:
        raise SpectralTripleError("at least one point is required")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise SpectralTripleError("weights must be finite and strictly positive")

    d = sp.csr_array(dirac, dtype=complex)
    size = n * spinor_dim
    if d.shape != (size, size):
        raise SpectralTripleError(f"Dirac matrix must be {size}x{size}, got {d.shape}")
    if d.nnz and not np.all(np.isfinite(d.data)):
        raise SpectralTripleError("Dirac matrix has non-finite entries")
    d.eliminate_zeros()
    d.sort_indices()
    res = _hermitian_residual(d)
    if res > SELF_ADJOINT_TOL:
        if not symmetrize:
            raise SpectralTripleError(f"Dirac matrix is not self-adjoint (residual {res:.3e})")
        d = ((d + d.conj().T) * 0.5).tocsr()
        d.sort_indices()

    if labels is None:
        labels = tuple(str(i) for i in range(n))
    labels = tuple(str(s) for s in labels)
    if len(labels) != n:
        raise SpectralTripleError(f"{len(labels)} labels for {n} points")

    if edges is not None:
        checked = []
        for i, j, length in edges:
            i, j, length = int(i), int(j), float(length)
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise SpectralTripleError(f"bad edge ({i}, {j})")
            if not length > 0:
                raise SpectralTripleError(f"edge ({i}, {j}) has non-positive length {length}")
            checked.append((i, j, length))
        edges = tuple(checked)

    points.setflags(write=False)
    weights.setflags(write=False)
    return SpectralTriple(points, int(spinor_dim), d, weights, labels, edges, geometry)


def _site_values(t: SpectralTriple, f) -> np.ndarray:
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.shape[0] != t.n_points:
        raise SpectralTripleError(f"function has {f.shape[0]} values, triple has {t.n_points} points")
    return f


def represent(t: SpectralTriple, f) -> sp.csr_array:
    """pi(f): block-diagonal multiplication by f(x) I_s."""
    f = _site_values(t, f)
    return sp.diags_array(np.repeat(f, t.spinor_dim).astype(complex), format="csr")


def commutator(t: SpectralTriple, f) -> sp.csr_array:
    """[D, pi(f)] with entries D_ij (f(site j) - f(site i))."""
    f = _site_values(t, f)
    coo = t.dirac.tocoo()
    fe = np.repeat(f, t.spinor_dim)
    data = coo.data * (fe[coo.col] - fe[coo.row])
    out = sp.csr_array((data, (coo.row, coo.col)), shape=t.dirac.shape)
    out.eliminate_zeros()
    return out


def sup_norm(f) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.max(np.abs(f))) if f.size else 0.0


def hilbert_inner(t: SpectralTriple, psi, phi) -> complex:
    """Weighted inner product sum_x w(x) <psi(x), phi(x)>, antilinear in psi."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if psi.shape[0] != t.hilbert_dim or phi.shape[0] != t.hilbert_dim:
        raise SpectralTripleError(f"spinor fields must have length {t.hilbert_dim}")
    local = (np.conj(psi) * phi).reshape(t.n_points, t.spinor_dim).sum(axis=1)
    return complex(np.sum(t.weights * local))


@dataclass
class SingularPair:
    """Top singular triplet estimate: M v = value * u with ||u|| = ||v|| = 1.

    ``value`` is always a lower bound on ||M||; ``slack`` bounds the gap from
    above via ||M|| <= value * (1 + slack).
    """

    value: float
    u: np.ndarray
    v: np.ndarray
    iterations: int
    slack: float
    converged: bool


def _guaranteed_upper(m) -> float:
    """min(sqrt(||M||_1 ||M||_inf), ||M||_F), both rigorous upper bounds on ||M||_2."""
    a = abs(m)
    row = float(np.max(a.sum(axis=1)))
    col = float(np.max(a.sum(axis=0)))
    if sp.issparse(m):
        fro = float(np.sqrt((a.multiply(a)).sum()))
    else:
        fro = float(np.linalg.norm(m))
    return min(np.sqrt(row * col), fro)


def _zero(shape_u, shape_v) -> SingularPair:
    u = np.zeros(shape_u, dtype=complex)
    v = np.zeros(shape_v, dtype=complex)
    if shape_u:
        u[0] = 1.0
    if shape_v:
        v[0] = 1.0
    return SingularPair(0.0, u, v, 0, 0.0, True)


def top_singular(m, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0,
                 v0=None, method: str = "auto") -> SingularPair:
    """Largest singular value and vectors of ``m`` (dense or sparse).

    ``method`` is ``"svd"``, ``"power"`` or ``"auto"``; auto uses a dense SVD
    when the matrix, after dropping zero rows and columns, has dimension
    <= 64, and power iteration on M^H M otherwise. Power iteration stops when
    the relative increment of the estimate falls below ``tol``.
    """
    if method not in ("auto", "svd", "power"):
        raise ValueError(f"unknown method {method!r}")
    nrow, ncol = m.shape
    if sp.issparse(m):
        m = sp.csr_array(m)
        m.eliminate_zeros()
        if m.nnz == 0:
            return _zero(nrow, ncol)
        rows = np.unique(m.tocoo().row)
        cols = np.unique(m.indices)
        small = max(len(rows), len(cols)) <= DENSE_SVD_MAX_DIM
    else:
        m = np.asarray(m)
        if not np.any(m):
            return _zero(nrow, ncol)
        rows = np.flatnonzero(np.any(m != 0, axis=1))
        cols = np.flatnonzero(np.any(m != 0, axis=0))
        small = max(len(rows), len(cols)) <= DENSE_SVD_MAX_DIM

    if method == "svd" or (method == "auto" and small):
        sub = m[rows][:, cols]
        sub = sub.toarray() if sp.issparse(sub) else np.asarray(sub)
        uu, ss, vh = np.linalg.svd(sub)
        u = np.zeros(nrow, dtype=complex)
        v = np.zeros(ncol, dtype=complex)
        u[rows] = uu[:, 0]
        v[cols] = np.conj(vh[0])
        return SingularPair(float(ss[0]), u, v, 0, 0.0, True)

    mh = m.conj().T
    if sp.issparse(mh):
        mh = sp.csr_array(mh)
    if v0 is None:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(ncol) + 1j * rng.standard_normal(ncol)
    else:
        v = np.asarray(v0, dtype=complex).copy()
        if not np.any(v):
            v = np.ones(ncol, dtype=complex)
    v /= np.linalg.norm(v)
    w = m @ v
    sigma = float(np.linalg.norm(w))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z = mh @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            converged = True
            break
        v = z / nz
        w = m @ v
        new = float(np.linalg.norm(w))
        done = abs(new - sigma) <= tol * new
        sigma = new
        if done:
            converged = True
            break
    if sigma == 0.0:
        return _zero(nrow, ncol)
    u = w / sigma
    upper = _guaranteed_upper(m)
    slack = max(0.0, upper / sigma - 1.0)
    return SingularPair(sigma, u, v, it, slack, converged)


def operator_norm(m, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0,
                  method: str = "auto") -> float:
    """Largest singular value; raises :class:`ConvergenceError` if power iteration stalls."""
    pair = top_singular(m, tol=tol, max_iter=max_iter, seed=seed, method=method)
    if not pair.converged:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(best lower bound {pair.value:.17g})", pair)
    return pair.value


@dataclass
class AxiomReport:
    self_adjoint_residual: float
    commutator_norms: np.ndarray
    resolvent_eigenvalues: np.ndarray
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def rows(self) -> list[tuple[str, float, bool]]:
        """(check_name, value, pass) rows summarizing the report."""
        comm_ok = bool(np.all(np.isfinite(self.commutator_norms)))
        res = self.resolvent_eigenvalues
        res_ok = bool(np.all((res > 0) & (res <= 1)))
        return [
            ("self_adjoint_residual", self.self_adjoint_residual,
             self.self_adjoint_residual <= SELF_ADJOINT_TOL),
            ("max_indicator_commutator_norm",
             float(np.max(self.commutator_norms)) if len(self.commutator_norms) else 0.0, comm_ok),
            ("min_resolvent_eigenvalue", float(np.min(res)) if len(res) else 1.0, res_ok),
            ("max_resolvent_eigenvalue", float(np.max(res)) if len(res) else 1.0, res_ok),
        ]


def check_axioms(t: SpectralTriple) -> AxiomReport:
    """Finite-dimensional shadows of the K-cycle axioms.

    Reports the self-adjointness residual of D, ||[D, 1_x]|| for every site
    indicator (bounded commutators) and the spectrum of (1 + D^2)^{-1}, which
    must lie in (0, 1]. In finite dimension the compactness condition is
    automatic; only spectral data are reported for it.
    """
    failures = []
    sa = _hermitian_residual(t.dirac)
    if sa > SELF_ADJOINT_TOL:
        failures.append(f"self-adjointness residual {sa:.3e}")
    norms = np.empty(t.n_points)
    for k in range(t.n_points):
        ind = np.zeros(t.n_points)
        ind[k] = 1.0
        norms[k] = operator_norm(commutator(t, ind))
    if not np.all(np.isfinite(norms)):
        failures.append("unbounded commutator with a site indicator")
    herm = t.dense_dirac()
    herm = 0.5 * (herm + herm.conj().T)
    eig = np.linalg.eigvalsh(herm)
    resolvent = np.sort(1.0 / (1.0 + eig ** 2))
    if not np.all((resolvent > 0) & (resolvent <= 1)):
        failures.append("(1 + D^2)^-1 spectrum outside (0, 1]")
    return AxiomReport(sa, norms, resolvent, failures)


def to_dict(t: SpectralTriple) -> dict:
    coo = t.dirac.tocoo()
    order = np.lexsort((coo.col, coo.row))
    entries = [
        [int(coo.row[k]), int(coo.col[k]), float(coo.data[k].real), float(coo.data[k].imag)]
        for k in order
    ]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "points": [[label, *map(float, xs)] for label, xs in zip(t.labels, t.points)],
        "spinor_dim": t.spinor_dim,
        "weights": [float(w) for w in t.weights],
        "dirac": {"n": t.hilbert_dim, "entries": entries},
    }
    if t.edges is not None:
        doc["edges"] = [[i, j, length] for i, j, length in t.edges]
    return doc


def from_dict(doc: dict) -> SpectralTriple:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SpectralTripleError(f"unsupported schema_version {version!r}")
    labels = [row[0] for row in doc["points"]]
    coords = [row[1:] for row in doc["points"]]
    n = int(doc["dirac"]["n"])
    entries = doc["dirac"]["entries"]
    if entries:
        rows, cols, re, im = zip(*entries)
        data = np.array(re, dtype=float) + 1j * np.array(im, dtype=float)
        dirac = sp.csr_array((data, (np.array(rows), np.array(cols))), shape=(n, n))
    else:
        dirac = sp.csr_array((n, n), dtype=complex)
    return new_triple(coords, int(doc["spinor_dim"]), dirac, doc["weights"],
                      labels=labels, edges=doc.get("edges"))


def dumps(t: SpectralTriple) -> str:
    return json.dumps(to_dict(t), indent=1)


def loads(text: str) -> SpectralTriple:
    return from_dict(json.loads(text))
