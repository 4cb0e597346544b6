"""Spectral distance d(p, q) = sup { |f(p) - f(q)| : ||[D, f]|| <= 1 }.

Two solvers: an exact one for edge-local triples (the supremum reduces to a
shortest path over the edge lengths) and a subgradient ascent on the ratio
(f(p) - f(q)) / ||[D, f]|| for arbitrary triples, which only certifies
lower bounds.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .geodesic import circle_geodesic, shortest_path_lengths, torus_geodesic
from .spectral_triple import DENSE_SVD_MAX_DIM, SpectralTriple, commutator, top_singular

FEASIBILITY_TOL = 1e-9
EDGE_AGREEMENT_TOL = 1e-9
CERTIFY_DENSE_MAX_DIM = 1024
LANCZOS_MAX_STEPS = 64
LANCZOS_MIN_STEPS = 10
WARM_NOISE = 1e-3
STEP_FRACTION = 0.5
DEFAULT_PATIENCE = 50
DEFAULT_PHASES = 4
DEFAULT_SHRINK = 0.3


class DistanceError(ValueError):
    pass


@dataclass
class DistanceResult:
    value: float
    certificate: np.ndarray
    constraint_norm: float
    iterations: int
    solver: str
    lower_bound_only: bool
    converged: bool = True


@dataclass(frozen=True)
class CertificateCheck:
    objective: float
    constraint_norm: float
    feasible: bool


@dataclass(frozen=True)
class Character:
    """Point evaluation chi_x(f) = f(x) on the function algebra."""

    site: int

    def __call__(self, f) -> float:
        return float(np.asarray(f, dtype=float)[self.site])


def character(site: int) -> Character:
    return Character(int(site))


def lipschitz_norm(t: SpectralTriple, f, method: str = "auto") -> float:
    """||[D, f]|| as an operator norm on the Hilbert space."""
    return top_singular(commutator(t, f), method=method).value


def edge_lipschitz_norm(t: SpectralTriple, f) -> float:
    """Closed form max |f(j) - f(i)| / length over the edges of an edge-local triple."""
    if not t.edge_local:
        raise DistanceError("triple is not edge-local")
    f = np.asarray(f, dtype=float)
    if not t.edges:
        return 0.0
    i, j, length = (np.array(c) for c in zip(*t.edges))
    return float(np.max(np.abs(f[j.astype(int)] - f[i.astype(int)]) / length))


def _check_sites(t: SpectralTriple, *sites):
    for s in sites:
        if not (0 <= int(s) < t.n_points):
            raise DistanceError(f"site {s} out of range for {t.n_points} points")


def verify_certificate(t: SpectralTriple, f, p: int, q: int,
                       feasibility_tol: float = FEASIBILITY_TOL) -> CertificateCheck:
    f = np.asarray(f, dtype=float)
    norm = lipschitz_norm(t, f, method=_certify_method(t))
    return CertificateCheck(abs(f[p] - f[q]), norm, norm <= 1 + feasibility_tol)


def _certify_method(t: SpectralTriple) -> str:
    return "svd" if t.hilbert_dim <= CERTIFY_DENSE_MAX_DIM else "auto"


def distance_exact(t: SpectralTriple, p: int, q: int) -> DistanceResult:
    """Exact distance on an edge-local triple via Dijkstra.

    The certificate is the truncated distance function
    ``f(x) = min(d_graph(x, q), d(p, q))``, which is feasible and attains
    the supremum.
    """
    if not t.edge_local:
        raise DistanceError("exact distance needs an edge-local triple")
    _check_sites(t, p, q)
    n = t.n_points
    if p == q:
        return DistanceResult(0.0, np.zeros(n), 0.0, 0, "edge_local_exact", False)
    lo, hi = min(p, q), max(p, q)
    from_lo = shortest_path_lengths(t.edges, lo, n)
    value = float(from_lo[hi])
    if not math.isfinite(value):
        raise DistanceError(f"sites {p} and {q} are not connected")
    # Distances to q, taken from the same search so value is symmetric in (p, q).
    to_q = from_lo if q == lo else shortest_path_lengths(t.edges, q, n)
    cert = np.minimum(to_q, value)
    norm = lipschitz_norm(t, cert)
    closed = edge_lipschitz_norm(t, cert)
    if abs(norm - closed) > EDGE_AGREEMENT_TOL * max(1.0, closed):
        raise DistanceError(
            f"edge data disagree with the Dirac operator (||[D,f]|| = {norm:.17g}, "
            f"edge form {closed:.17g})")
    return DistanceResult(value, cert, norm, 0, "edge_local_exact", False)


class _CommutatorFamily:
    """[D, f] for varying f, with the sparsity pattern of D fixed.

    When s = 2 and D only couples opposite spin components (every builder
    here), [D, f] = [[0, B], [B^H, 0]] up to ordering and ||[D, f]|| = ||B||,
    so only the half-size block B is assembled.
    """

    def __init__(self, t: SpectralTriple):
        coo = t.dirac.tocoo()
        coo.sum_duplicates()
        row, col, data = coo.row, coo.col, coo.data
        s = t.spinor_dim
        self.chiral = s == 2 and bool(np.all(row % 2 != col % 2))
        if self.chiral:
            keep = row % 2 == 0
            row, col, data = row[keep] // 2, col[keep] // 2, data[keep]
            self.srow, self.scol = row, col
            self.shape = (t.n_points, t.n_points)
        else:
            self.srow, self.scol = row // s, col // s
            self.shape = t.dirac.shape
        self.row, self.col, self.data = row, col, data
        self.flat = row * self.shape[1] + col
        self.n = t.n_points

    def matrix(self, f: np.ndarray) -> sp.csr_array:
        data = self.data * (f[self.scol] - f[self.srow])
        return sp.csr_array((data, (self.row, self.col)), shape=self.shape)

    def top_pair(self, f: np.ndarray, v0: np.ndarray):
        """Top singular triplet of [D, f]: dense SVD when small, else Lanczos."""
        if max(self.shape) <= DENSE_SVD_MAX_DIM:
            c = np.zeros(self.shape, dtype=complex)
            c.flat[self.flat] = self.data * (f[self.scol] - f[self.srow])
            uu, ss, vh = np.linalg.svd(c)
            return float(ss[0]), uu[:, 0], np.conj(vh[0])
        return _lanczos_top(self.matrix(f), v0)

    def gradient(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """d/df of Re(u^H [D, f] v), i.e. of the top singular value at (u, v)."""
        w = np.real(np.conj(u[self.row]) * self.data * v[self.col])
        return (np.bincount(self.scol, w, minlength=self.n)
                - np.bincount(self.srow, w, minlength=self.n))


def geodesic_warm_start(t: SpectralTriple, q: int) -> np.ndarray | None:
    """Distance-to-q function from the geometry's own oracle, if there is one."""
    if t.edge_local:
        return shortest_path_lengths(t.edges, q, t.n_points)
    geo = t.geometry
    if geo is None:
        return None
    xs = t.points
    if geo.kind == "torus2d":
        lx, ly = geo.lengths
        return np.array([torus_geodesic(x, xs[q], lx, ly) for x in xs])
    if geo.kind == "circle1d" and geo.metric is not None:
        length = geo.lengths[0]
        return np.array([circle_geodesic(x[0], xs[q][0], length, geo.metric) for x in xs])
    return None


def _starts(t: SpectralTriple, p: int, q: int, restarts: int, seed: int) -> list[np.ndarray]:
    n = t.n_points
    indicator = np.zeros(n)
    indicator[p], indicator[q] = 1.0, -1.0
    pool = []
    warm = geodesic_warm_start(t, q)
    if warm is not None:
        pool.append(np.asarray(warm, dtype=float))
    pool.append(indicator)
    out = pool[:restarts]
    while len(out) < restarts:
        out.append(np.random.default_rng([seed, p, q, len(out)]).standard_normal(n))
    return out


def _lanczos_top(c, v0: np.ndarray, max_steps: int | None = None,
                 min_steps: int = LANCZOS_MIN_STEPS, tol: float = 1e-8):
    """Top singular triplet of ``c`` by Lanczos on c^H c from ``v0``.

    Full reorthogonalisation. Stops once at least ``min_steps`` steps are
    done and the residual of the top Ritz pair is below ``tol`` relative
    (the Ritz value error is of the order of the residual squared).
    A warm ``v0`` close to a lower singular vector converges to that one
    first, hence the minimum step count. The Ritz value never exceeds the
    true one.
    """
    ch = sp.csr_array(c.conj().T)
    dim = c.shape[1]
    steps = min(max_steps or LANCZOS_MAX_STEPS, dim)
    # Lanczos vectors as columns, and conjugated as rows for the projections.
    cols = np.zeros((dim, steps), dtype=complex)
    rows = np.zeros((steps, dim), dtype=complex)
    x = v0 / np.linalg.norm(v0)
    cols[:, 0] = x
    rows[0] = np.conj(x)
    alpha, beta = [], []
    vec = np.ones((1, 1))
    for j in range(steps):
        w = ch @ (c @ x)
        alpha.append(float(np.real(rows[j] @ w)))
        done, done_h = cols[:, :j + 1], rows[:j + 1]
        wn = np.linalg.norm(w)
        w = w - done @ (done_h @ w)
        b = float(np.linalg.norm(w))
        if b < 0.5 * wn:
            w = w - done @ (done_h @ w)
            b = float(np.linalg.norm(w))
        last = b <= 1e-14 * max(alpha) or j + 1 == steps
        if last or (j + 1 >= min_steps and (j + 1 - min_steps) % 4 == 0):
            if j == 0:
                theta, vec = alpha[0], np.ones((1, 1))
            else:
                vals, vec = eigh_tridiagonal(np.array(alpha), np.array(beta))
                theta = vals[-1]
            if last or theta <= 0.0 or b * abs(vec[-1, -1]) <= tol * theta:
                break
        beta.append(b)
        x = w / b
        cols[:, j + 1] = x
        rows[j + 1] = np.conj(x)
    v = cols[:, :len(alpha)] @ vec[:, -1]
    v /= np.linalg.norm(v)
    cv = c @ v
    sigma = float(np.linalg.norm(cv))
    u = cv / sigma if sigma > 0 else cv
    return sigma, u, v


def _ascend(family: _CommutatorFamily, f: np.ndarray, p: int, q: int, max_iter: int,
            step0: float | None, patience: int, phases: int, shrink: float, rtol: float,
            rng):
    """Normalised subgradient ascent on the ratio from f.

    Each phase takes steps ``step0 / sqrt(k)`` along the subgradient of
    f(p) - f(q) projected onto the tangent of the unit sphere ||[D, f]|| = 1,
    and ends when a window of ``patience`` iterations gains less than
    ``rtol`` relative on the best ratio. Later phases restart from the best point with the step shrunk.
    Returns (best f, iterations, converged).
    """
    direction = np.zeros(family.n)
    direction[p], direction[q] = 1.0, -1.0
    f = f - f.mean()
    if f[p] < f[q]:
        f = -f
    noise = rng.standard_normal(family.shape[1]) + 0j
    noise /= np.linalg.norm(noise)
    v0 = noise
    best_f, best_r = None, -math.inf
    total = 0
    converged = False
    for phase in range(phases):
        if best_f is not None:
            f = best_f.copy()
        if phase > 0 and step0 is not None:
            step0 *= shrink
        window_best = best_r
        stalled = False
        for k in range(1, max_iter - total + 1):
            total += 1
            sigma, u, v = family.top_pair(f, v0)
            if sigma == 0.0:
                return best_f, total, True
            v0 = v + WARM_NOISE * noise
            f = f / sigma
            r = f[p] - f[q]
            if best_f is None or r > best_r:
                best_r, best_f = r, f.copy()
            if k % patience == 0:
                if best_r - window_best <= rtol * abs(best_r):
                    stalled = True
                    break
                window_best = best_r
            if step0 is None:
                step0 = STEP_FRACTION * max(r, 1e-12)
            grad = direction - r * family.gradient(u, v)
            grad -= grad.mean()
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                stalled = True
                break
            f = f + (step0 / math.sqrt(k)) * grad / gnorm
        if not stalled:
            break
        converged = phase == phases - 1
    return best_f, total, converged


def distance_subgradient(t: SpectralTriple, p: int, q: int, *, max_iter: int = 5000,
                         step0: float | None = None, restarts: int = 3, seed: int = 42,
                         feasibility_tol: float = FEASIBILITY_TOL,
                         patience: int = DEFAULT_PATIENCE, phases: int = DEFAULT_PHASES,
                         shrink: float = DEFAULT_SHRINK, rtol: float = 1e-4) -> DistanceResult:
    """Lower bound on d(p, q) by subgradient ascent of (f(p) - f(q)) / ||[D, f]||.

    Starts are, in order: the geometry's distance-to-q function, the
    indicator difference 1_p - 1_q, then seeded random functions. Each start
    runs up to ``phases`` rounds of normalised subgradient steps of size
    ``step0 / sqrt(k)`` (default: half the first start's ratio, shrunk
    by ``shrink`` per round) within a budget of ``max_iter`` iterations. A
    round ends when ``patience`` consecutive iterations gain less than
    ``rtol`` relative on the best ratio. The best candidate over all starts
    is rescaled into the unit ball and certified with an independent
    operator-norm evaluation (dense SVD up to dimension 1024).
    """
    _check_sites(t, p, q)
    n = t.n_points
    if p == q:
        return DistanceResult(0.0, np.zeros(n), 0.0, 0, "subgradient", True)
    if restarts < 1:
        raise DistanceError("at least one start is required")
    if patience < 1 or phases < 1:
        raise DistanceError("patience and phases must be at least 1")
    family = _CommutatorFamily(t)
    method = _certify_method(t)

    best = None
    total_iters = 0
    all_converged = True
    starts = [np.asarray(f, dtype=float) for f in _starts(t, p, q, restarts, seed)]
    if step0 is None:
        # Half the first start's ratio, shared by every start: random starts
        # have tiny ratios and would otherwise barely move.
        f0 = starts[0]
        norm0 = lipschitz_norm(t, f0)
        if norm0 > 0 and f0[p] != f0[q]:
            step0 = STEP_FRACTION * abs(f0[p] - f0[q]) / norm0
    for i, f0 in enumerate(starts):
        # One stream per start, so adding restarts never perturbs earlier ones.
        rng = np.random.default_rng([seed, p, q, i, 1])
        f_best, iters, ok = _ascend(family, np.asarray(f0, dtype=float), p, q,
                                    max_iter, step0, patience, phases, shrink,
                                    rtol, rng)
        total_iters += iters
        all_converged &= ok
        if f_best is None:
            continue
        norm = lipschitz_norm(t, f_best, method=method)
        cert = f_best / max(norm, 1.0)
        cert_norm = lipschitz_norm(t, cert, method=method)
        value = (cert[p] - cert[q]) / max(cert_norm, 1.0)
        if best is None or value > best[0]:
            best = (value, cert, cert_norm)

    if best is None or best[0] <= 0:
        # Every start was constant; the zero function is trivially feasible.
        return DistanceResult(0.0, np.zeros(n), 0.0, total_iters, "subgradient", True,
                              all_converged)
    value, cert, cert_norm = best
    if cert_norm > 1 + feasibility_tol:
        raise DistanceError(f"certificate infeasible after rescaling (norm {cert_norm:.17g})")
    return DistanceResult(float(value), cert, float(cert_norm), total_iters, "subgradient",
                          True, all_converged)


def distance(t: SpectralTriple, p: int, q: int, solver: str = "auto", **opts) -> DistanceResult:
    """Dispatch: ``exact``, ``subgradient`` or ``auto`` (exact when edge-local)."""
    if solver == "auto":
        solver = "exact" if t.edge_local else "subgradient"
    if solver == "exact":
        return distance_exact(t, p, q)
    if solver == "subgradient":
        return distance_subgradient(t, p, q, **opts)
    raise DistanceError(f"unknown solver {solver!r}")


def distance_via_characters(t: SpectralTriple, chi_p: Character, chi_q: Character,
                            method: str = "auto", **opts) -> DistanceResult:
    """sup |chi_p(f) - chi_q(f)| over the unit Lipschitz ball, via the chosen solver."""
    return distance(t, chi_p.site, chi_q.site, solver=method, **opts)


def _thread_count() -> int:
    env = os.environ.get("SPECTRAL_LENGTH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DistanceError(f"SPECTRAL_LENGTH_THREADS must be an integer, got {env!r}")
    return 1


def distance_table(t: SpectralTriple, pairs, solver: str = "auto", threads: int | None = None,
                   **opts) -> list[tuple[int, int, DistanceResult]]:
    """Distances for many (p, q) pairs, sorted by (p, q).

    Subgradient runs seed each pair from (seed, p, q), so results do not
    depend on scheduling.
    """
    pairs = sorted({(int(p), int(q)) for p, q in pairs})
    threads = threads or _thread_count()

    def run(pq):
        return (*pq, distance(t, pq[0], pq[1], solver=solver, **opts))

    if threads <= 1:
        return [run(pq) for pq in pairs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, pairs))
