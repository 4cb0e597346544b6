"""Gamma-matrix representations of Clifford algebras.

Minkowski (Dirac representation) and Euclidean generators, the curved
gammas obtained from a vielbein, Dirac's original (beta, alpha) form and
the spinor lift of a connection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALGEBRA_TOL = 1e-12

_I2 = np.eye(2, dtype=complex)
_SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class CliffordError(ValueError):
    """Raised for inputs that cannot form or act on a Clifford representation."""


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def clifford_residual(generators, metric) -> float:
    """Max-entry deviation of {g_a, g_b} from 2 metric[a, b] I over all pairs."""
    metric = np.asarray(metric)
    n = len(generators)
    if n == 0:
        return 0.0
    ident = np.eye(generators[0].shape[0])
    worst = 0.0
    for a in range(n):
        for b in range(a, n):
            r = anticommutator(generators[a], generators[b]) - 2 * metric[a, b] * ident
            worst = max(worst, float(np.max(np.abs(r))))
    return worst


@dataclass(frozen=True)
class CliffordRep:
    """Square complex matrices satisfying {g^a, g^b} = 2 eta^{ab} I."""

    generators: tuple
    signature: tuple

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=complex) for g in self.generators)
        sig = tuple(int(s) for s in self.signature)
        if len(gens) != len(sig):
            raise CliffordError("one signature entry is needed per generator")
        if any(s not in (1, -1) for s in sig):
            raise CliffordError("signature entries must be +1 or -1")
        shapes = {g.shape for g in gens}
        if len(shapes) != 1 or any(len(s) != 2 or s[0] != s[1] for s in shapes):
            raise CliffordError("generators must be square matrices of equal size")
        for g in gens:
            g.setflags(write=False)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "signature", sig)
        res = self.residual()
        if res > ALGEBRA_TOL:
            raise CliffordError(f"anticommutation relations violated (residual {res:.3e})")

    @property
    def dimension(self) -> int:
        return self.generators[0].shape[0]

    @property
    def metric(self) -> np.ndarray:
        return np.diag(np.array(self.signature, dtype=float))

    def __len__(self) -> int:
        return len(self.generators)

    def __getitem__(self, i) -> np.ndarray:
        return self.generators[i]

    def residual(self) -> float:
        return clifford_residual(self.generators, self.metric)


def pauli_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return _SIGMA_X.copy(), _SIGMA_Y.copy(), _SIGMA_Z.copy()


def minkowski_gammas() -> CliffordRep:
    """Dirac representation with signature (+, -, -, -)."""
    zero = np.zeros((2, 2), dtype=complex)
    gammas = [np.block([[_I2, zero], [zero, -_I2]])]
    for sigma in (_SIGMA_X, _SIGMA_Y, _SIGMA_Z):
        gammas.append(np.block([[zero, sigma], [-sigma, zero]]))
    return CliffordRep(tuple(gammas), (1, -1, -1, -1))


def euclidean_gammas(n: int) -> CliffordRep:
    """Hermitian generators of Cl(n) with {g_a, g_b} = 2 delta_ab.

    Matrices have size 2**(n // 2) and come from the tensor-product
    recursion Cl(n + 2) = {sx (x) g_i} + {sy (x) I, sz (x) I}.
    """
    if n < 1:
        raise CliffordError(f"dimension must be >= 1, got {n}")
    if n % 2:
        gens = [np.ones((1, 1), dtype=complex)]
        k = 1
    else:
        gens = [_SIGMA_X.copy(), _SIGMA_Y.copy()]
        k = 2
    while k < n:
        ident = np.eye(gens[0].shape[0], dtype=complex)
        gens = [np.kron(_SIGMA_X, g) for g in gens]
        gens += [np.kron(_SIGMA_Y, ident), np.kron(_SIGMA_Z, ident)]
        k += 2
    return CliffordRep(tuple(gens), (1,) * n)


def _as_vielbein(vielbein, n: int) -> np.ndarray:
    e = np.atleast_2d(np.asarray(vielbein, dtype=float))
    if e.shape != (n, n):
        raise CliffordError(f"vielbein must be {n}x{n}, got {e.shape}")
    cond = np.linalg.cond(e)
    if not np.isfinite(cond) or cond > 1e12:
        raise CliffordError(f"vielbein is singular (condition number {cond:.3e})")
    return e


def inverse_metric(rep: CliffordRep, vielbein) -> np.ndarray:
    """g^{mu nu} = e_a^mu e_b^nu eta^{ab}; row index of the vielbein is the flat index a."""
    e = _as_vielbein(vielbein, len(rep))
    return e.T @ rep.metric @ e


def curved_gammas(rep: CliffordRep, vielbein) -> list[np.ndarray]:
    """gamma^mu(x) = gamma^a e_a^mu, with vielbein[a, mu] = e_a^mu."""
    e = _as_vielbein(vielbein, len(rep))
    n = len(rep)
    return [sum(rep[a] * e[a, mu] for a in range(n)) for mu in range(n)]


def original_dirac_form(rep: CliffordRep) -> tuple[np.ndarray, ...]:
    """Return (beta, a_1, a_2, a_3) with beta = gamma^0 and a_k = gamma^0 gamma^k."""
    if rep.signature != (1, -1, -1, -1) or rep.dimension != 4:
        raise CliffordError("the original Dirac form needs the 4x4 (+,-,-,-) representation")
    beta = rep[0]
    return (beta,) + tuple(beta @ rep[k] for k in (1, 2, 3))


def spin_lift(omega, rep: CliffordRep) -> list[np.ndarray]:
    """Spinor connection components (1/2) omega[mu, a, b] gamma^a gamma^b.

    The sum runs over all (a, b); with omega antisymmetric in (a, b) this is
    the same as summing a < b without the factor 1/2.
    """
    omega = np.asarray(omega, dtype=float)
    n = len(rep)
    if omega.ndim != 3 or omega.shape[1:] != (n, n):
        raise CliffordError(f"omega must have shape (n_mu, {n}, {n}), got {omega.shape}")
    if not np.allclose(omega, -np.transpose(omega, (0, 2, 1)), rtol=0, atol=ALGEBRA_TOL):
        raise CliffordError("omega must be antisymmetric in its frame indices")
    products = [[rep[a] @ rep[b] for b in range(n)] for a in range(n)]
    lifted = []
    for w in omega:
        m = np.zeros((rep.dimension, rep.dimension), dtype=complex)
        for a in range(n):
            for b in range(n):
                if w[a, b] != 0.0:
                    m += 0.5 * w[a, b] * products[a][b]
        lifted.append(m)
    return lifted
