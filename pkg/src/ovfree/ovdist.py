"""A-valued distributions of one self-adjoint variable over A = M_k.

A distribution is the truncated family of moment maps

    M_n(a_1, ..., a_{n-1}) = E(X a_1 X a_2 ... a_{n-1} X),   n = 1..order,

stored as MultiMap tensors.  The module provides construction from concrete
matrix realizations, the moment <-> cumulant transforms over non-crossing
partitions, eta-convolution powers (compose every cumulant with eta), and
block moment-matrix positivity certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from .algebra import DEFAULT_TOL, AMatrix, PSDReport, dagger, flatten, is_hermitian, matrix_units, psd_check, unit_adjoint_index
from .cpmaps import CPMap
from .multimap import MultiMap, kappa_map, moment_map
from .ncpart import enumerate_nc

MAX_REALIZATION_ORDER = 10
HERMITIAN_SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class Realization:
    """Self-adjoint X in M_{k*p} realizing an M_k-valued distribution.

    The algebra embeds as a -> a (x) 1_p and the conditional expectation is
    id (x) phi for the state phi = tr(rho .) on the M_p tensor factor.  This
    shape guarantees the bimodule property E(a x b) = a E(x) b and positivity
    of E by construction; validate() re-checks both numerically.
    """

    k: int
    p: int
    X: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=complex)
        rho = np.asarray(self.rho, dtype=complex)
        d = self.k * self.p
        if X.shape != (d, d):
            raise ValueError(f"X must be {d}x{d} for k={self.k}, p={self.p}")
        if not is_hermitian(X, 1e-10):
            raise ValueError("realization is invalid: X is not self-adjoint")
        if not is_hermitian(rho, 1e-10):
            raise ValueError("realization is invalid: state is not a density matrix (not Hermitian)")
        vals = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
        if vals[0] < -1e-10 or abs(np.sum(vals) - 1.0) > 1e-10:
            raise ValueError("realization is invalid: state is not a density matrix")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "rho", rho)

    @property
    def d(self) -> int:
        return self.k * self.p

    def embed(self, a: np.ndarray) -> np.ndarray:
        return np.kron(np.asarray(a, dtype=complex), np.eye(self.p))

    def cond_exp(self, x: np.ndarray) -> np.ndarray:
        x4 = np.asarray(x, dtype=complex).reshape(self.k, self.p, self.k, self.p)
        return np.einsum("ts,isjt->ij", self.rho, x4)

    def validate(self, tol: float = 1e-10) -> None:
        """Re-check the conditional expectation identities, naming failures."""
        k = self.k
        eye = np.eye(self.d)
        if np.max(np.abs(self.cond_exp(eye) - np.eye(k))) > tol:
            raise ValueError("condexp violates E(1) = 1")
        units = matrix_units(k)
        y = self.X  # a generic element to test the bimodule property against
        ey = self.cond_exp(y)
        for a in units:
            for b in units:
                lhs = self.cond_exp(self.embed(a) @ y @ self.embed(b))
                if np.max(np.abs(lhs - a @ ey @ b)) > tol:
                    raise ValueError("condexp violates E(a x b) = a E(x) b on matrix units")
        # positivity of E as a map M_d -> M_k via its Choi block matrix
        d = self.d
        choi = np.zeros((d * k, d * k), dtype=complex)
        for u in range(d):
            for v in range(d):
                e = np.zeros((d, d), dtype=complex)
                e[u, v] = 1.0
                choi[u * k:(u + 1) * k, v * k:(v + 1) * k] = self.cond_exp(e)
        if psd_check(choi, tol).min_eigenvalue < -tol:
            raise ValueError("condexp is not positive")


@dataclass(frozen=True)
class OVDistribution:
    """Truncated M_k-valued distribution: moment maps of arity 0..order-1.

    moments[i] is the map with i+1 occurrences of X, so moments[0] = E(X).
    Hermitian symmetry M_n(a_1, .., a_{n-1})^* = M_n(a_{n-1}^*, .., a_1^*)
    is enforced at construction.
    """

    k: int
    order: int
    moments: Tuple[MultiMap, ...]
    label: str = ""

    def __post_init__(self):
        moments = tuple(self.moments)
        if len(moments) != self.order:
            raise ValueError("need one moment map per order 1..order")
        for i, m in enumerate(moments):
            if m.k != self.k or m.arity != i:
                raise ValueError(f"moment {i + 1} has wrong shape")
            scale = max(1.0, float(np.max(np.abs(m.tensor))))
            if m.max_deviation(m.herm_reflect()) > HERMITIAN_SYMMETRY_TOL * scale:
                raise ValueError(f"moment {i + 1} violates Hermitian symmetry")
        object.__setattr__(self, "moments", moments)

    def moment(self, n: int) -> MultiMap:
        return self.moments[n - 1]

    def max_deviation(self, other: "OVDistribution", order: int | None = None) -> float:
        n = min(self.order, other.order) if order is None else order
        return max(self.moments[i].max_deviation(other.moments[i]) for i in range(n))


def moments_from_realization(r: Realization, N: int, label: str = "realized") -> OVDistribution:
    """Exact moment maps E(X a_1 X ... X) of a concrete realization."""
    if not 1 <= N <= MAX_REALIZATION_ORDER:
        raise ValueError(f"order must be in [1, {MAX_REALIZATION_ORDER}]")
    r.validate()
    k, d = r.k, r.d
    units = matrix_units(k)
    # W[c] = embed(e_c) @ X; cur accumulates X a_{c_1} X ... X with slot axes
    W = np.stack([r.embed(units[c]) @ r.X for c in range(k * k)])
    cur = r.X.copy()
    moments: List[MultiMap] = []
    for n in range(1, N + 1):
        if n > 1:
            t = np.tensordot(cur, W, axes=([cur.ndim - 1], [1]))
            cur = np.moveaxis(t, -2, -3)  # (slots..., c, a, b)
        e4 = cur.reshape(cur.shape[:-2] + (k, r.p, k, r.p))
        tensor = np.einsum("ts,...isjt->...ij", r.rho, e4)
        moments.append(MultiMap(k, tensor))
    return OVDistribution(k=k, order=N, moments=tuple(moments), label=label)


def cumulants_from_moments(dist: OVDistribution) -> Tuple[MultiMap, ...]:
    """Free cumulant maps, by subtracting all proper nested partition terms."""
    k = dist.k
    cums: List[MultiMap] = []

    def block_value(block: Tuple[int, ...]) -> MultiMap:
        return cums[len(block) - 1]

    for n in range(1, dist.order + 1):
        correction = MultiMap.zero(k, n - 1)
        for p in enumerate_nc(n):
            if len(p.blocks()) == 1:
                continue  # the one-block partition carries the unknown cumulant
            correction = correction + kappa_map(p.roots, k, block_value)
        cums.append(dist.moments[n - 1] - correction)
    return tuple(cums)


def moments_from_cumulants(
    cums: Sequence[MultiMap], k: int | None = None, label: str = "cumulant-generated"
) -> OVDistribution:
    """Distribution with the given cumulants: M_n = sum over NC(n) of the
    nested evaluations."""
    cums = list(cums)
    if not cums:
        raise ValueError("need at least the first cumulant")
    k = cums[0].k if k is None else k
    for i, c in enumerate(cums):
        if c.arity != i or c.k != k:
            raise ValueError(f"cumulant {i + 1} has wrong shape")

    def block_value(block: Tuple[int, ...]) -> MultiMap:
        return cums[len(block) - 1]

    moments = tuple(moment_map(n, k, block_value) for n in range(1, len(cums) + 1))
    return OVDistribution(k=k, order=len(cums), moments=moments, label=label)


def eta_power(dist: OVDistribution, eta: CPMap) -> OVDistribution:
    """The distribution whose cumulants are eta composed with those of dist."""
    if eta.k != dist.k:
        raise ValueError(f"map acts on M_{eta.k} but distribution is over M_{dist.k}")
    cums = cumulants_from_moments(dist)
    twisted = [c.compose(eta) for c in cums]
    label = f"eta_power({dist.label})" if dist.label else "eta_power"
    return moments_from_cumulants(twisted, k=dist.k, label=label)


def _degree_words(k: int, level: int) -> List[Tuple[int, Tuple[int, ...]]]:
    # words X u_1 X ... u_{j-1} X of X-degree j = 0..level-1;
    # degree 0 is the empty word (the unit of the algebra).
    words: List[Tuple[int, Tuple[int, ...]]] = [(0, ())]
    for j in range(1, level):
        for w in product(range(k * k), repeat=j - 1):
            words.append((j, w))
    return words


def positivity_certificate(dist: OVDistribution, level: int, tol: float = DEFAULT_TOL) -> PSDReport:
    """PSD certificate for the level-d block moment matrix.

    Rows and columns are indexed by words of X-degree < level with matrix-unit
    coefficients; the (w, w') entry is the moment of w^* w'.  A negative
    witness conclusively refutes positivity of the distribution; a PSD result
    certifies positivity up to this level only.
    """
    if 2 * level > dist.order:
        raise ValueError(f"insufficient order: level {level} needs order >= {2 * level}")
    k = dist.k
    words = _degree_words(k, level)
    W = len(words)
    diag_units = [p * k + p for p in range(k)]
    grid = np.zeros((W, W, k, k), dtype=complex)
    for i, (di, wi) in enumerate(words):
        adj_wi = tuple(unit_adjoint_index(c, k) for c in reversed(wi))
        for j, (dj, wj) in enumerate(words):
            n = di + dj
            if n == 0:
                grid[i, j] = np.eye(k)
            elif di == 0:
                grid[i, j] = dist.moments[n - 1].tensor[wj]
            elif dj == 0:
                grid[i, j] = dist.moments[n - 1].tensor[adj_wi]
            else:
                t = dist.moments[n - 1].tensor
                grid[i, j] = sum(t[adj_wi + (c,) + wj] for c in diag_units)
    return psd_check(flatten(AMatrix(grid)), tol)


def bernoulli(order: int) -> OVDistribution:
    """Scalar symmetric Bernoulli (two equal point masses at -1 and +1)."""
    moments = []
    for n in range(1, order + 1):
        value = 1.0 if n % 2 == 0 else 0.0
        moments.append(MultiMap(1, np.full((1,) * (n - 1) + (1, 1), value, dtype=complex)))
    return OVDistribution(k=1, order=order, moments=tuple(moments), label="bernoulli")


def semicircular(order: int) -> OVDistribution:
    """Scalar standard semicircular element (second cumulant 1, rest 0)."""
    cums = [MultiMap(1, np.zeros((1,) * (n - 1) + (1, 1), dtype=complex)) for n in range(1, order + 1)]
    if order >= 2:
        cums[1] = MultiMap(1, np.ones((1, 1, 1), dtype=complex))
    return moments_from_cumulants(cums, k=1, label="semicircular")
