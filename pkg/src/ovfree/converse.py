"""Counterexample pipeline for maps eta with eta - id not completely positive.

Given such an eta on M_k, the Choi matrix of eta - id has a negative
eigenvector, which yields a projection a in M_m(A) (m = k, a the maximally
entangled rank-one projector) and a state phi with phi(eta_m(a) - a) < 0,
where eta_m = id_m (x) eta acts blockwise.  The GNS representation of phi and
the rank-one projection P onto its cyclic vector then compress any scalar
cumulant sequence by the constant

    lambda = phi(eta_m(a)) / (vartheta(a P a) / vartheta(P)) < 1,

and scaling the free cumulants of the symmetric Bernoulli distribution by a
constant lambda < 1 produces moments whose Hankel-type block matrix fails to
be PSD.  That failure is the explicit non-positivity certificate.

The module also provides the packing equivalence between joint distributions
of m^2-tuples and M_m(A)-valued distributions of the packed matrix, under
which eta-convolution powers correspond to (id_m (x) eta)-powers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import DEFAULT_TOL, PSDReport, dagger, psd_check
from .cpmaps import CPMap, eta_minus_id_cp
from .multimap import MultiMap, kappa_map, moment_map
from .ncpart import enumerate_nc
from .ovdist import (
    OVDistribution,
    bernoulli,
    cumulants_from_moments,
    moments_from_cumulants,
    positivity_certificate,
)

MAX_TUPLE_WORDS = 20_000


class NoWitnessError(ValueError):
    """Raised when no witness exists or the map is degenerate."""

    def __init__(self, message: str, report: Optional[PSDReport] = None):
        super().__init__(message)
        self.report = report


# -- joint distributions of tuples and the packing equivalence ----------------


@dataclass(frozen=True)
class TupleDistribution:
    """Truncated joint A-valued distribution of an s-tuple (X_0, ..., X_{s-1}).

    moments maps an index word (i_1, ..., i_n) to the MultiMap

        (a_1, ..., a_{n-1}) -> E(X_{i_1} a_1 X_{i_2} ... a_{n-1} X_{i_n}).
    """

    k: int
    s: int
    order: int
    moments: Dict[Tuple[int, ...], MultiMap]

    def moment(self, word: Tuple[int, ...]) -> MultiMap:
        return self.moments[tuple(word)]

    @classmethod
    def from_cumulants(
        cls, k: int, s: int, order: int, cums: Dict[Tuple[int, ...], MultiMap]
    ) -> "TupleDistribution":
        """Joint moments from joint cumulants; missing words mean zero maps."""
        _check_tuple_size(s, order)

        def lookup(word: Tuple[int, ...]) -> MultiMap:
            got = cums.get(word)
            return got if got is not None else MultiMap.zero(k, len(word) - 1)

        moments: Dict[Tuple[int, ...], MultiMap] = {}
        for n in range(1, order + 1):
            for word in product(range(s), repeat=n):
                moments[word] = moment_map(n, k, lambda block: lookup(tuple(word[p] for p in block)))
        return cls(k=k, s=s, order=order, moments=moments)

    def cumulants(self) -> Dict[Tuple[int, ...], MultiMap]:
        """Joint free cumulants by the same subtraction recursion as the
        one-variable transform, restricted blockwise to index subwords."""
        cums: Dict[Tuple[int, ...], MultiMap] = {}
        for n in range(1, self.order + 1):
            for word in product(range(self.s), repeat=n):
                correction = MultiMap.zero(self.k, n - 1)
                for p in enumerate_nc(n):
                    if len(p.blocks()) == 1:
                        continue
                    correction = correction + kappa_map(
                        p.roots, self.k, lambda block: cums[tuple(word[q] for q in block)]
                    )
                cums[word] = self.moments[word] - correction
        return cums

    def eta_power(self, eta: CPMap) -> "TupleDistribution":
        """Compose every joint cumulant with eta and regenerate the moments."""
        if eta.k != self.k:
            raise ValueError("map dimension does not match the tuple's base algebra")
        twisted = {w: c.compose(eta) for w, c in self.cumulants().items()}
        return TupleDistribution.from_cumulants(self.k, self.s, self.order, twisted)


def _check_tuple_size(s: int, order: int) -> None:
    total = sum(s**n for n in range(1, order + 1))
    if total > MAX_TUPLE_WORDS:
        raise ValueError(f"tuple distribution too large ({total} index words)")


def pack_tuple(td: TupleDistribution) -> OVDistribution:
    """The M_m(A)-valued distribution of X = (X_ij), for s = m^2 variables.

    Variable X_ij is tuple entry i*m + j.  Block (i, j) of the packed moment
    evaluated on b_1, ..., b_{n-1} in M_m(A) is the chain sum

        sum E(X_{i u_1} (b_1)_{u_1 v_1} X_{v_1 u_2} ... X_{v_{n-1} j}).
    """
    m = int(round(np.sqrt(td.s)))
    if m * m != td.s:
        raise ValueError(f"tuple size {td.s} is not a perfect square")
    k, K = td.k, m * td.k
    moments: List[MultiMap] = []
    for n in range(1, td.order + 1):
        shape_r = ((m, k, m, k) * (n - 1)) + (m, k, m, k)
        packed = np.zeros(shape_r, dtype=complex)
        for chain in product(range(m), repeat=2 * (n - 1) + 2):
            i, rest = chain[0], chain[1:]
            j = rest[-1]
            pairs = rest[:-1]  # u_1, v_1, ..., u_{n-1}, v_{n-1}
            word = []
            prev = i
            for t in range(n - 1):
                u, v = pairs[2 * t], pairs[2 * t + 1]
                word.append(prev * m + u)
                prev = v
            word.append(prev * m + j)
            J = td.moments[tuple(word)].tensor.reshape(((k, k) * (n - 1)) + (k, k))
            idx: List[object] = []
            for t in range(n - 1):
                idx += [pairs[2 * t], slice(None), pairs[2 * t + 1], slice(None)]
            idx += [i, slice(None), j, slice(None)]
            packed[tuple(idx)] += J
        moments.append(MultiMap(K, packed.reshape(((K * K,) * (n - 1)) + (K, K))))
    return OVDistribution(k=K, order=td.order, moments=tuple(moments), label="packed")


def unpack_tuple(dist: OVDistribution, m: int, k: int) -> TupleDistribution:
    """Inverse of pack_tuple: recover joint moments of the m^2-tuple."""
    if dist.k != m * k:
        raise ValueError(f"distribution is over M_{dist.k}, expected M_{m * k}")
    s = m * m
    moments: Dict[Tuple[int, ...], MultiMap] = {}
    for n in range(1, dist.order + 1):
        nu = dist.moments[n - 1].tensor.reshape(((m, k, m, k) * (n - 1)) + (m, k, m, k))
        for word in product(range(s), repeat=n):
            ii = [w // m for w in word]
            jj = [w % m for w in word]
            idx: List[object] = []
            for t in range(n - 1):
                idx += [jj[t], slice(None), ii[t + 1], slice(None)]
            idx += [ii[0], slice(None), jj[-1], slice(None)]
            J = nu[tuple(idx)]
            moments[word] = MultiMap(k, J.reshape(((k * k,) * (n - 1)) + (k, k)))
    return TupleDistribution(k=k, s=s, order=dist.order, moments=moments)


# -- witness extraction --------------------------------------------------------


@dataclass(frozen=True)
class Witness:
    """Projection a in M_m(A) and state phi with phi(eta_m(a)) < phi(a) - kappa.

    phi is stored as a density matrix; eta_m_a caches id_m (x) eta applied to
    a, which the compression formulas reuse.
    """

    m: int
    a: np.ndarray
    phi: np.ndarray
    kappa: float
    eta_m_a: np.ndarray

    def phi_of(self, x: np.ndarray) -> float:
        return float(np.real(np.trace(self.phi @ x)))

    def validate(self, tol: float = 1e-9) -> None:
        a = self.a
        if np.max(np.abs(a @ a - a)) > tol or np.max(np.abs(a - dagger(a))) > tol:
            raise ValueError("witness a is not a projection")
        if psd_check(self.phi, tol).min_eigenvalue < -tol or abs(np.trace(self.phi) - 1) > tol:
            raise ValueError("witness phi is not a state")
        if not self.phi_of(a) > 0:
            raise ValueError("witness has phi(a) <= 0")
        if not self.phi_of(self.eta_m_a - a) < -2 * self.kappa:
            raise ValueError("witness margin violated")


_POS_EPS = 1e-8


def find_witness(eta: CPMap, tol: float = DEFAULT_TOL) -> Witness:
    """Deterministic witness search for eta with eta - id not CP.

    m = k and a is the rank-one projection onto the maximally entangled
    vector, so that eta_m(a) - a is the Choi matrix of eta - id divided by k.
    The base state is the negative Choi eigenvector; it is convexly mixed
    with the entangled state or the maximally mixed state over a grid of
    weights until phi(a) > 0, phi(eta_m(a) - a) < -kappa and the compression
    constant phi(eta_m(a)) is nondegenerate.
    """
    report = eta.minus_id().is_cp(tol)
    if report.is_psd:
        raise NoWitnessError("no witness exists: eta - id is completely positive", report)
    k = eta.k
    m = k
    n = m * k
    omega = np.zeros(n, dtype=complex)
    for p in range(k):
        omega[p * k + p] = 1.0 / np.sqrt(k)
    a = np.outer(omega, omega.conj())
    eta_m_a = eta.amplify(m).apply(a)
    diff = eta_m_a - a
    w = report.witness
    phi0 = np.outer(w, w.conj())
    beta = -float(np.real(np.trace(phi0 @ diff)))
    partners = [a, np.eye(n, dtype=complex) / n]
    t_grid = [0.0] + [j / 64.0 for j in range(1, 64)]
    for kappa in (beta / 4, beta / 8, beta / 16, beta / 32, beta / 64):
        for sign in (1.0, -1.0):  # prefer a positive compression constant
            for partner in partners:
                for t in t_grid:
                    sigma = (1.0 - t) * phi0 + t * partner
                    fa = float(np.real(np.trace(sigma @ a)))
                    fd = float(np.real(np.trace(sigma @ diff)))
                    fe = float(np.real(np.trace(sigma @ eta_m_a)))
                    if fa > _POS_EPS and fd < -kappa and sign * fe > _POS_EPS:
                        wit = Witness(m=m, a=a, phi=sigma, kappa=kappa / 2, eta_m_a=eta_m_a)
                        wit.validate()
                        return wit
    raise NoWitnessError(
        "witness search failed: phi(eta_m(a)) is degenerate for every candidate "
        "state (the compression constant would vanish and the scaled seed "
        "distribution would be a positive point mass)",
        report,
    )


# -- GNS model and the compression formulas ------------------------------------


@dataclass(frozen=True)
class GNSModel:
    """GNS space of phi on M_{mk}, realized inside M_{mk} with the
    Hilbert-Schmidt inner product via x -> x sqrt(phi).

    basis[0] is the cyclic vector; P is the rank-one projection onto it, in
    basis coordinates.  vartheta averages <x xi_j, xi_j> over the first N
    basis vectors; with the full basis (N = H_dim) it is tr/N on B(H).
    """

    basis: np.ndarray  # (H_dim, n, n), orthonormal, basis[0] = cyclic vector
    N: int

    @property
    def H_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def xi_vec(self) -> np.ndarray:
        return self.basis[0]

    @property
    def P(self) -> np.ndarray:
        P = np.zeros((self.H_dim, self.H_dim), dtype=complex)
        P[0, 0] = 1.0
        return P

    def rep(self, z: np.ndarray) -> np.ndarray:
        """Matrix of left multiplication by z in the orthonormal basis."""
        return np.einsum("iba,bc,jca->ij", self.basis.conj(), z, self.basis)

    def vartheta_op(self, M: np.ndarray) -> float:
        return float(np.real(np.trace(M[: self.N, : self.N]))) / self.N

    def vartheta(self, z: np.ndarray) -> float:
        return self.vartheta_op(self.rep(z))


def build_gns(w: Witness, n_basis: Optional[int] = None) -> GNSModel:
    """Finite-dimensional GNS construction for the witness state.

    The inner product <x, y> = phi(x^* y) degenerates on the left kernel of
    sqrt(phi); Gram-Schmidt over {sqrt(phi), a sqrt(phi), e_uv sqrt(phi)}
    quotients it out.  Seeding a sqrt(phi) second makes the default ordering
    capture a xi within the first two vectors, so the full-basis model has
    vartheta(a P a) / vartheta(P) = phi(a) exactly.
    """
    rho = (w.phi + dagger(w.phi)) / 2
    vals, vecs = np.linalg.eigh(rho)
    sq = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None))) @ dagger(vecs)
    n = rho.shape[0]
    seeds = [sq, w.a @ sq]
    for u in range(n):
        for v in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[u, v] = 1.0
            seeds.append(e @ sq)
    basis: List[np.ndarray] = []
    for seed in seeds:
        vec = seed.astype(complex)
        for _ in range(2):  # re-orthogonalize for stability
            for b in basis:
                vec = vec - np.trace(dagger(b) @ vec) * b
        norm = float(np.sqrt(np.real(np.trace(dagger(vec) @ vec))))
        if norm > 1e-10:
            basis.append(vec / norm)
    arr = np.stack(basis)
    N = arr.shape[0] if n_basis is None else int(n_basis)
    if not 1 <= N <= arr.shape[0]:
        raise ValueError(f"n_basis must be in [1, {arr.shape[0]}]")
    return GNSModel(basis=arr, N=N)


def compression_cumulants(
    scalar_cumulants: Sequence[float], w: Witness, g: GNSModel, ratio_tol: float = 1e-10
) -> Tuple[List[float], float]:
    """Push a scalar cumulant sequence through the compression chain.

    Sandwiching by the projection a scales the n-th cumulant of the seed by
    the product of vartheta(a P a) factors; renormalizing by vartheta(a P a)
    leaves the constant multiple

        lambda = phi(eta_m(a)) * vartheta(P) / vartheta(a P a),

    computed here from the model matrices.  The constancy of the resulting
    ratio and the bound lambda < (phi(a) - kappa) / (phi(a) - delta) < 1 are
    verified numerically; delta = |vartheta(aPa)/vartheta(P) - phi(a)| is 0
    for the full-basis model and must stay below kappa otherwise.
    """
    phi_eta = w.phi_of(w.eta_m_a)
    phi_a = w.phi_of(w.a)
    rep_a = g.rep(w.a)
    theta_P = g.vartheta_op(g.P)
    theta_aPa = g.vartheta_op(rep_a @ g.P @ rep_a)
    ratio = theta_aPa / theta_P
    delta = abs(ratio - phi_a)
    if delta >= w.kappa:
        raise ValueError(
            f"vartheta basis too small: delta {delta:.3e} >= kappa {w.kappa:.3e}"
        )
    lam = phi_eta / ratio
    tilde: List[float] = []
    for n, om in enumerate(scalar_cumulants, start=1):
        hat = theta_P * phi_eta * theta_aPa ** (n - 1) * om
        tilde.append(hat / theta_aPa**n)
    for n, om in enumerate(scalar_cumulants, start=1):
        if abs(om) > 1e-12 and abs(tilde[n - 1] / om - lam) > ratio_tol:
            raise ValueError("compressed cumulants are not a constant multiple of the seed")
    bound = (phi_a - w.kappa) / (phi_a - delta)
    if not (lam < bound + 1e-12 and bound < 1.0):
        raise ValueError(f"compression constant {lam} violates the bound {bound}")
    return tilde, lam


# -- the Bernoulli endgame -------------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli_cumulant_values(order: int) -> Tuple[float, ...]:
    cums = cumulants_from_moments(bernoulli(order))
    return tuple(float(np.real(c.tensor.reshape(-1)[0])) for c in cums)


@dataclass(frozen=True)
class NonpositivityCertificate:
    """First level at which the scaled-Bernoulli moment matrix fails PSD."""

    lam: float
    level: int
    report: PSDReport

    @property
    def found(self) -> bool:
        return not self.report.is_psd


def certify_nonpositive(lam: float, level: int, tol: float = DEFAULT_TOL) -> NonpositivityCertificate:
    """Scale the symmetric Bernoulli cumulants by lam and hunt for a negative
    moment-matrix eigenvalue at levels up to level.

    Any lam < 1 other than 0 admits a certificate (for lam < 0 already the
    second moment is negative); lam = 0 is rejected since the scaled seed
    degenerates to the point mass at zero, which is positive.
    """
    if abs(lam) <= 1e-12:
        raise ValueError(
            "lambda = 0 is degenerate: every scaled cumulant vanishes and the "
            "resulting point mass at zero is positive"
        )
    order = 2 * level
    base = _bernoulli_cumulant_values(order)
    scaled = [
        MultiMap(1, np.full((1,) * (n - 1) + (1, 1), lam * base[n - 1], dtype=complex))
        for n in range(1, order + 1)
    ]
    dist = moments_from_cumulants(scaled, k=1, label=f"bernoulli-power({lam})")
    report = None
    for lv in range(1, level + 1):
        report = positivity_certificate(dist, lv, tol)
        if not report.is_psd:
            return NonpositivityCertificate(lam=lam, level=lv, report=report)
    return NonpositivityCertificate(lam=lam, level=level, report=report)


@dataclass(frozen=True)
class CounterexampleReport:
    """Outcome of the dichotomy: either positivity is preserved, or a witness
    with its compression constant and non-positivity certificate."""

    eta_minus_id: PSDReport
    preserved: bool
    witness: Optional[Witness]
    lam: Optional[float]
    nonpositivity: Optional[NonpositivityCertificate]


def counterexample_report(eta: CPMap, level: int = 4, tol: float = DEFAULT_TOL) -> CounterexampleReport:
    """Decide the dichotomy for eta and, in the negative case, produce the
    full witness -> GNS -> compression -> Bernoulli certificate chain."""
    rep = eta_minus_id_cp(eta, tol)
    if rep.is_psd:
        return CounterexampleReport(rep, True, None, None, None)
    w = find_witness(eta, tol)
    g = build_gns(w)
    base = _bernoulli_cumulant_values(2 * level)
    _, lam = compression_cumulants(base, w, g)
    cert = certify_nonpositive(lam, level, tol)
    return CounterexampleReport(rep, False, w, lam, cert)
