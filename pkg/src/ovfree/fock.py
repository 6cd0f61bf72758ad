"""Exact truncated model of the full Fock module generated by a completely
positive map psi on A = M_k.

The bimodule K = A^r (+) A carries the A-valued inner product
<x, y> = sum_i x_i^* y_i; the vector xi = (K_1, ..., K_r) built from a Kraus
family of psi then satisfies <xi, a xi> = psi(a).  The truncated Fock module

    F = A (+) K (+) K (x)_A K (+) ... (+) K^{(x)_A depth}

is a free right A-module whose basis is indexed by words over r + 1 letters
(letter r is the unit direction of the A-summand).  Operators are right
A-linear, i.e. matrices over A acting by left multiplication on coordinates;
they are stored as sparse complex matrices on the flattened coordinates
(word, row) for speed, with the dense matrix-over-A view available through
FockOp.to_amatrix().

The compression operator v prepends xi (+) 1 and truncates the top degree to
zero, so with eta = psi + id the identities v^* v = eta(1) and
v^* lambda(a) v = lambda(eta(a)) hold exactly below the truncation boundary.
The conditional expectation reads the diagonal A-block at the degree-one
basis vector 0 (+) 1; expectations of operator words are exact whenever the
truncation depth exceeds the word length, which word_expectation enforces.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .algebra import DEFAULT_TOL, AMatrix
from .cpmaps import CPMap

MAX_FLAT_DIM = 60_000

Letter = Union[str, np.ndarray]


class FockSpace:
    """Truncated Fock module data: basis words, grading, and the xi vector."""

    def __init__(self, k: int, kraus: Sequence[np.ndarray], depth: int):
        if depth < 2:
            raise ValueError("depth must be at least 2")
        self.k = int(k)
        self.depth = int(depth)
        self.kraus = tuple(np.asarray(K, dtype=complex) for K in kraus)
        for K in self.kraus:
            if K.shape != (k, k):
                raise ValueError("xi coordinates must be k x k matrices")
        self.r = len(self.kraus)
        width = self.r + 1
        self.grading = [width**j for j in range(depth + 1)]
        self.D = sum(self.grading)
        if self.D * self.k > MAX_FLAT_DIM:
            raise ValueError(
                f"truncated Fock module is too large (D*k = {self.D * self.k}); "
                "reduce the depth or the Kraus rank of psi"
            )
        self.words: List[Tuple[int, ...]] = []
        for j in range(depth + 1):
            self.words.extend(product(range(width), repeat=j))
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.degrees = np.array([len(w) for w in self.words])
        self.unit_coord = self.r  # index of the 0 (+) 1 direction inside K
        self.state_index = self.word_index[(self.r,)]
        self._v: Optional["FockOp"] = None

    @property
    def dim(self) -> int:
        return self.D * self.k

    @property
    def xi_coords(self) -> Tuple[np.ndarray, ...]:
        """Coordinates of xi in A^r: the Kraus family of psi."""
        return self.kraus

    # letters 0..r-1 carry the xi coordinates, letter r the unit direction
    def _coordinate(self, letter: int) -> np.ndarray:
        return self.kraus[letter] if letter < self.r else np.eye(self.k)

    def lambda_op(self, a: np.ndarray) -> "FockOp":
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.k, self.k):
            raise ValueError(f"expected a {self.k}x{self.k} matrix")
        mat = sp.kron(sp.identity(self.D, format="csr"), sp.csr_matrix(a), format="csr")
        return FockOp(self, mat, 0)

    def v_op(self) -> "FockOp":
        if self._v is not None:
            return self._v
        k = self.k
        rows: List[int] = []
        cols: List[int] = []
        data: List[complex] = []
        for w, i in self.word_index.items():
            if len(w) >= self.depth:
                continue  # truncation: the top degree maps to zero
            for letter in range(self.r + 1):
                j = self.word_index[(letter,) + w]
                block = self._coordinate(letter)
                for a in range(k):
                    for b in range(k):
                        if block[a, b] != 0:
                            rows.append(j * k + a)
                            cols.append(i * k + b)
                            data.append(block[a, b])
        mat = sp.csr_matrix((data, (rows, cols)), shape=(self.dim, self.dim))
        self._v = FockOp(self, mat, +1)
        return self._v

    def identity_op(self) -> "FockOp":
        return FockOp(self, sp.identity(self.dim, format="csr", dtype=complex), 0)

    def cond_exp_block(self, mat: sp.spmatrix) -> np.ndarray:
        s = self.state_index * self.k
        return np.asarray(mat[s:s + self.k, s:s + self.k].todense())

    def unit_slab(self) -> np.ndarray:
        """The module coordinates of 0 (+) 1 as a (D, k, k) array."""
        slab = np.zeros((self.D, self.k, self.k), dtype=complex)
        slab[self.state_index] = np.eye(self.k)
        return slab


@dataclass(frozen=True)
class FockOp:
    """Right A-linear operator on the truncated Fock module.

    degree_shift is +1 / -1 / 0 for pure raising / lowering / preserving
    operators and None for mixed products.
    """

    space: FockSpace
    mat: sp.spmatrix
    degree_shift: Optional[int]

    def __matmul__(self, other: "FockOp") -> "FockOp":
        if other.space is not self.space:
            raise ValueError("operators live on different Fock modules")
        shift = None
        if self.degree_shift is not None and other.degree_shift is not None:
            shift = self.degree_shift + other.degree_shift
        return FockOp(self.space, (self.mat @ other.mat).tocsr(), shift)

    def __add__(self, other: "FockOp") -> "FockOp":
        shift = self.degree_shift if self.degree_shift == other.degree_shift else None
        return FockOp(self.space, (self.mat + other.mat).tocsr(), shift)

    def __sub__(self, other: "FockOp") -> "FockOp":
        shift = self.degree_shift if self.degree_shift == other.degree_shift else None
        return FockOp(self.space, (self.mat - other.mat).tocsr(), shift)

    def __mul__(self, t: complex) -> "FockOp":
        return FockOp(self.space, t * self.mat, self.degree_shift)

    __rmul__ = __mul__

    def adjoint(self) -> "FockOp":
        shift = None if self.degree_shift is None else -self.degree_shift
        return FockOp(self.space, self.mat.conj().T.tocsr(), shift)

    def block(self, i: int, j: int) -> np.ndarray:
        k = self.space.k
        return np.asarray(self.mat[i * k:(i + 1) * k, j * k:(j + 1) * k].todense())

    def to_amatrix(self) -> AMatrix:
        D, k = self.space.D, self.space.k
        if D > 1500:
            raise ValueError("dense AMatrix view is limited to D <= 1500")
        dense = np.asarray(self.mat.todense())
        return AMatrix(dense.reshape(D, k, D, k).transpose(0, 2, 1, 3))


def build_fock(psi: CPMap, depth: int, tol: float = DEFAULT_TOL) -> FockSpace:
    """Truncated Fock module for a CP map psi; raises with a PSD witness if
    psi is not completely positive (the vector xi does not exist then)."""
    kraus = psi.kraus(tol)
    return FockSpace(psi.k, kraus, depth)


def build_v(f: FockSpace) -> FockOp:
    """The compression operator: prepend xi (+) 1, truncating the top degree."""
    return f.v_op()


def lambda_rep(f: FockSpace, a: np.ndarray) -> FockOp:
    """Left action of A: block-diagonal left multiplication by a."""
    return f.lambda_op(a)


def cond_exp(f: FockSpace, T: FockOp) -> np.ndarray:
    """<0 (+) 1, T (0 (+) 1)>: the diagonal A-block at the state vector."""
    return f.cond_exp_block(T.mat)


def word_expectation(f: FockSpace, word: Sequence[Letter]) -> np.ndarray:
    """Expectation of a product of letters from {\"v\", \"v*\", lambda(a)}.

    A k x k array letter means lambda(a).  Requires depth >= len(word) + 1 so
    that no partial product touches the truncation boundary; under that bound
    the value is exact and independent of the depth.
    """
    L = len(word)
    need = L + 1
    if f.depth < need:
        raise ValueError(f"depth {f.depth} too small for a word of length {L}; need depth >= {need}")
    op = f.identity_op()
    for letter in word:
        op = op @ _as_op(f, letter)
    return cond_exp(f, op)


def _as_op(f: FockSpace, letter: Letter) -> FockOp:
    if isinstance(letter, str):
        if letter == "v":
            return f.v_op()
        if letter == "v*":
            return f.v_op().adjoint()
        raise ValueError(f"unknown letter {letter!r}; expected 'v', 'v*' or a matrix")
    return f.lambda_op(np.asarray(letter, dtype=complex))
