"""Mixed moments in an amalgamated free product, computed directly from the
freeness axiom.

Letters alternate between two algebras over A = M_k: concrete matrices from a
finite-dimensional realization (tag B) and operators on a truncated Fock
module (tag C).  The expectation of an alternating word is evaluated by the
centering recursion: scanning left to right, the first letter x that is not
yet centered is split as (x - E(x)) + E(x).  The centered part joins the
centered prefix; the scalar part fuses its two neighbours, which belong to
the same algebra, into a single letter.  Words consisting entirely of
centered letters have expectation zero -- that is the freeness axiom and the
only input about the free product this module uses.  Every step shortens the
word or centers one more letter, so the recursion is a finite binary tree.

Coefficient arguments of a moment map enter the word as extra tensor axes
("slots") on the letters, so a single recursion pass evaluates the map on the
whole matrix-unit basis at once instead of once per coefficient tuple.

C-letters are kept as unevaluated expression trees (products, centerings and
A-scalar insertions over the sparse Fock atoms); their expectations are read
off by pushing the 0 (+) 1 state vector through the tree, so no operator
product on the Fock module is ever materialized.  Expectations stay exact as
long as the Fock depth exceeds the number of raising letters in any subword,
which compressed_distribution guarantees by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from string import ascii_uppercase
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import matrix_units
from .cpmaps import CPMap, NotCompletelyPositiveError
from .fock import FockSpace, build_fock
from .multimap import MultiMap
from .ovdist import OVDistribution, Realization

MAX_COMPRESSED_ORDER = 6

Atom = Union[str, Tuple[str, np.ndarray]]


@dataclass(frozen=True)
class MixedWord:
    """A word in the atoms "X", "v", "v*" and ("A", a) for a in M_k.

    "X" belongs to the realization algebra, "v"/"v*" to the Fock algebra and
    A-atoms to the common subalgebra; in normal form, maximal runs merge into
    strictly alternating tagged letters.  The empty word represents the unit.
    """

    atoms: Tuple[Atom, ...]

    @classmethod
    def from_atoms(cls, atoms: Sequence[Atom]) -> "MixedWord":
        out: List[Atom] = []
        for a in atoms:
            if isinstance(a, str):
                if a not in ("X", "v", "v*"):
                    raise ValueError(f"unknown atom {a!r}")
                out.append(a)
            else:
                tag, mat = a
                if tag != "A":
                    raise ValueError(f"unknown atom tag {tag!r}")
                out.append(("A", np.asarray(mat, dtype=complex)))
        return cls(tuple(out))

    def normal_form(self) -> List[Tuple[str, Tuple[Atom, ...]]]:
        """Maximal same-algebra runs as (tag, atoms) pairs, tags alternating.

        A-atoms attach to the preceding run when one is open, otherwise to
        the first run that forms; a word with no X/v atoms normalizes to a
        single "A" run.
        """
        runs: List[Tuple[str, List[Atom]]] = []
        leading: List[Atom] = []
        for atom in self.atoms:
            if not isinstance(atom, str):
                (runs[-1][1] if runs else leading).append(atom)
                continue
            tag = "B" if atom == "X" else "C"
            if runs and runs[-1][0] == tag:
                runs[-1][1].append(atom)
            else:
                runs.append((tag, leading + [atom]))
                leading = []
        if leading:
            runs.append(("A", leading))
        return [(tag, tuple(items)) for tag, items in runs]


# -- internal letter representations ------------------------------------------


class _BLetter:
    """Matrix in the realization algebra, with optional slot axes in front."""

    __slots__ = ("tensor", "sids", "is_zero", "_e")

    def __init__(self, tensor: np.ndarray, sids: Tuple[int, ...]):
        self.tensor = tensor
        self.sids = sids
        self.is_zero = not np.any(tensor)
        self._e = None

    tag = "B"


class _CNode:
    tag = "C"
    __slots__ = ()


class _COpAtom(_CNode):
    """Sparse operator atom on the Fock module (v or v*); no slots."""

    __slots__ = ("mat", "sids", "is_zero", "_e")

    def __init__(self, mat):
        self.mat = mat
        self.sids: Tuple[int, ...] = ()
        self.is_zero = False
        self._e = None

    def push(self, arr: np.ndarray) -> np.ndarray:
        shape = arr.shape
        out = self.mat @ arr.reshape(shape[0] * shape[1], -1)
        return np.asarray(out).reshape(shape)


class _CScalar(_CNode):
    """Left multiplication by an A-valued tensor carrying its own slots."""

    __slots__ = ("tensor", "sids", "is_zero", "_e")

    def __init__(self, tensor: np.ndarray, sids: Tuple[int, ...] = ()):
        self.tensor = tensor
        self.sids = sids
        self.is_zero = not np.any(tensor)
        self._e = None

    def push(self, arr: np.ndarray) -> np.ndarray:
        tn = self.tensor.ndim - 2
        an = arr.ndim - 3
        ts = ascii_uppercase[:tn]
        ss = ascii_uppercase[tn:tn + an]
        out = np.einsum(f"{ts}ab,db{ss}j->da{ts}{ss}j", self.tensor, arr)
        return out


class _CSeq(_CNode):
    """Product of C factors, applied right to left when pushed."""

    __slots__ = ("factors", "sids", "is_zero", "_e")

    def __init__(self, factors: Tuple[_CNode, ...]):
        self.factors = factors
        sids: Tuple[int, ...] = ()
        for f in factors:
            sids = sids + f.sids
        self.sids = sids
        self.is_zero = any(f.is_zero for f in factors)
        self._e = None

    def push(self, arr: np.ndarray) -> np.ndarray:
        for f in reversed(self.factors):
            arr = f.push(arr)
        return arr


class _CCentered(_CNode):
    """inner - lambda(E(inner)); the expectation tensor shares inner's slots."""

    __slots__ = ("inner", "scalar", "sids", "is_zero", "_e")

    def __init__(self, inner: _CNode, e_tensor: np.ndarray):
        self.inner = inner
        self.scalar = _CScalar(e_tensor, inner.sids)
        self.sids = inner.sids
        self.is_zero = inner.is_zero
        self._e = None

    def push(self, arr: np.ndarray) -> np.ndarray:
        return self.inner.push(arr) - self.scalar.push(arr)


_Letter = Union[_BLetter, _CNode]


class _Env:
    """Evaluation context: the realization, the Fock module and caches."""

    def __init__(self, r: Realization, f: FockSpace):
        if r.k != f.k:
            raise ValueError("realization and Fock module have different base algebras")
        self.r = r
        self.f = f
        self.k = r.k
        self.v = _COpAtom(f.v_op().mat)
        self.vstar = _COpAtom(f.v_op().adjoint().mat)
        self._unit_slab = f.unit_slab().reshape(f.D, f.k, f.k)

    def embed(self, tensor: np.ndarray) -> np.ndarray:
        # a (x) 1_p on the trailing output axes, batched over slots
        p = self.r.p
        k = self.k
        out = np.einsum("...ij,st->...isjt", tensor, np.eye(p))
        return out.reshape(tensor.shape[:-2] + (k * p, k * p))

    def cond_exp_b(self, tensor: np.ndarray) -> np.ndarray:
        k, p = self.k, self.r.p
        t4 = tensor.reshape(tensor.shape[:-2] + (k, p, k, p))
        return np.einsum("ts,...isjt->...ij", self.r.rho, t4)


def _expect(letter: _Letter, env: _Env) -> np.ndarray:
    """Marginal expectation; tensor shape (*slots of the letter, k, k)."""
    if letter._e is not None:
        return letter._e
    if letter.tag == "B":
        e = env.cond_exp_b(letter.tensor)
    else:
        out = letter.push(env._unit_slab)
        e = np.moveaxis(out[env.f.state_index], 0, -2)
    letter._e = e
    return e


def _center(letter: _Letter, e: np.ndarray, env: _Env) -> _Letter:
    if letter.tag == "B":
        return _BLetter(letter.tensor - env.embed(e), letter.sids)
    return _CCentered(letter, e)


def _b_mul(t1: np.ndarray, n1: int, t2: np.ndarray, n2: int) -> np.ndarray:
    s1 = ascii_uppercase[:n1]
    s2 = ascii_uppercase[n1:n1 + n2]
    return np.einsum(f"{s1}ab,{s2}bc->{s1}{s2}ac", t1, t2)


def _merge(left: Optional[_Letter], e: np.ndarray, esids: Tuple[int, ...],
           right: _Letter, env: _Env) -> _Letter:
    """left * scalar * right fused into one letter (left may be absent)."""
    if right.tag == "B":
        t = _b_mul(env.embed(e), len(esids), right.tensor, len(right.sids))
        sids = esids + right.sids
        if left is not None:
            t = _b_mul(left.tensor, len(left.sids), t, len(sids))
            sids = left.sids + sids
        return _BLetter(t, sids)
    factors: Tuple[_CNode, ...] = (_CScalar(e, esids), right)
    if left is not None:
        factors = (left,) + factors
    return _CSeq(factors)


class _Accumulator:
    def __init__(self, k: int, n_slots: int):
        self.k = k
        self.expected = tuple(range(n_slots))
        self.total = np.zeros((k * k,) * n_slots + (k, k), dtype=complex)

    def add(self, tensor: np.ndarray, sids: Tuple[int, ...]) -> None:
        if tuple(sorted(sids)) != self.expected:
            raise AssertionError("terminal word lost coefficient slots")
        perm = tuple(np.argsort(sids)) + (len(sids), len(sids) + 1)
        self.total += np.transpose(tensor, perm)


def _rec(stack: Tuple[_Letter, ...], m: _Letter, t: int,
         word: Tuple[_Letter, ...], env: _Env, acc: _Accumulator) -> None:
    if m.is_zero:
        return
    e = _expect(m, env)
    if t == len(word):
        # word is (centered stack) + m; freeness kills it unless the stack is empty
        if not stack:
            acc.add(e, m.sids)
        return
    nxt = word[t]
    if stack:
        merged = _merge(stack[-1], e, m.sids, nxt, env)
        _rec(stack[:-1], merged, t + 1, word, env, acc)
    else:
        merged = _merge(None, e, m.sids, nxt, env)
        _rec(stack, merged, t + 1, word, env, acc)
    centered = _center(m, e, env)
    if not centered.is_zero:
        _rec(stack + (centered,), nxt, t + 1, word, env, acc)


def _expect_word(letters: Sequence[_Letter], env: _Env, n_slots: int) -> np.ndarray:
    letters = tuple(letters)
    for a, b in zip(letters, letters[1:]):
        if a.tag == b.tag:
            raise AssertionError("word letters must alternate")
    acc = _Accumulator(env.k, n_slots)
    if letters:
        _rec((), letters[0], 1, letters, env, acc)
    else:
        acc.total += np.eye(env.k)
    return acc.total


# -- public operations ---------------------------------------------------------


def _letters_from_atoms(word: MixedWord, env: _Env) -> Tuple[List[_Letter], Optional[np.ndarray]]:
    """Normalize an atom list into alternating letters.

    A-atoms are absorbed into the preceding letter when one is open and into
    the following letter otherwise.  If the word contains no X/v atoms at
    all, the second return value carries the plain A-product instead.
    """
    k = env.k
    letters: List[_Letter] = []
    group_tag: Optional[str] = None
    group: list = []
    pending: List[np.ndarray] = []

    def flush() -> None:
        nonlocal group_tag, group
        if group_tag is None:
            return
        if group_tag == "B":
            t = group[0]
            for m in group[1:]:
                t = t @ m
            letters.append(_BLetter(t, ()))
        else:
            letters.append(_CSeq(tuple(group)) if len(group) > 1 else group[0])
        group_tag, group = None, []

    for atom in word.atoms:
        if not isinstance(atom, str):
            a = np.asarray(atom[1], dtype=complex)
            if a.shape != (k, k):
                raise ValueError(f"A-coefficients must be {k}x{k}")
            if group_tag == "B":
                group.append(env.embed(a))
            elif group_tag == "C":
                group.append(_CScalar(a))
            else:
                pending.append(a)
            continue
        tag = "B" if atom == "X" else "C"
        if tag != group_tag:
            flush()
            group_tag = tag
        if pending:
            if tag == "B":
                group.extend(env.embed(a) for a in pending)
            else:
                group.extend(_CScalar(a) for a in pending)
            pending = []
        if atom == "X":
            group.append(env.r.X)
        elif atom == "v":
            group.append(env.v)
        else:
            group.append(env.vstar)
    if pending and group_tag is None:
        # the word is a pure A-product
        prod = np.eye(k, dtype=complex)
        for a in pending:
            prod = prod @ a
        return [], prod
    if pending:
        if group_tag == "B":
            group.extend(env.embed(a) for a in pending)
        else:
            group.extend(_CScalar(a) for a in pending)
    flush()
    return letters, None


def evaluate(word: MixedWord, r: Realization, f: FockSpace) -> np.ndarray:
    """Expectation of a mixed word onto A, using only the freeness axiom.

    The Fock depth must exceed the number of "v" atoms in the word; this is
    the caller's responsibility (compressed_distribution sizes it itself).
    """
    env = _Env(r, f)
    letters, scalar = _letters_from_atoms(word, env)
    if scalar is not None:
        return scalar
    return _expect_word(letters, env, 0)


def compressed_distribution(
    r: Realization,
    eta: CPMap,
    N: int,
    depth: Optional[int] = None,
    tol: float = 1e-9,
    max_order: Optional[int] = None,
) -> OVDistribution:
    """Moment maps of v* X v, assembled purely from the freeness recursion.

    Requires eta - id completely positive (otherwise the Fock model for
    psi = eta - id does not exist; the raised error carries the witness).
    """
    cap = MAX_COMPRESSED_ORDER if max_order is None else max_order
    if not 1 <= N <= cap:
        raise ValueError(f"order must be in [1, {cap}] (set max_order to override)")
    if eta.k != r.k:
        raise ValueError("map and realization have different base algebras")
    psi = eta.minus_id()
    report = psi.is_cp(tol)
    if not report.is_psd:
        raise NotCompletelyPositiveError(
            f"eta - id is not completely positive (min Choi eigenvalue "
            f"{report.min_eigenvalue:.3e}); no compression model exists",
            report,
        )
    f = build_fock(psi, depth if depth is not None else N + 2, tol)
    # slabs carry one k^2 axis per coefficient slot on top of the module
    if f.D * r.k**2 * (r.k * r.k) ** (N - 1) > 200_000_000:
        raise ValueError(
            "compressed moment evaluation too large for this order/base "
            "dimension; reduce the order or the Kraus rank of eta - id"
        )
    env = _Env(r, f)
    k = r.k
    units = matrix_units(k)
    X = _BLetter(r.X, ())
    moments = []
    for n in range(1, N + 1):
        letters: List[_Letter] = [env.vstar]
        for t in range(n - 1):
            letters.append(X)
            letters.append(_CSeq((env.v, _CScalar(np.asarray(units), (t,)), env.vstar)))
        letters.append(X)
        letters.append(env.v)
        tensor = _expect_word(letters, env, n - 1)
        moments.append(MultiMap(k, tensor))
    return OVDistribution(k=k, order=N, moments=tuple(moments), label="compressed")
