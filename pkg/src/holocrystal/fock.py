"""Bosonic Fock bases, Bose-Hubbard Hamiltonians and exact diagonalization.

Conventions
-----------
* hbar = k_B = 1; energies are in whatever unit ``J`` and ``U`` are given in.
* Basis states are occupation vectors at fixed particle number, listed in
  descending lexicographic order: for 2 sites and 2 particles the order is
  ``(2, 0), (1, 1), (0, 2)``.
* Neighbour bonds are unique unordered pairs, so a two-site ring has a
  single bond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import comb

from .errors import BasisTooLargeError, NumericalError

DEFAULT_MAX_DIM = 10**6
DENSE_LIMIT = 4096

GEOMETRIES = ("chain", "ring", "cubic")


def basis_dimension(num_sites, num_particles):
    return math.comb(num_particles + num_sites - 1, num_particles)


def _compositions(total, parts):
    # descending lexicographic order
    if parts == 1:
        yield (total,)
        return
    for n in range(total, -1, -1):
        for rest in _compositions(total - n, parts - 1):
            yield (n,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis at fixed site count and particle number."""

    num_sites: int
    num_particles: int
    states: np.ndarray = field(repr=False)

    @property
    def dimension(self):
        return self.states.shape[0]

    def __len__(self):
        return self.dimension

    def rank(self, occupations):
        """Ordinal of one or many occupation vectors (vectorized).

        Uses the hockey-stick identity: states with a larger occupation on
        an earlier site come first.
        """
        occ = np.atleast_2d(np.asarray(occupations, dtype=np.int64))
        L = self.num_sites
        remaining = np.full(occ.shape[0], self.num_particles, dtype=np.int64)
        ranks = np.zeros(occ.shape[0], dtype=np.int64)
        for k in range(L - 1):
            gap = remaining - occ[:, k]
            ranks += np.where(
                gap > 0,
                comb(gap + L - k - 2, L - k - 1, exact=False).round().astype(np.int64),
                0,
            )
            remaining = gap
        return ranks if np.ndim(occupations) > 1 else int(ranks[0])

    def index_of(self, state):
        state = tuple(int(n) for n in state)
        if len(state) != self.num_sites or sum(state) != self.num_particles or min(state) < 0:
            raise KeyError(state)
        return self.rank(state)

    @property
    def index(self):
        """Mapping occupation tuple -> ordinal (materialized on demand)."""
        return {tuple(int(n) for n in s): i for i, s in enumerate(self.states)}

    def __contains__(self, state):
        try:
            self.index_of(state)
        except KeyError:
            return False
        return True

    def state_vector(self, state):
        vec = np.zeros(self.dimension, dtype=complex)
        vec[self.index_of(state)] = 1.0
        return vec


def build_basis(num_sites, num_particles, max_dim=DEFAULT_MAX_DIM):
    """Enumerate all occupation vectors of ``num_particles`` bosons on ``num_sites`` sites.

    Raises
    ------
    BasisTooLargeError
        If the dimension exceeds ``max_dim``.
    """
    if num_sites < 1:
        raise ValueError("num_sites must be >= 1")
    if num_particles < 0:
        raise ValueError("num_particles must be >= 0")
    dim = basis_dimension(num_sites, num_particles)
    if max_dim is not None and dim > max_dim:
        raise BasisTooLargeError(num_sites, num_particles, dim, max_dim)
    states = np.array(list(_compositions(num_particles, num_sites)), dtype=np.int64)
    states = states.reshape(dim, num_sites)
    states.flags.writeable = False
    return FockBasis(num_sites, num_particles, states)


def apply_hop(state, site_i, site_j):
    """Apply ``b_j^dagger b_i`` to an occupation vector.

    Returns ``(coefficient, new_state)``; the coefficient excludes the
    ``-J`` prefactor. Annihilating an empty site gives ``(0.0, None)``.
    """
    n_i, n_j = state[site_i], state[site_j]
    if n_i == 0:
        return 0.0, None
    new = list(state)
    new[site_i] -= 1
    new[site_j] += 1
    return math.sqrt(n_i * (n_j + 1)), tuple(new)


def apply_pair_hop(state, site_i, site_j):
    """Apply ``b_j^dagger^2 b_i^2``; coefficient sqrt((n_i-1) n_i (n_j+1)(n_j+2))."""
    n_i, n_j = state[site_i], state[site_j]
    if n_i < 2:
        return 0.0, None
    new = list(state)
    new[site_i] -= 2
    new[site_j] += 2
    return math.sqrt((n_i - 1) * n_i * (n_j + 1) * (n_j + 2)), tuple(new)


@dataclass(frozen=True)
class LatticeParams:
    """Bose-Hubbard lattice parameters.

    ``K`` defaults to ``J**2 / U``. ``pair_sign=+1`` reproduces the pair
    term ``-K (b_i^dag^2 b_j^2 + h.c.)`` exactly as the effective
    Hamiltonian is usually printed; ``-1`` flips it to the sign produced by
    a direct second-order perturbation sum.
    """

    J: float = 1.0
    U: float = 10.0
    num_sites: int = 2
    num_particles: int | None = None
    geometry: str = "ring"
    a: float = 1.0
    K: float | None = None
    pair_sign: int = 1

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}; expected one of {GEOMETRIES}")
        if self.num_sites < 1:
            raise ValueError("num_sites must be >= 1")
        if self.geometry == "cubic" and _cube_side(self.num_sites) is None:
            raise ValueError("cubic geometry needs a perfect-cube number of sites")
        if self.pair_sign not in (1, -1):
            raise ValueError("pair_sign must be +1 or -1")
        if self.a <= 0:
            raise ValueError("lattice constant must be positive")

    @property
    def particles(self):
        return self.num_sites if self.num_particles is None else self.num_particles

    @property
    def coupling_K(self):
        if self.K is not None:
            return float(self.K)
        if self.U <= 0:
            raise ValueError("effective pair tunneling K = J^2/U needs U > 0")
        return self.J**2 / self.U

    @cached_property
    def bonds(self):
        return lattice_bonds(self.geometry, self.num_sites)

    @property
    def coordination(self):
        if not self.bonds:
            return 0
        deg = np.zeros(self.num_sites, dtype=int)
        for i, j in self.bonds:
            deg[i] += 1
            deg[j] += 1
        return int(deg.max())

    def positions(self):
        """Site positions in units of length (``a`` included)."""
        if self.geometry == "cubic":
            side = _cube_side(self.num_sites)
            idx = np.arange(self.num_sites)
            coords = np.stack([idx // side**2, (idx // side) % side, idx % side], axis=1)
            return self.a * coords.astype(float)
        return self.a * np.arange(self.num_sites, dtype=float)

    def adjacency(self):
        n = self.num_sites
        if not self.bonds:
            return sp.csr_matrix((n, n))
        i, j = np.array(self.bonds).T
        data = np.ones(2 * len(i))
        return sp.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(n, n))


def _cube_side(n):
    side = round(n ** (1 / 3))
    for s in (side - 1, side, side + 1):
        if s > 0 and s**3 == n:
            return s
    return None


def lattice_bonds(geometry, num_sites):
    """Unique nearest-neighbour bonds ``(i, j)`` with ``i < j``."""
    bonds = set()
    if geometry == "chain":
        for i in range(num_sites - 1):
            bonds.add((i, i + 1))
    elif geometry == "ring":
        for i in range(num_sites):
            j = (i + 1) % num_sites
            if i != j:
                bonds.add((min(i, j), max(i, j)))
    elif geometry == "cubic":
        side = _cube_side(num_sites)
        if side is None:
            raise ValueError("cubic geometry needs a perfect-cube number of sites")
        for x in range(side):
            for y in range(side):
                for z in range(side):
                    i = (x * side + y) * side + z
                    for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                        xx, yy, zz = (x + d[0]) % side, (y + d[1]) % side, (z + d[2]) % side
                        j = (xx * side + yy) * side + zz
                        if i != j:
                            bonds.add((min(i, j), max(i, j)))
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    return tuple(sorted(bonds))


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    basis: FockBasis
    matrix: sp.csr_matrix = field(repr=False)
    model: str
    params: LatticeParams

    @property
    def dimension(self):
        return self.basis.dimension

    def dense(self):
        return self.matrix.toarray()

    def hermiticity_error(self):
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def coo_text(self):
        """Coordinate-list dump: one ``row col re im`` line per nonzero."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = []
        for k in order:
            v = complex(coo.data[k])
            lines.append(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + ("\n" if lines else "")


def _hop_entries(basis, bonds, coefficient_fn, shift):
    rows, cols, vals = [], [], []
    states = basis.states
    for i, j in bonds:
        for p, q in ((i, j), (j, i)):
            mask = states[:, p] >= shift
            if not mask.any():
                continue
            old = np.nonzero(mask)[0]
            new = states[mask].copy()
            coeff = coefficient_fn(new[:, p].astype(float), new[:, q].astype(float))
            new[:, p] -= shift
            new[:, q] += shift
            rows.append(basis.rank(new))
            cols.append(old)
            vals.append(coeff)
    if not rows:
        return np.array([], int), np.array([], int), np.array([])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def _single_coeff(n_p, n_q):
    return np.sqrt(n_p * (n_q + 1.0))


def _pair_coeff(n_p, n_q):
    return np.sqrt((n_p - 1.0) * n_p * (n_q + 1.0) * (n_q + 2.0))


def interaction_diagonal(basis, U):
    n = basis.states.astype(float)
    return 0.5 * U * np.sum(n * (n - 1.0), axis=1)


def _assemble(basis, params, terms, model):
    dim = basis.dimension
    diag = interaction_diagonal(basis, params.U)
    rows = [np.arange(dim)]
    cols = [np.arange(dim)]
    vals = [diag]
    for prefactor, coeff_fn, shift in terms:
        if prefactor == 0.0:
            continue
        r, c, v = _hop_entries(basis, params.bonds, coeff_fn, shift)
        rows.append(r)
        cols.append(c)
        vals.append(prefactor * v)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    mat.eliminate_zeros()
    ham = HamiltonianMatrix(basis, mat, model, params)
    err = ham.hermiticity_error()
    if err != 0.0:
        raise NumericalError("Hamiltonian assembly is not Hermitian", {"max_abs_diff": err})
    return ham


def build_bare_hamiltonian(params, basis):
    """Bose-Hubbard Hamiltonian ``-J sum (b_i^dag b_j + h.c.) + U/2 sum n(n-1)``."""
    _check_sites(params, basis)
    return _assemble(basis, params, [(-params.J, _single_coeff, 1)], "bare")


def build_effective_hamiltonian(params, basis):
    """Hamiltonian with single hops, pair hops ``-K b^dag^2 b^2`` and on-site repulsion."""
    _check_sites(params, basis)
    if params.K is None and params.U <= 0:
        raise ValueError("effective model undefined for U <= 0")
    K = params.coupling_K
    terms = [(-params.J, _single_coeff, 1), (-params.pair_sign * K, _pair_coeff, 2)]
    return _assemble(basis, params, terms, "effective")


def _check_sites(params, basis):
    if params.num_sites != basis.num_sites:
        raise ValueError("lattice and basis disagree on the number of sites")


def _as_matrix(H):
    return H.matrix if isinstance(H, HamiltonianMatrix) else H


def diagonalize(H, num_eigenvalues=None, dense_limit=DENSE_LIMIT):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.

    Dense LAPACK is used up to ``dense_limit`` states; beyond that, or when
    only a few eigenpairs are requested on a large matrix, Lanczos via
    ``scipy.sparse.linalg.eigsh``.
    """
    M = _as_matrix(H)
    dim = M.shape[0]
    if dim <= dense_limit or num_eigenvalues is None:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        evals, evecs = scipy.linalg.eigh(dense)
        if num_eigenvalues is not None:
            evals, evecs = evals[:num_eigenvalues], evecs[:, :num_eigenvalues]
        return evals, evecs
    # extra vectors keep degenerate multiplets from being truncated
    k = min(num_eigenvalues + 6, dim - 1)
    try:
        evals, evecs = spla.eigsh(M, k=k, which="SA", tol=1e-12, ncv=min(dim, max(2 * k + 1, 30)))
    except spla.ArpackNoConvergence as exc:
        raise NumericalError(
            "Lanczos did not converge", {"converged": len(exc.eigenvalues)}
        ) from exc
    order = np.argsort(evals)[:num_eigenvalues]
    evals, evecs = evals[order], evecs[:, order]
    resid = np.linalg.norm(M @ evecs - evecs * evals, axis=0).max()
    if resid > 1e-8 * max(1.0, abs(evals).max()):
        raise NumericalError("eigenpairs inaccurate", {"residual_norm": float(resid)})
    return evals, evecs


def evolve_state(H, initial_state, t, dt=None, max_norm_drift=1e-6):
    """Propagate ``initial_state`` under ``exp(-i H t)``.

    The run is split into steps of at most ``dt``; each step is exact
    (spectral propagator for small matrices, Krylov ``expm_multiply``
    otherwise) and the norm is checked after every step.
    """
    M = _as_matrix(H)
    psi = np.asarray(initial_state, dtype=complex).copy()
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1.0) > 1e-10:
        raise ValueError(f"initial state must be normalized (norm={norm0!r})")
    if t == 0:
        return psi
    nsteps = 1 if dt is None else max(1, int(math.ceil(abs(t) / dt - 1e-12)))
    h = t / nsteps
    dim = M.shape[0]
    if dim <= DENSE_LIMIT:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        evals, evecs = scipy.linalg.eigh(dense)
        step = (evecs * np.exp(-1j * evals * h)) @ evecs.conj().T

        def advance(v):
            return step @ v
    else:
        Mc = sp.csr_matrix(M, dtype=complex)

        def advance(v):
            return spla.expm_multiply(-1j * h * Mc, v)

    for k in range(nsteps):
        before = np.linalg.norm(psi)
        psi = advance(psi)
        drift = abs(np.linalg.norm(psi) - before)
        if drift > max_norm_drift:
            raise NumericalError(
                "norm drift per step too large; reduce dt",
                {"step": k, "norm_drift": float(drift), "dt": h},
            )
    return psi


def order_parameter_phases(positions, a=1.0):
    """``exp(-i pi r_j / a)``; for 3D positions the coordinates are summed."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 2:
        pos = pos.sum(axis=1)
    return np.exp(-1j * np.pi * pos / a)


def order_parameter_operator(basis, positions, a=1.0):
    """Diagonal matrix of ``(1/sqrt(N)) sum_j n_j exp(-i pi r_j/a)`` in ``basis``."""
    phases = order_parameter_phases(positions, a)
    vals = basis.states.astype(float) @ phases / math.sqrt(basis.num_sites)
    return sp.diags(vals, format="csr")


def one_body_density_matrix(basis, state):
    """``rho[j, k] = <b_j^dagger b_k>`` in ``state``."""
    psi = np.asarray(state, dtype=complex)
    L = basis.num_sites
    occ = basis.states
    rho = np.zeros((L, L), dtype=complex)
    prob = np.abs(psi) ** 2
    for j in range(L):
        rho[j, j] = prob @ occ[:, j]
    for j in range(L):
        for k in range(L):
            if j == k:
                continue
            mask = occ[:, k] >= 1
            old = np.nonzero(mask)[0]
            new = occ[mask].copy()
            coeff = np.sqrt(new[:, k] * (new[:, j] + 1.0))
            new[:, k] -= 1
            new[:, j] += 1
            rho[j, k] = np.sum(np.conj(psi[basis.rank(new)]) * psi[old] * coeff)
    return rho


def density_correlations(basis, state):
    """``<n_j n_k>`` for all site pairs."""
    prob = np.abs(np.asarray(state)) ** 2
    occ = basis.states.astype(float)
    return (occ * prob[:, None]).T @ occ


def condensate_fraction(basis, state):
    """Largest eigenvalue of the one-body density matrix over the particle number."""
    if basis.num_particles == 0:
        return 0.0
    rho = one_body_density_matrix(basis, state)
    return float(np.linalg.eigvalsh(rho)[-1] / basis.num_particles)


@dataclass(frozen=True)
class CorrelatorResult:
    """Spectral data of ``C(t) = <[O(t), O^dagger(0)]>``.

    ``frequencies``/``weights`` list the spectral lines: ``C(t) = sum_k
    weights[k] * exp(-i frequencies[k] t)``.
    """

    times: np.ndarray
    values: np.ndarray
    frequencies: np.ndarray
    weights: np.ndarray
    peak_frequency: float
    amplitude: float
    ground_degeneracy: int
    temperature: float | None


def ed_correlator(H, operator, times, temperature=None, degeneracy_tol=1e-10):
    """Commutator correlator of ``operator`` by full spectral decomposition.

    Zero temperature (default) evaluates in the lowest eigenvector; a
    degenerate ground state is reported through ``ground_degeneracy`` and
    the first vector returned by LAPACK is used. With ``temperature`` the
    expectation is Gibbs weighted.
    """
    M = _as_matrix(H)
    dense = M.toarray() if sp.issparse(M) else np.asarray(M)
    O = operator.toarray() if sp.issparse(operator) else np.asarray(operator)
    if O.shape != dense.shape:
        raise ValueError("operator and Hamiltonian must share a basis")
    evals, evecs = scipy.linalg.eigh(dense)
    scale = max(1.0, float(np.abs(evals).max()))
    degeneracy = int(np.sum(evals - evals[0] < degeneracy_tol * scale))
    O_eig = evecs.conj().T @ O @ evecs  # O_eig[n, m] = <n|O|m>
    if temperature is None or temperature <= 0:
        pops = np.zeros(len(evals))
        pops[0] = 1.0
    else:
        w = np.exp(-(evals - evals[0]) / temperature)
        pops = w / w.sum()
    occupied = np.nonzero(pops > 1e-300)[0]
    freqs, weights = [], []
    for m in occupied:
        # <m|O(t) O^dag|m> = sum_n |<n|O^dag|m>|^2 e^{-i(E_n-E_m)t}
        plus = np.abs(O_eig.conj().T[:, m]) ** 2
        minus = np.abs(O_eig[:, m]) ** 2
        dE = evals - evals[m]
        freqs.extend(dE)
        weights.extend(pops[m] * plus)
        freqs.extend(-dE)
        weights.extend(-pops[m] * minus)
    freqs = np.asarray(freqs)
    weights = np.asarray(weights, dtype=float)
    # merge numerically coincident lines
    order = np.argsort(freqs, kind="stable")
    freqs, weights = freqs[order], weights[order]
    merged_f, merged_w = [], []
    tol = 1e-9 * scale
    for f, w in zip(freqs, weights):
        if merged_f and abs(f - merged_f[-1]) <= tol:
            merged_w[-1] += w
        else:
            merged_f.append(f)
            merged_w.append(w)
    freqs = np.asarray(merged_f)
    weights = np.asarray(merged_w)
    keep = np.abs(weights) > 1e-14 * max(1.0, np.abs(weights).max(initial=0.0))
    freqs, weights = freqs[keep], weights[keep]
    t = np.asarray(times, dtype=float)
    values = (np.exp(-1j * np.outer(t, freqs)) @ weights) if len(freqs) else np.zeros(len(t), complex)
    peak, amp = 0.0, 0.0
    if len(freqs):
        mags = {}
        for f, w in zip(freqs, weights):
            if abs(f) <= tol:
                continue
            key = round(abs(f) / tol)
            mags.setdefault(key, [abs(f), 0.0])
            mags[key][1] += abs(w)
        if mags:
            peak, amp = max(mags.values(), key=lambda fw: (fw[1], -fw[0]))
    return CorrelatorResult(
        times=t,
        values=values,
        frequencies=freqs,
        weights=weights,
        peak_frequency=float(peak),
        amplitude=float(amp),
        ground_degeneracy=degeneracy,
        temperature=temperature,
    )


def ground_state(H):
    evals, evecs = diagonalize(H, num_eigenvalues=1)
    return float(evals[0]), evecs[:, 0]
