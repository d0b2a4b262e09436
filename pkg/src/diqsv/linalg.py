"""Dense complex linear algebra for few-qubit states and binary measurements.

Conventions
-----------
- All operators are dense complex matrices (``numpy.ndarray``, dtype complex).
- Subsystem ordering: party 1 occupies the *most significant* tensor factor,
  so basis index ``i`` of an n-qubit state spells the outcomes of parties
  1..n when written in binary, most significant bit first.
- Validation tolerance is ``TOL = 1e-9`` everywhere; constructors reject
  anything outside it rather than repairing silently.
- Total Hilbert-space dimension is capped at ``MAX_DIM = 2**14``; larger
  tensor products are rejected, never approximated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
MAX_DIM = 2 ** 14

_I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _check_finite(m: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{what} contains non-finite entries")


def _check_dims(dims: Sequence[int], total: int, what: str) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"{what}: subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != total:
        raise ValueError(f"{what}: product of dims {dims} != dimension {total}")
    return dims


@dataclass(frozen=True)
class StateVector:
    """Pure state on a register of subsystems; unit norm enforced at 1e-9."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes: Iterable[complex], dims: Sequence[int] | None = None):
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        _check_finite(amps, "state vector")
        d = amps.size
        if dims is None:
            n = d.bit_length() - 1
            if d < 2 or d != 2 ** n:
                raise ValueError(f"dimension {d} is not a power of 2 (>= 2); pass dims explicitly")
            dims = (2,) * n
        dims = _check_dims(dims, d, "state vector")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > TOL:
            raise ValueError(f"state vector norm {norm} differs from 1 beyond tolerance")
        object.__setattr__(self, "amplitudes", _freeze(amps))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityOperator":
        """Projector |psi><psi| as a DensityOperator."""
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "StateVector":
        amps = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
        return StateVector(amps, tuple(obj["dims"]))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state: Hermitian, PSD, unit trace, all enforced at 1e-9."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix: np.ndarray, dims: Sequence[int] | None = None):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density operator must be square, got shape {m.shape}")
        _check_finite(m, "density operator")
        d = m.shape[0]
        if dims is None:
            n = d.bit_length() - 1
            dims = (2,) * n if d >= 2 and d == 2 ** n else (d,)
        dims = _check_dims(dims, d, "density operator")
        if np.max(np.abs(m - m.conj().T)) > TOL:
            raise ValueError("density operator is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > TOL:
            raise ValueError(f"density operator trace {tr} differs from 1 beyond tolerance")
        lo = float(np.min(np.linalg.eigvalsh(m)))
        if lo < -TOL:
            raise ValueError(f"density operator has negative eigenvalue {lo}")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "re": self.matrix.real.ravel().tolist(),
            "im": self.matrix.imag.ravel().tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "DensityOperator":
        dims = tuple(obj["dims"])
        d = int(np.prod(dims))
        m = (np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)).reshape(d, d)
        return DensityOperator(m, dims)


@dataclass(frozen=True)
class BinaryMeasurement:
    """Outcome-1 effect of a two-outcome measurement: 0 <= effect <= identity."""

    effect: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, effect: np.ndarray, dims: Sequence[int] | None = None):
        m = np.asarray(effect, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"measurement effect must be square, got shape {m.shape}")
        _check_finite(m, "measurement effect")
        d = m.shape[0]
        if dims is None:
            n = d.bit_length() - 1
            dims = (2,) * n if d >= 2 and d == 2 ** n else (d,)
        dims = _check_dims(dims, d, "measurement effect")
        if np.max(np.abs(m - m.conj().T)) > TOL:
            raise ValueError("measurement effect is not Hermitian within tolerance")
        eigs = np.linalg.eigvalsh(m)
        if float(eigs.min()) < -TOL or float(eigs.max()) > 1.0 + TOL:
            raise ValueError("measurement effect eigenvalues leave [0, 1]")
        object.__setattr__(self, "effect", _freeze(m))
        object.__setattr__(self, "dims", dims)

    def complement(self) -> np.ndarray:
        """Outcome-0 effect, identity minus the stored one."""
        return np.eye(self.effect.shape[0], dtype=complex) - self.effect


def _effect_matrix(e) -> np.ndarray:
    return e.effect if isinstance(e, BinaryMeasurement) else np.asarray(e, dtype=complex)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the dimension budget enforced."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 2 and b.ndim == 2:
        total = a.shape[0] * b.shape[0]
    else:
        total = a.size * b.size
    if total > MAX_DIM:
        raise ValueError(f"tensor product dimension {total} exceeds budget {MAX_DIM}")
    return np.kron(a, b)


def tensor_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    if not factors:
        raise ValueError("tensor_all needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = tensor_product(out, f)
    return out


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep`` (original order kept)."""
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep:
        raise ValueError("keep set must be non-empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    dims = list(rho.dims)
    t = rho.matrix.reshape(dims + dims)
    traced = 0
    for idx in range(n - 1, -1, -1):
        if idx in keep:
            continue
        cur = len(dims) - traced  # subsystems remaining in the row index block
        t = np.trace(t, axis1=idx, axis2=idx + cur)
        traced += 1
    kept_dims = tuple(rho.dims[k] for k in keep)
    d = int(np.prod(kept_dims))
    return DensityOperator(t.reshape(d, d), kept_dims)


def fidelity_with_pure(rho: DensityOperator, psi: StateVector) -> float:
    """<psi| rho |psi>, the fidelity of ``rho`` with a pure target."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim} vs target {psi.dim}")
    v = psi.amplitudes
    val = float(np.real(v.conj() @ rho.matrix @ v))
    if val < -TOL or val > 1.0 + TOL:
        raise ValueError(f"fidelity {val} outside [0, 1] beyond tolerance")
    return min(max(val, 0.0), 1.0)


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    eigs = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return 0.5 * float(np.sum(np.abs(eigs)))


def born_probabilities(rho: DensityOperator, effects: Sequence) -> np.ndarray:
    """Outcome probabilities Tr[E_k rho] for a POVM ``effects``.

    The effects must be Hermitian, have spectrum inside [0, 1], and sum to
    the identity within tolerance; anything else is rejected.
    """
    mats = [_effect_matrix(e) for e in effects]
    if not mats:
        raise ValueError("empty POVM")
    d = rho.dim
    total = np.zeros((d, d), dtype=complex)
    for m in mats:
        if m.shape != (d, d):
            raise ValueError(f"effect shape {m.shape} does not match state dimension {d}")
        if np.max(np.abs(m - m.conj().T)) > TOL:
            raise ValueError("POVM effect is not Hermitian")
        eigs = np.linalg.eigvalsh(m)
        if float(eigs.min()) < -TOL or float(eigs.max()) > 1.0 + TOL:
            raise ValueError("POVM effect eigenvalues leave [0, 1]")
        total += m
    if np.max(np.abs(total - np.eye(d))) > TOL:
        raise ValueError("POVM effects do not sum to identity within tolerance")
    probs = np.array([float(np.real(np.trace(m @ rho.matrix))) for m in mats])
    probs = np.clip(probs, 0.0, None)
    if abs(float(probs.sum()) - 1.0) > TOL:
        raise ValueError("Born probabilities do not sum to 1 within tolerance")
    return probs


def ghz_state(n: int) -> StateVector:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits, n <= 4."""
    if not 2 <= n <= 4:
        raise ValueError(f"ghz supports 2..4 qubits, got {n}")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = amps[-1] = 1.0 / np.sqrt(2.0)
    return StateVector(amps, (2,) * n)


def bell_state() -> StateVector:
    """(|00> + |11>)/sqrt(2)."""
    return StateVector(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2.0), (2, 2))


def plus_state() -> StateVector:
    """(|0> + |1>)/sqrt(2)."""
    return StateVector(np.array([1, 1], dtype=complex) / np.sqrt(2.0), (2,))


def maximally_mixed(d: int) -> DensityOperator:
    """Identity/d on a single subsystem of dimension d."""
    if d < 1:
        raise ValueError("dimension must be positive")
    return DensityOperator(np.eye(d, dtype=complex) / d, (d,))


def standard_state(name: str, **params):
    """Name-based state lookup used by CLI/JSON source specs."""
    name = name.lower()
    if name == "ghz":
        return ghz_state(int(params.get("n", 3)))
    if name == "bell":
        return bell_state()
    if name == "plus":
        return plus_state()
    if name == "maximally_mixed":
        return maximally_mixed(int(params.get("d", 2)))
    raise ValueError(f"unknown standard state {name!r}")


def depolarize(psi: StateVector, lam: float) -> DensityOperator:
    """(1 - lam)|psi><psi| + lam * I/d."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarizing weight {lam} outside [0, 1]")
    d = psi.dim
    m = (1.0 - lam) * np.outer(psi.amplitudes, psi.amplitudes.conj()) + lam * np.eye(d) / d
    return DensityOperator(m, psi.dims)


def spectral_gap(strategy_effects: Sequence, weights: Sequence[float]) -> float:
    """Gap between the two largest eigenvalues of the weighted effect sum.

    ``strategy_effects`` are the pass effects of a device-dependent
    verification strategy; ``weights`` is the probability of drawing each
    setting. Eigenvalues are counted with multiplicity, so a fully
    degenerate operator has gap 0.
    """
    mats = [_effect_matrix(e) for e in strategy_effects]
    if not mats:
        raise ValueError("empty strategy")
    w = np.asarray(weights, dtype=float)
    if w.size != len(mats):
        raise ValueError("weights length does not match effects")
    if np.any(w < -TOL) or abs(float(w.sum()) - 1.0) > TOL:
        raise ValueError("weights must form a probability distribution")
    omega = sum(wi * m for wi, m in zip(w, mats))
    eigs = np.sort(np.linalg.eigvalsh(omega))[::-1]
    if eigs.size < 2:
        raise ValueError("strategy operator is one-dimensional; gap undefined")
    if eigs[0] > 1.0 + TOL:
        raise ValueError(f"largest eigenvalue {eigs[0]} exceeds 1")
    return float(max(eigs[0] - eigs[1], 0.0))
