"""Learned infinite-element matrices and their rational dtn function.

For matrices ``A, B`` of size ``N + 1`` with boundary index 0 and exterior
indices ``1..N`` the discrete dtn is the Schur complement

    dtn(lam) = A_GG + lam B_GG - (A_GE + lam B_GE)(A_EE + lam B_EE)^{-1}(A_EG + lam B_EG).

The reduced pattern (row 0, column 0 and the diagonal of ``A``; row 0 of ``B``
plus ``B_jj = B_j0 = 1``) turns this into a sum of simple poles at ``-A_jj``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleCollisionError, SchemaError, SingularMatrixError
from .numerics import lu_solve_dense

SCHEMA_VERSION = 1
POLE_HIT = 1e-300
STRUCTURES = ("dense", "reduced")


@dataclass(frozen=True)
class ReducedParams:
    """Free entries of the reduced ansatz: ``4N + 2`` complex scalars."""

    A00: complex
    B00: complex
    A0: np.ndarray  # A_0j, j = 1..N
    B0: np.ndarray  # B_0j
    Aj0: np.ndarray  # A_j0
    Ajj: np.ndarray  # A_jj

    def __post_init__(self):
        arrs = [np.asarray(v, dtype=complex).reshape(-1) for v in (self.A0, self.B0, self.Aj0, self.Ajj)]
        if len({a.size for a in arrs}) != 1:
            raise SchemaError("reduced parameter blocks must have equal length N")
        for name, arr in zip(("A0", "B0", "Aj0", "Ajj"), arrs):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "A00", complex(self.A00))
        object.__setattr__(self, "B00", complex(self.B00))

    @property
    def N(self):
        return self.A0.size

    # real vector layout: ReA00, ImA00, ReB00, ImB00, then per j
    # ReA0j, ImA0j, ReB0j, ImB0j, ReAj0, ImAj0, ReAjj, ImAjj

    def to_vector(self):
        head = [self.A00.real, self.A00.imag, self.B00.real, self.B00.imag]
        block = np.stack([self.A0, self.B0, self.Aj0, self.Ajj], axis=1)  # N x 4 complex
        tail = np.stack([block.real, block.imag], axis=2).reshape(-1)
        return np.concatenate([head, tail])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        if (x.size - 4) % 8:
            raise SchemaError(f"reduced vector length {x.size} is not 8N + 4")
        block = x[4:].reshape(-1, 4, 2)
        c = block[..., 0].astype(complex)
        c.imag = block[..., 1]
        return cls(complex(x[0], x[1]), complex(x[2], x[3]), c[:, 0], c[:, 1], c[:, 2], c[:, 3])

    def conjugate(self):
        return ReducedParams(
            np.conj(self.A00), np.conj(self.B00), np.conj(self.A0), np.conj(self.B0), np.conj(self.Aj0), np.conj(self.Ajj)
        )

    def extended(self, A0, B0, Aj0, Ajj):
        """Append one exterior index with the given entries."""
        return ReducedParams(
            self.A00,
            self.B00,
            np.append(self.A0, A0),
            np.append(self.B0, B0),
            np.append(self.Aj0, Aj0),
            np.append(self.Ajj, Ajj),
        )


def eval_dtn_reduced(params, lam):
    """Pole-sum form of the reduced dtn; ``lam`` scalar or array."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = params.A00 + lam_arr * params.B00
    if params.N:
        den = params.Ajj[None, :] + lam_arr[:, None]
        hit = np.abs(den) <= POLE_HIT
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise PoleCollisionError(j=int(j) + 1, lam=float(lam_arr[i]))
        num = (params.A0[None, :] + lam_arr[:, None] * params.B0[None, :]) * (params.Aj0[None, :] + lam_arr[:, None])
        out = out - np.sum(num / den, axis=1)
    return complex(out[0]) if np.ndim(lam) == 0 else out


def poles(params):
    """Learned poles ``-A_jj`` sorted by real part."""
    p = -np.asarray(params.Ajj, dtype=complex)
    return p[np.argsort(p.real, kind="stable")]


def _pattern_violation(A, B, tol=0.0):
    n = A.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    mask[0, :] = mask[:, 0] = True
    mask[np.diag_indices(n)] = True
    if np.any(np.abs(A[~mask]) > tol):
        return "A has entries outside row 0, column 0 and the diagonal"
    bmask = np.zeros((n, n), dtype=bool)
    bmask[0, :] = True
    if n > 1:
        idx = np.arange(1, n)
        if np.any(B[idx, idx] != 1.0) or np.any(B[idx, 0] != 1.0):
            return "B_jj and B_j0 must equal 1 for j >= 1"
        bmask[idx, idx] = True
        bmask[idx, 0] = True
    if np.any(np.abs(B[~bmask]) > tol):
        return "B has entries outside row 0, B_jj and B_j0"
    return None


@dataclass(frozen=True)
class LearnedIE:
    """Matrices ``A, B`` of a learned infinite element plus provenance metadata."""

    A: np.ndarray
    B: np.ndarray
    structure: str = "dense"
    model: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.array(self.A, dtype=complex, ndmin=2)
        B = np.array(self.B, dtype=complex, ndmin=2)
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise SchemaError("A and B must be square and of equal size")
        if self.structure not in STRUCTURES:
            raise SchemaError(f"structure must be one of {STRUCTURES}")
        if self.structure == "reduced":
            msg = _pattern_violation(A, B)
            if msg:
                raise SchemaError(msg)
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def N(self):
        return self.A.shape[0] - 1

    @classmethod
    def from_reduced(cls, params, model=None, fit=None):
        n = params.N + 1
        A = np.zeros((n, n), dtype=complex)
        B = np.zeros((n, n), dtype=complex)
        A[0, 0], B[0, 0] = params.A00, params.B00
        if params.N:
            idx = np.arange(1, n)
            A[0, idx] = params.A0
            A[idx, 0] = params.Aj0
            A[idx, idx] = params.Ajj
            B[0, idx] = params.B0
            B[idx, idx] = 1.0
            B[idx, 0] = 1.0
        return cls(A, B, "reduced", dict(model or {}), dict(fit or {}))

    def reduced_params(self):
        if self.structure != "reduced":
            raise SchemaError("reduced parameters only exist for the reduced structure")
        idx = np.arange(1, self.N + 1)
        return ReducedParams(self.A[0, 0], self.B[0, 0], self.A[0, idx], self.B[0, idx], self.A[idx, 0], self.A[idx, idx])

    def with_fit(self, **fit):
        merged = dict(self.fit)
        merged.update(fit)
        return LearnedIE(self.A, self.B, self.structure, dict(self.model), merged)

    def dtn(self, lam):
        if self.structure == "reduced":
            return eval_dtn_reduced(self.reduced_params(), lam)
        return eval_dtn_dense(self, lam)


def eval_dtn_dense(ie, lam):
    """Schur-complement dtn using one dense LU solve per eigenvalue."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    A, B = ie.A, ie.B
    out = np.empty(lam_arr.size, dtype=complex)
    for i, lv in enumerate(lam_arr):
        val = A[0, 0] + lv * B[0, 0]
        if ie.N:
            inner = A[1:, 1:] + lv * B[1:, 1:]
            try:
                x = lu_solve_dense(inner, A[1:, 0] + lv * B[1:, 0])
            except SingularMatrixError:
                raise PoleCollisionError(lam=float(lv)) from None
            val -= (A[0, 1:] + lv * B[0, 1:]) @ x
        out[i] = val
    return complex(out[0]) if np.ndim(lam) == 0 else out


def eval_dtn_dense_batch(A, B, lam):
    """Vectorized Schur dtn for many eigenvalues (numpy batched solve)."""
    lam = np.asarray(lam, dtype=float)
    val = A[0, 0] + lam * B[0, 0]
    if A.shape[0] == 1:
        return val
    inner = A[None, 1:, 1:] + lam[:, None, None] * B[None, 1:, 1:]
    col = A[None, 1:, 0] + lam[:, None] * B[None, 1:, 0]
    row = A[None, 0, 1:] + lam[:, None] * B[None, 0, 1:]
    x = np.linalg.solve(inner, col[..., None])[..., 0]
    return val - np.sum(row * x, axis=1)


def assemble_block_system(ie, M, K):
    """``A kron M + B kron K`` with the boundary block first, then exterior rings."""
    M = np.asarray(M, dtype=float)
    K = np.asarray(K, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape != K.shape:
        raise SchemaError("M and K must be square matrices of the same size")
    return np.kron(ie.A, M) + np.kron(ie.B, K)


# ---------------------------------------------------------------------------
# persistence


def _encode(mat):
    return [[[float(v.real), float(v.imag)] for v in row] for row in mat]


def _decode(raw, name):
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{name} must be a nested list of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise SchemaError(f"{name} must have shape (N+1, N+1, 2), got {arr.shape}")
    # filled in place: re + 1j * im would lose the sign of zero parts
    out = np.empty(arr.shape[:2], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]
    return out


def to_json_dict(ie):
    return {
        "version": SCHEMA_VERSION,
        "N": ie.N,
        "structure": ie.structure,
        "A": _encode(ie.A),
        "B": _encode(ie.B),
        "model": ie.model,
        "fit": ie.fit,
    }


def dumps(ie):
    # repr-exact floats; sorted keys keep reruns byte-identical
    return json.dumps(to_json_dict(ie), sort_keys=True, indent=1) + "\n"


def save(ie, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(ie))


def from_json_dict(d):
    if not isinstance(d, dict):
        raise SchemaError("learned-IE document must be a JSON object")
    if d.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {d.get('version')!r}; expected {SCHEMA_VERSION}")
    for key in ("N", "structure", "A", "B"):
        if key not in d:
            raise SchemaError(f"missing field {key!r}")
    A = _decode(d["A"], "A")
    B = _decode(d["B"], "B")
    if A.shape[0] != int(d["N"]) + 1:
        raise SchemaError("N does not match the matrix size")
    return LearnedIE(A, B, d["structure"], d.get("model", {}), d.get("fit", {}))


def load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON: {exc}") from None
    return from_json_dict(d)
