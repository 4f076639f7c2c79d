"""Stability (Jacobi) operator of a minimal base surface and its spectrum.

The assembled sparse matrix is the weak form of the SIGN-REVERSED Jacobi
operator: for sections X, Y written as frame coefficients,

    X^T A Y  =  integral  <grad X, grad Y> - <R-term(X), Y> - <B-term(X), Y>

so the generalized eigenproblem A v = lambda M v (M the lumped mass) yields
the stability spectrum lambda_0 <= lambda_1 <= ... directly, and X^T A X is
the second variation of area (the index form).  On the equatorial 2-sphere
in S^n with its parallel coordinate frame, A block-decomposes into n-2
copies of  stiffness - 2 * mass.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from dataclasses import dataclass, field

from . import ambient as amb
from . import kernels
from .surface import (ImmersedSurface, Frame, mean_curvature_vector,
                      second_fundamental_form, tangent_basis, vertex_areas)

MINIMALITY_THRESHOLD = 0.05


class EigenSolverError(RuntimeError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


@dataclass
class JacobiOperator:
    matrix: sp.csr_matrix             # (V*k, V*k) symmetric weak form
    mass: sp.dia_matrix               # lumped mass, same shape
    n_components: int
    base: ImmersedSurface
    frame: Frame
    spectral_floor: float = -1.0      # rigorous lower bound on the spectrum
    warnings: list = field(default_factory=list)

    @property
    def size(self):
        return self.matrix.shape[0]

    def mass_diag(self):
        return self.mass.diagonal()


def stiffness_matrix(positions, faces, n_vertices):
    """Cotan stiffness C with  u^T C u ~ Dirichlet energy of u."""
    cots, _ = kernels.face_corner_cots(positions, faces)
    i_idx = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    j_idx = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    w = 0.5 * np.concatenate([cots[:, 0], cots[:, 1], cots[:, 2]])
    rows = np.concatenate([i_idx, j_idx, i_idx, j_idx])
    cols = np.concatenate([j_idx, i_idx, i_idx, j_idx])
    vals = np.concatenate([-w, -w, w, w])
    c = sp.coo_matrix((vals, (rows, cols)), shape=(n_vertices, n_vertices))
    return c.tocsr()


def assemble_jacobi(base, frame, include_curvature=True, include_b_term=True,
                    minimality_threshold=MINIMALITY_THRESHOLD):
    """Assemble the weak-form stability operator for a minimal base.

    A warning is recorded (not raised) when the base is not minimal to the
    configured threshold.
    """
    nv = base.n_vertices
    k = frame.rank
    va = vertex_areas(base)
    c_scalar = stiffness_matrix(base.positions, base.mesh.faces, nv)
    a = sp.kron(c_scalar, sp.identity(k, format="csr"), format="csr")

    zero_order = np.zeros((nv, k, k))
    if include_curvature and base.ambient.kind != amb.EUCLIDEAN:
        tans = tangent_basis(base)
        kscale = base.ambient.curvature_scale
        nu = frame.vectors
        g_nn = np.einsum("vad,vbd->vab", nu, nu)
        for m in range(2):
            t = tans[:, m]
            tt = np.einsum("vd,vd->v", t, t)
            tn = np.einsum("vd,vad->va", t, nu)
            zero_order += kscale * (tt[:, None, None] * g_nn
                                    - tn[:, :, None] * tn[:, None, :])
    if include_b_term:
        b_data = second_fundamental_form(base, frame)
        zero_order += np.einsum("vaij,vbij->vab", b_data.tensor, b_data.tensor)

    blocks = va[:, None, None] * zero_order
    block_mat = sp.bsr_matrix(
        (blocks, np.arange(nv), np.arange(nv + 1)),
        shape=(nv * k, nv * k)).tocsr()
    a = a - block_mat
    a = 0.5 * (a + a.T)                       # exact symmetry
    mass = sp.diags(np.repeat(va, k))
    # spectrum >= -(largest zero-order block eigenvalue): stiffness is PSD
    sym_blocks = 0.5 * (zero_order + np.swapaxes(zero_order, 1, 2))
    floor = -float(np.max(np.linalg.eigvalsh(sym_blocks))) if k else 0.0

    warnings = []
    try:
        h = mean_curvature_vector(base)
        sup_h = float(np.max(np.linalg.norm(h, axis=1)))
        if sup_h > minimality_threshold:
            warnings.append(
                f"base not minimal: sup|H| = {sup_h:.3e} exceeds "
                f"{minimality_threshold}")
    except Exception as exc:  # conformal model has no H
        warnings.append(f"minimality unchecked: {exc}")
    return JacobiOperator(matrix=a.tocsr(), mass=mass, n_components=k,
                          base=base, frame=frame, spectral_floor=floor,
                          warnings=warnings)


def eigen_spectrum(op, k, sigma=None, tol=1e-10, residual_tol=1e-8):
    """k smallest eigenpairs of A v = lambda M v, ascending.

    Shift-invert targeting the bottom of the spectrum; eigensections come
    back mass-orthonormal with shape (k, V, n_components).
    """
    n = op.size
    if k > n:
        raise ValueError(f"requested {k} eigenpairs of a {n}-dim operator")
    if sigma is None:
        sigma = op.spectral_floor - 1.0
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    # padding keeps degenerate clusters intact; ARPACK may otherwise drop
    # multiplicity members when k cuts through a cluster
    k_solve = min(k + max(4, k // 2), n - 1)
    try:
        vals, vecs = spla.eigsh(op.matrix, k=k_solve, M=op.mass.tocsc(),
                                sigma=sigma, which="LM", v0=v0,
                                tol=tol, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise EigenSolverError(f"eigensolver failed to converge: {exc}") from exc
    order = np.argsort(vals)[:k]
    vals = vals[order]
    vecs = vecs[:, order]
    residuals = np.empty(k)
    mdiag = op.mass_diag()
    for i in range(k):
        r = op.matrix @ vecs[:, i] - vals[i] * (mdiag * vecs[:, i])
        residuals[i] = np.linalg.norm(r) / max(np.linalg.norm(mdiag * vecs[:, i]),
                                               1e-300)
    if np.max(residuals) > residual_tol:
        raise EigenSolverError(
            f"eigen residual {np.max(residuals):.3e} above {residual_tol:.1e}",
            residuals=residuals)
    sections = vecs.T.reshape(k, op.base.n_vertices, op.n_components)
    return vals, sections, residuals


def index_form(op, x_section, y_section):
    """Index form Q(X, Y); Q(V, V) = lambda ||V||_M^2 for eigensections."""
    x = np.asarray(x_section, dtype=np.float64).ravel()
    y = np.asarray(y_section, dtype=np.float64).ravel()
    return float(x @ (op.matrix @ y))


def mass_norm_sq(op, x_section):
    x = np.asarray(x_section, dtype=np.float64).ravel()
    return float(x @ (op.mass_diag() * x))


def export_spectrum_csv(path, eigenvalues, residuals):
    with open(path, "w") as fh:
        fh.write("index,eigenvalue,residual\n")
        for i, (ev, res) in enumerate(zip(eigenvalues, residuals)):
            fh.write(f"{i},{ev:.17g},{res:.17g}\n")
