"""Pure-NumPy element assembly kernels.

Fallback backend with the same contract as the compiled extension
(``_kernels_cy``): batched evaluation of elemental matrices/vectors for
affine line cells, where the reference basis tables are shared by all cells.
"""
import numpy as np

BACKEND = "numpy"


def element_matrices(weights, coeff, phi_row, phi_col, scale):
    """Batched weighted products  out[c,i,j] = scale[c] * sum_q w[q] coeff[c,q] phi_row[q,i] phi_col[q,j].

    Args:
        weights: (nq,) reference quadrature weights
        coeff: (ncells, nq) coefficient at the quadrature points of each cell
        phi_row: (nq, ni) row-basis table on the reference cell
        phi_col: (nq, nj) column-basis table on the reference cell
        scale: (ncells,) per-cell scaling (h for mass, 1/h for stiffness, ...)

    Returns:
        (ncells, ni, nj) array of elemental matrices.
    """
    out = np.einsum("q,cq,qi,qj->cij", weights, coeff, phi_row, phi_col, optimize=True)
    out *= scale[:, None, None]
    return out


def element_vectors(weights, coeff, phi, scale):
    """Batched weighted loads  out[c,i] = scale[c] * sum_q w[q] coeff[c,q] phi[q,i]."""
    out = np.einsum("q,cq,qi->ci", weights, coeff, phi, optimize=True)
    out *= scale[:, None]
    return out
