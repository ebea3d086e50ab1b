"""Unitary block DFT helpers.

A stacked block [v_0; ...; v_{N-1}] is transformed along its time axis with
the unitary DFT (1/sqrt(N) both ways, exp(-2j*pi/N) kernel), which is the
Kronecker product of the DFT matrix with an identity on the per-use vectors.
"""

import numpy as np


def block_fft(x, axis: int = 0) -> np.ndarray:
    """Unitary DFT along the block-time axis."""
    return np.fft.fft(x, axis=axis, norm="ortho")


def block_ifft(x, axis: int = 0) -> np.ndarray:
    """Unitary inverse DFT along the block-time axis."""
    return np.fft.ifft(x, axis=axis, norm="ortho")
