"""Shared numba decorator for the numerical kernels."""

import numba

njit = numba.njit(cache=True, fastmath=False)
