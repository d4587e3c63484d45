"""Independent reference calculations used by the tests.

The multi-photon amplitude oracle uses the permanent formula for bosons
scattered by a linear map U: <m|U|n> = perm(U[m, n]) / sqrt(prod n! prod m!).
It shares no code with the library's polynomial expansion.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def permanent(mat: np.ndarray) -> complex:
    """Ryser's formula; fine for the <= 4x4 matrices used here."""
    n = mat.shape[0]
    if n == 0:
        return 1.0
    total = 0j
    for subset in range(1, 1 << n):
        cols = [j for j in range(n) if subset >> j & 1]
        rowsums = mat[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rowsums)
    return (-1) ** n * total


def occupation_list(counts: dict) -> list:
    out = []
    for mode in sorted(counts):
        out += [mode] * counts[mode]
    return out


def scatter(in_counts: dict, matrix: np.ndarray, in_index: dict, out_modes: list) -> dict:
    """Output amplitudes of one input occupation through ``matrix``.

    ``matrix[i, j]`` is the amplitude for input mode j to reach output mode
    ``out_modes[i]``; ``in_index`` maps input modes to columns.
    """
    photons = occupation_list(in_counts)
    cols = [in_index[m] for m in photons]
    norm_in = math.prod(math.factorial(n) for n in in_counts.values())
    out = {}
    k = len(photons)
    for combo in itertools.combinations_with_replacement(range(len(out_modes)), k):
        sub = matrix[np.ix_(list(combo), cols)]
        counts = {}
        for i in combo:
            counts[i] = counts.get(i, 0) + 1
        norm_out = math.prod(math.factorial(n) for n in counts.values())
        amp = permanent(sub) / math.sqrt(norm_in * norm_out)
        if abs(amp) > 1e-13:
            out[tuple(sorted((out_modes[i], n) for i, n in counts.items()))] = amp
    return out


def hand_pair(a, b, d, e):
    """(a|HH> + b|VV>)(d|SS> + e|LL>) written out term by term."""
    return {("H", 0): a * d, ("H", 1): a * e, ("V", 0): b * d, ("V", 1): b * e}
