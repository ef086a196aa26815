# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tally of Monte Carlo distillation trials.

Mirrors ``_tally_py.tally_block`` exactly; see that module for semantics.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def tally_block(const double[:, ::1] u, const double[::1] cdf, bint two_party):
    cdef Py_ssize_t n_trials = u.shape[0]
    cdef Py_ssize_t n_copies = u.shape[1]
    cdef Py_ssize_t n_cut = cdf.shape[0] - 1
    cdef Py_ssize_t t, c, j
    cdef long long successes = 0
    cdef long long retained = 0
    cdef long long zero_survivors = 0
    cdef long long good
    cdef int idx
    cdef bint b_all_one, c_all_one
    cdef double v
    with nogil:
        for t in range(n_trials):
            good = 0
            b_all_one = True
            c_all_one = True
            for c in range(n_copies):
                v = u[t, c]
                idx = 0
                for j in range(n_cut):
                    if v >= cdf[j]:
                        idx += 1
                if idx == 0:
                    good += 1
                if two_party:
                    if (idx >> 1) == 0:
                        b_all_one = False
                    if (idx & 1) == 0:
                        c_all_one = False
            if good > 0:
                successes += 1
                retained += good
            else:
                retained += 1
                if two_party and not (b_all_one and c_all_one):
                    zero_survivors += 1
    return successes, retained, zero_survivors
