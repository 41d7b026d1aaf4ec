# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Must stay result-identical to _fallback.py."""

import numpy as np


def block_sq_distances(const double[:, ::1] host, const double[:, ::1] block, Py_ssize_t stride):
    cdef Py_ssize_t n0 = host.shape[0], n1 = host.shape[1]
    cdef Py_ssize_t m0 = block.shape[0], m1 = block.shape[1]
    if stride < 1 or m0 > n0 or m1 > n1:
        raise ValueError("invalid block geometry")
    cdef Py_ssize_t nr = (n0 - m0) // stride + 1
    cdef Py_ssize_t nc = (n1 - m1) // stride + 1
    out = np.empty((nr, nc), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t a, b, i, j, r0, c0
    cdef double acc, d
    with nogil:
        for a in range(nr):
            r0 = a * stride
            for b in range(nc):
                c0 = b * stride
                acc = 0.0
                for i in range(m0):
                    for j in range(m1):
                        d = host[r0 + i, c0 + j] - block[i, j]
                        acc = acc + d * d
                o[a, b] = acc
    return out


def largest_true_rectangle(const unsigned char[:, ::1] mask):
    cdef Py_ssize_t rows = mask.shape[0], cols = mask.shape[1]
    cdef Py_ssize_t[::1] heights = np.zeros(cols, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = np.zeros(cols + 1, dtype=np.intp)
    cdef Py_ssize_t r, j, sp, t, h, left, width, cur, top
    cdef Py_ssize_t best_area = 0, best_top = 0, best_left = 0, best_h = 0, best_w = 0
    for r in range(rows):
        for j in range(cols):
            if mask[r, j]:
                heights[j] += 1
            else:
                heights[j] = 0
        sp = 0
        for j in range(cols + 1):
            cur = heights[j] if j < cols else 0
            while sp > 0 and heights[stack[sp - 1]] >= cur:
                t = stack[sp - 1]
                sp -= 1
                h = heights[t]
                if h == 0:
                    continue
                left = stack[sp - 1] + 1 if sp > 0 else 0
                width = j - left
                top = r - h + 1
                if (h * width > best_area
                        or (h * width == best_area
                            and (top < best_top or (top == best_top and left < best_left)))):
                    best_area = h * width
                    best_top = top
                    best_left = left
                    best_h = h
                    best_w = width
            stack[sp] = j
            sp += 1
    return int(best_top), int(best_left), int(best_h), int(best_w)
