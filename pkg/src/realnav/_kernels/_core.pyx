# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dijkstra kernel.

Must stay bit-compatible with realnav._kernels._pure: candidate keys are
recomputed from integer step counts as
``n_straight * straight_cost + n_diagonal * diagonal_cost`` (no running
sums), and the module is compiled with -ffp-contract=off so it performs
the same IEEE double operations as the interpreter.
"""

from libc.stdlib cimport free, malloc, realloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef int[8] DR = [-1, -1, -1, 0, 0, 1, 1, 1]
cdef int[8] DC = [-1, 0, 1, -1, 1, -1, 0, 1]
cdef int[8] DIAG = [1, 0, 1, 0, 0, 1, 0, 1]


cdef struct HeapItem:
    double key
    int idx


cdef int heap_push(HeapItem** heap, Py_ssize_t* size, Py_ssize_t* cap,
                   double key, int idx) noexcept nogil:
    cdef Py_ssize_t i, parent
    cdef HeapItem tmp
    cdef HeapItem* grown
    if size[0] == cap[0]:
        grown = <HeapItem*> realloc(heap[0], 2 * cap[0] * sizeof(HeapItem))
        if grown == NULL:
            return -1
        heap[0] = grown
        cap[0] = 2 * cap[0]
    i = size[0]
    heap[0][i].key = key
    heap[0][i].idx = idx
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[0][parent].key <= heap[0][i].key:
            break
        tmp = heap[0][parent]
        heap[0][parent] = heap[0][i]
        heap[0][i] = tmp
        i = parent
    return 0


cdef HeapItem heap_pop(HeapItem* heap, Py_ssize_t* size) noexcept nogil:
    cdef HeapItem top = heap[0]
    cdef HeapItem tmp
    cdef Py_ssize_t i = 0, child
    size[0] -= 1
    heap[0] = heap[size[0]]
    while True:
        child = 2 * i + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and heap[child + 1].key < heap[child].key:
            child += 1
        if heap[i].key <= heap[child].key:
            break
        tmp = heap[i]
        heap[i] = heap[child]
        heap[child] = tmp
        i = child
    return top


def grid_distance_field(nav, int src_r, int src_c,
                        double straight_cost, double diagonal_cost,
                        bint cut_corners=True, entry_penalty=None):
    """Single-source shortest-path field; see the pure backend docstring."""
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] nav_arr = \
        np.ascontiguousarray(nav, dtype=np.uint8)
    cdef int height = nav_arr.shape[0]
    cdef int width = nav_arr.shape[1]
    if not (0 <= src_r < height and 0 <= src_c < width):
        raise ValueError("source cell out of bounds")
    if nav_arr[src_r, src_c] == 0:
        raise ValueError("source cell is not navigable")
    cdef bint has_penalty = entry_penalty is not None
    cdef cnp.ndarray[cnp.int32_t, ndim=1, mode="c"] pen_arr
    cdef cnp.int32_t* pen_p = NULL
    if has_penalty:
        pen_arr = np.ascontiguousarray(entry_penalty, dtype=np.int32).ravel()
        if pen_arr.shape[0] != (<Py_ssize_t> height) * width:
            raise ValueError("entry_penalty shape must match nav")
        pen_p = <cnp.int32_t*> cnp.PyArray_DATA(pen_arr)

    cdef Py_ssize_t n = (<Py_ssize_t> height) * width
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] dist = \
        np.full(n, np.inf, dtype=np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1, mode="c"] n_straight = \
        np.zeros(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1, mode="c"] n_diag = \
        np.zeros(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] done = \
        np.zeros(n, dtype=np.uint8)

    cdef double* dist_p = <double*> cnp.PyArray_DATA(dist)
    cdef cnp.int32_t* ns_p = <cnp.int32_t*> cnp.PyArray_DATA(n_straight)
    cdef cnp.int32_t* nd_p = <cnp.int32_t*> cnp.PyArray_DATA(n_diag)
    cdef cnp.uint8_t* done_p = <cnp.uint8_t*> cnp.PyArray_DATA(done)
    cdef cnp.uint8_t* nav_p = <cnp.uint8_t*> cnp.PyArray_DATA(nav_arr)

    cdef Py_ssize_t heap_size = 0
    cdef Py_ssize_t heap_cap = 4 * n + 8
    cdef HeapItem* heap = <HeapItem*> malloc(heap_cap * sizeof(HeapItem))
    if heap == NULL:
        raise MemoryError()

    cdef int src = src_r * width + src_c
    cdef HeapItem item
    cdef int u, v, r, c, rr, cc, k, oom = 0
    cdef cnp.int32_t base_s, base_d, cand_s, cand_d
    cdef double cand

    dist_p[src] = 0.0
    with nogil:
        heap_push(&heap, &heap_size, &heap_cap, 0.0, src)
        while heap_size > 0:
            item = heap_pop(heap, &heap_size)
            u = item.idx
            if done_p[u]:
                continue
            done_p[u] = 1
            r = u / width
            c = u - r * width
            base_s = ns_p[u]
            base_d = nd_p[u]
            for k in range(8):
                rr = r + DR[k]
                cc = c + DC[k]
                if rr < 0 or rr >= height or cc < 0 or cc >= width:
                    continue
                v = rr * width + cc
                if done_p[v] or nav_p[v] == 0:
                    continue
                if DIAG[k]:
                    if not cut_corners and (
                        nav_p[r * width + cc] == 0 or nav_p[rr * width + c] == 0
                    ):
                        continue
                    cand_s = base_s
                    cand_d = base_d + 1
                else:
                    cand_s = base_s + 1
                    cand_d = base_d
                if has_penalty:
                    cand_s = cand_s + pen_p[v]
                cand = cand_s * straight_cost + cand_d * diagonal_cost
                if cand < dist_p[v]:
                    dist_p[v] = cand
                    ns_p[v] = cand_s
                    nd_p[v] = cand_d
                    if heap_push(&heap, &heap_size, &heap_cap, cand, v) != 0:
                        oom = 1
                        break
            if oom:
                break
    free(heap)
    if oom:
        raise MemoryError()

    return dist.reshape(height, width)
