# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernel; same contract as `_core_np.mesh_pass`."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double SQRT3_4 = 4.0 * sqrt(3.0)


def mesh_pass(double[:, ::1] vertices, int[:, ::1] faces):
    """Fused per-face pass: normals, mean curvature, lumped areas, stats."""
    cdef Py_ssize_t nv = vertices.shape[0]
    cdef Py_ssize_t nf = faces.shape[0]

    normals_arr = np.zeros((nv, 3))
    lap_arr = np.zeros((nv, 3))
    area_arr = np.zeros(nv)
    mixed_arr = np.zeros(nv)
    h_arr = np.empty(nv)
    cdef double[:, ::1] normals = normals_arr
    cdef double[:, ::1] lap = lap_arr
    cdef double[::1] area_w = area_arr
    cdef double[::1] mixed = mixed_arr
    cdef double[::1] h = h_arr

    cdef double total_area = 0.0
    cdef double min_edge_sq = 1e300
    cdef double min_quality = 1e300
    cdef double min_face_area = 1e300

    cdef Py_ssize_t f, i0, i1, i2, ax
    cdef double e01[3]
    cdef double e02[3]
    cdef double e12[3]
    cdef double cr[3]
    cdef double double_area, area, third, l0sq, l1sq, l2sq, q
    cdef double cot0, cot1, cot2, w
    cdef double a0, a1, a2

    for f in range(nf):
        i0 = faces[f, 0]
        i1 = faces[f, 1]
        i2 = faces[f, 2]
        for ax in range(3):
            e01[ax] = vertices[i1, ax] - vertices[i0, ax]
            e02[ax] = vertices[i2, ax] - vertices[i0, ax]
            e12[ax] = vertices[i2, ax] - vertices[i1, ax]
        cr[0] = e01[1] * e02[2] - e01[2] * e02[1]
        cr[1] = e01[2] * e02[0] - e01[0] * e02[2]
        cr[2] = e01[0] * e02[1] - e01[1] * e02[0]
        double_area = sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2])
        area = 0.5 * double_area
        total_area += area
        if area < min_face_area:
            min_face_area = area

        l0sq = e12[0] * e12[0] + e12[1] * e12[1] + e12[2] * e12[2]
        l1sq = e02[0] * e02[0] + e02[1] * e02[1] + e02[2] * e02[2]
        l2sq = e01[0] * e01[0] + e01[1] * e01[1] + e01[2] * e01[2]
        if l0sq < min_edge_sq:
            min_edge_sq = l0sq
        if l1sq < min_edge_sq:
            min_edge_sq = l1sq
        if l2sq < min_edge_sq:
            min_edge_sq = l2sq
        q = SQRT3_4 * area / (l0sq + l1sq + l2sq)
        if q < min_quality:
            min_quality = q

        cot0 = (e01[0] * e02[0] + e01[1] * e02[1] + e01[2] * e02[2]) / double_area
        cot1 = -(e12[0] * e01[0] + e12[1] * e01[1] + e12[2] * e01[2]) / double_area
        cot2 = (e12[0] * e02[0] + e12[1] * e02[1] + e12[2] * e02[2]) / double_area

        third = area / 3.0
        area_w[i0] += third
        area_w[i1] += third
        area_w[i2] += third

        # mixed Voronoi corner areas (Voronoi split for acute triangles,
        # half/quarter split for obtuse ones); normalizes the curvature vector
        if cot0 < 0.0 or cot1 < 0.0 or cot2 < 0.0:
            a0 = 0.5 * area if cot0 < 0.0 else 0.25 * area
            a1 = 0.5 * area if cot1 < 0.0 else 0.25 * area
            a2 = 0.5 * area if cot2 < 0.0 else 0.25 * area
        else:
            a0 = (l2sq * cot2 + l1sq * cot1) / 8.0
            a1 = (l0sq * cot0 + l2sq * cot2) / 8.0
            a2 = (l1sq * cot1 + l0sq * cot0) / 8.0
        mixed[i0] += a0
        mixed[i1] += a1
        mixed[i2] += a2

        # Max's corner weights for vertex normals: exact on spheres
        for ax in range(3):
            normals[i0, ax] += cr[ax] / (l2sq * l1sq)
            normals[i1, ax] += cr[ax] / (l2sq * l0sq)
            normals[i2, ax] += cr[ax] / (l1sq * l0sq)
            # corner 0 faces edge (1, 2); corner 1 edge (2, 0); corner 2 edge (0, 1)
            w = 0.5 * cot0 * e12[ax]
            lap[i1, ax] += w
            lap[i2, ax] -= w
            w = 0.5 * cot1 * (-e02[ax])
            lap[i2, ax] += w
            lap[i0, ax] -= w
            w = 0.5 * cot2 * e01[ax]
            lap[i0, ax] += w
            lap[i1, ax] -= w

    cdef Py_ssize_t v
    cdef double nlen, mag, dot, mx, my, mz
    for v in range(nv):
        nlen = sqrt(normals[v, 0] ** 2 + normals[v, 1] ** 2 + normals[v, 2] ** 2)
        if nlen == 0.0:
            nlen = 1.0
        for ax in range(3):
            normals[v, ax] /= nlen
        mx = -lap[v, 0] / mixed[v]
        my = -lap[v, 1] / mixed[v]
        mz = -lap[v, 2] / mixed[v]
        mag = sqrt(mx * mx + my * my + mz * mz)
        dot = mx * normals[v, 0] + my * normals[v, 1] + mz * normals[v, 2]
        h[v] = mag if dot >= 0.0 else -mag

    stats = (total_area, sqrt(min_edge_sq), min_quality, min_face_area)
    return normals_arr, h_arr, area_arr, mixed_arr, stats
