# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: patch resampling, descriptors, hinge-loss SGD.

Mirrors ``reference.py`` expression for expression; see that module for the
semantic documentation. Discrete decisions (orientation bins, histogram
bins, reflection) are bit-identical to the reference.
"""

from libc.math cimport cos, floor, sin, sqrt

import numpy as np

DEF PATCH = 32
DEF N_BINS = 8
DEF CELL = 8
DEF GRID = 4
DEF N_CELLS = 16
DEF GRAD_DIM = 512
DEF COLOR_BINS = 16
DEF COLOR_DIM = 48

cdef double BLOCK_CLIP = 0.2
cdef double NORM_EPS = 1e-12
cdef double PI = 3.141592653589793

cdef double[7] ORIENT_COS
cdef double[7] ORIENT_SIN
cdef int _k
for _k in range(1, N_BINS):
    ORIENT_COS[_k - 1] = cos(_k * (PI / 8.0))
    ORIENT_SIN[_k - 1] = sin(_k * (PI / 8.0))


cdef inline Py_ssize_t _reflect(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t period = 2 * n
    i = i % period
    if i < 0:
        i += period
    if i >= n:
        i = period - 1 - i
    return i


def extract_patches(double[:, ::1] gray, double[:, :, ::1] rgb, double[:, ::1] boxes):
    cdef Py_ssize_t n = boxes.shape[0]
    cdef Py_ssize_t h_img = gray.shape[0]
    cdef Py_ssize_t w_img = gray.shape[1]
    gray_out = np.empty((n, PATCH, PATCH), dtype=np.float64)
    rgb_out = np.empty((n, PATCH, PATCH, 3), dtype=np.float64)
    cdef double[:, :, ::1] gp = gray_out
    cdef double[:, :, :, ::1] rp = rgb_out

    cdef Py_ssize_t k, i, j, c
    cdef Py_ssize_t xa[PATCH]
    cdef Py_ssize_t xb[PATCH]
    cdef double tx[PATCH]
    cdef Py_ssize_t ya, yb, x0, y0
    cdef double cx, cy, w, h, x1, y1, u, sx, sy, f, ty, top, bot

    with nogil:
        for k in range(n):
            cx = boxes[k, 0]
            cy = boxes[k, 1]
            w = boxes[k, 2]
            h = boxes[k, 3]
            x1 = cx - 0.5 * w
            y1 = cy - 0.5 * h
            for j in range(PATCH):
                u = (j + 0.5) / PATCH
                sx = x1 + u * w - 0.5
                f = floor(sx)
                x0 = <Py_ssize_t> f
                tx[j] = sx - f
                xa[j] = _reflect(x0, w_img)
                xb[j] = _reflect(x0 + 1, w_img)
            for i in range(PATCH):
                u = (i + 0.5) / PATCH
                sy = y1 + u * h - 0.5
                f = floor(sy)
                y0 = <Py_ssize_t> f
                ty = sy - f
                ya = _reflect(y0, h_img)
                yb = _reflect(y0 + 1, h_img)
                for j in range(PATCH):
                    top = (1.0 - tx[j]) * gray[ya, xa[j]] + tx[j] * gray[ya, xb[j]]
                    bot = (1.0 - tx[j]) * gray[yb, xa[j]] + tx[j] * gray[yb, xb[j]]
                    gp[k, i, j] = (1.0 - ty) * top + ty * bot
                    for c in range(3):
                        top = (1.0 - tx[j]) * rgb[ya, xa[j], c] + tx[j] * rgb[ya, xb[j], c]
                        bot = (1.0 - tx[j]) * rgb[yb, xa[j], c] + tx[j] * rgb[yb, xb[j], c]
                        rp[k, i, j, c] = (1.0 - ty) * top + ty * bot

    return gray_out, rgb_out


def grad_descriptors(double[:, :, ::1] patches):
    cdef Py_ssize_t n = patches.shape[0]
    out = np.zeros((n, GRAD_DIM), dtype=np.float64)
    cdef double[:, ::1] ov = out

    cdef Py_ssize_t k, i, j, b, t, bi, bj, slot, cell, base
    cdef Py_ssize_t im, ip, jm, jp
    cdef double gx, gy, mag, s, norm, val
    cdef double hist[N_CELLS][N_BINS]
    cdef double block[4 * N_BINS]

    with nogil:
        for k in range(n):
            for cell in range(N_CELLS):
                for b in range(N_BINS):
                    hist[cell][b] = 0.0
            for i in range(PATCH):
                im = i - 1 if i > 0 else 0
                ip = i + 1 if i < PATCH - 1 else PATCH - 1
                for j in range(PATCH):
                    jm = j - 1 if j > 0 else 0
                    jp = j + 1 if j < PATCH - 1 else PATCH - 1
                    gx = (patches[k, i, jp] - patches[k, i, jm]) * 0.5
                    gy = (patches[k, ip, j] - patches[k, im, j]) * 0.5
                    mag = sqrt(gx * gx + gy * gy)
                    if gy < 0.0 or (gy == 0.0 and gx < 0.0):
                        gx = -gx
                        gy = -gy
                    b = 0
                    for t in range(N_BINS - 1):
                        if ORIENT_COS[t] * gy - ORIENT_SIN[t] * gx >= 0.0:
                            b += 1
                    hist[(i // CELL) * GRID + j // CELL][b] += mag
            for bi in range(GRID):
                for bj in range(GRID):
                    for slot in range(4):
                        cell = ((bi + (slot >> 1)) % GRID) * GRID + (bj + (slot & 1)) % GRID
                        for b in range(N_BINS):
                            block[slot * N_BINS + b] = hist[cell][b]
                    s = 0.0
                    for t in range(4 * N_BINS):
                        s += block[t] * block[t]
                    norm = sqrt(s)
                    if norm < NORM_EPS:
                        norm = NORM_EPS
                    s = 0.0
                    for t in range(4 * N_BINS):
                        val = block[t] / norm
                        if val > BLOCK_CLIP:
                            val = BLOCK_CLIP
                        block[t] = val
                        s += val * val
                    norm = sqrt(s)
                    if norm < NORM_EPS:
                        norm = NORM_EPS
                    base = (bi * GRID + bj) * 4 * N_BINS
                    for t in range(4 * N_BINS):
                        ov[k, base + t] = block[t] / norm

    return out


def color_descriptors(double[:, :, :, ::1] patches):
    cdef Py_ssize_t n = patches.shape[0]
    out = np.zeros((n, COLOR_DIM), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t k, i, j, c, b
    cdef double inv = 1.0 / (PATCH * PATCH)

    with nogil:
        for k in range(n):
            for i in range(PATCH):
                for j in range(PATCH):
                    for c in range(3):
                        b = <Py_ssize_t> (patches[k, i, j, c] * 16.0)
                        if b > COLOR_BINS - 1:
                            b = COLOR_BINS - 1
                        ov[k, c * COLOR_BINS + b] += 1.0
            for b in range(COLOR_DIM):
                ov[k, b] *= inv

    return out


def hinge_sgd(double[::1] w, double bias, double[:, ::1] X, double[::1] y,
              Py_ssize_t epochs, double lr, double reg):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = w.shape[0]
    cdef Py_ssize_t e, i, j, k = 0
    cdef double eta, margin, dot, yi, scale, coef

    with nogil:
        for e in range(epochs):
            for i in range(n):
                eta = lr / (1.0 + reg * lr * k)
                yi = y[i]
                dot = 0.0
                for j in range(d):
                    dot += X[i, j] * w[j]
                margin = yi * (dot + bias)
                scale = 1.0 - eta * reg
                if margin < 1.0:
                    coef = eta * yi
                    for j in range(d):
                        w[j] = w[j] * scale + coef * X[i, j]
                    bias += eta * yi
                else:
                    for j in range(d):
                        w[j] = w[j] * scale
                k += 1
    return bias
