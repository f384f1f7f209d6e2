# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training hot kernels.

Same contract and uniform-draw order as ``_kernels_py``; uniforms come
straight from the numpy BitGenerator backing the caller's Generator, so a
seed determines the chain realizations exactly as in the fallback.

Inner loops convert bit rows to doubles and multiply-accumulate instead of
branching on bits: branches on random bits mispredict half the time and
cost more than the arithmetic they would skip.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport exp, isfinite, log1p
from libc.stdlib cimport free, malloc
from libc.string cimport memset

import numpy as np

from numpy.random cimport bitgen_t

COMPILED = True

MODE_CD = 0
MODE_WCD = 1
MODE_PCD = 2
MODE_WPCD = 3

cdef int _MODE_WCD = 1
cdef int _MODE_PCD = 2
cdef int _MODE_WPCD = 3


cdef bitgen_t *_get_bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double t
    if z >= 0.0:
        t = exp(-z)
        return 1.0 / (1.0 + t)
    t = exp(z)
    return t / (1.0 + t)


cdef inline void _sig_softplus(double z, double *sig, double *sp) noexcept nogil:
    # Shares one exp between sigmoid(z) and softplus(z); the z >= 0 branch
    # is the overflow-safe form z + log1p(e^-z).
    cdef double t
    if z >= 0.0:
        t = exp(-z)
        sig[0] = 1.0 / (1.0 + t)
        sp[0] = z + log1p(t)
    else:
        t = exp(z)
        sig[0] = t / (1.0 + t)
        sp[0] = log1p(t)


cdef void _gibbs_steps(double[::1] b, double[::1] c, double[:, ::1] W,
                       unsigned char[:, ::1] vis, Py_ssize_t k,
                       unsigned char *h, double *xd, double *pre,
                       bitgen_t *bg) noexcept nogil:
    """k block Gibbs steps over all chains; per step all hidden draws
    (chain-major) come before all visible draws.

    h holds n*n_h sample bytes; xd and pre hold max(n_v, n_h) doubles.
    """
    cdef Py_ssize_t n = vis.shape[0]
    cdef Py_ssize_t n_v = vis.shape[1]
    cdef Py_ssize_t n_h = c.shape[0]
    cdef Py_ssize_t step, i, j, v
    cdef double acc, hj
    for step in range(k):
        for i in range(n):
            for v in range(n_v):
                xd[v] = vis[i, v]
            for j in range(n_h):
                acc = c[j]
                for v in range(n_v):
                    acc += W[j, v] * xd[v]
                pre[j] = acc
            for j in range(n_h):
                h[i * n_h + j] = bg.next_double(bg.state) < _sigmoid(pre[j])
        for i in range(n):
            for v in range(n_v):
                pre[v] = b[v]
            for j in range(n_h):
                hj = <double> h[i * n_h + j]
                for v in range(n_v):
                    pre[v] += W[j, v] * hj
            for v in range(n_v):
                vis[i, v] = bg.next_double(bg.state) < _sigmoid(pre[v])


def gibbs_chunk(double[::1] b, double[::1] c, double[:, ::1] W,
                unsigned char[:, ::1] vis, Py_ssize_t k, object rng):
    """Advance N parallel Gibbs chains by k block steps, in place."""
    cdef Py_ssize_t n = vis.shape[0]
    cdef Py_ssize_t n_v = vis.shape[1]
    cdef Py_ssize_t n_h = c.shape[0]
    if W.shape[0] != n_h or W.shape[1] != n_v or b.shape[0] != n_v:
        raise ValueError("parameter/state shape mismatch")
    if n == 0 or k <= 0:
        return np.asarray(vis)
    cdef Py_ssize_t wide = n_v if n_v > n_h else n_h
    cdef bitgen_t *bg = _get_bitgen(rng)
    cdef unsigned char *h = <unsigned char *> malloc(n * n_h)
    cdef double *buf = <double *> malloc(2 * wide * sizeof(double))
    if h == NULL or buf == NULL:
        free(h)
        free(buf)
        raise MemoryError()
    lock = rng.bit_generator.lock
    try:
        with lock:
            with nogil:
                _gibbs_steps(b, c, W, vis, k, h, buf, buf + wide, bg)
    finally:
        free(h)
        free(buf)
    return np.asarray(vis)


cdef void _phase_sums(double[::1] c, double[:, ::1] W,
                      unsigned char[:, ::1] states, double *weights,
                      double *acc_b, double *acc_c, double *acc_w,
                      double *xd, double *sig_in) noexcept nogil:
    """Weighted sums of (x, sigma(c + Wx), sigma x^t); unsigned convention.

    xd holds n_v doubles of scratch. sig_in, when non-NULL, supplies
    precomputed per-state hidden activations (M x n_h).
    """
    cdef Py_ssize_t m = states.shape[0]
    cdef Py_ssize_t n_v = states.shape[1]
    cdef Py_ssize_t n_h = c.shape[0]
    cdef Py_ssize_t i, j, v
    cdef double w, acc, s, ws
    memset(acc_b, 0, n_v * sizeof(double))
    memset(acc_c, 0, n_h * sizeof(double))
    memset(acc_w, 0, n_h * n_v * sizeof(double))
    for i in range(m):
        w = weights[i]
        for v in range(n_v):
            xd[v] = states[i, v]
            acc_b[v] += w * xd[v]
        for j in range(n_h):
            if sig_in != NULL:
                s = sig_in[i * n_h + j]
            else:
                acc = c[j]
                for v in range(n_v):
                    acc += W[j, v] * xd[v]
                s = _sigmoid(acc)
            acc_c[j] += w * s
            ws = w * s
            for v in range(n_v):
                acc_w[j * n_v + v] += ws * xd[v]


def update_step(double[::1] b, double[::1] c, double[:, ::1] W,
                double[::1] vel_b, double[::1] vel_c, double[:, ::1] vel_W,
                unsigned char[:, ::1] batch, double[::1] data_weights,
                int mode, Py_ssize_t k, object chains_obj,
                double eta, double momentum, double weight_decay, object rng):
    """One in-place gradient-ascent update; see _kernels_py.update_step."""
    cdef Py_ssize_t n_v = b.shape[0]
    cdef Py_ssize_t n_h = c.shape[0]
    cdef Py_ssize_t nb = batch.shape[0]
    cdef unsigned char[:, ::1] states
    cdef Py_ssize_t k_eff
    cdef bint weighted = mode == _MODE_WCD or mode == _MODE_WPCD
    cdef bint persistent = mode == _MODE_PCD or mode == _MODE_WPCD

    if persistent:
        states = chains_obj
        k_eff = 1
    else:
        recon = np.empty((nb, n_v), dtype=np.uint8)
        states = recon
        k_eff = k
    cdef Py_ssize_t m = states.shape[0]
    if nb == 0 or m == 0:
        raise ValueError("empty batch or chain set")
    if data_weights.shape[0] != nb or states.shape[1] != n_v:
        raise ValueError("shape mismatch")

    cdef Py_ssize_t wide = n_v if n_v > n_h else n_h
    cdef bitgen_t *bg = _get_bitgen(rng)
    cdef double *scratch = <double *> malloc(
        (2 * wide + 2 * n_v + 2 * n_h + 2 * n_h * n_v + 2 * m + m * n_h)
        * sizeof(double))
    cdef unsigned char *hbuf = <unsigned char *> malloc(m * n_h)
    if scratch == NULL or hbuf == NULL:
        free(scratch)
        free(hbuf)
        raise MemoryError()
    cdef double *xd = scratch
    cdef double *pre = xd + wide
    cdef double *pos_b = pre + wide
    cdef double *pos_c = pos_b + n_v
    cdef double *pos_w = pos_c + n_h
    cdef double *neg_b = pos_w + n_h * n_v
    cdef double *neg_c = neg_b + n_v
    cdef double *neg_w = neg_c + n_h
    cdef double *wneg = neg_w + n_h * n_v
    cdef double *neg_free = wneg + m
    cdef double *sig = neg_free + m
    cdef Py_ssize_t i, j, v
    cdef double acc, s, sp, fe, fmax, fsum
    cdef bint finite = True

    lock = rng.bit_generator.lock
    try:
        with lock:
            with nogil:
                # positive phase over the data batch
                _phase_sums(c, W, batch, &data_weights[0],
                            pos_b, pos_c, pos_w, xd, NULL)

                # negative states: persistent chains advanced one step, or
                # k-step reconstructions of the batch
                if not persistent:
                    for i in range(nb):
                        for v in range(n_v):
                            states[i, v] = batch[i, v]
                _gibbs_steps(b, c, W, states, k_eff, hbuf, xd, pre, bg)

                # hidden activations of the negative states; free energies
                # only matter for the weighted modes
                for i in range(m):
                    fe = 0.0
                    for v in range(n_v):
                        xd[v] = states[i, v]
                    for j in range(n_h):
                        acc = c[j]
                        for v in range(n_v):
                            acc += W[j, v] * xd[v]
                        if weighted:
                            _sig_softplus(acc, &s, &sp)
                            fe += sp
                        else:
                            s = _sigmoid(acc)
                        sig[i * n_h + j] = s
                    if weighted:
                        for v in range(n_v):
                            fe += b[v] * xd[v]
                        neg_free[i] = fe

                # negative-phase weights: softmax of -FreeEnergy, or uniform
                if weighted:
                    fmax = neg_free[0]
                    for i in range(1, m):
                        if neg_free[i] > fmax:
                            fmax = neg_free[i]
                    fsum = 0.0
                    for i in range(m):
                        wneg[i] = exp(neg_free[i] - fmax)
                        fsum += wneg[i]
                    for i in range(m):
                        wneg[i] /= fsum
                else:
                    for i in range(m):
                        wneg[i] = 1.0 / m

                _phase_sums(c, W, states, wneg, neg_b, neg_c, neg_w, xd, sig)

                # heavy-ball step on the ascent direction, decay on W only;
                # the decay term reads the pre-update weight and stays out
                # of the velocity
                for v in range(n_v):
                    vel_b[v] = momentum * vel_b[v] + eta * (pos_b[v] - neg_b[v])
                    b[v] += vel_b[v]
                    finite &= isfinite(b[v])
                for j in range(n_h):
                    vel_c[j] = momentum * vel_c[j] + eta * (pos_c[j] - neg_c[j])
                    c[j] += vel_c[j]
                    finite &= isfinite(c[j])
                for j in range(n_h):
                    for v in range(n_v):
                        vel_W[j, v] = (momentum * vel_W[j, v]
                                       + eta * (pos_w[j * n_v + v] - neg_w[j * n_v + v]))
                        W[j, v] += vel_W[j, v] - eta * weight_decay * W[j, v]
                        finite &= isfinite(W[j, v])
    finally:
        free(scratch)
        free(hbuf)
    return bool(finite)
