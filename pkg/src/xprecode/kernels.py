"""Hot loops of the mutual-information and MMSE estimators.

Every kernel exists twice: a numba version (``*_nb``) and a vectorised numpy
version (``*_np``). The public names bind to whichever backend
:mod:`xprecode._accel` selected. Both operate on real coordinates; complex
channels are stacked as ``[re, im]`` by the caller.

Notation shared by all kernels: ``means`` is ``(K, D)``, one noiseless
received point per input symbol; noise is i.i.d. ``N(0, s2)`` per real axis
and ``inv2s2 = 1 / (2 * s2)``. For a transmitted index ``u`` and noise ``z``
the kernels evaluate

    log sum_v exp(-(||m_u - m_v + z||^2 - ||z||^2) * inv2s2)

which equals ``log p(y) + ||z||^2 inv2s2 + const``; the ``v == u`` term is
exactly ``exp(0)`` so the sum never underflows to zero.
"""
import numpy as np

from ._accel import HAVE_NUMBA, jit

_CHUNK = 4096
PRUNE = 60.0


def _pairwise(means):
    d = means[:, None, :] - means[None, :, :]
    return d, np.einsum("uvk,uvk->uv", d, d)


# ---------------------------------------------------------------- numpy ---


def gh_logsum_np(means, nodes, weights, inv2s2, half=False):
    """Quadrature average of the log-sum term over all inputs and nodes.

    ``half=True`` asserts ``means[K-1-u] == -means[u]`` and a node grid
    symmetric about zero; only the first half of the inputs is then visited.
    """
    means = np.ascontiguousarray(means, dtype=float)
    K = means.shape[0]
    d, n2 = _pairwise(means)
    acc = 0.0
    for u in range(K // 2 if half else K):
        expo = -(n2[u][None, :] + 2.0 * (nodes @ d[u].T)) * inv2s2
        mx = expo.max(axis=1)
        lse = mx + np.log(np.exp(expo - mx[:, None]).sum(axis=1))
        acc += weights @ lse
    return 2.0 * acc / K if half else acc / K


def mc_logsum_np(means, idx, noise, inv2s2):
    """Per-sample log-sum term for transmitted indices ``idx`` and noise rows."""
    means = np.ascontiguousarray(means, dtype=float)
    out = np.empty(idx.shape[0])
    for lo in range(0, idx.shape[0], _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        d = means[idx[sl]][:, None, :] - means[None, :, :]
        z = noise[sl][:, None, :]
        expo = -np.einsum("svk,svk->sv", d, d + 2.0 * z) * inv2s2
        mx = expo.max(axis=1)
        out[sl] = mx + np.log(np.exp(expo - mx[:, None]).sum(axis=1))
    return out


def mmse_accumulate_np(symbols, means, idx, noise, weights, inv2s2):
    """Weighted sum of error outer products ``e e^H`` with ``e = u - E[u|y]``.

    ``symbols`` is ``(K, m)`` complex, ``idx``/``noise``/``weights`` describe
    the evaluation points (Monte-Carlo draws with equal weights, or a
    quadrature grid repeated over every input).
    """
    means = np.ascontiguousarray(means, dtype=float)
    symbols = np.asarray(symbols, dtype=complex)
    m = symbols.shape[1]
    acc = np.zeros((m, m), dtype=complex)
    for lo in range(0, idx.shape[0], _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        d = means[idx[sl]][:, None, :] - means[None, :, :]
        z = noise[sl][:, None, :]
        expo = -np.einsum("svk,svk->sv", d, d + 2.0 * z) * inv2s2
        expo -= expo.max(axis=1, keepdims=True)
        post = np.exp(expo)
        post /= post.sum(axis=1, keepdims=True)
        err = symbols[idx[sl]] - post @ symbols
        acc += (err * weights[sl][:, None]).T @ err.conj()
    return acc


def gh_logsum_batch_np(pts, maps, nodes, weights, inv2s2, half=False):
    """:func:`gh_logsum_np` for each mapping in ``maps`` (``(C, D, m)``)."""
    out = np.empty(maps.shape[0])
    for c in range(maps.shape[0]):
        out[c] = gh_logsum_np(pts @ maps[c].T, nodes, weights, inv2s2, half)
    return out


# ---------------------------------------------------------------- numba ---


@jit
def gh_logsum_nb(means, nodes, weights, inv2s2, half=False):
    K, D = means.shape
    Q = nodes.shape[0]
    n2 = np.zeros((K, K))
    for u in range(K):
        for v in range(K):
            s = 0.0
            for k in range(D):
                dd = means[u, k] - means[v, k]
                s += dd * dd
            n2[u, v] = s
    nd = np.sqrt(n2)
    zn = np.empty(Q)
    for q in range(Q):
        s = 0.0
        for k in range(D):
            s += nodes[q, k] * nodes[q, k]
        zn[q] = np.sqrt(s)
    expo = np.empty(K)
    acc = 0.0
    for u in range(K // 2 if half else K):
        for q in range(Q):
            mx = -np.inf
            for v in range(K):
                # Cauchy-Schwarz bound: term below exp(-PRUNE) relative to the v == u term
                if (n2[u, v] - 2.0 * nd[u, v] * zn[q]) * inv2s2 > PRUNE:
                    expo[v] = -np.inf
                    continue
                s = 0.0
                for k in range(D):
                    s += (means[u, k] - means[v, k]) * nodes[q, k]
                e = -(n2[u, v] + 2.0 * s) * inv2s2
                expo[v] = e
                if e > mx:
                    mx = e
            tot = 0.0
            for v in range(K):
                tot += np.exp(expo[v] - mx)
            acc += weights[q] * (mx + np.log(tot))
    return 2.0 * acc / K if half else acc / K


@jit
def mc_logsum_nb(means, idx, noise, inv2s2):
    K, D = means.shape
    N = idx.shape[0]
    out = np.empty(N)
    expo = np.empty(K)
    for s in range(N):
        u = idx[s]
        mx = -np.inf
        for v in range(K):
            acc = 0.0
            for k in range(D):
                dd = means[u, k] - means[v, k]
                acc += dd * (dd + 2.0 * noise[s, k])
            e = -acc * inv2s2
            expo[v] = e
            if e > mx:
                mx = e
        tot = 0.0
        for v in range(K):
            tot += np.exp(expo[v] - mx)
        out[s] = mx + np.log(tot)
    return out


@jit
def mmse_accumulate_nb(symbols, means, idx, noise, weights, inv2s2):
    K, D = means.shape
    m = symbols.shape[1]
    N = idx.shape[0]
    acc = np.zeros((m, m), dtype=np.complex128)
    expo = np.empty(K)
    err = np.empty(m, dtype=np.complex128)
    for s in range(N):
        u = idx[s]
        mx = -np.inf
        for v in range(K):
            a = 0.0
            for k in range(D):
                dd = means[u, k] - means[v, k]
                a += dd * (dd + 2.0 * noise[s, k])
            e = -a * inv2s2
            expo[v] = e
            if e > mx:
                mx = e
        tot = 0.0
        for i in range(m):
            err[i] = 0.0
        for v in range(K):
            w = np.exp(expo[v] - mx)
            tot += w
            for i in range(m):
                err[i] += w * symbols[v, i]
        for i in range(m):
            err[i] = symbols[u, i] - err[i] / tot
        w = weights[s]
        for i in range(m):
            for j in range(m):
                acc[i, j] += w * err[i] * np.conj(err[j])
    return acc


@jit
def gh_logsum_batch_nb(pts, maps, nodes, weights, inv2s2, half=False):
    C, D, m = maps.shape
    K = pts.shape[0]
    out = np.empty(C)
    means = np.empty((K, D))
    for c in range(C):
        for k in range(K):
            for i in range(D):
                s = 0.0
                for j in range(m):
                    s += maps[c, i, j] * pts[k, j]
                means[k, i] = s
        out[c] = gh_logsum_nb(means, nodes, weights, inv2s2, half)
    return out


if HAVE_NUMBA:
    gh_logsum = gh_logsum_nb
    gh_logsum_batch = gh_logsum_batch_nb
    mc_logsum = mc_logsum_nb
    mmse_accumulate = mmse_accumulate_nb
else:
    gh_logsum = gh_logsum_np
    gh_logsum_batch = gh_logsum_batch_np
    mc_logsum = mc_logsum_np
    mmse_accumulate = mmse_accumulate_np

BACKEND = "numba" if HAVE_NUMBA else "numpy"
