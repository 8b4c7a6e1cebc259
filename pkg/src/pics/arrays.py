"""Complex n-d arrays, centered unitary FFTs, and the on-disk array format.

Conventions used throughout the toolbox:

* arrays are complex128,
* the DC component of k-space sits at index ``N // 2`` (zero based) along
  every transformed axis,
* transforms are unitary (``1/sqrt(N)`` per axis), so the inverse FFT is
  also the adjoint.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

FORMAT_TAG = "# pics-array v1"
ELEMENT_KIND = "complex-float64"
_DTYPE = np.dtype("<c16")  # little-endian (re, im) float64 pairs


def _check_axes(x: np.ndarray, axes) -> tuple[int, ...]:
    if axes is None:
        return tuple(range(x.ndim))
    axes = tuple(int(a) for a in axes)
    for a in axes:
        if not -x.ndim <= a < x.ndim:
            raise ValueError(f"axis {a} out of range for {x.ndim}-d array")
    return tuple(a % x.ndim for a in axes)


def fftc(x: np.ndarray, axes=None) -> np.ndarray:
    """Centered unitary forward FFT along ``axes`` (all axes by default).

    Equivalent to the direct sum ``(1/sqrt(N)) sum_m x[m] exp(-2i pi
    (j-c)(m-c)/N)`` with ``c = N//2`` along each transformed axis.
    """
    axes = _check_axes(x, axes)
    x = np.fft.ifftshift(np.asarray(x, dtype=complex), axes=axes)
    x = np.fft.fftn(x, axes=axes, norm="ortho")
    return np.fft.fftshift(x, axes=axes)


def ifftc(x: np.ndarray, axes=None) -> np.ndarray:
    """Centered unitary inverse FFT; adjoint and inverse of :func:`fftc`."""
    axes = _check_axes(x, axes)
    x = np.fft.ifftshift(np.asarray(x, dtype=complex), axes=axes)
    x = np.fft.ifftn(x, axes=axes, norm="ortho")
    return np.fft.fftshift(x, axes=axes)


def resize_center(x: np.ndarray, new_extents) -> np.ndarray:
    """Zero-pad or crop symmetrically about the centered-DC convention.

    The center index ``N // 2`` of every axis is preserved, so
    ``resize_center(resize_center(x, bigger), x.shape) == x``.
    """
    new_extents = tuple(int(n) for n in new_extents)
    if len(new_extents) != x.ndim:
        raise ValueError(
            f"rank mismatch: array is {x.ndim}-d, new extents have rank {len(new_extents)}"
        )
    if any(n < 1 for n in new_extents):
        raise ValueError("extents must be positive")
    out = np.zeros(new_extents, dtype=complex)
    src, dst = [], []
    for old, new in zip(x.shape, new_extents):
        n = min(old, new)
        o0 = old // 2 - n // 2
        n0 = new // 2 - n // 2
        src.append(slice(o0, o0 + n))
        dst.append(slice(n0, n0 + n))
    out[tuple(dst)] = np.asarray(x, dtype=complex)[tuple(src)]
    return out


def _split_paths(path: str) -> tuple[str, str]:
    base, ext = os.path.splitext(path)
    if ext not in (".hdr", ".dat"):
        base = path
    return base + ".hdr", base + ".dat"


def write_array(path: str, x: np.ndarray) -> None:
    """Write ``x`` as a ``<path>.hdr`` / ``<path>.dat`` pair.

    Header: two UTF-8 lines, the format tag and the space-separated
    extents.  Data: little-endian float64 (re, im) pairs, first
    dimension fastest.  Writes are atomic (temp file + rename).
    """
    hdr_path, dat_path = _split_paths(path)
    x = np.asarray(x, dtype=complex)
    header = f"{FORMAT_TAG}\n{' '.join(str(n) for n in x.shape)}\n"
    _atomic_write(hdr_path, header.encode("utf-8"))
    _atomic_write(dat_path, np.asarray(x, dtype=_DTYPE).tobytes(order="F"))


def read_array(path: str) -> np.ndarray:
    """Read an array written by :func:`write_array`."""
    hdr_path, dat_path = _split_paths(path)
    with open(hdr_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != FORMAT_TAG:
        raise ValueError(f"{hdr_path}: not a {FORMAT_TAG!r} header")
    if len(lines) < 2:
        raise ValueError(f"{hdr_path}: missing extents line")
    extents = tuple(int(tok) for tok in lines[1].split())
    if not extents or any(n < 1 for n in extents):
        raise ValueError(f"{hdr_path}: invalid extents {extents}")
    data = np.fromfile(dat_path, dtype=_DTYPE)
    expected = int(np.prod(extents))
    if data.size != expected:
        raise ValueError(
            f"{dat_path}: has {data.size} elements, header promises {expected}"
        )
    return data.reshape(extents, order="F").astype(complex)


def _atomic_write(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-pics-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
