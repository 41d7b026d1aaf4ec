"""Pure-Python/numpy versions of the compiled kernels in _kernels.pyx."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def block_sq_distances(host, block, stride):
    host = np.ascontiguousarray(host, dtype=np.float64)
    block = np.ascontiguousarray(block, dtype=np.float64)
    m0, m1 = block.shape
    if stride < 1 or m0 > host.shape[0] or m1 > host.shape[1]:
        raise ValueError("invalid block geometry")
    nr = (host.shape[0] - m0) // stride + 1
    nc = (host.shape[1] - m1) // stride + 1
    out = np.empty((nr, nc))
    # one band of rows at a time bounds memory at nc * m0 * m1
    for a in range(nr):
        band = host[a * stride : a * stride + m0]
        windows = sliding_window_view(band, (m0, m1))[0, ::stride][:nc]
        diff = windows - block
        out[a] = np.einsum("kij,kij->k", diff, diff)
    return out


def largest_true_rectangle(mask):
    mask = np.asarray(mask, dtype=bool)
    rows, cols = mask.shape
    heights = [0] * cols
    best = (0, 0, 0, 0, 0)  # area, top, left, height, width
    for r in range(rows):
        line = mask[r].tolist()
        for j in range(cols):
            heights[j] = heights[j] + 1 if line[j] else 0
        stack = []
        for j in range(cols + 1):
            cur = heights[j] if j < cols else 0
            while stack and heights[stack[-1]] >= cur:
                h = heights[stack.pop()]
                if h == 0:
                    continue
                left = stack[-1] + 1 if stack else 0
                width = j - left
                top = r - h + 1
                area = h * width
                if area > best[0] or (area == best[0] and (top, left) < (best[1], best[2])):
                    best = (area, top, left, h, width)
            stack.append(j)
    return best[1], best[2], best[3], best[4]
