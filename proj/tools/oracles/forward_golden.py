"""Float64 NumPy forward pass of the steering network for fixed analytic
weights and image. The C++ tests rebuild the same inputs from the formulas."""

import sys

import numpy as np

CONV = [(24, 5, 2), (36, 5, 2), (48, 5, 2), (64, 3, 1), (64, 3, 1)]
DENSE = [100, 50, 10, 1]


def weight(layer, j, fan_in):
    return 2.0 / np.sqrt(fan_in) * np.sin(0.7 * j + 1.3 * layer + 0.1)


def bias(layer, j):
    return 0.01 * np.cos(0.3 * j + layer)


def image(variant):
    r = np.arange(66)[:, None]
    c = np.arange(200)[None, :]
    return ((r * 37 + c * 11 + (r * c) % 7 + 53 * variant) % 256).astype(np.float64)


def conv(x, w, b, stride):
    cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    oh, ow = (h - k) // stride + 1, (wd - k) // stride + 1
    out = np.empty((cout, oh, ow))
    for i in range(oh):
        for j in range(ow):
            patch = x[:, i * stride:i * stride + k, j * stride:j * stride + k]
            out[:, i, j] = np.tensordot(w, patch, axes=([1, 2, 3], [0, 1, 2])) + b
    return out


def forward(img):
    x = (img / 127.5 - 1.0)[None]
    layer = 0
    cin = 1
    for cout, k, s in CONV:
        n = cout * cin * k * k
        w = weight(layer, np.arange(n), cin * k * k).reshape(cout, cin, k, k)
        x = np.maximum(conv(x, w, bias(layer, np.arange(cout)), s), 0.0)
        cin = cout
        layer += 1
    v = x.reshape(-1)
    for idx, units in enumerate(DENSE):
        w = weight(layer, np.arange(units * v.size), v.size).reshape(units, v.size)
        v = w @ v + bias(layer, np.arange(units))
        if idx + 1 < len(DENSE):
            v = np.maximum(v, 0.0)
        layer += 1
    return float(v[0])


def main(out):
    with open(out, "w") as f:
        for variant in range(3):
            f.write(f"{variant} {forward(image(variant)):.17g}\n")


if __name__ == "__main__":
    main(sys.argv[1])
