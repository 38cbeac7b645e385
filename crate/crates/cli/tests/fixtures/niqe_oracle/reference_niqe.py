"""Standalone NIQE used as a cross-check of the Rust implementation.

Written from the NIQE formulation with numpy/scipy/skimage only:
moment-ratio table lookups for the GGD/AGGD fits and a pseudo-inverse for
the pooled covariance. The half scale is computed two ways: a 2x2 box
average, and the bicubic anti-aliased resize of the original MATLAB code.

Running it regenerates the 20 test images in this directory and
reference_scores.json (one score table per half-scale variant).
"""
import io
import json
import os

import numpy as np
import skimage.data
from PIL import Image
from scipy.ndimage import correlate, gaussian_filter
from scipy.special import gamma as G
from skimage.transform import rescale

HERE = os.path.dirname(os.path.abspath(__file__))
PRISTINE = ["astronaut", "coffee", "chelsea", "rocket", "cat", "camera",
            "grass", "gravel", "brick", "coins", "clock"]
BLOCK = 96

GAMMAS = np.arange(0.2, 10.0, 0.001)
GGD_RATIO = G(1 / GAMMAS) * G(3 / GAMMAS) / G(2 / GAMMAS) ** 2
AGGD_RATIO = G(2 / GAMMAS) ** 2 / (G(1 / GAMMAS) * G(3 / GAMMAS))


def gaussian_window():
    x = np.arange(-3, 4)
    g = np.exp(-x ** 2 / (2 * (7 / 6) ** 2))
    w = np.outer(g, g)
    return w / w.sum()


WINDOW = gaussian_window()


def mscn(img):
    mu = correlate(img, WINDOW, mode="nearest")
    var = correlate(img * img, WINDOW, mode="nearest") - mu * mu
    sigma = np.sqrt(np.abs(var))
    return (img - mu) / (sigma + 1), sigma


def ggd(x):
    x = x.ravel()
    s2 = np.mean(x ** 2)
    r = s2 / np.mean(np.abs(x)) ** 2
    return GAMMAS[np.argmin((GGD_RATIO - r) ** 2)], s2


def aggd(x):
    x = x.ravel()
    left, right = x[x < 0], x[x > 0]
    sl = np.sqrt(np.mean(left ** 2))
    sr = np.sqrt(np.mean(right ** 2))
    g = sl / sr
    r = np.mean(np.abs(x)) ** 2 / np.mean(x ** 2)
    rhat = r * (g ** 3 + 1) * (g + 1) / (g ** 2 + 1) ** 2
    a = GAMMAS[np.argmin((AGGD_RATIO - rhat) ** 2)]
    mean = (sr - sl) * G(2 / a) / G(1 / a) * np.sqrt(G(1 / a) / G(3 / a))
    return [a, mean, sl ** 2, sr ** 2]


def block_features(b):
    a, s2 = ggd(b)
    f = [a, s2]
    for sy, sx in [(0, 1), (1, 0), (1, 1), (1, -1)]:
        shifted = np.roll(np.roll(b, -sy, 0), -sx, 1)
        prod = b * shifted
        # drop the wrapped border
        ys = slice(0, b.shape[0] - sy)
        xs = slice(max(0, -sx), b.shape[1] - max(0, sx))
        f += aggd(prod[ys, xs])
    return f


def box_half(g):
    h, w = g.shape[0] // 2 * 2, g.shape[1] // 2 * 2
    g = g[:h, :w]
    return 0.25 * (g[0::2, 0::2] + g[1::2, 0::2] + g[0::2, 1::2] + g[1::2, 1::2])


def bicubic_half(g):
    return rescale(g, 0.5, order=3, anti_aliasing=True, preserve_range=True)


HALF = box_half


def features(gray, sharp_only):
    h, w = gray.shape
    rows, cols = h // BLOCK, w // BLOCK
    gray = gray[: rows * BLOCK, : cols * BLOCK]
    m1, sig = mscn(gray)
    half = HALF(gray)
    m2, _ = mscn(half)
    sharp = np.array([[sig[r * BLOCK:(r + 1) * BLOCK, c * BLOCK:(c + 1) * BLOCK].mean()
                       for c in range(cols)] for r in range(rows)])
    out = []
    for r in range(rows):
        for c in range(cols):
            if sharp_only and not sharp[r, c] > 0.75 * sharp.max():
                continue
            b1 = m1[r * BLOCK:(r + 1) * BLOCK, c * BLOCK:(c + 1) * BLOCK]
            h2 = BLOCK // 2
            b2 = m2[r * h2:(r + 1) * h2, c * h2:(c + 1) * h2]
            if b1.std() < 1e-9 or b2.std() < 1e-9:
                continue
            out.append(block_features(b1) + block_features(b2))
    return np.array(out)


def luminance(rgb):
    rgb = rgb.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def pristine_model():
    feats = []
    for name in PRISTINE:
        im = np.asarray(getattr(skimage.data, name)())
        if im.ndim == 2:
            im = np.stack([im] * 3, -1)
        im = im[..., :3]
        h, w = im.shape[:2]
        for y in range(0, h - 255, 256):
            for x in range(0, w - 255, 256):
                feats.append(features(luminance(im[y:y + 256, x:x + 256]), True))
    f = np.concatenate(feats)
    return f.mean(0), np.cov(f, rowvar=False)


def niqe(gray, model):
    mu_p, cov_p = model
    f = features(gray, False)
    mu, cov = f.mean(0), np.cov(f, rowvar=False)
    d = mu_p - mu
    return float(np.sqrt(d @ np.linalg.pinv((cov_p + cov) / 2) @ d))


def test_images():
    rng = np.random.default_rng(7)
    out = {}
    bases = {"astronaut": (40, 60), "coffee": (8, 100), "rocket": (20, 200),
             "camera": (100, 64), "brick": (64, 10)}
    for name, (y, x) in bases.items():
        im = np.asarray(getattr(skimage.data, name)())
        if im.ndim == 3:
            im = np.round(luminance(im[..., :3]))
        im = im[y:y + 384, x:x + 384].astype(np.float64)
        out[f"{name}_pristine"] = im
        out[f"{name}_noise"] = np.clip(im + rng.normal(0, 25, im.shape), 0, 255)
        out[f"{name}_blur"] = gaussian_filter(im, 2.5)
        buf = io.BytesIO()
        Image.fromarray(im.astype(np.uint8)).save(buf, "JPEG", quality=8)
        out[f"{name}_jpeg"] = np.asarray(Image.open(buf)).astype(np.float64)
    return {k: np.round(v).astype(np.uint8) for k, v in out.items()}


if __name__ == "__main__":
    images = sorted(test_images().items())
    for name, im in images:
        Image.fromarray(im).save(os.path.join(HERE, f"{name}.png"))
    scores = {}
    for label, half in [("box", box_half), ("bicubic", bicubic_half)]:
        HALF = half
        model = pristine_model()
        scores[label] = {n: niqe(im.astype(np.float64), model) for n, im in images}
    for n, _ in images:
        print(f"{n:24s} box {scores['box'][n]:8.4f}  bicubic {scores['bicubic'][n]:8.4f}")
    with open(os.path.join(HERE, "reference_scores.json"), "w") as fh:
        json.dump(scores, fh, indent=1, sort_keys=True)
