#!/usr/bin/env python3
"""Regenerate the bundled data files.

The two .data files in this directory are synthetic stand-ins that mimic the
column layout and rough per-class statistics of the classic wine and breast
cancer (diagnostic) tables, so the CLI adapters can be exercised offline.
They are NOT the original measurements. Run this script to rebuild them
byte-identically (fixed seed, stdlib RNG only).
"""

import math
import random


def correlated(rng, means, sds, chol_rows):
    """Draw one multivariate normal via a Cholesky factor given as rows."""
    z = [rng.gauss(0.0, 1.0) for _ in means]
    out = []
    for i, row in enumerate(chol_rows):
        acc = sum(c * z[j] for j, c in enumerate(row))
        out.append(means[i] + sds[i] * acc)
    return out


def fmt(x, nd):
    s = f"{x:.{nd}f}"
    # trim trailing zeros but keep at least one decimal
    if "." in s:
        s = s.rstrip("0")
        if s.endswith("."):
            s += "0"
    return s


def make_wine(path):
    rng = random.Random(20260814)
    # class sizes mirror the real table: 59 / 71 / 48
    sizes = [59, 71, 48]
    # per-class means for the 13 features:
    # alcohol, malic_acid, ash, alcalinity, magnesium, phenols, flavanoids,
    # nonflav_phenols, proanthocyanins, color_intensity, hue, od280, proline
    means = [
        [13.74, 2.01, 2.46, 17.0, 106.0, 2.84, 2.98, 0.29, 1.90, 5.53, 1.06, 3.16, 1116.0],
        [12.28, 1.93, 2.24, 20.2, 94.5, 2.26, 2.08, 0.36, 1.63, 3.09, 1.06, 2.79, 520.0],
        [13.15, 3.33, 2.44, 21.4, 99.3, 1.68, 0.78, 0.45, 1.15, 7.40, 0.68, 1.68, 630.0],
    ]
    sds = [
        [0.46, 0.69, 0.23, 2.5, 10.5, 0.34, 0.40, 0.07, 0.41, 1.24, 0.12, 0.36, 221.0],
        [0.54, 1.02, 0.32, 3.3, 16.8, 0.55, 0.71, 0.12, 0.60, 0.92, 0.20, 0.50, 157.0],
        [0.53, 1.09, 0.18, 2.3, 10.9, 0.36, 0.29, 0.12, 0.41, 2.31, 0.11, 0.27, 115.0],
    ]
    # mild positive coupling among the first five features (shared factor)
    rows = []
    for cls in range(3):
        for _ in range(sizes[cls]):
            f = [0.0] * 13
            shared = rng.gauss(0.0, 1.0)
            for j in range(13):
                w = 0.45 if j < 5 else 0.25
                e = rng.gauss(0.0, 1.0)
                val = means[cls][j] + sds[cls][j] * (w * shared + math.sqrt(1 - w * w) * e)
                f[j] = val
            # keep everything positive and in plausible ranges
            f[0] = max(11.0, min(15.0, f[0]))
            f[1] = max(0.7, f[1])
            f[2] = max(1.3, min(3.3, f[2]))
            f[3] = max(10.5, min(30.0, f[3]))
            f[4] = max(70.0, min(162.0, f[4]))
            for j in range(5, 12):
                f[j] = max(0.1, f[j])
            f[12] = max(278.0, f[12])
            nd = [2, 2, 2, 1, 0, 2, 2, 2, 2, 2, 2, 2, 0]
            cells = [str(cls + 1)] + [fmt(f[j], nd[j]) for j in range(13)]
            rows.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def make_wdbc(path):
    rng = random.Random(5690312)
    # 357 benign / 212 malignant, interleaved deterministically
    labels = ["B"] * 357 + ["M"] * 212
    rng.shuffle(labels)
    # radius, texture, perimeter, area, smoothness then 25 filler columns
    base = {
        "B": dict(radius=(12.15, 1.78), texture=(17.9, 4.0), smooth=(0.0925, 0.0134)),
        "M": dict(radius=(17.46, 3.20), texture=(21.6, 3.8), smooth=(0.1029, 0.0126)),
    }
    rows = []
    next_id = 842302
    for lab in labels:
        p = base[lab]
        r = max(6.8, rng.gauss(*p["radius"]))
        tex = max(9.7, rng.gauss(*p["texture"]))
        # perimeter and area track the radius closely (near-geometric relation)
        per = 2.0 * math.pi * r * rng.uniform(1.02, 1.10) / 2.0 * 2.0
        per = 2.0 * math.pi * (r / 2.0) * 2.0 * rng.uniform(1.015, 1.075)
        area = math.pi * (r / 2.0) ** 2 * 4.0 * rng.uniform(0.955, 1.03)
        smooth = max(0.05, rng.gauss(*p["smooth"]))
        feats = [r, tex, per, area, smooth]
        # filler: compactness..fractal dimension for mean/se/worst blocks
        filler_means = [0.104, 0.089, 0.049, 0.181, 0.063,
                        0.405, 1.22, 2.87, 40.3, 0.007,
                        0.025, 0.032, 0.012, 0.021, 0.0038,
                        16.3, 25.7, 107.3, 880.6, 0.132,
                        0.254, 0.272, 0.115, 0.290, 0.084]
        filler_sds = [0.053, 0.080, 0.039, 0.027, 0.007,
                      0.277, 0.55, 2.02, 45.5, 0.003,
                      0.018, 0.030, 0.006, 0.008, 0.0026,
                      4.83, 6.15, 33.6, 569.4, 0.023,
                      0.157, 0.209, 0.066, 0.062, 0.018]
        scale = 1.18 if lab == "M" else 0.92
        for m, s in zip(filler_means, filler_sds):
            feats.append(max(0.0, rng.gauss(m * scale, s)))
        cells = [str(next_id), lab]
        nd = [2, 2, 2, 1, 4] + [4] * 25
        for j, v in enumerate(feats):
            cells.append(fmt(v, nd[j]))
        rows.append(",".join(cells))
        next_id += rng.randrange(3, 9000)
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    import os

    here = os.path.dirname(os.path.abspath(__file__))
    make_wine(os.path.join(here, "wine.data"))
    make_wdbc(os.path.join(here, "wdbc.data"))
    print("wrote wine.data and wdbc.data")
