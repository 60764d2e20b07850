"""Assertions behind ``experiment ... --check``.

Each function returns a list of ``(name, passed, detail)``.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import spearmanr

from ..numerics import SQRT_PI
from ..scores import parse_rule


def _ordered(a, b):
    """a >= b by point estimate; note how the Wilson intervals relate."""
    (lo_a, hi_a), (lo_b, hi_b) = a.interval, b.interval
    if lo_a > hi_b or lo_b > hi_a:
        note = "separated"
    elif (lo_a <= lo_b and hi_b <= hi_a) or (lo_b <= lo_a and hi_a <= hi_b):
        note = "flag: one interval contains the other"
    else:
        note = "intervals overlap partially"
    return a.prob_correct >= b.prob_correct, f"{a.prob_correct:.3f} vs {b.prob_correct:.3f} ({note})"


def check_volatility(curve, cfg, delta=0.4, small_delta=0.1):
    out = []
    d_lo = min(cfg.delta_grid)
    for rule in ("crps", "scrps", "logs"):
        r = curve.get(rule, d_lo)
        out.append((f"{rule} below 1 at smallest delta", r.prob_correct < 1.0, f"{r.prob_correct:.3f}"))
    if small_delta in cfg.delta_grid:
        s, c = curve.get("scrps", small_delta), curve.get("crps", small_delta)
        ok = s.interval[0] > c.interval[1] and s.prob_correct - c.prob_correct >= 0.05
        out.append((f"scrps beats crps at delta={small_delta}", ok, f"{s.prob_correct:.3f} vs {c.prob_correct:.3f}"))
    if delta in cfg.delta_grid:
        s, c = curve.get("scrps", delta), curve.get("crps", delta)
        ok = s.interval[0] > c.interval[1] and s.prob_correct - c.prob_correct >= 0.05
        out.append((f"scrps - crps >= 0.05, separated, at delta={delta} (known to fail, see docs)", ok,
                    f"{s.prob_correct:.3f} vs {c.prob_correct:.3f}"))
        s, l = curve.get("scrps", delta), curve.get("logs", delta)
        ok = s.interval[0] <= l.interval[1] and l.interval[0] <= s.interval[1]
        out.append((f"scrps and logs overlap at delta={delta}", ok, f"{s.prob_correct:.3f} vs {l.prob_correct:.3f}"))
    return out


def check_spatial(curve, cfg, delta=10.0):
    if delta not in cfg.delta_grid:
        return [(f"delta={delta} in grid", False, "not in delta_grid")]
    rob = [r for r in cfg.rules if r.startswith("rscrps")]
    rcr = [r for r in cfg.rules if r.startswith("rcrps")]
    out = []
    ok, det = _ordered(curve.get("scrps", delta, "clean"), curve.get("crps", delta, "clean"))
    out.append(("clean: scrps >= crps", ok, det))
    if cfg.outlier is not None and rob and rcr:
        lab_s, lab_c = parse_rule(rob[0]).label, parse_rule(rcr[0]).label
        ok, det = _ordered(curve.get(lab_s, delta, "outlier"), curve.get("scrps", delta, "outlier"))
        out.append((f"outlier: {lab_s} >= scrps", ok, det))
        ok, det = _ordered(curve.get(lab_c, delta, "outlier"), curve.get("crps", delta, "outlier"))
        out.append((f"outlier: {lab_c} >= crps", ok, det))
    return out


def check_nbreg(result):
    dc, ds = result.departure(0.9)
    out = [("top-k departure crps >= 3 x scrps", dc >= 3 * ds, f"{dc:.4f} vs {ds:.4f}")]
    rs = spearmanr(np.abs(result.scrps), result.scaled_residual)[0]
    rr = spearmanr(np.abs(result.scrps), result.residual)[0]
    out.append(("|scrps| ranks with scaled residuals (known to fail, see docs)", rs > rr,
                f"rho scaled {rs:.3f}, raw {rr:.3f}"))
    cs = spearmanr(np.abs(result.crps), result.scaled_residual)[0]
    cr = spearmanr(np.abs(result.crps), result.residual)[0]
    out.append(("|crps| ranks with raw residuals", cr > cs, f"rho raw {cr:.3f}, scaled {cs:.3f}"))
    return out


def hard_checks(checks):
    """Checks that gate ``--check``; lines marked as known failures are reported only."""
    return [c for c in checks if "known to fail" not in c[0]]


def check_surface(surfaces, sigma1, sigma2):
    from .surfaces import asymmetry, gap_ratio

    out = []
    for rule in ("scrps", "logs"):
        for kind, surf in (("sigma", surfaces.sigma), ("mu", surfaces.mu)):
            a = asymmetry(surf[rule])
            out.append((f"{rule} {kind} surface symmetric", a <= 0.02, f"asymmetry {a:.2e}"))
    g = gap_ratio("crps", sigma1, sigma2)
    target = sigma2 / sigma1
    out.append(("crps gap ratio ~ sigma2/sigma1", abs(g / target - 1) <= 0.2, f"{g:.4f} vs {target:g}"))
    for rule, surf in surfaces.sigma.items():
        i, j = np.unravel_index(np.argmax(surf), surf.shape)
        c = (surf.shape[0] - 1) // 2
        out.append((f"{rule} maximum at truth", (i, j) == (c, c), f"argmax {(int(i), int(j))}"))
    return out


def check_entropy(trace):
    out = []
    crps = parse_rule("crps").label
    slope = np.polyfit(trace.sd, trace.entropy[crps], 1)[0]
    out.append(("crps entropy slope -1/sqrt(pi)", abs(slope + 1 / SQRT_PI) < 1e-9, f"{slope:.12f}"))
    for r in ("scrps", "logs"):
        if r in trace.entropy:
            A = np.column_stack([np.ones_like(trace.sd), np.log(trace.sd)])
            coef, res, *_ = np.linalg.lstsq(A, trace.entropy[r], rcond=None)
            fit = A @ coef
            ok = np.max(np.abs(fit - trace.entropy[r])) < 1e-9
            out.append((f"{r} entropy affine in log sd", bool(ok), f"slope {coef[1]:.6f}"))
    ratio = trace.residual_sd_ratio("scrps")
    out.append(("scrps residual sd ratio in [0.8, 1.25]", 0.8 <= ratio <= 1.25, f"{ratio:.3f}"))
    return out
