"""Regenerate consistency.json from closed forms, without importing edmlab.

The pseudo-state model is p(s) ∝ 1 / sum_a exp(f[s, a]) on the coupled family
f[s1] = (0, t), f[s2] = (0, k t). Log-probabilities are written out by hand and
differentiated by central differences; the EDM fixed point is found by plain
bisection on the resulting total loss gradient.
"""

import json
import math
from pathlib import Path

K, THETA_E, W = 0.5, 1.0, (0.5, 0.5)


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def log_pseudo(t, k, s):
    z1, z2 = 1.0 + math.exp(t), 1.0 + math.exp(k * t)
    own = (z1, z2)[s]
    return -math.log(own) - math.log(1.0 / z1 + 1.0 / z2)


def edm_loss(t, k=K, te=THETA_E, w=W):
    loss = 0.0
    for s, (scale, ws) in enumerate(zip((1.0, k), w)):
        q = sig(scale * te)
        p = sig(scale * t)
        loss -= ws * (q * math.log(p) + (1 - q) * math.log(1 - p))
        loss -= ws * log_pseudo(t, k, s)
    return loss


def deriv(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


def bisect(f, lo, hi, tol=1e-13):
    flo = f(lo)
    assert flo * f(hi) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def main():
    grad = lambda t: deriv(edm_loss, t)
    fixed = bisect(grad, 0.0, THETA_E)
    s1 = deriv(lambda t: log_pseudo(t, K, 0), THETA_E)
    s2 = deriv(lambda t: log_pseudo(t, K, 1), THETA_E)
    golden = {
        "k": K,
        "theta_expert": THETA_E,
        "weights": list(W),
        "edm_fixed_point": fixed,
        "edm_total_grad_at_expert": grad(THETA_E),
        "grad_log_pseudo_s1_at_expert": s1,
        "grad_log_pseudo_s2_at_expert": s2,
        "bc_loss_grad_at_zero": -(0.5 * (sig(1) - 0.5) + 0.5 * K * (sig(K) - 0.5)),
        "knife_edge_w1_over_w2": -s2 / s1,
    }
    path = Path(__file__).with_name("consistency.json")
    path.write_text(json.dumps(golden, indent=2) + "\n")
    print(json.dumps(golden, indent=2))


if __name__ == "__main__":
    main()
