"""Extended-precision reference values frozen into the Rust tests.

Run with `python3 closed_forms.py`; every printed value is pasted verbatim
into the test that cites it. Uses mpmath at 50 significant digits and
evaluates each closed form directly, independent of the Rust code paths.
"""
import numpy as np
from mpmath import mp, mpf, log, sqrt, e, gamma, pi, binomial

mp.dps = 50


def mixed_norm(rows, p, q):
    total = mpf(0)
    for row in rows:
        inner = sum(abs(mpf(v)) ** q for v in row)
        total += inner ** (mpf(p) / q)
    return total ** (1 / mpf(p))


def show(name, value):
    print(f"{name} = {mp.nstr(value, 20)}")


# fixed 4x4 draw, numpy seed 7
draw = np.random.default_rng(7).standard_normal((4, 4))
print("draw =", [[repr(float(v)) for v in row] for row in draw])
show("mixed_norm_seed7_p05_q15", mixed_norm(draw.tolist(), mpf("0.5"), mpf("1.5")))

# bound_outer m=16 b=8 d=4 p=1 q=2 C=1
show("bound_outer_16_8_4", sqrt((log(e * mpf(8) / 16) + 4) / 16))
# bound_flat n=1024 m=64
show("bound_flat_1024_64", sqrt(log(e * mpf(1024) / 64) / 64))
# bound_mixed b=64 d=64 m=2048 p=1 q=1/2
L = log(e * mpf(64 * 64) / 2048)
show("bound_mixed_inner_branch", mpf(64) ** (mpf(1) / 2 - 1) * (64 * L / 2048) ** (2 - mpf(1) / 2))
# lower_bound_outer p=1 q=2 c=1
show("lower_outer_m1_b8_d8", min(mpf(1), mpf(1) / 2 * (log(mpf(8)) + mpf(8) / (8 * e))) ** mpf("0.5"))
show("lower_outer_m64_b64_d16", min(mpf(1), mpf(1) / 2 * (log(mpf(1)) + mpf(16) / (8 * e)) / 64) ** mpf("0.5"))
# implied measurement counts, D = c, C = 1
factor = e / (1 + log(e))
show("implied_outer_s2_b8_d2", factor * 2 * log(e * 8 * e ** 2 / 2))
show("implied_inner_t2_b4_d16", 4 * factor * 2 * log(e * 4 * 16 / 2))
# width upper formula s=1 d=100 b=2
show("width_upper_s1_d100_b2", sqrt(log(2 * e)) + 10)
# Gaussian norm means
for m in (1, 2, 3, 10, 100):
    show(f"gaussian_norm_mean_{m}", sqrt(2) * gamma(mpf(m + 1) / 2) / gamma(mpf(m) / 2))


# block dimension: cube-overlap count, enumerated directly
def a_count(j):
    # k with 2^-j [k-1, k+1] meeting [0, 1]: k-1 <= 2^j and k+1 >= 0
    return sum(1 for k in range(-5, 2 ** j + 5) if k - 1 <= 2 ** j and k + 1 >= 0)


def block_dim(mu, d):
    if d == 1:
        return a_count(mu)
    return sum(a_count(j) * block_dim(mu - j, d - 1) for j in range(mu + 1))


D10 = block_dim(10, 2)
print("block_dim_10_2 =", D10)
blocks = binomial(11, 1)
inner = mpf(D10) / blocks
m = mpf(2) ** 10
show("impr_mu10", mpf(2) ** (-mpf("0.3") * 10) * min(mpf(1), (log(e * blocks / m) + inner) / m) ** mpf("0.5"))
