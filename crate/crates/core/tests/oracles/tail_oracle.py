"""Reference tail ratios and exact/asymptotic ratios, by mpmath quadrature.

Run: python3 tail_oracle.py
"""
import mpmath as mp

from mixture_oracle import frechet, lognormal, uniform, scaled_beta, integral

mp.mp.dps = 40


def ratio_gap(model, n, limit):
    pdf, sf, x0 = model
    return abs(integral(sf, n + 1, x0) / integral(sf, n, x0) - limit)


print("# |F(n+1)/F(n) - limit| at the reference n")
print("frechet_1_1", 2000, mp.nstr(ratio_gap(frechet(1, 1), 2000, 1), 17))
print("lognormal_0_1", 2000, mp.nstr(ratio_gap(lognormal(0, 1), 2000, 1), 17))
print("uniform_5", 200, mp.nstr(ratio_gap(uniform(5), 200, 0), 17))


def negbin_sf(n, a, b):
    term = lambda m: mp.e ** (mp.loggamma(m + a) - mp.loggamma(a) - mp.loggamma(m + 1)) * (b / (1 + b)) ** a * (1 + b) ** -m
    return mp.fsum(term(m) for m in range(n + 1, n + 600))


for (a, b, n) in [(2, 1, 800), (2, 2, 500)]:
    gap = abs(negbin_sf(n + 1, a, b) / negbin_sf(n, a, b) - 1 / mp.mpf(1 + b))
    print(f"gamma_{a}_{b}", n, mp.nstr(gap, 17))

print("# exact / asymptotic for Weibull-domain mixing")
for name, model, alpha, cdf in [
    ("uniform_5", uniform(5), 1, lambda x: x / mp.mpf(5)),
    ("scaled_beta_5_2_1", scaled_beta(5, 2, 1), 1, lambda x: mp.betainc(2, 1, 0, x / mp.mpf(5), regularized=True)),
]:
    pdf, sf, x0 = model
    for n in [20, 40, 50, 60, 80, 200]:
        c = (1 - cdf(x0 * mp.mpf(n) / (n + 1))) * mp.mpf(n) ** alpha
        common = mp.gamma(alpha + 1) * c * mp.mpf(n) ** -alpha * mp.e ** -x0
        asym_sf = common * mp.mpf(x0) ** (n + 1) / mp.factorial(n + 1)
        asym_pmf = common * mp.mpf(x0) ** n / mp.factorial(n)
        print(name, n, mp.nstr(integral(sf, n, x0) / asym_sf, 17), mp.nstr(integral(pdf, n, x0) / asym_pmf, 17))
