"""Independent high-precision evaluation of the reference values frozen into the C++ tests.

Run: python3 tests/oracles/oracle_values.py
"""
import mpmath as mp

mp.mp.dps = 40

e = mp.mpf("1.602176634e-19")
eps0 = mp.mpf("8.8541878128e-12")
u = mp.mpf("1.66053906660e-27")
kB = mp.mpf("1.380649e-23")
hbar = mp.mpf("1.054571817e-34")

lam = mp.mpf("369.5e-9")
f = mp.mpf("3e-3")
R = mp.mpf("2.5e-3")

# Zone design: r_n^2 = n lam f + n^2 lam^2 / 4; invert r_N = R.
n_exact = 2 * (mp.sqrt(f**2 + R**2) - f) / lam
print("zone count (exact inversion)", mp.floor(n_exact), n_exact)
print("zone count (paraxial estimate)", R**2 / (lam * f))
r1 = mp.sqrt(lam * f + lam**2 / 4)
print("r1", r1)
N = int(mp.floor(n_exact))
rN = mp.sqrt(N * lam * f + N**2 * lam**2 / 4)
rNm1 = mp.sqrt((N - 1) * lam * f + (N - 1) ** 2 * lam**2 / 4)
print("outermost full zone width", rN - rNm1)

# Fused silica Sellmeier at 369.5 nm.
l2 = (lam * 10**6) ** 2
B = [mp.mpf("0.6961663"), mp.mpf("0.4079426"), mp.mpf("0.8974794")]
C = [mp.mpf("0.0684043"), mp.mpf("0.1162414"), mp.mpf("9.896161")]
n = mp.sqrt(1 + sum(b * l2 / (l2 - c**2) for b, c in zip(B, C)))
print("fused silica index", n, "etch depth", lam / (2 * (n - 1)))

NA = R / mp.sqrt(R**2 + f**2)
print("NA", NA, "solid angle fraction", (1 - mp.sqrt(1 - NA**2)) / 2)

def spacing(mass_u, nu):
    return mp.cbrt(e**2 / (8 * mp.pi**3 * eps0 * mass_u * u * nu**2))

print("l(174 u, 882 kHz)", spacing(174, mp.mpf(882e3)))
print("l(171 u, 1 MHz)", spacing(171, mp.mpf(1e6)))

# Three ions: brute-force zoom grid over (u1, u2, u3), no symmetry assumed.
def V(x):
    return sum(xi**2 / 2 for xi in x) + sum(1 / abs(x[i] - x[j]) for i in range(3) for j in range(i + 1, 3))

best = [mp.mpf(-1), mp.mpf(0), mp.mpf(1)]
h = mp.mpf("0.2")
for _ in range(40):
    cands = []
    for a in range(-4, 5):
        for b in range(-4, 5):
            for c in range(-4, 5):
                x = [best[0] + a * h, best[1] + b * h, best[2] + c * h]
                if x[0] < x[1] < x[2]:
                    cands.append((V(x), x))
    best = min(cands, key=lambda t: t[0])[1]
    h /= 3
print("3-ion scaled positions (grid)", best, "closed form", mp.cbrt(mp.mpf(5) / 4))

# Doppler limit for Gamma / 2 pi = 19.6 MHz and the frequency giving 15 nm RMS.
Gamma = 2 * mp.pi * mp.mpf("19.6e6")
TD = hbar * Gamma / (2 * kB)
print("Doppler temperature", TD)
M = 174 * u
omega = mp.sqrt(kB * TD / M) / mp.mpf("15e-9")
print("frequency for 15 nm RMS", omega / (2 * mp.pi))

# Airy half-maximum argument of (2 J1(x)/x)^2.
xh = mp.findroot(lambda x: (2 * mp.besselj(1, x) / x) ** 2 - mp.mpf(1) / 2, 1.6)
print("Airy half-max x", xh, "FWHM factor", 2 * xh / (2 * mp.pi))
print("Airy FWHM at nominal NA", 2 * xh / (2 * mp.pi) * lam / NA)

# Knife-edge 10-90 width for a Gaussian in units of sigma.
print("10-90 width / sigma", 2 * mp.sqrt(2) * mp.erfinv(mp.mpf("0.8")))

# Binary pi grating: Fourier coefficient of exp(i phi(x)) by quadrature over each half period.
def coeff(m):
    f = lambda x: mp.exp(-2j * mp.pi * m * x)
    s = mp.quad(f, [0, mp.mpf("0.5")]) - mp.quad(f, [mp.mpf("0.5"), 1])
    return abs(s) ** 2
mp.mp.dps = 20
for m in (1, -1, 2, 3):
    print("grating order", m, coeff(m))
