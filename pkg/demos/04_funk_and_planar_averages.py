"""Great-circle averages on the sphere and planar averages in a ball.

Odd functions average to zero over every great circle; the even part is
recovered by dividing each degree by its eigenvalue.  The same cancellation
kills the planar average of an antipodally odd field in three dimensions.
"""
import numpy as np
from scipy.special import eval_legendre

from herglotz import (
    SphericalField,
    WaveSpeed,
    funk_eigenvalues,
    funk_even_recover,
    funk_forward,
    great_circle_average,
    planar_average,
    random_field,
)

rng = np.random.default_rng(4)

y20 = SphericalField.harmonic(2, 0)
ratio = great_circle_average(y20, [0, 0, 1.0]) / y20(np.array([0, 0, 1.0]))
print(f"Y_20 equator average / pole value = {ratio.real:.12f}")

mu = funk_eigenvalues(8)
print("eigenvalues by quadrature:", np.round(mu, 6))
print(f"max difference from P_l(0): {np.max(np.abs(mu - eval_legendre(np.arange(9), 0))):.1e}")

f = random_field(10, rng)
F = funk_forward(f)
back = funk_even_recover(F)
print(f"\nrandom real field, degree 10: even part recovered to {np.max(np.abs(back.coeffs - f.degree_part(0).coeffs)):.1e}")
odd = f.degree_part(1)
print(f"odd part maps to norm ratio {funk_forward(odd).norm() / odd.norm():.1e}")

w = WaveSpeed.constant(0.2)
radii = np.linspace(0.2, 1, 81)
odd3 = random_field(5, rng, parity=1, radii=radii)
vals = []
for _ in range(5):
    n = rng.normal(size=3)
    vals.append(abs(planar_average(w, odd3, 0.5, n / np.linalg.norm(n))))
print(f"\nplanar averages of an odd 3D field over 5 random planes: max {max(vals):.1e}")
