"""Rays in a radially stratified disk.

Builds a two-layer wave speed, checks the Herglotz condition, traces a ray
that crosses the interface and compares the closed-form turning-point
quadrature with a brute-force ODE trace.  Ends with the periodic broken rays
of the homogeneous disk.
"""
import numpy as np

from herglotz import (
    BrokenRaySpec,
    GeodesicSpec,
    WaveSpeed,
    broken_ray,
    check_herglotz,
    find_periodic_radii,
    geodesic_length,
    opening_angle,
    trace_geodesic,
    trace_ode_oracle,
)

w = WaveSpeed(0.2, [(0.2, 0.5, (1.2,)), (0.5, 1.0, (1.0,))])
rep = check_herglotz(w)
print(f"Herglotz check passed: {rep.passed}, smallest d/dr(r/c) = {rep.min_herglotz_margin:.4f}")
print("turning-parameter gaps (no tip can sit there):", [(float(a), float(b)) for a, b in w.gaps])

# A ray with its deepest point at r0 = 0.3 crosses the interface twice.
r0 = 0.3
path = trace_geodesic(w, GeodesicSpec(r0), 2001)
print(f"\nray with tip r0 = {r0}")
print(f"  length {geodesic_length(w, r0):.10f}, opening angle {opening_angle(w, r0):.10f}")
print(f"  |c p|^2 - 1 drift {np.max(np.abs(path.speed2 - 1)):.1e}, "
      f"angular momentum drift {np.max(np.abs(path.ang_mom - w.rho(r0))):.1e}")

ode = trace_ode_oracle(w, GeodesicSpec(r0), step=1e-3)
print(f"  ODE trace: length {ode.total_length:.10f}, angle {ode.theta[-1] - ode.theta[0]:.10f}")

# Periodic broken rays: opening angle 2 pi p / q closes after q reflections.
euclid = WaveSpeed.constant(0.2)
print("\nperiodic tip radii of the homogeneous disk, q <= 6:")
for r, p, q in find_periodic_radii(euclid, 6):
    br = broken_ray(euclid, BrokenRaySpec(GeodesicSpec(r), q), 401)
    gap = np.hypot(br.x[-1] - br.x[0], br.y[-1] - br.y[0])
    print(f"  r = {r:.6f}  p/q = {p}/{q}  closure gap {gap:.1e}")
