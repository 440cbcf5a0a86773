"""Fast periodic intensity: on for half a period, off for the other half.

Arrivals only ever land in the on-phase, yet once the period is short the
count over [0, t] is nearly Poisson with the period-average rate.  The
first-order correction involves only the fractional final period.
"""

import numpy as np

from rapidpp import (
    PeriodicIntensity,
    corrected_count_pmf_periodic,
    periodic_correction_integral,
    poisson_pmf,
    simulate_periodic,
)

intensity = PeriodicIntensity([0.0, 0.5], [2.0, 0.0])
print("period-average rate:", intensity.average_rate)

rng = np.random.default_rng(4)
stream = simulate_periodic(intensity, eps=0.25, t=3.0, rng=rng)
phases = (stream.times / 0.25) % 1.0
print(f"{stream.count} arrivals, all inside the on-phase: max phase {phases.max():.3f} < 0.5")

# with t/eps = 2.5 periods, half an on-piece is left over
eps, t = 0.4, 1.0
integral = periodic_correction_integral(intensity, eps, t)
print(f"\nfractional-period correction integral at eps={eps}: {integral}")

baseline = poisson_pmf(intensity.average_rate * t, kmax=6)
corrected = corrected_count_pmf_periodic(intensity, eps, t, kmax=6)
print("\n k   poisson    corrected")
for k in range(7):
    print(f"{k:>2}   {baseline.probs[k]:.5f}    {corrected.probs[k]:.5f}")
