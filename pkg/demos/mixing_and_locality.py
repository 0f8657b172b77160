"""Mixing against the gap bound, then locality of correlations and of the jump operators.

Run with ``python demos/mixing_and_locality.py``.
"""

import numpy as np

from fermigibbs.analysis import (
    correlation_decay,
    empirical_decay_rate,
    lindbladian_gap,
    mixing_bound_verify,
    quasi_locality_profile,
)
from fermigibbs.lindblad import assemble_lindbladian
from fermigibbs.models import build_fermi_hubbard, build_spinless_chain

rng = np.random.default_rng(1)

m = build_fermi_hubbard((1,), 0.2)
lind = assemble_lindbladian(m.dense(), 1.0)
gap = lindbladian_gap(lind.L_dagger, "even").gap
mix = mixing_bound_verify(lind, gap, rng)
print(f"1-site Hubbard, even gap {gap:.5f}: {mix['points']} (state, time) points, "
      f"{mix['violations']} violations, worst margin {mix['worst_margin']:.3e}")
print(f"empirical tail rate {empirical_decay_rate(lind, gap, rng):.5f}")

chain = build_spinless_chain(5, 0.1)
corr = correlation_decay(chain, 1.0)
print("\ndensity correlations from the first site of a 5-site chain")
for d, v in corr.samples:
    print(f"  d={d:g}: {v:.3e}")
print(f"  fitted rate {corr.rate:.3f}")

free = build_spinless_chain(5, 0.0)
for omega in (0.0, 2.0):
    prof = quasi_locality_profile(free, 1, omega, 1.0, [1, 2, 3])
    tail = ", ".join(f"r={r:g}: {v:.3e}" for r, v in prof.samples)
    print(f"\njump weight outside radius r, omega={omega}: {tail}")
