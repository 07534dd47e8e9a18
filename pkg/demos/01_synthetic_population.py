"""Where does the treatment help, and how noisy are the labels there?

The synthetic population lives on the unit square. Under the alternative the
treatment adds one unit of outcome wherever x1 + s < x2, a triangle holding
one eighth of the mass when s = 0.5. A matched pair is labelled 1 when the
treated outcome beats the control by at least gamma, so each label is a noisy
indicator of the effect region.
"""
import numpy as np

from paircal.datagen import SyntheticConfig, effect_size, generate_population
from paircal.matching import bounded_noise_constant, empirical_label_rate, label_probability

cfg = SyntheticConfig()
gamma = 0.2
rng = np.random.default_rng(0)

pop = generate_population(cfg, rng)
inside = effect_size(pop, cfg) == 1
print(f"population of {len(pop)}: {inside.sum()} units inside the effect region "
      f"(expected mass {cfg.positive_rate():.3f})")

# label probabilities are constant on each side of the boundary
probe = np.array([[0.1, 0.9], [0.6, 0.4]])
exact = label_probability(probe, cfg, gamma)
mc = empirical_label_rate(probe, cfg, gamma, 20_000, rng)
for x, p, q in zip(probe, exact, mc):
    print(f"  x={x}: P(z=1) exact {p:.4f}, simulated {q:.4f}")

# both sides sit away from 1/2, so the noise is bounded
print(f"bounded-noise constant a = {bounded_noise_constant(exact):.3f}")

# the null hypothesis removes the effect everywhere
null = SyntheticConfig(hypothesis="H0")
print(f"under H0 every label has P(z=1) = {label_probability(probe[0], null, gamma):.4f}")
