# Primal and dual preconditioned operators share their spectra once the
# trivial eigenvalues are removed (1 on the primal side, 0 and 1 on the
# dual side).
from substructuring import Laboratory, ProblemConfig
from substructuring.spectral import spectra_match

lab = Laboratory(ProblemConfig((4, 4), 2))
for primal, dual in (("bdd", "feti1"), ("bddc", "fetidp")):
    p, d = lab.spectrum(primal), lab.spectrum(dual)
    m = spectra_match(p, d)
    print(f"{primal} vs {dual}: passed={m.passed}, {len(m.matched_pairs)} pairs, max diff {m.max_pair_diff:.1e}")
    print(f"  trivial eigenvalues removed: {p.excluded.size} primal, {d.excluded.size} dual")
    for (a, b) in m.matched_pairs[:3]:
        print(f"  {a:.10f}  {b:.10f}")
    print(f"  kappa = {p.condition_number():.4f}")
