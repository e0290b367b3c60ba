import time
import numpy as np

from tumornet import cohort as C
from tumornet.growth import LogisticParams, lyapunov_exponent

cfg = C.CohortConfig(n_benign=50, n_malignant=50, master_seed=42)

t0 = time.perf_counter()
co = C.generate_cohort(cfg, n_counter=10)
t1 = time.perf_counter()
print(f"generate 50+50+10: {t1 - t0:.2f}s")
print("counts:", co.counts())

rec_b = co.records[0]
rec_m = co.records[60]
print("benign:", rec_b.label, rec_b.steady_state_mass, rec_b.detection_mass,
      rec_b.max_mass, rec_b.mass_series[:3])
print("malig :", rec_m.label, rec_m.steady_state_mass, rec_m.detection_mass,
      rec_m.max_mass, rec_m.mass_series[:3])

# determinism
rec_b2 = C.generate_benign(cfg, 0)
print("benign deterministic:", np.array_equal(rec_b2.mass_series, rec_b.mass_series)
      and rec_b2.seed == rec_b.seed)

# replay + separability (noise-free version)
cfg0 = C.CohortConfig(n_benign=20, n_malignant=20, noise_sigma=0.0, master_seed=7)
co0 = C.generate_cohort(cfg0)
ok = True
for r in co0.records:
    if r.label == 0:
        rb, x0, p53 = C.replay_benign_draws(cfg0, r.seed)
        lam = lyapunov_exponent(LogisticParams(r=rb, k=cfg0.k), x0=0.2)
        if lam >= 0:
            ok = False
            print("benign lam>=0!", rb, lam)
        # noise-free tail within 1% of steady state
        tail = r.mass_series[-1]
        if abs(tail - r.steady_state_mass) > 0.01 * r.steady_state_mass:
            ok = False
            print("benign tail off steady:", tail, r.steady_state_mass)
    else:
        rb, x0, p53, t_d, r_m = C.replay_malignant_draws(cfg0, r.seed)
        lam = lyapunov_exponent(LogisticParams(r=r_m, k=cfg0.k), x0=0.2)
        if lam <= 0:
            ok = False
            print("malig lam<=0!", r_m, lam)
        band = cfg0.detection_threshold * r.steady_state_mass
        if abs(r.detection_mass - r.steady_state_mass) <= band:
            ok = False
            print("detection inside band", r.detection_mass, r.steady_state_mass)
print("separability + steady checks:", "ok" if ok else "FAIL")

# p53 distributions
p53_b = [r.p53_conc for r in co.records if r.label == 0 and not r.synthetic_counter]
p53_m = [r.p53_conc for r in co.records if r.label == 1 and not r.synthetic_counter]
print("p53 medians b/m:", np.median(p53_b), np.median(p53_m))

# split
tr, va, te = C.split(co, 0.7, 0.15, seed=3)
print("split sizes:", len(tr.records), len(va.records), len(te.records))
print("split disjoint:", not (set(r.id for r in tr.records)
                              & set(r.id for r in va.records)
                              & set(r.id for r in te.records)))

# features
vec1 = C.to_feature_vector(rec_b, C.Phase.I, cfg.bounds)
vec2 = C.to_feature_vector(rec_b, C.Phase.II, cfg.bounds)
vec3 = C.to_feature_vector(rec_b, C.Phase.III, cfg.bounds)
print("feature lengths:", vec1.size, vec2.size, vec3.size)
print("targets:", C.phase_target(rec_b, C.Phase.I, cfg.bounds),
      C.phase_target(rec_m, C.Phase.III, cfg.bounds))

# round trip
import pathlib
p = pathlib.Path("/tmp/coh.csv")
C.save_cohort(co, p)
co2 = C.load_cohort(p)
C.save_cohort(co2, "/tmp/coh2.csv")
b1 = p.read_bytes()
b2 = pathlib.Path("/tmp/coh2.csv").read_bytes()
print("roundtrip byte-identical:", b1 == b2)
print("sidecar exists:", pathlib.Path("/tmp/coh.json").exists())

t0 = time.perf_counter()
big = C.generate_cohort(C.CohortConfig(n_benign=500, n_malignant=500, master_seed=1))
t1 = time.perf_counter()
print(f"generate 500+500: {t1 - t0:.2f}s")
