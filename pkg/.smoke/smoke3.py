import time
import numpy as np

from tumornet import cohort as C
from tumornet import nested as N
from tumornet import evaluate as E
from tumornet.network import NetworkSpec, TrainConfig, Transfer

cfg = C.CohortConfig(n_benign=500, n_malignant=500, master_seed=2024)
t0 = time.perf_counter()
co = C.generate_cohort(cfg)
tr, va, te = C.split(co, 0.7, 0.15, seed=cfg.master_seed)
print(f"cohort+split: {time.perf_counter() - t0:.2f}s "
      f"({len(tr.records)}/{len(va.records)}/{len(te.records)})")

plan = N.default_plan(master_seed=cfg.master_seed)
t0 = time.perf_counter()
trained = N.train_nested(tr, va, plan)
t_train = time.perf_counter() - t0
print(f"train_nested: {t_train:.2f}s")
for ph, (h_tr, h_va) in trained.histories.items():
    print(f"  phase {ph.value}: train {h_tr[0]:.4f}->{h_tr[-1]:.4f} "
          f"val {h_va[0]:.4f}->{h_va[-1]:.4f}")

rep = E.evaluate_cohort(trained.model, te)
print(f"held-out: acc={rep.accuracy:.3f} auc={rep.auc:.3f} "
      f"rmse1={rep.rmse_phase1:.4f} rmse2={rep.rmse_phase2:.4f} "
      f"tp={rep.tp} fp={rep.fp} tn={rep.tn} fn={rep.fn}")

# novelty runs: benign-only training cohort
cfgB = C.CohortConfig(n_benign=500, n_malignant=0, master_seed=77)
coB = C.generate_cohort(cfgB)
# held-out mixed cohort for scoring
cfgX = C.CohortConfig(n_benign=150, n_malignant=150, master_seed=78)
coX = C.generate_cohort(cfgX)
trB, vaB, teB = C.split(coB, 0.7, 0.15, seed=1)

t0 = time.perf_counter()
nov0 = N.train_novelty(trB, vaB, 0, plan)
s1, s2, prob0, lab0 = N.predict_batch(nov0.model, coX.records)
frac0 = float(np.mean(lab0 == 0))
print(f"novelty n=0: frac labeled 0 on mixed held-out = {frac0:.3f} "
      f"({time.perf_counter() - t0:.2f}s)")

t0 = time.perf_counter()
nov500 = N.train_novelty(trB, vaB, 500, plan, counter_seed=123)
s1, s2, prob5, lab5 = N.predict_batch(nov500.model, coX.records)
labels = np.array([r.label for r in coX.records])
recall = float(np.mean(lab5[labels == 1] == 1))
fpr = float(np.mean(lab5[labels == 0] == 1))
print(f"novelty n=500: recall={recall:.3f} fpr={fpr:.3f} "
      f"({time.perf_counter() - t0:.2f}s)")

# posterior experiment
pair = E.ClassDensityPair(E.Density.gaussian(-1.0, 1.0),
                          E.Density.gaussian(1.0, 1.0))
spec = NetworkSpec(layer_sizes=(1, 8, 1),
                   transfers=(Transfer.SIGMOID, Transfer.SIGMOID))
for lr, ep in ((0.5, 20), (0.25, 30)):
    t0 = time.perf_counter()
    cfg_t = TrainConfig(learning_rate=lr, epochs=ep, init_seed=5, shuffle_seed=6)
    prep = E.posterior_convergence_experiment(pair, 5000, spec, cfg_t,
                                              sample_seed=7)
    k0 = np.argmin(np.abs(prep.grid))
    print(f"posterior lr={lr} ep={ep}: mean={prep.mean_abs_dev:.4f} "
          f"max={prep.max_abs_dev:.4f} f(0)={prep.f_net[k0]:.4f} "
          f"({time.perf_counter() - t0:.2f}s)")
