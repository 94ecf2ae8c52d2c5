"""Seeded end-to-end experiments on a plant: one full pipeline per trial.

collect -> mask (f0) -> cloud synthesis (f1) -> unmask (f2) -> apply
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import adversary as adv
from . import audit, io, plots, synth
from . import plant as pl
from . import transform as tr
from .linalg import RankError, norm2, spectral_radius

log = logging.getLogger(__name__)

#: upper edges of the privacy-budget histogram bins; one overflow bin follows
GAMMA_BIN_EDGES = tuple(round(0.01 * k, 2) for k in range(1, 11))
BIN_ZERO = "0"
BIN_INFEASIBLE = "infeasible"


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.cause = cause


class InfeasibleError(RuntimeError):
    """The cloud could not certify a stabilizing controller."""


def load_plant(name):
    if name == "batch-reactor":
        return pl.batch_reactor()
    d = Path(name)
    return pl.Plant(io.read_matrix(d / "A_star.csv"), io.read_matrix(d / "B_star.csv"))


def trial_streams(seed, *keys):
    """Independent generators for (data, disturbance, stage-1 keys, stage-2 keys, misc)."""
    ss = np.random.SeedSequence([seed, *keys])
    return [np.random.default_rng(s) for s in ss.spawn(5)]


@dataclass
class Trial:
    index: int
    plant: pl.Plant
    data: pl.DataSet
    masked: tr.MaskedData
    disturbance: pl.DisturbanceModel
    keys: tr.TransformKeys
    outcome: synth.SynthesisOutcome
    K_star: np.ndarray = None
    misc_rng: np.random.Generator = None

    @property
    def noisy(self):
        return self.disturbance is not None

    @property
    def view(self):
        Delta = self.disturbance.Delta if self.noisy else None
        return audit.CloudView.from_masked(self.masked, Delta, self.outcome)

    @property
    def rho_closed_loop(self):
        if self.K_star is None:
            return float("nan")
        return spectral_radius(self.plant.A_star + self.plant.B_star @ self.K_star)


def run_trial(plant, config, index, d_max=None, noisy=None, stream=0, finish=True):
    """One pipeline run. ``noisy`` defaults to ``d_max > 0``.

    With ``finish=False`` the stage-2 keys are not drawn (the sweep only needs gamma).
    """
    d_max = config.d_max if d_max is None else d_max
    noisy = d_max > 0 if noisy is None else noisy
    data_rng, dist_rng, k1_rng, k2_rng, misc_rng = trial_streams(config.seed, stream, index)

    try:
        model = None
        D0 = None
        if noisy:
            D0, model = pl.generate_uniform_disturbance(plant.n, config.T, d_max, dist_rng)
        data = pl.random_experiment(plant, config.T, data_rng, config.input_range,
                                    config.x0_range, D0)
        if not pl.check_rank_assumption(data):
            raise RankError(
                f"[X0; U0] is rank deficient (T={config.T}, n+m={plant.n + plant.m}); "
                "collect a longer experiment"
            )
    except Exception as exc:
        raise StageError("collect", exc) from exc

    try:
        F1, G1 = tr.generate_stage1_keys(plant.n, plant.m, k1_rng, config.key_range)
        masked = tr.pre_process(data, F1, G1)
    except Exception as exc:
        raise StageError("pre-process", exc) from exc

    try:
        if noisy:
            outcome = synth.maximize_gamma_noisy(masked.X0, masked.X1, masked.V0, model.Delta)
        else:
            outcome = synth.maximize_gamma_clean(masked.X0, masked.X1, masked.V0)
    except Exception as exc:
        raise StageError("cloud synthesis", exc) from exc

    keys = tr.TransformKeys(F1, G1)
    trial = Trial(index, plant, data, masked, model, keys, outcome, misc_rng=misc_rng)
    if not finish or not outcome.feasible:
        return trial

    try:
        b_norm = norm2(plant.B_star)
        F2, G2 = tr.generate_stage2_keys(F1, G1, outcome.K, outcome.gamma_bar, b_norm,
                                         k2_rng, config.rho, config.key_range)
        trial.keys = keys.with_stage2(F2, G2, b_norm)
        trial.K_star = tr.post_process(F2, G2, outcome.K)
    except Exception as exc:
        raise StageError("post-process", exc) from exc
    return trial


def audit_record(trial, grant_disturbance=False, n_alternatives=10):
    D0 = trial.data.D0 if grant_disturbance else None
    return audit.audit_trial(trial.plant, trial.keys, trial.outcome.K, trial.view,
                             trial.misc_rng, n_alternatives, D0=D0, trial=trial.index)


# ---------------------------------------------------------------- case study

def run_case_study(config):
    """Single trial with all artifacts written to ``config.outdir``. Returns the report dict."""
    plant = load_plant(config.plant)
    out = Path(config.outdir)
    out.mkdir(parents=True, exist_ok=True)
    trial = run_trial(plant, config, config.trial)

    cloud = out / "cloud"
    io.write_exchange_inputs(cloud, trial.masked, trial.view.Delta)
    io.write_exchange_outputs(cloud, trial.outcome)
    if not trial.outcome.feasible:
        raise InfeasibleError(f"cloud synthesis returned {trial.outcome.status.value}")

    secret = out / "secret"
    secret.mkdir(exist_ok=True)
    for name, value in (
        ("A_star", plant.A_star), ("B_star", plant.B_star), ("U0", trial.data.U0),
        ("D0", trial.data.D0), ("F1", trial.keys.F1), ("G1", trial.keys.G1),
        ("F2", trial.keys.F2), ("G2", trial.keys.G2),
    ):
        io.write_matrix(secret / f"{name}.csv", value, name)
    io.write_matrix(out / "K_star.csv", trial.K_star, "K_star")

    rec = audit_record(trial, grant_disturbance=trial.noisy)
    write_audit_csv(out / "audit.csv", [rec])

    x0 = trial.misc_rng.uniform(*config.x0_range, size=plant.n)
    cfg = attack_config(config)
    traj = adv.simulate_attack(plant, trial.K_star, cfg, np.zeros(plant.m), x0)
    write_trajectory(out / "trajectory.csv", traj)
    plots.residual_plot(out / "closed_loop", {"no attack": traj.residual},
                        title="closed loop under K_star")

    A_bar, B_bar = audit.identify_transformed_pair(trial.view, trial.data.D0 if trial.noisy else None)
    report = {
        "status": trial.outcome.status.value,
        "mode": "noisy" if trial.noisy else "clean",
        "gamma_bar": io.format_number(trial.outcome.gamma_bar),
        "margin": io.format_number(trial.outcome.margin),
        "eps_strict": io.format_number(trial.outcome.eps_strict),
        "rho_open_loop": io.format_number(spectral_radius(plant.A_star)),
        "rho_masked_closed_loop": io.format_number(spectral_radius(A_bar + B_bar @ trial.outcome.K)),
        "rho_closed_loop": io.format_number(trial.rho_closed_loop),
        "audit_passed": rec.passed(),
    }
    io.write_kv(out / "report.txt", report)
    return report


def write_audit_csv(path, records):
    header = ["trial", "pair_error", "alternatives", "alternatives_distinct",
              "max_replay_residual", "gap_norm", "gap_threshold", "identity_error",
              "rho_closed_loop", "passed"]
    rows = []
    for r in records:
        rows.append([str(r.trial), r.pair_error, str(r.alternatives),
                     str(r.alternatives_distinct), r.max_replay_residual, r.gap_norm,
                     r.gap_threshold, r.identity_error, r.rho_closed_loop,
                     str(int(r.passed()))])
    plots.write_table(path, header, rows)


def write_trajectory(path, traj):
    n = traj.x.shape[1]
    m = traj.a.shape[1]
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"a_{j + 1}" for j in range(m)]
    header.append("residual_norm")
    rows = []
    for t in range(len(traj.t)):
        a = traj.a[t] if t < len(traj.a) else np.zeros(m)
        rows.append([float(t), *traj.x[t], *a, traj.residual[t]])
    plots.write_table(path, header, rows)


# ------------------------------------------------------------------- attacks

def attack_config(config, policy=adv.Policy.EXACT):
    return adv.AttackConfig(config.beta, config.delta_alpha, config.T_inj, config.T_a,
                            config.T_end, policy)


def attack_trial(trial, config, x0=None):
    """Trajectories for no attack and the four knowledge policies on one trial."""
    plant = trial.plant
    A_bar, B_bar = audit.identify_transformed_pair(
        trial.view, trial.data.D0 if trial.noisy else None)
    cfg = attack_config(config)
    x0 = np.zeros(plant.n) if x0 is None else x0
    out = {"none": adv.simulate_attack(plant, trial.K_star, cfg, np.zeros(plant.m), x0)}
    for policy in adv.Policy:
        model = adv.build_policy_model(policy, plant, trial.keys, trial.outcome.K, A_bar, B_bar)
        a_inf = adv.design_bias(model, config.delta_alpha)
        out[policy.value] = adv.simulate_attack(plant, trial.K_star, cfg, a_inf, x0)
    return out


def run_attack_comparison(config):
    plant = load_plant(config.plant)
    out = Path(config.outdir) / "attack"
    out.mkdir(parents=True, exist_ok=True)
    trial = run_trial(plant, config, config.trial)
    if not trial.outcome.feasible:
        raise InfeasibleError(f"cloud synthesis returned {trial.outcome.status.value}")
    x0 = trial.misc_rng.uniform(*config.x0_range, size=plant.n)
    trajs = attack_trial(trial, config, x0)
    for label, traj in trajs.items():
        name = "no_attack" if label == "none" else f"policy_{label}"
        write_trajectory(out / f"{name}.csv", traj)
    plots.residual_plot(
        out / "fig_attack",
        {("no attack" if k == "none" else f"policy {k}"): v.residual for k, v in trajs.items()},
        threshold=config.delta_alpha, title="bias injection by knowledge policy")
    summary = {k: v.steady_residual for k, v in trajs.items()}
    plots.write_table(out / "summary.csv", ["policy", "steady_residual", "alarm"],
                      [[k, v, str(int(trajs[k].alarm(config.delta_alpha)))]
                       for k, v in summary.items()])
    return summary


# ---------------------------------------------------------------------- sweep

def gamma_bin(status, gamma):
    if status != synth.Status.FEASIBLE.value:
        return BIN_INFEASIBLE
    if gamma <= 0:
        return BIN_ZERO
    for hi in GAMMA_BIN_EDGES:
        if gamma <= hi:
            return _bin_label(hi)
    return f">{GAMMA_BIN_EDGES[-1]:.2f}"


def _bin_label(hi):
    # half-open (hi - 0.01, hi]; written without commas so it survives CSV
    return f"{hi - 0.01:.2f}-{hi:.2f}"


def bin_labels():
    labels = [BIN_ZERO] + [_bin_label(hi) for hi in GAMMA_BIN_EDGES]
    return labels + [f">{GAMMA_BIN_EDGES[-1]:.2f}", BIN_INFEASIBLE]


def _sweep_job(args):
    plant, config, grid_index, d_max, index = args
    try:
        trial = run_trial(plant, config, index, d_max=d_max, noisy=True,
                          stream=1 + grid_index, finish=False)
        return grid_index, index, trial.outcome.status.value, trial.outcome.gamma_bar
    except StageError as exc:
        log.warning("sweep trial %d at d_max=%g failed: %s", index, d_max, exc)
        return grid_index, index, "error", 0.0


def sweep_records(config, plant=None, grid=None, trials=None):
    """``(d_max, trial, status, gamma)`` for every trial, in deterministic order."""
    plant = plant or load_plant(config.plant)
    grid = tuple(config.d_max_grid if grid is None else grid)
    trials = config.trials if trials is None else trials
    jobs = [(plant, config, g, d, i) for g, d in enumerate(grid) for i in range(trials)]
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as ex:
            results = list(ex.map(_sweep_job, jobs, chunksize=8))
    else:
        results = [_sweep_job(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))
    return [(grid[g], i, status, gamma) for g, i, status, gamma in results]


def histogram(records, grid):
    labels = bin_labels()
    table = np.zeros((len(labels), len(grid)))
    for d, _, status, gamma in records:
        j = grid.index(d)
        table[labels.index(gamma_bin(status, gamma)), j] += 1
    counts = table.sum(axis=0)
    return labels, table / np.where(counts == 0, 1, counts)


def run_disturbance_sweep(config):
    out = Path(config.outdir) / "sweep"
    out.mkdir(parents=True, exist_ok=True)
    grid = tuple(config.d_max_grid)
    records = sweep_records(config, grid=grid)
    plots.write_table(out / "gammas.csv", ["d_max", "trial", "status", "gamma_bar"],
                      [[d, str(i), s, g] for d, i, s, g in records])
    labels, table = histogram(records, grid)
    plots.heatmap(out / "fig_sweep", labels, [f"{d:g}" for d in grid], table,
                  "fraction of data sets per privacy-budget bin")
    return labels, table, records
