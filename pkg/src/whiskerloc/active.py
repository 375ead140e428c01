"""Recursive Bayesian active localization.

Evidence from successive contacts is integrated by Bayes' rule over a
fixed set of location hypotheses, starting from a flat prior. Between
contacts the sensor translates toward the fixation point: the commanded
move is x_fix minus the perceived class, where the percept is the
likelihood argmax of the latest contact. A decision is made when the
maximum posterior crosses a threshold (or after a set number of contacts),
with a contact cap forcing a decision.

Hypotheses are anchored to the sensor's start pose. Because the sensor
moves while the rod stays put, each contact's likelihood vector arrives in
current-pose class coordinates and is shifted by the cumulative commanded
displacement before updating the fixed hypotheses. Commanded moves are
differences of class labels, hence exact whole numbers of class widths, so
the shift is always an integer re-indexing. Start poses are continuous:
the sensor keeps its sub-class-width offset from the label grid for the
whole trial, which bounds achievable accuracy at half a class width just
like a physical rig whose mount never lands exactly on a training pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from whiskerloc.arrays import WhiskerArrayModel
from whiskerloc.contact import RodStimulus
from whiskerloc.errors import DegenerateEvidenceError, InvalidConfigError
from whiskerloc.motion import MotionProgram
from whiskerloc.perception import LikelihoodModel, LocationClassSet
from whiskerloc.render import NoiseConfig
from whiskerloc.simulate import draw_session_systematics, simulate_contact_event

NORMALIZATION_TOL = 1e-9


@dataclass
class PosteriorState:
    """Probability vector over location hypotheses plus a contact counter."""

    probs: np.ndarray
    contacts: int = 0

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > NORMALIZATION_TOL:
            raise InvalidConfigError("posterior must be a normalized probability vector")

    @property
    def n_classes(self) -> int:
        return len(self.probs)


def init_posterior(n_classes: int) -> PosteriorState:
    """Flat prior 1/N over the hypotheses, contact counter at zero."""
    if n_classes < 2:
        raise InvalidConfigError("need at least two hypotheses")
    return PosteriorState(np.full(n_classes, 1.0 / n_classes), contacts=0)


def bayes_update(posterior: PosteriorState, log_likelihoods: np.ndarray) -> PosteriorState:
    """One recursive Bayes step in the log domain (max-subtracted)."""
    ll = np.asarray(log_likelihoods, dtype=float)
    if ll.shape != posterior.probs.shape:
        raise InvalidConfigError(
            f"likelihood vector length {ll.shape} != posterior {posterior.probs.shape}"
        )
    with np.errstate(divide="ignore"):  # zero-probability hypotheses stay at zero
        w = ll + np.log(posterior.probs)
    peak = w.max()
    if not np.isfinite(peak):
        raise DegenerateEvidenceError("all log likelihoods are -inf")
    p = np.exp(w - peak)
    p /= p.sum()
    return PosteriorState(p, contacts=posterior.contacts + 1)


@dataclass
class ActivePolicyConfig:
    """Fixation goal, decision rule, and safety cap for active trials.

    decision_rule is "threshold" (decide when max posterior > theta) or
    "fixed_time" (decide after exactly decision_contacts contacts). Theta
    is only informative above the flat prior 1/N; lower values decide on
    the first contact, which the sweep protocols use deliberately.
    """

    x_fix_mm: float
    decision_rule: str = "threshold"
    theta: float = 0.5
    decision_contacts: int = 1
    max_contacts: int = 40
    actions_enabled: bool = True

    def __post_init__(self):
        if self.decision_rule not in ("threshold", "fixed_time"):
            raise InvalidConfigError(f"unknown decision rule {self.decision_rule!r}")
        if self.decision_rule == "threshold" and not 0.0 <= self.theta < 1.0:
            raise InvalidConfigError("theta must lie in [0, 1)")
        if self.decision_rule == "fixed_time" and self.decision_contacts < 1:
            raise InvalidConfigError("decision_contacts must be at least 1")
        if self.max_contacts < 1:
            raise InvalidConfigError("max_contacts must be at least 1")


def select_action(perceived_label_mm: float, policy: ActivePolicyConfig) -> float:
    """Commanded translation toward the fixation point."""
    return policy.x_fix_mm - perceived_label_mm


@dataclass
class Decision:
    class_index: int
    forced: bool


def check_decision(posterior: PosteriorState, policy: ActivePolicyConfig) -> Decision | None:
    """Decide per the policy rule; the contact cap always forces a decision."""
    idx = int(np.argmax(posterior.probs))
    if policy.decision_rule == "threshold":
        if posterior.probs[idx] > policy.theta:
            return Decision(idx, forced=False)
    else:
        if posterior.contacts >= policy.decision_contacts:
            return Decision(idx, forced=False)
    if posterior.contacts >= policy.max_contacts:
        return Decision(idx, forced=True)
    return None


@dataclass
class ActiveEnvironment:
    """Simulated sensor-plus-rod world for active trials.

    The rod sits at ``rod_abs_mm`` on the traverse; placing the sensor at
    traverse position s reproduces the collection pose of class label s.
    Contacts are headless simulations with the environment's noise; a
    per-trial actuation scale models trial-to-trial motor variability.
    """

    array: WhiskerArrayModel
    motion: MotionProgram
    classes: LocationClassSet
    rod_abs_mm: float
    rod_diameter_mm: float = 5.0
    rod_depth_mm: float = 39.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    reference_disp: np.ndarray | None = None  # subtracted from contacts when set

    @property
    def range_mm(self) -> tuple[float, float]:
        return float(self.classes.labels_mm[0]), float(self.classes.labels_mm[-1])

    def clamp(self, sensor_mm: float) -> float:
        lo, hi = self.range_mm
        return min(max(sensor_mm, lo), hi)

    def contact(
        self, sensor_mm: float, motion_scale: float, seed, pose_offset_mm: float = 0.0
    ) -> np.ndarray:
        """One contact at a sensor position; returns (dims, frames) values.

        ``pose_offset_mm`` is the session's registration error: the true
        pose is the commanded one plus this offset.
        """
        rod = RodStimulus(
            x_position_mm=self.rod_abs_mm - (sensor_mm + pose_offset_mm),
            diameter_mm=self.rod_diameter_mm,
            center_depth_mm=self.rod_depth_mm,
        )
        event = simulate_contact_event(
            self.array, self.motion, rod, self.noise, seed=seed,
            motion_scale=motion_scale, headless=True, location_mm=sensor_mm,
        )
        disp = event.series.disp
        if self.reference_disp is not None:
            disp = disp - self.reference_disp
        return disp.reshape(disp.shape[0], -1).T


@dataclass
class ContactRecord:
    sensor_mm: float  # commanded pose
    true_mm: float  # physical pose: commanded plus the trial registration offset
    perceived_label_mm: float
    action_mm: float
    posterior_max: float
    posterior_argmax: int
    shift_classes: int
    posterior: np.ndarray | None = None


@dataclass
class TrialTrajectory:
    """Complete record of one active-localization trial."""

    start_mm: float
    records: list
    decision_index: int
    decision_label_mm: float
    contacts: int
    forced: bool
    final_error_mm: float
    end_sensor_mm: float

    def error_if_stopped_at(self, t: int, classes: LocationClassSet) -> float:
        """Localization error had the decision been taken at contact t (1-based).

        Measured against the physical pose: the decided class is where the
        robot believes it sits, so the centering move it implies lands this
        far from the true fixation pose.
        """
        rec = self.records[t - 1]
        est = int(np.clip(rec.posterior_argmax + rec.shift_classes, 0, classes.n_classes - 1))
        return abs(float(classes.labels_mm[est]) - rec.true_mm)


def _trial_rng_streams(seed):
    ss = np.random.SeedSequence(seed)
    start_ss, scale_ss, contact_ss = ss.spawn(3)
    return (
        np.random.default_rng(start_ss),
        np.random.default_rng(scale_ss),
        contact_ss,
    )


def draw_start_mm(classes: LocationClassSet, rng) -> float:
    """Random start pose, continuous uniform over the middle 80% of the range."""
    lo = float(classes.labels_mm[0]) - classes.step_mm / 2.0
    hi = float(classes.labels_mm[-1]) + classes.step_mm / 2.0
    width = hi - lo
    return lo + 0.1 * width + 0.8 * width * rng.random()


def run_active_trial(
    env: ActiveEnvironment,
    model: LikelihoodModel,
    policy: ActivePolicyConfig,
    seed,
    store_posteriors: bool = False,
    start_mm: float | None = None,
) -> TrialTrajectory:
    """Run one trial: contact, Bayes update, decide or translate.

    The action percept follows the likelihood argmax of the current
    contact; decisions follow the posterior. After deciding, the sensor
    makes a final centering move based on the decided class, and the final
    error is the distance between that end pose and the fixation pose.
    """
    classes = env.classes
    labels = classes.labels_mm
    step = classes.step_mm
    n = classes.n_classes
    start_rng, scale_rng, contact_ss = _trial_rng_streams(seed)
    start = draw_start_mm(classes, start_rng) if start_mm is None else float(start_mm)
    motion_scale, pose_offset = draw_session_systematics(env.noise, scale_rng)

    # split the pose into a grid index and a persistent sub-class offset;
    # all commanded moves are whole class widths, so only the index changes
    k = int(np.clip(round((start - labels[0]) / step), 0, n - 1))
    frac = start - float(labels[k])
    sensor = start

    posterior = init_posterior(n)
    shift = 0  # cumulative commanded displacement in class widths
    records = []
    contact_seeds = contact_ss.spawn(policy.max_contacts)
    decision = None
    for t in range(policy.max_contacts):
        values = env.contact(sensor, motion_scale, contact_seeds[t], pose_offset)
        ll_rel = model._log_likelihoods_binned(model.bin_values(values))
        ll_abs = ll_rel[np.clip(np.arange(n) + shift, 0, n - 1)]
        posterior = bayes_update(posterior, ll_abs)
        perceived_idx = int(np.argmax(ll_rel))
        perceived = float(labels[perceived_idx])
        decision = check_decision(posterior, policy)
        action = 0.0
        if decision is None and policy.actions_enabled:
            action = select_action(perceived, policy)
        records.append(
            ContactRecord(
                sensor_mm=sensor,
                true_mm=sensor + pose_offset,
                perceived_label_mm=perceived,
                action_mm=action,
                posterior_max=float(posterior.probs.max()),
                posterior_argmax=int(np.argmax(posterior.probs)),
                shift_classes=shift,
                posterior=posterior.probs.copy() if store_posteriors else None,
            )
        )
        if decision is not None:
            break
        if policy.actions_enabled and action != 0.0:
            k_new = int(np.clip(k + round(action / step), 0, n - 1))
            shift += k_new - k
            k = k_new
            sensor = float(labels[k]) + frac

    # final centering move uses the decided class mapped to the current pose;
    # error is against the physical pose, which the evidence stream reflects
    est_idx = int(np.clip(decision.class_index + shift, 0, n - 1))
    est_label = float(labels[est_idx])
    final_error = abs(est_label - (sensor + pose_offset))
    end_sensor = sensor
    if policy.actions_enabled:
        k_end = int(np.clip(k + round((policy.x_fix_mm - est_label) / step), 0, n - 1))
        end_sensor = float(labels[k_end]) + frac
    return TrialTrajectory(
        start_mm=start,
        records=records,
        decision_index=decision.class_index,
        decision_label_mm=float(labels[decision.class_index]),
        contacts=posterior.contacts,
        forced=decision.forced,
        final_error_mm=final_error,
        end_sensor_mm=end_sensor,
    )


@dataclass
class SweepPoint:
    condition: str  # active_threshold | active_fixed_time | passive
    param: float
    mean_abs_error_mm: float
    mean_decision_contacts: float
    n_trials: int
    forced_fraction: float


def probe_trial(env, model, seed, actions_enabled: bool, max_contacts: int) -> TrialTrajectory:
    """A trial run to the contact cap so every decision rule can be replayed."""
    policy = ActivePolicyConfig(
        x_fix_mm=env.classes.centre_label(),
        decision_rule="fixed_time",
        decision_contacts=max_contacts,
        max_contacts=max_contacts,
        actions_enabled=actions_enabled,
    )
    return run_active_trial(env, model, policy, seed)


def _stop_at_threshold(traj: TrialTrajectory, theta: float) -> tuple[int, bool]:
    """Stopping contact (1-based) and whether the cap forced it."""
    for t, rec in enumerate(traj.records, start=1):
        if rec.posterior_max > theta:
            return t, False
    return len(traj.records), True


def evaluate_errors(
    active_trials,
    passive_trials,
    classes: LocationClassSet,
    theta_grid,
    time_grid,
) -> list[SweepPoint]:
    """Error versus decision time for threshold, fixed-time, and passive rules.

    Trials must have been run to the contact cap (probe_trial); each sweep
    point replays the stopping rule on the recorded posterior paths, so all
    conditions share one seeded trial ensemble per condition.
    """
    if not active_trials or not passive_trials:
        raise InvalidConfigError("need at least one trial per condition")
    table = []
    cap = len(active_trials[0].records)
    for theta in theta_grid:
        stopped = [_stop_at_threshold(tr, theta) for tr in active_trials]
        stops = np.array([t for t, _ in stopped])
        forced = np.array([f for _, f in stopped])
        errs = np.array(
            [tr.error_if_stopped_at(t, classes) for tr, t in zip(active_trials, stops)]
        )
        table.append(
            SweepPoint(
                "active_threshold",
                float(theta),
                float(errs.mean()),
                float(stops.mean()),
                len(active_trials),
                float(forced.mean()),
            )
        )
    for rule_trials, name in ((active_trials, "active_fixed_time"), (passive_trials, "passive")):
        for T in time_grid:
            errs = np.array(
                [tr.error_if_stopped_at(min(T, len(tr.records)), classes) for tr in rule_trials]
            )
            table.append(
                SweepPoint(
                    name,
                    float(T),
                    float(errs.mean()),
                    float(min(T, cap)),
                    len(rule_trials),
                    0.0,
                )
            )
    return table
