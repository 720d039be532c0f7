//! Checks shared by the acceptance target and the per-area suites.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use corridor_core::controllers::{
    analytic_times, oracle_times, proceeds_without_waiting, CavController, ModelBased,
    ShockwaveParams, DEFAULT_W,
};
use corridor_core::metrics::{read_time_space, time_space_export, EpisodeRecord, TimeSpacePoint};
use corridor_core::rl::{
    evaluate, reward, train, vpg_gradient, vpg_objective, Actor, EvalEpisode, GaussianPolicy,
    RewardCoefficients, RewardInput, RewardVariant, TrainConfig, Trajectory,
};
use corridor_core::runner::{run_episode, run_sweep, ControllerChoice, SweepPlan};
use corridor_core::scenario::{
    build_initial_state_with, ScenarioOptions, ScenarioSpec, CAV_ID, EMS_ID,
};
use corridor_core::sim::network::{APPROACH_LENGTH, BOX_LENGTH};
use corridor_core::sim::{signal_state, NetworkKind, SignalProgram, Simulation};
use corridor_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Check {
    pub fn within_budget(&self) -> bool {
        self.elapsed <= self.budget
    }

    pub fn ok(&self) -> bool {
        self.pass && self.within_budget()
    }
}

pub fn timed(budget: Duration, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (pass, detail) = f();
    Check {
        pass,
        detail,
        elapsed: start.elapsed(),
        budget,
    }
}

// ---- closed forms, evaluated by hand -------------------------------------

pub struct Hand {
    pub x_l: f64,
    pub t_1: f64,
    pub t_2: f64,
    pub t_s: f64,
    pub t_ev: f64,
    pub t_pre: f64,
}

pub fn hand(w: f64, u: f64, v: f64, d: f64) -> Hand {
    let x_l = d * (1.0 / w + 1.0 / u) / (1.0 / w + 2.0 / u - 1.0 / v);
    let t_2 = d / w;
    let t_s = t_2 + (d - x_l) / u;
    Hand {
        x_l,
        t_1: x_l / w,
        t_2,
        t_s,
        t_ev: t_s + x_l / v,
        t_pre: x_l / w + x_l / u,
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

pub fn draw_params(rng: &mut impl Rng) -> ShockwaveParams {
    let w = rng.gen_range(0.5..20.0);
    let u = rng.gen_range(w..40.0);
    let v = rng.gen_range(u..60.0);
    ShockwaveParams::new(
        w,
        u,
        v,
        rng.gen_range(0.0..400.0),
        rng.gen_range(0.0..400.0),
    )
}

pub fn analytic_exactness() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = draw_params(&mut rng);
        let Ok(t) = analytic_times(&p) else {
            return (false, format!("rejected valid draw {p:?}"));
        };
        let h = hand(p.w, p.u, p.v, p.d);
        for (got, want) in [
            (t.x_l, h.x_l),
            (t.t_1, h.t_1),
            (t.t_2, h.t_2),
            (t.t_s, h.t_s),
            (t.t_ev, h.t_ev),
            (t.t_pre, h.t_pre),
            (t.t_a, p.x_a / p.w),
            (t.t_ev, t.t_pre),
        ] {
            worst = worst.max((got - want).abs() / (1.0 + want.abs()));
        }
    }
    let p = ShockwaveParams::new(10.0, 15.0, 35.0, 100.0, 50.0);
    let t = analytic_times(&p).unwrap();
    let hold = oracle_times(&p).unwrap().t_cav;
    let go = oracle_times(&ShockwaveParams { x_a: 90.0, ..p })
        .unwrap()
        .t_cav;
    let worked = (t.x_l - 81.395).abs() < 1e-3
        && (t.t_ev - 13.566).abs() < 1e-3
        && (hold - 18.333).abs() < 1e-3
        && (go - 15.0).abs() < 1e-3;
    (
        worst <= 1e-9 && worked,
        format!(
            "10^4 draws, worst relative error {worst:.1e}; x_L={:.3} t_ev={:.3} T_cav={:.3}/{:.3}",
            t.x_l, t.t_ev, hold, go
        ),
    )
}

pub fn second_approach_branches() -> (bool, String) {
    let wait = !proceeds_without_waiting(175.0, 100.0, 50.0, 10.0, 15.0, 35.0);
    let go = proceeds_without_waiting(175.0, 170.0, 100.0, 10.0, 15.0, 35.0);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut disagreements = 0;
    let mut proceeds = 0;
    for _ in 0..1000 {
        let w = rng.gen_range(1.0..20.0);
        let u = rng.gen_range(w..30.0);
        let v = rng.gen_range(u..50.0);
        let z = rng.gen_range(50.0..400.0);
        let x_past = rng.gen_range(0.0..z);
        let d = rng.gen_range(0.0..200.0);
        let s = z - x_past;
        let direct = s / w + s / u <= d / w + d / v;
        let got = proceeds_without_waiting(z, x_past, d, w, u, v);
        disagreements += usize::from(got != direct);
        proceeds += usize::from(direct);
    }
    (
        wait && go && disagreements == 0,
        format!("worked examples wait={wait} proceed={go}; 10^3 sweep: {disagreements} disagreements, {proceeds} proceed"),
    )
}

// ---- reward --------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum Presence {
    Absent,
    Ahead,
    Level,
    Behind,
}

pub const PRESENCES: [Presence; 4] = [
    Presence::Absent,
    Presence::Ahead,
    Presence::Level,
    Presence::Behind,
];

/// Same lane or no EMS pays the CAV speed; then `p_cav - p_ev <= 0` in the
/// other lane takes nu1/nu2; otherwise nu3/nu4.
pub fn reward_table(
    presence: Presence,
    same_lane: bool,
    v_ev: f64,
    v_cav: f64,
    c: &RewardCoefficients,
) -> f64 {
    match (presence, same_lane) {
        (Presence::Absent, _) | (_, true) => v_cav,
        (Presence::Ahead | Presence::Level, false) => c.nu1 * v_ev + c.nu2 * v_cav,
        (Presence::Behind, false) => c.nu3 * v_ev + c.nu4 * v_cav,
    }
}

pub fn reward_state(
    presence: Presence,
    same_lane: bool,
    v_ev: f64,
    v_cav: f64,
    gap: f64,
) -> RewardInput {
    let p_cav = 120.0;
    let p_ev = match presence {
        Presence::Ahead => p_cav + gap,
        Presence::Level => p_cav,
        Presence::Behind | Presence::Absent => p_cav - gap,
    };
    RewardInput {
        v_cav,
        p_cav,
        l_cav: 0,
        ems: (!matches!(presence, Presence::Absent)).then_some((
            v_ev,
            p_ev,
            usize::from(!same_lane),
        )),
    }
}

pub fn reward_exactness() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    let mut wrong = Vec::new();
    for (name, c) in [
        ("single", RewardCoefficients::SINGLE_INTERSECTION),
        ("two", RewardCoefficients::TWO_INTERSECTION),
    ] {
        for presence in PRESENCES {
            for same_lane in [false, true] {
                for _ in 0..100 {
                    let (v_ev, v_cav) = (rng.gen_range(0.0..35.0), rng.gen_range(0.0..15.0));
                    let s =
                        reward_state(presence, same_lane, v_ev, v_cav, rng.gen_range(0.1..300.0));
                    let want = reward_table(presence, same_lane, v_ev, v_cav, &c);
                    let got = reward(&s, &c, RewardVariant::Equation);
                    cases += 1;
                    if (got - want).abs() > 1e-12 {
                        wrong.push(format!(
                            "{name} {presence:?} same_lane={same_lane}: {got} vs {want}"
                        ));
                    }
                }
            }
        }
    }
    (
        wrong.is_empty(),
        match wrong.first() {
            None => format!("{cases} cases, 0 mismatches"),
            Some(w) => format!("{cases} cases, {} mismatches, first: {w}", wrong.len()),
        },
    )
}

// ---- simulator -----------------------------------------------------------

/// Uniform random accelerations, so the command filter gets exercised.
pub struct RandomAccel(pub ChaCha8Rng);

impl CavController for RandomAccel {
    fn command(&mut self, _sim: &Simulation) -> Result<Option<f64>> {
        Ok(Some(self.0.gen_range(-3.0..=3.0)))
    }

    fn name(&self) -> &'static str {
        "random"
    }
}

pub fn random_spec(rng: &mut impl Rng) -> (ScenarioSpec, ScenarioOptions) {
    let network = if rng.gen_bool(0.5) {
        NetworkKind::OneIntersection
    } else {
        NetworkKind::TwoIntersection
    };
    let options = ScenarioOptions {
        jitter_s: if rng.gen_bool(0.5) {
            rng.gen_range(0.0..1.5)
        } else {
            0.0
        },
        ..ScenarioOptions::default()
    };
    let x_a = match network {
        NetworkKind::TwoIntersection if rng.gen_bool(0.4) => {
            -rng.gen_range(options.z - 40.0..options.z - 2.0)
        }
        _ => rng.gen_range(0.0..80.0),
    };
    let mut spec = ScenarioSpec::new(network, x_a, rng.gen_range(0.0..80.0));
    spec.inflow_vph = rng.gen_range(400.0..1800.0);
    spec.seed = rng.gen();
    (spec, options)
}

fn violation(sim: &Simulation) -> Option<String> {
    let limits = sim.network().speed_limits();
    let vs = sim.vehicles();
    for v in vs {
        let limit = limits.for_class(v.class);
        if !(v.speed >= 0.0 && v.speed <= limit + 1e-9) {
            return Some(format!("{:?} speed {} outside [0, {limit}]", v.id, v.speed));
        }
        if !(v.accel >= -3.0 - 1e-9 && v.accel <= 3.0 + 1e-9) {
            return Some(format!("{:?} accel {} outside [-3, 3]", v.id, v.accel));
        }
    }
    for lane in 0..sim.network().lanes() {
        let mut inlane: Vec<_> = vs.iter().filter(|v| v.lane == lane).collect();
        inlane.sort_by(|a, b| a.position.total_cmp(&b.position));
        for pair in inlane.windows(2) {
            let gap = pair[1].position - pair[1].length - pair[0].position;
            if gap <= 0.0 {
                return Some(format!(
                    "{:?} and {:?} overlap in lane {lane} (gap {gap}) at t={}",
                    pair[0].id,
                    pair[1].id,
                    sim.t()
                ));
            }
        }
    }
    None
}

/// Runs `steps` steps and returns the record, or the first violation.
pub fn checked_run(
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
    controller: &mut dyn CavController,
    steps: u32,
) -> std::result::Result<EpisodeRecord, String> {
    let state = build_initial_state_with(spec, options).map_err(|e| e.to_string())?;
    let mut sim = state.into_simulation().map_err(|e| e.to_string())?;
    let mut rec = EpisodeRecord::for_simulation(&sim, u64::from(steps));
    rec.capture(&sim);
    for _ in 0..steps {
        let cmd = match controller.command(&sim).map_err(|e| e.to_string())? {
            Some(accel) if sim.vehicle(CAV_ID).is_some() => {
                vec![corridor_core::sim::CavCommand {
                    vehicle: CAV_ID,
                    accel,
                }]
            }
            _ => vec![],
        };
        sim.step(&cmd)
            .map_err(|e| format!("fault at t={}: {e}", sim.t()))?;
        if let Some(v) = violation(&sim) {
            return Err(v);
        }
        rec.capture(&sim);
    }
    rec.set_events(sim.events());
    Ok(rec)
}

fn controller_for(
    kind: usize,
    sim_seed: u64,
    spec: &ScenarioSpec,
    options: &ScenarioOptions,
) -> Box<dyn CavController> {
    match kind {
        0 => Box::new(corridor_core::controllers::IdmBaseline),
        1 => {
            let sim = build_initial_state_with(spec, options)
                .unwrap()
                .into_simulation()
                .unwrap();
            Box::new(ModelBased::new(&sim, DEFAULT_W).unwrap())
        }
        _ => Box::new(RandomAccel(ChaCha8Rng::seed_from_u64(sim_seed))),
    }
}

pub fn simulator_invariants(scenarios: usize) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ran = 0;
    let mut rejected = 0;
    while ran < scenarios {
        let (spec, options) = random_spec(&mut rng);
        if build_initial_state_with(&spec, &options).is_err() {
            rejected += 1;
            continue;
        }
        let kind = ran % 3;
        let seed = rng.gen();
        let first = checked_run(
            &spec,
            &options,
            controller_for(kind, seed, &spec, &options).as_mut(),
            600,
        );
        let second = checked_run(
            &spec,
            &options,
            controller_for(kind, seed, &spec, &options).as_mut(),
            600,
        );
        match (first, second) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => return (false, format!("nondeterministic run for {spec:?}")),
            (Err(e), _) | (_, Err(e)) => {
                return (false, format!("{spec:?} controller {kind}: {e}"))
            }
        }
        ran += 1;
    }

    let program = SignalProgram::fixed_time(2);
    let cycle = program.cycle();
    let mut aperiodic = 0;
    for _ in 0..10_000 {
        let t = rng.gen_range(0.0..10_000.0);
        let k = rng.gen_range(0..2);
        aperiodic +=
            usize::from(signal_state(&program, t, k) != signal_state(&program, t + cycle, k));
    }
    (
        aperiodic == 0,
        format!(
            "{ran} scenarios x 600 steps clean and repeatable ({rejected} infeasible draws skipped); \
             {aperiodic}/10^4 signal samples off-period"
        ),
    )
}

// ---- gradients -----------------------------------------------------------

/// Largest relative gap between the analytic policy gradient and central
/// differences with step `eps`, over every parameter.
pub fn gradient_gap(sizes: &[usize], eps: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = GaussianPolicy::new(sizes, seed);
    let params: Vec<f64> = policy
        .params()
        .iter()
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    policy.set_params(&params);
    let batch: Vec<Trajectory> = (0..3)
        .map(|_| {
            let mut tr = Trajectory::default();
            for _ in 0..rng.gen_range(3..8) {
                let x: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
                tr.push(x, rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..3.0));
            }
            tr
        })
        .collect();
    let gamma = 0.99;
    let analytic = vpg_gradient(&policy, &batch, gamma);
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut p = params.clone();
        p[i] = params[i] + eps;
        policy.set_params(&p);
        let up = vpg_objective(&policy, &batch, gamma);
        p[i] = params[i] - eps;
        policy.set_params(&p);
        let down = vpg_objective(&policy, &batch, gamma);
        let numeric = (up - down) / (2.0 * eps);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

pub fn gradient_check() -> (bool, String) {
    let worst = (0..5)
        .map(|s| gradient_gap(&[9, 4, 1], 1e-4, s))
        .fold(0.0, f64::max);
    (
        worst < 1e-4,
        format!("9-4-1 net, 5 seeds, max relative error {worst:.2e}"),
    )
}

// ---- learning ------------------------------------------------------------

pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, 1.96 * (var / n).sqrt())
}

fn returns(eps: &[EvalEpisode]) -> Vec<f64> {
    eps.iter().map(|e| e.ret).collect()
}

pub fn desk_scale_learning() -> (bool, String) {
    let mut cfg = TrainConfig::for_network(NetworkKind::OneIntersection);
    cfg.workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let out = match train(&cfg, None) {
        Ok(o) => o,
        Err(e) => return (false, format!("training failed: {e}")),
    };
    let cells = cfg.eval_cells();
    let eval = |actor, repeats| {
        evaluate(actor, &cells, &cfg.env, cfg.gamma, repeats, 7, cfg.workers).unwrap()
    };
    // The final policy, not the one picked on this same grid.
    let trained = eval(Actor::Deterministic(&out.last), 1);
    let random = eval(Actor::Random, 10);
    let idm = eval(Actor::Driver, 1);
    let (r_mean, _) = mean_ci(&returns(&trained));
    let (b_mean, b_ci) = mean_ci(&returns(&random));
    let t_ev = |eps: &[EvalEpisode]| -> Option<f64> {
        let ts: Option<Vec<f64>> = eps.iter().map(|e| e.t_ev).collect();
        ts.map(|ts| ts.iter().sum::<f64>() / ts.len() as f64)
    };
    let (Some(t_trained), Some(t_idm)) = (t_ev(&trained), t_ev(&idm)) else {
        return (false, "EMS did not finish in every cell".into());
    };
    (
        r_mean > b_mean + b_ci && t_trained <= t_idm + 1e-9,
        format!(
            "{} episodes: trained return {r_mean:.1} vs random {b_mean:.1} (upper 95% CI {:.1}); \
             mean T_ev {t_trained:.3} s vs IDM-only {t_idm:.3} s over {} cells",
            cfg.episodes,
            b_mean + b_ci,
            cells.len()
        ),
    )
}

// ---- behaviour classes ---------------------------------------------------

/// Seconds the CAV spends standing still while the EMS is still behind it,
/// read off a time-space export.
pub struct Standstill {
    pub seconds: f64,
    pub first_move: Option<f64>,
    /// EMS position when the CAV first moved.
    pub ems_at_first_move: Option<f64>,
    pub cav_start: f64,
    pub monotone: bool,
}

pub fn model_based_export(spec: &ScenarioSpec) -> Vec<TimeSpacePoint> {
    let state = build_initial_state_with(spec, &ScenarioOptions::default()).unwrap();
    let rec = run_episode(state, |s| Ok(Box::new(ModelBased::new(s, DEFAULT_W)?))).unwrap();
    let mut csv = Vec::new();
    time_space_export(&rec, 0, &mut csv).unwrap();
    read_time_space(csv.as_slice()).unwrap()
}

pub fn standstill(points: &[TimeSpacePoint]) -> Standstill {
    let track = |id: u32| -> Vec<(f64, f64)> {
        points
            .iter()
            .filter(|p| p.vehicle_id == id)
            .map(|p| (p.t, p.position))
            .collect()
    };
    let cav = track(CAV_ID.0);
    let ems = track(EMS_ID.0);
    let ems_at = |t: f64| ems.iter().find(|(te, _)| *te == t).map(|&(_, x)| x);
    let mut seconds = 0.0;
    let mut first_move = None;
    let mut ems_at_first_move = None;
    for w in cav.windows(2) {
        let ((t0, x0), (t1, x1)) = (w[0], w[1]);
        let behind = ems_at(t1).is_some_and(|e| e < x1);
        if x1 == x0 && behind {
            seconds += t1 - t0;
        }
        if x1 > x0 && first_move.is_none() {
            first_move = Some(t0);
            ems_at_first_move = ems_at(t0);
        }
    }
    let mut ids: Vec<u32> = points.iter().map(|p| p.vehicle_id).collect();
    ids.dedup();
    let monotone = ids.iter().all(|&id| {
        track(id)
            .windows(2)
            .all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0)
    });
    Standstill {
        seconds,
        first_move,
        ems_at_first_move,
        cav_start: cav.first().map_or(f64::NAN, |p| p.1),
        monotone,
    }
}

pub fn behaviour_classes() -> (bool, String) {
    let z = APPROACH_LENGTH + BOX_LENGTH;
    let dt = 0.5;

    let go_spec = ScenarioSpec::new(NetworkKind::TwoIntersection, -191.0, 8.5);
    let go = standstill(&model_based_export(&go_spec));
    // Only the few meters of queue ahead of it may delay the CAV.
    let discharge = (z - 191.0) / DEFAULT_W;
    let no_wait =
        go.seconds <= discharge + dt && go.first_move.is_some_and(|t| t <= discharge + dt);

    let hold_spec = ScenarioSpec::new(NetworkKind::OneIntersection, 1.0, 16.0);
    let x_l = analytic_times(&ShockwaveParams::new(DEFAULT_W, 15.0, 35.0, 16.0, 1.0))
        .unwrap()
        .x_l;
    let hold = standstill(&model_based_export(&hold_spec));
    let held = 1.0 <= x_l
        && hold.seconds >= 2.0
        && hold.ems_at_first_move.is_some_and(|e| e > hold.cav_start);

    (
        no_wait && held && go.monotone && hold.monotone,
        format!(
            "x_a=-191,d=8.5: standstill {:.1} s behind EMS, moves at {:?} s; \
             x_a=1,d=16 (x_L={x_l:.2}): standstill {:.1} s, moves once EMS at {:?} m is past {:.1} m; monotone={}",
            go.seconds,
            go.first_move,
            hold.seconds,
            hold.ems_at_first_move.map(|e| (e * 10.0).round() / 10.0),
            hold.cav_start,
            go.monotone && hold.monotone
        ),
    )
}

// ---- oracle vs simulation ------------------------------------------------

pub struct OracleComparison {
    pub feasible: usize,
    pub agree: usize,
    pub violations: Vec<(NetworkKind, f64, f64, f64, f64)>,
}

pub fn oracle_comparison(workers: usize) -> OracleComparison {
    let mut cmp = OracleComparison {
        feasible: 0,
        agree: 0,
        violations: Vec::new(),
    };
    for network in [NetworkKind::OneIntersection, NetworkKind::TwoIntersection] {
        let plan = SweepPlan::for_network(network);
        let model = run_sweep(
            &ControllerChoice::ModelBased { w: DEFAULT_W },
            &plan,
            workers,
        );
        let oracle = run_sweep(&ControllerChoice::Oracle { w: DEFAULT_W }, &plan, workers);
        for (m, o) in model.cells.iter().zip(&oracle.cells) {
            use corridor_core::metrics::CellOutcome::Ok as Done;
            if let (Done { metrics: mm }, Done { metrics: om }) = (&m.outcome, &o.outcome) {
                if let (Some(sim), Some(closed)) = (mm.t_ev, om.t_ev) {
                    cmp.feasible += 1;
                    if closed <= sim {
                        cmp.agree += 1;
                    } else {
                        cmp.violations.push((network, m.x_a, m.d, closed, sim));
                    }
                }
            }
        }
    }
    cmp
}

pub fn oracle_relation() -> (bool, String) {
    let cmp = oracle_comparison(std::thread::available_parallelism().map_or(1, |n| n.get()));
    let share = cmp.agree as f64 / cmp.feasible.max(1) as f64;
    let listed: Vec<String> = cmp
        .violations
        .iter()
        .map(|(n, x, d, o, s)| format!("{n:?} x_a={x} d={d}: oracle {o:.2} > sim {s:.2}"))
        .collect();
    (
        cmp.feasible > 0 && share >= 0.95,
        format!(
            "oracle T_ev <= model-based T_ev in {}/{} feasible cells ({:.1}%); violations: [{}]",
            cmp.agree,
            cmp.feasible,
            100.0 * share,
            listed.join("; ")
        ),
    )
}
