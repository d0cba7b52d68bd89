//! Round-by-round Monte Carlo of preparation, relay measurement, Z-basis
//! post-matching and phase-sliced X-basis matching, with photon-number tags.
//!
//! Rounds are generated in chunks of `CHUNK` rounds; chunk `c` draws from
//! ChaCha8 stream `c` of the run seed, so a tally depends only on
//! `(seed, config)` and not on the number of worker threads.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{
    observe, single_photon_yield, Channel, Intensity, LinkGeometry, MxForm, ObservedCounts,
    SourceSetting, SystemParams,
};
use crate::error::{Error, Result};
use crate::keyrate::{estimate, DecoyEstimates, Mode};

pub const CHUNK: u64 = 1 << 16;
/// Default number of deviation bins across `[-delta, delta]` used to group
/// retained X events before matching.
pub const DEFAULT_MATCH_BINS: u32 = 8;
/// Stream reserved for the Z-basis matching shuffle and misalignment flips.
const MATCH_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub a: SourceSetting,
    pub b: SourceSetting,
    pub geom: LinkGeometry,
    pub params: SystemParams,
    pub n_rounds: u64,
    pub seed: u64,
    pub match_bins: u32,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        self.params.validate()?;
        Channel::new(&self.geom, &self.params)?;
        if self.n_rounds == 0 {
            return Err(Error::InvalidParams("n_rounds must be >= 1".into()));
        }
        if self.match_bins == 0 {
            return Err(Error::InvalidParams("match_bins must be >= 1".into()));
        }
        if self.params.sigma + self.params.delta > FRAC_PI_2 {
            return Err(Error::InvalidParams(
                "sigma + delta must not exceed pi/2 for the event simulation".into(),
            ));
        }
        Ok(())
    }

    /// The analytic parameters with `N` set to the simulated round count.
    pub fn analytic_params(&self) -> SystemParams {
        SystemParams {
            n_rounds: self.n_rounds as f64,
            ..self.params
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Click {
    None,
    Left,
    Right,
    /// Both detectors fired; discarded as unsuccessful.
    Both,
}

/// Everything drawn for one time bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub k_a: Intensity,
    pub k_b: Intensity,
    pub theta_a: f64,
    pub theta_b: f64,
    pub phi_ab: f64,
    /// Announced global phase difference `theta_a - theta_b + phi_ab` in
    /// `[0, 2 pi)`.
    pub theta: f64,
    /// Phase difference actually seen by the interferometer.
    pub theta_phys: f64,
    pub r_a: bool,
    pub r_b: bool,
    pub n_a: u32,
    pub n_b: u32,
    pub click: Click,
}

/// Folds `theta` to the nearest multiple of pi. Returns `(at_pi, deviation)`
/// with the deviation in `[-pi/2, pi/2]`.
pub fn fold_phase(theta: f64) -> (bool, f64) {
    let t = theta.rem_euclid(2.0 * PI);
    let k = (t / PI).round();
    (k == 1.0, t - k * PI)
}

/// Misaligned physical phase: the folded deviation `|d|` is rotated by
/// `sigma` on the circle of length pi/2, keeping sign and centre.
pub fn misaligned_phase(theta: f64, sigma: f64) -> f64 {
    let (at_pi, d) = fold_phase(theta);
    let shifted = (d.abs() + sigma).rem_euclid(FRAC_PI_2);
    let centre = if at_pi { PI } else { 0.0 };
    centre + shifted.copysign(d)
}

struct Side {
    cumulative: [f64; 4],
    intensity: [f64; 4],
    poisson: [Option<Poisson<f64>>; 4],
}

impl Side {
    fn new(s: &SourceSetting) -> Self {
        let mut cumulative = [0.0; 4];
        let mut acc = 0.0;
        for k in Intensity::ALL {
            acc += s.probability(k);
            cumulative[k.index()] = acc;
        }
        cumulative[3] = f64::INFINITY;
        let intensity = Intensity::ALL.map(|k| s.intensity(k));
        let poisson = intensity.map(|m| if m > 0.0 { Poisson::new(m).ok() } else { None });
        Side {
            cumulative,
            intensity,
            poisson,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Intensity {
        let u: f64 = rng.gen();
        let i = self.cumulative.iter().position(|&c| u < c).unwrap_or(3);
        Intensity::ALL[i]
    }

    fn photons(&self, k: Intensity, rng: &mut ChaCha8Rng) -> u32 {
        match &self.poisson[k.index()] {
            Some(p) => p.sample(rng) as u32,
            None => 0,
        }
    }
}

struct Sampler {
    ch: Channel,
    a: Side,
    b: Side,
    sigma: f64,
}

impl Sampler {
    fn new(cfg: &MonteCarloConfig) -> Result<Self> {
        Ok(Sampler {
            ch: Channel::new(&cfg.geom, &cfg.params)?,
            a: Side::new(&cfg.a),
            b: Side::new(&cfg.b),
            sigma: cfg.params.sigma,
        })
    }

    fn round(&self, index: u64, rng: &mut ChaCha8Rng) -> RoundRecord {
        let k_a = self.a.draw(rng);
        let k_b = self.b.draw(rng);
        let theta_a = rng.gen::<f64>() * 2.0 * PI;
        let theta_b = rng.gen::<f64>() * 2.0 * PI;
        let phi_ab = rng.gen::<f64>() * 2.0 * PI;
        let r_a: bool = rng.gen();
        let r_b: bool = rng.gen();
        let theta = (theta_a - theta_b + phi_ab).rem_euclid(2.0 * PI);
        let theta_phys = misaligned_phase(theta, self.sigma);

        let n_a = self.a.photons(k_a, rng);
        let n_b = self.b.photons(k_b, rng);
        let (ma, mb) = (self.a.intensity[k_a.index()], self.b.intensity[k_b.index()]);
        let mut left = false;
        let mut right = false;
        let n = n_a + n_b;
        if n > 0 {
            let phase = theta_phys + if r_a != r_b { PI } else { 0.0 };
            let base = self.ch.eta_a * ma + self.ch.eta_b * mb;
            let cross = 2.0 * (self.ch.eta_a * ma * self.ch.eta_b * mb).sqrt() * phase.cos();
            let p_left = (base + cross) / (2.0 * (ma + mb));
            let p_right = (base - cross) / (2.0 * (ma + mb));
            for _ in 0..n {
                let u: f64 = rng.gen();
                if u < p_left {
                    left = true;
                } else if u < p_left + p_right {
                    right = true;
                }
            }
        }
        let p_d = self.ch.p_d;
        left |= rng.gen::<f64>() < p_d;
        right |= rng.gen::<f64>() < p_d;
        let click = match (left, right) {
            (false, false) => Click::None,
            (true, false) => Click::Left,
            (false, true) => Click::Right,
            (true, true) => Click::Both,
        };
        RoundRecord {
            index,
            k_a,
            k_b,
            theta_a,
            theta_b,
            phi_ab,
            theta,
            theta_phys,
            r_a,
            r_b,
            n_a,
            n_b,
            click,
        }
    }
}

/// Unannounced single-click event usable in the Z basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZEvent {
    pub index: u64,
    pub alice_mu: bool,
    pub bob_mu: bool,
    pub n_a: u32,
    pub n_b: u32,
}

/// Decoy-decoy single click retained by the phase slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XEvent {
    pub index: u64,
    pub at_pi: bool,
    /// Announced deviation from the nearest multiple of pi.
    pub deviation: f64,
    pub theta_phys: f64,
    pub r_a: bool,
    pub r_b: bool,
    pub left: bool,
}

/// Raw per-round tallies and the events kept for matching.
#[derive(Debug, Clone, Default)]
pub struct RoundLog {
    pub sent: [[u64; 4]; 4],
    pub single_clicks: [[u64; 4]; 4],
    pub double_clicks: [[u64; 4]; 4],
    /// Rounds where Alice emitted one photon and Bob sent a vacuum state.
    pub y10_trials: u64,
    pub y10_clicks: u64,
    pub y01_trials: u64,
    pub y01_clicks: u64,
    pub z_events: Vec<ZEvent>,
    pub x_events: Vec<XEvent>,
}

impl RoundLog {
    fn record(&mut self, r: &RoundRecord, delta: f64) {
        let (i, j) = (r.k_a.index(), r.k_b.index());
        self.sent[i][j] += 1;
        let single = matches!(r.click, Click::Left | Click::Right);
        if single {
            self.single_clicks[i][j] += 1;
        } else if r.click == Click::Both {
            self.double_clicks[i][j] += 1;
        }

        let vac_a = matches!(r.k_a, Intensity::Vacuum | Intensity::DeclareVacuum);
        let vac_b = matches!(r.k_b, Intensity::Vacuum | Intensity::DeclareVacuum);
        if vac_b && r.n_a == 1 {
            self.y10_trials += 1;
            self.y10_clicks += single as u64;
        }
        if vac_a && r.n_b == 1 {
            self.y01_trials += 1;
            self.y01_clicks += single as u64;
        }
        if !single {
            return;
        }

        let z_a = matches!(r.k_a, Intensity::Signal | Intensity::Vacuum);
        let z_b = matches!(r.k_b, Intensity::Signal | Intensity::Vacuum);
        if z_a && z_b {
            self.z_events.push(ZEvent {
                index: r.index,
                alice_mu: r.k_a == Intensity::Signal,
                bob_mu: r.k_b == Intensity::Signal,
                n_a: r.n_a,
                n_b: r.n_b,
            });
        }
        if r.k_a == Intensity::Decoy && r.k_b == Intensity::Decoy {
            let (at_pi, deviation) = fold_phase(r.theta);
            if deviation.abs() <= delta {
                self.x_events.push(XEvent {
                    index: r.index,
                    at_pi,
                    deviation,
                    theta_phys: r.theta_phys,
                    r_a: r.r_a,
                    r_b: r.r_b,
                    left: r.click == Click::Left,
                });
            }
        }
    }

    fn merge(mut self, other: RoundLog) -> RoundLog {
        for i in 0..4 {
            for j in 0..4 {
                self.sent[i][j] += other.sent[i][j];
                self.single_clicks[i][j] += other.single_clicks[i][j];
                self.double_clicks[i][j] += other.double_clicks[i][j];
            }
        }
        self.y10_trials += other.y10_trials;
        self.y10_clicks += other.y10_clicks;
        self.y01_trials += other.y01_trials;
        self.y01_clicks += other.y01_clicks;
        self.z_events.extend(other.z_events);
        self.x_events.extend(other.x_events);
        self
    }
}

/// Replays `cfg.n_rounds` rounds. The result is independent of the rayon
/// thread count.
pub fn simulate_rounds(cfg: &MonteCarloConfig) -> Result<RoundLog> {
    cfg.validate()?;
    let sampler = Sampler::new(cfg)?;
    let chunks = cfg.n_rounds.div_ceil(CHUNK);
    let delta = cfg.params.delta;
    let logs: Vec<RoundLog> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let start = c * CHUNK;
            let end = (start + CHUNK).min(cfg.n_rounds);
            let mut log = RoundLog::default();
            for i in start..end {
                let r = sampler.round(i, &mut rng);
                log.record(&r, delta);
            }
            log
        })
        .collect();
    Ok(logs.into_iter().fold(RoundLog::default(), RoundLog::merge))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZTally {
    pub mu_events: u64,
    pub o_events: u64,
    pub pairs_formed: u64,
    pub discarded: u64,
    pub n_c: u64,
    pub n_e: u64,
    pub n_z: u64,
    pub m_z: u64,
    /// Correct pairs whose signal bins each held exactly one photon.
    pub tagged_single_pairs: u64,
}

/// Random pairing of Alice's signal and vacuum events, Bob's discard and
/// flip rules, and error classification.
pub fn post_match_z(log: &RoundLog, params: &SystemParams, seed: u64) -> ZTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MATCH_STREAM);
    let mut mu: Vec<&ZEvent> = log.z_events.iter().filter(|e| e.alice_mu).collect();
    let o: Vec<&ZEvent> = log.z_events.iter().filter(|e| !e.alice_mu).collect();
    mu.shuffle(&mut rng);

    let mut t = ZTally {
        mu_events: mu.len() as u64,
        o_events: o.len() as u64,
        ..ZTally::default()
    };
    for (ei, ej) in mu.iter().zip(o.iter()) {
        t.pairs_formed += 1;
        if ei.bob_mu == ej.bob_mu {
            t.discarded += 1;
            continue;
        }
        let alice_bit = ei.index > ej.index;
        let first_is_mu = if ei.index < ej.index {
            ei.bob_mu
        } else {
            ej.bob_mu
        };
        let mut bob_bit = !first_is_mu;
        bob_bit = !bob_bit;
        if rng.gen::<f64>() < params.e_d_z {
            bob_bit = !bob_bit;
        }
        let correct_type = !ei.bob_mu;
        if correct_type {
            t.n_c += 1;
            if ei.n_a == 1 && ej.n_b == 1 {
                t.tagged_single_pairs += 1;
            }
        } else {
            t.n_e += 1;
        }
        t.n_z += 1;
        if alice_bit != bob_bit {
            t.m_z += 1;
        }
    }
    t
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct XTally {
    pub retained: u64,
    pub unmatched: u64,
    pub n_x: u64,
    pub m_x: u64,
    /// Expected number of effective single-photon pairs among the matched
    /// pairs, given their phases.
    pub effective_pairs: f64,
    /// Expected errors among those effective pairs.
    pub effective_errors: f64,
}

/// Groups retained decoy events by announced deviation, matches them in
/// arrival order within each group, and applies the X-basis bit rules.
pub fn post_match_x(
    log: &RoundLog,
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    match_bins: u32,
) -> Result<XTally> {
    let ch = Channel::new(geom, params)?;
    let y10 = single_photon_yield(ch.eta_a, ch.p_d)?;
    let y01 = single_photon_yield(ch.eta_b, ch.p_d)?;
    let photonic = ch.eta_a * ch.eta_b * (1.0 - ch.p_d).powi(2) / (y10 * y01);
    let (na, nb) = (a.nu, b.nu);
    let weight = 2.0 * na * nb * (-2.0 * (na + nb)).exp() * y10 * y01;

    let bins = match_bins as usize;
    let delta = params.delta;
    let mut groups: Vec<Vec<&XEvent>> = vec![Vec::new(); bins];
    for e in &log.x_events {
        let pos = ((e.deviation + delta) / (2.0 * delta) * bins as f64).floor() as isize;
        groups[pos.clamp(0, bins as isize - 1) as usize].push(e);
    }

    let mut t = XTally {
        retained: log.x_events.len() as u64,
        ..XTally::default()
    };
    for g in &groups {
        t.unmatched += (g.len() % 2) as u64;
        for pair in g.chunks_exact(2) {
            let (ei, ej) = (pair[0], pair[1]);
            let alice_bit = ei.r_a != ej.r_a;
            let mut bob_bit = ei.r_b != ej.r_b;
            let same_centre = ei.at_pi == ej.at_pi;
            let same_detector = ei.left == ej.left;
            if same_centre != same_detector {
                bob_bit = !bob_bit;
            }
            t.n_x += 1;
            t.m_x += (alice_bit != bob_bit) as u64;

            let qi = ch.phase_gain(na, nb, ei.theta_phys);
            let qj = ch.phase_gain(na, nb, ej.theta_phys);
            let w = weight / (qi * qj);
            let nominal = if same_centre { 0.0 } else { PI };
            let dphi = ei.theta_phys - ej.theta_phys - nominal;
            let e = photonic * (0.5 * dphi).sin().powi(2) + 0.5 * (1.0 - photonic);
            t.effective_pairs += w;
            t.effective_errors += w * e;
        }
    }
    Ok(t)
}

/// Serializable summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTally {
    pub seed: u64,
    pub n_rounds: u64,
    pub sent: [[u64; 4]; 4],
    pub single_clicks: [[u64; 4]; 4],
    pub double_clicks: [[u64; 4]; 4],
    pub y10_trials: u64,
    pub y10_clicks: u64,
    pub y01_trials: u64,
    pub y01_clicks: u64,
    pub z: ZTally,
    pub x: XTally,
}

pub fn run_monte_carlo(cfg: &MonteCarloConfig) -> Result<MonteCarloTally> {
    let log = simulate_rounds(cfg)?;
    let z = post_match_z(&log, &cfg.params, cfg.seed);
    let x = post_match_x(&log, &cfg.a, &cfg.b, &cfg.geom, &cfg.params, cfg.match_bins)?;
    Ok(MonteCarloTally {
        seed: cfg.seed,
        n_rounds: cfg.n_rounds,
        sent: log.sent,
        single_clicks: log.single_clicks,
        double_clicks: log.double_clicks,
        y10_trials: log.y10_trials,
        y10_clicks: log.y10_clicks,
        y01_trials: log.y01_trials,
        y01_clicks: log.y01_clicks,
        z,
        x,
    })
}

/// One analytic-versus-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub analytic: f64,
    pub simulated: f64,
    pub standard_error: f64,
    pub z_score: f64,
    pub flagged: bool,
}

/// A decoy bound against the tagged truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub truth: f64,
    pub standard_error: f64,
    /// True when the bound holds within three standard errors.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub tally: MonteCarloTally,
    pub comparisons: Vec<Comparison>,
    pub bound_checks: Vec<BoundCheck>,
    pub estimates: DecoyEstimates,
    pub max_abs_z: f64,
    pub flagged: usize,
    pub bounds_violated: usize,
}

pub const Z_THRESHOLD: f64 = 3.0;

fn compare(name: String, analytic: f64, simulated: f64, se: f64) -> Comparison {
    let z = if se > 0.0 {
        (simulated - analytic) / se
    } else if simulated == analytic {
        0.0
    } else {
        f64::INFINITY
    };
    Comparison {
        name,
        analytic,
        simulated,
        standard_error: se,
        z_score: z,
        flagged: !(z.abs() <= Z_THRESHOLD),
    }
}

/// Poisson-style count error, floored at one count so that a single event
/// against a vanishing expectation is not flagged.
fn count_se(expected: f64) -> f64 {
    expected.max(1.0).sqrt()
}

fn lower_bound_check(name: &str, bound: f64, truth: f64, se: f64) -> BoundCheck {
    BoundCheck {
        name: name.to_string(),
        bound,
        truth,
        standard_error: se,
        holds: bound <= truth + Z_THRESHOLD * se,
    }
}

/// Compares a tally with the analytic model and the decoy bounds.
pub fn compare_with_analytics(
    cfg: &MonteCarloConfig,
    tally: &MonteCarloTally,
) -> Result<MonteCarloReport> {
    let params = cfg.analytic_params();
    let counts: ObservedCounts =
        observe(&cfg.a, &cfg.b, &cfg.geom, &params, MxForm::FirstPrinciples)?;
    let ch = Channel::new(&cfg.geom, &params)?;

    let mut comparisons = Vec::new();
    for ka in Intensity::ALL {
        for kb in Intensity::ALL {
            let (i, j) = (ka.index(), kb.index());
            let sent = tally.sent[i][j];
            if sent == 0 {
                continue;
            }
            let q = ch.overall_gain(cfg.a.intensity(ka), cfg.b.intensity(kb));
            let n = sent as f64;
            let se = count_se(n * q * (1.0 - q)) / n;
            comparisons.push(compare(
                format!("gain {}-{}", ka.label(), kb.label()),
                q,
                tally.single_clicks[i][j] as f64 / n,
                se,
            ));
        }
    }
    comparisons.push(compare(
        "n_z".into(),
        counts.n_z,
        tally.z.n_z as f64,
        count_se(counts.n_z),
    ));
    comparisons.push(compare(
        "m_z".into(),
        counts.m_z,
        tally.z.m_z as f64,
        count_se(counts.m_z),
    ));
    comparisons.push(compare(
        "n_x".into(),
        counts.n_x,
        tally.x.n_x as f64,
        count_se(counts.n_x / 2.0),
    ));
    comparisons.push(compare(
        "m_x".into(),
        counts.m_x,
        tally.x.m_x as f64,
        count_se(counts.m_x),
    ));

    let y10 = single_photon_yield(ch.eta_a, ch.p_d)?;
    let y01 = single_photon_yield(ch.eta_b, ch.p_d)?;
    for (name, y, trials, clicks) in [
        ("y10", y10, tally.y10_trials, tally.y10_clicks),
        ("y01", y01, tally.y01_trials, tally.y01_clicks),
    ] {
        if trials > 0 {
            let n = trials as f64;
            comparisons.push(compare(
                name.into(),
                y,
                clicks as f64 / n,
                count_se(n * y * (1.0 - y)) / n,
            ));
        }
    }

    let (dec, _) = estimate(
        &counts,
        &cfg.a,
        &cfg.b,
        &cfg.geom,
        &params,
        Mode::Asymptotic,
    )?;
    let mut bound_checks = Vec::new();
    for (name, bound, trials, clicks) in [
        ("y10", dec.y10_lower, tally.y10_trials, tally.y10_clicks),
        ("y01", dec.y01_lower, tally.y01_trials, tally.y01_clicks),
    ] {
        if trials > 0 {
            let n = trials as f64;
            let p = clicks as f64 / n;
            bound_checks.push(lower_bound_check(
                name,
                bound,
                p,
                count_se(n * p * (1.0 - p)) / n,
            ));
        }
    }
    let s11z_truth = tally.z.tagged_single_pairs as f64;
    bound_checks.push(lower_bound_check(
        "s11_z",
        dec.s11_z_lower,
        s11z_truth,
        count_se(s11z_truth),
    ));
    let s11x_truth = tally.x.effective_pairs;
    bound_checks.push(lower_bound_check(
        "s11_x",
        dec.s11_x_lower,
        s11x_truth,
        count_se(s11x_truth),
    ));
    // Upper bound on effective errors: the truth must not exceed it.
    let t_truth = tally.x.effective_errors;
    let t_se = count_se(t_truth);
    bound_checks.push(BoundCheck {
        name: "t11_x".into(),
        bound: dec.t11_x_upper,
        truth: t_truth,
        standard_error: t_se,
        holds: t_truth <= dec.t11_x_upper + Z_THRESHOLD * t_se,
    });

    let max_abs_z = comparisons
        .iter()
        .map(|c| c.z_score.abs())
        .fold(0.0, f64::max);
    let flagged = comparisons.iter().filter(|c| c.flagged).count();
    let bounds_violated = bound_checks.iter().filter(|c| !c.holds).count();
    Ok(MonteCarloReport {
        config: cfg.clone(),
        tally: tally.clone(),
        comparisons,
        bound_checks,
        estimates: dec,
        max_abs_z,
        flagged,
        bounds_violated,
    })
}

/// Simulation and comparison in one call.
pub fn monte_carlo_report(cfg: &MonteCarloConfig) -> Result<MonteCarloReport> {
    let tally = run_monte_carlo(cfg)?;
    compare_with_analytics(cfg, &tally)
}
