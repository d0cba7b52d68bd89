//! Link optimization (multi-start downhill simplex), network evaluation with
//! per-node frozen settings, and distance scans.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{LinkGeometry, MxForm, SourceSetting, SystemParams};
use crate::diagnostics::plob_bound;
use crate::error::{Error, Result};
use crate::keyrate::{evaluate_link, KeyRateResult, Mode};

/// Objective value assigned to settings whose decoy bounds are infeasible.
const INFEASIBLE: f64 = -1.0;

/// Downhill simplex minimizer.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop when `|f_worst - f_best| <= rel_tol * |f_best|`.
    pub rel_tol: f64,
    pub max_evals: usize,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            rel_tol: 1e-4,
            max_evals: 4000,
            initial_step: 0.3,
        }
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Returns the best point and value.
    pub fn minimize<F: Fn(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> (Vec<f64>, f64) {
        let n = x0.len();
        if n == 0 {
            return (Vec::new(), f(x0));
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = f(&x);
            simplex.push((x, v));
        }
        let mut evals = n + 1;
        let by_value = |p: &(Vec<f64>, f64), q: &(Vec<f64>, f64)| {
            p.1.partial_cmp(&q.1).unwrap_or(Ordering::Equal)
        };

        while evals < self.max_evals {
            simplex.sort_by(by_value);
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if (worst - best).abs() <= self.rel_tol * best.abs() + f64::MIN_POSITIVE {
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let xr = along(-1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = f(&xe);
                evals += 1;
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let x = along(-0.5);
                    let v = f(&x);
                    (x, v)
                } else {
                    let x = along(0.5);
                    let v = f(&x);
                    (x, v)
                };
                evals += 1;
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for (x, v) in simplex.iter_mut().skip(1) {
                        for (xi, bi) in x.iter_mut().zip(&x0) {
                            *xi = bi + 0.5 * (*xi - bi);
                        }
                        *v = f(x);
                    }
                    evals += n;
                }
            }
        }
        simplex.sort_by(by_value);
        let (x, v) = simplex.swap_remove(0);
        (x, v)
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates of one side: `[ln mu, logit(nu/mu), l_mu,
/// l_nu, l_ohat]`, with probabilities the softmax of `(l_mu, l_nu, l_ohat,
/// 0)`; the vacuum probability takes up the slack.
pub fn encode_setting(s: &SourceSetting) -> [f64; 5] {
    let p_o = s.p_o.max(1e-12);
    let l = |p: f64| (p.max(1e-12) / p_o).ln();
    [
        s.mu.ln(),
        logit(s.nu / s.mu),
        l(s.p_mu),
        l(s.p_nu),
        l(s.p_ohat),
    ]
}

pub fn decode_setting(x: &[f64]) -> SourceSetting {
    let mu = x[0].clamp(-20.0, 3.0).exp();
    let nu = mu * sigmoid(x[1]);
    let m = x[2].max(x[3]).max(x[4]).max(0.0);
    let e = [x[2], x[3], x[4], 0.0].map(|v| (v - m).exp());
    let z: f64 = e.iter().sum();
    let (p_mu, p_nu, p_ohat) = (e[0] / z, e[1] / z, e[2] / z);
    SourceSetting {
        mu,
        nu,
        p_mu,
        p_nu,
        p_ohat,
        p_o: e[3] / z,
    }
}

fn encode_delta(delta: f64) -> f64 {
    logit(delta / FRAC_PI_2)
}

fn decode_delta(t: f64) -> f64 {
    FRAC_PI_2 * sigmoid(t)
}

/// Which variables `optimize_link` may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeVariables {
    pub side_a: bool,
    pub side_b: bool,
    pub delta: bool,
}

impl FreeVariables {
    pub const ALL: FreeVariables = FreeVariables {
        side_a: true,
        side_b: true,
        delta: true,
    };
    pub const DELTA_ONLY: FreeVariables = FreeVariables {
        side_a: false,
        side_b: false,
        delta: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub mode: Mode,
    pub mx_form: MxForm,
    /// Slice half-width grid for the final refinement, degrees.
    pub delta_grid_deg: (f64, f64),
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            starts: 16,
            seed: 0,
            rel_tol: 1e-4,
            max_evals: 4000,
            mode: Mode::Finite,
            mx_form: MxForm::FirstPrinciples,
            delta_grid_deg: (1.0, 15.0),
        }
    }
}

/// Unclamped `l / N`, or the infeasibility penalty.
fn objective(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    opts: &OptimizerOptions,
) -> f64 {
    match evaluate_link(a, b, geom, params, opts.mode, opts.mx_form) {
        Ok(r) => r.ell_unclamped / params.n_rounds,
        Err(_) => INFEASIBLE,
    }
}

/// Best slice half-width for fixed settings: integer-degree grid, then
/// golden-section search within one degree of the best grid point.
pub fn optimize_delta(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    opts: &OptimizerOptions,
) -> f64 {
    let f = |deg: f64| objective(a, b, geom, &params.with_delta(deg.to_radians()), opts);
    let (lo_deg, hi_deg) = opts.delta_grid_deg;
    let mut best = (lo_deg, f(lo_deg));
    let mut d = lo_deg + 1.0;
    while d <= hi_deg + 1e-9 {
        let v = f(d);
        if v > best.1 {
            best = (d, v);
        }
        d += 1.0;
    }
    let floor = (0.5 * lo_deg).max(1e-3);
    let (mut lo, mut hi) = ((best.0 - 1.0).max(floor), best.0 + 1.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-4 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if v >= best.1 { x } else { best.0 }.to_radians()
}

/// Result of a link optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOptimum {
    pub a: SourceSetting,
    pub b: SourceSetting,
    pub delta: f64,
    pub rate: f64,
    pub result: Option<KeyRateResult>,
}

fn random_side(rng: &mut ChaCha8Rng) -> [f64; 5] {
    [
        rng.gen_range(0.05f64..1.0).ln(),
        logit(rng.gen_range(0.01..0.5)),
        rng.gen_range(-2.0..1.0),
        rng.gen_range(-2.0..1.0),
        rng.gen_range(-6.0..-2.0),
    ]
}

/// Multi-start simplex search over the free variables, starting from the
/// given settings, then a slice-only refinement.
pub fn optimize_link(
    a0: &SourceSetting,
    b0: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    free: FreeVariables,
    opts: &OptimizerOptions,
) -> Result<LinkOptimum> {
    a0.validate()?;
    b0.validate()?;
    params.validate()?;

    let pack = |a: &[f64; 5], b: &[f64; 5], t: f64| -> Vec<f64> {
        let mut x = Vec::new();
        if free.side_a {
            x.extend_from_slice(a);
        }
        if free.side_b {
            x.extend_from_slice(b);
        }
        if free.delta {
            x.push(t);
        }
        x
    };
    let unpack = |x: &[f64]| -> (SourceSetting, SourceSetting, f64) {
        let mut i = 0;
        let a = if free.side_a {
            i += 5;
            decode_setting(&x[0..5])
        } else {
            *a0
        };
        let b = if free.side_b {
            i += 5;
            decode_setting(&x[i - 5..i])
        } else {
            *b0
        };
        let d = if free.delta {
            decode_delta(x[i])
        } else {
            params.delta
        };
        (a, b, d)
    };

    let (a, b) = if free.side_a || free.side_b {
        let nm = NelderMead {
            rel_tol: opts.rel_tol,
            max_evals: opts.max_evals,
            ..NelderMead::default()
        };
        let start_delta = encode_delta(params.delta);
        let runs: Vec<(Vec<f64>, f64)> = (0..opts.starts.max(1))
            .into_par_iter()
            .map(|s| {
                let x0 = if s == 0 {
                    pack(&encode_setting(a0), &encode_setting(b0), start_delta)
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(s as u64);
                    let ra = random_side(&mut rng);
                    let rb = random_side(&mut rng);
                    let t = encode_delta(rng.gen_range(2f64..15.0).to_radians());
                    pack(&ra, &rb, t)
                };
                let (x, v) = nm.minimize(
                    |x| {
                        let (a, b, d) = unpack(x);
                        -objective(&a, &b, geom, &params.with_delta(d), opts)
                    },
                    &x0,
                );
                (x, v)
            })
            .collect();
        let best = runs
            .into_iter()
            .min_by(|p, q| {
                p.1.partial_cmp(&q.1)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| {
                        p.0.iter()
                            .zip(&q.0)
                            .map(|(u, v)| u.total_cmp(v))
                            .find(|o| o.is_ne())
                            .unwrap_or(Ordering::Equal)
                    })
            })
            .expect("at least one start");
        let (a, b, _) = unpack(&best.0);
        (a, b)
    } else {
        (*a0, *b0)
    };

    let delta = if free.delta {
        optimize_delta(&a, &b, geom, params, opts)
    } else {
        params.delta
    };
    let result = evaluate_link(
        &a,
        &b,
        geom,
        &params.with_delta(delta),
        opts.mode,
        opts.mx_form,
    )
    .ok();
    Ok(LinkOptimum {
        a,
        b,
        delta,
        rate: result.as_ref().map_or(0.0, |r| r.rate),
        result,
    })
}

/// A user of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub name: String,
    pub distance_km: f64,
    pub setting: SourceSetting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub nodes: Vec<NetworkNode>,
    /// Pairs whose joint rate is optimized to fix the settings of both ends.
    pub anchors: Vec<(String, String)>,
    pub params: SystemParams,
}

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (i, n) in self.nodes.iter().enumerate() {
            if self.nodes[..i].iter().any(|m| m.name == n.name) {
                return Err(Error::InvalidSetting(format!(
                    "duplicate node name {:?}",
                    n.name
                )));
            }
            if !(n.distance_km >= 0.0 && n.distance_km.is_finite()) {
                return Err(Error::InvalidSetting(format!(
                    "node {:?}: distance {} km must be >= 0",
                    n.name, n.distance_km
                )));
            }
            n.setting
                .validate()
                .map_err(|e| Error::InvalidSetting(format!("node {:?}: {e}", n.name)))?;
        }
        for (x, y) in &self.anchors {
            for name in [x, y] {
                if !self.nodes.iter().any(|n| &n.name == name) {
                    return Err(Error::InvalidSetting(format!(
                        "anchor references unknown node {name:?}"
                    )));
                }
            }
            if x == y {
                return Err(Error::InvalidSetting(format!(
                    "anchor pairs {x:?} with itself"
                )));
            }
        }
        Ok(())
    }
}

fn setting_key(s: &SourceSetting) -> [f64; 6] {
    [s.mu, s.nu, s.p_mu, s.p_nu, s.p_o, s.p_ohat]
}

/// Orders two nodes so that the first plays side `a`: the node closer to
/// the relay, then the smaller signal intensity, then the remaining
/// settings, then the name.
pub fn orient<'n>(x: &'n NetworkNode, y: &'n NetworkNode) -> (&'n NetworkNode, &'n NetworkNode) {
    let cmp = x
        .distance_km
        .total_cmp(&y.distance_km)
        .then_with(|| {
            setting_key(&x.setting)
                .iter()
                .zip(setting_key(&y.setting).iter())
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| x.name.cmp(&y.name));
    if cmp == Ordering::Greater {
        (y, x)
    } else {
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    /// Node playing side `a` (closer to the relay).
    pub node_a: String,
    pub node_b: String,
    pub l_a_km: f64,
    pub l_b_km: f64,
    pub total_km: f64,
    pub delta_deg: f64,
    pub rate: f64,
    pub plob: f64,
    pub ratio: f64,
    pub exceeds_plob: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    /// Settings each node used, after anchor optimization.
    pub settings: Vec<NetworkNode>,
    pub anchor_rates: Vec<(String, String, f64)>,
    pub rows: Vec<PairRow>,
}

impl NetworkReport {
    pub fn row(&self, x: &str, y: &str) -> Option<&PairRow> {
        self.rows
            .iter()
            .find(|r| (r.node_a == x && r.node_b == y) || (r.node_a == y && r.node_b == x))
    }
}

/// Freezes per-node settings (optimizing anchor links first) and evaluates
/// every unordered pair with its own slice width.
pub fn evaluate_network(scn: &NetworkScenario, opts: &OptimizerOptions) -> Result<NetworkReport> {
    scn.validate()?;
    let mut nodes = scn.nodes.clone();
    let mut fixed = vec![false; nodes.len()];
    let mut anchor_rates = Vec::new();
    let index = |name: &str| nodes_index(&scn.nodes, name);

    for (x, y) in &scn.anchors {
        let (ix, iy) = (index(x), index(y));
        let (na, nb) = orient(&nodes[ix], &nodes[iy]);
        let (ia, ib) = (index(&na.name), index(&nb.name));
        let free = FreeVariables {
            side_a: !fixed[ia],
            side_b: !fixed[ib],
            delta: true,
        };
        let geom = LinkGeometry::new(na.distance_km, nb.distance_km);
        let opt = optimize_link(&na.setting, &nb.setting, &geom, &scn.params, free, opts)?;
        nodes[ia].setting = opt.a;
        nodes[ib].setting = opt.b;
        fixed[ia] = true;
        fixed[ib] = true;
        anchor_rates.push((nodes[ia].name.clone(), nodes[ib].name.clone(), opt.rate));
    }

    let mut pairs = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            pairs.push((i, j));
        }
    }
    let rows: Vec<PairRow> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (na, nb) = orient(&nodes[i], &nodes[j]);
            let geom = LinkGeometry::new(na.distance_km, nb.distance_km);
            let opt = optimize_link(
                &na.setting,
                &nb.setting,
                &geom,
                &scn.params,
                FreeVariables::DELTA_ONLY,
                opts,
            )?;
            let total = geom.total_km();
            let plob = plob_bound(total, scn.params.eta_d, scn.params.alpha_db_per_km);
            Ok(PairRow {
                node_a: na.name.clone(),
                node_b: nb.name.clone(),
                l_a_km: geom.l_a_km,
                l_b_km: geom.l_b_km,
                total_km: total,
                delta_deg: opt.delta.to_degrees(),
                rate: opt.rate,
                plob,
                ratio: opt.rate / plob,
                exceeds_plob: opt.rate > plob,
            })
        })
        .collect::<Result<_>>()?;
    Ok(NetworkReport {
        settings: nodes,
        anchor_rates,
        rows,
    })
}

fn nodes_index(nodes: &[NetworkNode], name: &str) -> usize {
    nodes
        .iter()
        .position(|n| n.name == name)
        .expect("validated node name")
}

/// How a total distance is split between the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSplit {
    Symmetric,
    /// `l_b - l_a` fixed, in km.
    Offset(f64),
}

impl ChannelSplit {
    pub fn geometry(&self, total_km: f64) -> Result<LinkGeometry> {
        let off = match *self {
            ChannelSplit::Symmetric => 0.0,
            ChannelSplit::Offset(o) => o,
        };
        if !(off >= 0.0 && total_km >= off) {
            return Err(Error::InvalidParams(format!(
                "total distance {total_km} km shorter than arm offset {off} km"
            )));
        }
        Ok(LinkGeometry::new(
            0.5 * (total_km - off),
            0.5 * (total_km + off),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub total_km: f64,
    pub l_a_km: f64,
    pub l_b_km: f64,
    pub rate_finite: f64,
    /// Asymptotic rate at the finite-key optimum.
    pub rate_asymptotic: f64,
    pub plob: f64,
    pub delta_deg: f64,
    pub a: SourceSetting,
    pub b: SourceSetting,
}

/// Starting settings for scans.
pub fn default_start() -> SourceSetting {
    SourceSetting {
        mu: 0.5,
        nu: 0.05,
        p_mu: 0.3,
        p_nu: 0.2,
        p_o: 0.49,
        p_ohat: 0.01,
    }
}

/// Optimized finite rate, asymptotic rate at the same settings, and PLOB at
/// each grid distance.
pub fn distance_scan(
    params: &SystemParams,
    split: ChannelSplit,
    grid_km: &[f64],
    opts: &OptimizerOptions,
) -> Result<Vec<ScanRow>> {
    params.validate()?;
    let geoms: Vec<LinkGeometry> = grid_km
        .iter()
        .map(|&l| split.geometry(l))
        .collect::<Result<_>>()?;
    let start = default_start();
    let mut optima: Vec<LinkOptimum> = geoms
        .par_iter()
        .map(|g| optimize_link(&start, &start, g, params, FreeVariables::ALL, opts))
        .collect::<Result<_>>()?;

    // Neighbouring optima are valid candidates too; a point may have been
    // missed by its own starts.
    loop {
        let candidates: Vec<Option<LinkOptimum>> = (0..geoms.len())
            .into_par_iter()
            .map(|i| {
                let mut best: Option<LinkOptimum> = None;
                for j in [i.wrapping_sub(1), i + 1] {
                    if j >= geoms.len() || optima[j].rate <= 0.0 {
                        continue;
                    }
                    let o = optimize_link(
                        &optima[j].a,
                        &optima[j].b,
                        &geoms[i],
                        params,
                        FreeVariables::DELTA_ONLY,
                        opts,
                    )
                    .ok()?;
                    let current = best.as_ref().map_or(optima[i].rate, |b| b.rate);
                    if o.rate > current {
                        best = Some(o);
                    }
                }
                best
            })
            .collect();
        let mut changed = false;
        for (o, c) in optima.iter_mut().zip(candidates) {
            if let Some(c) = c {
                *o = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut rows = Vec::with_capacity(geoms.len());
    for (g, o) in geoms.iter().zip(&optima) {
        let p = params.with_delta(o.delta);
        let asym = evaluate_link(&o.a, &o.b, g, &p, Mode::Asymptotic, opts.mx_form)
            .map_or(0.0, |r| r.rate);
        rows.push(ScanRow {
            total_km: g.total_km(),
            l_a_km: g.l_a_km,
            l_b_km: g.l_b_km,
            rate_finite: o.rate,
            rate_asymptotic: asym,
            plob: plob_bound(g.total_km(), params.eta_d, params.alpha_db_per_km),
            delta_deg: o.delta.to_degrees(),
            a: o.a,
            b: o.b,
        });
    }
    Ok(rows)
}
