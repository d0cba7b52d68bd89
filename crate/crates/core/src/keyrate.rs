//! Decoy-state estimation of the single-photon-pair quantities and the
//! finite-key and asymptotic key lengths.
//!
//! Every conversion between an observed count and its expectation goes
//! through an [`Estimator`], which records it in a [`ChernoffLedger`]. In
//! asymptotic mode the conversions are the identity and nothing is recorded.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel_model::{
    inverse_gain_integral, observe, Channel, Intensity, LinkGeometry, MxForm, ObservedCounts,
    SourceSetting, SystemParams,
};
use crate::error::{Error, Result, Side};
use crate::finite_stats::{
    binary_entropy, chernoff_expected_bounds, chernoff_observed_bounds, compose_epsilons,
    random_sampling_gamma, EpsilonBudget,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Finite,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Expected value from an observation.
    Expected,
    /// Observation from an expected value.
    Observed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernoffEntry {
    pub label: String,
    pub kind: BoundKind,
    pub side: BoundSide,
    pub input: f64,
    pub output: f64,
}

/// Record of every concentration bound charged to `eps_0 + eps_1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChernoffLedger {
    pub entries: Vec<ChernoffEntry>,
}

impl ChernoffLedger {
    pub fn count(&self) -> u32 {
        self.entries.len() as u32
    }
}

/// Applies the concentration bounds for one pipeline run.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub mode: Mode,
    pub eps: f64,
    pub ledger: ChernoffLedger,
}

impl Estimator {
    pub fn new(mode: Mode, eps: f64) -> Self {
        Estimator {
            mode,
            eps,
            ledger: ChernoffLedger::default(),
        }
    }

    fn apply(&mut self, label: &str, kind: BoundKind, side: BoundSide, x: f64) -> f64 {
        if self.mode == Mode::Asymptotic {
            return x.max(0.0);
        }
        let iv = match kind {
            BoundKind::Expected => chernoff_expected_bounds(x, self.eps),
            BoundKind::Observed => chernoff_observed_bounds(x, self.eps),
        };
        let output = match side {
            BoundSide::Lower => iv.lower,
            BoundSide::Upper => iv.upper,
        };
        self.ledger.entries.push(ChernoffEntry {
            label: label.to_string(),
            kind,
            side,
            input: x,
            output,
        });
        output
    }

    pub fn expected_lower(&mut self, label: &str, x: f64) -> f64 {
        self.apply(label, BoundKind::Expected, BoundSide::Lower, x)
    }

    pub fn expected_upper(&mut self, label: &str, x: f64) -> f64 {
        self.apply(label, BoundKind::Expected, BoundSide::Upper, x)
    }

    pub fn observed_lower(&mut self, label: &str, x: f64) -> f64 {
        self.apply(label, BoundKind::Observed, BoundSide::Lower, x)
    }

    pub fn observed_upper(&mut self, label: &str, x: f64) -> f64 {
        self.apply(label, BoundKind::Observed, BoundSide::Upper, x)
    }
}

/// Bounded single-photon-pair quantities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecoyEstimates {
    pub y01_lower: f64,
    pub y10_lower: f64,
    pub z01_lower: f64,
    pub z10_lower: f64,
    pub s11_z_lower: f64,
    pub z00_lower: f64,
    pub z0mub_lower: f64,
    pub s0mub_z_lower: f64,
    pub s11_x_lower: f64,
    /// Lower and upper expected bounds on the double-vacuum gain.
    pub q00_lower: f64,
    pub q00_upper: f64,
    pub vacuum_error_lower: f64,
    pub double_vacuum_error_upper: f64,
    pub t11_x_upper: f64,
    pub e11_x_upper: f64,
    pub gamma: f64,
    pub phi11_z_upper: f64,
}

fn require_declare_vacuum(a: &SourceSetting, b: &SourceSetting) -> Result<()> {
    if !(a.p_ohat > 0.0) {
        return Err(Error::MissingDeclareVacuum(Side::A));
    }
    if !(b.p_ohat > 0.0) {
        return Err(Error::MissingDeclareVacuum(Side::B));
    }
    Ok(())
}

/// One side's decoy bound. `m`/`n` are the remote user's signal and decoy
/// intensities; `x_nu` is the (vacuum, decoy) count with the vacuum side
/// taken over both vacuum labels, `x_mu` the (declare-vacuum, signal) count.
#[allow(clippy::too_many_arguments)]
fn yield_bound(
    n_rounds: f64,
    m: f64,
    n: f64,
    x_nu_lower: f64,
    p_nu_pair: f64,
    x_mu_upper: f64,
    p_mu_pair: f64,
    x_vac_upper: f64,
    p_vac: f64,
) -> f64 {
    let pre = m / (n_rounds * (m * n - n * n));
    pre * (n.exp() * x_nu_lower / p_nu_pair
        - (n * n) / (m * m) * m.exp() * x_mu_upper / p_mu_pair
        - (m * m - n * n) / (m * m) * x_vac_upper / p_vac)
}

/// Lower bounds on the yields `y01` (only Bob emits one photon) and `y10`.
pub fn estimate_singles_yields(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    params: &SystemParams,
    est: &mut Estimator,
) -> Result<(f64, f64)> {
    require_declare_vacuum(a, b)?;
    use Intensity::{DeclareVacuum, Decoy, Signal, Vacuum};
    let n = params.n_rounds;

    let x_o_nub = counts.get(Vacuum, Decoy) + counts.get(DeclareVacuum, Decoy);
    let x_o_nub_l = est.expected_lower("x(o_a nu_b) lower", x_o_nub);
    let x_oh_mub_u = est.expected_upper("x(o^_a mu_b) upper", counts.get(DeclareVacuum, Signal));
    let x_d_u = est.expected_upper("x_oo^d upper (y01)", counts.x_oo_d);
    let y01 = yield_bound(
        n,
        b.mu,
        b.nu,
        x_o_nub_l,
        (a.p_o + a.p_ohat) * b.p_nu,
        x_oh_mub_u,
        a.p_ohat * b.p_mu,
        x_d_u,
        counts.p_oo_d,
    );

    let x_nua_o = counts.get(Decoy, Vacuum) + counts.get(Decoy, DeclareVacuum);
    let x_nua_o_l = est.expected_lower("x(nu_a o_b) lower", x_nua_o);
    let x_mua_oh_u = est.expected_upper("x(mu_a o^_b) upper", counts.get(Signal, DeclareVacuum));
    let x_d_u2 = est.expected_upper("x_oo^d upper (y10)", counts.x_oo_d);
    let y10 = yield_bound(
        n,
        a.mu,
        a.nu,
        x_nua_o_l,
        a.p_nu * (b.p_o + b.p_ohat),
        x_mua_oh_u,
        a.p_mu * b.p_ohat,
        x_d_u2,
        counts.p_oo_d,
    );

    if !(y01 > 0.0) {
        return Err(Error::InfeasibleDecoy(format!(
            "y01 lower bound {y01:.3e} <= 0"
        )));
    }
    if !(y10 > 0.0) {
        return Err(Error::InfeasibleDecoy(format!(
            "y10 lower bound {y10:.3e} <= 0"
        )));
    }
    Ok((y01.min(1.0), y10.min(1.0)))
}

/// Lower bound on the effective single-photon pairs in the Z basis, as an
/// observed count. Returns `(z01, z10, s11)`.
pub fn estimate_s11_z(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    params: &SystemParams,
    y01: f64,
    y10: f64,
    est: &mut Estimator,
) -> (f64, f64, f64) {
    let n = params.n_rounds;
    let z10 = n * a.p_mu * b.p_o * a.mu * (-a.mu).exp() * y10;
    let z01 = n * a.p_o * b.p_mu * b.mu * (-b.mu).exp() * y01;
    let s11 = est.observed_lower("s11^z", z01 * z10 / counts.x_max);
    (z01, z10, s11.min(counts.n_z))
}

fn declare_vacuum_lower(counts: &ObservedCounts, est: &mut Estimator) -> f64 {
    est.expected_lower("x_oo^d lower", counts.x_oo_d)
}

/// Lower bound on the Z pairs where Alice's signal bin carried no photon.
/// Returns `(z00, z0mub, s0mub)`.
pub fn estimate_s0mub_z(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    x_d_lower: f64,
    est: &mut Estimator,
) -> Result<(f64, f64, f64)> {
    require_declare_vacuum(a, b)?;
    use Intensity::{DeclareVacuum, Signal};
    let z00 = a.p_mu * b.p_o * (-a.mu).exp() * x_d_lower / counts.p_oo_d;
    let x_oh_mub_l = est.expected_lower("x(o^_a mu_b) lower", counts.get(DeclareVacuum, Signal));
    let x_omu = a.p_o * x_oh_mub_l / a.p_ohat;
    let z0mu = a.p_mu * b.p_mu * (-a.mu).exp() * x_omu / (a.p_o * b.p_mu);
    let x_oo = a.p_o * b.p_o * x_d_lower / counts.p_oo_d;
    let s0 = est.observed_lower("s0mub^z", (x_omu * z00 + x_oo * z0mu) / counts.x_max);
    Ok((z00, z0mu, s0))
}

/// Lower bound on the effective single-photon pairs in the X basis.
#[allow(clippy::too_many_arguments)]
pub fn estimate_s11_x(
    a: &SourceSetting,
    b: &SourceSetting,
    params: &SystemParams,
    inv_gain: f64,
    y01: f64,
    y10: f64,
    est: &mut Estimator,
) -> f64 {
    let (na, nb) = (a.nu, b.nu);
    let expected =
        2.0 * params.n_rounds * a.p_nu * b.p_nu * na * nb * (-2.0 * (na + nb)).exp() * y01 * y10
            / PI
            * inv_gain;
    est.observed_lower("s11^x", expected)
}

/// Upper bounds on the single-photon-pair X errors `t11` and their rate
/// `e11`. Returns `(vacuum_error_lower, double_vacuum_error_upper, t11, e11)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_e11_x(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    params: &SystemParams,
    inv_gain: f64,
    q00_lower: f64,
    q00_upper: f64,
    s11_x: f64,
    est: &mut Estimator,
) -> (f64, f64, f64, f64) {
    let (na, nb) = (a.nu, b.nu);
    let pp = params.n_rounds * a.p_nu * b.p_nu;
    // Pairs where one matched bin is vacuum on both sides; the vacuum error
    // rate is 1/2.
    let n_v = 2.0 * params.delta * pp * (-(na + nb)).exp() * q00_lower / PI;
    let n_00 = pp * (-2.0 * (na + nb)).exp() * q00_upper * q00_upper / PI * inv_gain;
    let vac = est.observed_lower("vacuum X errors", 0.5 * n_v);
    let dvac = est.observed_upper("double-vacuum X errors", 0.5 * n_00);
    let t11 = (counts.m_x - vac + dvac).max(0.0);
    let e11 = if s11_x > 0.0 {
        (t11 / s11_x).clamp(0.0, 0.5)
    } else {
        0.5
    };
    (vac, dvac, t11, e11)
}

/// Phase-error bound in the Z basis. Returns `(gamma, phi)`.
pub fn estimate_phi11_z(dec: &DecoyEstimates, eps: f64, mode: Mode) -> Result<(f64, f64)> {
    if mode == Mode::Asymptotic {
        return Ok((0.0, dec.e11_x_upper));
    }
    if !(dec.s11_z_lower > 0.0 && dec.s11_x_lower > 0.0) || dec.e11_x_upper >= 0.5 {
        return Ok((0.0, 0.5));
    }
    let lam = dec.e11_x_upper.max(f64::MIN_POSITIVE);
    let gamma = random_sampling_gamma(dec.s11_z_lower, dec.s11_x_lower, lam, eps)?;
    Ok((gamma, (dec.e11_x_upper + gamma).min(0.5)))
}

/// Runs the full decoy pipeline on a set of counts.
pub fn estimate(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    mode: Mode,
) -> Result<(DecoyEstimates, ChernoffLedger)> {
    let budget = compose_epsilons(params.eps)?;
    let mut est = Estimator::new(mode, budget.eps_per_use);
    let (y01, y10) = estimate_singles_yields(counts, a, b, params, &mut est)?;
    // x_oo^d upper bounds from the two yield bounds; both are the same value.
    let q00_upper_count = est
        .ledger
        .entries
        .iter()
        .find(|e| e.label.starts_with("x_oo^d upper"))
        .map_or(counts.x_oo_d, |e| e.output);

    let (z01, z10, s11_z) = estimate_s11_z(counts, a, b, params, y01, y10, &mut est);
    let x_d_lower = declare_vacuum_lower(counts, &mut est);
    let (z00, z0mu, s0) = estimate_s0mub_z(counts, a, b, x_d_lower, &mut est)?;

    let ch = Channel::new(geom, params)?;
    let inv_gain = inverse_gain_integral(a, b, &ch, params)
        .map_err(|e| Error::InfeasibleDecoy(format!("X-basis gain integral: {e}")))?;
    let s11_x = estimate_s11_x(a, b, params, inv_gain, y01, y10, &mut est);

    let q00_lower = x_d_lower / (params.n_rounds * counts.p_oo_d);
    let q00_upper = q00_upper_count / (params.n_rounds * counts.p_oo_d);
    let (vac, dvac, t11, e11) = estimate_e11_x(
        counts, a, b, params, inv_gain, q00_lower, q00_upper, s11_x, &mut est,
    );

    let mut dec = DecoyEstimates {
        y01_lower: y01,
        y10_lower: y10,
        z01_lower: z01,
        z10_lower: z10,
        s11_z_lower: s11_z,
        z00_lower: z00,
        z0mub_lower: z0mu,
        s0mub_z_lower: s0,
        s11_x_lower: s11_x,
        q00_lower,
        q00_upper,
        vacuum_error_lower: vac,
        double_vacuum_error_upper: dvac,
        t11_x_upper: t11,
        e11_x_upper: e11,
        gamma: 0.0,
        phi11_z_upper: 0.5,
    };
    let (gamma, phi) = estimate_phi11_z(&dec, budget.eps_e, mode)?;
    dec.gamma = gamma;
    dec.phi11_z_upper = phi;
    Ok((dec, est.ledger))
}

/// Each additive term of the key length, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyTerms {
    pub vacuum: f64,
    pub single_photon: f64,
    pub error_correction: f64,
    pub correctness_penalty: f64,
    pub chain_rule_penalty: f64,
    pub privacy_amplification_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub mode: Mode,
    pub ell: f64,
    /// Key length before clamping at zero.
    pub ell_unclamped: f64,
    pub rate: f64,
    pub n_rounds: f64,
    pub terms: KeyTerms,
    pub estimates: DecoyEstimates,
    pub n_z: f64,
    pub m_z: f64,
    pub e_z: f64,
    pub n_x: f64,
    pub m_x: f64,
    pub chernoff_applications: u32,
    pub budget: Option<EpsilonBudget>,
}

/// Finite-key length from the estimates.
pub fn key_length(
    counts: &ObservedCounts,
    dec: &DecoyEstimates,
    budget: &EpsilonBudget,
    params: &SystemParams,
) -> Result<KeyRateResult> {
    let mut r = assemble(counts, dec, params, Mode::Finite)?;
    r.terms.correctness_penalty = (2.0 / budget.eps_cor).log2();
    r.terms.chain_rule_penalty = 2.0 * (2.0 / (budget.eps_prime * budget.eps_hat)).log2();
    r.terms.privacy_amplification_penalty = 2.0 * (1.0 / (2.0 * budget.eps_pa)).log2();
    r.ell_unclamped -= r.terms.correctness_penalty
        + r.terms.chain_rule_penalty
        + r.terms.privacy_amplification_penalty;
    r.ell = r.ell_unclamped.max(0.0);
    r.rate = r.ell / params.n_rounds;
    r.budget = Some(*budget);
    Ok(r)
}

/// Asymptotic rate per pulse; no concentration bounds and no penalties.
pub fn asymptotic_rate(
    counts: &ObservedCounts,
    dec: &DecoyEstimates,
    params: &SystemParams,
) -> Result<f64> {
    Ok(assemble(counts, dec, params, Mode::Asymptotic)?.rate)
}

fn assemble(
    counts: &ObservedCounts,
    dec: &DecoyEstimates,
    params: &SystemParams,
    mode: Mode,
) -> Result<KeyRateResult> {
    if !(counts.n_z > 0.0) {
        return Err(Error::UndefinedRate("n^z = 0"));
    }
    let phi = match mode {
        Mode::Finite => dec.phi11_z_upper,
        Mode::Asymptotic => dec.e11_x_upper,
    };
    let terms = KeyTerms {
        vacuum: dec.s0mub_z_lower,
        single_photon: dec.s11_z_lower * (1.0 - binary_entropy(phi.clamp(0.0, 0.5))?),
        error_correction: counts.n_z * params.f_ec * binary_entropy(counts.e_z.clamp(0.0, 0.5))?,
        correctness_penalty: 0.0,
        chain_rule_penalty: 0.0,
        privacy_amplification_penalty: 0.0,
    };
    let ell_unclamped = terms.vacuum + terms.single_photon - terms.error_correction;
    let ell = ell_unclamped.max(0.0);
    Ok(KeyRateResult {
        mode,
        ell,
        ell_unclamped,
        rate: ell / params.n_rounds,
        n_rounds: params.n_rounds,
        terms,
        estimates: dec.clone(),
        n_z: counts.n_z,
        m_z: counts.m_z,
        e_z: counts.e_z,
        n_x: counts.n_x,
        m_x: counts.m_x,
        chernoff_applications: 0,
        budget: None,
    })
}

/// Counts, estimates and key length for one link.
pub fn evaluate_link(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    mode: Mode,
    form: MxForm,
) -> Result<KeyRateResult> {
    let counts = observe(a, b, geom, params, form)?;
    evaluate_counts(&counts, a, b, geom, params, mode)
}

/// Estimates and key length from precomputed counts.
pub fn evaluate_counts(
    counts: &ObservedCounts,
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    mode: Mode,
) -> Result<KeyRateResult> {
    let (dec, ledger) = estimate(counts, a, b, geom, params, mode)?;
    let mut r = match mode {
        Mode::Finite => key_length(counts, &dec, &compose_epsilons(params.eps)?, params)?,
        Mode::Asymptotic => assemble(counts, &dec, params, Mode::Asymptotic)?,
    };
    r.chernoff_applications = ledger.count();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_stats::CHERNOFF_APPLICATIONS;

    fn t2(name: char) -> SourceSetting {
        let v = match name {
            'A' => [0.725, 0.100, 0.388, 0.159, 0.449, 0.004],
            'B' => [0.681, 0.098, 0.362, 0.163, 0.471, 0.004],
            'C' => [0.166, 0.005, 0.069, 0.161, 0.762, 0.008],
            _ => [0.250, 0.015, 0.108, 0.165, 0.716, 0.011],
        };
        SourceSetting {
            mu: v[0],
            nu: v[1],
            p_mu: v[2],
            p_nu: v[3],
            p_o: v[4],
            p_ohat: v[5],
        }
    }

    fn params(delta_deg: f64) -> SystemParams {
        SystemParams::reference(1e11, 5f64.to_radians(), delta_deg.to_radians())
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ledger_counts_thirteen() {
        let geom = LinkGeometry::new(120.0, 200.0);
        let r = evaluate_link(
            &t2('C'),
            &t2('A'),
            &geom,
            &params(7.0),
            Mode::Finite,
            MxForm::default(),
        )
        .unwrap();
        assert_eq!(r.chernoff_applications, CHERNOFF_APPLICATIONS);
        let a = evaluate_link(
            &t2('C'),
            &t2('A'),
            &geom,
            &params(7.0),
            Mode::Asymptotic,
            MxForm::default(),
        )
        .unwrap();
        assert_eq!(a.chernoff_applications, 0);
        assert!(a.rate >= r.rate);
    }

    #[test]
    fn frozen_pipeline_values() {
        // Independent reference (scipy quad and i0) at delta = 7 deg.
        let geom = LinkGeometry::new(120.0, 200.0);
        let r = evaluate_link(
            &t2('C'),
            &t2('A'),
            &geom,
            &params(7.0),
            Mode::Finite,
            MxForm::default(),
        )
        .unwrap();
        let d = &r.estimates;
        assert!(
            rel(r.rate, 7.961_602_809_442_385e-6) < 1e-7,
            "rate {}",
            r.rate
        );
        assert!(rel(d.y01_lower, 3.255_032_245_391_634_6e-4) < 1e-9);
        assert!(rel(d.y10_lower, 7.200_231_570_967_872_5e-3) < 1e-9);
        assert!(rel(d.s11_z_lower, 1_368_473.901_276_717_4) < 1e-9);
        assert_eq!(d.s0mub_z_lower, 0.0);
        assert!(rel(d.s11_x_lower, 2_290.560_324_905_4) < 1e-8);
        assert!(rel(d.e11_x_upper, 0.047_374_979_488_544_9) < 1e-7);
        assert!(rel(d.phi11_z_upper, 0.083_353_097_098_881_83) < 1e-7);
        // the reference forms 1 - y directly, which costs ~1e-8 on dark-count terms
        assert!(rel(r.n_z, 3_677_796.415_583_639_4) < 1e-9);
        assert!(rel(r.e_z, 9.506_129_878_434_498e-5) < 1e-7);
        assert!(rel(r.n_x, 7_142.832_126_149_521) < 1e-8);
        assert!(rel(r.m_x, 85.876_636_775_852_55) < 1e-7);
        let asym = evaluate_link(
            &t2('C'),
            &t2('A'),
            &geom,
            &params(7.0),
            Mode::Asymptotic,
            MxForm::default(),
        )
        .unwrap();
        assert!(rel(asym.rate, 1.147_758_778_925_429_5e-5) < 1e-7);
        assert!(d.y01_lower > 0.0 && d.y10_lower > 0.0);
        assert!(d.phi11_z_upper >= d.e11_x_upper);
        assert!(d.s11_z_lower <= r.n_z);
        assert!(d.s11_x_lower <= r.n_x);
        assert!(rel(r.rate, 8.631e-6) < 0.1, "rate {}", r.rate);
    }

    #[test]
    fn key_length_clamps() {
        let geom = LinkGeometry::new(120.0, 200.0);
        let p = params(7.0);
        let counts = observe(&t2('C'), &t2('A'), &geom, &p, MxForm::default()).unwrap();
        let (mut dec, _) = estimate(&counts, &t2('C'), &t2('A'), &geom, &p, Mode::Finite).unwrap();
        dec.phi11_z_upper = 0.5;
        dec.s0mub_z_lower = 0.0;
        let r = key_length(&counts, &dec, &compose_epsilons(p.eps).unwrap(), &p).unwrap();
        assert_eq!(r.ell, 0.0);
        assert!(r.ell_unclamped < 0.0);
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn missing_declare_vacuum() {
        let mut a = t2('A');
        a.p_o += a.p_ohat;
        a.p_ohat = 0.0;
        let r = evaluate_link(
            &a,
            &t2('C'),
            &LinkGeometry::new(200.0, 120.0),
            &params(7.0),
            Mode::Finite,
            MxForm::default(),
        );
        assert_eq!(r.unwrap_err(), Error::MissingDeclareVacuum(Side::A));
    }

    #[test]
    fn yield_tends_to_transmittance_for_small_decoy() {
        // p_d = 0, nu_b -> 0: the bound approaches the true yield eta_b.
        let mut p = params(7.0);
        p.p_d = 0.0;
        let geom = LinkGeometry::new(50.0, 50.0);
        let eta_b = 0.7 * 10f64.powf(-0.165 * 5.0);
        let a = t2('A');
        let mut prev_gap = f64::INFINITY;
        for nu in [0.1, 0.01, 0.001] {
            let mut b = t2('A');
            b.nu = nu;
            let counts = observe(&a, &b, &geom, &p, MxForm::default()).unwrap();
            let mut est = Estimator::new(Mode::Asymptotic, p.eps);
            let (y01, _) = estimate_singles_yields(&counts, &a, &b, &p, &mut est).unwrap();
            assert!(y01 <= eta_b * (1.0 + 1e-9));
            let gap = eta_b - y01;
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap / eta_b < 1e-2);
    }

    #[test]
    fn tighter_eps_never_helps() {
        let geom = LinkGeometry::new(120.0, 200.0);
        let mut last = f64::INFINITY;
        for eps in [1e-6, 1e-8, 1.5e-10, 1e-12, 1e-15] {
            let mut p = params(7.0);
            p.eps = eps;
            let r = evaluate_link(
                &t2('C'),
                &t2('A'),
                &geom,
                &p,
                Mode::Finite,
                MxForm::default(),
            )
            .unwrap();
            assert!(r.ell <= last);
            last = r.ell;
        }
    }

    #[test]
    fn asymptotic_phi_equals_e11() {
        let geom = LinkGeometry::new(120.0, 200.0);
        let r = evaluate_link(
            &t2('C'),
            &t2('A'),
            &geom,
            &params(7.0),
            Mode::Asymptotic,
            MxForm::default(),
        )
        .unwrap();
        assert_eq!(r.estimates.phi11_z_upper, r.estimates.e11_x_upper);
        assert_eq!(r.terms.correctness_penalty, 0.0);
    }
}
