//! Analytic detection statistics of the untrusted relay: per-phase and
//! phase-averaged gains, pair counts per intensity combination, and the
//! post-matched Z and phase-sliced X basis totals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::finite_stats::bessel_i0_minus_one;
use crate::quadrature::integrate;

const SUM_TOL: f64 = 1e-12;

/// The four intensities a user can send. `Vacuum` and `DeclareVacuum` both
/// carry zero photons; only the announcement differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Signal,
    Decoy,
    Vacuum,
    DeclareVacuum,
}

impl Intensity {
    pub const ALL: [Intensity; 4] = [
        Intensity::Signal,
        Intensity::Decoy,
        Intensity::Vacuum,
        Intensity::DeclareVacuum,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Intensity::Signal => "mu",
            Intensity::Decoy => "nu",
            Intensity::Vacuum => "o",
            Intensity::DeclareVacuum => "o_hat",
        }
    }
}

/// One user's intensities and sending probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSetting {
    pub mu: f64,
    pub nu: f64,
    pub p_mu: f64,
    pub p_nu: f64,
    pub p_o: f64,
    pub p_ohat: f64,
}

impl SourceSetting {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.mu > self.nu && self.mu.is_finite()) {
            return Err(Error::InvalidSetting(format!(
                "need mu > nu > 0, got mu = {}, nu = {}",
                self.mu, self.nu
            )));
        }
        for (name, p) in [
            ("p_mu", self.p_mu),
            ("p_nu", self.p_nu),
            ("p_o", self.p_o),
            ("p_ohat", self.p_ohat),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSetting(format!("{name} = {p} not in [0, 1]")));
            }
        }
        let total = self.p_mu + self.p_nu + self.p_o + self.p_ohat;
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidSetting(format!(
                "sending probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn intensity(&self, k: Intensity) -> f64 {
        match k {
            Intensity::Signal => self.mu,
            Intensity::Decoy => self.nu,
            Intensity::Vacuum | Intensity::DeclareVacuum => 0.0,
        }
    }

    pub fn probability(&self, k: Intensity) -> f64 {
        match k {
            Intensity::Signal => self.p_mu,
            Intensity::Decoy => self.p_nu,
            Intensity::Vacuum => self.p_o,
            Intensity::DeclareVacuum => self.p_ohat,
        }
    }
}

/// Detector, fiber and protocol constants. Angles are radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub eta_d: f64,
    pub p_d: f64,
    pub alpha_db_per_km: f64,
    pub e_d_z: f64,
    pub f_ec: f64,
    pub n_rounds: f64,
    pub sigma: f64,
    pub delta: f64,
    pub eps: f64,
}

impl SystemParams {
    /// The reference detector and fiber constants (70% efficiency, 1e-8 dark
    /// counts, 0.165 dB/km, f = 1.1, eps = 1.5e-10).
    pub fn reference(n_rounds: f64, sigma: f64, delta: f64) -> Self {
        SystemParams {
            eta_d: 0.7,
            p_d: 1e-8,
            alpha_db_per_km: 0.165,
            e_d_z: 0.0,
            f_ec: 1.1,
            n_rounds,
            sigma,
            delta,
            eps: 1.5e-10,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return bad(format!("eta_d = {} not in (0, 1]", self.eta_d));
        }
        if !(self.p_d >= 0.0 && self.p_d < 1.0) {
            return bad(format!("p_d = {} not in [0, 1)", self.p_d));
        }
        if !(self.alpha_db_per_km >= 0.0 && self.alpha_db_per_km.is_finite()) {
            return bad(format!("alpha = {} must be >= 0", self.alpha_db_per_km));
        }
        if !(0.0..=0.5).contains(&self.e_d_z) {
            return bad(format!("e_d_z = {} not in [0, 0.5]", self.e_d_z));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return bad(format!("f = {} must be >= 1", self.f_ec));
        }
        if !(self.n_rounds >= 1.0 && self.n_rounds.is_finite()) {
            return bad(format!("N = {} must be >= 1", self.n_rounds));
        }
        if !(self.sigma >= 0.0 && self.sigma < PI / 2.0) {
            return bad(format!("sigma = {} rad not in [0, pi/2)", self.sigma));
        }
        if !(self.delta > 0.0 && self.delta <= PI / 2.0) {
            return bad(format!("delta = {} rad not in (0, pi/2]", self.delta));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps = {} not in (0, 1)", self.eps));
        }
        Ok(())
    }
}

/// Fiber lengths from each user to the relay, in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub l_a_km: f64,
    pub l_b_km: f64,
}

impl LinkGeometry {
    pub fn new(l_a_km: f64, l_b_km: f64) -> Self {
        LinkGeometry { l_a_km, l_b_km }
    }

    pub fn total_km(&self) -> f64 {
        self.l_a_km + self.l_b_km
    }

    pub fn swapped(&self) -> Self {
        LinkGeometry::new(self.l_b_km, self.l_a_km)
    }
}

/// Overall transmittance (fiber and detector) of one arm.
pub fn transmittance(length_km: f64, eta_d: f64, alpha_db_per_km: f64) -> f64 {
    eta_d * 10f64.powf(-alpha_db_per_km * length_km / 10.0)
}

/// Resolved transmittances of both arms plus the dark count probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub eta_a: f64,
    pub eta_b: f64,
    pub p_d: f64,
}

impl Channel {
    pub fn new(geom: &LinkGeometry, params: &SystemParams) -> Result<Self> {
        for (name, l) in [("l_a", geom.l_a_km), ("l_b", geom.l_b_km)] {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} = {l} km must be >= 0"
                )));
            }
        }
        let eta_a = transmittance(geom.l_a_km, params.eta_d, params.alpha_db_per_km);
        let eta_b = transmittance(geom.l_b_km, params.eta_d, params.alpha_db_per_km);
        if !(eta_a > 0.0 && eta_b > 0.0) {
            return Err(Error::InvalidParams(
                "transmittance underflows to zero".to_string(),
            ));
        }
        Ok(Channel {
            eta_a,
            eta_b,
            p_d: params.p_d,
        })
    }

    /// No-click amplitude `y` and `1 - y`, the latter without cancellation.
    fn y_pair(&self, k_a: f64, k_b: f64) -> (f64, f64) {
        let s = 0.5 * (self.eta_a * k_a + self.eta_b * k_b);
        let e = (-s).exp();
        let y = e * (1.0 - self.p_d);
        let one_minus_y = -(-s).exp_m1() + e * self.p_d;
        (y, one_minus_y)
    }

    fn omega(&self, k_a: f64, k_b: f64) -> f64 {
        (self.eta_a * k_a * self.eta_b * k_b).sqrt()
    }

    pub fn gains(&self, k_a: f64, k_b: f64, theta: f64) -> GainComponents {
        let (y, omy) = self.y_pair(k_a, k_b);
        let omega = self.omega(k_a, k_b);
        let wc = omega * theta.cos();
        GainComponents {
            y_kk: y,
            omega,
            q_l_theta: (y * (wc.exp_m1() + omy)).max(0.0),
            q_r_theta: (y * ((-wc).exp_m1() + omy)).max(0.0),
            q_total: (2.0 * y * (bessel_i0_minus_one(omega) + omy)).max(0.0),
        }
    }

    pub fn overall_gain(&self, k_a: f64, k_b: f64) -> f64 {
        let (y, omy) = self.y_pair(k_a, k_b);
        (2.0 * y * (bessel_i0_minus_one(self.omega(k_a, k_b)) + omy)).max(0.0)
    }

    /// Single-click gain `q^theta = q^L + q^R` at phase difference `theta`.
    pub fn phase_gain(&self, k_a: f64, k_b: f64, theta: f64) -> f64 {
        let (y, omy) = self.y_pair(k_a, k_b);
        let half = 0.5 * self.omega(k_a, k_b) * theta.cos();
        // e^{wc} + e^{-wc} - 2y = 4 sinh^2(wc/2) + 2(1 - y)
        let sh = half.sinh();
        y * (4.0 * sh * sh + 2.0 * omy)
    }
}

/// Gains of one intensity pair at a fixed phase difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainComponents {
    pub y_kk: f64,
    pub omega: f64,
    pub q_l_theta: f64,
    pub q_r_theta: f64,
    pub q_total: f64,
}

/// Which closed form the X-basis error count uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MxForm {
    /// Error probability `2 q^L q^R / (q^theta)^2` integrated against the
    /// gain; agrees with the event simulation.
    #[default]
    FirstPrinciples,
    /// `y[(1-y)^2/(S-2y) - 1]` as printed; negative for all inputs.
    PrintedClosedForm,
}

/// Expected detection statistics of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedCounts {
    /// `x[k_a][k_b]`, indexed by `Intensity::index`.
    pub x: [[f64; 4]; 4],
    pub x_oo_d: f64,
    pub p_oo_d: f64,
    /// Unannounced Z pool rows: `x_oo + x_omu` and `x_muo + x_mumu`.
    pub row_o: f64,
    pub row_mu: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_c_z: f64,
    pub n_e_z: f64,
    pub n_z: f64,
    pub m_z: f64,
    pub e_z: f64,
    pub n_x: f64,
    pub m_x: f64,
}

impl ObservedCounts {
    pub fn get(&self, k_a: Intensity, k_b: Intensity) -> f64 {
        self.x[k_a.index()][k_b.index()]
    }
}

/// Gains of an intensity pair at phase difference `theta`.
pub fn per_phase_gains(
    k_a: f64,
    k_b: f64,
    theta: f64,
    geom: &LinkGeometry,
    params: &SystemParams,
) -> Result<GainComponents> {
    Ok(Channel::new(geom, params)?.gains(k_a, k_b, theta))
}

/// Phase-averaged single-click gain `2y(I0(omega) - y)`.
pub fn overall_gain(k_a: f64, k_b: f64, geom: &LinkGeometry, params: &SystemParams) -> Result<f64> {
    Ok(Channel::new(geom, params)?.overall_gain(k_a, k_b))
}

/// Probability that the two vacuum sides together announce a declare-vacuum
/// event: `p_ohat p_ohat + p_ohat p_o + p_o p_ohat`.
pub fn declare_vacuum_probability(a: &SourceSetting, b: &SourceSetting) -> f64 {
    a.p_ohat * b.p_ohat + a.p_ohat * b.p_o + a.p_o * b.p_ohat
}

/// Fills the pair counts `x` and the declare-vacuum aggregate.
pub fn expected_pair_counts(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
) -> Result<ObservedCounts> {
    a.validate()?;
    b.validate()?;
    params.validate()?;
    let ch = Channel::new(geom, params)?;
    let n = params.n_rounds;
    let mut x = [[0.0; 4]; 4];
    for ka in Intensity::ALL {
        for kb in Intensity::ALL {
            let q = ch.overall_gain(a.intensity(ka), b.intensity(kb));
            x[ka.index()][kb.index()] = n * a.probability(ka) * b.probability(kb) * q;
        }
    }
    use Intensity::{DeclareVacuum as Oh, Vacuum as O};
    let x_oo_d = x[Oh.index()][Oh.index()] + x[Oh.index()][O.index()] + x[O.index()][Oh.index()];
    Ok(ObservedCounts {
        x,
        x_oo_d,
        p_oo_d: declare_vacuum_probability(a, b),
        row_o: 0.0,
        row_mu: 0.0,
        x_min: 0.0,
        x_max: 0.0,
        n_c_z: 0.0,
        n_e_z: 0.0,
        n_z: 0.0,
        m_z: 0.0,
        e_z: 0.0,
        n_x: 0.0,
        m_x: 0.0,
    })
}

/// Z-basis totals after post-matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZCounts {
    pub row_o: f64,
    pub row_mu: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_c_z: f64,
    pub n_e_z: f64,
    pub n_z: f64,
    pub m_z: f64,
    pub e_z: f64,
}

/// Correct and erroneous Z pairs formed from the unannounced `{mu, o}` pool.
pub fn z_basis_counts(counts: &ObservedCounts, params: &SystemParams) -> Result<ZCounts> {
    use Intensity::{Signal as M, Vacuum as O};
    let x_oo = counts.get(O, O);
    let x_om = counts.get(O, M);
    let x_mo = counts.get(M, O);
    let x_mm = counts.get(M, M);
    let row_o = x_oo + x_om;
    let row_mu = x_mo + x_mm;
    if !(row_o > 0.0 && row_mu > 0.0) {
        return Err(Error::UndefinedRate("no unannounced Z-basis detections"));
    }
    let x_min = row_o.min(row_mu);
    let x_max = row_o.max(row_mu);
    let n_c_z = x_min * (x_om / row_o) * (x_mo / row_mu);
    let n_e_z = x_min * (x_oo / row_o) * (x_mm / row_mu);
    let n_z = n_c_z + n_e_z;
    if !(n_z > 0.0) {
        return Err(Error::UndefinedRate("n^z = 0"));
    }
    let m_z = (1.0 - params.e_d_z) * n_e_z + params.e_d_z * n_c_z;
    Ok(ZCounts {
        row_o,
        row_mu,
        x_min,
        x_max,
        n_c_z,
        n_e_z,
        n_z,
        m_z,
        e_z: m_z / n_z,
    })
}

/// X-basis matched-pair total `n^x` and error count `m^x` over the slice
/// `[sigma, sigma + delta]`.
pub fn x_basis_counts(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    form: MxForm,
) -> Result<(f64, f64)> {
    let ch = Channel::new(geom, params)?;
    let (na, nb) = (a.nu, b.nu);
    let scale = params.n_rounds * a.p_nu * b.p_nu / PI;
    let (lo, hi) = (params.sigma, params.sigma + params.delta);
    let n_x = scale * integrate(|t| ch.phase_gain(na, nb, t), lo, hi)?;
    let m_x = match form {
        MxForm::FirstPrinciples => {
            scale
                * integrate(
                    |t| {
                        let g = ch.gains(na, nb, t);
                        let q = g.q_l_theta + g.q_r_theta;
                        if q > 0.0 {
                            2.0 * g.q_l_theta * g.q_r_theta / q
                        } else {
                            0.0
                        }
                    },
                    lo,
                    hi,
                )?
        }
        MxForm::PrintedClosedForm => {
            let (y, omy) = ch.y_pair(na, nb);
            2.0 * scale
                * integrate(
                    |t| {
                        let s2y = ch.phase_gain(na, nb, t) / y;
                        y * (omy * omy / s2y - 1.0)
                    },
                    lo,
                    hi,
                )?
        }
    };
    Ok((n_x, m_x))
}

/// X-basis error count of the actively-odd-parity-pairing variant.
pub fn aopp_x_error_count(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
) -> Result<f64> {
    let ch = Channel::new(geom, params)?;
    let scale = 2.0 * params.n_rounds * a.p_nu * b.p_nu / PI;
    Ok(scale
        * integrate(
            |t| ch.gains(a.nu, b.nu, t).q_r_theta,
            params.sigma,
            params.sigma + params.delta,
        )?)
}

/// `∫ dθ / q^θ_{nu_a nu_b}` over the X slice.
pub fn inverse_gain_integral(
    a: &SourceSetting,
    b: &SourceSetting,
    ch: &Channel,
    params: &SystemParams,
) -> Result<f64> {
    let (na, nb) = (a.nu, b.nu);
    integrate(
        |t| 1.0 / ch.phase_gain(na, nb, t),
        params.sigma,
        params.sigma + params.delta,
    )
}

/// Probability that a single photon from one side produces exactly one click,
/// including the case where it is lost and one detector fires dark.
pub fn single_photon_yield(eta: f64, p_d: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain {
            name: "transmittance",
            value: eta,
            domain: "(0, 1]",
        });
    }
    check_probability("dark count probability", p_d)?;
    Ok(eta * (1.0 - p_d) + (1.0 - eta) * 2.0 * p_d * (1.0 - p_d))
}

/// Expected counts and all basis totals for one link.
pub fn observe(
    a: &SourceSetting,
    b: &SourceSetting,
    geom: &LinkGeometry,
    params: &SystemParams,
    form: MxForm,
) -> Result<ObservedCounts> {
    let mut counts = expected_pair_counts(a, b, geom, params)?;
    let z = z_basis_counts(&counts, params)?;
    let (n_x, m_x) = x_basis_counts(a, b, geom, params, form)?;
    counts.row_o = z.row_o;
    counts.row_mu = z.row_mu;
    counts.x_min = z.x_min;
    counts.x_max = z.x_max;
    counts.n_c_z = z.n_c_z;
    counts.n_e_z = z.n_e_z;
    counts.n_z = z.n_z;
    counts.m_z = z.m_z;
    counts.e_z = z.e_z;
    counts.n_x = n_x;
    counts.m_x = m_x;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SystemParams {
        SystemParams::reference(1e11, 5f64.to_radians(), 8f64.to_radians())
    }

    fn setting_a() -> SourceSetting {
        SourceSetting {
            mu: 0.725,
            nu: 0.1,
            p_mu: 0.388,
            p_nu: 0.159,
            p_o: 0.449,
            p_ohat: 0.004,
        }
    }

    fn setting_c() -> SourceSetting {
        SourceSetting {
            mu: 0.166,
            nu: 0.005,
            p_mu: 0.069,
            p_nu: 0.161,
            p_o: 0.762,
            p_ohat: 0.008,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Composite Gauss-Legendre, 5 points per panel; independent of the
    // adaptive routine under test.
    fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        let nodes = [
            (0.0, 128.0 / 225.0),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_08),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let c = a + (i as f64 + 0.5) * h;
                nodes
                    .iter()
                    .map(|(x, w)| w * f(c + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    #[test]
    fn vacuum_gains() {
        let mut p = params();
        p.p_d = 0.0;
        let g = per_phase_gains(0.0, 0.0, 0.3, &LinkGeometry::new(10.0, 10.0), &p).unwrap();
        assert_eq!(g.q_l_theta, 0.0);
        assert_eq!(g.q_r_theta, 0.0);
        assert_eq!(g.q_total, 0.0);

        p.p_d = 1e-3;
        let g = per_phase_gains(0.0, 0.0, 1.1, &LinkGeometry::new(10.0, 10.0), &p).unwrap();
        assert!(rel(g.q_l_theta + g.q_r_theta, 2e-3 * (1.0 - 1e-3)) < 1e-13);
    }

    #[test]
    fn phase_average_identity() {
        let p = params();
        let ch = Channel::new(&LinkGeometry::new(50.0, 20.0), &p).unwrap();
        for (ka, kb) in [(0.7, 0.7), (0.1, 0.4), (3.0, 2.0), (0.0, 0.5)] {
            let avg = gauss_legendre(
                |t| {
                    let g = ch.gains(ka, kb, t);
                    g.q_l_theta + g.q_r_theta
                },
                0.0,
                2.0 * PI,
                64,
            ) / (2.0 * PI);
            assert!(rel(ch.overall_gain(ka, kb), avg) < 1e-10, "{ka} {kb}");
            assert!(
                rel(ch.phase_gain(ka, kb, 0.4), {
                    let g = ch.gains(ka, kb, 0.4);
                    g.q_l_theta + g.q_r_theta
                }) < 1e-12
            );
        }
    }

    #[test]
    fn gain_monotone_in_intensity() {
        let ch = Channel::new(&LinkGeometry::new(100.0, 150.0), &params()).unwrap();
        for kb in [0.0, 0.05, 0.3, 1.0] {
            let mut last = 0.0;
            for i in 0..50 {
                let q = ch.overall_gain(i as f64 * 0.05, kb);
                assert!(q >= last);
                last = q;
            }
        }
    }

    #[test]
    fn pair_counts_are_probabilities() {
        let p = params();
        let c = expected_pair_counts(
            &setting_a(),
            &setting_c(),
            &LinkGeometry::new(200.0, 120.0),
            &p,
        )
        .unwrap();
        let total: f64 = c.x.iter().flatten().sum();
        assert!(c.x.iter().flatten().all(|&v| v >= 0.0));
        assert!(total <= p.n_rounds);
        let want = c.get(Intensity::DeclareVacuum, Intensity::DeclareVacuum)
            + c.get(Intensity::DeclareVacuum, Intensity::Vacuum)
            + c.get(Intensity::Vacuum, Intensity::DeclareVacuum);
        assert_eq!(c.x_oo_d, want);
    }

    #[test]
    fn z_counts_noiseless() {
        let mut p = params();
        p.p_d = 0.0;
        let c = observe(
            &setting_a(),
            &setting_c(),
            &LinkGeometry::new(200.0, 120.0),
            &p,
            MxForm::default(),
        )
        .unwrap();
        assert_eq!(c.n_e_z, 0.0);
        assert_eq!(c.e_z, 0.0);
        assert!(c.n_z > 0.0 && c.n_z <= c.x_min);
    }

    #[test]
    fn z_counts_bounded_by_x_min() {
        let c = observe(
            &setting_a(),
            &setting_c(),
            &LinkGeometry::new(200.0, 120.0),
            &params(),
            MxForm::default(),
        )
        .unwrap();
        assert!(c.n_c_z + c.n_e_z <= c.x_min * (1.0 + 1e-15));
        assert!(c.e_z > 0.0 && c.e_z < 1e-3);
        assert!(c.m_z <= c.n_z);
    }

    #[test]
    fn x_counts_vanish_with_slice() {
        let p = params().with_delta(1e-9);
        let (nx, mx) = x_basis_counts(
            &setting_a(),
            &setting_c(),
            &LinkGeometry::new(200.0, 120.0),
            &p,
            MxForm::FirstPrinciples,
        )
        .unwrap();
        assert!(nx < 1e-3 && mx < 1e-3);
    }

    #[test]
    fn x_counts_against_independent_quadrature() {
        let p = params();
        let geom = LinkGeometry::new(200.0, 120.0);
        let (a, c) = (setting_a(), setting_c());
        let (nx, mx) = x_basis_counts(&a, &c, &geom, &p, MxForm::FirstPrinciples).unwrap();
        let ch = Channel::new(&geom, &p).unwrap();
        let eta_a = 0.7 * 10f64.powf(-0.165 * 200.0 / 10.0);
        let eta_b = 0.7 * 10f64.powf(-0.165 * 120.0 / 10.0);
        assert!(rel(ch.eta_a, eta_a) < 1e-15 && rel(ch.eta_b, eta_b) < 1e-15);
        // naive forms, high precision is not needed at these magnitudes
        let y = (-(eta_a * a.nu + eta_b * c.nu) / 2.0).exp() * (1.0 - p.p_d);
        let w = (eta_a * a.nu * eta_b * c.nu).sqrt();
        let scale = p.n_rounds * a.p_nu * c.p_nu / PI;
        let lo = p.sigma;
        let hi = p.sigma + p.delta;
        let want_n = scale
            * gauss_legendre(
                |t| y * ((w * t.cos()).exp() + (-w * t.cos()).exp() - 2.0 * y),
                lo,
                hi,
                32,
            );
        let want_m = scale
            * gauss_legendre(
                |t| {
                    let ql = y * ((w * t.cos()).exp() - y);
                    let qr = y * ((-w * t.cos()).exp() - y);
                    2.0 * ql * qr / (ql + qr)
                },
                lo,
                hi,
                32,
            );
        assert!(rel(nx, want_n) < 1e-7);
        assert!(rel(mx, want_m) < 1e-5);
        assert!(mx <= nx);
    }

    #[test]
    fn printed_form_is_negative() {
        let (_, m) = x_basis_counts(
            &setting_a(),
            &setting_c(),
            &LinkGeometry::new(200.0, 120.0),
            &params(),
            MxForm::PrintedClosedForm,
        )
        .unwrap();
        assert!(m < 0.0);
    }

    #[test]
    fn aopp_count() {
        let p = params();
        let geom = LinkGeometry::new(100.0, 100.0);
        let s = setting_a();
        let m = aopp_x_error_count(&s, &s, &geom, &p).unwrap();
        let ch = Channel::new(&geom, &p).unwrap();
        let want = 2.0 * p.n_rounds * s.p_nu * s.p_nu / PI
            * gauss_legendre(
                |t| ch.gains(s.nu, s.nu, t).q_r_theta,
                p.sigma,
                p.sigma + p.delta,
                32,
            );
        assert!(rel(m, want) < 1e-9);
        let tiny = aopp_x_error_count(
            &s,
            &s,
            &geom,
            &SystemParams {
                sigma: 0.0,
                ..p.with_delta(1e-10)
            },
        )
        .unwrap();
        assert!(tiny < 1e-2);
    }

    #[test]
    fn validation() {
        let mut s = setting_a();
        assert!(s.validate().is_ok());
        s.nu = s.mu;
        assert!(s.validate().is_err());
        let mut s = setting_a();
        s.p_o += 0.01;
        assert!(s.validate().is_err());
        let mut p = params();
        p.delta = 0.0;
        assert!(p.validate().is_err());
        assert!(single_photon_yield(1.0, 0.0).unwrap() == 1.0);
        assert!(rel(single_photon_yield(0.5, 0.1).unwrap(), 0.45 + 0.5 * 0.18) < 1e-15);
    }
}
