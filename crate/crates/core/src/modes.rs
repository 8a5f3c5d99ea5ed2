//! Two-mode hybridization and single-mode response formulas.
//!
//! Two bare resonators a and b at `f_a0`, `f_b0` with coupling `g` form the
//! symmetric 2×2 frequency matrix [[f_a0, g], [g, f_b0]]. Its eigenvalues
//! are the dressed frequencies and the squared eigenvector components are
//! the participations of each dressed mode in each bare cavity. Losses are
//! not part of the matrix; they enter afterwards through participation
//! weighting ([`effective_rates`]). All frequencies and rates are Hz.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::ratio_to_loss_db;
use crate::{Error, Result};

/// Tolerance on the sum of participations of a hybridized mode.
pub const PARTICIPATION_SUM_TOL: f64 = 1e-9;

/// A resonator mode with its internal and (up to two) coupling rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    pub f: f64,
    pub kappa_i: f64,
    pub kappa_c1: f64,
    pub kappa_c2: f64,
}

impl ResonatorSpec {
    pub fn new(f: f64, kappa_i: f64, kappa_c1: f64, kappa_c2: f64) -> Result<Self> {
        let spec = Self {
            f,
            kappa_i,
            kappa_c1,
            kappa_c2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::invalid(format!("resonator frequency must be > 0, got {}", self.f)));
        }
        for (name, v) in [
            ("kappa_i", self.kappa_i),
            ("kappa_c1", self.kappa_c1),
            ("kappa_c2", self.kappa_c2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.total_linewidth() <= 0.0 {
            return Err(Error::invalid("resonator needs at least one nonzero rate"));
        }
        Ok(())
    }

    /// κ_i + κ_c1 + κ_c2.
    pub fn total_linewidth(&self) -> f64 {
        self.kappa_i + self.kappa_c1 + self.kappa_c2
    }

    pub fn coupling_rate(&self) -> f64 {
        self.kappa_c1 + self.kappa_c2
    }

    /// Internal quality factor f/κ_i, if there is internal loss.
    pub fn internal_q(&self) -> Option<f64> {
        (self.kappa_i > 0.0).then(|| self.f / self.kappa_i)
    }
}

/// A dressed mode of the coupled two-cavity system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridizedMode {
    pub f: f64,
    /// Energy fraction of the mode in each bare cavity.
    pub participations: Vec<(String, f64)>,
    pub kappa_i_eff: f64,
    pub kappa_c_eff: f64,
}

impl HybridizedMode {
    pub fn participation(&self, label: &str) -> Option<f64> {
        self.participations
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, p)| p)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for (label, p) in &self.participations {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invalid(format!("participation of `{label}` outside [0, 1]: {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PARTICIPATION_SUM_TOL {
            return Err(Error::invalid(format!("participations sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Fills `kappa_i_eff` and `kappa_c_eff` by participation weighting.
    pub fn with_rates(mut self, internal: &[(&str, f64)], coupling: &[(&str, f64)]) -> Result<Self> {
        self.kappa_i_eff = effective_rates(&self, internal)?;
        self.kappa_c_eff = effective_rates(&self, coupling)?;
        Ok(self)
    }

    pub fn total_linewidth(&self) -> f64 {
        self.kappa_i_eff + self.kappa_c_eff
    }
}

/// Which of the two hybridized modes serves as readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRole {
    Lower,
    Upper,
}

/// Picks the mode with the larger participation in `readout_cavity`;
/// an exact tie goes to the lower-frequency mode.
pub fn select_readout(lower: &HybridizedMode, upper: &HybridizedMode, readout_cavity: &str) -> Result<ModeRole> {
    let missing = || Error::invalid(format!("no participation labeled `{readout_cavity}`"));
    let pl = lower.participation(readout_cavity).ok_or_else(missing)?;
    let pu = upper.participation(readout_cavity).ok_or_else(missing)?;
    Ok(if pu > pl { ModeRole::Upper } else { ModeRole::Lower })
}

/// Splitting, detuning and participation of the lower mode in cavity a,
/// computed without cancellation: returns (S, p_a, p_b) of the lower mode.
fn eigen_participations(detuning: f64, g: f64) -> (f64, f64, f64) {
    let splitting = detuning.hypot(2.0 * g);
    if splitting == 0.0 {
        // Fully degenerate and uncoupled: keep the bare labeling.
        return (0.0, 1.0, 0.0);
    }
    // p_a = (1 + Δ/S)/2, p_b = (1 − Δ/S)/2; the smaller one is rewritten as
    // 2g²/(S(S + |Δ|)) to stay accurate when g ≪ |Δ|.
    let small = 2.0 * g * g / (splitting * (splitting + detuning.abs()));
    if detuning >= 0.0 {
        (splitting, 1.0 - small, small)
    } else {
        (splitting, small, 1.0 - small)
    }
}

/// Dressed modes of two bare cavities labeled `label_a` and `label_b`.
/// Returns (lower, upper).
pub fn hybridize_labeled(
    label_a: &str,
    f_a0: f64,
    label_b: &str,
    f_b0: f64,
    g: f64,
) -> Result<(HybridizedMode, HybridizedMode)> {
    if !(f_a0 > 0.0 && f_b0 > 0.0 && f_a0.is_finite() && f_b0.is_finite()) {
        return Err(Error::domain(format!("bare frequencies must be > 0, got {f_a0}, {f_b0}")));
    }
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::domain(format!("coupling must be >= 0, got {g}")));
    }
    let mid = 0.5 * (f_a0 + f_b0);
    let detuning = f_b0 - f_a0;
    let (splitting, pa, pb) = eigen_participations(detuning, g);
    let mode = |f: f64, pa: f64, pb: f64| HybridizedMode {
        f,
        participations: vec![(label_a.to_string(), pa), (label_b.to_string(), pb)],
        kappa_i_eff: 0.0,
        kappa_c_eff: 0.0,
    };
    let half = 0.5 * splitting;
    Ok((mode(mid - half, pa, pb), mode(mid + half, pb, pa)))
}

/// [`hybridize_labeled`] with the cavities labeled `"a"` and `"b"`.
pub fn hybridize(f_a0: f64, f_b0: f64, g: f64) -> Result<(HybridizedMode, HybridizedMode)> {
    hybridize_labeled("a", f_a0, "b", f_b0, g)
}

/// Bare parameters recovered from the inverse two-mode problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareCoupling {
    pub f_a0: f64,
    pub f_b0: f64,
    pub g: f64,
}

impl BareCoupling {
    /// f_b0 − f_a0.
    pub fn detuning(&self) -> f64 {
        self.f_b0 - self.f_a0
    }
}

/// Inverse of [`hybridize`]: from the dressed frequencies and the
/// participation `p` of the lower mode in cavity a, recover the bare
/// frequencies and coupling in closed form.
pub fn infer_coupling(f_minus: f64, f_plus: f64, p: f64) -> Result<BareCoupling> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("participation must lie in (0, 1), got {p}")));
    }
    if !(f_minus > 0.0 && f_plus > f_minus && f_plus.is_finite()) {
        return Err(Error::domain(format!(
            "need 0 < f_minus < f_plus, got {f_minus}, {f_plus}"
        )));
    }
    let splitting = f_plus - f_minus;
    let mid = 0.5 * (f_minus + f_plus);
    let detuning = splitting * (2.0 * p - 1.0);
    // √(S² − Δ²)/2 = S·√(p(1 − p))
    let g = splitting * (p * (1.0 - p)).sqrt();
    Ok(BareCoupling {
        f_a0: mid - 0.5 * detuning,
        f_b0: mid + 0.5 * detuning,
        g,
    })
}

/// Participation-weighted rate Σ p_m κ_m over the bare cavities.
pub fn effective_rates(mode: &HybridizedMode, bare: &[(&str, f64)]) -> Result<f64> {
    for (label, _) in bare {
        if mode.participation(label).is_none() {
            return Err(Error::invalid(format!("rate given for unknown cavity `{label}`")));
        }
    }
    let mut total = 0.0;
    for (label, p) in &mode.participations {
        let kappa = bare
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, k)| k)
            .ok_or_else(|| Error::invalid(format!("no rate given for cavity `{label}`")))?;
        total += p * kappa;
    }
    Ok(total)
}

/// On-resonance power transmission of a two-port resonator and the
/// corresponding insertion loss in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub ratio: f64,
    pub loss_db: f64,
}

/// 4κ_c1κ_c2/(κ_i + κ_c1 + κ_c2)².
pub fn two_port_transmission(kappa_i: f64, kappa_c1: f64, kappa_c2: f64) -> Result<Transmission> {
    if [kappa_i, kappa_c1, kappa_c2].iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
        return Err(Error::domain("rates must be >= 0"));
    }
    let total = kappa_i + kappa_c1 + kappa_c2;
    if total == 0.0 {
        return Err(Error::domain("at least one rate must be nonzero"));
    }
    let ratio = 4.0 * kappa_c1 * kappa_c2 / (total * total);
    Ok(Transmission {
        ratio,
        loss_db: ratio_to_loss_db(ratio),
    })
}

/// Symmetric coupling rate κ_c that yields `loss_db` of insertion loss for
/// internal rate `kappa_i`: the positive root of 4κ_c²/(κ_i + 2κ_c)² = 10^(−IL/10).
pub fn insertion_loss_to_coupling(loss_db: f64, kappa_i: f64) -> Result<f64> {
    if !(kappa_i > 0.0 && kappa_i.is_finite()) {
        return Err(Error::domain(format!("kappa_i must be > 0, got {kappa_i}")));
    }
    if !(loss_db > 0.0) {
        return Err(Error::OutOfModel(format!(
            "insertion loss {loss_db} dB is unreachable with internal loss (needs IL > 0)"
        )));
    }
    let amplitude = 10f64.powf(-loss_db / 20.0);
    let kappa_c = amplitude * kappa_i / (2.0 * (1.0 - amplitude));
    if !kappa_c.is_finite() {
        return Err(Error::OutOfModel(format!("no finite coupling for {loss_db} dB")));
    }
    Ok(kappa_c)
}

/// One-port reflection S11(δ) = (κ_c − κ_i − 2iδ)/(κ_c + κ_i + 2iδ) at
/// detuning `detuning` (Hz) from resonance.
pub fn reflection_response(spec: &ResonatorSpec, detuning: f64) -> Result<Complex64> {
    spec.validate()?;
    if spec.kappa_c2 != 0.0 || spec.kappa_c1 <= 0.0 {
        return Err(Error::invalid("reflection needs a single port: kappa_c1 > 0, kappa_c2 = 0"));
    }
    let num = Complex64::new(spec.kappa_c1 - spec.kappa_i, -2.0 * detuning);
    let den = Complex64::new(spec.kappa_c1 + spec.kappa_i, 2.0 * detuning);
    Ok(num / den)
}
