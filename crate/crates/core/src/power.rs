//! Time-average power bookkeeping over the harmonic comb.
//!
//! With `(Z + L) I = V` and the load operator `L` split into its diagonal
//! blocks `L^{kk}` (frequency-preserving loss) and the remainder (conversion),
//!
//! - `P^k_rad = ½ Re I^{kH} Z^k I^k` (vacuum EFIE)
//! - `P^k_abs = ½ Re I^{kH} L^{kk} I^k`
//! - `P^k_LTI = P^k_rad + P^k_abs`
//! - `P^k_tv  = ½ Re I^{kH} Σ_{ℓ≠k} L^{kℓ} I^ℓ`
//!
//! so that `P_ext = ½ Re Iᴴ V = Σ_k (P^k_LTI + P^k_tv)`.

use serde::Serialize;

use crate::linalg::{dot_conj, matvec};
use crate::solver::{HarmonicSolution, SystemSpec};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    /// Harmonic orders `k = −K … K`, the index of every per-harmonic array.
    pub harmonics: Vec<i64>,
    pub p_ext_w: f64,
    /// `P^k = ½ Re I^{kH} V^k`
    pub p_k_w: Vec<f64>,
    pub p_lti_w: Vec<f64>,
    pub p_rad_w: Vec<f64>,
    pub p_abs_w: Vec<f64>,
    pub p_tv_w: Vec<f64>,
    pub p_tv_total_w: f64,
    pub balance_residual_rel: f64,
}

impl PowerReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("power report serializes") + "\n"
    }

    pub fn at(&self, k: i64) -> usize {
        self.harmonics
            .iter()
            .position(|&h| h == k)
            .expect("harmonic in report")
    }

    /// `Σ_{k≠0} P^k_rad`
    pub fn sideband_radiation(&self) -> f64 {
        self.harmonics
            .iter()
            .zip(&self.p_rad_w)
            .filter(|(k, _)| **k != 0)
            .map(|(_, p)| p)
            .sum()
    }
}

fn check(spec: &SystemSpec, sol: &HarmonicSolution) -> Result<()> {
    if sol.grid() != spec.grid() || sol.n() != spec.n() {
        return Err(Error::Dimension(
            "solution does not belong to this system".into(),
        ));
    }
    Ok(())
}

/// `P_ext = ½ Re Iᴴ V`; only `k = 0` contributes for single-frequency sources.
pub fn extinction_power(spec: &SystemSpec, sol: &HarmonicSolution) -> Result<f64> {
    check(spec, sol)?;
    Ok(0.5 * dot_conj(sol.current(0), spec.excitation()).re)
}

/// Per-harmonic `(P_LTI, P_rad, P_abs)`.
pub fn lti_powers(
    spec: &SystemSpec,
    sol: &HarmonicSolution,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check(spec, sol)?;
    let nf = spec.grid().n_f();
    let mut lti = Vec::with_capacity(nf);
    let mut rad = Vec::with_capacity(nf);
    let mut abs = Vec::with_capacity(nf);
    for (ki, i) in sol.currents().iter().enumerate() {
        let r = 0.5 * dot_conj(i, &matvec(spec.z_block(ki).as_ref(), i)).re;
        let a = 0.5 * dot_conj(i, &spec.loads().apply_block(ki, ki, i)).re;
        rad.push(r);
        abs.push(a);
        lti.push(r + a);
    }
    Ok((lti, rad, abs))
}

/// Per-harmonic `P_tv^k` from the frequency-converting load blocks.
pub fn tv_powers(spec: &SystemSpec, sol: &HarmonicSolution) -> Result<Vec<f64>> {
    check(spec, sol)?;
    let cur = sol.currents();
    Ok((0..spec.grid().n_f())
        .map(|ki| {
            let mut y = vec![C64::new(0.0, 0.0); spec.n()];
            for (li, x) in cur.iter().enumerate() {
                if li != ki {
                    for (a, b) in y.iter_mut().zip(spec.loads().apply_block(ki, li, x)) {
                        *a += b;
                    }
                }
            }
            0.5 * dot_conj(&cur[ki], &y).re
        })
        .collect())
}

pub fn power_report(spec: &SystemSpec, sol: &HarmonicSolution) -> Result<PowerReport> {
    let p_ext = extinction_power(spec, sol)?;
    let (lti, rad, abs) = lti_powers(spec, sol)?;
    let tv = tv_powers(spec, sol)?;
    let p_k = (0..spec.grid().n_f())
        .map(|ki| 0.5 * dot_conj(&sol.currents()[ki], &spec.excitation_at(ki)).re)
        .collect();
    let total: f64 = lti.iter().sum::<f64>() + tv.iter().sum::<f64>();
    let scale = p_ext
        .abs()
        .max(lti.iter().map(|p| p.abs()).fold(0.0, f64::max));
    let balance = if scale > 0.0 {
        (p_ext - total).abs() / scale
    } else {
        0.0
    };
    Ok(PowerReport {
        harmonics: spec.grid().harmonics().collect(),
        p_ext_w: p_ext,
        p_k_w: p_k,
        p_lti_w: lti,
        p_rad_w: rad,
        p_abs_w: abs,
        p_tv_total_w: tv.iter().sum(),
        p_tv_w: tv,
        balance_residual_rel: balance,
    })
}
