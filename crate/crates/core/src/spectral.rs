//! Damping kernels, windowed spectral densities, the weak-coupling spectral
//! probe, and finite discretizations of continuum baths.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use nalgebra::Matrix2;

use crate::gaussian::{occupation, occupation_from_variances};
use crate::hamiltonian::EigenSystem;
use crate::opensys::attach;
use crate::quadrature::GaussLegendre;

/// Eigenfrequencies and the system's coupling to each eigenmode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCouplings {
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
}

impl ModeCouplings {
    pub fn new(omega: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if omega.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                found: g.len(),
            });
        }
        if let Some(w) = omega.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidParameter(format!("mode frequency must be positive, got {w}")));
        }
        Ok(ModeCouplings { omega, g })
    }

    /// Couplings seen by a system attached at `node` with strength `k`.
    pub fn from_network(eig: &EigenSystem, node: usize, k: f64) -> Self {
        ModeCouplings {
            omega: eig.omega.clone(),
            g: eig.mode_couplings(node, k),
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `sum_i g_i^2`.
    pub fn total_weight(&self) -> f64 {
        self.g.iter().map(|g| g * g).sum()
    }
}

/// `gamma(t) = sum_i (g_i^2 / Omega_i^2) cos(Omega_i t)`.
pub fn damping_kernel(mc: &ModeCouplings, t: f64) -> f64 {
    mc.omega
        .iter()
        .zip(&mc.g)
        .map(|(w, g)| g * g / (w * w) * (w * t).cos())
        .sum()
}

/// `sin(x T) / x`, continuous at `x = 0`.
fn sin_ratio(x: f64, t: f64) -> f64 {
    let xt = x * t;
    if xt.abs() < 1e-6 {
        t * (1.0 - xt * xt / 6.0)
    } else {
        xt.sin() / x
    }
}

/// Spectral density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectralDensity {
    pub omega: Vec<f64>,
    pub j: Vec<f64>,
}

impl SampledSpectralDensity {
    /// `omega,J`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,J\n");
        for (w, j) in self.omega.iter().zip(&self.j) {
            out.push_str(&format!("{w:e},{j:e}\n"));
        }
        out
    }
}

/// `J(w) = w * int_0^{t_max} gamma(t) cos(w t) dt`, integrated in closed form
/// mode by mode.
pub fn windowed_spectral_density(
    mc: &ModeCouplings,
    t_max: f64,
    omega_grid: &[f64],
) -> Result<SampledSpectralDensity> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    let j = omega_grid
        .iter()
        .map(|&w| windowed_value(mc, t_max, w))
        .collect();
    Ok(SampledSpectralDensity {
        omega: omega_grid.to_vec(),
        j,
    })
}

fn windowed_value(mc: &ModeCouplings, t_max: f64, w: f64) -> f64 {
    let mut acc = 0.0;
    for (om, g) in mc.omega.iter().zip(&mc.g) {
        let amp = g * g / (om * om);
        acc += amp * 0.5 * (sin_ratio(om - w, t_max) + sin_ratio(om + w, t_max));
    }
    w * acc
}

/// Time at which the damping kernel revives: the first `t` with
/// `|gamma(t)| / gamma(0) > threshold` after the kernel has stayed below the
/// threshold for one period at the kernel's mean frequency (modes weighted by
/// `g^2 / Omega^2`). Returns `cap` if no revival is found before it.
pub fn recurrence_onset(mc: &ModeCouplings, threshold: f64, cap: f64, dt: f64) -> f64 {
    let g0 = damping_kernel(mc, 0.0);
    if mc.is_empty() || g0 == 0.0 {
        return cap;
    }
    let weighted: f64 = mc.omega.iter().zip(&mc.g).map(|(w, g)| g * g / w).sum();
    let quiet_needed = 2.0 * PI * g0 / weighted;
    let steps = (cap / dt).ceil() as usize;
    let mut quiet_since: Option<f64> = None;
    let mut settled = false;
    for s in 0..=steps {
        let t = (s as f64 * dt).min(cap);
        let ratio = damping_kernel(mc, t).abs() / g0;
        if ratio > threshold {
            if settled {
                return t;
            }
            quiet_since = None;
        } else {
            let since = *quiet_since.get_or_insert(t);
            if t - since >= quiet_needed {
                settled = true;
            }
        }
    }
    cap
}

/// Default observation window: recurrence onset at threshold 0.2, capped at 200.
pub fn default_t_max(mc: &ModeCouplings) -> f64 {
    recurrence_onset(mc, 0.2, 200.0, 0.05)
}

/// `J(w_S) = (w_S / t) ln(dn(0) / dn(t))` with `dn(t) = n(w_S) - <n(t)>`.
pub fn probe_j(n_initial: f64, n_final: f64, omega_s: f64, temperature: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("probe time must be positive, got {t}")));
    }
    let n_bath = occupation(omega_s, temperature);
    let d0 = n_bath - n_initial;
    let dt = n_bath - n_final;
    if d0 == 0.0 || dt == 0.0 || d0.signum() != dt.signum() {
        return Err(Error::ProbeViolated(format!(
            "population offsets must share a sign and be nonzero (dn(0) = {d0}, dn(t) = {dt})"
        )));
    }
    Ok(omega_s / t * (d0 / dt).ln())
}

/// One probed point of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub omega_s: f64,
    pub j_probed: f64,
    pub j_reference: f64,
}

/// Setup of the reduced-dynamics spectral probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeProtocol {
    pub node: usize,
    pub k: f64,
    pub system_temperature: f64,
    pub network_temperature: f64,
    pub t: f64,
}

/// Couples a thermal system to the network at each frequency, reads its
/// occupation at `protocol.t`, and inverts it to `J(w_S)`. The reference is
/// the windowed density at `t_max = protocol.t`.
pub fn probe_spectrum(eig: &EigenSystem, protocol: &ProbeProtocol, frequencies: &[f64]) -> Result<Vec<ProbePoint>> {
    let mc = ModeCouplings::from_network(eig, protocol.node, protocol.k);
    let network = crate::gaussian::thermal_eigenbasis(eig, protocol.network_temperature)?;
    let reference = windowed_spectral_density(&mc, protocol.t, frequencies)?;
    frequencies
        .iter()
        .zip(&reference.j)
        .map(|(&ws, &jr)| {
            let cs = attach(eig, ws, protocol.k, protocol.node)?;
            let v0 = occupation(ws, protocol.system_temperature) + 0.5;
            let s0 = Matrix2::new(v0 / ws, 0.0, 0.0, v0 * ws);
            let st = cs.channel(&network, protocol.t)?.apply(&s0);
            let n_0 = occupation_from_variances(s0[(0, 0)], s0[(1, 1)], ws);
            let n_t = occupation_from_variances(st[(0, 0)], st[(1, 1)], ws);
            let jp = probe_j(n_0, n_t, ws, protocol.network_temperature, protocol.t)?;
            Ok(ProbePoint {
                omega_s: ws,
                j_probed: jp,
                j_reference: jr,
            })
        })
        .collect()
}

/// Continuous spectral density with an integration cutoff beyond which it is
/// negligible.
#[derive(Clone)]
pub struct ContinuumDensity {
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub cutoff: f64,
}

impl fmt::Debug for ContinuumDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumDensity").field("cutoff", &self.cutoff).finish()
    }
}

impl ContinuumDensity {
    pub fn new(func: impl Fn(f64) -> f64 + Send + Sync + 'static, cutoff: f64) -> Self {
        ContinuumDensity {
            func: Arc::new(func),
            cutoff,
        }
    }

    /// `J(w) = eta w exp(-w / w_c)`, integrated up to `20 w_c`, where the
    /// relative tail of `J / w` is below `1e-8`.
    pub fn ohmic_exponential(eta: f64, omega_c: f64) -> Self {
        ContinuumDensity::new(move |w| eta * w * (-w / omega_c).exp(), 20.0 * omega_c)
    }

    pub fn eval(&self, w: f64) -> Result<f64> {
        let j = (self.func)(w);
        if !j.is_finite() || j < 0.0 {
            return Err(Error::InvalidParameter(format!("spectral density must be finite and >= 0, got J({w}) = {j}")));
        }
        Ok(j)
    }
}

/// Spectral density in either representation.
#[derive(Debug, Clone)]
pub enum SpectralDensityFn {
    Sampled(SampledSpectralDensity),
    Continuum(ContinuumDensity),
}

/// `g_i^2 = (2/pi) J(Omega_i) Omega_i dOmega_i`, with the last interval
/// reused for the final sample.
pub fn discretize_bath(j: &ContinuumDensity, samples: &[f64]) -> Result<ModeCouplings> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two frequency samples".into()));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) || samples[0] <= 0.0 {
        return Err(Error::InvalidParameter("samples must be positive and strictly increasing".into()));
    }
    let n = samples.len();
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i + 1 < n {
            samples[i + 1] - samples[i]
        } else {
            samples[n - 1] - samples[n - 2]
        };
        let value = (j.func)(samples[i]);
        if !(value >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative spectral density {value} at sample {}",
                samples[i]
            )));
        }
        g.push((2.0 / PI * value * samples[i] * d).sqrt());
    }
    ModeCouplings::new(samples.to_vec(), g)
}

/// `(2/pi) int_0^inf (J(w)/w) cos(w t) dw` by composite Gauss-Legendre up to
/// the density's cutoff.
pub fn continuum_damping_kernel(j: &ContinuumDensity, t: f64) -> Result<f64> {
    check_integrable(j)?;
    let rule = GaussLegendre::new(12);
    // panels short enough to resolve cos(w t) and the density's own scale
    let per_panel = (PI / (2.0 * t.abs().max(1e-12))).min(j.cutoff / 200.0);
    let panels = ((j.cutoff / per_panel).ceil() as usize).max(1);
    let h = j.cutoff / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        total += rule.integrate(a, a + h, |w| (j.func)(w) / w * (w * t).cos());
    }
    Ok(2.0 / PI * total)
}

fn check_integrable(j: &ContinuumDensity) -> Result<()> {
    let near = (j.func)(1e-8);
    let nearer = (j.func)(1e-12);
    if !near.is_finite() || !nearer.is_finite() {
        return Err(Error::Divergent("spectral density is not finite near zero".into()));
    }
    if near > 0.0 && nearer / near > 0.9 {
        return Err(Error::Divergent("J(w)/w is not integrable at w = 0".into()));
    }
    Ok(())
}

/// `t,gamma`
pub fn kernel_csv(times: &[f64], values: &[f64]) -> String {
    let mut out = String::from("t,gamma\n");
    for (t, g) in times.iter().zip(values) {
        out.push_str(&format!("{t:e},{g:e}\n"));
    }
    out
}
