//! Centralized validation: closed-loop poles under the static network and
//! linear step responses.
//!
//! Each diagonal entry is realized in controllable canonical form; the loop
//! is closed through `u = w - N theta`, where `w` is an external power
//! injection and `theta` the stacked device angles.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::devices::DeviceEntry;
use crate::domain::ProhibitedDomain;
use crate::error::{Error, Result};
use crate::linalg;

/// Residue magnitude below which a mode counts as cancelled.
pub const RESIDUE_TOL: f64 = 1e-9;

/// Relative magnitude below which an eigenvalue is a structural origin pole.
pub const ORIGIN_TOL: f64 = 1e-8;

/// State-space triple with `n_x` states, `n` inputs (power) and `n` outputs (angle).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

/// Block-diagonal controllable canonical realization of the device entries.
pub fn device_realization(entries: &[DeviceEntry]) -> Result<StateSpace> {
    let mut dims = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        if !e.d_entry().is_strictly_proper() {
            return Err(Error::config(format!("device {i} entry is not strictly proper")));
        }
        dims.push(e.d_entry().den().degree().unwrap_or(0));
    }
    let nx: usize = dims.iter().sum();
    let n = entries.len();
    let mut a = DMatrix::zeros(nx, nx);
    let mut b = DMatrix::zeros(nx, n);
    let mut c = DMatrix::zeros(n, nx);
    let mut off = 0;
    for (i, (e, &k)) in entries.iter().zip(&dims).enumerate() {
        let den = e.d_entry().den().coeffs();
        let num = e.d_entry().num().coeffs();
        for j in 0..k.saturating_sub(1) {
            a[(off + j, off + j + 1)] = 1.0;
        }
        for j in 0..k {
            a[(off + k - 1, off + j)] = -den[j];
            c[(i, off + j)] = num.get(j).copied().unwrap_or(0.0);
        }
        b[(off + k - 1, i)] = 1.0;
        off += k;
    }
    Ok(StateSpace { a, b, c })
}

/// Closed loop `A - B N C` of the device realization and a static network.
pub fn closed_loop(entries: &[DeviceEntry], n_static: &DMatrix<f64>) -> Result<StateSpace> {
    let n = entries.len();
    if n_static.nrows() != n || n_static.ncols() != n {
        return Err(Error::config(format!(
            "network matrix is {}x{} for {n} devices",
            n_static.nrows(),
            n_static.ncols()
        )));
    }
    let mut ss = device_realization(entries)?;
    ss.a -= &ss.b * n_static * &ss.c;
    Ok(ss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleReport {
    /// Closed-loop poles sorted by real part (descending), then imaginary part.
    pub poles: Vec<Complex64>,
    pub damping: Vec<f64>,
    pub in_domain: Vec<bool>,
    /// Structural poles at the origin (Laplacian zero mode).
    pub origin: Vec<bool>,
    pub origin_pole_count: usize,
    /// Modes dropped because their residue vanished.
    pub cancelled: Vec<Complex64>,
}

impl PoleReport {
    /// Non-origin pole with the largest real part; the upper-half member of a pair.
    pub fn dominant(&self) -> Option<Complex64> {
        self.poles
            .iter()
            .zip(&self.origin)
            .filter(|(_, &o)| !o)
            .map(|(p, _)| *p)
            .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
    }

    pub fn dominant_damping(&self) -> Option<f64> {
        self.dominant().map(|p| damping_ratio(p).unwrap_or(1.0))
    }

    /// Smallest damping ratio among non-origin poles.
    pub fn min_damping(&self) -> Option<f64> {
        self.damping
            .iter()
            .zip(&self.origin)
            .filter(|(_, &o)| !o)
            .map(|(d, _)| *d)
            .min_by(f64::total_cmp)
    }

    pub fn in_domain_count(&self) -> usize {
        self.in_domain.iter().filter(|&&x| x).count()
    }

    /// Tab-separated pole table: `re im damping in_domain origin`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("re\tim\tdamping\tin_domain\torigin\n");
        for k in 0..self.poles.len() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                self.poles[k].re,
                self.poles[k].im,
                self.damping[k],
                u8::from(self.in_domain[k]),
                u8::from(self.origin[k])
            );
        }
        out
    }
}

/// `-Re(p) / |p|`, clamped to `[-1, 1]`.
pub fn damping_ratio(p: Complex64) -> Result<f64> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::UndefinedDamping);
    }
    Ok((-p.re / r).clamp(-1.0, 1.0))
}

/// Closed-loop poles from `det(I + D(s) N) = 0` with a constant network.
pub fn closed_loop_poles(
    entries: &[DeviceEntry],
    n_static: &DMatrix<f64>,
    domain: &ProhibitedDomain,
) -> Result<PoleReport> {
    let ss = closed_loop(entries, n_static)?;
    let eig = linalg::eigenvalues(&ss.a)?;
    let scale = ss.a.amax().max(1.0);
    let ac = ss.a.map(|x| Complex64::new(x, 0.0));
    let act = ac.transpose();
    let bc = ss.b.map(|x| Complex64::new(x, 0.0));
    let cc = ss.c.map(|x| Complex64::new(x, 0.0));

    let mut kept = Vec::with_capacity(eig.len());
    let mut cancelled = Vec::new();
    for lam in eig {
        if lam.norm() <= ORIGIN_TOL * scale {
            kept.push((Complex64::new(0.0, 0.0), true));
            continue;
        }
        if residue(&ac, &act, &bc, &cc, lam) < RESIDUE_TOL {
            cancelled.push(lam);
        } else {
            kept.push((lam, false));
        }
    }
    kept.sort_by(|(a, _), (b, _)| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let poles: Vec<Complex64> = kept.iter().map(|k| k.0).collect();
    let origin: Vec<bool> = kept.iter().map(|k| k.1).collect();
    Ok(PoleReport {
        damping: poles.iter().map(|&p| damping_ratio(p).unwrap_or(1.0)).collect(),
        in_domain: poles.iter().zip(&origin).map(|(&p, &o)| !o && domain.contains(p)).collect(),
        origin_pole_count: origin.iter().filter(|&&o| o).count(),
        origin,
        poles,
        cancelled,
    })
}

/// `|C v| |B^T w| / |w^T v|` for right/left eigenvectors `v`, `w` of `lam`.
fn residue(
    a: &DMatrix<Complex64>,
    at: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    c: &DMatrix<Complex64>,
    lam: Complex64,
) -> f64 {
    let v = linalg::inverse_iteration(a, lam);
    let w = linalg::inverse_iteration(at, lam);
    let denom = w.transpose() * &v;
    let denom = denom[(0, 0)].norm();
    let num = (c * &v).norm() * (b.transpose() * &w).norm();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        num / denom
    }
}

/// No non-origin pole lies in the prohibited domain.
pub fn screen_poles(report: &PoleReport, domain: &ProhibitedDomain) -> bool {
    !report
        .poles
        .iter()
        .zip(&report.origin)
        .any(|(&p, &o)| !o && domain.contains(p))
}

/// Step change in mechanical power at one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub device: usize,
    /// pu
    pub magnitude: f64,
    /// s
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResponse {
    pub time: Vec<f64>,
    /// Angle deviations per device, rad.
    pub angle: Vec<Vec<f64>>,
    /// Electrical power deviations `N theta` per device, pu.
    pub power: Vec<Vec<f64>>,
    pub disturbance: Disturbance,
    /// Integration step actually used.
    pub dt: f64,
    pub divergent: bool,
}

impl StepResponse {
    /// Time-series matrix: `t`, then `theta_<i>` and `p_<i>` per device.
    pub fn to_tsv(&self, names: &[&str]) -> String {
        let mut out = String::from("t");
        for n in names {
            let _ = write!(out, "\ttheta_{n}");
        }
        for n in names {
            let _ = write!(out, "\tp_{n}");
        }
        out.push('\n');
        for k in 0..self.time.len() {
            let _ = write!(out, "{}", self.time[k]);
            for a in &self.angle {
                let _ = write!(out, "\t{}", a[k]);
            }
            for p in &self.power {
                let _ = write!(out, "\t{}", p[k]);
            }
            out.push('\n');
        }
        out
    }
}

/// Fixed-step simulation of the closed loop under a power step.
///
/// Uses the exact zero-order-hold discretization of the linear dynamics with
/// `dt` reduced, if needed, to at most `0.1 / max|pole|`.
pub fn step_response(
    entries: &[DeviceEntry],
    n_static: &DMatrix<f64>,
    disturbance: Disturbance,
    horizon: f64,
    dt: f64,
) -> Result<StepResponse> {
    if disturbance.device >= entries.len() {
        return Err(Error::config(format!(
            "disturbance device {} outside {} devices",
            disturbance.device,
            entries.len()
        )));
    }
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::config(format!("simulation needs dt > 0 and horizon > 0, got {dt}, {horizon}")));
    }
    let ss = closed_loop(entries, n_static)?;
    let nx = ss.a.nrows();
    let eig = linalg::eigenvalues(&ss.a)?;
    let max_mag = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let divergent_pole = eig.iter().any(|z| z.re > ORIGIN_TOL * ss.a.amax().max(1.0));
    let dt = if max_mag > 0.0 { dt.min(0.1 / max_mag) } else { dt };

    // exp([[A, b], [0, 0]] dt) = [[Phi, Gamma], [0, 1]]
    let mut aug = DMatrix::zeros(nx + 1, nx + 1);
    aug.view_mut((0, 0), (nx, nx)).copy_from(&ss.a);
    aug.view_mut((0, nx), (nx, 1)).copy_from(&ss.b.column(disturbance.device));
    let e = (aug * dt).exp();
    let phi = e.view((0, 0), (nx, nx)).into_owned();
    let gamma: DVector<f64> = e.view((0, nx), (nx, 1)).column(0).into_owned();

    let steps = (horizon / dt).ceil() as usize;
    let n = entries.len();
    let mut time = Vec::with_capacity(steps + 1);
    let mut angle = vec![Vec::with_capacity(steps + 1); n];
    let mut power = vec![Vec::with_capacity(steps + 1); n];
    let mut x = DVector::<f64>::zeros(nx);
    let mut divergent = divergent_pole;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let theta = &ss.c * &x;
        let p = n_static * &theta;
        if theta.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            divergent = true;
            break;
        }
        time.push(t);
        for i in 0..n {
            angle[i].push(theta[i]);
            power[i].push(p[i]);
        }
        let u = if t >= disturbance.start { disturbance.magnitude } else { 0.0 };
        x = &phi * &x + &gamma * u;
    }
    Ok(StepResponse { time, angle, power, disturbance, dt, divergent })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlingMetrics {
    pub final_value: f64,
    /// Time after the disturbance of the last exit from the band, `None` if
    /// the signal is still outside it at the end of the horizon.
    pub settling_time: Option<f64>,
    /// Oscillation cycles (half the zero crossings of `y - final`) before settling.
    pub cycles: f64,
    pub peak_deviation: f64,
}

/// Band-settling metrics of one channel after a step at `start`.
///
/// The final value is the mean over the last 10% of the record. The band is
/// `band * |final|`, or `band * peak deviation` when the final value is tiny
/// compared with the transient.
pub fn settling_metrics(time: &[f64], y: &[f64], start: f64, band: f64) -> SettlingMetrics {
    let n = y.len().min(time.len());
    let tail = (n / 10).max(1);
    let final_value = y[n - tail..n].iter().sum::<f64>() / tail as f64;
    let first = time.iter().position(|&t| t >= start).unwrap_or(n);
    let err: Vec<f64> = y[first..n].iter().map(|v| v - final_value).collect();
    let peak_deviation = err.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let band_abs = if final_value.abs() > 1e-3 * peak_deviation {
        band * final_value.abs()
    } else {
        band * peak_deviation
    };
    let last_out = err.iter().rposition(|e| e.abs() > band_abs);
    let (settling_time, horizon_idx) = match last_out {
        None => (Some(0.0), 0),
        Some(k) if k + 1 < err.len() => (Some(time[first + k + 1] - start), k + 1),
        Some(k) => (None, k + 1),
    };
    let mut crossings = 0usize;
    let mut prev_sign = 0.0;
    for e in &err[..horizon_idx] {
        if *e == 0.0 {
            continue;
        }
        let s = e.signum();
        if prev_sign != 0.0 && s != prev_sign {
            crossings += 1;
        }
        prev_sign = s;
    }
    SettlingMetrics { final_value, settling_time, cycles: crossings as f64 / 2.0, peak_deviation }
}

/// Damping ratio estimated from the logarithmic decrement of successive
/// positive peaks of `y - final` after `start`.
pub fn log_decrement_damping(time: &[f64], y: &[f64], start: f64) -> Option<f64> {
    let m = settling_metrics(time, y, start, 0.02);
    let first = time.iter().position(|&t| t >= start)?;
    let e: Vec<f64> = y[first..].iter().map(|v| v - m.final_value).collect();
    let sign = e.iter().find(|v| v.abs() > 0.5 * m.peak_deviation)?.signum();
    let floor = 0.01 * m.peak_deviation;
    let peaks: Vec<f64> = (1..e.len().saturating_sub(1))
        .filter(|&k| sign * e[k] > floor && sign * e[k] >= sign * e[k - 1] && sign * e[k] > sign * e[k + 1])
        .map(|k| sign * e[k])
        .take(4)
        .collect();
    if peaks.len() < 2 {
        return None;
    }
    let deltas: Vec<f64> = peaks.windows(2).map(|w| (w[0] / w[1]).ln()).collect();
    let delta = deltas.iter().sum::<f64>() / deltas.len() as f64;
    Some(delta / (4.0 * std::f64::consts::PI.powi(2) + delta * delta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::{gfm_entry, gfl_entry, GflParams, GfmParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gfm(m: f64, d: f64) -> DeviceEntry {
        gfm_entry(&GfmParams { m, d }).unwrap()
    }

    #[test]
    fn damping_examples() {
        assert!((damping_ratio(c(-0.078, 0.627)).unwrap() - 0.12).abs() < 0.005);
        assert_eq!(damping_ratio(c(-1.0, 0.0)).unwrap(), 1.0);
        assert_eq!(damping_ratio(c(0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(damping_ratio(c(0.0, 0.0)), Err(Error::UndefinedDamping));
    }

    #[test]
    fn single_gfm_on_stiff_tie() {
        let dom = ProhibitedDomain::default();
        let r = closed_loop_poles(&[gfm(1.0, 1.0)], &DMatrix::from_element(1, 1, 1.0), &dom).unwrap();
        assert_eq!(r.poles.len(), 2);
        let want = [c(-0.5, 0.75f64.sqrt()), c(-0.5, -0.75f64.sqrt())];
        for (p, w) in r.poles.iter().zip(want) {
            assert!((p - w).norm() < 1e-12, "{p}");
        }
        for d in &r.damping {
            assert!((d - 0.5).abs() < 1e-12);
        }
        assert_eq!(r.origin_pole_count, 0);
        assert!(screen_poles(&r, &dom));
    }

    #[test]
    fn gfm_pair_has_origin_pole() {
        let dom = ProhibitedDomain::default();
        let n = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let r = closed_loop_poles(&[gfm(1.0, 1.0), gfm(1.0, 1.0)], &n, &dom).unwrap();
        assert_eq!(r.origin_pole_count, 1);
        assert_eq!(r.poles.len(), 4);
        // Relative mode: s^2 + s + 2; common mode: s (s + 1).
        let swing = c(-0.5, 1.75f64.sqrt());
        assert!(r.poles.iter().any(|p| (p - swing).norm() < 1e-9));
        assert!(r.poles.iter().any(|p| (p - c(-1.0, 0.0)).norm() < 1e-9));
    }

    #[test]
    fn screen_examples() {
        let dom = ProhibitedDomain::default();
        let mk = |poles: Vec<Complex64>, origin: Vec<bool>| PoleReport {
            damping: poles.iter().map(|&p| damping_ratio(p).unwrap_or(1.0)).collect(),
            in_domain: vec![false; poles.len()],
            origin_pole_count: origin.iter().filter(|&&o| o).count(),
            origin,
            poles,
            cancelled: vec![],
        };
        let good = mk(vec![c(-0.5, 0.866), c(-0.5, -0.866)], vec![false, false]);
        assert!(screen_poles(&good, &dom));
        let weak = mk(vec![c(-0.078, 0.627), c(-0.078, -0.627)], vec![false, false]);
        assert!(!screen_poles(&weak, &dom));
        let origin_only = mk(vec![c(0.0, 0.0)], vec![true]);
        assert!(screen_poles(&origin_only, &dom));
    }

    #[test]
    fn cancelled_mode_is_filtered() {
        let dom = ProhibitedDomain::default();
        // (s + 2) / ((s + 2)(s^2 + s)) hides the mode at -2.
        use crate::ratcalc::{Polynomial, RationalFunction};
        let num = Polynomial::new(vec![2.0, 1.0]);
        let den = &Polynomial::new(vec![2.0, 1.0]) * &Polynomial::new(vec![0.0, 1.0, 1.0]);
        let e = DeviceEntry::new(RationalFunction::new(num, den).unwrap()).unwrap();
        let r = closed_loop_poles(&[e], &DMatrix::from_element(1, 1, 1.0), &dom).unwrap();
        assert_eq!(r.cancelled.len(), 1);
        assert!((r.cancelled[0] - c(-2.0, 0.0)).norm() < 1e-6);
        assert_eq!(r.poles.len(), 2);
    }

    #[test]
    fn state_dimension_is_sum_of_degrees() {
        let e = [gfm(1.0, 2.0), gfl_entry(&GflParams::new(1.0, 1.0, 4.0, 40.0)).unwrap()];
        let ss = device_realization(&e).unwrap();
        assert_eq!(ss.a.nrows(), 5);
        assert!(closed_loop(&e, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn single_gfm_step_response() {
        let n = DMatrix::from_element(1, 1, 1.0);
        let dist = Disturbance { device: 0, magnitude: 0.1, start: 1.0 };
        let r = step_response(&[gfm(1.0, 1.0)], &n, dist, 40.0, 0.01).unwrap();
        assert!(!r.divergent);
        assert!(r.time.iter().zip(&r.angle[0]).filter(|(t, _)| **t <= 1.0).all(|(_, a)| *a == 0.0));
        let last = *r.angle[0].last().unwrap();
        assert!((last - 0.1).abs() < 1e-4, "{last}");
        let peak = r.angle[0].iter().cloned().fold(f64::MIN, f64::max);
        let overshoot = (peak - 0.1) / 0.1;
        // exp(-pi xi / sqrt(1 - xi^2)) at xi = 0.5
        assert!((overshoot - 0.16303).abs() < 2e-3, "{overshoot}");
    }

    #[test]
    fn zero_disturbance_gives_zero_response() {
        let n = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let dist = Disturbance { device: 1, magnitude: 0.0, start: 0.0 };
        let r = step_response(&[gfm(1.0, 1.0), gfm(2.0, 1.0)], &n, dist, 5.0, 0.01).unwrap();
        assert!(r.angle.iter().chain(&r.power).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn log_decrement_matches_pole_damping() {
        let n = DMatrix::from_element(1, 1, 1.0);
        let e = gfm(1.0, 0.2);
        let dist = Disturbance { device: 0, magnitude: 1.0, start: 0.0 };
        let r = step_response(std::slice::from_ref(&e), &n, dist, 200.0, 0.01).unwrap();
        let est = log_decrement_damping(&r.time, &r.angle[0], 0.0).unwrap();
        assert!((est - 0.1).abs() < 0.015 * 0.1 * 10.0, "{est}");
        let m = settling_metrics(&r.time, &r.angle[0], 0.0, 0.02);
        assert!(m.cycles >= 5.0, "{m:?}");
    }

    #[test]
    fn settling_metrics_of_first_order_decay() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 - (-t).exp()).collect();
        let m = settling_metrics(&t, &y, 0.0, 0.02);
        assert_eq!(m.cycles, 0.0);
        // exp(-t) = 0.02 at t = 3.912
        assert!((m.settling_time.unwrap() - 3.912).abs() < 0.02, "{m:?}");
    }
}
