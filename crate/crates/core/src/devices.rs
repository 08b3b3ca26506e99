//! Inverter device models and their diagonal entries in the device matrix.
//!
//! Every entry maps electrical power deviation to angle deviation. Signs are
//! chosen so that a single GFM with inertia `m` and damping `d` tied to a
//! stiff bus through a static susceptance `b` has closed-loop polynomial
//! `m s^2 + d s + b`, i.e. the closed loop is `det(I + D(s) N(s)) = 0` with
//! `D_ii = 1 / (s (m s + d))`.

use num_complex::Complex64;

use crate::domain::ProhibitedDomain;
use crate::error::{Error, Result};
use crate::netmodel::Role;
use crate::ratcalc::{Polynomial, RationalFunction};

/// Grid-forming swing-equation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfmParams {
    /// Virtual inertia, s.
    pub m: f64,
    /// Virtual damping, pu.
    pub d: f64,
}

/// Grid-following parameters: virtual inertia/damping plus PLL gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GflParams {
    /// Virtual inertia, s.
    pub h: f64,
    /// Virtual damping, pu.
    pub d: f64,
    pub kp: f64,
    pub ki: f64,
    /// Voltage setpoint, pu.
    pub v0: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be > 0, got {v}")))
    }
}

impl GfmParams {
    pub fn validate(&self) -> Result<()> {
        positive("GfmParams.m", self.m)?;
        positive("GfmParams.d", self.d)
    }
}

impl GflParams {
    pub fn new(h: f64, d: f64, kp: f64, ki: f64) -> Self {
        Self { h, d, kp, ki, v0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        positive("GflParams.H", self.h)?;
        positive("GflParams.D", self.d)?;
        positive("GflParams.Kp", self.kp)?;
        positive("GflParams.Ki", self.ki)?;
        positive("GflParams.V0", self.v0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceModel {
    Gfm(GfmParams),
    Gfl(GflParams),
    /// Arbitrary strictly proper power-to-angle entry.
    Custom(RationalFunction),
}

impl DeviceModel {
    pub fn entry(&self) -> Result<DeviceEntry> {
        match self {
            DeviceModel::Gfm(p) => gfm_entry(p),
            DeviceModel::Gfl(p) => gfl_entry(p),
            DeviceModel::Custom(r) => DeviceEntry::new(r.clone()),
        }
    }

    /// Names of the parameters accepted by [`DeviceModel::with_param`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            DeviceModel::Gfm(_) => &["m", "d"],
            DeviceModel::Gfl(_) => &["H", "D", "Kp", "Ki", "V0"],
            DeviceModel::Custom(_) => &[],
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        match (self, name) {
            (DeviceModel::Gfm(p), "m") => Some(p.m),
            (DeviceModel::Gfm(p), "d") => Some(p.d),
            (DeviceModel::Gfl(p), "H") => Some(p.h),
            (DeviceModel::Gfl(p), "D") => Some(p.d),
            (DeviceModel::Gfl(p), "Kp") => Some(p.kp),
            (DeviceModel::Gfl(p), "Ki") => Some(p.ki),
            (DeviceModel::Gfl(p), "V0") => Some(p.v0),
            _ => None,
        }
    }

    /// Copy of the model with one named parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<DeviceModel> {
        let mut out = self.clone();
        let slot = match (&mut out, name) {
            (DeviceModel::Gfm(p), "m") => &mut p.m,
            (DeviceModel::Gfm(p), "d") => &mut p.d,
            (DeviceModel::Gfl(p), "H") => &mut p.h,
            (DeviceModel::Gfl(p), "D") => &mut p.d,
            (DeviceModel::Gfl(p), "Kp") => &mut p.kp,
            (DeviceModel::Gfl(p), "Ki") => &mut p.ki,
            (DeviceModel::Gfl(p), "V0") => &mut p.v0,
            _ => {
                return Err(Error::config(format!(
                    "parameter '{name}' is not sweepable for this device (expected one of {:?})",
                    self.param_names()
                )))
            }
        };
        *slot = value;
        Ok(out)
    }

    fn matches_role(&self, role: Role) -> bool {
        match self {
            DeviceModel::Gfm(_) => role == Role::Gfm,
            DeviceModel::Gfl(_) => role == Role::Gfl,
            DeviceModel::Custom(_) => true,
        }
    }
}

/// Diagonal device-matrix entry together with its reciprocal.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceEntry {
    d_entry: RationalFunction,
    d_inverse: RationalFunction,
}

impl DeviceEntry {
    /// Wraps a strictly proper, nonzero power-to-angle entry.
    pub fn new(d_entry: RationalFunction) -> Result<Self> {
        if d_entry.num().is_zero() {
            return Err(Error::config("device entry is identically zero"));
        }
        if !d_entry.is_strictly_proper() {
            return Err(Error::config(format!(
                "device entry {d_entry} is not strictly proper"
            )));
        }
        let d_inverse = d_entry.reciprocal()?;
        Ok(Self { d_entry, d_inverse })
    }

    pub fn d_entry(&self) -> &RationalFunction {
        &self.d_entry
    }

    pub fn d_inverse(&self) -> &RationalFunction {
        &self.d_inverse
    }

    /// Zeros of the entry numerator, i.e. poles of the inverse.
    pub fn inverse_poles(&self) -> Vec<Complex64> {
        roots_or_empty(self.d_entry.num())
    }

    /// Zeros of the entry denominator other than exact roots at the origin.
    pub fn entry_poles_off_origin(&self) -> Vec<Complex64> {
        let (_, rest) = self.d_entry.den().split_origin();
        roots_or_empty(&rest)
    }

    /// Numerator zeros with `Re >= 0`, reported as warnings.
    pub fn rhp_numerator_zeros(&self) -> Vec<Complex64> {
        self.inverse_poles().into_iter().filter(|z| z.re >= 0.0).collect()
    }
}

fn roots_or_empty(p: &Polynomial) -> Vec<Complex64> {
    match p.degree() {
        Some(d) if d >= 1 => p.roots().unwrap_or_default(),
        _ => Vec::new(),
    }
}

pub fn gfm_entry(p: &GfmParams) -> Result<DeviceEntry> {
    p.validate()?;
    let den = Polynomial::new(vec![0.0, p.d, p.m]);
    DeviceEntry::new(RationalFunction::new(Polynomial::constant(1.0), den)?)
}

pub fn gfl_entry(p: &GflParams) -> Result<DeviceEntry> {
    p.validate()?;
    let pll = Polynomial::new(vec![p.v0 * p.ki, p.v0 * p.kp]);
    let num = Polynomial::new(vec![p.v0 * p.ki, p.v0 * p.kp, 1.0]);
    let den = &(&Polynomial::new(vec![0.0, 1.0]) * &Polynomial::new(vec![p.d, p.h])) * &pll;
    DeviceEntry::new(RationalFunction::new(num, den)?)
}

/// Entries of the diagonal device matrix, in topology device order.
pub fn device_matrix(models: &[DeviceModel], roles: &[Role]) -> Result<Vec<DeviceEntry>> {
    if models.is_empty() {
        return Err(Error::config("device list is empty"));
    }
    if models.len() != roles.len() {
        return Err(Error::config(format!(
            "{} device models for {} device nodes",
            models.len(),
            roles.len()
        )));
    }
    models
        .iter()
        .zip(roles)
        .enumerate()
        .map(|(i, (m, &r))| {
            if !m.matches_role(r) {
                return Err(Error::config(format!(
                    "device {i}: model does not match node role {r:?}"
                )));
            }
            m.entry().map_err(|e| Error::config(format!("device {i}: {e}")))
        })
        .collect()
}

/// No zero of the entry numerator lies inside the prohibited domain.
pub fn check_device_nonsingular(entry: &DeviceEntry, domain: &ProhibitedDomain) -> bool {
    let num = entry.d_entry.num();
    if num.degree().unwrap_or(0) >= 1 && num.roots().is_err() {
        return false;
    }
    !entry.inverse_poles().iter().any(|&z| domain.contains(z))
}

/// Neither the inverse nor the entry has a pole inside the prohibited domain
/// (exact poles of the entry at the origin are excluded, as is the origin).
pub fn check_entry_analytic(entry: &DeviceEntry, domain: &ProhibitedDomain) -> bool {
    let (_, rest) = entry.d_entry.den().split_origin();
    if rest.degree().unwrap_or(0) >= 1 && rest.roots().is_err() {
        return false;
    }
    check_device_nonsingular(entry, domain)
        && !entry.entry_poles_off_origin().iter().any(|&z| domain.contains(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted_re(v: &[Complex64]) -> Vec<f64> {
        let mut r: Vec<f64> = v.iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn gfm_entry_examples() {
        let e = gfm_entry(&GfmParams { m: 1.0, d: 1.0 }).unwrap();
        let v = e.d_entry().eval(c(0.0, 1.0)).unwrap();
        assert!((v.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.d_entry().num().degree(), Some(0));
        assert_eq!(e.d_entry().den().degree(), Some(2));
        // Closed loop with a static tie b = 1: den + b * num = s^2 + s + 1.
        let cl = e.d_entry().den() + &e.d_entry().num().scale(1.0);
        assert_eq!(cl.coeffs(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn gfl_entry_examples() {
        let p = GflParams::new(1.0, 1.0, 4.0, 40.0);
        let e = gfl_entry(&p).unwrap();
        let v = e.d_entry().eval(c(1.0, 0.0)).unwrap();
        assert!((v.re - 45.0 / 88.0).abs() < 1e-15 && v.im == 0.0);
        let poles = e.d_entry().den().roots().unwrap();
        let re = sorted_re(&poles);
        for (a, b) in re.iter().zip([-10.0, -1.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(e.d_entry().is_strictly_proper());
        assert_eq!(e.d_entry().den().degree(), Some(3));

        let q = gfl_entry(&GflParams { h: 2.0, d: 3.0, kp: 2.0, ki: 20.0, v0: 1.1 }).unwrap();
        let re = sorted_re(&q.d_entry().den().roots().unwrap());
        for (a, b) in re.iter().zip([-10.0, -1.5, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_is_reciprocal() {
        let e = gfl_entry(&GflParams::new(1.3, 0.7, 2.0, 20.0)).unwrap();
        let lead = e.d_entry().num().leading();
        let monic = e.d_entry().num().scale(1.0 / lead);
        for (a, b) in e.d_inverse().den().coeffs().iter().zip(monic.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let s = c(0.3, -1.7);
        let prod = e.d_entry().eval(s).unwrap() * e.d_inverse().eval(s).unwrap();
        assert!((prod - 1.0).norm() < 1e-12);
    }

    #[test]
    fn device_matrix_examples() {
        let gfm = DeviceModel::Gfm(GfmParams { m: 1.0, d: 1.0 });
        let gfl = DeviceModel::Gfl(GflParams::new(1.0, 1.0, 4.0, 40.0));
        let one = device_matrix(std::slice::from_ref(&gfm), &[Role::Gfm]).unwrap();
        assert_eq!(one[0].d_entry().den().degree(), Some(2));
        let two = device_matrix(&[gfm.clone(), gfl.clone()], &[Role::Gfm, Role::Gfl]).unwrap();
        let degs: Vec<_> = two.iter().map(|e| e.d_entry().den().degree().unwrap()).collect();
        assert_eq!(degs, vec![2, 3]);
        assert!(matches!(device_matrix(&[], &[]), Err(Error::Config(_))));
        assert!(matches!(
            device_matrix(&[gfl, gfm], &[Role::Gfm, Role::Gfl]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(gfm_entry(&GfmParams { m: 1.0, d: -1.0 }).is_err());
        assert!(gfl_entry(&GflParams::new(1.0, 1.0, 0.0, 40.0)).is_err());
        let improper = RationalFunction::new(Polynomial::new(vec![1.0, 1.0]), Polynomial::new(vec![1.0, 1.0]))
            .unwrap();
        assert!(DeviceModel::Custom(improper).entry().is_err());
    }

    #[test]
    fn nonsingular_checks() {
        let dom = ProhibitedDomain::default();
        let gfl = gfl_entry(&GflParams::new(1.0, 1.0, 4.0, 40.0)).unwrap();
        assert!(check_device_nonsingular(&gfl, &dom));
        let gfm = gfm_entry(&GfmParams { m: 3.0, d: 0.2 }).unwrap();
        assert!(check_device_nonsingular(&gfm, &dom));
        let rhp_zero = DeviceEntry::new(
            RationalFunction::new(Polynomial::new(vec![-1.0, 1.0]), Polynomial::new(vec![0.0, 1.0, 1.0, 1.0]))
                .unwrap(),
        )
        .unwrap();
        assert!(dom.contains(c(1.0, 0.0)));
        assert!(!check_device_nonsingular(&rhp_zero, &dom));
        assert_eq!(rhp_zero.rhp_numerator_zeros().len(), 1);
    }

    #[test]
    fn analytic_checks() {
        let dom = ProhibitedDomain::default();
        let gfl = gfl_entry(&GflParams::new(1.0, 1.0, 4.0, 40.0)).unwrap();
        assert!(check_entry_analytic(&gfl, &dom));
        let gfm = gfm_entry(&GfmParams { m: 1.0, d: 1.0 }).unwrap();
        assert!(check_entry_analytic(&gfm, &dom));
        // Pole at s = +-0.5j.
        let resonant = DeviceEntry::new(
            RationalFunction::new(Polynomial::constant(1.0), Polynomial::new(vec![0.25, 0.0, 1.0])).unwrap(),
        )
        .unwrap();
        assert!(!check_entry_analytic(&resonant, &dom));
    }

    #[test]
    fn with_param_round_trip() {
        let gfl = DeviceModel::Gfl(GflParams::new(1.0, 1.0, 4.0, 40.0));
        let g2 = gfl.with_param("H", 7.0).unwrap();
        assert_eq!(g2.param("H"), Some(7.0));
        assert_eq!(g2.param("Kp"), Some(4.0));
        assert!(gfl.with_param("m", 1.0).is_err());
    }
}
