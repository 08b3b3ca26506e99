//! Local gain certificates and per-device feasible-region sweeps.
//!
//! For device `i` the local gain condition requires
//! `|D_i^-1(s) + N_ii(s)| > sum_{j != i} |N_ij(s)|` on the prohibited domain.
//! When both sides are analytic there and the left-hand expression never
//! vanishes, the minimum of the left side and the maximum of the right side
//! sit on the boundary, so sampling the finite boundary suffices. The
//! non-vanishing part is decided with a shifted Routh test on the half-plane
//! `Re(s) > -sigma`, which contains the domain; when that test is too coarse
//! (for instance a well-damped real zero right of `-sigma`) the zeros are
//! located explicitly against the domain.
//!
//! Each device's check reads only its own entry and row `i` of the network,
//! so devices are certified independently and in parallel.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::devices::{check_entry_analytic, DeviceEntry, DeviceModel};
use crate::domain::{BoundarySamples, ProhibitedDomain};
use crate::error::{Error, Result};
use crate::netmodel::{network_row, static_network_real, GridTopology, NetworkRow};
use crate::ratcalc::{Polynomial, RationalFunction, RouthVerdict};

/// Required absolute excess of the left side over the right side.
pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;

/// Points per truncation edge used by the tail preflight.
const TAIL_POINTS: usize = 64;

/// Source of network rows for the local checks.
pub trait NetworkProvider: Sync {
    /// Number of device nodes.
    fn size(&self) -> usize;

    fn row(&self, device: usize, s: Complex64) -> Result<NetworkRow>;

    /// `N_ii(s)` as a rational function, used by the non-vanishing test.
    fn diagonal(&self, device: usize) -> Result<RationalFunction>;

    /// No network entry has a pole inside the domain.
    fn is_analytic_in(&self, domain: &ProhibitedDomain) -> bool;
}

/// Constant network matrix from the `s = 0` line model.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticNetwork {
    matrix: DMatrix<f64>,
}

impl StaticNetwork {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "network matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_topology(topology: &GridTopology) -> Result<Self> {
        Self::new(static_network_real(topology)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn static_row(&self, i: usize) -> NetworkRow {
        let offdiag_abs_sum = (0..self.matrix.ncols())
            .filter(|&j| j != i)
            .map(|j| self.matrix[(i, j)].abs())
            .sum();
        NetworkRow { diag: Complex64::new(self.matrix[(i, i)], 0.0), offdiag_abs_sum }
    }
}

impl NetworkProvider for StaticNetwork {
    fn size(&self) -> usize {
        self.matrix.nrows()
    }

    fn row(&self, device: usize, _s: Complex64) -> Result<NetworkRow> {
        Ok(self.static_row(device))
    }

    fn diagonal(&self, device: usize) -> Result<RationalFunction> {
        Ok(RationalFunction::constant(self.matrix[(device, device)]))
    }

    fn is_analytic_in(&self, _domain: &ProhibitedDomain) -> bool {
        true
    }
}

/// Kron-reduced dynamic network evaluated pointwise at each complex `s`.
#[derive(Debug, Clone)]
pub struct DynamicNetwork {
    topology: GridTopology,
    static_matrix: DMatrix<f64>,
}

impl DynamicNetwork {
    pub fn new(topology: GridTopology) -> Result<Self> {
        let static_matrix = static_network_real(&topology)?;
        Ok(Self { topology, static_matrix })
    }

    pub fn topology(&self) -> &GridTopology {
        &self.topology
    }
}

impl NetworkProvider for DynamicNetwork {
    fn size(&self) -> usize {
        self.topology.n_devices()
    }

    fn row(&self, device: usize, s: Complex64) -> Result<NetworkRow> {
        Ok(network_row(&self.topology.reduced_at(s)?, device))
    }

    /// With a shared `rho` every line is `b_k * w(s)` for one scalar shape
    /// `w`, so `N(s) = N(0) q(0) / q(s)`. Mixed `rho` has no closed form here.
    fn diagonal(&self, device: usize) -> Result<RationalFunction> {
        let rho = self.topology.uniform_rho().ok_or_else(|| Error::CertificateInapplicable {
            device,
            reason: "dynamic non-vanishing test needs a common rho on all lines".into(),
        })?;
        let w0 = self.topology.omega0();
        let q = Polynomial::new(vec![w0 * w0 + rho * rho, 2.0 * rho, 1.0]);
        let gain = self.static_matrix[(device, device)] * q.coeffs()[0];
        RationalFunction::new(Polynomial::constant(gain), q)
    }

    fn is_analytic_in(&self, domain: &ProhibitedDomain) -> bool {
        let w0 = self.topology.omega0();
        self.topology.lines().iter().all(|l| {
            let pole = Complex64::new(-l.params.rho, w0);
            !domain.contains(pole)
        })
    }
}

/// `(lhs, rhs)` of the local gain condition at one point.
pub fn lgc_pointwise(entry: &DeviceEntry, row: &NetworkRow, s: Complex64) -> Result<(f64, f64)> {
    let lhs = (entry.d_inverse().eval(s)? + row.diag).norm();
    Ok((lhs, row.offdiag_abs_sum))
}

/// `D_i^-1(s) + N_ii` has no zero with `Re(s) > -sigma` (static `N_ii`).
pub fn nonvanishing_diagonal(entry: &DeviceEntry, n_ii: f64, sigma: f64) -> bool {
    nonvanishing_with(entry, &RationalFunction::constant(n_ii), sigma)
}

/// `D_i^-1(s) + N_ii(s)` has no zero with `Re(s) > -sigma` other than exact
/// zeros at the origin, which the domain excludes. Marginal Routh verdicts fail.
pub fn nonvanishing_with(entry: &DeviceEntry, diag: &RationalFunction, sigma: f64) -> bool {
    let inv = entry.d_inverse();
    let p = &(inv.num() * diag.den()) + &(diag.num() * inv.den());
    if p.is_zero() {
        return false;
    }
    let (_, rest) = p.split_origin();
    if rest.degree() == Some(0) {
        return true;
    }
    matches!(rest.shift(sigma).routh_classify(), Ok(RouthVerdict::Hurwitz))
}

/// Zeros of `D_i^-1(s) + N_ii(s)` stay out of the prohibited domain.
///
/// Tries [`nonvanishing_with`] first. Otherwise every zero is computed and must
/// lie outside the domain, clear of its boundary by a relative `1e-9`.
pub fn nonvanishing_in_domain(entry: &DeviceEntry, diag: &RationalFunction, domain: &ProhibitedDomain) -> bool {
    if nonvanishing_with(entry, diag, domain.sigma()) {
        return true;
    }
    let inv = entry.d_inverse();
    let p = &(inv.num() * diag.den()) + &(diag.num() * inv.den());
    if p.is_zero() {
        return false;
    }
    let (_, rest) = p.split_origin();
    match rest.roots() {
        Ok(roots) => roots
            .iter()
            .all(|&z| !domain.contains(z) && domain.boundary_distance(z) > 1e-9 * z.norm().max(1.0)),
        Err(_) => false,
    }
}

/// Outcome of the boundary check for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    pub device: usize,
    /// Minimum of `|D_i^-1(s) + N_ii(s)|` over the samples.
    pub min_lhs: f64,
    /// Maximum of `sum_{j != i} |N_ij(s)|` over the samples.
    pub max_rhs: f64,
    /// Minimum of `lhs - rhs` over the samples.
    pub min_margin: f64,
    pub worst_point: Complex64,
    pub nonvanishing: bool,
    /// The condition also holds on the truncation edges `|Im| = eta1`, `Re = eta2`.
    pub tail_ok: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
struct MarginStats {
    min_lhs: f64,
    max_rhs: f64,
    min_margin: f64,
    worst_point: Complex64,
}

fn margin_stats(
    device: usize,
    entry: &DeviceEntry,
    points: &[Complex64],
    rows: &[NetworkRow],
) -> Result<MarginStats> {
    let mut st = MarginStats {
        min_lhs: f64::INFINITY,
        max_rhs: f64::NEG_INFINITY,
        min_margin: f64::INFINITY,
        worst_point: Complex64::new(f64::NAN, f64::NAN),
    };
    for (&s, row) in points.iter().zip(rows) {
        let (lhs, rhs) = lgc_pointwise(entry, row, s).map_err(|_| Error::CertificateInapplicable {
            device,
            reason: format!("pole on the boundary at s = {s}"),
        })?;
        st.min_lhs = st.min_lhs.min(lhs);
        st.max_rhs = st.max_rhs.max(rhs);
        let m = lhs - rhs;
        if m < st.min_margin {
            st.min_margin = m;
            st.worst_point = s;
        }
    }
    Ok(st)
}

/// Points on the truncation edges `Im = eta1` and `Re = eta2`.
pub fn tail_points(domain: &ProhibitedDomain) -> Vec<Complex64> {
    let (lo, hi) = (-domain.sigma(), domain.eta2());
    let top = (0..=TAIL_POINTS).map(move |k| {
        let u = k as f64 / TAIL_POINTS as f64;
        Complex64::new(lo + (hi - lo) * u, domain.eta1())
    });
    let side = (0..=TAIL_POINTS).map(move |k| {
        let u = k as f64 / TAIL_POINTS as f64;
        Complex64::new(domain.eta2(), domain.eta1() * u)
    });
    top.chain(side).collect()
}

/// Network rows for one device at the boundary samples and tail points.
struct DeviceRows {
    boundary: Vec<NetworkRow>,
    tail_points: Vec<Complex64>,
    tail: Vec<NetworkRow>,
    diag: RationalFunction,
}

impl DeviceRows {
    fn new(
        device: usize,
        provider: &dyn NetworkProvider,
        domain: &ProhibitedDomain,
        samples: &BoundarySamples,
    ) -> Result<Self> {
        if device >= provider.size() {
            return Err(Error::DimensionMismatch(format!(
                "device {device} outside a network of {}",
                provider.size()
            )));
        }
        if !provider.is_analytic_in(domain) {
            return Err(Error::CertificateInapplicable {
                device,
                reason: "network has a line resonance inside the prohibited domain".into(),
            });
        }
        let diag = provider.diagonal(device)?;
        let rows = |pts: &[Complex64]| -> Result<Vec<NetworkRow>> {
            pts.iter().map(|&s| provider.row(device, s)).collect()
        };
        let tail_points = tail_points(domain);
        Ok(Self { boundary: rows(&samples.points)?, tail: rows(&tail_points)?, tail_points, diag })
    }
}

fn check_with_rows(
    device: usize,
    entry: &DeviceEntry,
    rows: &DeviceRows,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    margin_tol: f64,
) -> Result<MarginReport> {
    if !check_entry_analytic(entry, domain) {
        return Err(Error::CertificateInapplicable {
            device,
            reason: "device entry or its inverse has a pole inside the prohibited domain".into(),
        });
    }
    let nonvanishing = nonvanishing_in_domain(entry, &rows.diag, domain);
    let st = margin_stats(device, entry, &samples.points, &rows.boundary)?;
    let tail = margin_stats(device, entry, &rows.tail_points, &rows.tail)?;
    Ok(MarginReport {
        device,
        min_lhs: st.min_lhs,
        max_rhs: st.max_rhs,
        min_margin: st.min_margin,
        worst_point: st.worst_point,
        nonvanishing,
        tail_ok: tail.min_margin > margin_tol,
        passed: nonvanishing && st.min_margin > margin_tol,
    })
}

/// Boundary form of the local gain condition for one device.
pub fn lgbc_check(
    entry: &DeviceEntry,
    device: usize,
    provider: &dyn NetworkProvider,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    margin_tol: f64,
) -> Result<MarginReport> {
    let rows = DeviceRows::new(device, provider, domain, samples)?;
    check_with_rows(device, entry, &rows, domain, samples, margin_tol)
}

/// [`lgbc_check`] for every device, in parallel, in device order.
pub fn certify_all(
    entries: &[DeviceEntry],
    provider: &dyn NetworkProvider,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    margin_tol: f64,
) -> Result<Vec<Result<MarginReport>>> {
    if entries.len() != provider.size() {
        return Err(Error::DimensionMismatch(format!(
            "{} device entries for a network of {}",
            entries.len(),
            provider.size()
        )));
    }
    Ok(entries
        .par_iter()
        .enumerate()
        .map(|(i, e)| lgbc_check(e, i, provider, domain, samples, margin_tol))
        .collect())
}

/// One sampled parameter axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linspace(name: impl Into<String>, min: f64, max: f64, count: usize) -> Self {
        let values = match count {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..count)
                .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        Self { name: name.into(), values }
    }

    pub fn logspace(name: impl Into<String>, min: f64, max: f64, count: usize) -> Self {
        let mut a = Self::linspace(name, min.ln(), max.ln(), count);
        for v in &mut a.values {
            *v = v.exp();
        }
        if count > 1 {
            a.values[0] = min;
            a.values[count - 1] = max;
        }
        a
    }
}

/// Cartesian grid of parameter values in row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    axes: Vec<Axis>,
}

impl ParameterGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::config("parameter grid has no axes"));
        }
        for a in &axes {
            if a.values.is_empty() {
                return Err(Error::config(format!("axis '{}' has no values", a.name)));
            }
            if a.values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::config(format!("axis '{}' must be strictly increasing", a.name)));
            }
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of the `k`-th grid point.
    pub fn point(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (slot, a) in out.iter_mut().zip(&self.axes).rev() {
            let n = a.values.len();
            *slot = a.values[k % n];
            k /= n;
        }
        out
    }

    fn model_at(&self, base: &DeviceModel, k: usize) -> Result<DeviceModel> {
        self.axes
            .iter()
            .zip(self.point(k))
            .try_fold(base.clone(), |m, (a, v)| m.with_param(&a.name, v))
    }
}

/// Per-point feasibility flags and margins over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMask {
    pub device: usize,
    pub grid: ParameterGrid,
    pub flags: Vec<bool>,
    /// Minimum boundary margin `lhs - rhs`; `-inf` where the certificate
    /// does not apply to the candidate.
    pub margins: Vec<f64>,
    /// Candidates whose entry had a pole inside the domain or on the boundary.
    pub inapplicable: usize,
}

impl FeasibilityMask {
    pub fn feasible_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Parameter values of every feasible grid point.
    pub fn feasible_points(&self) -> Vec<Vec<f64>> {
        (0..self.flags.len())
            .filter(|&k| self.flags[k])
            .map(|k| self.grid.point(k))
            .collect()
    }

    /// Tab-separated records: axis values, flag (0/1), margin.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for a in self.grid.axes() {
            out.push_str(&a.name);
            out.push('\t');
        }
        out.push_str("feasible\tmargin\n");
        for k in 0..self.flags.len() {
            for v in self.grid.point(k) {
                let _ = write!(out, "{v}\t");
            }
            let _ = writeln!(out, "{}\t{}", u8::from(self.flags[k]), self.margins[k]);
        }
        out
    }
}

/// Feasible region of one device's parameters, all other devices fixed.
pub fn feasible_region(
    device: usize,
    base: &DeviceModel,
    grid: &ParameterGrid,
    provider: &dyn NetworkProvider,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    margin_tol: f64,
) -> Result<FeasibilityMask> {
    if grid.is_empty() {
        return Err(Error::config("parameter grid is empty"));
    }
    for a in grid.axes() {
        base.with_param(&a.name, a.values[0])?;
    }
    let rows = DeviceRows::new(device, provider, domain, samples)?;
    let evaluated: Vec<(bool, f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let entry = grid.model_at(base, k)?.entry()?;
            Ok(match check_with_rows(device, &entry, &rows, domain, samples, margin_tol) {
                Ok(r) => (r.passed, r.min_margin, false),
                Err(Error::CertificateInapplicable { .. }) => (false, f64::NEG_INFINITY, true),
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(FeasibilityMask {
        device,
        grid: grid.clone(),
        flags: evaluated.iter().map(|e| e.0).collect(),
        margins: evaluated.iter().map(|e| e.1).collect(),
        inapplicable: evaluated.iter().filter(|e| e.2).count(),
    })
}

/// One device's sweep specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepJob {
    pub device: usize,
    pub base: DeviceModel,
    pub grid: ParameterGrid,
}

#[derive(Debug)]
pub struct DeviceSweep {
    pub device: usize,
    pub result: Result<FeasibilityMask>,
    pub elapsed: Duration,
}

/// Independent feasible regions for every job. Output order follows `jobs`
/// and the numeric content is independent of the thread count.
pub fn sweep_all(
    jobs: &[SweepJob],
    provider: &dyn NetworkProvider,
    domain: &ProhibitedDomain,
    samples: &BoundarySamples,
    margin_tol: f64,
) -> Vec<DeviceSweep> {
    jobs.par_iter()
        .map(|job| {
            let t0 = Instant::now();
            let result =
                feasible_region(job.device, &job.base, &job.grid, provider, domain, samples, margin_tol);
            DeviceSweep { device: job.device, result, elapsed: t0.elapsed() }
        })
        .collect()
}
