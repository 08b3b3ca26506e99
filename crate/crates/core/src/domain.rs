//! Prohibited pole region: the closed right half-plane without the origin,
//! united with the weakly damped wedge `-sigma <= Re < 0`,
//! `|Im| / -Re >= tan(gamma)` where `xi = cos(gamma)`.
//!
//! Its finite boundary is a five-piece polyline in the upper half-plane that
//! skirts the origin through a small notch of size `eps1 x eps2` and is
//! truncated at `eta1` (imaginary extent) and `eta2` (real extent).

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProhibitedDomain {
    sigma: f64,
    xi: f64,
    eps1: f64,
    eps2: f64,
    eta1: f64,
    eta2: f64,
    tan_gamma: f64,
}

impl Default for ProhibitedDomain {
    /// `sigma = 0.35`, `xi = 0.37`, `eps1 = 1e-3`, `eps2 = 0.1`, `eta1 = eta2 = 10`.
    fn default() -> Self {
        Self::new(0.35, 0.37, 1e-3, 0.1, 10.0, 10.0).expect("default domain is valid")
    }
}

impl ProhibitedDomain {
    pub fn new(sigma: f64, xi: f64, eps1: f64, eps2: f64, eta1: f64, eta2: f64) -> Result<Self> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        check(sigma > 0.0 && sigma.is_finite(), format!("domain sigma must be > 0, got {sigma}"))?;
        check(xi > 0.0 && xi < 1.0, format!("domain xi must lie in (0, 1), got {xi}"))?;
        check(eps1 > 0.0, format!("domain eps1 must be > 0, got {eps1}"))?;
        check(eps2 > 0.0, format!("domain eps2 must be > 0, got {eps2}"))?;
        check(eta1 > 0.0 && eta1.is_finite(), format!("domain eta1 must be > 0, got {eta1}"))?;
        check(eta2 > 0.0 && eta2.is_finite(), format!("domain eta2 must be > 0, got {eta2}"))?;
        let tan_gamma = (1.0 - xi * xi).sqrt() / xi;
        check(
            eps1 < eta2,
            format!("degenerate real-axis segment: eps1 ({eps1}) must be < eta2 ({eta2})"),
        )?;
        check(
            sigma * tan_gamma + eps2 < eta1,
            format!(
                "degenerate vertical segment: sigma*tan(gamma) + eps2 ({}) must be < eta1 ({eta1})",
                sigma * tan_gamma + eps2
            ),
        )?;
        Ok(Self { sigma, xi, eps1, eps2, eta1, eta2, tan_gamma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn eps1(&self) -> f64 {
        self.eps1
    }
    pub fn eps2(&self) -> f64 {
        self.eps2
    }
    pub fn eta1(&self) -> f64 {
        self.eta1
    }
    pub fn eta2(&self) -> f64 {
        self.eta2
    }
    pub fn tan_gamma(&self) -> f64 {
        self.tan_gamma
    }

    /// Membership, evaluated on `(Re s, |Im s|)`.
    pub fn contains(&self, s: Complex64) -> bool {
        let (re, im) = (s.re, s.im.abs());
        let right_half = re >= 0.0 && !(re == 0.0 && im == 0.0);
        let wedge = re >= -self.sigma && re < 0.0 && im / -re >= self.tan_gamma;
        right_half || wedge
    }

    /// Euclidean distance from `s` to the boundary of the region (wedge rays,
    /// the `Re = -sigma` cut, and the excluded origin).
    pub fn boundary_distance(&self, s: Complex64) -> f64 {
        let p = Complex64::new(s.re, s.im.abs());
        let apex = Complex64::new(-self.sigma, self.sigma * self.tan_gamma);
        let ray = dist_to_segment(p, Complex64::new(0.0, 0.0), apex);
        let cut = if p.im >= apex.im {
            (p.re + self.sigma).abs()
        } else {
            (p - apex).norm()
        };
        ray.min(cut).min(p.norm())
    }

    /// Whether `s` lies in the part of the region enclosed by the finite
    /// boundary and the truncation lines `|Im| = eta1`, `Re = eta2`.
    pub fn enclosed_by_finite_boundary(&self, s: Complex64) -> bool {
        let (re, im) = (s.re, s.im.abs());
        if re < -self.sigma || re > self.eta2 || im > self.eta1 {
            return false;
        }
        if re < 0.0 {
            im >= self.eps2 - re * self.tan_gamma
        } else if re <= self.eps1 {
            im >= self.eps2
        } else {
            true
        }
    }

    /// The five boundary pieces in order (i) through (v).
    pub fn boundary_segments(&self) -> [Segment; 5] {
        let (s, t, e1, e2) = (self.sigma, self.tan_gamma, self.eps1, self.eps2);
        let c = Complex64::new;
        [
            Segment { kind: SegmentKind::Cut, start: c(-s, s * t + e2), end: c(-s, self.eta1) },
            Segment { kind: SegmentKind::Wedge, start: c(-s, e2 + s * t), end: c(0.0, e2) },
            Segment { kind: SegmentKind::NotchTop, start: c(0.0, e2), end: c(e1, e2) },
            Segment { kind: SegmentKind::NotchSide, start: c(e1, 0.0), end: c(e1, e2) },
            Segment { kind: SegmentKind::RealAxis, start: c(e1, 0.0), end: c(self.eta2, 0.0) },
        ]
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_segments().iter().map(Segment::length).sum()
    }

    /// Samples each segment at a uniform arc-length step no larger than
    /// `spacing`, always including endpoints; shared endpoints appear once.
    pub fn discretize_boundary(&self, spacing: f64) -> Result<BoundarySamples> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::config(format!("boundary spacing must be > 0, got {spacing}")));
        }
        let mut points: Vec<Complex64> = Vec::new();
        let mut endpoints: Vec<Complex64> = Vec::new();
        for seg in self.boundary_segments() {
            let n = (seg.length() / spacing).ceil().max(1.0) as usize;
            for j in 0..=n {
                let p = self.segment_point(&seg, j as f64 / n as f64);
                if j == 0 || j == n {
                    if endpoints.iter().any(|q| (q - p).norm() <= 1e-12) {
                        continue;
                    }
                    endpoints.push(p);
                }
                points.push(p);
            }
        }
        Ok(BoundarySamples { points, spacing })
    }

    /// Point at fraction `u` along a segment, computed from the segment's
    /// own equation so that it holds exactly.
    fn segment_point(&self, seg: &Segment, u: f64) -> Complex64 {
        let lerp = |a: f64, b: f64| if u >= 1.0 { b } else { a + (b - a) * u };
        match seg.kind {
            SegmentKind::Cut => Complex64::new(-self.sigma, lerp(seg.start.im, seg.end.im)),
            SegmentKind::Wedge => {
                let re = lerp(-self.sigma, 0.0);
                Complex64::new(re, self.eps2 - re * self.tan_gamma)
            }
            SegmentKind::NotchTop => Complex64::new(lerp(0.0, self.eps1), self.eps2),
            SegmentKind::NotchSide => Complex64::new(self.eps1, lerp(0.0, self.eps2)),
            SegmentKind::RealAxis => Complex64::new(lerp(self.eps1, self.eta2), 0.0),
        }
    }
}

fn dist_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / ab.norm_sqr();
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// `Re = -sigma`, `sigma tan(gamma) + eps2 <= Im <= eta1`.
    Cut,
    /// `-sigma <= Re < 0`, `Im = eps2 - Re tan(gamma)`.
    Wedge,
    /// `0 <= Re <= eps1`, `Im = eps2`.
    NotchTop,
    /// `Re = eps1`, `0 <= Im <= eps2`.
    NotchSide,
    /// `eps1 <= Re <= eta2`, `Im = 0`.
    RealAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: Complex64,
    pub end: Complex64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Upper-half-plane sample points on the finite boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySamples {
    pub points: Vec<Complex64>,
    pub spacing: f64,
}

impl BoundarySamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Tab-separated `re`, `im` records with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("re\tim\n");
        for p in &self.points {
            let _ = writeln!(out, "{}\t{}", p.re, p.im);
        }
        out
    }
}

/// Damping ratio bound `xi` and the cached `tan(gamma)`, for reports.
impl std::fmt::Display for ProhibitedDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "sigma={} xi={} eps1={} eps2={} eta1={} eta2={}",
            self.sigma, self.xi, self.eps1, self.eps2, self.eta1, self.eta2
        )
    }
}
