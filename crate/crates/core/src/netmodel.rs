//! Network topology, dynamic line admittance, and Kron reduction onto the
//! device nodes.
//!
//! All matrices use the node order of their source [`GridTopology`]: device
//! nodes first (GFM block, then GFL block), interior nodes after.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ratcalc::{Polynomial, RationalFunction};

pub type ComplexMatrix = DMatrix<Complex64>;

/// 50 Hz nominal angular frequency in rad/s.
pub const OMEGA0_50HZ: f64 = 2.0 * std::f64::consts::PI * 50.0;

/// Relative pivot magnitude below which Kron reduction reports a singular block.
pub const PIVOT_TOL: f64 = 1e-10;

const RESONANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Gfm,
    Gfl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Device(Role),
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Parameters of one line in the second-order angle-power model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    /// Per-unit inductance, > 0.
    pub l: f64,
    /// Resistance-to-inductance ratio in 1/s, >= 0.
    pub rho: f64,
    /// Operating-point stiffness multiplier (1.0 for flat angle differences).
    pub stiffness: f64,
}

impl LineParams {
    pub fn new(l: f64, rho: f64) -> Self {
        Self { l, rho, stiffness: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) {
            return Err(Error::config(format!("line inductance l must be > 0, got {}", self.l)));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::config(format!("line rho must be >= 0, got {}", self.rho)));
        }
        if !(self.stiffness > 0.0) {
            return Err(Error::config(format!(
                "line stiffness must be > 0, got {}",
                self.stiffness
            )));
        }
        Ok(())
    }

    /// `s^2 + 2 rho s + omega0^2 + rho^2`.
    pub fn resonance_polynomial(&self, omega0: f64) -> Polynomial {
        Polynomial::new(vec![omega0 * omega0 + self.rho * self.rho, 2.0 * self.rho, 1.0])
    }

    /// `stiffness * omega0 / ((s^2 + 2 rho s + omega0^2 + rho^2) l)`.
    pub fn admittance(&self, omega0: f64, s: Complex64) -> Result<Complex64> {
        let q = self.resonance_polynomial(omega0);
        let den = q.eval(s);
        if den.norm() <= RESONANCE_TOL * q.eval_abs_bound(s) {
            return Err(Error::LineResonance { s });
        }
        Ok(self.stiffness * omega0 / (den * self.l))
    }

    /// The admittance as a rational function of `s`.
    pub fn admittance_rational(&self, omega0: f64) -> RationalFunction {
        RationalFunction::new(
            Polynomial::constant(self.stiffness * omega0 / self.l),
            self.resonance_polynomial(omega0),
        )
        .expect("resonance polynomial is monic")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub a: usize,
    pub b: usize,
    pub params: LineParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTopology {
    nodes: Vec<Node>,
    lines: Vec<Line>,
    omega0: f64,
    n_devices: usize,
}

impl GridTopology {
    pub fn builder(omega0: f64) -> TopologyBuilder {
        TopologyBuilder {
            omega0,
            devices: Vec::new(),
            interior: Vec::new(),
            lines: Vec::new(),
        }
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Nodes in matrix order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn n_devices(&self) -> usize {
        self.n_devices
    }

    pub fn device_roles(&self) -> Vec<Role> {
        self.nodes[..self.n_devices]
            .iter()
            .map(|n| match n.kind {
                NodeKind::Device(r) => r,
                NodeKind::Interior => unreachable!("device block holds devices only"),
            })
            .collect()
    }

    pub fn device_names(&self) -> Vec<&str> {
        self.nodes[..self.n_devices].iter().map(|n| n.name.as_str()).collect()
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (self.n_devices..self.nodes.len()).collect()
    }

    /// The shared `rho` when every line has the same resistance-inductance ratio.
    pub fn uniform_rho(&self) -> Option<f64> {
        let first = self.lines.first()?.params.rho;
        self.lines
            .iter()
            .all(|l| l.params.rho == first)
            .then_some(first)
    }

    /// Kron-reduced network matrix at the complex frequency `s`.
    pub fn reduced_at(&self, s: Complex64) -> Result<ComplexMatrix> {
        kron_reduce(&assemble_y(self, s)?, &self.interior_indices())
    }
}

pub struct TopologyBuilder {
    omega0: f64,
    devices: Vec<(String, Role)>,
    interior: Vec<String>,
    lines: Vec<(String, String, LineParams)>,
}

impl TopologyBuilder {
    pub fn device(mut self, name: impl Into<String>, role: Role) -> Self {
        self.devices.push((name.into(), role));
        self
    }

    pub fn interior(mut self, name: impl Into<String>) -> Self {
        self.interior.push(name.into());
        self
    }

    pub fn line(mut self, a: impl Into<String>, b: impl Into<String>, params: LineParams) -> Self {
        self.lines.push((a.into(), b.into(), params));
        self
    }

    pub fn build(self) -> Result<GridTopology> {
        if !(self.omega0 > 0.0) {
            return Err(Error::config(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if self.devices.is_empty() {
            return Err(Error::config("topology has no device nodes"));
        }
        if let Some(w) = self.devices.windows(2).find(|w| w[0].1 == Role::Gfl && w[1].1 == Role::Gfm) {
            return Err(Error::config(format!(
                "device order must list GFM nodes before GFL nodes (GFM '{}' follows GFL '{}')",
                w[1].0, w[0].0
            )));
        }
        let n_devices = self.devices.len();
        let nodes: Vec<Node> = self
            .devices
            .into_iter()
            .map(|(name, role)| Node { name, kind: NodeKind::Device(role) })
            .chain(self.interior.into_iter().map(|name| Node { name, kind: NodeKind::Interior }))
            .collect();
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate node name '{}'", n.name)));
            }
        }
        let mut lines = Vec::with_capacity(self.lines.len());
        for (a, b, params) in self.lines {
            let lookup = |name: &str| {
                index
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::config(format!("line references unknown node '{name}'")))
            };
            let (ia, ib) = (lookup(&a)?, lookup(&b)?);
            if ia == ib {
                return Err(Error::config(format!("self-loop line at node '{a}'")));
            }
            params
                .validate()
                .map_err(|e| Error::config(format!("line {a}-{b}: {e}")))?;
            lines.push(Line { a: ia, b: ib, params });
        }
        let topo = GridTopology { nodes, lines, omega0: self.omega0, n_devices };
        if !is_connected(topo.nodes.len(), &topo.lines) {
            return Err(Error::config("topology is not connected"));
        }
        Ok(topo)
    }
}

fn is_connected(n: usize, lines: &[Line]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for l in lines {
        adj[l.a].push(l.b);
        adj[l.b].push(l.a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().all(|&x| x)
}

/// Laplacian of line admittances over all nodes at `s`.
pub fn assemble_y(topology: &GridTopology, s: Complex64) -> Result<ComplexMatrix> {
    let n = topology.nodes.len();
    let mut y = ComplexMatrix::zeros(n, n);
    for line in &topology.lines {
        let b = line.params.admittance(topology.omega0, s)?;
        y[(line.a, line.a)] += b;
        y[(line.b, line.b)] += b;
        y[(line.a, line.b)] -= b;
        y[(line.b, line.a)] -= b;
    }
    Ok(y)
}

/// Schur complement of `y` onto the indices not listed in `interior`.
///
/// Interior nodes are eliminated one at a time in the given order; a pivot
/// smaller than [`PIVOT_TOL`] times the infinity norm of `y` is an error.
pub fn kron_reduce(y: &ComplexMatrix, interior: &[usize]) -> Result<ComplexMatrix> {
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::DimensionMismatch(format!("Kron reduction of {}x{}", n, y.ncols())));
    }
    if let Some(&bad) = interior.iter().find(|&&k| k >= n) {
        return Err(Error::DimensionMismatch(format!("interior index {bad} out of range {n}")));
    }
    let norm = (0..n)
        .map(|i| y.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut work = y.clone();
    let mut eliminated = vec![false; n];
    for &k in interior {
        if eliminated[k] {
            continue;
        }
        let pivot = work[(k, k)];
        if !(pivot.norm() >= PIVOT_TOL * norm) || norm == 0.0 {
            return Err(Error::ReductionSingular { node: k });
        }
        eliminated[k] = true;
        for i in (0..n).filter(|&i| !eliminated[i]) {
            let f = work[(i, k)] / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in (0..n).filter(|&j| !eliminated[j]) {
                let t = f * work[(k, j)];
                work[(i, j)] -= t;
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| !eliminated[i]).collect();
    Ok(ComplexMatrix::from_fn(keep.len(), keep.len(), |i, j| work[(keep[i], keep[j])]))
}

/// Kron-reduced network at `s = 0`, the linearized static power-flow matrix.
pub fn static_network(topology: &GridTopology) -> Result<ComplexMatrix> {
    topology.reduced_at(Complex64::new(0.0, 0.0))
}

/// Real part of [`static_network`].
pub fn static_network_real(topology: &GridTopology) -> Result<DMatrix<f64>> {
    Ok(static_network(topology)?.map(|z| z.re))
}

/// Diagonal entry and off-diagonal absolute row sum of a network matrix row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkRow {
    pub diag: Complex64,
    pub offdiag_abs_sum: f64,
}

pub fn network_row(n: &ComplexMatrix, i: usize) -> NetworkRow {
    let offdiag_abs_sum = (0..n.ncols()).filter(|&j| j != i).map(|j| n[(i, j)].norm()).sum();
    NetworkRow { diag: n[(i, i)], offdiag_abs_sum }
}
