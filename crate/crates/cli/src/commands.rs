use std::path::Path;
use std::time::Instant;

use dampcert_core::analysis::{
    closed_loop_poles, log_decrement_damping, settling_metrics, step_response, Disturbance, PoleReport,
};
use dampcert_core::certify::{
    certify_all, sweep_all, DynamicNetwork, NetworkProvider, StaticNetwork, SweepJob,
};
use dampcert_core::domain::BoundarySamples;
use dampcert_core::netmodel::static_network_real;
use dampcert_core::Error;
use nalgebra::DMatrix;

use crate::config::{NetworkMode, Overrides, Study, StudyConfig};
use crate::report::{write_file, Report};
use crate::CliError;

/// Poles this close to the domain boundary do not count as a contradiction.
const ORACLE_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Certify,
    Sweep,
    Poles,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Sweep => "sweep",
            Command::Poles => "poles",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Certificate passed or the command completed.
    Pass,
    /// Certificate failed or the simulation diverged.
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
        }
    }
}

/// Loads the configuration, runs `command` and writes its outputs.
pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let mut cfg = StudyConfig::load(config_path)?;
    cfg.apply(overrides);
    let study = cfg.build()?;
    let out = study.config.execution.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    let mut report = Report::new(command.name(), study.config.to_toml());
    report.timing("load", t0.elapsed());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(study.config.execution.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("execution.workers: {e}")))?;
    let result = pool.install(|| match command {
        Command::Certify => certify(&study, &out, &mut report),
        Command::Sweep => sweep(&study, &out, &mut report),
        Command::Poles => poles(&study, &out, &mut report),
        Command::Simulate => simulate(&study, &out, &mut report),
    });
    report.timing("total", t0.elapsed());
    report.write(&out)?;
    result
}

fn provider(study: &Study) -> Result<Box<dyn NetworkProvider>, CliError> {
    Ok(match study.config.topology.network {
        NetworkMode::Static => Box::new(StaticNetwork::from_topology(&study.topology)?),
        NetworkMode::Dynamic => Box::new(DynamicNetwork::new(study.topology.clone())?),
    })
}

fn samples(study: &Study) -> Result<BoundarySamples, CliError> {
    Ok(study.domain.discretize_boundary(study.config.domain.spacing)?)
}

fn oracle(study: &Study) -> Result<(DMatrix<f64>, PoleReport), CliError> {
    let n = static_network_real(&study.topology)?;
    let r = closed_loop_poles(&study.entries, &n, &study.domain)?;
    Ok((n, r))
}

fn pole_summary(report: &mut Report, poles: &PoleReport) {
    report.line(format!(
        "poles\t{}\torigin\t{}\tin_domain\t{}\tcancelled\t{}",
        poles.poles.len(),
        poles.origin_pole_count,
        poles.in_domain_count(),
        poles.cancelled.len()
    ));
    if let Some(p) = poles.dominant() {
        report.line(format!("dominant\t{}\t{}\tdamping\t{}", p.re, p.im, poles.dominant_damping().unwrap_or(1.0)));
    }
    if let Some(x) = poles.min_damping() {
        report.line(format!("min_damping\t{x}"));
    }
}

fn certify(study: &Study, out: &Path, report: &mut Report) -> Result<Outcome, CliError> {
    let names = study.device_names();
    let t = Instant::now();
    let prov = provider(study)?;
    let smp = samples(study)?;
    let results = certify_all(&study.entries, prov.as_ref(), &study.domain, &smp, study.config.domain.margin_tol)?;
    report.timing("certify", t.elapsed());
    report.line(format!("boundary samples\t{}", smp.len()));
    report.line("device\tpassed\tmin_lhs\tmax_rhs\tmin_margin\tworst_re\tworst_im\tnonvanishing\ttail_ok");
    let mut all_pass = true;
    for (name, r) in names.iter().zip(results) {
        match r {
            Ok(r) => {
                all_pass &= r.passed;
                report.line(format!(
                    "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.passed,
                    r.min_lhs,
                    r.max_rhs,
                    r.min_margin,
                    r.worst_point.re,
                    r.worst_point.im,
                    r.nonvanishing,
                    r.tail_ok
                ));
            }
            Err(Error::CertificateInapplicable { reason, .. }) => {
                all_pass = false;
                report.line(format!("{name}\tinapplicable\t{reason}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    for (name, e) in names.iter().zip(&study.entries) {
        let z = e.rhp_numerator_zeros();
        if !z.is_empty() {
            report.line(format!("warning\t{name}\tentry numerator has zeros with Re >= 0: {z:?}"));
        }
    }

    let t = Instant::now();
    let (_, poles) = oracle(study)?;
    report.timing("oracle", t.elapsed());
    write_file(&out.join("poles.tsv"), &poles.to_tsv())?;
    pole_summary(report, &poles);

    let offending: Vec<_> = poles
        .poles
        .iter()
        .zip(&poles.origin)
        .filter(|(p, o)| !**o && study.domain.contains(**p) && study.domain.boundary_distance(**p) > ORACLE_BAND)
        .map(|(p, _)| *p)
        .collect();
    let checked = study.config.topology.network == NetworkMode::Static;
    if all_pass && checked && !offending.is_empty() {
        report.verdict("INCONSISTENT");
        for p in &offending {
            report.line(format!("offending pole\t{}\t{}", p.re, p.im));
        }
        return Err(CliError::Inconsistent(format!("{} poles inside the domain", offending.len())));
    }
    if !checked {
        report.line("note\tpole oracle uses the static network; dynamic certificates are not cross-checked");
    }
    report.verdict(if all_pass { "PASS" } else { "FAIL" });
    Ok(if all_pass { Outcome::Pass } else { Outcome::Fail })
}

fn sweep(study: &Study, out: &Path, report: &mut Report) -> Result<Outcome, CliError> {
    let names = study.device_names();
    let jobs: Vec<SweepJob> = study
        .grids
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.as_ref().map(|g| SweepJob { device: i, base: study.models[i].clone(), grid: g.clone() }))
        .collect();
    if jobs.is_empty() {
        return Err(CliError::Config("devices: no device declares sweep axes".into()));
    }
    let prov = provider(study)?;
    let smp = samples(study)?;
    let results = sweep_all(&jobs, prov.as_ref(), &study.domain, &smp, study.config.domain.margin_tol);
    report.line(format!("boundary samples\t{}", smp.len()));
    report.line("device\tpoints\tfeasible\tinapplicable\tfile");
    let mut errors = Vec::new();
    for s in results {
        let name = names[s.device];
        report.timing(format!("sweep {name}"), s.elapsed);
        match s.result {
            Ok(mask) => {
                let file = format!("mask_{name}.tsv");
                write_file(&out.join(&file), &mask.to_tsv())?;
                report.line(format!(
                    "{name}\t{}\t{}\t{}\t{file}",
                    mask.grid.len(),
                    mask.feasible_count(),
                    mask.inapplicable
                ));
            }
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }
    if !errors.is_empty() {
        report.verdict("ERROR");
        return Err(CliError::Config(errors.join("; ")));
    }
    report.verdict("COMPLETE");
    Ok(Outcome::Pass)
}

fn poles(study: &Study, out: &Path, report: &mut Report) -> Result<Outcome, CliError> {
    let t = Instant::now();
    let (_, poles) = oracle(study)?;
    report.timing("oracle", t.elapsed());
    write_file(&out.join("poles.tsv"), &poles.to_tsv())?;
    pole_summary(report, &poles);
    let clean = dampcert_core::analysis::screen_poles(&poles, &study.domain);
    report.line(format!("screen\t{}", if clean { "clean" } else { "poles in domain" }));
    report.verdict(if clean { "PASS" } else { "FAIL" });
    Ok(Outcome::Pass)
}

fn simulate(study: &Study, out: &Path, report: &mut Report) -> Result<Outcome, CliError> {
    let (Some(sim), Some(device)) = (&study.config.simulation, study.disturbed) else {
        return Err(CliError::Config("simulation: section missing".into()));
    };
    let names = study.device_names();
    let (n, poles) = oracle(study)?;
    let t = Instant::now();
    let dist = Disturbance { device, magnitude: sim.magnitude, start: sim.start };
    let r = step_response(&study.entries, &n, dist, sim.horizon, sim.dt)?;
    report.timing("simulate", t.elapsed());
    write_file(&out.join("response.tsv"), &r.to_tsv(&names))?;
    pole_summary(report, &poles);
    report.line(format!("dt\t{}\tsamples\t{}", r.dt, r.time.len()));
    report.line("device\tchannel\tfinal\tsettling_time\tcycles\tmax_error");
    for (k, name) in names.iter().enumerate() {
        for (channel, y) in [("power", &r.power[k]), ("angle", &r.angle[k])] {
            let m = settling_metrics(&r.time, y, sim.start, sim.band);
            let settle = m.settling_time.map_or("unsettled".to_string(), |t| t.to_string());
            report.line(format!("{name}\t{channel}\t{}\t{settle}\t{}\t{}", m.final_value, m.cycles, m.peak_deviation));
        }
    }
    if let Some(x) = log_decrement_damping(&r.time, &r.power[device], sim.start) {
        report.line(format!("log_decrement_damping\t{x}"));
    }
    if r.divergent {
        report.verdict("DIVERGENT");
        return Ok(Outcome::Fail);
    }
    report.verdict("COMPLETE");
    Ok(Outcome::Pass)
}
