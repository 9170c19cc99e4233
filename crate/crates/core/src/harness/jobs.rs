//! Single solver and spectrum jobs described by JSON files.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::{random_start, write_csv};
use crate::geometry::BundleSpec;
use crate::lattice::{self, GaugeField, Lattice, LatticeSpec, OneForm, Snapshot};
use crate::spectral::{self, SpectrumReport, SpectrumRequest};
use crate::sw::{self, Configuration, LinearizationOptions, SolverParams, SwContext};
use crate::{Error, Result};

fn default_amplitude() -> f64 {
    0.1
}

/// `{bundle, lattice, start, params}`; `start` is `random:<seed>`,
/// `reducible:<k>,<hol_x>,<hol_y>` or `snapshot:<spinor file>[,<form file>]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverJob {
    pub bundle: BundleSpec,
    pub lattice: LatticeSpec,
    pub start: String,
    #[serde(default)]
    pub params: SolverParams,
    /// Amplitude of `random:` starts.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Random { seed: u64 },
    Reducible { k: i64, hol: [f64; 2] },
    Snapshot { spinor: PathBuf, form: Option<PathBuf> },
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("bad number {t:?} in {s:?}"))))
        .collect()
}

pub fn parse_start(s: &str) -> Result<Start> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| Error::Invalid(format!("start {s:?} has no kind prefix")))?;
    match kind {
        "random" => {
            let seed = rest.trim().parse().map_err(|_| Error::Invalid(format!("bad seed in {s:?}")))?;
            Ok(Start::Random { seed })
        }
        "reducible" => {
            let v = numbers(rest)?;
            let k = v.first().copied().unwrap_or(f64::NAN);
            if k.fract() != 0.0 {
                return Err(Error::Invalid(format!("reducible start needs an integer class, got {s:?}")));
            }
            let hol = match v.len() {
                1 => [0.0, 0.0],
                3 => [v[1], v[2]],
                _ => return Err(Error::Invalid(format!("expected reducible:<k>[,<hol_x>,<hol_y>], got {s:?}"))),
            };
            Ok(Start::Reducible { k: k as i64, hol })
        }
        "snapshot" => {
            let mut parts = rest.splitn(2, ',');
            let spinor = PathBuf::from(parts.next().unwrap_or_default());
            let form = parts.next().map(PathBuf::from);
            Ok(Start::Snapshot { spinor, form })
        }
        _ => Err(Error::Invalid(format!("unknown start kind {kind:?}"))),
    }
}

/// `reference`, `flat:<k>,<hol_x>,<hol_y>` or `holonomy:<fiber>,<hol_x>,<hol_y>`.
pub fn parse_gauge(lat: &Lattice, s: &str) -> Result<GaugeField> {
    if s == "reference" {
        return Ok(lattice::reference_gauge(lat));
    }
    let (kind, rest) = s.split_once(':').ok_or_else(|| Error::Invalid(format!("unknown gauge {s:?}")))?;
    let v = numbers(rest)?;
    if v.len() != 3 {
        return Err(Error::Invalid(format!("gauge {s:?} needs three numbers")));
    }
    match kind {
        "flat" => lattice::flat_connection(lat, v[0] as i64, &v[1..]),
        "holonomy" => Ok(lattice::flat_gauge(lat, v[0], [v[1], v[2]])),
        _ => Err(Error::Invalid(format!("unknown gauge kind {kind:?}"))),
    }
}

fn job_lattice(job: &SolverJob) -> Result<Lattice> {
    job.bundle.validate()?;
    if job.lattice.ell != job.bundle.ell {
        return Err(Error::Invalid(format!("lattice ell {} differs from bundle ell {}", job.lattice.ell, job.bundle.ell)));
    }
    lattice::build_lattice(&LatticeSpec { delta: job.bundle.delta, ..job.lattice })
}

/// Default reference: flat of class `l_n_class` for `ell != 0`, else the
/// constant-curvature connection of the lattice's base degree.
fn default_reference(job: &SolverJob, lat: &Lattice) -> Result<GaugeField> {
    if job.bundle.ell != 0 {
        lattice::flat_connection(lat, job.bundle.l_n_class, &[0.0, 0.0])
    } else {
        Ok(lattice::reference_gauge(lat))
    }
}

fn load_field(path: &Path, lat: &Lattice) -> Result<Snapshot> {
    let (spec, snap) = lattice::load_snapshot(path)?;
    if [spec.n_fiber, spec.n_x, spec.n_y] != lat.n {
        return Err(Error::LatticeMismatch(format!("{} is a {:?} snapshot, job lattice is {:?}", path.display(), spec, lat.n)));
    }
    Ok(snap)
}

/// Context and starting configuration of a job; `seed` overrides a `random:` seed.
pub fn prepare_solver_job(job: &SolverJob, seed: Option<u64>) -> Result<(SwContext, Configuration)> {
    let lat = job_lattice(job)?;
    let delta = job.bundle.delta;
    match parse_start(&job.start)? {
        Start::Random { seed: s } => {
            let g = default_reference(job, &lat)?;
            let ctx = SwContext::new(lat, g, delta)?;
            let c = random_start(&ctx, seed.unwrap_or(s), job.amplitude);
            Ok((ctx, c))
        }
        Start::Reducible { k, hol } => {
            let g = lattice::flat_connection(&lat, k, &hol)?;
            let ctx = SwContext::new(lat, g, delta)?;
            let c = Configuration::reducible(&ctx.lat, delta);
            Ok((ctx, c))
        }
        Start::Snapshot { spinor, form } => {
            let phi = match load_field(&spinor, &lat)? {
                Snapshot::Spinor(f) => f,
                _ => return Err(Error::Invalid(format!("{} is not a spinor snapshot", spinor.display()))),
            };
            let a = match form {
                Some(p) => match load_field(&p, &lat)? {
                    Snapshot::OneForm(a) => a,
                    _ => return Err(Error::Invalid(format!("{} is not a 1-form snapshot", p.display()))),
                },
                None => OneForm::zeros(&lat),
            };
            let g = default_reference(job, &lat)?;
            let ctx = SwContext::new(lat, g, delta)?;
            Ok((ctx, Configuration { phi, a, delta }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub reducible: Option<bool>,
    pub psi_norm: Option<f64>,
    pub functional: Option<f64>,
    pub merit_monotone: Option<bool>,
    pub error: Option<String>,
    pub files: Vec<PathBuf>,
}

/// Runs the job and writes `solution_spinor.snap`, `solution_form.snap`,
/// `history.csv` and `solve.json` to `out`. Solver failures are reported in
/// the summary (and the residual history still written); setup errors are returned.
pub fn run_solver_job(job: &SolverJob, out: &Path, seed: Option<u64>) -> Result<SolveSummary> {
    let (ctx, start) = prepare_solver_job(job, seed)?;
    std::fs::create_dir_all(out)?;
    let spec = ctx.lat.spec;
    let history_path = out.join("history.csv");
    let mut files = vec![history_path.clone()];
    let summary = match sw::find_critical_point(&ctx, &start, &job.params) {
        Ok(o) => {
            let mut f = std::fs::File::create(&history_path)?;
            sw::write_history(&mut f, &o.history)?;
            let sp = out.join("solution_spinor.snap");
            let fp = out.join("solution_form.snap");
            lattice::save_snapshot(&sp, &spec, &Snapshot::Spinor(o.config.phi.clone()))?;
            lattice::save_snapshot(&fp, &spec, &Snapshot::OneForm(o.config.a.clone()))?;
            files.extend([sp, fp]);
            SolveSummary {
                converged: true,
                residual: o.residual,
                iterations: o.iterations,
                reducible: Some(o.reducible),
                psi_norm: Some(o.config.phi.norm(ctx.dv())),
                functional: Some(sw::sw_functional(&ctx, &o.config)?),
                merit_monotone: Some(o.merit_monotone),
                error: None,
                files,
            }
        }
        Err(Error::SolverFailed { residual, history }) => {
            #[derive(Serialize)]
            struct Partial {
                iteration: usize,
                residual: f64,
            }
            let rows: Vec<Partial> = history.iter().enumerate().map(|(i, &r)| Partial { iteration: i, residual: r }).collect();
            write_csv(&history_path, &rows)?;
            SolveSummary {
                converged: false,
                residual,
                iterations: history.len().saturating_sub(1),
                reducible: None,
                psi_norm: None,
                functional: None,
                merit_monotone: None,
                error: Some(format!("solver stopped at residual {residual:e}")),
                files,
            }
        }
        Err(e) => return Err(e),
    };
    let json = out.join("solve.json");
    let mut summary = summary;
    summary.files.push(json.clone());
    std::fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralOperator {
    /// `D_delta` on spinors.
    Dirac,
    /// Kernel-counting operator for `dbar` on the base slice.
    Dbar,
    /// Constrained linearization at the reducible configuration.
    Linearization,
    /// Squared singular values of the first-order linearization at the reducible.
    Gap,
}

fn default_gauge() -> String {
    "reference".into()
}

fn default_request() -> SpectrumRequest {
    SpectrumRequest::smallest_magnitude(6, 1e-8)
}

/// `{lattice, operator, gauge, request}`; `gauge` as in [`parse_gauge`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJob {
    pub lattice: LatticeSpec,
    pub operator: SpectralOperator,
    #[serde(default = "default_gauge")]
    pub gauge: String,
    #[serde(default = "default_request")]
    pub request: SpectrumRequest,
}

pub fn run_spectrum_job(job: &SpectrumJob, seed: Option<u64>) -> Result<SpectrumReport> {
    let mut req = job.request;
    if let Some(s) = seed {
        req.seed = s;
    }
    let delta = job.lattice.delta;
    let spectrum = match job.operator {
        SpectralOperator::Dbar => {
            let lat = lattice::build_base_lattice(job.lattice.n_x, job.lattice.n_y, job.lattice.l_degree)?;
            let g = parse_gauge(&lat, &job.gauge)?;
            let op = spectral::dbar_counting_operator(&lat, &g);
            let s = spectral::low_spectrum(&op, &req)?;
            s
        }
        SpectralOperator::Dirac => {
            let lat = lattice::build_lattice(&job.lattice)?;
            let g = parse_gauge(&lat, &job.gauge)?;
            let op = spectral::dirac_operator(&lat, &g, delta);
            let s = spectral::low_spectrum(&op, &req)?;
            s
        }
        SpectralOperator::Linearization | SpectralOperator::Gap => {
            let lat = lattice::build_lattice(&job.lattice)?;
            let g = parse_gauge(&lat, &job.gauge)?;
            let ctx = SwContext::new(lat, g, delta)?;
            let c = Configuration::reducible(&ctx.lat, delta);
            let opts = LinearizationOptions { orbit_fallback: false, remove_harmonic: true };
            let op = if job.operator == SpectralOperator::Gap {
                sw::gap_operator(&ctx, &c, opts)?
            } else {
                sw::linearization(&ctx, &c, opts)?
            };
            spectral::low_spectrum(&op, &req)?
        }
    };
    Ok(spectrum.report(delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_strings() {
        assert_eq!(parse_start("random:7").unwrap(), Start::Random { seed: 7 });
        assert_eq!(parse_start("reducible:1,0.25,0.5").unwrap(), Start::Reducible { k: 1, hol: [0.25, 0.5] });
        assert_eq!(parse_start("reducible:2").unwrap(), Start::Reducible { k: 2, hol: [0.0, 0.0] });
        assert!(matches!(parse_start("snapshot:a.snap,b.snap").unwrap(), Start::Snapshot { form: Some(_), .. }));
        assert!(parse_start("random").is_err());
        assert!(parse_start("reducible:1.5").is_err());
        assert!(parse_start("warm:1").is_err());
    }

    #[test]
    fn reducible_job_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let job = SolverJob {
            bundle: BundleSpec::new(3, 1, 4.0, 1).unwrap(),
            lattice: LatticeSpec::cube(4, 3, 4.0),
            start: "reducible:1".into(),
            params: SolverParams::default(),
            amplitude: 0.1,
        };
        let s = run_solver_job(&job, dir.path(), None).unwrap();
        assert!(s.converged && s.reducible == Some(true) && s.iterations == 0);
        let again = SolverJob { start: format!("snapshot:{}", dir.path().join("solution_spinor.snap").display()), ..job };
        let (_, c) = prepare_solver_job(&again, None).unwrap();
        assert!(c.phi.data.iter().all(|p| p.norm_sqr() == 0.0));
    }
}
