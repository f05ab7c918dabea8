//! Subcommand implementations.
//!
//! Each command is a thin pipeline over the core crate: strict input
//! loading, one core call, deterministic artifact emission. All file
//! writes go through the atomic writer and no artifact embeds timestamps
//! or absolute paths, so a fixed seed reproduces byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use rbsim_core::clifford::{GateSetGroup, GroupKind};
use rbsim_core::fit::{fit, report_fidelity, DecayModel};
use rbsim_core::protocols::{
    run_correlated_rb, run_interleaved_rb, run_simultaneous_rb, run_standard_rb,
    shadow_collect, Protocol,
};
use rbsim_core::shadow::{shadow_estimate, shadow_theory_model, ProbeOperator};
use rbsim_core::twirl::IrrepDecomposition;

use crate::config::{load_config, GroupName};
use crate::error::{schema, simulation, CliError, Result};
use crate::io::{
    observables_of, parse_decay_csv, parse_records, series_of, sha256_hex, write_decay_csv,
    write_records, atomic_write, DecayRow,
};
use crate::report::{
    correlated_block, decay_rows, fidelity_block, fit_block, interleaved_block, to_toml,
    ReportBundle, RunManifest, ShadowPoint, ShadowReport, SourceInfo, ToolInfo,
};
use crate::svg::render_fit_plot;

/// Runs the configured protocol and writes its artifacts under `out_dir`.
pub fn simulate(config_path: &Path, out_dir: &Path) -> Result<()> {
    let (config, digest) = load_config(config_path)?;
    let rb = config.to_rb_config()?;
    let out = config.output.clone().unwrap_or_default();
    let decay_name = out.decay.clone().unwrap_or_else(|| "decay.csv".into());
    let report_name = out.report.clone().unwrap_or_else(|| "report.toml".into());
    let mut artifacts: Vec<String> = Vec::new();

    match rb.protocol {
        Protocol::Standard => {
            let dataset = run_standard_rb(&rb).map_err(simulation)?;
            write_decay_csv(&out_dir.join(&decay_name), &dataset)?;
            artifacts.push(decay_name);
        }
        Protocol::Simultaneous(_) => {
            let dataset = run_simultaneous_rb(&rb).map_err(simulation)?;
            write_decay_csv(&out_dir.join(&decay_name), &dataset)?;
            artifacts.push(decay_name);
        }
        Protocol::Correlated => {
            let outcome = run_correlated_rb(&rb).map_err(simulation)?;
            write_decay_csv(&out_dir.join(&decay_name), &outcome.dataset)?;
            artifacts.push(decay_name);
            let bundle = ReportBundle {
                tool: ToolInfo::current(),
                source: SourceInfo {
                    seed: Some(rb.seed),
                    input_sha256: digest.clone(),
                },
                decay: decay_rows(&outcome.dataset),
                fits: outcome
                    .fits
                    .iter()
                    .map(|(label, result)| fit_block(label, result))
                    .collect(),
                fidelity: None,
                correlated: Some(correlated_block(&outcome)?),
                interleaved: None,
            };
            atomic_write(&out_dir.join(&report_name), to_toml(&bundle)?.as_bytes())?;
            artifacts.push(report_name);
        }
        Protocol::Interleaved { .. } => {
            let outcome = run_interleaved_rb(&rb).map_err(simulation)?;
            let interleaved_name = out
                .interleaved_decay
                .clone()
                .unwrap_or_else(|| "interleaved.csv".into());
            write_decay_csv(&out_dir.join(&decay_name), &outcome.reference)?;
            artifacts.push(decay_name);
            write_decay_csv(&out_dir.join(&interleaved_name), &outcome.interleaved)?;
            artifacts.push(interleaved_name);
            let d = 1usize << rb.group.n_qubits();
            let fidelity = report_fidelity(&outcome.reference_fit, d, false)
                .ok()
                .map(|r| fidelity_block(&r));
            // Both stages record the same observable, so the echoed rows
            // carry a stage prefix to stay distinguishable in one table.
            let stage_rows = |stage: &str, rows: Vec<DecayRow>| -> Vec<DecayRow> {
                rows.into_iter()
                    .map(|mut row| {
                        row.observable = format!("{stage}:{}", row.observable);
                        row
                    })
                    .collect()
            };
            let mut decay = stage_rows("reference", decay_rows(&outcome.reference));
            decay.extend(stage_rows("interleaved", decay_rows(&outcome.interleaved)));
            let bundle = ReportBundle {
                tool: ToolInfo::current(),
                source: SourceInfo {
                    seed: Some(rb.seed),
                    input_sha256: digest.clone(),
                },
                decay,
                fits: vec![
                    fit_block("reference", &outcome.reference_fit),
                    fit_block("interleaved", &outcome.interleaved_fit),
                ],
                fidelity,
                correlated: None,
                interleaved: Some(interleaved_block(&outcome)),
            };
            atomic_write(&out_dir.join(&report_name), to_toml(&bundle)?.as_bytes())?;
            artifacts.push(report_name);
        }
        Protocol::Shadow => {
            let records = shadow_collect(&rb).map_err(simulation)?;
            let records_name = out.records.clone().unwrap_or_else(|| "records.tsv".into());
            write_records(&out_dir.join(&records_name), &records)?;
            artifacts.push(records_name);
        }
    }

    let manifest = RunManifest {
        protocol: config.protocol.as_str().into(),
        group: config.group.as_str().into(),
        seed: rb.seed,
        config_sha256: digest,
        artifacts: artifacts.clone(),
        tool: ToolInfo::current(),
    };
    let manifest_name = out.manifest.clone().unwrap_or_else(|| "manifest.toml".into());
    atomic_write(&out_dir.join(&manifest_name), to_toml(&manifest)?.as_bytes())?;
    artifacts.push(manifest_name);
    for name in &artifacts {
        println!("wrote {}", out_dir.join(name).display());
    }
    Ok(())
}

/// Inputs of the `fit` command.
pub struct FitArgs {
    pub data: PathBuf,
    pub model: String,
    pub terms: Option<usize>,
    pub observable: Option<String>,
    pub qubits: usize,
    pub rescale_sq: bool,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub log_y: bool,
}

/// Parses the command line model selector.
pub fn parse_model(name: &str, terms: Option<usize>) -> Result<DecayModel> {
    let model = match name {
        "single-exp" => DecayModel::SingleExp,
        "direct-fidelity" => DecayModel::DirectFidelity,
        "multi-exp" => DecayModel::MultiExp {
            terms: terms.unwrap_or(2),
        },
        "power" => DecayModel::Power,
        other => {
            return Err(CliError::Schema(format!(
                "unknown model {other:?}; expected single-exp, direct-fidelity, multi-exp or power"
            )))
        }
    };
    if terms.is_some() && !matches!(model, DecayModel::MultiExp { .. }) {
        return Err(CliError::Schema(
            "--terms applies only to the multi-exp model".into(),
        ));
    }
    Ok(model)
}

fn select_observable(rows: &[DecayRow], requested: Option<&str>) -> Result<String> {
    let labels = observables_of(rows);
    match requested {
        Some(name) => {
            if labels.iter().any(|l| l == name) {
                Ok(name.to_string())
            } else {
                Err(CliError::Schema(format!(
                    "observable {name:?} is not in the data; present: {}",
                    labels.join(", ")
                )))
            }
        }
        None => {
            if labels.iter().any(|l| l == "survival") {
                Ok("survival".into())
            } else if labels.len() == 1 {
                Ok(labels[0].clone())
            } else {
                Err(CliError::Schema(format!(
                    "multiple observables present ({}); pass --observable",
                    labels.join(", ")
                )))
            }
        }
    }
}

/// Fits a decay CSV, prints the report bundle and writes the optional
/// artifacts. Exits through [`CliError::NonConvergence`] when the fit
/// terminates without an identifiable optimum.
pub fn fit_report(args: &FitArgs) -> Result<()> {
    let text = fs::read_to_string(&args.data)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", args.data.display())))?;
    let rows = parse_decay_csv(&text)?;
    let digest = sha256_hex(text.as_bytes());
    let observable = select_observable(&rows, args.observable.as_deref())?;
    let series = series_of(&rows, &observable);
    let model = parse_model(&args.model, args.terms)?;
    if args.qubits == 0 {
        return Err(CliError::Schema("--qubits must be at least 1".into()));
    }
    // Flag conflicts are usage errors regardless of what the data holds,
    // so they are rejected before any fitting runs.
    if args.rescale_sq {
        if args.qubits != 1 {
            return Err(CliError::Schema(
                "--rescale-sq rescales by the one-qubit rotation count and applies \
                 only to one-qubit data"
                    .into(),
            ));
        }
        if !matches!(
            model,
            DecayModel::SingleExp | DecayModel::DirectFidelity
        ) {
            return Err(CliError::Schema(
                "--rescale-sq needs a model with a fidelity interpretation \
                 (single-exp or direct-fidelity)"
                    .into(),
            ));
        }
    }

    let result = fit(model, &series, None).map_err(schema)?;
    if !result.converged {
        return Err(CliError::NonConvergence(format!(
            "fit did not converge after {} iterations",
            result.iterations
        )));
    }
    if result.rank_deficient {
        return Err(CliError::NonConvergence(
            "fit converged to a rank-deficient optimum; the decay rate is not \
             identifiable from these data"
                .into(),
        ));
    }

    let mut bundle = ReportBundle {
        tool: ToolInfo::current(),
        source: SourceInfo {
            seed: None,
            input_sha256: digest,
        },
        decay: rows,
        fits: vec![fit_block(&observable, &result)],
        fidelity: None,
        correlated: None,
        interleaved: None,
    };
    if matches!(model, DecayModel::SingleExp | DecayModel::DirectFidelity) {
        let d = 1usize << args.qubits;
        let fidelity = report_fidelity(&result, d, args.rescale_sq).map_err(schema)?;
        bundle.fidelity = Some(fidelity_block(&fidelity));
    }

    let toml_text = to_toml(&bundle)?;
    print!("{toml_text}");
    if let Some(path) = &args.report {
        atomic_write(path, toml_text.as_bytes())?;
    }
    if let Some(path) = &args.svg {
        let svg = render_fit_plot(&series, &result, &observable, args.log_y)?;
        atomic_write(path, svg.as_bytes())?;
    }
    Ok(())
}

/// Inputs of the `shadow-estimate` command.
pub struct ShadowArgs {
    pub records: PathBuf,
    pub probe: String,
    pub batch_size: usize,
    pub batches: usize,
    pub group: String,
    pub alpha: f64,
    pub config: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// A probe supplied as a TOML file: a square matrix over the normalized
/// Pauli basis with an optional normalization override.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeFileSpec {
    name: String,
    alpha: Option<f64>,
    matrix: Vec<Vec<f64>>,
}

fn resolve_probe(spec: &str, kind: GroupKind, alpha: f64) -> Result<ProbeOperator> {
    if spec == "identity" {
        return Ok(ProbeOperator::identity(kind.n_qubits(), alpha));
    }
    let dec = IrrepDecomposition::for_group(kind).map_err(simulation)?;
    if let Some(j) = dec.subspaces().iter().position(|s| s.label == spec) {
        return Ok(ProbeOperator::subspace_projector(&dec, j, alpha));
    }
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
        let file: ProbeFileSpec = toml::from_str(&text).map_err(schema)?;
        let rows = file.matrix.len();
        let cols = file.matrix.first().map_or(0, |r| r.len());
        if rows == 0 || cols != rows || file.matrix.iter().any(|r| r.len() != cols) {
            return Err(CliError::Schema(format!(
                "probe matrix in {} must be square and nonempty",
                path.display()
            )));
        }
        let matrix = DMatrix::from_fn(rows, cols, |i, j| file.matrix[i][j]);
        return ProbeOperator::new(file.name, matrix, file.alpha.unwrap_or(alpha))
            .map_err(schema);
    }
    let labels: Vec<String> = dec.subspaces().iter().map(|s| s.label.clone()).collect();
    Err(CliError::Schema(format!(
        "unknown probe {spec:?}; expected \"identity\", a subspace label ({}) or a probe file",
        labels.join(", ")
    )))
}

/// Median-of-means estimation over a record file, with the analytic
/// comparison column when a configuration supplies the noise model.
pub fn shadow_estimate_report(args: &ShadowArgs) -> Result<()> {
    let text = fs::read_to_string(&args.records)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", args.records.display())))?;
    let records = parse_records(&text)?;
    let digest = sha256_hex(text.as_bytes());
    let group_name = GroupName::parse(&args.group)?;
    let kind = group_name.kind();
    let group = GateSetGroup::generate(kind).map_err(simulation)?;
    let n = group.n_qubits();
    for (index, record) in records.iter().enumerate() {
        if record.outcome.len() != n {
            return Err(CliError::Schema(format!(
                "record {}: outcome has {} bit(s) for {} qubit(s)",
                index + 1,
                record.outcome.len(),
                n
            )));
        }
    }
    let probe = resolve_probe(&args.probe, kind, args.alpha)?;

    let loaded = match &args.config {
        Some(path) => {
            let (config, _) = load_config(path)?;
            if config.group.kind() != kind {
                return Err(CliError::Schema(format!(
                    "config group {} differs from --group {}",
                    config.group.as_str(),
                    group_name.as_str()
                )));
            }
            Some(config.to_rb_config()?)
        }
        None => None,
    };
    let initial_bits = loaded
        .as_ref()
        .map(|rb| rb.initial_bits.clone())
        .unwrap_or_else(|| vec![false; n]);

    let estimates = shadow_estimate(
        &records,
        &probe,
        &group,
        &initial_bits,
        args.batch_size,
        args.batches,
    )
    .map_err(schema)?;

    let theory = match &loaded {
        Some(rb) => {
            let noise = rb.noise.compile().map_err(simulation)?;
            let dec = IrrepDecomposition::for_group(kind).map_err(simulation)?;
            Some(
                shadow_theory_model(&probe, &noise, &dec, &rb.spam, &rb.initial_bits)
                    .map_err(simulation)?,
            )
        }
        None => None,
    };
    let mut points = Vec::with_capacity(estimates.len());
    for &(m, k_hat) in &estimates {
        let theory_value = match &theory {
            Some(model) => Some(model.k(m).map_err(simulation)?),
            None => None,
        };
        points.push(ShadowPoint {
            m,
            k_hat,
            theory: theory_value,
        });
    }

    let fit_points: Vec<(f64, f64)> = estimates.iter().map(|&(m, k)| (m as f64, k)).collect();
    let fit_result = if fit_points.len() > DecayModel::Power.param_count() {
        match fit(DecayModel::Power, &fit_points, None) {
            Ok(result) => Some(fit_block("k", &result)),
            Err(err) => {
                eprintln!("note: decay fit skipped: {err}");
                None
            }
        }
    } else {
        None
    };

    let report = ShadowReport {
        probe: probe.name.clone(),
        alpha: probe.alpha,
        batch_size: args.batch_size,
        batches: args.batches,
        tool: ToolInfo::current(),
        source: SourceInfo {
            seed: None,
            input_sha256: digest,
        },
        estimates: points,
        fit: fit_result,
    };
    let toml_text = to_toml(&report)?;
    print!("{toml_text}");
    if let Some(path) = &args.report {
        atomic_write(path, toml_text.as_bytes())?;
    }
    Ok(())
}
