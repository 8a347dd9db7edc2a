use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use timoshenko_core::beam_model::{parse_config, Config, Grid, SecondOrderState};
use timoshenko_core::modal_analysis::{quartic_coefficients, quartic_roots, unique_continuation_check, ModalProblem};
use timoshenko_core::riemann_transform::{forward_transform, inverse_transform, project_admissible, RiemannState};
use timoshenko_core::semigroup_sim::{
    conjugacy_test, decay_report, simulate, DecayReport, Formulation, SimulationRun, SimulationSetup,
};
use timoshenko_core::spectral_tools::{
    build_operator, discrete_spectrum, essential_accumulation_diagnostic, growth_bound_estimate, OperatorKind,
};
use timoshenko_core::transport_operator::{analytic_spectrum, resolvent_residual};
use timoshenko_core::Error;

use crate::args::{Cli, Command, Common, Format, FormulationArg, Kind, SimArgs};
use crate::output::{emit, json_text, num, object, Csv};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { common, kind, n } => spectrum(&common, kind, n),
        Command::AnalyticSpectrum { common, kmax } => analytic(&common, kmax),
        Command::Simulate { common, sim } => simulate_cmd(&common, &sim),
        Command::Decay { common, sim, sweep } => decay(&common, &sim, &sweep),
        Command::Roundtrip {
            common,
            trials,
            seed,
            n,
        } => roundtrip(&common, trials, seed, n),
        Command::UcCheck {
            common,
            omega,
            interval,
            samples,
        } => uc_check(&common, omega, interval[0], interval[1], samples),
        Command::ResolventCheck {
            common,
            lambda_re,
            lambda_im,
            n,
            data,
        } => resolvent(&common, Complex64::new(lambda_re, lambda_im), &n, &data),
        Command::GrowthBound { common, kind, n, times } => growth(&common, kind, n, &times),
        Command::Accumulation { common, n } => accumulation(&common, &n),
        Command::Conjugacy {
            common,
            n,
            t_final,
            mode,
        } => conjugacy(&common, &n, t_final, mode),
    }
}

/// Reads the configuration file (if any) and applies `--set` overrides.
fn load(common: &Common) -> Result<Config> {
    let (text, base) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            (text, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (String::new(), PathBuf::new()),
    };
    let merged = apply_overrides(&text, &common.overrides)?;
    Ok(parse_config(&merged, &base)?)
}

fn apply_overrides(text: &str, overrides: &[String]) -> Result<String> {
    let mut keys = Vec::with_capacity(overrides.len());
    for entry in overrides {
        match entry.split_once('=') {
            Some((key, _)) if !key.trim().is_empty() => keys.push(key.trim().to_string()),
            _ => {
                return Err(Error::InvalidParameter {
                    name: "--set".into(),
                    reason: format!("expected KEY=VALUE, got `{entry}`"),
                }
                .into())
            }
        }
    }
    let mut out = String::new();
    for line in text.lines() {
        let content = line.split('#').next().unwrap_or("");
        let overridden = content
            .split_once('=')
            .is_some_and(|(key, _)| keys.iter().any(|k| k == key.trim()));
        if !overridden {
            out.push_str(line);
            out.push('\n');
        }
    }
    for entry in overrides {
        out.push_str(entry);
        out.push('\n');
    }
    Ok(out)
}

fn cells(flag: Option<usize>, config: &Config, default: usize) -> usize {
    flag.or(config.options.n).unwrap_or(default)
}

fn operator_kind(kind: Kind) -> OperatorKind {
    match kind {
        Kind::L => OperatorKind::L,
        Kind::L1 => OperatorKind::L1,
        Kind::S1c => OperatorKind::S1C,
        Kind::S1c0 => OperatorKind::S1C0,
    }
}

/// Writes the result and, when writing to a file, a `.meta.json` sidecar
/// describing the run.
fn finish(common: &Common, command: &str, config: &Config, text: String) -> Result<()> {
    emit(&text, common.output.as_deref())?;
    if let Some(path) = &common.output {
        let mut sidecar = path.clone().into_os_string();
        sidecar.push(".meta.json");
        let p = &config.params;
        let meta = object([
            ("command", Value::from(command)),
            ("version", Value::from(env!("CARGO_PKG_VERSION"))),
            (
                "params",
                object([
                    ("rho", num(p.rho)),
                    ("K", num(p.k)),
                    ("I_rho", num(p.i_rho)),
                    ("EI", num(p.ei)),
                    ("l", num(p.l)),
                ]),
            ),
            ("damping", Value::from(format!("{:?}", config.damping))),
            ("overrides", Value::from(common.overrides.clone())),
        ]);
        emit(&json_text(&meta), Some(Path::new(&sidecar)))?;
    }
    Ok(())
}

fn spectrum(common: &Common, kind: Kind, n: Option<usize>) -> Result<()> {
    let config = load(common)?;
    let n = cells(n, &config, 100);
    let kind = operator_kind(kind);
    let op = build_operator(kind, &config.params, &config.damping, n)?;
    let report = discrete_spectrum(&op)?;
    let mut eigs = report.eigenvalues.clone();
    eigs.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["re", "im", "kind"]);
            for z in &eigs {
                csv.row(&[z.re.into(), z.im.into(), kind.as_str().into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("kind", Value::from(kind.as_str())),
            ("n", Value::from(n)),
            ("max_real_part", num(report.max_real_part)),
            ("min_abs_real_part", num(report.min_abs_real_part)),
            ("max_residual", num(report.max_residual)),
            ("conjugate_pairs_ok", Value::from(report.conjugate_pairs_ok)),
            (
                "eigenvalues",
                Value::Array(eigs.iter().map(|z| Value::Array(vec![num(z.re), num(z.im)])).collect()),
            ),
        ])),
    };
    finish(common, "spectrum", &config, text)
}

fn analytic(common: &Common, kmax: usize) -> Result<()> {
    let config = load(common)?;
    let spectrum = analytic_spectrum(&config.params, &config.damping, kmax)?;
    let rows: Vec<(&str, i64, Complex64)> = spectrum
        .branch1
        .iter()
        .map(|&(k, z)| ("1", k, z))
        .chain(spectrum.branch2.iter().map(|&(k, z)| ("2", k, z)))
        .collect();
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["branch", "k", "re", "im"]);
            for (branch, k, z) in &rows {
                csv.row(&[(*branch).into(), (*k).into(), z.re.into(), z.im.into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("spectral_bound", num(spectrum.spectral_bound)),
            (
                "eigenvalues",
                Value::Array(
                    rows.iter()
                        .map(|(branch, k, z)| {
                            object([
                                ("branch", Value::from(branch.parse::<u8>().expect("branch label"))),
                                ("k", Value::from(*k)),
                                ("re", num(z.re)),
                                ("im", num(z.im)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])),
    };
    finish(common, "analytic-spectrum", &config, text)
}

/// Initial state from `mode:K` or `file:PATH`.
fn initial_state(init: &str, config: &Config, n_flag: Option<usize>) -> Result<SecondOrderState> {
    if let Some(k) = init.strip_prefix("mode:") {
        let k: usize = k
            .parse()
            .map_err(|_| invalid_init(format!("`{init}`: mode index must be a positive integer")))?;
        if k == 0 {
            return Err(invalid_init("mode index must be >= 1".to_string()).into());
        }
        let grid = Grid::new(cells(n_flag, config, 200), config.params.l)?;
        Ok(SecondOrderState::mode(&grid, k))
    } else if let Some(path) = init.strip_prefix("file:") {
        let state = read_state(Path::new(path))?;
        if let Some(n) = n_flag {
            if n != state.u.len() - 1 {
                return Err(Error::Dimension(format!("--n {n} but {path} has {} cells", state.u.len() - 1)).into());
            }
        }
        Ok(state)
    } else {
        Err(invalid_init(format!("`{init}`: expected mode:K or file:PATH")).into())
    }
}

fn invalid_init(reason: String) -> Error {
    Error::InvalidParameter {
        name: "--init".into(),
        reason,
    }
}

/// Reads a nodal state from a CSV file with header `x,u,u2,v,v2`.
fn read_state(path: &Path) -> Result<SecondOrderState> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    if header != ["x", "u", "u2", "v", "v2"] {
        return Err(Error::Parse {
            line: 1,
            reason: "expected header x,u,u2,v,v2".into(),
        }
        .into());
    }
    let mut columns: [Vec<f64>; 4] = Default::default();
    for (index, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: index + 2,
                reason: format!("expected 5 fields, got {}", fields.len()),
            }
            .into());
        }
        for (column, field) in columns.iter_mut().zip(&fields[1..]) {
            column.push(field.parse().map_err(|_| Error::Parse {
                line: index + 2,
                reason: format!("`{field}` is not a number"),
            })?);
        }
    }
    let [u, u2, v, v2] = columns;
    if u.len() < 3 {
        return Err(Error::Dimension(format!("{} has fewer than 3 nodes", path.display())).into());
    }
    Ok(SecondOrderState { u, u2, v, v2 })
}

fn formulation(arg: FormulationArg) -> Formulation {
    match arg {
        FormulationArg::SecondOrder => Formulation::SecondOrder,
        FormulationArg::SecondOrderL1 => Formulation::SecondOrderL1,
        FormulationArg::Riemann => Formulation::Riemann,
    }
}

fn run_simulation(config: &Config, sim: &SimArgs, initial: &SecondOrderState) -> Result<SimulationRun> {
    let t_final = sim
        .t_final
        .or(config.options.t_final)
        .ok_or_else(|| Error::InvalidParameter {
            name: "t_final".into(),
            reason: "give --t-final or t_final in the config".into(),
        })?;
    let n = initial.cells()?;
    let setup = SimulationSetup {
        params: config.params,
        damping: config.damping.clone(),
        grid: Grid::new(n, config.params.l)?,
        dt: sim.dt.or(config.options.dt),
        t_final,
        formulation: formulation(sim.formulation),
        snapshot_times: sim.snapshot_times.clone(),
    };
    Ok(simulate(&setup, initial)?)
}

fn energy_csv(run: &SimulationRun) -> String {
    let mut csv = Csv::new(&["t", "E"]);
    for &(t, e) in &run.energy_series {
        csv.row(&[t.into(), e.into()]);
    }
    csv.into_string()
}

fn summary(report: &DecayReport) -> Value {
    object([
        ("E0", num(report.e0)),
        ("ET", num(report.e_final)),
        ("t_half", report.t_half.map_or(Value::Null, num)),
        ("monotone", Value::from(report.monotone)),
    ])
}

fn write_snapshots(run: &SimulationRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut index = Csv::new(&["index", "t", "file"]);
    let x = run.grid.nodes();
    for (i, (t, snapshot)) in run.trajectory.iter().enumerate() {
        let y = snapshot.to_second_order(&run.params)?;
        let mut csv = Csv::new(&["x", "u", "u2", "v", "v2"]);
        for (j, &xj) in x.iter().enumerate() {
            csv.row(&[xj.into(), y.u[j].into(), y.u2[j].into(), y.v[j].into(), y.v2[j].into()]);
        }
        let name = format!("snapshot_{i:03}.csv");
        emit(&csv.into_string(), Some(&dir.join(&name)))?;
        index.row(&[i.into(), (*t).into(), name.as_str().into()]);
    }
    emit(&index.into_string(), Some(&dir.join("snapshots.csv")))
}

fn simulate_cmd(common: &Common, sim: &SimArgs) -> Result<()> {
    let config = load(common)?;
    let initial = initial_state(&sim.init, &config, sim.n)?;
    let run = run_simulation(&config, sim, &initial)?;
    if let Some(dir) = &sim.snapshot_dir {
        write_snapshots(&run, dir)?;
    }
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => energy_csv(&run),
        Format::Json => json_text(&summary(&decay_report(&run))),
    };
    finish(common, "simulate", &config, text)
}

fn decay(common: &Common, sim: &SimArgs, sweep: &[usize]) -> Result<()> {
    let config = load(common)?;
    if sweep.is_empty() {
        let initial = initial_state(&sim.init, &config, sim.n)?;
        let run = run_simulation(&config, sim, &initial)?;
        if let Some(dir) = &sim.snapshot_dir {
            write_snapshots(&run, dir)?;
        }
        let text = match common.format.unwrap_or(Format::Json) {
            Format::Csv => energy_csv(&run),
            Format::Json => json_text(&summary(&decay_report(&run))),
        };
        return finish(common, "decay", &config, text);
    }

    let reports: Vec<Result<DecayReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = sweep
            .iter()
            .map(|&k| {
                let config = &config;
                s.spawn(move || {
                    let initial = initial_state(&format!("mode:{k}"), config, sim.n)?;
                    Ok(decay_report(&run_simulation(config, sim, &initial)?))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("decay worker panicked"))
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["k", "E0", "ET", "t_half", "monotone"]);
            for (&k, r) in sweep.iter().zip(&reports) {
                csv.row(&[
                    k.into(),
                    r.e0.into(),
                    r.e_final.into(),
                    r.t_half.unwrap_or(f64::INFINITY).into(),
                    r.monotone.into(),
                ]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&Value::Array(
            sweep
                .iter()
                .zip(&reports)
                .map(|(&k, r)| {
                    let mut entry = object([("k", Value::from(k))]);
                    if let (Value::Object(map), Value::Object(rest)) = (&mut entry, summary(r)) {
                        map.extend(rest);
                    }
                    entry
                })
                .collect(),
        )),
    };
    finish(common, "decay", &config, text)
}

fn roundtrip(common: &Common, trials: usize, seed: u64, n: Option<usize>) -> Result<()> {
    let config = load(common)?;
    let n = cells(n, &config, 100);
    let params = &config.params;
    Grid::new(n, params.l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inverse_forward = 0.0f64;
    let mut forward_inverse = 0.0f64;
    for _ in 0..trials {
        let mut y = SecondOrderState::zeros(n);
        for f in [&mut y.u, &mut y.u2, &mut y.v, &mut y.v2] {
            for value in &mut f[1..n] {
                *value = rng.gen_range(-1.0..1.0);
            }
        }
        let back = inverse_transform(&forward_transform(&y, params)?, params)?;
        let scale = [&y.u, &y.u2, &y.v, &y.v2]
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        inverse_forward = inverse_forward.max(back.max_abs_diff(&y) / scale);

        let raw: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = project_admissible(&RiemannState::from_slice(&raw)?, params.l)?;
        let again = forward_transform(&inverse_transform(&w, params)?, params)?;
        let scale = w.to_vec().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        forward_inverse = forward_inverse.max(again.max_abs_diff(&w) / scale);
    }
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["trials", "n", "inverse_forward", "forward_inverse"]);
            csv.row(&[trials.into(), n.into(), inverse_forward.into(), forward_inverse.into()]);
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("trials", Value::from(trials)),
            ("n", Value::from(n)),
            ("inverse_forward", num(inverse_forward)),
            ("forward_inverse", num(forward_inverse)),
        ])),
    };
    finish(common, "roundtrip", &config, text)
}

fn uc_check(common: &Common, omega: f64, b0: f64, b1: f64, samples: usize) -> Result<()> {
    let config = load(common)?;
    if b1 > config.params.l {
        return Err(Error::InvalidParameter {
            name: "interval".into(),
            reason: format!("b1 = {b1} exceeds l = {}", config.params.l),
        }
        .into());
    }
    let problem = ModalProblem::new(config.params, config.damping.clone(), omega)?;
    let (a, g, b) = quartic_coefficients(&problem)?;
    let q = quartic_roots(a, g, b)?;
    let verdict = unique_continuation_check(&q, b0, b1, samples)?;
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["rank_ok", "sigma_ratio", "regime", "Xminus", "Xplus"]);
            csv.row(&[
                verdict.rank_ok.into(),
                verdict.smallest_singular_ratio.into(),
                q.regime.as_str().into(),
                q.x_minus.into(),
                q.x_plus.into(),
            ]);
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("rank_ok", Value::from(verdict.rank_ok)),
            ("sigma_ratio", num(verdict.smallest_singular_ratio)),
            ("regime", Value::from(q.regime.as_str())),
            ("Xminus", num(q.x_minus)),
            ("Xplus", num(q.x_plus)),
        ])),
    };
    finish(common, "uc-check", &config, text)
}

fn resolvent(common: &Common, lambda: Complex64, n_list: &[usize], data: &[f64]) -> Result<()> {
    let config = load(common)?;
    let &[p, phi_hat, q, psi] = data else {
        bail!(Error::InvalidParameter {
            name: "--data".into(),
            reason: format!("expected 4 values, got {}", data.len()),
        });
    };
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut z = RiemannState::zeros(n);
        z.p.fill(p);
        z.phi_hat.fill(phi_hat);
        z.q.fill(q);
        z.psi.fill(psi);
        let residual = resolvent_residual(lambda, &z, &config.params, &config.damping)?;
        rows.push((n, config.params.l / n as f64, residual));
    }
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["n", "h", "residual"]);
            for &(n, h, r) in &rows {
                csv.row(&[n.into(), h.into(), r.into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("lambda", object([("re", num(lambda.re)), ("im", num(lambda.im))])),
            (
                "rows",
                Value::Array(
                    rows.iter()
                        .map(|&(n, h, r)| object([("n", Value::from(n)), ("h", num(h)), ("residual", num(r))]))
                        .collect(),
                ),
            ),
        ])),
    };
    finish(common, "resolvent-check", &config, text)
}

fn growth(common: &Common, kind: Kind, n: Option<usize>, times: &[f64]) -> Result<()> {
    let config = load(common)?;
    let n = cells(n, &config, 50);
    let op = build_operator(operator_kind(kind), &config.params, &config.damping, n)?;
    let estimate = growth_bound_estimate(&op, times)?;
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(&["t", "log_norm_over_t"]);
            for &(t, rate) in &estimate.samples {
                csv.row(&[t.into(), rate.into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&object([
            ("estimate", num(estimate.estimate)),
            ("max_real_part", num(estimate.max_real_part)),
        ])),
    };
    finish(common, "growth-bound", &config, text)
}

fn accumulation(common: &Common, n_list: &[usize]) -> Result<()> {
    let config = load(common)?;
    let rows = essential_accumulation_diagnostic(&config.params, &config.damping, n_list)?;
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["n", "line", "max_distance"]);
            for r in &rows {
                csv.row(&[r.n.into(), r.line.into(), r.max_distance.into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&Value::Array(
            rows.iter()
                .map(|r| {
                    object([
                        ("n", Value::from(r.n)),
                        ("line", num(r.line)),
                        ("max_distance", num(r.max_distance)),
                        ("count", Value::from(r.count)),
                    ])
                })
                .collect(),
        )),
    };
    finish(common, "accumulation", &config, text)
}

fn conjugacy(common: &Common, n_list: &[usize], t_final: f64, mode: usize) -> Result<()> {
    let config = load(common)?;
    if mode == 0 {
        bail!(invalid_init("mode index must be >= 1".to_string()));
    }
    let results: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = n_list
            .iter()
            .map(|&n| {
                let config = &config;
                s.spawn(move || {
                    let grid = Grid::new(n, config.params.l)?;
                    let y0 = SecondOrderState::mode(&grid, mode);
                    Ok(conjugacy_test(&y0, &config.params, &config.damping, t_final)?)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("conjugacy worker panicked"))
            .collect()
    });
    let d = results.into_iter().collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    let text = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&["n", "h", "discrepancy"]);
            for (&n, &di) in n_list.iter().zip(&d) {
                csv.row(&[n.into(), (config.params.l / n as f64).into(), di.into()]);
            }
            csv.into_string()
        }
        Format::Json => json_text(&object([
            (
                "rows",
                Value::Array(
                    n_list
                        .iter()
                        .zip(&d)
                        .map(|(&n, &di)| object([("n", Value::from(n)), ("discrepancy", num(di))]))
                        .collect(),
                ),
            ),
            ("ratios", Value::Array(ratios.iter().map(|&r| num(r)).collect())),
        ])),
    };
    finish(common, "conjugacy", &config, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_existing_keys() {
        let merged = apply_overrides("rho=1\nEI=1 # bending\nl=2\n", &["EI=4".into()]).unwrap();
        assert_eq!(merged, "rho=1\nl=2\nEI=4\n");
    }

    #[test]
    fn malformed_override_is_rejected() {
        let err = apply_overrides("", &["EI".into()]).unwrap_err();
        assert!(err.downcast_ref::<Error>().is_some());
    }
}
