use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use dirac_numerov::coefficients::coefficients_for;
use dirac_numerov::diagnostics::d3_order_report;
use dirac_numerov::domain::{NoTurningPoint, NotFoundReason, ScanValue};
use dirac_numerov::oracle::{analytic_energy, analytic_ground_wavefunction_d3, hyp1f1};
use dirac_numerov::parallel::map_ordered;
use dirac_numerov::solver::{classify_match_point, eigenfunction, scan_mismatch};
use dirac_numerov::{solve_ground_state, Ansatz, EigenResult, PhysicalConfig, Scheme, SolverSettings};

use crate::args::{Command, EtaChoice, Format, OutputArgs, ProblemArgs, Quantity, SettingsArgs};
use crate::config::ConfigFile;
use crate::csv::{Cell, CsvTable};
use crate::error::{CliError, CliResult};
use crate::manifest::{ConfigEcho, ResultEntry, RunManifest};

/// Printed analytic column of the 1/r table: (D, E/M, epsilon in eV).
pub const TABLE1_ANALYTIC: [(u32, f64, f64); 7] = [
    (3, 0.999973373968532, -13.606),
    (4, 0.999988166295761, -6.047),
    (5, 0.999993343558597, -3.401),
    (6, 0.999995739882606, -2.177),
    (7, 0.999997041587069, -1.512),
    (8, 0.999997826472985, -1.111),
    (9, 0.999998335893803, -0.850),
];

/// Runs one subcommand and returns its exit code.
pub fn run(command: &Command, file: &ConfigFile) -> CliResult<u8> {
    match command {
        Command::Table1 { settings, output } => table1(&resolve_settings(settings, file)?, output, file),
        Command::Solve {
            problem,
            settings,
            output,
        } => {
            let config = resolve_problem(problem, file, None)?;
            solve(config, &resolve_settings(settings, file)?, output, file)
        }
        Command::Scan {
            d_min,
            d_max,
            problem,
            settings,
            output,
        } => {
            let lo = file.pick(*d_min, "d-min")?.unwrap_or(3);
            let hi = file.pick(*d_max, "d-max")?.unwrap_or(9);
            if lo > hi {
                return Err(CliError::Config(format!("empty dimension range {lo}..={hi}")));
            }
            let configs = (lo..=hi)
                .map(|d| resolve_problem(problem, file, Some(d)))
                .collect::<CliResult<Vec<_>>>()?;
            scan(&configs, &resolve_settings(settings, file)?, output, file)
        }
        Command::Profile {
            quantity,
            eta,
            stride,
            problem,
            settings,
            output,
        } => {
            let quantity = file
                .pick(*quantity, "quantity")?
                .ok_or_else(|| CliError::Config("--quantity is required".into()))?;
            let eta = file.pick(*eta, "eta")?.unwrap_or(EtaChoice::Ground);
            let stride = file.pick(*stride, "stride")?.unwrap_or(1);
            if stride == 0 {
                return Err(CliError::Config("--stride must be at least 1".into()));
            }
            let config = resolve_problem(problem, file, None)?;
            profile(config, &resolve_settings(settings, file)?, quantity, eta, stride, output, file)
        }
        Command::Selftest => selftest(),
    }
}

/// Thread count: environment, then flag, then file. `None` leaves the
/// pool at its default size.
pub fn resolve_threads(flag: Option<usize>, file: &ConfigFile, env: Option<&str>) -> CliResult<Option<usize>> {
    let threads = match env.filter(|s| !s.trim().is_empty()) {
        Some(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Config(format!("DIRAC_NUMEROV_THREADS = {v:?}: {e}")))?,
        ),
        None => file.pick(flag, "threads")?,
    };
    if threads == Some(0) {
        return Err(CliError::Config("thread count must be at least 1".into()));
    }
    Ok(threads)
}

pub fn resolve_problem(args: &ProblemArgs, file: &ConfigFile, dimension: Option<u32>) -> CliResult<PhysicalConfig> {
    let dimension = match dimension {
        Some(d) => d,
        None => file
            .pick(args.dimension, "dimension")?
            .ok_or_else(|| CliError::Config("--dimension is required".into()))?,
    };
    let ell = file.pick(args.ell, "ell")?.unwrap_or(0);
    let ansatz: Ansatz = file.pick(args.ansatz, "ansatz")?.map_or(Ansatz::CoulombOneOverR, Into::into);
    let config = PhysicalConfig::new(dimension, ell, ansatz)?;
    Ok(match file.pick(args.k_sign, "k-sign")? {
        Some(k) => config.with_k_sign(k.into()),
        None => config,
    })
}

pub fn resolve_settings(args: &SettingsArgs, file: &ConfigFile) -> CliResult<SolverSettings> {
    let mut s = SolverSettings::default();
    if let Some(v) = file.pick(args.eta_min, "eta-min")? {
        s.eta_window.0 = v;
    }
    if let Some(v) = file.pick(args.eta_max, "eta-max")? {
        s.eta_window.1 = v;
    }
    if let Some(v) = file.pick(args.scan_points, "scan-points")? {
        s.scan_points = v;
    }
    if let Some(v) = file.pick(args.root_tol, "root-tol")? {
        s.root_tol = v;
    }
    if let Some(v) = file.pick(args.mismatch_tol, "mismatch-tol")? {
        s.mismatch_tol = v;
    }
    if let Some(v) = file.pick(args.grid_a, "grid-a")? {
        s.grid.rho_min = v;
    }
    if let Some(v) = file.pick(args.grid_b, "grid-b")? {
        s.grid.rho_max_floor = v;
        s.grid.rho_max_cap = v;
    }
    if let Some(v) = file.pick(args.grid_delta, "grid-delta")? {
        s.grid.max_step = v;
    }
    if let Some(v) = file.pick(args.scheme, "scheme")? {
        s.scheme = v.into();
    }
    s.validate()?;
    Ok(s)
}

struct Sink {
    path: Option<PathBuf>,
    format: Option<Format>,
}

impl Sink {
    fn resolve(args: &OutputArgs, file: &ConfigFile) -> CliResult<Self> {
        Ok(Self {
            path: file.pick(args.output.clone(), "output")?,
            format: file.pick(args.format, "format")?,
        })
    }

    fn write(&self, text: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => std::fs::write(p, text)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

fn csv_string(table: &CsvTable) -> String {
    let mut buf = Vec::new();
    table.write_to(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn millis(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn ansatz_label(a: Ansatz) -> &'static str {
    match a {
        Ansatz::CoulombOneOverR => "1",
        Ansatz::CoulombGeneralized => "2",
    }
}

fn reason_label(r: &NotFoundReason) -> &'static str {
    match r {
        NotFoundReason::NoTurningPoint => "no_turning_point",
        NotFoundReason::NoSignChange => "no_sign_change",
        NotFoundReason::NoAcceptedRoot { .. } => "no_accepted_root",
    }
}

fn cause_label(c: &NoTurningPoint) -> &'static str {
    match c {
        NoTurningPoint::NoSignChange => "no_sign_change",
        NoTurningPoint::OpenAtOuterEdge { .. } => "open_at_outer_edge",
        NoTurningPoint::SingularCore { .. } => "singular_core",
        NoTurningPoint::NonFiniteCoefficient { .. } => "non_finite_coefficient",
    }
}

fn failed_trials(r: &EigenResult) -> usize {
    r.scan_trace
        .iter()
        .filter(|s| matches!(s.value, ScanValue::Failed { .. }))
        .count()
}

/// 0 found, 3 certified absent, 2 when absence rests on failed trials.
fn verdict_code(r: &EigenResult) -> u8 {
    if r.found {
        0
    } else if failed_trials(r) > 0 {
        2
    } else {
        3
    }
}

fn describe(config: &PhysicalConfig, r: &EigenResult) -> String {
    let head = format!("D={} l={} ansatz {}", config.dimension, config.ell, ansatz_label(config.ansatz));
    match (r.eta_star, r.epsilon_ev) {
        (Some(eta), Some(eps)) => format!("{head}: E/M = {eta:.15}, epsilon = {eps:.6} eV"),
        _ => {
            let failed = failed_trials(r);
            let reason = r.reason.as_ref().map_or("unknown", reason_label);
            if failed > 0 {
                format!("{head}: not found ({reason}); {failed} trials failed numerically")
            } else {
                format!("{head}: no bound state ({reason})")
            }
        }
    }
}

fn opt_num(x: Option<f64>) -> Cell {
    x.map_or(Cell::text(""), Cell::Num)
}

fn echo_metadata(table: &mut CsvTable, command: &str, echo: &ConfigEcho) {
    table
        .meta("tool", format!("dirac-numerov {}", env!("CARGO_PKG_VERSION")))
        .meta("command", command)
        .meta("physical", json(&echo.physical))
        .meta("settings", json(&echo.settings));
}

fn results_table(command: &str, echo: &ConfigEcho, entries: &[ResultEntry]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "dimension",
        "found",
        "eta_star",
        "epsilon_ev",
        "match_rho",
        "mismatch_residual",
        "brackets",
        "reason",
        "wall_time_ms",
    ]);
    echo_metadata(&mut t, command, echo);
    for e in entries {
        let row = match (&e.result, &e.error) {
            (Some(r), _) => vec![
                Cell::Int(e.dimension.into()),
                Cell::text(r.found.to_string()),
                opt_num(r.eta_star),
                opt_num(r.epsilon_ev),
                opt_num(r.match_rho),
                opt_num(r.mismatch_residual),
                Cell::Int(r.brackets as i64),
                Cell::text(r.reason.as_ref().map_or("", reason_label)),
                Cell::Int(e.wall_time_ms as i64),
            ],
            (None, err) => vec![
                Cell::Int(e.dimension.into()),
                Cell::text("false"),
                Cell::text(""),
                Cell::text(""),
                Cell::text(""),
                Cell::text(""),
                Cell::Int(0),
                Cell::text(format!("error: {}", err.as_deref().unwrap_or(""))),
                Cell::Int(e.wall_time_ms as i64),
            ],
        };
        t.rows.push(row);
    }
    t
}

fn emit_results(
    command: &str,
    echo: ConfigEcho,
    entries: Vec<ResultEntry>,
    sink: &Sink,
) -> CliResult<()> {
    let text = match sink.format.unwrap_or(Format::Json) {
        Format::Json => RunManifest::new(command, echo, entries).to_json()? + "\n",
        Format::Csv => csv_string(&results_table(command, &echo, &entries)),
    };
    sink.write(&text)
}

fn solve(config: PhysicalConfig, settings: &SolverSettings, output: &OutputArgs, file: &ConfigFile) -> CliResult<u8> {
    let sink = Sink::resolve(output, file)?;
    let start = Instant::now();
    let result = solve_ground_state(&config, settings)?;
    let wall_time_ms = millis(start);
    eprintln!("{}", describe(&config, &result));
    let code = verdict_code(&result);
    let entry = ResultEntry {
        dimension: config.dimension,
        result: Some(result),
        error: None,
        wall_time_ms,
    };
    let echo = ConfigEcho {
        physical: vec![config],
        settings: *settings,
    };
    emit_results("solve", echo, vec![entry], &sink)?;
    Ok(code)
}

fn timed_solves(configs: &[PhysicalConfig], settings: &SolverSettings) -> Vec<ResultEntry> {
    map_ordered(settings.execution, configs, |c| {
        let start = Instant::now();
        let r = solve_ground_state(c, settings);
        let wall_time_ms = millis(start);
        match r {
            Ok(r) => ResultEntry {
                dimension: c.dimension,
                result: Some(r),
                error: None,
                wall_time_ms,
            },
            Err(e) => ResultEntry {
                dimension: c.dimension,
                result: None,
                error: Some(e.to_string()),
                wall_time_ms,
            },
        }
    })
}

fn scan(configs: &[PhysicalConfig], settings: &SolverSettings, output: &OutputArgs, file: &ConfigFile) -> CliResult<u8> {
    let sink = Sink::resolve(output, file)?;
    let entries = timed_solves(configs, settings);
    let mut code = 0;
    for (c, e) in configs.iter().zip(&entries) {
        match (&e.result, &e.error) {
            (Some(r), _) => {
                eprintln!("{}", describe(c, r));
                code = code.max(verdict_code(r));
            }
            (None, err) => {
                eprintln!("D={}: error: {}", c.dimension, err.as_deref().unwrap_or(""));
                code = 2;
            }
        }
    }
    // 2 outranks 3: a failure anywhere means the scan proves nothing.
    let code = if entries.iter().any(|e| e.error.is_some() || e.result.as_ref().is_some_and(|r| verdict_code(r) == 2)) {
        2
    } else {
        code
    };
    let echo = ConfigEcho {
        physical: configs.to_vec(),
        settings: *settings,
    };
    emit_results("scan", echo, entries, &sink)?;
    Ok(code)
}

struct Table1Row {
    dimension: u32,
    eta_analytic: f64,
    eta_numeric: Option<f64>,
    eps_analytic: f64,
    eps_numeric: Option<f64>,
    failure: Option<String>,
}

fn table1(settings: &SolverSettings, output: &OutputArgs, file: &ConfigFile) -> CliResult<u8> {
    let sink = Sink::resolve(output, file)?;
    let configs = TABLE1_ANALYTIC
        .iter()
        .map(|&(d, _, _)| PhysicalConfig::new(d, 0, Ansatz::CoulombOneOverR))
        .collect::<Result<Vec<_>, _>>()?;
    let entries = timed_solves(&configs, settings);
    let mut rows = Vec::new();
    for (c, e) in configs.iter().zip(&entries) {
        let level = analytic_energy(c, 0)?;
        let eps_analytic = level.epsilon_ev(c.mass_ev);
        let r = e.result.as_ref();
        let eta_numeric = r.and_then(|r| r.eta_star);
        let eps_numeric = r.and_then(|r| r.epsilon_ev);
        let failure = match (eta_numeric, eps_numeric) {
            (Some(eta), Some(eps)) => {
                let d_eta = (eta - level.energy_ratio).abs();
                let d_eps = ((eps - eps_analytic) / eps_analytic).abs();
                if d_eta > 5e-8 {
                    Some(format!("|dE/M| = {d_eta:.2e} exceeds 5e-8"))
                } else if d_eps > 0.01 {
                    Some(format!("epsilon off by {:.3}%", 100.0 * d_eps))
                } else {
                    None
                }
            }
            _ => Some(match (r, &e.error) {
                (Some(r), _) => describe(c, r),
                (None, err) => format!("error: {}", err.as_deref().unwrap_or("")),
            }),
        };
        rows.push(Table1Row {
            dimension: c.dimension,
            eta_analytic: level.energy_ratio,
            eta_numeric,
            eps_analytic,
            eps_numeric,
            failure,
        });
    }

    let mut text = format!(
        "{:>2}  {:>17}  {:>17}  {:>13}  {:>13}\n",
        "D", "E/M analytic", "E/M numeric", "eps analytic", "eps numeric"
    );
    for row in &rows {
        let num = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
        text.push_str(&format!(
            "{:>2}  {:>17.15}  {:>17}  {:>13.3}  {:>13}{}\n",
            row.dimension,
            row.eta_analytic,
            num(row.eta_numeric, 15),
            row.eps_analytic,
            num(row.eps_numeric, 3),
            row.failure.as_ref().map_or(String::new(), |f| format!("  FAIL: {f}"))
        ));
    }
    let to_stdout = sink.path.is_none() && sink.format.is_none();
    if to_stdout {
        print!("{text}");
    } else {
        eprint!("{text}");
        let echo = ConfigEcho {
            physical: configs.clone(),
            settings: *settings,
        };
        let out = match sink.format.unwrap_or(Format::Csv) {
            Format::Json => RunManifest::new("table1", echo, entries).to_json()? + "\n",
            Format::Csv => {
                let mut t = CsvTable::new(&[
                    "dimension",
                    "eta_analytic",
                    "eta_numeric",
                    "epsilon_analytic_ev",
                    "epsilon_numeric_ev",
                    "pass",
                ]);
                echo_metadata(&mut t, "table1", &echo);
                for row in &rows {
                    t.rows.push(vec![
                        Cell::Int(row.dimension.into()),
                        Cell::Num(row.eta_analytic),
                        opt_num(row.eta_numeric),
                        Cell::Num(row.eps_analytic),
                        opt_num(row.eps_numeric),
                        Cell::text(row.failure.is_none().to_string()),
                    ]);
                }
                csv_string(&t)
            }
        };
        sink.write(&out)?;
    }
    Ok(if rows.iter().all(|r| r.failure.is_none()) { 0 } else { 2 })
}

fn profile(
    config: PhysicalConfig,
    settings: &SolverSettings,
    quantity: Quantity,
    eta: EtaChoice,
    stride: usize,
    output: &OutputArgs,
    file: &ConfigFile,
) -> CliResult<u8> {
    let sink = Sink::resolve(output, file)?;
    if sink.format == Some(Format::Json) {
        return Err(CliError::Config("profiles are written as CSV only".into()));
    }
    let echo = ConfigEcho {
        physical: vec![config],
        settings: *settings,
    };

    if quantity == Quantity::MismatchScan {
        let mut t = CsvTable::new(&["eta", "delta", "status"]);
        echo_metadata(&mut t, "profile", &echo);
        t.meta("quantity", quantity)
            .meta("sentinel", "delta = NaN where status is not `mismatch`");
        for (sample, _) in scan_mismatch(&config, settings) {
            let (delta, status) = match &sample.value {
                ScanValue::Mismatch { delta, .. } => (*delta, "mismatch".to_string()),
                ScanValue::NoTurningPoint { cause } => (f64::NAN, format!("no_turning_point:{}", cause_label(cause))),
                ScanValue::Failed { .. } => (f64::NAN, "failed".to_string()),
            };
            t.rows.push(vec![Cell::Num(sample.eta), Cell::Num(delta), Cell::Text(status)]);
        }
        sink.write(&csv_string(&t))?;
        return Ok(0);
    }

    let eta_value = match eta {
        EtaChoice::Value(v) => v,
        EtaChoice::Ground => {
            let r = solve_ground_state(&config, settings)?;
            match r.eta_star {
                Some(v) => v,
                None if verdict_code(&r) == 2 => return Err(CliError::Numerical(describe(&config, &r))),
                None => return Err(CliError::NotFound(describe(&config, &r))),
            }
        }
    };

    let mut t;
    match quantity {
        Quantity::EffectivePotential => {
            let coeffs = coefficients_for(&config, eta_value)?;
            let grid = settings.grid.grid_for(&coeffs)?;
            t = CsvTable::new(&["rho", "effective_potential"]);
            echo_metadata(&mut t, "profile", &echo);
            t.meta("quantity", "tau - V(rho); positive where classically allowed");
            match classify_match_point(&coeffs, &grid) {
                Ok(m) => t.meta("match_rho", crate::csv::format_number(grid.node(m))),
                Err(cause) => t.meta("no_turning_point", json(&cause)),
            };
            let gap = coeffs.gap_evaluator();
            for i in (0..grid.n_points).step_by(stride) {
                let rho = grid.node(i);
                t.rows.push(vec![Cell::Num(rho), Cell::Num(gap.gap(rho))]);
            }
        }
        _ => {
            let w = eigenfunction(&config, settings, eta_value)?;
            let nodes = w.grid.nodes();
            let overlay = (quantity == Quantity::PhiPlus
                && config.dimension == 3
                && config.ell == 0
                && config.k_sign == dirac_numerov::KSign::Plus)
                .then(|| analytic_ground_wavefunction_d3(&nodes, &config))
                .transpose()?;
            let (name, values) = match quantity {
                Quantity::PhiPlus => ("phi_plus", &w.phi_plus),
                Quantity::F => ("F", &w.f_component),
                _ => ("G", &w.g_component),
            };
            let mut header = vec!["rho", name];
            if overlay.is_some() {
                header.push("phi_plus_analytic");
            }
            t = CsvTable::new(&header);
            echo_metadata(&mut t, "profile", &echo);
            t.meta("quantity", quantity)
                .meta("normalization", "sum(phi_plus^2) * step = 1")
                .meta("match_rho", crate::csv::format_number(w.grid.node(w.match_index)));
            if let Some(exact) = &overlay {
                let linf = nodes
                    .iter()
                    .zip(values.iter().zip(exact))
                    .filter(|(&rho, _)| rho <= 20.0)
                    .map(|(_, (a, b))| (a - b).abs())
                    .fold(0.0, f64::max);
                t.meta("max_abs_diff_rho_le_20", crate::csv::format_number(linf));
            }
            for i in (0..nodes.len()).step_by(stride) {
                let mut row = vec![Cell::Num(nodes[i]), Cell::Num(values[i])];
                if let Some(exact) = &overlay {
                    row.push(Cell::Num(exact[i]));
                }
                t.rows.push(row);
            }
        }
    }
    t.metadata.insert(4, ("eta".into(), crate::csv::format_number(eta_value)));
    t.metadata.insert(5, ("eta_source".into(), eta.to_string()));
    sink.write(&csv_string(&t))?;
    Ok(0)
}

fn selftest() -> CliResult<u8> {
    let mut failures = 0;
    let mut check = |name: &str, result: CliResult<(bool, String)>| {
        let (ok, detail) = result.unwrap_or_else(|e| (false, e.to_string()));
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failures += usize::from(!ok);
    };
    check("analytic table column", (|| {
        let mut worst: f64 = 0.0;
        for (d, printed, _) in TABLE1_ANALYTIC {
            let e = analytic_energy(&PhysicalConfig::new(d, 0, Ansatz::CoulombOneOverR)?, 0)?.energy_ratio;
            worst = worst.max(((e - printed) / printed).abs());
        }
        Ok((worst <= 1e-12, format!("worst relative deviation {worst:.1e}")))
    })());
    check("hypergeometric contiguous relation", (|| {
        let (a, b, z) = (1.3, 2.7, 4.1);
        let lhs = hyp1f1(a, b, z)? - hyp1f1(a - 1.0, b, z)?;
        let rhs = z / b * hyp1f1(a, b + 1.0, z)?;
        let rel = ((lhs - rhs) / rhs).abs();
        Ok((rel <= 1e-12, format!("relative residual {rel:.1e}")))
    })());
    check("Numerov order", (|| {
        let r = d3_order_report(Scheme::Canonical, 1.0, 0.5, 5.0, &[4e-2, 2e-2, 1e-2])?;
        let ratio = r.last_ratio().unwrap_or(0.0);
        Ok(((12.0..=20.0).contains(&ratio), format!("error ratio {ratio:.2} under step halving")))
    })());
    check("D = 3 ground state", (|| {
        let c = PhysicalConfig::new(3, 0, Ansatz::CoulombOneOverR)?;
        let exact = analytic_energy(&c, 0)?.energy_ratio;
        let r = solve_ground_state(&c, &SolverSettings::default())?;
        Ok(match r.eta_star {
            Some(eta) => ((eta - exact).abs() <= 5e-8, format!("|dE/M| = {:.1e}", (eta - exact).abs())),
            None => (false, "not found".into()),
        })
    })());
    check("D = 5 generalized potential", (|| {
        let c = PhysicalConfig::new(5, 0, Ansatz::CoulombGeneralized)?;
        let r = solve_ground_state(&c, &SolverSettings::default())?;
        Ok((verdict_code(&r) == 3, describe(&c, &r)))
    })());
    Ok(if failures == 0 { 0 } else { 2 })
}
