use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::output::{g9, Document, ReplayRecord};
use super::{
    Axis, CalibrateCommand, Command, CoolArgs, DualArgs, Failure, FitRamseyArgs, Inputs,
    InvertArgs, ScanArgs, SpectrumArgs, StarkArgs, SynthArgs, Unit, Window,
};
use crate::atomic::build_basis;
use crate::calibration::{
    invert_rabi, ramsey_fit, ramsey_synthesize, stark_shifts_probe, ProbeComponents, RamseyFringe,
    RamseyParams, ShotNoise, Splittings,
};
use crate::cooling::{cooling_report, MotionalMode};
use crate::designer::{
    dual_band_report, equilibrium_nbar, scan_probe_intensity, scan_pump_intensity, DetuningPolicy,
    HeatingModel, ScanAxis,
};
use crate::liouvillian::{mhz, TWO_PI};
use crate::spectrum::{
    dark_resonances, excitation_spectrum, uniform_grid, ProbeRabis, PumpSpec, SpectrumModel,
};

type Outputs = Vec<(Option<PathBuf>, String)>;

pub(super) fn dispatch(
    command: &Command,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    match command {
        Command::Spectrum(a) => spectrum(a, record, inputs, out),
        Command::Cool(a) => cool(a, record, inputs, out),
        Command::Scan(a) => scan(a, record, inputs, out),
        Command::DesignDual(a) => design_dual(a, record, inputs, out),
        Command::Calibrate(CalibrateCommand::FitRamsey(a)) => fit_ramsey(a, record, inputs, out),
        Command::Calibrate(CalibrateCommand::Invert(a)) => invert(a, record, inputs, out),
        Command::Calibrate(CalibrateCommand::Stark(a)) => stark(a, record, inputs, out),
        Command::Calibrate(CalibrateCommand::SynthRamsey(a)) => synth_ramsey(a, record, out),
    }
}

fn load_config(inputs: &Inputs) -> Result<RunConfig, Failure> {
    Ok(match &inputs.config {
        Some(text) => RunConfig::from_toml(text)?,
        None => RunConfig::defaults(),
    })
}

fn angular(value: f64, unit: Unit, gamma: f64) -> f64 {
    match unit {
        Unit::Gamma => value * gamma,
        Unit::Mhz => mhz(value),
    }
}

fn to_mhz(x: f64) -> f64 {
    x / TWO_PI
}

fn grid(w: &Window, unit: Unit, gamma: f64) -> Result<Vec<f64>, Failure> {
    if !(w.from.is_finite() && w.to.is_finite()) {
        return Err(Failure::usage("window bounds must be finite"));
    }
    match w.points {
        0 => Err(Failure::usage("--points must be at least 1")),
        1 if w.from == w.to => Ok(vec![angular(w.from, unit, gamma)]),
        1 => Err(Failure::usage("a single point needs --from equal to --to")),
        n if w.from < w.to => Ok(uniform_grid(
            angular(w.from, unit, gamma),
            angular(w.to, unit, gamma),
            n,
        )),
        _ => Err(Failure::usage("window is empty: --from must be below --to")),
    }
}

fn header(command: &str, record: &ReplayRecord, cfg: Option<&RunConfig>) -> Document {
    let mut doc = Document::new(command);
    if let Some(cfg) = cfg {
        doc.comment(format!("config: {}", cfg.to_json()));
    }
    doc.raw_header(record.header_line());
    doc
}

fn nominal_detuning(arg: Option<f64>, unit: Unit, cfg: &RunConfig) -> Option<f64> {
    arg.map(|v| angular(v, unit, cfg.drive.gamma_natural))
        .or(cfg.lasers.delta_probe)
}

fn spectrum(
    a: &SpectrumArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let gamma = cfg.drive.gamma_natural;
    let detunings = grid(&a.window, a.common.unit, gamma)?;
    let basis = build_basis(cfg.spin);
    let pump = PumpSpec::from_drive(&cfg.drive);
    let probe = ProbeRabis {
        sigma_plus: cfg.drive.omega_sigma_plus,
        sigma_minus: cfg.drive.omega_sigma_minus,
    };
    let trace = excitation_spectrum(&basis, &cfg.drive, pump, probe, &detunings)?;

    let mut doc = header("spectrum", record, Some(&cfg));
    doc.columns(&[
        "delta_probe_MHz",
        "rho_p_total",
        "rho_p_plus",
        "rho_p_minus",
    ]);
    for p in &trace.points {
        doc.row(&[
            to_mhz(p.delta_probe),
            p.rho_p_total,
            p.rho_p_sigma_plus,
            p.rho_p_sigma_minus,
        ]);
    }
    let mut outputs = vec![(out.map(Path::to_path_buf), doc.render())];

    let dark_path = a
        .dark_out
        .clone()
        .or_else(|| out.map(|p| p.with_extension("dark.csv")));
    if let Some(path) = dark_path {
        let mut dark = header("spectrum dark resonances", record, None);
        dark.columns(&["label", "delta_probe_MHz", "delta_probe_gamma", "channel"]);
        for r in dark_resonances(pump, cfg.drive.zeeman_s_upper) {
            let channel = match r.channel.q() {
                1 => "sigma_plus",
                _ => "sigma_minus",
            };
            dark.text_row(&[
                r.label.as_str().to_string(),
                g9(to_mhz(r.detuning)),
                g9(r.detuning / gamma),
                channel.to_string(),
            ]);
        }
        outputs.push((Some(path), dark.render()));
    }
    Ok(outputs)
}

fn cool(
    a: &CoolArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let mode = cfg.mode(&a.mode)?.clone();
    let delta = nominal_detuning(a.delta_probe, a.common.unit, &cfg).ok_or_else(|| {
        Failure::usage("no probe detuning: pass --delta-probe or set lasers.delta_probe_*")
    })?;
    let model = SpectrumModel::new(build_basis(cfg.spin), cfg.drive)?;
    let rho = |d: f64| model.rho_p(d);
    let report = cooling_report(&rho, delta, &mode, cfg.drive.gamma_effective())?;
    let ndot = cfg.heating.rate_for(&mode.label);
    let n_eq = equilibrium_nbar(report.n_limit, report.rate, ndot);
    if report.heating_dominated {
        eprintln!(
            "eitcool: warning: mode {} is heated at this detuning",
            mode.label
        );
    }

    let mut doc = header("cool", record, Some(&cfg));
    doc.key_text("mode", &mode.label);
    doc.key_value("frequency_MHz", to_mhz(mode.omega));
    doc.key_value("eta", mode.eta);
    doc.key_value("delta_probe_MHz", to_mhz(delta));
    doc.key_value("delta_probe_gamma", delta / cfg.drive.gamma_natural);
    doc.key_value("n_limit", report.n_limit);
    doc.key_text("heating_dominated", &report.heating_dominated.to_string());
    doc.key_value("rate_per_ms", report.rate);
    doc.key_value("rho_p_carrier", report.samples.carrier);
    doc.key_value("rho_p_red", report.samples.red);
    doc.key_value("rho_p_blue", report.samples.blue);
    doc.key_value("heating_quanta_per_ms", ndot);
    doc.key_value("n_eq", n_eq.unwrap_or(f64::NAN));
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

fn scan(
    a: &ScanArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let gamma = cfg.drive.gamma_natural;
    let unit = a.common.unit;
    let values = grid(&a.window, unit, gamma)?;
    let modes: Vec<MotionalMode> = if a.modes.is_empty() {
        cfg.modes.clone()
    } else {
        a.modes
            .iter()
            .map(|l| cfg.mode(l).cloned())
            .collect::<Result<_, _>>()?
    };
    let policy = match (a.optimize_from, a.optimize_to) {
        (Some(lo), Some(hi)) => {
            let w = Window {
                from: lo,
                to: hi,
                points: a.optimize_points,
            };
            DetuningPolicy::Optimize(grid(&w, unit, gamma)?)
        }
        _ => DetuningPolicy::Fixed(nominal_detuning(a.delta_probe, unit, &cfg).ok_or_else(|| {
            Failure::usage("no probe detuning: pass --delta-probe, --optimize-from/--optimize-to or set lasers.delta_probe_*")
        })?),
    };
    let heating = if a.no_heating {
        HeatingModel::none()
    } else {
        cfg.heating.clone()
    };
    let basis = build_basis(cfg.spin);
    let result = match a.axis {
        Axis::Probe => {
            scan_probe_intensity(&basis, &cfg.drive, &modes, &values, &heating, &policy)?
        }
        Axis::Pump => scan_pump_intensity(
            &basis, &cfg.drive, &modes, &values, a.ratio, &heating, &policy,
        )?,
    };

    let axis = format!("{}_gamma", result.axis.label());
    let mut doc = header("scan", record, Some(&cfg));
    if result.axis == ScanAxis::Pump {
        doc.comment(format!("omega_pump_1 = omega_pump_2 / {}", g9(a.ratio)));
    }
    for (m, label) in result.mode_labels.iter().enumerate() {
        match result.best(m) {
            Some((s, o)) => doc.comment(format!(
                "argmin {label}: {axis}={} n_eq={} step_gamma={}",
                g9(s.value / gamma),
                g9(o.n_eq.unwrap_or(f64::NAN)),
                g9(result.step / gamma)
            )),
            None => doc.comment(format!("argmin {label}: none")),
        }
    }
    let mut names = vec![axis.clone()];
    for l in &result.mode_labels {
        names.push(format!("n_limit_{l}"));
        names.push(format!("rate_{l}_per_ms"));
        names.push(format!("n_eq_{l}"));
        names.push(format!("delta_probe_{l}_MHz"));
    }
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    doc.columns(&names);
    for s in &result.samples {
        let mut row = vec![s.value / gamma];
        for outcome in &s.modes {
            match outcome {
                Ok(o) => row.extend([
                    o.report.n_limit,
                    o.report.rate,
                    o.n_eq.unwrap_or(f64::NAN),
                    to_mhz(o.report.delta_probe),
                ]),
                Err(_) => row.extend([f64::NAN; 4]),
            }
        }
        doc.row(&row);
    }
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

fn design_dual(
    a: &DualArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let gamma = cfg.drive.gamma_natural;
    let window = grid(&a.window, a.common.unit, gamma)?;
    let axial = MotionalMode::new("axial", mhz(a.axial_mhz), 0.0)?;
    let radial = MotionalMode::new("radial", mhz(a.radial_mhz), 0.0)?;
    let nominal = nominal_detuning(a.nominal, a.common.unit, &cfg);
    let report = dual_band_report(
        &build_basis(cfg.spin),
        &cfg.drive,
        &axial,
        &radial,
        &window,
        nominal,
    )?;

    let mut doc = header("design-dual", record, Some(&cfg));
    doc.comment(format!(
        "modes: axial {} MHz, radial {} MHz",
        g9(a.axial_mhz),
        g9(a.radial_mhz)
    ));
    let value = |r: &Result<f64, _>| r.as_ref().map_or(f64::NAN, |&v| v);
    match (&report.nominal, nominal) {
        (Some(row), _) => doc.comment(format!(
            "nominal: delta_probe_MHz={} n_axial={} n_radial={}",
            g9(to_mhz(row.delta_probe)),
            g9(value(&row.axial)),
            g9(value(&row.radial))
        )),
        (None, Some(d)) => {
            let msg = format!(
                "nominal detuning {} MHz lies outside the window; summary omitted",
                g9(to_mhz(d))
            );
            eprintln!("eitcool: warning: {msg}");
            doc.comment(format!("warning: {msg}"));
        }
        (None, None) => doc.comment("nominal: none given"),
    }
    for (name, opt) in [
        ("axial", report.axial_optimum),
        ("radial", report.radial_optimum),
    ] {
        match opt {
            Some((d, n)) => doc.comment(format!(
                "optimum {name}: delta_probe_MHz={} n={}",
                g9(to_mhz(d)),
                g9(n)
            )),
            None => doc.comment(format!("optimum {name}: none")),
        }
    }
    doc.columns(&["delta_probe_MHz", "n_axial", "n_radial"]);
    for r in &report.rows {
        doc.row(&[to_mhz(r.delta_probe), value(&r.axial), value(&r.radial)]);
    }
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

/// Numeric rows of a delimited file as (line number, fields). Blank lines
/// and `#` comments are skipped; the first remaining line may be a header of
/// column names.
fn parse_table(text: &str, columns: usize) -> Result<Vec<(usize, Vec<f64>)>, Failure> {
    let mut rows = Vec::new();
    let mut seen_content = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        if !seen_content && parsed.iter().all(Option::is_none) {
            seen_content = true;
            continue;
        }
        seen_content = true;
        if fields.len() != columns {
            return Err(Failure::usage(format!(
                "line {line_no}: expected {columns} columns, found {}",
                fields.len()
            )));
        }
        let values: Option<Vec<f64>> = parsed.into_iter().collect();
        match values {
            Some(v) if v.iter().all(|x| x.is_finite()) => rows.push((line_no, v)),
            _ => {
                return Err(Failure::usage(format!(
                    "line {line_no}: malformed row {trimmed:?}"
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::usage("no data rows"));
    }
    Ok(rows)
}

fn data_text(inputs: &Inputs) -> Result<&str, Failure> {
    inputs
        .data
        .as_deref()
        .ok_or_else(|| Failure::usage("no data file"))
}

fn fit_ramsey(
    _a: &FitRamseyArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let rows = parse_table(data_text(inputs)?, 2)?;
    for (line, v) in &rows {
        if !(0.0..=1.0).contains(&v[1]) {
            return Err(Failure::usage(format!(
                "line {line}: probability {} outside [0, 1]",
                v[1]
            )));
        }
    }
    let fringe = RamseyFringe {
        samples: rows.iter().map(|(_, v)| (v[0], v[1])).collect(),
    };
    let fit = ramsey_fit(&fringe)?;
    let sigma = |i: usize| fit.covariance[(i, i)].sqrt();
    let mut doc = header("calibrate fit-ramsey", record, None);
    doc.comment("model: p = A sin^2(delta t) exp(-gamma t) + B, t in ms");
    doc.key_value("samples", fringe.samples.len() as f64);
    doc.key_value("A", fit.params.a);
    doc.key_value("A_sigma", sigma(0));
    doc.key_value("delta_rad_per_ms", fit.params.delta);
    doc.key_value("delta_sigma_rad_per_ms", sigma(1));
    doc.key_value("gamma_per_ms", fit.params.gamma);
    doc.key_value("gamma_sigma_per_ms", sigma(2));
    doc.key_value("B", fit.params.b);
    doc.key_value("B_sigma", sigma(3));
    doc.key_value("shift_kHz", fit.params.shift_khz());
    doc.key_value("chi2", fit.chi2);
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

fn invert(
    a: &InvertArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let gamma = cfg.drive.gamma_natural;
    let delta = angular(a.delta_probe, a.common.unit, gamma);
    let splittings = Splittings::from_drive(&cfg.drive);
    let rows = parse_table(data_text(inputs)?, 3)?;
    let mut doc = header("calibrate invert", record, Some(&cfg));
    doc.comment(format!("delta_probe_MHz = {}", g9(to_mhz(delta))));
    doc.columns(&[
        "clock_kHz",
        "zeeman_plus_kHz",
        "zeeman_minus_kHz",
        "omega_sigma_plus_gamma",
        "omega_sigma_minus_gamma",
        "omega_pi_gamma",
    ]);
    for (line, v) in rows {
        let omega = invert_rabi(cfg.spin, [v[0], v[1], v[2]], delta, splittings).map_err(|e| {
            let code = super::exit_code(&e);
            Failure {
                code,
                message: format!("line {line}: {e}"),
            }
        })?;
        doc.row(&[
            v[0],
            v[1],
            v[2],
            omega.sigma_plus / gamma,
            omega.sigma_minus / gamma,
            omega.pi / gamma,
        ]);
    }
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

fn stark(
    a: &StarkArgs,
    record: &ReplayRecord,
    inputs: &Inputs,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let cfg = load_config(inputs)?;
    let gamma = cfg.drive.gamma_natural;
    let u = a.common.unit;
    let probe = ProbeComponents {
        sigma_plus: angular(a.sigma_plus, u, gamma),
        sigma_minus: angular(a.sigma_minus, u, gamma),
        pi: angular(a.pi, u, gamma),
    };
    if [probe.sigma_plus, probe.sigma_minus, probe.pi]
        .iter()
        .any(|&x| x < 0.0)
    {
        return Err(Failure::usage("Rabi frequencies must be >= 0"));
    }
    let delta = angular(a.delta_probe, u, gamma);
    let shifts = stark_shifts_probe(cfg.spin, probe, delta, Splittings::from_drive(&cfg.drive))?;
    let mut doc = header("calibrate stark", record, Some(&cfg));
    doc.comment(format!("delta_probe_MHz = {}", g9(to_mhz(delta))));
    if !shifts.is_perturbative() {
        let msg = format!(
            "coupling/detuning ratio {} is not small; second-order shifts are unreliable",
            g9(shifts.coupling_ratio)
        );
        eprintln!("eitcool: warning: {msg}");
        doc.comment(format!("warning: {msg}"));
    }
    doc.columns(&["clock_kHz", "zeeman_plus_kHz", "zeeman_minus_kHz"]);
    doc.row(&shifts.probe_shifts());
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}

fn synth_ramsey(
    a: &SynthArgs,
    record: &ReplayRecord,
    out: Option<&Path>,
) -> Result<Outputs, Failure> {
    let params = RamseyParams {
        a: a.a,
        delta: a.delta,
        gamma: a.gamma,
        b: a.b,
    };
    let w = Window {
        from: a.t_from,
        to: a.t_to,
        points: a.points,
    };
    let times = grid(&w, Unit::Gamma, 1.0)?;
    let noise = a.shots.map(|shots| ShotNoise {
        shots,
        seed: a.seed,
    });
    if noise.is_some_and(|n| n.shots == 0) {
        return Err(Failure::usage("--shots must be positive"));
    }
    let fringe = ramsey_synthesize(params, &times, noise)?;
    let mut doc = header("calibrate synth-ramsey", record, None);
    doc.columns(&["t_ms", "p"]);
    for (t, p) in fringe.samples {
        doc.row(&[t, p]);
    }
    Ok(vec![(out.map(Path::to_path_buf), doc.render())])
}
