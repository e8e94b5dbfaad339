//! Runs one experiment from a validated configuration and collects its
//! tables, plot and summary values. All reported frequencies are in Hz.

use std::f64::consts::PI;

use ionmotion::acceptance::{run_criterion, CriterionReport, CRITERIA};
use ionmotion::experiments::{
    bessel_scan, cooling_run, default_analysis_pulse, fit_rabi, j0_zero_crossing, line_windows, overlay,
    predicted_lines, rabi_timescan, sideband_characterization, spectroscopy, thermometry, BesselScanSpec, CoolingSpec,
    ResonanceSearch, SidebandSpec, SpectroscopySpec, Spectrum,
};
use ionmotion::model::derive_couplings;
use ionmotion::report::{svg_plot, Cell, Series};
use ionmotion::units::rad_to_hz;
use ionmotion::{CancelToken, Error, PulseEnvelope, ResultTable};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: ResultTable,
    /// Predicted line positions (spectroscopy only).
    pub lines: Option<ResultTable>,
    pub plot: Option<String>,
    /// Summary values for the metadata file.
    pub results: Map<String, Value>,
    /// True when cancellation cut the run short.
    pub partial: bool,
    /// True when the run finished but a check it performs failed.
    pub failed: bool,
}

impl Outcome {
    fn new(table: ResultTable) -> Self {
        Self { table, lines: None, plot: None, results: Map::new(), partial: false, failed: false }
    }
}

fn table(columns: &[(&str, &str)]) -> ResultTable {
    ResultTable::new(columns)
}

fn push(t: &mut ResultTable, row: Vec<Cell>) -> Result<(), Error> {
    t.push(row)
}

fn note(n: &Option<String>) -> Cell {
    Cell::Text(n.clone().unwrap_or_default())
}

fn was_cancelled(notes: impl IntoIterator<Item = Option<String>>) -> bool {
    let cancelled = Error::Cancelled.to_string();
    notes.into_iter().flatten().any(|n| n == cancelled)
}

fn rate_hz(w: Option<f64>) -> Option<f64> {
    w.map(rad_to_hz)
}

pub fn run_spectroscopy(cfg: &RunConfig, cancel: &CancelToken) -> Result<Outcome, Error> {
    let sp = cfg.spectroscopy.as_ref().ok_or_else(|| Error::InvalidInput("missing [spectroscopy] section".into()))?;
    let trap = cfg.trap_config();
    let modes = sp.modes.clone().unwrap_or_else(|| vec![cfg.drive.mode.clone()]);
    let drives: Vec<_> = modes
        .iter()
        .map(|m| {
            let mut d = cfg.drive_config();
            d.mode = m.clone();
            d.gradient_projection = sp.projections.get(m).copied().unwrap_or(cfg.drive.gradient_projection);
            d
        })
        .collect();
    let detunings = match (&sp.detunings, &sp.detuning_range, &sp.windows) {
        (Some(list), _, _) => list.clone(),
        (_, Some(r), _) => r.values("spectroscopy.detuning_range").map_err(|e| Error::InvalidInput(e.to_string()))?,
        (_, _, Some(w)) => {
            let mut centres = Vec::new();
            for d in &drives {
                centres.extend(predicted_lines(&trap, d, sp.comb_orders)?.into_iter().map(|l| l.detuning_hz));
            }
            line_windows(&centres, w.half_steps, w.step, w.coarse, w.span)
        }
        _ => return Err(Error::InvalidInput("spectroscopy needs a detuning grid".into())),
    };

    let mut spectra = Vec::new();
    for (k, drive) in drives.iter().enumerate() {
        let spec = SpectroscopySpec {
            trap: trap.clone(),
            drive: drive.clone(),
            envelope: cfg.envelope(),
            settings: cfg.settings(),
            fock_dim: cfg.state.fock_dim,
            initial: cfg.initial(),
            detunings_hz: detunings.clone(),
            comb_orders: sp.comb_orders,
        };
        let mut s = spectroscopy(&spec, cancel)?;
        s.p_up = readout_for(cfg, k).apply(&s.p_up);
        spectra.push(s);
    }
    let combined = overlay(&spectra)?;

    let mut cols: Vec<(String, &str)> = vec![("detuning".into(), "Hz")];
    if spectra.len() > 1 {
        cols.extend(modes.iter().map(|m| (format!("p_up_{m}"), "")));
    }
    cols.push(("p_up".into(), ""));
    cols.push(("note".into(), ""));
    let refs: Vec<(&str, &str)> = cols.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut t = table(&refs);
    for (i, &d) in detunings.iter().enumerate() {
        let mut row = vec![Cell::from(d)];
        if spectra.len() > 1 {
            row.extend(spectra.iter().map(|s| Cell::from(s.p_up[i])));
        }
        row.push(Cell::from(combined.p_up[i]));
        row.push(note(&combined.notes[i]));
        push(&mut t, row)?;
    }

    let mut lines = table(&[("label", ""), ("detuning", "Hz")]);
    for a in &combined.annotations {
        push(&mut lines, vec![Cell::from(a.label.as_str()), Cell::from(a.detuning_hz)])?;
    }

    let mut out = Outcome::new(t);
    out.partial = was_cancelled(spectra.iter().flat_map(|s| s.notes.clone()));
    out.results.insert("points".into(), json!(detunings.len()));
    out.results.insert("modes".into(), json!(modes));
    out.results.insert("local_maxima_hz".into(), json!(combined.local_maxima(0.0)));
    out.plot = Some(spectrum_plot(&spectra, &modes));
    out.lines = Some(lines);
    Ok(out)
}

/// Each overlaid mode draws from its own stream so runs stay reproducible.
fn readout_for(cfg: &RunConfig, k: usize) -> ionmotion::experiments::Readout {
    match cfg.readout() {
        ionmotion::experiments::Readout::Shots { shots, seed } => {
            ionmotion::experiments::Readout::Shots { shots, seed: seed.wrapping_add(k as u64) }
        }
        r => r,
    }
}

fn spectrum_plot(spectra: &[Spectrum], modes: &[String]) -> String {
    let series: Vec<Series> = spectra
        .iter()
        .zip(modes)
        .map(|(s, m)| Series {
            label: format!("mode {m}"),
            x: s.detunings_hz.iter().map(|d| d / 1e6).collect(),
            y: s.p_up.clone(),
        })
        .collect();
    svg_plot("Spin-flip spectrum", "detuning (MHz)", "P(up)", &series)
}

pub fn run_rabi(cfg: &RunConfig, _cancel: &CancelToken) -> Result<Outcome, Error> {
    let r = cfg.rabi.as_ref().ok_or_else(|| Error::InvalidInput("missing [rabi] section".into()))?;
    let plateaus = match (&r.plateaus, &r.plateau_range) {
        (Some(p), _) => p.clone(),
        (_, Some(range)) => range.values("rabi.plateau_range").map_err(|e| Error::InvalidInput(e.to_string()))?,
        _ => return Err(Error::InvalidInput("rabi needs plateaus".into())),
    };
    let c = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
    let initial = cfg.initial().prepare(cfg.space())?;
    let series = rabi_timescan(&c, &cfg.envelope(), &plateaus, &initial, &cfg.settings())?;
    let p_up = cfg.readout().apply(&series.p_up.iter().map(|p| Some(*p)).collect::<Vec<_>>());

    let mut t = table(&[("plateau", "s"), ("p_up", ""), ("mean_n", "")]);
    for ((t_k, p), n) in series.times.iter().zip(&p_up).zip(&series.mean_n) {
        push(&mut t, vec![(*t_k).into(), (*p).into(), (*n).into()])?;
    }
    let mut out = Outcome::new(t);
    if r.fit {
        let values: Vec<f64> = p_up.iter().map(|p| p.unwrap_or(f64::NAN)).collect();
        match fit_rabi(&series.times, &values) {
            Ok(fit) => {
                out.results.insert("rabi_frequency_hz".into(), json!(rad_to_hz(fit.frequency)));
                out.results.insert("amplitude".into(), json!(fit.amplitude));
                out.results.insert("offset".into(), json!(fit.offset));
                out.results.insert("phase".into(), json!(fit.phase));
                out.results.insert("rms_residual".into(), json!(fit.rms_residual));
            }
            Err(e) => {
                out.results.insert("fit_error".into(), json!(e.to_string()));
            }
        }
    }
    let times_us: Vec<f64> = series.times.iter().map(|t| t * 1e6).collect();
    out.plot = Some(svg_plot(
        "Rabi time scan",
        "plateau (us)",
        "P(up)",
        &[Series { label: "P(up)".into(), x: times_us, y: p_up }],
    ));
    Ok(out)
}

pub fn run_bessel(cfg: &RunConfig, cancel: &CancelToken) -> Result<Outcome, Error> {
    let b = cfg.bessel.as_ref().ok_or_else(|| Error::InvalidInput("missing [bessel] section".into()))?;
    let arguments = match (&b.arguments, &b.argument_range) {
        (Some(a), _) => a.clone(),
        (_, Some(r)) => r.values("bessel.argument_range").map_err(|e| Error::InvalidInput(e.to_string()))?,
        _ => return Err(Error::InvalidInput("bessel needs arguments".into())),
    };
    let base = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
    let spec = BesselScanSpec {
        settings: cfg.settings(),
        samples: b.samples,
        max_span: b.max_span,
        contrast_floor: b.contrast_floor,
        ..BesselScanSpec::new(base, arguments, b.orders.clone())
    };
    let points = bessel_scan(&spec, cancel);
    let mut t = table(&[
        ("argument", ""),
        ("order", ""),
        ("ratio", ""),
        ("expected", ""),
        ("below_floor", ""),
        ("rabi_frequency", "Hz"),
        ("note", ""),
    ]);
    for p in &points {
        push(
            &mut t,
            vec![
                p.argument.into(),
                f64::from(p.order).into(),
                p.ratio.into(),
                p.expected.into(),
                Cell::from(if p.below_floor { "true" } else { "false" }),
                rate_hz(p.fit.map(|f| f.frequency)).into(),
                note(&p.note),
            ],
        )?;
    }
    let mut out = Outcome::new(t);
    out.partial = was_cancelled(points.iter().map(|p| p.note.clone()));
    let worst = points
        .iter()
        .filter_map(|p| p.ratio.map(|r| (r - p.expected).abs()))
        .fold(None, |a: Option<f64>, d| Some(a.map_or(d, |a| a.max(d))));
    out.results.insert("worst_deviation".into(), json!(worst));
    if let (Some(z), false) = (&b.zero_scan, out.partial) {
        match j0_zero_crossing(&spec, z.start, z.stop, z.step, cancel) {
            Ok(x) => {
                out.results.insert("j0_zero".into(), json!(x));
            }
            Err(Error::Cancelled) => out.partial = true,
            Err(e) => {
                out.results.insert("j0_zero_error".into(), json!(e.to_string()));
            }
        }
    }
    let series: Vec<Series> = b
        .orders
        .iter()
        .flat_map(|&m| {
            let pts: Vec<_> = points.iter().filter(|p| p.order == m).collect();
            [
                Series {
                    label: format!("m={m} simulated"),
                    x: pts.iter().map(|p| p.argument).collect(),
                    y: pts.iter().map(|p| p.ratio).collect(),
                },
                Series {
                    label: format!("|J{m}|"),
                    x: pts.iter().map(|p| p.argument).collect(),
                    y: pts.iter().map(|p| Some(p.expected)).collect(),
                },
            ]
        })
        .collect();
    out.plot = Some(svg_plot("Spin-flip rates", "4 Omega_z / omega_g", "Omega_m / Omega_mu", &series));
    Ok(out)
}

pub fn run_sideband(cfg: &RunConfig, cancel: &CancelToken) -> Result<Outcome, Error> {
    let sb = cfg.sideband.as_ref().ok_or_else(|| Error::InvalidInput("missing [sideband] section".into()))?;
    let base = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
    let spec = SidebandSpec {
        base,
        ratios: sb.ratios.clone(),
        fock_dim: cfg.state.fock_dim,
        envelope: cfg.envelope(),
        settings: cfg.settings(),
        search: ResonanceSearch {
            window_fraction: sb.window_fraction,
            min_window: 2.0 * PI * sb.min_window,
            spacing: sb.spacing,
        },
        samples: sb.samples,
        periods: sb.periods,
    };
    let points = sideband_characterization(&spec, cancel)?;
    let mut t = table(&[
        ("ratio", ""),
        ("rate", ""),
        ("predicted_rate", ""),
        ("resonance", ""),
        ("predicted_resonance", ""),
        ("rabi_frequency", "Hz"),
        ("note", ""),
    ]);
    for p in &points {
        push(
            &mut t,
            vec![
                p.ratio.into(),
                p.rate.into(),
                p.predicted_rate.into(),
                p.resonance.into(),
                p.predicted_resonance.into(),
                rate_hz(p.fit.map(|f| f.frequency)).into(),
                note(&p.note),
            ],
        )?;
    }
    let mut out = Outcome::new(t);
    out.partial = was_cancelled(points.iter().map(|p| p.note.clone()));
    let worst = |f: fn(&ionmotion::experiments::SidebandPoint) -> Option<(f64, f64)>| {
        points
            .iter()
            .filter_map(f)
            .filter(|(_, p)| *p != 0.0)
            .map(|(a, p)| (a / p - 1.0).abs())
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
    };
    out.results.insert("worst_rate_deviation".into(), json!(worst(|p| p.rate.zip(p.predicted_rate))));
    out.results.insert(
        "worst_resonance_deviation".into(),
        json!(worst(|p| p.resonance.zip(p.predicted_resonance))),
    );
    let x: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    out.plot = Some(svg_plot(
        "Sideband characterization",
        "2 Omega_mu / (omega_r - omega_g)",
        "normalized value",
        &[
            Series { label: "rate".into(), x: x.clone(), y: points.iter().map(|p| p.rate).collect() },
            Series { label: "rate predicted".into(), x: x.clone(), y: points.iter().map(|p| p.predicted_rate).collect() },
            Series { label: "resonance".into(), x: x.clone(), y: points.iter().map(|p| p.resonance).collect() },
            Series {
                label: "resonance predicted".into(),
                x,
                y: points.iter().map(|p| p.predicted_resonance).collect(),
            },
        ],
    ));
    Ok(out)
}

fn analysis_pulse(cfg: &RunConfig, plateau: Option<f64>) -> Result<PulseEnvelope, Error> {
    let e = cfg.envelope();
    match plateau {
        Some(p) => PulseEnvelope::new(e.kind, e.ramp_time, p),
        None => {
            let c = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
            default_analysis_pulse(&c, e.kind, e.ramp_time)
        }
    }
}

pub fn run_cooling(cfg: &RunConfig, cancel: &CancelToken) -> Result<Outcome, Error> {
    let cs = cfg.cooling.as_ref().ok_or_else(|| Error::InvalidInput("missing [cooling] section".into()))?;
    let couplings = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
    let spec = CoolingSpec {
        couplings,
        pulse: cfg.envelope(),
        continuous_gradient: cs.continuous_gradient,
        pulses: cs.pulses,
        fock_dim: cfg.state.fock_dim,
        initial: cfg.initial(),
        settings: cfg.settings(),
        analysis: cs.analysis_plateau.map(|p| analysis_pulse(cfg, Some(p))).transpose()?,
    };
    let r = cooling_run(&spec, cancel)?;
    let mut t = table(&[("pulses", ""), ("mean_n", "")]);
    for (k, n) in r.nbar_per_pulse.iter().enumerate() {
        push(&mut t, vec![(k as f64).into(), (*n).into()])?;
    }
    let mut out = Outcome::new(t);
    out.results.insert("red_sideband_detuning_hz".into(), json!(rad_to_hz(r.detuning)));
    out.results.insert("final_mean_n".into(), json!(r.direct_nbar));
    out.results.insert("thermometry_nbar".into(), json!(r.thermometry.nbar));
    out.results.insert("sideband_ratio".into(), json!(r.thermometry.ratio));
    out.results.insert("p_red".into(), json!(r.thermometry.p_red));
    out.results.insert("p_blue".into(), json!(r.thermometry.p_blue));
    let x: Vec<f64> = (0..r.nbar_per_pulse.len()).map(|k| k as f64).collect();
    out.plot = Some(svg_plot(
        "Sideband cooling",
        "pulses",
        "mean phonon number",
        &[Series { label: "<n>".into(), x, y: r.nbar_per_pulse.iter().map(|n| Some(*n)).collect() }],
    ));
    Ok(out)
}

pub fn run_thermometry(cfg: &RunConfig, _cancel: &CancelToken) -> Result<Outcome, Error> {
    let plateau = cfg.thermometry.as_ref().and_then(|t| t.analysis_plateau);
    let c = derive_couplings(&cfg.trap_config(), &cfg.drive_config())?;
    let state = cfg.initial().prepare(cfg.space())?;
    let analysis = analysis_pulse(cfg, plateau)?;
    let th = thermometry(&state, &c, &analysis, &cfg.settings())?;
    let mut t = table(&[("p_red", ""), ("p_blue", ""), ("ratio", ""), ("nbar", ""), ("mean_n", "")]);
    let direct = state.mean_phonon();
    push(&mut t, vec![th.p_red.into(), th.p_blue.into(), th.ratio.into(), th.nbar.into(), direct.into()])?;
    let mut out = Outcome::new(t);
    out.results.insert("thermometry_nbar".into(), json!(th.nbar));
    out.results.insert("mean_n".into(), json!(direct));
    out.results.insert("analysis_plateau_s".into(), json!(analysis.plateau_time));
    Ok(out)
}

/// Runs the selected acceptance criteria (all when empty), calling
/// `progress` after each.
pub fn run_validate(
    criteria: &[u32],
    cancel: &CancelToken,
    mut progress: impl FnMut(&CriterionReport),
) -> Result<Outcome, Error> {
    let ids: Vec<u32> = if criteria.is_empty() { CRITERIA.iter().map(|(id, _)| *id).collect() } else { criteria.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|(c, _)| c == *id)) {
        return Err(Error::InvalidInput(format!("no criterion {bad}; criteria are 1 to {}", CRITERIA.len())));
    }
    let mut t = table(&[("criterion", ""), ("title", ""), ("passed", ""), ("seconds", "s")]);
    let mut out = Outcome::new(ResultTable::default());
    let mut reports = Vec::new();
    for id in ids {
        if cancel.is_cancelled() {
            out.partial = true;
            break;
        }
        let r = run_criterion(id, cancel);
        progress(&r);
        push(
            &mut t,
            vec![
                f64::from(r.id).into(),
                r.title.into(),
                Cell::from(if r.passed { "true" } else { "false" }),
                r.seconds.into(),
            ],
        )?;
        out.failed |= !r.passed;
        reports.push(json!({ "criterion": r.id, "title": r.title, "passed": r.passed, "details": r.details }));
    }
    out.partial |= cancel.is_cancelled();
    out.results.insert("criteria".into(), Value::Array(reports));
    out.table = t;
    Ok(out)
}
