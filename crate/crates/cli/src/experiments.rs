use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use transmutation::kernels::{
    decay_profile, evaluate_points, operator_norm_check, transmute_forward, transmute_reverse, DecaySetup,
    KernelConfig, KernelKind,
};
use transmutation::observability::packet::packet_truncation;
use transmutation::observability::{
    ingham_bounds, integer_lattice_frequencies, liouville_check, packet_outside_mass, sharpness_packet,
    transport_family, uniformity_sweep, weak_obs_sweep, PacketProfile,
};
use transmutation::schemes::{band_inf_sup_fprime, certify, uniform_time_threshold};
use transmutation::spectral::{evolve_continuous, evolve_discrete, make_transport_spectrum};
use transmutation::{FilterBand, Scheme, State};

use crate::output::{emit_plotdata, Metadata, Tolerance, Versions};
use crate::{CliError, Experiment, ExperimentConfig, RunReport};

const DEFAULT_LADDER: [f64; 4] = [0.05, 0.025, 0.0125, 0.00625];
const REPRESENTATION_TOL: f64 = 1e-6;
const DECAY_MIN_SLOPE: f64 = 3.0;
const NORM_REL_TOL: f64 = 1e-6;
const MAX_VARIATION: f64 = 0.5;
const MIN_QUARTER_RATIO: f64 = 2.0;
const PACKET_NORM_TOL: f64 = 0.05;
const PACKET_MIN_SLOPE: f64 = 3.5;
const PACKET_GRID: usize = 20_000;

pub(crate) fn dispatch(experiment: Experiment, cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    match experiment {
        Experiment::SchemesCertify => schemes_certify(cfg, out),
        Experiment::KernelEval => kernel_eval(cfg, out),
        Experiment::Reconstruct => reconstruct(cfg, out),
        Experiment::ObservabilitySweep => observability_sweep(cfg, out),
        Experiment::Sharpness => sharpness(cfg, out),
        Experiment::Ingham => ingham(cfg, out),
        Experiment::WeakObs => weak_obs(cfg, out),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn ladder(cfg: &ExperimentConfig, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let taus = cfg.tau_ladder.clone().unwrap_or_else(|| default.to_vec());
    if taus.is_empty() {
        return Err(invalid("tau ladder is empty"));
    }
    for &t in &taus {
        positive("every tau in the ladder", t)?;
    }
    Ok(taus)
}

fn interior_point(x0: f64) -> Result<f64, CliError> {
    if x0 > 0.0 && x0 < 1.0 {
        Ok(x0)
    } else {
        Err(invalid(format!("x0 = {x0} must lie strictly inside (0, 1)")))
    }
}

fn scheme(cfg: &ExperimentConfig) -> Result<Scheme, CliError> {
    Ok(Scheme::from_name(cfg.scheme.as_deref().unwrap_or("midpoint"))?)
}

/// `delta` below the scheme radius, so the filtered band is in the domain of `f`.
fn band_in_domain(scheme: &Scheme, delta: f64) -> Result<f64, CliError> {
    positive("delta", delta)?;
    if delta >= scheme.radius() {
        return Err(invalid(format!(
            "delta = {delta} is not below the radius R = {} of {}; violates the range hypothesis f: (-R,R) -> (-pi,pi)",
            scheme.radius(),
            scheme.name()
        )));
    }
    Ok(delta)
}

fn variation(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

/// Index pairs `(i, j)` of the ladder with `tau_j = tau_i / 4`.
fn quartering_pairs(taus: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, a) in taus.iter().enumerate() {
        for (j, b) in taus.iter().enumerate() {
            if ((a / b) - 4.0).abs() < 1e-9 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Uniform-in-tau expectation on one column: bounded above the threshold,
/// growing by the quartering ratio below it.
fn regime_tolerances(label: &str, t_final: f64, threshold: f64, taus: &[f64], growth: &[f64]) -> Vec<Tolerance> {
    if t_final > threshold {
        vec![Tolerance::at_most(format!("{label} variation across ladder"), variation(growth), MAX_VARIATION)]
    } else if t_final < threshold {
        quartering_pairs(taus)
            .into_iter()
            .map(|(i, j)| {
                Tolerance::at_least(
                    format!("{label} ratio tau={} -> tau={}", taus[i], taus[j]),
                    growth[j] / growth[i],
                    MIN_QUARTER_RATIO,
                )
            })
            .collect()
    } else {
        Vec::new()
    }
}

struct Writer<'a, P: Serialize> {
    experiment: Experiment,
    out: &'a Path,
    params: &'a P,
    tolerances: Vec<Tolerance>,
    extra: serde_json::Value,
    files: Vec<PathBuf>,
}

impl<'a, P: Serialize> Writer<'a, P> {
    fn new(experiment: Experiment, out: &'a Path, params: &'a P, tolerances: Vec<Tolerance>, extra: serde_json::Value) -> Self {
        Self {
            experiment,
            out,
            params,
            tolerances,
            extra,
            files: Vec::new(),
        }
    }

    fn emit<R: Serialize>(&mut self, file: &str, columns: &[&str], rows: &[R]) -> Result<(), CliError> {
        let path = self.out.join(file);
        let meta = Metadata {
            experiment: self.experiment.name(),
            versions: Versions::default(),
            config: self.params,
            tolerances: &self.tolerances,
            extra: self.extra.clone(),
        };
        emit_plotdata(&path, &meta, columns, rows)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self) -> RunReport {
        RunReport {
            experiment: self.experiment,
            files: self.files,
            tolerances: self.tolerances,
        }
    }
}

#[derive(Serialize)]
struct CertifyParams {
    scheme: String,
    delta: f64,
    samples: usize,
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    passed: bool,
    worst_alpha: f64,
    worst_value: f64,
}

fn schemes_certify(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let scheme = scheme(cfg)?;
    let params = CertifyParams {
        scheme: scheme.name().to_string(),
        delta: positive("delta", cfg.delta.unwrap_or(1.0))?,
        samples: cfg.samples.unwrap_or(transmutation::schemes::DEFAULT_SAMPLES).max(16),
    };
    let report = certify(&scheme, params.delta, params.samples);
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            check: c.name,
            passed: c.passed,
            worst_alpha: c.worst_alpha,
            worst_value: c.worst_value,
        })
        .collect();
    let tolerances = report
        .checks
        .iter()
        .map(|c| Tolerance::at_least(format!("{} holds", c.name), if c.passed { 1.0 } else { 0.0 }, 1.0))
        .collect();
    let extra = json!({ "radius": report.radius, "notes": report.notes });
    let mut w = Writer::new(Experiment::SchemesCertify, out, &params, tolerances, extra);
    w.emit("certify.csv", &["check", "passed", "worst_alpha", "worst_value"], &rows)?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct KernelParams {
    scheme: String,
    tau: f64,
    delta: f64,
    eps: f64,
    #[serde(rename = "T")]
    t_final: f64,
    grid: usize,
    tau_ladder: Vec<f64>,
    point: [f64; 2],
    trials: usize,
    seed: u64,
    window_margin: Option<f64>,
}

#[derive(Serialize)]
struct DecayRow {
    kernel: &'static str,
    t: f64,
    s: f64,
    tau: f64,
    abs: f64,
    floor: f64,
}

fn kernel_config(scheme: Scheme, tau: f64, delta: f64, eps: f64, margin: Option<f64>) -> Result<KernelConfig, CliError> {
    let c = KernelConfig::new(scheme, tau, delta, eps)?;
    Ok(match margin {
        Some(m) => c.with_window_margin(m)?,
        None => c,
    })
}

fn kernel_eval(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let scheme = scheme(cfg)?;
    let params = KernelParams {
        scheme: scheme.name().to_string(),
        tau: positive("tau", cfg.tau.unwrap_or(0.01))?,
        delta: cfg.delta.unwrap_or(1.0),
        eps: cfg.eps.unwrap_or(0.5),
        t_final: positive("T", cfg.t_final.unwrap_or(1.0))?,
        grid: cfg.grid.unwrap_or(41).max(2),
        tau_ladder: ladder(cfg, &[0.02, 0.01, 0.005, 0.0025])?,
        point: cfg.point.unwrap_or([0.2, 2.0]),
        trials: cfg.trials.unwrap_or(100),
        seed: cfg.seed.unwrap_or(0),
        window_margin: cfg.window_margin,
    };
    let kc = kernel_config(scheme.clone(), params.tau, params.delta, params.eps, params.window_margin)?;

    let n = params.grid;
    let (t_max, s_max) = (params.t_final, 2.0 * params.t_final);
    let points: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| (t_max * i as f64 / (n - 1) as f64, s_max * j as f64 / (n - 1) as f64))
        })
        .collect();
    let heat = evaluate_points(&kc, KernelKind::Rho, &points)?;

    let [pt, ps] = params.point;
    let mut decay_rows = Vec::new();
    let mut tolerances = Vec::new();
    for (kind, label, t, s) in [(KernelKind::Rho, "rho", pt, ps), (KernelKind::Q, "q", ps, pt)] {
        let p = decay_profile(&DecaySetup {
            scheme: scheme.clone(),
            delta: params.delta,
            eps: params.eps,
            kind,
            t,
            s,
            taus: params.tau_ladder.clone(),
        })?;
        for i in 0..p.taus.len() {
            decay_rows.push(DecayRow {
                kernel: label,
                t,
                s,
                tau: p.taus[i],
                abs: p.values[i],
                floor: p.floors[i],
            });
        }
        tolerances.push(Tolerance::at_least(
            format!("{label} decay slope at ({t}, {s})"),
            p.slope.unwrap_or(f64::NAN),
            DECAY_MIN_SLOPE,
        ));
    }

    let norms = operator_norm_check(&kc, params.trials, params.seed)?;
    tolerances.push(Tolerance::at_most(
        "forward operator norm / bound",
        norms.forward_measured / norms.forward_bound,
        1.0 + NORM_REL_TOL,
    ));
    tolerances.push(Tolerance::at_most(
        "reverse operator norm / bound",
        norms.reverse_measured / norms.reverse_bound,
        1.0 + NORM_REL_TOL,
    ));
    let extra = json!({ "operator_norms": norms, "fprime": { "inf": kc.fprime().inf, "sup": kc.fprime().sup } });
    let mut w = Writer::new(Experiment::KernelEval, out, &params, tolerances, extra);
    w.emit("kernel_heatmap.csv", &["t", "s", "re", "im", "abs"], &heat)?;
    w.emit("kernel_decay.csv", &["kernel", "t", "s", "tau", "abs", "floor"], &decay_rows)?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct ReconstructParams {
    scheme: String,
    tau: f64,
    delta: f64,
    eps: f64,
    modes: i64,
    seed: u64,
    window_margin: Option<f64>,
}

#[derive(Serialize)]
struct ErrorRow {
    direction: &'static str,
    time: f64,
    error: f64,
    quadrature_error: f64,
    truncation_tail: f64,
}

fn reconstruct(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let scheme = scheme(cfg)?;
    let params = ReconstructParams {
        scheme: scheme.name().to_string(),
        tau: positive("tau", cfg.tau.unwrap_or(0.01))?,
        delta: cfg.delta.unwrap_or(1.0),
        eps: cfg.eps.unwrap_or(0.5),
        modes: cfg.modes.unwrap_or(64),
        seed: cfg.seed.unwrap_or(0),
        window_margin: cfg.window_margin,
    };
    if params.modes < 1 {
        return Err(invalid(format!("spectrum truncation N = {} must be at least 1", params.modes)));
    }
    let kc = kernel_config(scheme.clone(), params.tau, params.delta, params.eps, params.window_margin)?;
    let spec = Arc::new(make_transport_spectrum(params.modes)?);
    let band = FilterBand::up_to(params.delta / params.tau)?;
    if spec.band_indices(&band).is_empty() {
        return Err(invalid("the filtered class |mu tau| <= delta selects no mode of the spectrum"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let y0 = State::random_in_band(spec, &band, &mut rng);

    let mut rows = Vec::new();
    for i in 1..=9 {
        let t = 0.1 * i as f64;
        let r = transmute_forward(&kc, &y0, t)?;
        rows.push(ErrorRow {
            direction: "forward",
            time: t,
            error: r.state.relative_distance(&evolve_continuous(&y0, t))?,
            quadrature_error: r.quadrature_error,
            truncation_tail: r.truncation_tail,
        });
    }
    for k in [1i64, 10, 100] {
        let r = transmute_reverse(&kc, &y0, k)?;
        rows.push(ErrorRow {
            direction: "reverse",
            time: k as f64,
            error: r.state.relative_distance(&evolve_discrete(&y0, k, &scheme, params.tau)?)?,
            quadrature_error: r.quadrature_error,
            truncation_tail: r.truncation_tail,
        });
    }
    let worst = |dir: &str| rows.iter().filter(|r| r.direction == dir).map(|r| r.error).fold(0.0, f64::max);
    let tolerances = vec![
        Tolerance::at_most("forward max relative error", worst("forward"), REPRESENTATION_TOL),
        Tolerance::at_most("reverse max relative error", worst("reverse"), REPRESENTATION_TOL),
    ];
    let mut w = Writer::new(Experiment::Reconstruct, out, &params, tolerances, json!({ "N": params.modes }));
    w.emit(
        "reconstruct.csv",
        &["direction", "time", "error", "quadrature_error", "truncation_tail"],
        &rows,
    )?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct SweepParams {
    scheme: String,
    delta: f64,
    #[serde(rename = "T")]
    t_final: f64,
    #[serde(rename = "T0")]
    t0: f64,
    tau_ladder: Vec<f64>,
}

fn observability_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let scheme = scheme(cfg)?;
    let params = SweepParams {
        scheme: scheme.name().to_string(),
        delta: band_in_domain(&scheme, cfg.delta.unwrap_or(2.0))?,
        t_final: positive("T", cfg.t_final.unwrap_or(2.4))?,
        t0: positive("T0", cfg.t0.unwrap_or(1.0))?,
        tau_ladder: ladder(cfg, &DEFAULT_LADDER)?,
    };
    let threshold = uniform_time_threshold(&scheme, params.delta, params.t0)?;
    let rows = uniformity_sweep(transport_family(params.delta), &scheme, params.delta, params.t_final, &params.tau_ladder)?;
    let c: Vec<f64> = rows.iter().map(|r| r.c_obs).collect();
    let tolerances = regime_tolerances("C_obs", params.t_final, threshold, &params.tau_ladder, &c);
    let extra = json!({ "threshold": threshold, "regime": regime(params.t_final, threshold) });
    let mut w = Writer::new(Experiment::ObservabilitySweep, out, &params, tolerances, extra);
    w.emit("obs_sweep.csv", &["tau", "T", "delta", "lambda_min", "lambda_max", "C_obs", "modes"], &rows)?;
    Ok(w.finish())
}

fn regime(t_final: f64, threshold: f64) -> &'static str {
    if t_final > threshold {
        "above threshold"
    } else if t_final < threshold {
        "below threshold"
    } else {
        "at threshold"
    }
}

#[derive(Serialize)]
struct SharpnessParams {
    delta: f64,
    x0: f64,
    radius: f64,
    tau_ladder: Vec<f64>,
    grid: usize,
}

#[derive(Serialize)]
struct PacketRow {
    tau: f64,
    modes: i64,
    norm_ratio: f64,
    outside_mass: f64,
}

fn sharpness(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let params = SharpnessParams {
        delta: positive("delta", cfg.delta.unwrap_or(1.0))?,
        x0: interior_point(cfg.x0.unwrap_or(0.5))?,
        radius: positive("radius", cfg.radius.unwrap_or(0.3))?,
        tau_ladder: ladder(cfg, &[1e-2, 1e-3, 1e-4])?,
        grid: cfg.grid.unwrap_or(PACKET_GRID),
    };
    if params.radius >= 0.5 {
        return Err(invalid(format!("radius = {} leaves nothing outside the ball on the unit circle", params.radius)));
    }
    let profile = PacketProfile::default();
    let mut rows = Vec::new();
    for &tau in &params.tau_ladder {
        let n = packet_truncation(tau, params.delta);
        let spec = Arc::new(make_transport_spectrum(n)?);
        let y = sharpness_packet(&spec, tau, params.delta, params.x0, &profile)?;
        rows.push(PacketRow {
            tau,
            modes: n,
            norm_ratio: 2.0 * PI * y.norm().powi(2),
            outside_mass: packet_outside_mass(&y, params.x0, params.radius, params.grid)?,
        });
    }
    let finest = rows
        .iter()
        .min_by(|a, b| a.tau.total_cmp(&b.tau))
        .expect("ladder is not empty");
    let mut tolerances = vec![Tolerance::at_most(
        format!("|2 pi ||y0||^2 - 1| at tau={}", finest.tau),
        (finest.norm_ratio - 1.0).abs(),
        PACKET_NORM_TOL,
    )];
    if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.tau.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.outside_mass.ln()).collect();
        tolerances.push(Tolerance::at_least("outside-mass decay slope", least_squares_slope(&xs, &ys), PACKET_MIN_SLOPE));
    }
    let mut w = Writer::new(Experiment::Sharpness, out, &params, tolerances, json!({ "profile_sigma": 0.2 }));
    w.emit("sharpness.csv", &["tau", "modes", "norm_ratio", "outside_mass"], &rows)?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct InghamParams {
    scheme: String,
    delta: f64,
    #[serde(rename = "T")]
    t_final: f64,
    gap: f64,
    tau_ladder: Vec<f64>,
}

fn ingham(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let scheme = scheme(cfg)?;
    let params = InghamParams {
        scheme: scheme.name().to_string(),
        delta: band_in_domain(&scheme, cfg.delta.unwrap_or(1.0))?,
        t_final: positive("T", cfg.t_final.unwrap_or(1.5))?,
        gap: 2.0 * PI,
        tau_ladder: ladder(cfg, &DEFAULT_LADDER)?,
    };
    let inf = band_inf_sup_fprime(&scheme, params.delta)?.inf;
    let threshold = 2.0 * PI / (params.gap * inf);
    let rows = params
        .tau_ladder
        .iter()
        .map(|&tau| {
            let freqs = integer_lattice_frequencies(tau, params.delta);
            ingham_bounds(&freqs, params.gap, &scheme, tau, params.delta, params.t_final)
        })
        .collect::<Result<Vec<_>, _>>()?;
    // the lower bound shrinks below the threshold, so track its inverse
    let inverse: Vec<f64> = rows.iter().map(|r| 1.0 / r.c_lower).collect();
    let tolerances = regime_tolerances("1/c_lower", params.t_final, threshold, &params.tau_ladder, &inverse);
    let extra = json!({ "threshold": threshold, "regime": regime(params.t_final, threshold) });
    let mut w = Writer::new(Experiment::Ingham, out, &params, tolerances, extra);
    w.emit("ingham.csv", &["tau", "T", "c_lower", "c_upper", "modes"], &rows)?;
    Ok(w.finish())
}

#[derive(Serialize)]
struct WeakParams {
    scheme: &'static str,
    x0: f64,
    delta: f64,
    #[serde(rename = "T")]
    t_final: f64,
    tau_ladder: Vec<f64>,
    liouville_r: f64,
    liouville_j: u64,
}

fn weak_obs(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    if let Some(name) = cfg.scheme.as_deref() {
        let s = Scheme::from_name(name)?;
        if s.name() != "midpoint" && s.name() != "newmark:0.25" {
            return Err(invalid(format!(
                "weak-obs discretizes the string with Newmark beta = 1/4 only, got {}",
                s.name()
            )));
        }
    }
    let params = WeakParams {
        scheme: "newmark:0.25",
        x0: interior_point(cfg.x0.unwrap_or(2f64.sqrt() - 1.0))?,
        delta: positive("delta", cfg.delta.unwrap_or(1.0))?,
        t_final: positive("T", cfg.t_final.unwrap_or(2.6))?,
        tau_ladder: ladder(cfg, &DEFAULT_LADDER)?,
        liouville_r: cfg.liouville_r.unwrap_or(-2.0),
        liouville_j: cfg.liouville_j.unwrap_or(10_000),
    };
    let l = liouville_check(params.x0, params.liouville_r, params.liouville_j)?;
    if !l.passed {
        return Err(invalid(format!(
            "x0 = {} fails the Diophantine condition (1 + (j pi)^2)^(r/2) <= C sin^2(j pi x0) with r = {} up to J = {}{}",
            params.x0,
            params.liouville_r,
            params.liouville_j,
            l.first_failure.map(|j| format!(" (sin(j pi x0) vanishes at j = {j})")).unwrap_or_default()
        )));
    }
    let threshold = 2.0 * (1.0 + params.delta * params.delta / 4.0);
    let rows = weak_obs_sweep(params.x0, params.delta, params.t_final, &params.tau_ladder)?;
    let inverse: Vec<f64> = rows.iter().map(|r| 1.0 / r.lambda_min).collect();
    let tolerances = regime_tolerances("1/lambda_min", params.t_final, threshold, &params.tau_ladder, &inverse);
    let extra = json!({ "threshold": threshold, "regime": regime(params.t_final, threshold), "liouville": l });
    let mut w = Writer::new(Experiment::WeakObs, out, &params, tolerances, extra);
    w.emit("weak_obs.csv", &["tau", "T", "delta", "lambda_min", "lambda_max", "modes"], &rows)?;
    Ok(w.finish())
}
