use std::f64::consts::PI;
use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;

use gkpsim::cv_qec::{run_qec_simulation, sqrt_pi};
use gkpsim::gaussian_states::approx_codeword;
use gkpsim::metrics::{delta_from_db, squeezed_vac_error, squeezed_vac_photons};
use gkpsim::protocols::{build_feedback_table, deviation_survey, error_histogram};
use gkpsim::pulses::{controlled_displacement_summary, design_pulse, DispersiveParams, DisplacementSummary};
use gkpsim::shift_expansion::{expand_annihilation, fock_residual_norm, split_correctable};
use gkpsim::state_synthesis::average_photons_over_theta;
use gkpsim::{FeedbackTable, Protocol, Quadrature};
use serde::Serialize;

use crate::args::{
    parse_sweep, ExpandArgs, ExperimentConfig, HistogramArgs, PhotonsArgs, PulseArgs, QecArgs, ReproduceArgs,
    SqueezeArgs, SurveyArgs, TableArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{create, csv_header, num, open, Meta};

/// Largest per-round record count `qec` will hold in memory.
pub const MAX_QEC_ROUNDS: usize = 10_000_000;

pub fn run(cfg: &ExperimentConfig) -> CliResult<()> {
    cfg.validate()?;
    match cfg {
        ExperimentConfig::Table(a) => table(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Survey(a) => survey(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Histogram(a) => histogram(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Photons(a) => photons(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Squeeze(a) => squeeze(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Expand(a) => expand(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Qec(a) => qec(cfg, a, &mut *open(a.out.as_deref(), "csv")?),
        ExperimentConfig::Pulse(a) => pulse(cfg, a, &mut *open(a.out.as_deref(), "json")?),
        ExperimentConfig::ReproduceAll(a) => reproduce_all(a),
    }
}

fn feedback_for(protocol: Protocol, rounds: usize, path: Option<&Path>) -> CliResult<Option<FeedbackTable>> {
    if protocol != Protocol::Adaptive {
        return Ok(None);
    }
    let table = match path {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| CliError::config("table", format!("{}: {e}", p.display())))?;
            FeedbackTable::read_csv(BufReader::new(file))?
        }
        None => build_feedback_table(rounds)?,
    };
    Ok(Some(table))
}

fn table(cfg: &ExperimentConfig, a: &TableArgs, w: &mut dyn Write) -> CliResult<()> {
    let t = build_feedback_table(a.depth)?;
    csv_header(w, cfg, &[])?;
    t.write_csv(&mut *w)?;
    w.flush()?;
    Ok(())
}

fn survey(cfg: &ExperimentConfig, a: &SurveyArgs, w: &mut dyn Write) -> CliResult<()> {
    let t = feedback_for(a.protocol, a.rounds, a.table.as_deref())?;
    let curve = deviation_survey(a.protocol, a.rounds, a.samples, a.seed, t.as_ref())?;
    csv_header(w, cfg, &[])?;
    writeln!(w, "epsilon,survival")?;
    for (e, s) in curve.epsilon.iter().zip(&curve.survival) {
        writeln!(w, "{},{}", num(*e), num(*s))?;
    }
    w.flush()?;
    Ok(())
}

fn histogram(cfg: &ExperimentConfig, a: &HistogramArgs, w: &mut dyn Write) -> CliResult<()> {
    let t = feedback_for(a.protocol, a.rounds, a.table.as_deref())?;
    let h = error_histogram(a.protocol, a.rounds, a.bin, t.as_ref())?;
    csv_header(
        w,
        cfg,
        &[("outcomes", h.entries.len().to_string()), ("mass_below_0.01", num(h.mass_below(0.01)))],
    )?;
    writeln!(w, "bin_lo,bin_hi,probability")?;
    for (i, p) in h.bins.iter().enumerate() {
        let hi = (h.bin_width * (i + 1) as f64).min(gkpsim::protocols::HISTOGRAM_CEILING);
        writeln!(w, "{},{},{}", num(h.bin_width * i as f64), num(hi), num(*p))?;
    }
    writeln!(w, "{},inf,{}", num(gkpsim::protocols::HISTOGRAM_CEILING), num(h.overflow))?;
    w.flush()?;
    Ok(())
}

fn photons(cfg: &ExperimentConfig, a: &PhotonsArgs, w: &mut dyn Write) -> CliResult<()> {
    let t = feedback_for(a.protocol, a.rounds, a.table.as_deref())?;
    let step = if a.protocol == Protocol::Nonadaptive { 2 } else { 1 };
    let rows: Vec<(usize, f64, f64)> = (0..=a.rounds)
        .step_by(step)
        .map(|m| {
            let (mean, std) = average_photons_over_theta(a.protocol, m, a.delta, t.as_ref())?;
            Ok((m, mean, std))
        })
        .collect::<gkpsim::Result<_>>()?;
    csv_header(w, cfg, &[])?;
    writeln!(w, "M,mean,std")?;
    for (m, mean, std) in rows {
        writeln!(w, "{m},{},{}", num(mean), num(std))?;
    }
    w.flush()?;
    Ok(())
}

fn squeeze(cfg: &ExperimentConfig, a: &SqueezeArgs, w: &mut dyn Write) -> CliResult<()> {
    let (start, stop, step) = parse_sweep(&a.sweep_db)?;
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    csv_header(w, cfg, &[("p_error", "1 - erf(e^r sqrt(pi)/6), squeezed quadrature".into())])?;
    writeln!(w, "db,delta,p_error,n_photons")?;
    for k in 0..=n {
        let db = start + step * k as f64;
        let delta = delta_from_db(db)?;
        writeln!(
            w,
            "{},{},{},{}",
            num(db),
            num(delta),
            num(squeezed_vac_error(delta)?),
            num(squeezed_vac_photons(delta)?)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn expand(cfg: &ExperimentConfig, a: &ExpandArgs, w: &mut dyn Write) -> CliResult<()> {
    let exp = expand_annihilation(a.delta, a.order)?;
    let residual = fock_residual_norm(&exp, a.nmax)?;
    let split = split_correctable(&exp);
    csv_header(
        w,
        cfg,
        &[
            ("target", exp.describe_target().into()),
            ("step", num(exp.step)),
            ("residual_norm", num(residual)),
            ("correctable_if", format!("{} < {}", split.unit, num(split.cutoff))),
        ],
    )?;
    writeln!(w, "quadrature,step_index,re,im,correctable")?;
    for t in &exp.terms {
        let q = match t.quadrature {
            Quadrature::Q => "q",
            Quadrature::P => "p",
        };
        let ok = split.correctable.contains(t);
        writeln!(w, "{q},{},{},{},{}", t.step_index, num(t.coeff.re), num(t.coeff.im), ok as u8)?;
    }
    w.flush()?;
    Ok(())
}

fn qec(cfg: &ExperimentConfig, a: &QecArgs, w: &mut dyn Write) -> CliResult<()> {
    if a.rounds > MAX_QEC_ROUNDS {
        return Err(gkpsim::Error::Resource(format!("{} rounds exceed {MAX_QEC_ROUNDS}", a.rounds)).into());
    }
    let report = run_qec_simulation(a.rounds, a.bound, a.seed)?;
    csv_header(
        w,
        cfg,
        &[
            ("bound_over_sqrt_pi", num(a.bound / sqrt_pi())),
            ("logical_errors", report.logical_errors.to_string()),
            ("syndrome_flips", report.syndrome_flips.to_string()),
        ],
    )?;
    writeln!(w, "measured_q,measured_p,residual_u,residual_v,logical_flag")?;
    for r in &report.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            num(r.measured_q),
            num(r.measured_p),
            num(r.residual_u),
            num(r.residual_v),
            r.logical_flag as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TimingBudget {
    gate_ns: f64,
    measure_ns: f64,
    round_ns: f64,
    phase_estimation_rounds: usize,
    phase_estimation_us: f64,
    qec_cycle_us: f64,
}

#[derive(Serialize)]
struct PulseReport<'a> {
    meta: Meta<'a>,
    /// Frequencies below are angular and in units of χ.
    chi_units: &'static str,
    omega_r: f64,
    duration: f64,
    duration_ns: f64,
    omega_y: f64,
    omega_y_mhz: f64,
    omega_d: f64,
    summary: DisplacementSummary,
    timing: TimingBudget,
}

fn pulse(cfg: &ExperimentConfig, a: &PulseArgs, w: &mut dyn Write) -> CliResult<()> {
    let params = DispersiveParams::new(a.omega_r_ghz * 1e3 / a.chi_mhz, 1.0)?;
    let p = design_pulse(&params, a.target_gamma)?;
    // T = π/χ with χ = 2π·chi_mhz·1e6 rad/s
    let duration_ns = 1e3 / (2.0 * a.chi_mhz);
    let round_ns = duration_ns + a.measure_ns;
    let rounds = 8;
    let report = PulseReport {
        meta: Meta::new(cfg),
        chi_units: "angular frequencies in units of chi, times in units of 1/chi",
        omega_r: params.omega_r,
        duration: p.duration,
        duration_ns,
        omega_y: p.omega_y,
        omega_y_mhz: p.omega_y * a.chi_mhz,
        omega_d: p.omega_d,
        summary: controlled_displacement_summary(&params, &p),
        timing: TimingBudget {
            gate_ns: duration_ns,
            measure_ns: a.measure_ns,
            round_ns,
            phase_estimation_rounds: rounds,
            phase_estimation_us: rounds as f64 * round_ns / 1e3,
            qec_cycle_us: 2.0 * rounds as f64 * round_ns / 1e3,
        },
    };
    serde_json::to_writer_pretty(&mut *w, &report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_wavefunction(path: &Path, delta: f64, bit: u8) -> CliResult<()> {
    let st = approx_codeword(delta, bit, None)?;
    let mut w = create(path)?;
    writeln!(w, "# gkpsim {}", crate::output::TOOL_VERSION)?;
    writeln!(w, "# approximate codeword bit {bit}, delta {}", num(delta))?;
    writeln!(w, "q,re,im")?;
    for i in -800..=800 {
        let q = 0.01 * i as f64;
        let psi = st.wavefunction_q(q);
        writeln!(w, "{},{},{}", num(q), num(psi.re), num(psi.im))?;
    }
    w.flush()?;
    Ok(())
}

fn write_wigner(path: &Path, delta: f64) -> CliResult<()> {
    let st = approx_codeword(delta, 0, None)?;
    let mut w = create(path)?;
    writeln!(w, "# gkpsim {}", crate::output::TOOL_VERSION)?;
    writeln!(w, "# Wigner function of codeword bit 0, delta {}", num(delta))?;
    writeln!(w, "q,p,w")?;
    let grid: Vec<f64> = (-120..=120).map(|i| 0.05 * i as f64).collect();
    for &q in &grid {
        for &p in &grid {
            writeln!(w, "{},{},{}", num(q), num(p), num(st.wigner(p, q)))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn to_file(cfg: ExperimentConfig, path: &Path) -> CliResult<()> {
    cfg.validate()?;
    let mut w = create(path)?;
    let w = &mut *w;
    match &cfg {
        ExperimentConfig::Table(a) => table(&cfg, a, w),
        ExperimentConfig::Survey(a) => survey(&cfg, a, w),
        ExperimentConfig::Histogram(a) => histogram(&cfg, a, w),
        ExperimentConfig::Photons(a) => photons(&cfg, a, w),
        ExperimentConfig::Squeeze(a) => squeeze(&cfg, a, w),
        ExperimentConfig::Expand(a) => expand(&cfg, a, w),
        ExperimentConfig::Qec(a) => qec(&cfg, a, w),
        ExperimentConfig::Pulse(a) => pulse(&cfg, a, w),
        ExperimentConfig::ReproduceAll(_) => unreachable!("nested reproduce-all"),
    }
}

/// Every figure dataset, written with `out` left empty in the echoed configs
/// so the directory content does not depend on its location.
pub fn reproduce_all(a: &ReproduceArgs) -> CliResult<()> {
    fs::create_dir_all(&a.dir)?;
    let d = |name: &str| a.dir.join(name);

    write_wavefunction(&d("fig1_code0.csv"), 0.2, 0)?;
    write_wavefunction(&d("fig1_code1.csv"), 0.2, 1)?;
    write_wigner(&d("fig2_wigner_delta0.5.csv"), 0.5)?;
    write_wigner(&d("fig2_wigner_delta0.2.csv"), 0.2)?;

    to_file(ExperimentConfig::Table(TableArgs { depth: 12, out: None }), &d("feedback_table_M12.csv"))?;

    for (m, protocol) in [(4, Protocol::Nonadaptive), (4, Protocol::Adaptive), (8, Protocol::Nonadaptive), (8, Protocol::Adaptive)] {
        let cfg = ExperimentConfig::Survey(SurveyArgs {
            protocol,
            rounds: m,
            samples: a.samples,
            seed: a.seed.wrapping_add(m as u64),
            table: None,
            out: None,
        });
        to_file(cfg, &d(&format!("fig5_{}_M{m}.csv", protocol.name())))?;
    }

    to_file(
        ExperimentConfig::Squeeze(SqueezeArgs { sweep_db: "0:20:0.1".into(), out: None }),
        &d("fig7.csv"),
    )?;

    for protocol in [Protocol::Nonadaptive, Protocol::Adaptive] {
        let cfg = ExperimentConfig::Photons(PhotonsArgs { protocol, rounds: 12, delta: 0.2, table: None, out: None });
        to_file(cfg, &d(&format!("fig9_{}.csv", protocol.name())))?;
    }

    for protocol in [Protocol::Adaptive, Protocol::Nonadaptive] {
        let cfg = ExperimentConfig::Histogram(HistogramArgs { protocol, rounds: 8, bin: 0.002, table: None, out: None });
        to_file(cfg, &d(&format!("fig12_{}_M8.csv", protocol.name())))?;
    }

    to_file(
        ExperimentConfig::Expand(ExpandArgs { delta: 0.01, order: 7, nmax: 50, out: None }),
        &d("expand_delta0.01.csv"),
    )?;
    to_file(
        ExperimentConfig::Qec(QecArgs { rounds: 10_000, bound: 0.99 * PI.sqrt() / 6.0, seed: a.seed, out: None }),
        &d("qec.csv"),
    )?;
    to_file(
        ExperimentConfig::Pulse(PulseArgs {
            chi_mhz: 2.5,
            omega_r_ghz: 10.0,
            target_gamma: (2.0 * PI).sqrt(),
            measure_ns: 300.0,
            out: None,
        }),
        &d("pulse.json"),
    )?;
    Ok(())
}
