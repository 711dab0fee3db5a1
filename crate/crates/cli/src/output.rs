//! Run directories: what `run` writes and `analyze` reads back.
//!
//! ```text
//! scenario.toml         resolved scenario
//! metrics.json
//! traces.{csv,jsonl}    step, time, switch, vc, il, duty
//! spectrum.csv          steady-state switch spectrum, dB re DC
//! gap_history.csv       time, gap, center
//! baseline.json         PWM duty, frequency and grid rate (if enabled)
//! baseline_traces.*     grid samples of the PWM run
//! baseline_spectrum.csv
//! gap_track.csv         per spectrogram column (moving gap only)
//! snapshots.csv         controller spectrum magnitudes (if requested)
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use spectral_mpc::pwm::PwmRun;
use spectral_mpc::scenario::{Scenario, SweepParameter};
use spectral_mpc::sim::{self, Baseline, RunArtifacts, RunMetrics, Traces};

use crate::Format;

#[derive(Serialize, Deserialize)]
struct TraceRow {
    step: usize,
    time: f64,
    switch: u8,
    vc: f64,
    il: f64,
    duty: f64,
}

#[derive(Serialize, Deserialize)]
struct BaselineRow {
    time: f64,
    switch: u8,
    vc: f64,
    il: f64,
}

#[derive(Serialize, Deserialize)]
struct BaselineInfo {
    duty: f64,
    frequency: f64,
    sample_rate: f64,
}

#[derive(Serialize, Deserialize)]
struct GapRow {
    time: f64,
    gap: usize,
    center: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    frequency: f64,
    power_db: f64,
}

#[derive(Serialize)]
struct TrackRow {
    time: f64,
    center: f64,
    depth_db: f64,
}

fn write_rows<T: Serialize>(path_stem: &Path, format: Format, rows: impl Iterator<Item = T>) -> Result<()> {
    match format {
        Format::Csv => {
            let path = path_stem.with_extension("csv");
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let path = path_stem.with_extension("jsonl");
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?);
            for r in rows {
                serde_json::to_writer(&mut w, &r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path_stem: &Path) -> Result<Option<Vec<T>>> {
    let csv_path = path_stem.with_extension("csv");
    let jsonl_path = path_stem.with_extension("jsonl");
    if csv_path.exists() {
        let mut r = csv::Reader::from_path(&csv_path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
        Ok(Some(rows))
    } else if jsonl_path.exists() {
        let rows = BufReader::new(File::open(&jsonl_path)?)
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect::<Result<Vec<T>>>()?;
        Ok(Some(rows))
    } else {
        Ok(None)
    }
}

pub fn write_metrics(path: &Path, metrics: &RunMetrics) -> Result<()> {
    let mut text = serde_json::to_string_pretty(metrics)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_spectrum(path: &Path, s: &spectral_mpc::analysis::PowerSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for k in 0..s.len() {
        w.serialize(SpectrumRow {
            frequency: s.frequency(k),
            power_db: s.db(k),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_run(dir: &Path, artifacts: &RunArtifacts, metrics: &RunMetrics, format: Format) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let sc = &artifacts.scenario;
    fs::write(dir.join("scenario.toml"), sc.to_toml_string())?;
    write_metrics(&dir.join("metrics.json"), metrics)?;

    let tr = &artifacts.traces;
    let dt = 1.0 / sc.control.fc;
    write_rows(
        &dir.join("traces"),
        format,
        (0..tr.len()).map(|k| TraceRow {
            step: k,
            time: (k + 1) as f64 * dt,
            switch: u8::from(tr.switch[k]),
            vc: tr.vc[k],
            il: tr.il[k],
            duty: tr.duty[k],
        }),
    )?;
    let mut w = csv::Writer::from_path(dir.join("gap_history.csv"))?;
    for &(time, gap, center) in &artifacts.gap_history {
        w.serialize(GapRow { time, gap, center })?;
    }
    w.flush()?;

    let skip = sim::steady_start(tr.len(), sc.analysis.steady_state_fraction);
    if tr.len() - skip >= sc.segment() {
        write_spectrum(&dir.join("spectrum.csv"), &sim::switch_spectrum(sc, &tr.switch[skip..])?)?;
    }

    if let Some(b) = &artifacts.baseline {
        let info = BaselineInfo {
            duty: b.duty,
            frequency: b.frequency,
            sample_rate: b.run.sample_rate,
        };
        fs::write(dir.join("baseline.json"), serde_json::to_string_pretty(&info)? + "\n")?;
        let h = 1.0 / b.run.sample_rate;
        write_rows(
            &dir.join("baseline_traces"),
            format,
            (0..b.run.switch.len()).map(|k| BaselineRow {
                time: (k + 1) as f64 * h,
                switch: u8::from(b.run.switch[k]),
                vc: b.run.vc[k],
                il: b.run.il[k],
            }),
        )?;
        write_spectrum(&dir.join("baseline_spectrum.csv"), &sim::baseline_spectrum(sc, b)?)?;
    }

    if let Some(m) = &metrics.moving_gap {
        let mut w = csv::Writer::from_path(dir.join("gap_track.csv"))?;
        for &(time, center, depth_db) in &m.track {
            w.serialize(TrackRow { time, center, depth_db })?;
        }
        w.flush()?;
    }

    if !artifacts.snapshots.is_empty() {
        let mut w = BufWriter::new(File::create(dir.join("snapshots.csv"))?);
        let bins = artifacts.snapshots[0].magnitudes.len();
        write!(w, "time")?;
        for n in 0..bins {
            write!(w, ",bin{n}")?;
        }
        writeln!(w)?;
        for s in &artifacts.snapshots {
            write!(w, "{}", s.time)?;
            for m in &s.magnitudes {
                write!(w, ",{m}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Rebuilds the artifacts `analyze` needs from a run directory.
pub fn read_run(dir: &Path) -> Result<RunArtifacts> {
    let text = fs::read_to_string(dir.join("scenario.toml"))
        .with_context(|| format!("reading {}", dir.join("scenario.toml").display()))?;
    let scenario = Scenario::from_toml_str(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let Some(rows) = read_rows::<TraceRow>(&dir.join("traces"))? else {
        bail!("no traces.csv or traces.jsonl in {}", dir.display());
    };
    let mut traces = Traces::default();
    for r in rows {
        traces.switch.push(r.switch != 0);
        traces.vc.push(r.vc);
        traces.il.push(r.il);
        traces.duty.push(r.duty);
    }
    let gap_history = match fs::metadata(dir.join("gap_history.csv")) {
        Ok(_) => csv::Reader::from_path(dir.join("gap_history.csv"))?
            .deserialize::<GapRow>()
            .map(|r| r.map(|r| (r.time, r.gap, r.center)))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        Err(_) => Vec::new(),
    };
    let baseline = if dir.join("baseline.json").exists() {
        let info: BaselineInfo = serde_json::from_str(&fs::read_to_string(dir.join("baseline.json"))?)?;
        let Some(rows) = read_rows::<BaselineRow>(&dir.join("baseline_traces"))? else {
            bail!("baseline.json without baseline traces in {}", dir.display());
        };
        let mut run = PwmRun {
            sample_rate: info.sample_rate,
            ..PwmRun::default()
        };
        for r in rows {
            run.switch.push(r.switch != 0);
            run.vc.push(r.vc);
            run.il.push(r.il);
        }
        Some(Baseline {
            duty: info.duty,
            frequency: info.frequency,
            run,
        })
    } else {
        None
    };
    Ok(RunArtifacts {
        scenario,
        traces,
        snapshots: Vec::new(),
        baseline,
        gap_history,
        slides: 0,
        resyncs: 0,
    })
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    parameter: String,
    value: &'a str,
    name: &'a str,
    avg_switching_frequency: f64,
    distortion_power: Option<f64>,
    filtered_distortion_power: Option<f64>,
    ripple_variance: f64,
    ripple_peak_to_peak: f64,
    mean_vc: f64,
    sfdr_db: Option<f64>,
    max_run_length: usize,
    k_max_violations: usize,
}

pub fn write_aggregate(path: &Path, parameter: SweepParameter, rows: &[(String, &RunMetrics)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (value, m) in rows {
        w.serialize(AggregateRow {
            parameter: parameter.to_string(),
            value,
            name: &m.name,
            avg_switching_frequency: m.avg_switching_frequency,
            distortion_power: m.distortion_power,
            filtered_distortion_power: m.filtered_distortion_power,
            ripple_variance: m.ripple.variance,
            ripple_peak_to_peak: m.ripple.peak_to_peak,
            mean_vc: m.mean_vc,
            sfdr_db: m.spectrum.as_ref().map(|s| s.sfdr_db),
            max_run_length: m.max_run_length,
            k_max_violations: m.k_max_violations,
        })?;
    }
    w.flush()?;
    Ok(())
}
