//! `eegprobe psd`: channel-mean Welch spectra per record, grouped means
//! with confidence bands, and the class difference spectrum, as CSV and an
//! optional SVG figure.

use std::collections::BTreeMap;
use std::path::Path;

use eegprobe::io::{fmt_f64, write_csv, Band, LinePlot, Series};
use eegprobe::spectral::{class_difference, group_ci, welch_psd, GroupSpectrum};
use eegprobe::Error;

use super::{load_dataset_file, write_run_record};
use crate::config::{parse_band, Settings};
use crate::CliError;

#[derive(clap::Args)]
pub struct PsdArgs {
    /// Config file of key=value lines; command-line flags take precedence
    #[arg(long)]
    config: Option<String>,
    /// Input dataset path
    #[arg(long)]
    data: Option<String>,
    /// Group records by class or subject
    #[arg(long)]
    group_by: Option<String>,
    /// Welch window length in samples (default: one second)
    #[arg(long)]
    window: Option<usize>,
    /// Welch window overlap fraction
    #[arg(long)]
    overlap: Option<f64>,
    /// Restrict the frequency axis to LO:HI
    #[arg(long)]
    band: Option<String>,
    /// Output CSV path
    #[arg(long)]
    out: Option<String>,
    /// Optional SVG figure path
    #[arg(long)]
    svg: Option<String>,
}

struct Group {
    name: String,
    mean: Vec<f64>,
    ci: Option<GroupSpectrum>,
}

fn grouped_spectra(
    group_by: Option<&str>,
    labels: &[u8],
    subjects: &[u32],
    spectra: Vec<Vec<f64>>,
) -> Result<Vec<(String, Vec<Vec<f64>>)>, CliError> {
    match group_by {
        None => Ok(vec![("all".to_string(), spectra)]),
        Some("class") => {
            let mut classes: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
            for (label, row) in labels.iter().zip(spectra) {
                match label {
                    0 | 1 => classes[*label as usize].push(row),
                    other => {
                        return Err(CliError::Fail(Error::InvalidDataset(format!(
                            "cannot group by class: record has label {other}"
                        ))))
                    }
                }
            }
            let [zero, one] = classes;
            Ok([("class0", zero), ("class1", one)]
                .into_iter()
                .filter(|(_, rows)| !rows.is_empty())
                .map(|(name, rows)| (name.to_string(), rows))
                .collect())
        }
        Some("subject") => {
            let mut by_subject: BTreeMap<u32, Vec<Vec<f64>>> = BTreeMap::new();
            for (id, row) in subjects.iter().zip(spectra) {
                by_subject.entry(*id).or_default().push(row);
            }
            Ok(by_subject
                .into_iter()
                .map(|(id, rows)| (format!("subject{id}"), rows))
                .collect())
        }
        Some(other) => Err(CliError::Usage(format!(
            "unknown group {other:?}; expected class or subject"
        ))),
    }
}

pub fn run(args: PsdArgs) -> Result<(), CliError> {
    let mut s = Settings::load(args.config.as_deref(), "psd")?;
    let data = s.require::<String>("data", args.data)?;
    let group_by = s.get_opt::<String>("group_by", args.group_by)?;
    let band = s.get_opt::<String>("band", args.band)?;
    let out = s.require::<String>("out", args.out)?;
    let svg = s.get_opt::<String>("svg", args.svg)?;

    let file = load_dataset_file(&data)?;
    if file.records.is_empty() {
        return Err(CliError::Fail(Error::InvalidDataset(
            "dataset has no records".into(),
        )));
    }
    let window = s.get("window", args.window, file.fs.round() as usize)?;
    let overlap = s.get("overlap", args.overlap, 0.5f64)?;
    let record = s.finish()?;

    let band = band.as_deref().map(parse_band).transpose()?;
    let mut frequencies = Vec::new();
    let mut spectra = Vec::with_capacity(file.records.len());
    for r in &file.records {
        let result = welch_psd(&r.data, file.fs, window, overlap)?;
        frequencies = result.frequencies;
        spectra.push(result.channel_mean);
    }
    let labels: Vec<u8> = file.records.iter().map(|r| r.label).collect();
    let subjects: Vec<u32> = file.records.iter().map(|r| r.subject_id).collect();

    let mut groups = Vec::new();
    for (name, rows) in grouped_spectra(group_by.as_deref(), &labels, &subjects, spectra)? {
        let group = if rows.len() >= 2 {
            let ci = group_ci(&frequencies, &rows)?;
            Group {
                name,
                mean: ci.mean.clone(),
                ci: Some(ci),
            }
        } else {
            Group {
                name,
                mean: rows.into_iter().next().expect("group is nonempty"),
                ci: None,
            }
        };
        groups.push(group);
    }

    let difference = if group_by.as_deref() == Some("class") && groups.len() == 2 {
        let as_spectrum = |g: &Group| match &g.ci {
            Some(ci) => ci.clone(),
            None => GroupSpectrum {
                frequencies: frequencies.clone(),
                mean: g.mean.clone(),
                lower: g.mean.clone(),
                upper: g.mean.clone(),
                n: 1,
            },
        };
        Some(class_difference(
            &as_spectrum(&groups[0]),
            &as_spectrum(&groups[1]),
        )?)
    } else {
        None
    };

    let in_band = |f: f64| band.map_or(true, |(lo, hi)| f >= lo && f <= hi);
    let mut rows = Vec::new();
    for g in &groups {
        for (i, &f) in frequencies.iter().enumerate() {
            if !in_band(f) {
                continue;
            }
            let (lower, upper) = match &g.ci {
                Some(ci) => (fmt_f64(ci.lower[i]), fmt_f64(ci.upper[i])),
                None => (String::new(), String::new()),
            };
            rows.push(vec![
                g.name.clone(),
                fmt_f64(f),
                fmt_f64(g.mean[i]),
                lower,
                upper,
            ]);
        }
    }
    if let Some(diff) = &difference {
        for (i, &f) in frequencies.iter().enumerate() {
            if !in_band(f) {
                continue;
            }
            rows.push(vec![
                "difference".to_string(),
                fmt_f64(f),
                fmt_f64(diff[i]),
                String::new(),
                String::new(),
            ]);
        }
    }
    write_csv(
        Path::new(&out),
        &["group", "frequency", "mean", "lower", "upper"],
        &rows,
    )?;
    write_run_record(&out, &record)?;

    if let Some(svg_path) = svg {
        let keep: Vec<usize> = (0..frequencies.len())
            .filter(|&i| in_band(frequencies[i]))
            .collect();
        let select = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let x = select(&frequencies);
        let mut plot = LinePlot::new(
            "Mean power spectral density",
            "Frequency (Hz)",
            "Power (dB/Hz)",
        );
        for g in &groups {
            plot.series.push(Series {
                name: g.name.clone(),
                x: x.clone(),
                y: select(&g.mean),
            });
            if let Some(ci) = &g.ci {
                plot.bands.push(Band {
                    x: x.clone(),
                    lower: select(&ci.lower),
                    upper: select(&ci.upper),
                });
            }
        }
        if let Some(diff) = &difference {
            plot.series.push(Series {
                name: "difference".to_string(),
                x: x.clone(),
                y: select(diff),
            });
        }
        std::fs::write(Path::new(&svg_path), plot.render()?).map_err(Error::from)?;
    }

    println!("wrote {} spectrum rows to {out}", rows.len());
    Ok(())
}
