//! Static SVG figures drawn from the sweep CSV: GSNR and AIR_n against launch
//! power, one curve per scheme through the seed means of the inner-subcarrier
//! average, with the per-seed values scattered behind it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::SimError;
use crate::experiment::SweepRecord;
use crate::sweep::read_records;

pub const GSNR_PLOT: &str = "gsnr_vs_power.svg";
pub const AIR_PLOT: &str = "air_n_vs_power.svg";

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// One-based indices of the subcarriers that have neighbors on both sides;
/// all of them when there are fewer than three.
pub fn inner_subcarriers(n_subcarriers: usize) -> Vec<usize> {
    if n_subcarriers < 3 {
        (1..=n_subcarriers).collect()
    } else {
        (2..n_subcarriers).collect()
    }
}

/// Inner-subcarrier mean of one metric per (scheme, power, seed).
#[derive(Debug, Clone, Default)]
pub struct InnerMeans {
    /// scheme → power (as text, to keep a stable key) → seed → value
    pub values: BTreeMap<String, BTreeMap<String, BTreeMap<u64, f64>>>,
}

impl InnerMeans {
    pub fn from_records(records: &[SweepRecord], metric: impl Fn(&SweepRecord) -> f64) -> Self {
        let n_sc = records.iter().map(|r| r.subcarrier).max().unwrap_or(0);
        let inner = inner_subcarriers(n_sc);
        let mut sums: BTreeMap<(String, String, u64), (f64, usize)> = BTreeMap::new();
        for r in records.iter().filter(|r| inner.contains(&r.subcarrier)) {
            let e = sums.entry((r.scheme.clone(), format!("{}", r.power_dbm), r.seed)).or_default();
            e.0 += metric(r);
            e.1 += 1;
        }
        let mut values: BTreeMap<String, BTreeMap<String, BTreeMap<u64, f64>>> = BTreeMap::new();
        for ((scheme, power, seed), (sum, count)) in sums {
            values.entry(scheme).or_default().entry(power).or_default().insert(seed, sum / count as f64);
        }
        Self { values }
    }

    /// `(power, seed-mean)` pairs of one scheme sorted by power.
    pub fn curve(&self, scheme: &str) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .values
            .get(scheme)
            .into_iter()
            .flatten()
            .map(|(p, seeds)| (p.parse().unwrap_or(f64::NAN), seeds.values().sum::<f64>() / seeds.len() as f64))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    pub fn scatter(&self, scheme: &str) -> Vec<(f64, f64)> {
        self.values
            .get(scheme)
            .into_iter()
            .flatten()
            .flat_map(|(p, seeds)| {
                let power: f64 = p.parse().unwrap_or(f64::NAN);
                seeds.values().map(move |&v| (power, v))
            })
            .collect()
    }
}

fn padded_range(values: impl Iterator<Item = f64>) -> std::ops::Range<f64> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return 0.0..1.0;
    }
    let pad = ((hi - lo) * 0.08).max(0.05);
    (lo - pad)..(hi + pad)
}

fn draw(path: &Path, means: &InnerMeans, y_label: &str) -> Result<(), SimError> {
    let plot_err = |e: &dyn std::fmt::Display| SimError::Plot(format!("{}: {e}", path.display()));
    let all: Vec<(f64, f64)> = means.values.keys().flat_map(|s| means.scatter(s)).collect();
    let x_range = padded_range(all.iter().map(|p| p.0));
    let y_range = padded_range(all.iter().map(|p| p.1));

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x_range, y_range)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("launch power (dBm)")
        .y_desc(y_label)
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (i, scheme) in means.values.keys().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(means.scatter(scheme).into_iter().map(|p| Circle::new(p, 2, color.mix(0.45).filled())))
            .map_err(|e| plot_err(&e))?;
        let curve = means.curve(scheme);
        chart
            .draw_series(LineSeries::new(curve.clone(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(scheme.to_uppercase())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart
            .draw_series(curve.into_iter().map(|p| Circle::new(p, 4, color.filled())))
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Writes both figures for `csv` into `out_dir` and returns their paths.
pub fn plot_csv(csv: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    let records = read_records(csv)?;
    if records.is_empty() {
        return Err(SimError::Plot(format!("{} holds no records", csv.display())));
    }
    let gsnr = out_dir.join(GSNR_PLOT);
    draw(&gsnr, &InnerMeans::from_records(&records, |r| r.gsnr_db), "GSNR (dB), inner subcarriers")?;
    let air = out_dir.join(AIR_PLOT);
    draw(
        &air,
        &InnerMeans::from_records(&records, |r| r.air_n_bits_per_4d),
        "AIR_n (bits/4D), inner subcarriers",
    )?;
    Ok(vec![gsnr, air])
}
