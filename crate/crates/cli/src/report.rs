//! Static SVG plots of the CSVs the other subcommands write.

use anyhow::{bail, Context, Result};
use plotters::prelude::*;
use std::path::{Path, PathBuf};

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .context("empty CSV")?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r.get(i).copied().unwrap_or(f64::NAN))
                .collect(),
        )
    }
}

const PALETTE: [RGBColor; 4] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
];

fn bounds(values: impl Iterator<Item = f64>, log: bool) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if lo > hi {
        return None;
    }
    if log {
        Some((lo / 2.0, hi * 2.0))
    } else if hi - lo < 1e-300 {
        Some((lo - 1.0, hi + 1.0))
    } else {
        let pad = 0.05 * (hi - lo);
        Some((lo - pad, hi + pad))
    }
}

struct Plot<'a> {
    title: &'a str,
    x_label: &'a str,
    x: Vec<f64>,
    series: Vec<(&'a str, Vec<f64>)>,
    log_x: bool,
    log_y: bool,
}

fn points(x: &[f64], y: &[f64], log_x: bool, log_y: bool) -> Vec<(f64, f64)> {
    x.iter()
        .zip(y)
        .filter(|(a, b)| {
            a.is_finite() && b.is_finite() && (!log_x || **a > 0.0) && (!log_y || **b > 0.0)
        })
        .map(|(a, b)| (*a, *b))
        .collect()
}

macro_rules! draw_chart {
    ($root:expr, $plot:expr, $xr:expr, $yr:expr) => {{
        let mut chart = ChartBuilder::on($root)
            .caption($plot.title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(80)
            .build_cartesian_2d($xr, $yr)?;
        chart.configure_mesh().x_desc($plot.x_label).draw()?;
        for (i, (name, y)) in $plot.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts = points(&$plot.x, y, $plot.log_x, $plot.log_y);
            chart
                .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))?
                .label(*name)
                .legend(move |(x, y)| {
                    PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                });
            chart.draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()?;
    }};
}

fn render(plot: &Plot, path: &Path) -> Result<()> {
    let (x0, x1) = bounds(plot.x.iter().copied(), plot.log_x).context("no finite abscissae")?;
    let (y0, y1) = bounds(
        plot.series.iter().flat_map(|(_, y)| y.iter().copied()),
        plot.log_y,
    )
    .context("no finite values to plot")?;
    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    match (plot.log_x, plot.log_y) {
        (false, false) => draw_chart!(&root, plot, x0..x1, y0..y1),
        (false, true) => draw_chart!(&root, plot, x0..x1, (y0..y1).log_scale()),
        (true, false) => draw_chart!(&root, plot, (x0..x1).log_scale(), y0..y1),
        (true, true) => draw_chart!(&root, plot, (x0..x1).log_scale(), (y0..y1).log_scale()),
    }
    root.present()?;
    Ok(())
}

/// One SVG to draw from a CSV: `(column, legend label)` pairs against `x`.
struct Figure {
    file: String,
    columns: &'static [(&'static str, &'static str)],
    x: &'static str,
    log_x: bool,
    log_y: bool,
}

fn plots_for(table: &Table, stem: &str) -> Vec<Figure> {
    let figure = |file: String, columns, x, log_x, log_y| Figure {
        file,
        columns,
        x,
        log_x,
        log_y,
    };
    match table.header.first().map(String::as_str) {
        Some("t") => vec![
            figure(
                format!("{stem}_energy.svg"),
                &[
                    ("kinetic", "kinetic"),
                    ("potential", "potential"),
                    ("E", "E"),
                    ("dissipation_cum", "dissipation"),
                ],
                "t",
                false,
                false,
            ),
            figure(
                format!("{stem}_density.svg"),
                &[("min_rho", "min rho"), ("linf_rho", "max rho")],
                "t",
                false,
                false,
            ),
        ],
        Some("epsilon") => vec![figure(
            format!("{stem}.svg"),
            &[
                ("err_l1", "L1 error"),
                ("err_l2", "L2 error"),
                ("err_linf", "Linf error"),
            ],
            "epsilon",
            true,
            true,
        )],
        Some("iter") => vec![figure(
            format!("{stem}.svg"),
            &[
                ("diff_norm", "successive difference"),
                ("sup_norm_weighted", "iterate norm"),
            ],
            "iter",
            false,
            true,
        )],
        _ => Vec::new(),
    }
}

/// Renders every recognised CSV in `dir` to SVGs next to it.
pub fn render_dir(dir: &Path) -> Result<()> {
    let mut csvs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    let mut written = 0;
    for csv in &csvs {
        let table = Table::read(csv)?;
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
        for fig in plots_for(&table, stem) {
            let Some(x) = table.column(fig.x) else {
                continue;
            };
            let series: Vec<(&str, Vec<f64>)> = fig
                .columns
                .iter()
                .filter_map(|(c, label)| table.column(c).map(|v| (*label, v)))
                .collect();
            let plot = Plot {
                title: stem,
                x_label: fig.x,
                x,
                series,
                log_x: fig.log_x,
                log_y: fig.log_y,
            };
            let out = dir.join(&fig.file);
            match render(&plot, &out) {
                Ok(()) => {
                    println!("wrote {}", out.display());
                    written += 1;
                }
                Err(e) => eprintln!("skipped {}: {e:#}", out.display()),
            }
        }
    }
    if written == 0 {
        bail!("no plottable CSVs in {}", dir.display());
    }
    Ok(())
}
