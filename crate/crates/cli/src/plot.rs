//! Static SVG ROC and precision-recall charts.

use std::path::Path;

use medusa_core::evaluation::{auprc, auroc, pr_points, roc_points};
use medusa_core::io::write_atomic;
use plotters::prelude::*;

const SIZE: (u32, u32) = (640, 480);

#[derive(Debug, Clone)]
pub struct Curve {
    pub name: String,
    pub roc: Vec<(f64, f64)>,
    pub pr: Vec<(f64, f64)>,
    pub auroc: f64,
    pub auprc: f64,
}

impl Curve {
    /// `scores` as for the ranking metrics: lower is better.
    pub fn new(name: &str, scores: Vec<(f64, bool)>) -> anyhow::Result<Self> {
        Ok(Self {
            name: name.to_string(),
            roc: roc_points(&scores)?,
            pr: pr_points(&scores)?,
            auroc: auroc(&scores)?,
            auprc: auprc(&scores)?,
        })
    }
}

pub fn write_roc(path: &Path, curves: &[Curve]) -> anyhow::Result<()> {
    let series: Vec<(String, &[(f64, f64)])> = curves
        .iter()
        .map(|c| {
            (
                format!("{} (AUROC {:.3})", c.name, c.auroc),
                c.roc.as_slice(),
            )
        })
        .collect();
    let diagonal = [(0.0, 0.0), (1.0, 1.0)];
    render(
        path,
        "ROC",
        "false positive rate",
        "true positive rate",
        &series,
        Some(&diagonal),
    )
}

pub fn write_pr(path: &Path, curves: &[Curve]) -> anyhow::Result<()> {
    let series: Vec<(String, &[(f64, f64)])> = curves
        .iter()
        .map(|c| (format!("{} (AP {:.3})", c.name, c.auprc), c.pr.as_slice()))
        .collect();
    render(
        path,
        "Precision-recall",
        "recall",
        "precision",
        &series,
        None,
    )
}

fn render(
    path: &Path,
    title: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[(String, &[(f64, f64)])],
    reference: Option<&[(f64, f64)]>,
) -> anyhow::Result<()> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(48)
            .build_cartesian_2d(0f64..1f64, 0f64..1.02f64)
            .map_err(draw_err)?;
        chart
            .configure_mesh()
            .x_desc(x_desc)
            .y_desc(y_desc)
            .draw()
            .map_err(draw_err)?;
        if let Some(r) = reference {
            chart
                .draw_series(LineSeries::new(r.iter().copied(), BLACK.mix(0.3)))
                .map_err(draw_err)?;
        }
        for (i, (name, pts)) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(name.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        if !series.is_empty() {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .position(SeriesLabelPosition::LowerRight)
                .draw()
                .map_err(draw_err)?;
        }
        root.present().map_err(draw_err)?;
    }
    write_atomic(path, svg.as_bytes())?;
    Ok(())
}

fn draw_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow::anyhow!("plot rendering failed: {e:?}")
}
