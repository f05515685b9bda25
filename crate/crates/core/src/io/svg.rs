//! Hand-rolled SVG line plots: axes with ticks, one polyline per series,
//! optional shaded bands for confidence intervals, and a legend. Output is
//! deterministic for identical input.

use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f6fb2", "#c4502e", "#3a8a3f", "#7b4fa6", "#946030", "#4b8b8b",
];

/// One plotted curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A shaded region between two curves over a common x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A complete figure.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LinePlot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
            bands: Vec::new(),
        }
    }

    fn extents(&self) -> Result<(f64, f64, f64, f64)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            if s.x.len() != s.y.len() {
                return Err(Error::MismatchedAxes(format!(
                    "series {:?} has {} x values and {} y values",
                    s.name,
                    s.x.len(),
                    s.y.len()
                )));
            }
            xs.extend_from_slice(&s.x);
            ys.extend_from_slice(&s.y);
        }
        for b in &self.bands {
            if b.x.len() != b.lower.len() || b.x.len() != b.upper.len() {
                return Err(Error::MismatchedAxes(
                    "band axis and bounds differ in length".into(),
                ));
            }
            xs.extend_from_slice(&b.x);
            ys.extend_from_slice(&b.lower);
            ys.extend_from_slice(&b.upper);
        }
        if xs.is_empty() {
            return Err(Error::InvalidConfig("plot has no data".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEncountered(
                "plot data contains non-finite values".into(),
            ));
        }
        let (x0, x1) = min_max(&xs);
        let (y0, y1) = min_max(&ys);
        Ok((x0, pad_degenerate(x0, x1), y0, pad_degenerate(y0, y1)))
    }

    /// Renders the figure as a standalone SVG document.
    pub fn render(&self) -> Result<String> {
        let (x0, x1, y0, y1) = self.extents()?;
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = move |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = move |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" \
             font-family=\"sans-serif\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));
        for (i, band) in self.bands.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut points = String::new();
            for (x, y) in band.x.iter().zip(&band.upper) {
                points.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
            }
            for (x, y) in band.x.iter().zip(&band.lower).rev() {
                points.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
            }
            out.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n",
                points.trim_end()
            ));
        }
        for tick in 0..=4 {
            let fx = x0 + (x1 - x0) * tick as f64 / 4.0;
            let fy = y0 + (y1 - y0) * tick as f64 / 4.0;
            let px = sx(fx);
            let py = sy(fy);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" \
                 stroke=\"#999\" stroke-width=\"1\"/>\n",
                MARGIN_TOP + plot_h,
                MARGIN_TOP + plot_h + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" \
                 font-family=\"sans-serif\">{}</text>\n",
                MARGIN_TOP + plot_h + 18.0,
                tick_label(fx)
            ));
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" \
                 stroke=\"#999\" stroke-width=\"1\"/>\n",
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" \
                 font-family=\"sans-serif\">{}</text>\n",
                MARGIN_LEFT - 8.0,
                py + 4.0,
                tick_label(fy)
            ));
        }
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.2}\" \
             height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        ));
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut points = String::new();
            for (x, y) in s.x.iter().zip(&s.y) {
                points.push_str(&format!("{:.2},{:.2} ", sx(*x), sy(*y)));
            }
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
                points.trim_end()
            ));
            let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                MARGIN_LEFT + plot_w - 150.0,
                MARGIN_LEFT + plot_w - 126.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" \
                 font-family=\"sans-serif\">{}</text>\n",
                MARGIN_LEFT + plot_w - 120.0,
                ly + 4.0,
                escape(&s.name)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
             font-family=\"sans-serif\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
             font-family=\"sans-serif\" transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));
        out.push_str("</svg>\n");
        Ok(out)
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    })
}

fn pad_degenerate(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi
    } else {
        lo + 1.0
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
