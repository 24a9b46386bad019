//! Minimal static SVG plotting.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf",
];
pub const REFERENCE_RED: &str = "#d62728";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// `(lo, hi)` of finite values, widened when degenerate.
pub fn extent(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 {
            lo.abs() * 0.05
        } else {
            0.5
        };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

pub fn padded((lo, hi): (f64, f64), fraction: f64) -> (f64, f64) {
    let pad = (hi - lo) * fraction;
    (lo - pad, hi + pad)
}

pub struct Chart {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    legend: Vec<(String, String)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut c = Chart {
            x,
            y,
            body: String::new(),
            legend: Vec::new(),
        };
        c.frame(title, x_label, y_label);
        c
    }

    fn plot_width() -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_height() -> f64 {
        HEIGHT - TOP - BOTTOM
    }

    pub fn sx(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * Self::plot_width()
    }

    pub fn sy(&self, v: f64) -> f64 {
        TOP + Self::plot_height() - (v - self.y.0) / (self.y.1 - self.y.0) * Self::plot_height()
    }

    fn frame(&mut self, title: &str, x_label: &str, y_label: &str) {
        let (pw, ph) = (Self::plot_width(), Self::plot_height());
        let b = &mut self.body;
        let _ = writeln!(
            b,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            b,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            esc(title)
        );
        let _ = writeln!(
            b,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            esc(x_label)
        );
        let _ = writeln!(
            b,
            r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            esc(y_label)
        );
    }

    pub fn x_ticks(&mut self, n: usize) {
        for i in 0..=n {
            let v = self.x.0 + (self.x.1 - self.x.0) * i as f64 / n as f64;
            let px = self.sx(v);
            let _ = writeln!(
                self.body,
                r##"<line x1="{px:.2}" y1="{0}" x2="{px:.2}" y2="{1}" stroke="#333"/><text x="{px:.2}" y="{2}" text-anchor="middle" font-size="11">{3}</text>"##,
                TOP + Self::plot_height(),
                TOP + Self::plot_height() + 5.0,
                TOP + Self::plot_height() + 18.0,
                fmt_num(v)
            );
        }
    }

    pub fn y_ticks(&mut self, n: usize) {
        for i in 0..=n {
            let v = self.y.0 + (self.y.1 - self.y.0) * i as f64 / n as f64;
            let py = self.sy(v);
            let _ = writeln!(
                self.body,
                r##"<line x1="{0}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333"/><text x="{1}" y="{2:.2}" text-anchor="end" font-size="11">{3}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                fmt_num(v)
            );
        }
    }

    /// Labels the x axis with category names at the given positions.
    pub fn x_categories(&mut self, labels: &[(f64, String)]) {
        for (v, label) in labels {
            let px = self.sx(*v);
            let _ = writeln!(
                self.body,
                r#"<text x="{px:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
                TOP + Self::plot_height() + 18.0,
                esc(label)
            );
        }
    }

    pub fn point(&mut self, x: f64, y: f64, color: &str) {
        if !(x.is_finite() && y.is_finite()) {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}" fill-opacity="0.8"/>"#,
            self.sx(x),
            self.sy(y)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.sx(x), self.sy(y)))
            .collect();
        if coords.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
    }

    pub fn vline(&mut self, x: f64, color: &str, label: Option<&str>) {
        let px = self.sx(x);
        let _ = writeln!(
            self.body,
            r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="{color}" stroke-width="1.5"/>"#,
            TOP + Self::plot_height()
        );
        if let Some(l) = label {
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{}" font-size="11" fill="{color}">{}</text>"#,
                px + 3.0,
                TOP + 12.0,
                esc(l)
            );
        }
    }

    pub fn hline(&mut self, y: f64, color: &str) {
        let py = self.sy(y);
        let _ = writeln!(
            self.body,
            r#"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#,
            LEFT + Self::plot_width()
        );
    }

    /// Rectangle in data coordinates.
    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str, stroke: &str) {
        let (ax, bx) = (self.sx(x0), self.sx(x1));
        let (ay, by) = (self.sy(y0), self.sy(y1));
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
            ax.min(bx),
            ay.min(by),
            (bx - ax).abs(),
            (by - ay).abs()
        );
    }

    pub fn segment(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
            self.sx(x0),
            self.sy(y0),
            self.sx(x1),
            self.sy(y1)
        );
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9" fill="{color}">{}</text>"#,
            self.sx(x),
            self.sy(y) + 3.0,
            esc(text)
        );
    }

    pub fn legend(&mut self, name: &str, color: &str) {
        self.legend.push((name.to_string(), color.to_string()));
    }

    pub fn finish(mut self) -> String {
        let lx = WIDTH - RIGHT + 12.0;
        for (i, (name, color)) in self.legend.iter().enumerate() {
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                self.body,
                r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
                ly - 9.0,
                lx + 15.0,
                ly,
                esc(name)
            );
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Linear blend over a dark-blue to yellow ramp, `t` in `[0, 1]`.
pub fn heat_color(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 3] = [
        (68.0, 1.0, 84.0),
        (33.0, 145.0, 140.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let s = t * 2.0;
    let (a, b, f) = if s <= 1.0 {
        (STOPS[0], STOPS[1], s)
    } else {
        (STOPS[1], STOPS[2], s - 1.0)
    };
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_map_range_to_plot_area() {
        let c = Chart::new("t", "x", "y", (0.0, 1.0), (10.0, 20.0));
        assert_eq!(c.sx(0.0), LEFT);
        assert_eq!(c.sx(1.0), WIDTH - RIGHT);
        assert_eq!(c.sy(10.0), HEIGHT - BOTTOM);
        assert_eq!(c.sy(20.0), TOP);
    }

    #[test]
    fn extent_handles_degenerate_input() {
        assert_eq!(extent([]), None);
        assert_eq!(extent([f64::NAN]), None);
        assert_eq!(extent([0.0, 0.0]), Some((-0.5, 0.5)));
        assert_eq!(extent([1.0, 3.0, f64::INFINITY]), Some((1.0, 3.0)));
    }

    #[test]
    fn text_is_escaped() {
        let svg = Chart::new("a<b & c", "x", "y", (0.0, 1.0), (0.0, 1.0)).finish();
        assert!(svg.contains("a&lt;b &amp; c"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn heat_color_endpoints() {
        assert_eq!(heat_color(0.0), "#440154");
        assert_eq!(heat_color(1.0), "#fde725");
        assert_eq!(heat_color(f64::NAN), "#440154");
    }

    #[test]
    fn number_formatting_trims() {
        assert_eq!(fmt_num(0.8), "0.8");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-0.00001), "0");
    }
}
