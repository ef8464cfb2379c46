//! Static SVG rendering of a computed locus.

use std::fmt::Write as _;

use rootlocus::{CriticalKind, RootLocusResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;
const MARK: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Plot bounds; fitted to the data when absent.
    pub window: Option<Window>,
    pub upper_half_only: bool,
    pub markers: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { window: None, upper_half_only: false, markers: true }
    }
}

fn fit_window(result: &RootLocusResult, upper: bool) -> Window {
    let s0 = result.problem.sigma0();
    let (mut slo, mut shi, mut wlo, mut whi) = (s0, 0.0f64, 0.0f64, 0.0f64);
    let pts = result
        .trajectories
        .iter()
        .flat_map(|t| t.points.iter().map(|p| (p.sigma, p.omega)))
        .chain(result.critical_points.iter().map(|c| (c.root.re, c.root.im)));
    for (s, w) in pts {
        slo = slo.min(s);
        shi = shi.max(s);
        wlo = wlo.min(w);
        whi = whi.max(w);
    }
    if upper {
        wlo = 0.0;
    }
    let ps = 0.05 * (shi - slo).max(1e-3);
    let pw = 0.05 * (whi - wlo).max(1e-3);
    Window {
        sigma_lo: slo - ps,
        sigma_hi: shi + ps,
        omega_lo: if upper { -pw } else { wlo - pw },
        omega_hi: whi + pw,
    }
}

struct Frame {
    w: Window,
}

impl Frame {
    fn x(&self, s: f64) -> f64 {
        MARGIN + (s - self.w.sigma_lo) / (self.w.sigma_hi - self.w.sigma_lo) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, w: f64) -> f64 {
        HEIGHT - MARGIN - (w - self.w.omega_lo) / (self.w.omega_hi - self.w.omega_lo) * (HEIGHT - 2.0 * MARGIN)
    }

    fn inside(&self, s: f64, w: f64) -> bool {
        (self.w.sigma_lo..=self.w.sigma_hi).contains(&s) && (self.w.omega_lo..=self.w.omega_hi).contains(&w)
    }
}

/// Renders the locus. Output depends only on `result` and `options`.
pub fn render_svg(result: &RootLocusResult, options: &SvgOptions) -> String {
    let upper = options.upper_half_only;
    let w = options.window.unwrap_or_else(|| fit_window(result, upper));
    let f = Frame { w };
    let tol = 1e-9 * (w.omega_hi - w.omega_lo).abs().max(1.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(out, r#"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath></defs>"#, WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#000000"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    // Axes through the origin and the region boundary.
    let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
    if (w.omega_lo..=w.omega_hi).contains(&0.0) {
        let y = f.y(0.0);
        let _ = writeln!(out, r##"<line class="axis" x1="{MARGIN:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999999"/>"##, WIDTH - MARGIN);
    }
    if (w.sigma_lo..=w.sigma_hi).contains(&0.0) {
        let x = f.x(0.0);
        let _ = writeln!(out, r##"<line class="axis" x1="{x:.2}" y1="{MARGIN:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999999"/>"##, HEIGHT - MARGIN);
    }
    let s0 = result.problem.sigma0();
    if (w.sigma_lo..=w.sigma_hi).contains(&s0) {
        let x = f.x(s0);
        let _ = writeln!(
            out,
            r##"<line class="boundary" x1="{x:.2}" y1="{MARGIN:.2}" x2="{x:.2}" y2="{:.2}" stroke="#cc0000" stroke-dasharray="6,4"/>"##,
            HEIGHT - MARGIN
        );
    }

    for t in &result.trajectories {
        // Split where points fall below the real axis in upper-half mode.
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for p in &t.points {
            if upper && p.omega < -tol {
                if !runs.last().unwrap().is_empty() {
                    runs.push(Vec::new());
                }
                continue;
            }
            runs.last_mut().unwrap().push((f.x(p.sigma), f.y(p.omega)));
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let mut pts = String::new();
            for (i, (x, y)) in run.iter().enumerate() {
                if i > 0 {
                    pts.push(' ');
                }
                let _ = write!(pts, "{x:.2},{y:.2}");
            }
            let _ = writeln!(out, r##"<polyline class="trajectory" points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.2"/>"##);
        }
    }
    let _ = writeln!(out, "</g>");

    if options.markers {
        for c in &result.critical_points {
            let (s, om) = (c.root.re, c.root.im);
            if (upper && om < -tol) || !f.inside(s, om) {
                continue;
            }
            let (x, y) = (f.x(s), f.y(om));
            match c.kind {
                CriticalKind::Start => {
                    let _ = writeln!(
                        out,
                        r##"<g class="start" stroke="#000000"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"##,
                        x - MARK, y - MARK, x + MARK, y + MARK, x - MARK, y + MARK, x + MARK, y - MARK
                    );
                }
                CriticalKind::Branch => {
                    let _ = writeln!(
                        out,
                        r##"<polygon class="branch" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#ffffff" stroke="#006600"/>"##,
                        x, y - MARK, x + MARK, y, x, y + MARK, x - MARK, y
                    );
                }
                CriticalKind::CrossingIn | CriticalKind::CrossingOut => {
                    let (cls, dx) = if c.kind == CriticalKind::CrossingIn { ("crossing-in", 1.0) } else { ("crossing-out", -1.0) };
                    let _ = writeln!(
                        out,
                        r##"<g class="{cls}" stroke="#cc6600" fill="none"><circle cx="{x:.2}" cy="{y:.2}" r="{MARK:.2}"/><line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/><polyline points="{:.2},{:.2} {:.2},{y:.2} {:.2},{:.2}"/></g>"##,
                        x + dx * 3.0 * MARK,
                        x + dx * 2.0 * MARK, y - 0.6 * MARK,
                        x + dx * 3.0 * MARK,
                        x + dx * 2.0 * MARK, y + 0.6 * MARK
                    );
                }
            }
        }
    }

    // Ticks and labels.
    for i in 0..=4 {
        let s = w.sigma_lo + (w.sigma_hi - w.sigma_lo) * i as f64 / 4.0;
        let om = w.omega_lo + (w.omega_hi - w.omega_lo) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{s:.3}</text>"#,
            f.x(s),
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{om:.3}</text>"#,
            MARGIN - 6.0,
            f.y(om) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">Re(s)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">Im(s)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    out.push_str("</svg>\n");
    out
}
