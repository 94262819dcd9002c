//! Location ellipses and a small deterministic SVG scatter plot.
//!
//! A location's ellipse summarizes how its profile spreads over the species
//! coordinates: the axes are the weighted principal directions of the
//! species points (weights = the profile) and the half-lengths are the
//! weighted standard deviations along them.

use std::fmt::Write as _;

use metricord::diversity::check_profile;
use metricord::{linalg, Error, Matrix, Vector};
use serde::Serialize;

/// Share of mass on one species above which a profile is a point mass.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    /// Unit vectors, major axis first.
    pub axis_directions: [[f64; 2]; 2],
    /// Half-lengths, major first.
    pub axis_lengths: [f64; 2],
    /// All mass on a single species; both lengths are zero.
    pub degenerate: bool,
}

/// Ellipse of profile `x` over the `S x 2` species coordinates, placed at
/// `center`. The spread matrix is the `x`-weighted covariance of the species
/// points about their `x`-weighted mean.
pub fn ellipse_for_location(
    species_2d: &Matrix,
    x: &Vector,
    center: [f64; 2],
) -> metricord::Result<EllipseSpec> {
    if species_2d.ncols() != 2 || species_2d.nrows() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "species coordinates are {}x{}, profile has {} entries",
            species_2d.nrows(),
            species_2d.ncols(),
            x.len()
        )));
    }
    check_profile(x)?;
    if x.max() >= 1.0 - DEGENERATE_TOL {
        return Ok(EllipseSpec {
            center,
            axis_directions: [[1.0, 0.0], [0.0, 1.0]],
            axis_lengths: [0.0, 0.0],
            degenerate: true,
        });
    }
    let mean = species_2d.transpose() * x;
    let mut m = Matrix::zeros(2, 2);
    for s in 0..x.len() {
        let d = species_2d.row(s).transpose() - &mean;
        m += &d * d.transpose() * x[s];
    }
    let eig = linalg::symmetric_eigen(&m)?;
    let v = &eig.eigenvectors;
    Ok(EllipseSpec {
        center,
        axis_directions: [[v[(0, 0)], v[(1, 0)]], [v[(0, 1)], v[(1, 1)]]],
        axis_lengths: [
            eig.eigenvalues[0].max(0.0).sqrt(),
            eig.eigenvalues[1].max(0.0).sqrt(),
        ],
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub group: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub locations: Vec<PlotPoint>,
    pub species: Vec<PlotPoint>,
    pub ellipses: Vec<EllipseSpec>,
    pub x_label: String,
    pub y_label: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];
const SHAPES: [Shape; 5] = [Shape::Circle, Shape::Square, Shape::Triangle, Shape::Diamond, Shape::Cross];

#[derive(Debug, Clone, Copy)]
enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
}

/// Two decimals, without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps data coordinates to the viewport with one scale for both axes, so
/// ellipses keep their shape.
struct Frame {
    scale: f64,
    cx: f64,
    cy: f64,
}

impl Frame {
    fn new(p: &PlotData) -> Self {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for pt in p.locations.iter().chain(&p.species) {
            xs.push(pt.x);
            ys.push(pt.y);
        }
        for e in &p.ellipses {
            let r = e.axis_lengths[0];
            xs.extend([e.center[0] - r, e.center[0] + r]);
            ys.extend([e.center[1] - r, e.center[1] + r]);
        }
        let span = |v: &[f64]| -> (f64, f64) {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                (lo, hi)
            } else {
                (-1.0, 1.0)
            }
        };
        let (x0, x1) = span(&xs);
        let (y0, y1) = span(&ys);
        let dx = (x1 - x0).max(1e-12);
        let dy = (y1 - y0).max(1e-12);
        let inner = (WIDTH - 2.0 * MARGIN).min(HEIGHT - 2.0 * MARGIN);
        let scale = 0.95 * inner / dx.max(dy);
        Frame {
            scale,
            cx: 0.5 * (x0 + x1),
            cy: 0.5 * (y0 + y1),
        }
    }

    fn px(&self, x: f64) -> f64 {
        WIDTH / 2.0 + (x - self.cx) * self.scale
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT / 2.0 - (y - self.cy) * self.scale
    }
}

fn marker(out: &mut String, shape: Shape, x: f64, y: f64, fill: &str, title: &str) {
    let r = 5.0;
    let t = format!("<title>{}</title>", escape(title));
    let _ = match shape {
        Shape::Circle => writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}">{t}</circle>"#,
            num(x),
            num(y),
            num(r)
        ),
        Shape::Square => writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}">{t}</rect>"#,
            num(x - r),
            num(y - r),
            num(2.0 * r),
            num(2.0 * r)
        ),
        Shape::Triangle => writeln!(
            out,
            r#"<polygon points="{},{} {},{} {},{}" fill="{fill}">{t}</polygon>"#,
            num(x),
            num(y - r),
            num(x - r),
            num(y + r),
            num(x + r),
            num(y + r)
        ),
        Shape::Diamond => writeln!(
            out,
            r#"<polygon points="{},{} {},{} {},{} {},{}" fill="{fill}">{t}</polygon>"#,
            num(x),
            num(y - r),
            num(x + r),
            num(y),
            num(x),
            num(y + r),
            num(x - r),
            num(y)
        ),
        Shape::Cross => writeln!(
            out,
            r#"<path d="M {} {} L {} {} M {} {} L {} {}" stroke="{fill}" stroke-width="2.5">{t}</path>"#,
            num(x - r),
            num(y - r),
            num(x + r),
            num(y + r),
            num(x - r),
            num(y + r),
            num(x + r),
            num(y - r)
        ),
    };
}

/// Render the plot. Output depends only on `p`: fixed viewport, elements
/// in input order, groups styled in order of first appearance.
pub fn render_svg(p: &PlotData) -> String {
    let frame = Frame::new(p);
    let mut groups: Vec<String> = Vec::new();
    for pt in &p.locations {
        let g = pt.group.clone().unwrap_or_default();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let style = |pt: &PlotPoint| -> (Shape, &'static str) {
        let g = pt.group.clone().unwrap_or_default();
        let i = groups.iter().position(|x| *x == g).expect("group registered");
        (SHAPES[i % SHAPES.len()], PALETTE[i % PALETTE.len()])
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#,
        W = WIDTH,
        H = HEIGHT
    );
    let _ = writeln!(out, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let (ox, oy) = (frame.px(0.0), frame.py(0.0));
    let _ = writeln!(out, r##"<g id="axes" stroke="#bbbbbb" stroke-dasharray="4 3">"##);
    if (MARGIN..=WIDTH - MARGIN).contains(&ox) {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(ox),
            num(MARGIN),
            num(ox),
            num(HEIGHT - MARGIN)
        );
    }
    if (MARGIN..=HEIGHT - MARGIN).contains(&oy) {
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
            num(MARGIN),
            num(oy),
            num(WIDTH - MARGIN),
            num(oy)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        num(WIDTH / 2.0),
        num(HEIGHT - 16.0),
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">{}</text>"#,
        num(HEIGHT / 2.0),
        num(HEIGHT / 2.0),
        escape(&p.y_label)
    );

    if !p.ellipses.is_empty() {
        let _ = writeln!(out, r#"<g id="ellipses" fill="none" stroke-width="1.2" stroke-opacity="0.8">"#);
        for (i, e) in p.ellipses.iter().enumerate() {
            let colour = p.locations.get(i).map_or(PALETTE[0], |pt| style(pt).1);
            let (cx, cy) = (frame.px(e.center[0]), frame.py(e.center[1]));
            let rx = e.axis_lengths[0] * frame.scale;
            let ry = e.axis_lengths[1] * frame.scale;
            let d = if rx == 0.0 {
                format!("M {} {} Z", num(cx), num(cy))
            } else {
                // Major axis in viewport coordinates (y points down).
                let (ux, uy) = (e.axis_directions[0][0], -e.axis_directions[0][1]);
                let angle = uy.atan2(ux).to_degrees();
                format!(
                    "M {} {} A {} {} {} 1 0 {} {} A {} {} {} 1 0 {} {} Z",
                    num(cx + rx * ux),
                    num(cy + rx * uy),
                    num(rx),
                    num(ry),
                    num(angle),
                    num(cx - rx * ux),
                    num(cy - rx * uy),
                    num(rx),
                    num(ry),
                    num(angle),
                    num(cx + rx * ux),
                    num(cy + rx * uy)
                )
            };
            let _ = writeln!(out, r#"<path class="ellipse" d="{d}" stroke="{colour}"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }

    if !p.species.is_empty() {
        let _ = writeln!(out, r##"<g id="species" fill="#999999">"##);
        for pt in &p.species {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="2"><title>{}</title></circle>"#,
                num(frame.px(pt.x)),
                num(frame.py(pt.y)),
                escape(&pt.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r#"<g id="locations">"#);
    for pt in &p.locations {
        let (shape, colour) = style(pt);
        marker(&mut out, shape, frame.px(pt.x), frame.py(pt.y), colour, &pt.label);
    }
    let _ = writeln!(out, "</g>");

    if groups.len() > 1 || groups.first().is_some_and(|g| !g.is_empty()) {
        let _ = writeln!(out, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
        for (i, g) in groups.iter().enumerate() {
            let y = MARGIN / 2.0 + 16.0 * i as f64;
            let x = WIDTH - MARGIN - 90.0;
            marker(&mut out, SHAPES[i % SHAPES.len()], x, y, PALETTE[i % PALETTE.len()], g);
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}">{}</text>"#,
                num(x + 10.0),
                num(y + 4.0),
                escape(g)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
