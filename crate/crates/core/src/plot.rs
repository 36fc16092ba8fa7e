//! SVG output for bifurcation diagrams and solution fields.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::problem::{ptype, Branch, ProblemState};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Values of the branch column `name`: `count`, `ptype`, a parameter name,
/// `ineg`, `err`, `l2norm` or a user column.
pub fn column(b: &Branch, name: &str) -> Result<Vec<f64>> {
    let col = |f: &dyn Fn(&crate::problem::BranchRecord) -> f64| b.rows.iter().map(f).collect();
    Ok(match name {
        "count" => col(&|r| r.count as f64),
        "ptype" => col(&|r| r.ptype as f64),
        "ineg" => col(&|r| r.ineg as f64),
        "err" => col(&|r| r.err),
        "l2norm" => col(&|r| r.l2),
        _ => {
            if let Some(i) = b.param_names.iter().position(|n| n == name) {
                col(&|r| r.params[i])
            } else if let Some(i) = b.user_names.iter().position(|n| n == name) {
                col(&|r| r.user[i])
            } else {
                return Err(Error::domain(format!("branch has no column `{name}`")));
            }
        }
    })
}

/// Maps data ranges onto the plot area; degenerate ranges are widened.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = widen(range(xs));
        let (y0, y1) = widen(range(ys));
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn widen((a, b): (f64, f64)) -> (f64, f64) {
    if !a.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if b > a { 0.05 * (b - a) } else { 0.5 * a.abs().max(1.0) };
    (a - pad, b + pad)
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

fn axes(out: &mut String, f: &Frame, xl: &str, yl: &str) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for k in 0..=4 {
        let s = k as f64 / 4.0;
        let (xv, yv) = (f.x0 + s * (f.x1 - f.x0), f.y0 + s * (f.y1 - f.y0));
        let (x, y) = (f.px(xv), f.py(yv));
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 16.0, tick(xv));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 4.0, y + 4.0, tick(yv));
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(xl));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(yl)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bifurcation diagram: one polyline per branch; bifurcation points are
/// circles, folds diamonds.
pub fn branch_svg(branches: &[(String, Branch)], x: &str, y: &str) -> Result<String> {
    if branches.is_empty() {
        return Err(Error::domain("no branches to plot"));
    }
    let mut data = Vec::with_capacity(branches.len());
    for (name, b) in branches {
        if b.rows.is_empty() {
            return Err(Error::domain(format!("branch `{name}` is empty")));
        }
        data.push((column(b, x)?, column(b, y)?));
    }
    let f = Frame::new(
        data.iter().flat_map(|d| d.0.iter().copied()),
        data.iter().flat_map(|d| d.1.iter().copied()),
    );
    let mut out = String::new();
    header(&mut out, W, H);
    axes(&mut out, &f, x, y);
    for (k, ((name, b), (xs, ys))) in branches.iter().zip(&data).enumerate() {
        let c = COLORS[k % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&a, &b)| format!("{:.2},{:.2}", f.px(a), f.py(b)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="branch" fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for (r, (&a, &bv)) in b.rows.iter().zip(xs.iter().zip(ys)) {
            let (px, py) = (f.px(a), f.py(bv));
            match r.ptype {
                ptype::BIFURCATION => {
                    let _ = writeln!(out, r#"<circle class="bif" cx="{px:.2}" cy="{py:.2}" r="4" fill="none" stroke="{c}"/>"#);
                }
                ptype::FOLD => {
                    let _ = writeln!(
                        out,
                        r#"<polygon class="fold" points="{:.2},{py:.2} {px:.2},{:.2} {:.2},{py:.2} {px:.2},{:.2}" fill="{c}"/>"#,
                        px - 5.0,
                        py - 5.0,
                        px + 5.0,
                        py + 5.0
                    );
                }
                _ => {}
            }
        }
        let ly = MARGIN + 14.0 * (k as f64 + 1.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{c}" text-anchor="end">{}</text>"#,
            W - MARGIN - 6.0,
            esc(name)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Piecewise linear blue-white-red scale on `s ∈ [0, 1]`.
pub fn color(s: f64) -> String {
    let s = if s.is_finite() { s.clamp(0.0, 1.0) } else { 0.5 };
    let (r, g, b) = if s < 0.5 {
        let t = s / 0.5;
        (59.0 + t * (240.0 - 59.0), 76.0 + t * (240.0 - 76.0), 192.0 + t * (240.0 - 192.0))
    } else {
        let t = (s - 0.5) / 0.5;
        (240.0 - t * (240.0 - 180.0), 240.0 - t * (240.0 - 4.0), 240.0 - t * (240.0 - 38.0))
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Nodal values of component `comp` (0-based) on the full mesh; periodic
/// states are extended to the identified nodes first.
pub fn component_values(p: &ProblemState, comp: usize) -> Result<Vec<f64>> {
    if comp >= p.neq {
        return Err(Error::domain(format!("component {comp} out of range (neq = {})", p.neq)));
    }
    let full = p.ops.per.extend_vector(&p.u[..p.nu])?;
    let np = p.mesh.np();
    Ok(full[comp * np..(comp + 1) * np].to_vec())
}

/// Flat-shaded heatmap of component `comp`, triangle colour from the mean of
/// its nodal values, plus a colour bar.
pub fn solution_svg(p: &ProblemState, comp: usize) -> Result<String> {
    let v = component_values(p, comp)?;
    let mesh = &p.mesh;
    let (vmin, vmax) = range(v.iter().copied());
    let span = if vmax > vmin { vmax - vmin } else { 0.0 };
    let (xr, yr) = (
        range(mesh.points.iter().map(|q| q[0])),
        range(mesh.points.iter().map(|q| q[1])),
    );
    let plot = W - 2.0 * MARGIN - 60.0;
    let scale = (plot / (xr.1 - xr.0)).min((H - 2.0 * MARGIN) / (yr.1 - yr.0));
    let tx = |x: f64| MARGIN + (x - xr.0) * scale;
    let ty = |y: f64| H - MARGIN - (y - yr.0) * scale;
    let mut out = String::new();
    header(&mut out, W, H);
    for t in &mesh.triangles {
        let mean = t.nodes.iter().map(|&i| v[i]).sum::<f64>() / 3.0;
        let s = if span > 0.0 { (mean - vmin) / span } else { 0.5 };
        let c = color(s);
        let pts: Vec<String> = t
            .nodes
            .iter()
            .map(|&i| format!("{:.2},{:.2}", tx(mesh.points[i][0]), ty(mesh.points[i][1])))
            .collect();
        let _ = writeln!(out, r#"<polygon class="tri" points="{}" fill="{c}" stroke="{c}" stroke-width="0.3"/>"#, pts.join(" "));
    }
    // colour bar
    let bx = W - MARGIN - 30.0;
    let (top, bot) = (MARGIN, H - MARGIN);
    let nb = 32;
    let hstep = (bot - top) / nb as f64;
    for k in 0..nb {
        let s = (k as f64 + 0.5) / nb as f64;
        let y = bot - (k as f64 + 1.0) * hstep;
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{bx:.1}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            hstep + 0.5,
            color(s)
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 20.0, top + 4.0, tick(vmax));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 20.0, bot + 4.0, tick(vmin));
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use crate::problem::BranchRecord;

    fn rec(count: usize, ptype: i8, lam: f64, l2: f64) -> BranchRecord {
        BranchRecord {
            count,
            ptype,
            params: vec![lam],
            ineg: 0,
            err: 0.0,
            l2,
            target: false,
            user: vec![],
        }
    }

    fn branch(rows: Vec<BranchRecord>) -> Branch {
        Branch {
            param_names: vec!["lam".into()],
            user_names: vec![],
            rows,
        }
    }

    #[test]
    fn two_branch_diagram_has_markers() {
        let tr = branch(vec![rec(0, 0, 1.0, 0.0), rec(1, 1, 1.4, 0.0), rec(2, 0, 2.0, 0.0)]);
        let q = branch(vec![rec(0, -1, 1.4, 0.0), rec(1, 0, 1.2, 0.3), rec(2, 2, 1.1, 0.5), rec(3, 0, 1.3, 0.8)]);
        let svg = branch_svg(&[("tr".into(), tr), ("q".into(), q)], "lam", "l2norm").unwrap();
        assert_eq!(svg.matches("class=\"branch\"").count(), 2);
        assert_eq!(svg.matches("class=\"bif\"").count(), 1);
        assert_eq!(svg.matches("class=\"fold\"").count(), 1);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn unknown_column_rejected() {
        let b = branch(vec![rec(0, 0, 1.0, 0.0)]);
        assert!(branch_svg(&[("b".into(), b.clone())], "lam", "nosuch").is_err());
        assert!(branch_svg(&[("b".into(), branch(vec![]))], "lam", "l2norm").is_err());
        assert!(branch_svg(&[], "lam", "l2norm").is_err());
    }

    #[test]
    fn constant_field_single_colour() {
        let mut cfg = demos::DemoConfig::default_for("bratu").unwrap();
        cfg.mesh.nx = 5;
        cfg.mesh.ny = 5;
        let mut p = demos::init("bratu", &cfg).unwrap();
        p.u[..p.nu].iter_mut().for_each(|v| *v = 0.7);
        let svg = solution_svg(&p, 0).unwrap();
        let fills: std::collections::BTreeSet<&str> = svg
            .lines()
            .filter(|l| l.contains("class=\"tri\""))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(fills.len(), 1);
        assert_eq!(svg.matches("class=\"tri\"").count(), p.mesh.nt());
        assert!(solution_svg(&p, 1).is_err());
    }

    #[test]
    fn periodic_field_matches_on_identified_sides() {
        let mut cfg = demos::DemoConfig::default_for("schnak").unwrap();
        cfg.mesh.nx = 3;
        cfg.mesh.ny = 12;
        let mut p = demos::init("schnak", &cfg).unwrap();
        demos::schnak::travel_setup(&mut p).unwrap();
        for (i, v) in p.u[..p.nu].iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let v = component_values(&p, 1).unwrap();
        let m = &p.mesh;
        let (ymin, ymax) = range(m.points.iter().map(|q| q[1]));
        for (i, a) in m.points.iter().enumerate().filter(|(_, q)| q[1] == ymin) {
            let j = m
                .points
                .iter()
                .position(|b| b[1] == ymax && (b[0] - a[0]).abs() < 1e-12)
                .unwrap();
            assert_eq!(v[i], v[j]);
        }
        assert!(solution_svg(&p, 1).is_ok());
    }

    #[test]
    fn colour_scale_endpoints() {
        assert_eq!(color(0.0), "#3b4cc0");
        assert_eq!(color(0.5), "#f0f0f0");
        assert_eq!(color(1.0), "#b40426");
        assert_eq!(color(f64::NAN), color(0.5));
    }
}
