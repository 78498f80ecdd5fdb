use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::periodic::find_periodic_points;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;
const SAMPLES: usize = 1000;
const MARKED_PERIOD: usize = 6;
const TORUS_PERIOD: usize = 4;
const COLORS: [&str; 6] = ["#cc3333", "#3366cc", "#339933", "#cc9900", "#9933cc", "#333333"];

/// Lift plot for circle maps, periodic-point scatter on the unit square
/// for torus maps.
pub fn emit_plot<W: Write>(model: &MapModel<f64>, out: W) -> Result<()> {
    match model.degree() {
        Some(_) => emit_lift_plot(model, out),
        None => emit_torus_plot(model, out),
    }
}

/// Periodic points of period at most 4 on `[0, 1)^2`, coloured by period.
pub fn emit_torus_plot<W: Write>(model: &MapModel<f64>, mut out: W) -> Result<()> {
    if model.degree().is_some() {
        return Err(Error::Unsupported { model: model.id(), what: "torus plot of a circle map".into() });
    }
    let side = WIDTH - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x * side;
    let sy = |y: f64| HEIGHT - MARGIN - y * side;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .ok();
    writeln!(svg, r#"<title>periodic points of {}</title>"#, model.id()).ok();
    writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).ok();
    writeln!(svg, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="black"/>"#).ok();
    let set = find_periodic_points(model, TORUS_PERIOD)?;
    for o in &set.orbits {
        let color = COLORS[(o.period - 1) % COLORS.len()];
        for p in &o.points {
            writeln!(
                svg,
                r#"<circle class="periodic" cx="{:.2}" cy="{:.2}" r="2" fill="{color}"><title>period {}</title></circle>"#,
                sx(p.x()),
                sy(p.y()),
                o.period
            )
            .ok();
        }
    }
    writeln!(svg, "</svg>").ok();
    out.write_all(svg.as_bytes())?;
    Ok(())
}

/// SVG plot of the lift of a circle map on `[0, 1]` with the diagonal,
/// the branch cuts and the periodic points of period at most 6.
pub fn emit_lift_plot<W: Write>(model: &MapModel<f64>, mut out: W) -> Result<()> {
    let Some(k) = model.degree() else {
        return Err(Error::Unsupported { model: model.id(), what: "lift plot of a torus map".into() });
    };
    let lift = |x: f64| model.lift(x).expect("circle model has a lift");
    let l0 = lift(0.0);
    let (ymin, ymax) = (l0.min(0.0), l0 + k as f64);
    let sx = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - ymin) / (ymax - ymin) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .ok();
    writeln!(svg, r#"<title>lift of {}</title>"#, model.id()).ok();
    writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).ok();
    writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        sx(0.0),
        sy(ymax),
        sx(1.0) - sx(0.0),
        sy(ymin) - sy(ymax)
    )
    .ok();
    for level in 1..k {
        let y = l0 + level as f64;
        writeln!(
            svg,
            r##"<line class="level" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
            sx(0.0),
            sy(y),
            sx(1.0),
            sy(y)
        )
        .ok();
        let cut = model.preimage_lifted(level as usize, 0.0)?;
        writeln!(
            svg,
            r##"<line class="cut" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
            sx(cut),
            sy(ymin),
            sx(cut),
            sy(ymax)
        )
        .ok();
    }
    writeln!(
        svg,
        r##"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#3366cc"/>"##,
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    )
    .ok();
    let path: Vec<String> = (0..=SAMPLES)
        .map(|i| {
            let x = i as f64 / SAMPLES as f64;
            format!("{:.2},{:.2}", sx(x), sy(lift(x)))
        })
        .collect();
    writeln!(svg, r#"<polyline class="lift" fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#, path.join(" ")).ok();
    let set = find_periodic_points(model, MARKED_PERIOD)?;
    for o in &set.orbits {
        for p in &o.points {
            let x = p.x();
            writeln!(
                svg,
                r##"<circle class="periodic" cx="{:.2}" cy="{:.2}" r="2.5" fill="#cc3333"><title>period {}</title></circle>"##,
                sx(x),
                sy(lift(x)),
                o.period
            )
            .ok();
        }
    }
    writeln!(svg, "</svg>").ok();
    out.write_all(svg.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(m: &MapModel<f64>) -> String {
        let mut buf = Vec::new();
        emit_lift_plot(m, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn doubling_plot() {
        let s = render(&MapModel::doubling());
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches(r#"class="cut""#).count(), 1);
        // points of least period 1..=6
        assert_eq!(s.matches(r#"class="periodic""#).count(), 1 + 2 + 6 + 12 + 30 + 54);
    }

    #[test]
    fn torus_rejected_by_lift_plot() {
        let mut buf = Vec::new();
        assert!(emit_lift_plot(&MapModel::cat_map(), &mut buf).is_err());
    }

    #[test]
    fn cat_scatter() {
        let mut buf = Vec::new();
        emit_plot(&MapModel::cat_map(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        // Fix(A^4) and Fix(A^3) share the origin: 45 + 16 - 1
        assert_eq!(s.matches(r#"class="periodic""#).count(), 60);
    }
}
