//! SVG rendering of a two-dimensional run: one polygon per positive-volume
//! cell, the original centers, and where the transport carried them.

use crate::error::{Error, Result};
use crate::purify::color;
use crate::transport::RunReport;

const CANVAS: f64 = 480.0;
const PAD: f64 = 12.0;

pub fn allocation_svg(report: &RunReport) -> Result<String> {
    if report.d != 2 {
        return Err(Error::InvalidArgument(format!(
            "SVG output needs d = 2, got d = {}",
            report.d
        )));
    }
    let w = &report.window;
    let sides = w.sides();
    let scale = CANVAS / sides[0].max(sides[1]);
    let x = |v: f64| PAD + (v - w.lower[0]) * scale;
    let y = |v: f64| PAD + (w.upper[1] - v) * scale;

    let mut cells = String::new();
    let mut arrows = String::new();
    let mut centers = String::new();
    let mut moved = String::new();
    for c in report.owned_cells().filter(|c| c.volume() > 0.0) {
        let id = c.owner_id.expect("owned");
        let b = &c.bounds;
        cells.push_str(&format!(
            "  <polygon class=\"cell\" data-owner=\"{id}\" points=\"{:.4},{:.4} {:.4},{:.4} {:.4},{:.4} {:.4},{:.4}\" fill=\"{}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
            x(b.lower[0]), y(b.lower[1]),
            x(b.upper[0]), y(b.lower[1]),
            x(b.upper[0]), y(b.upper[1]),
            x(b.lower[0]), y(b.upper[1]),
            color(id),
        ));
        let (Some(o), Some(t)) = (&c.owner, &c.carried_point) else {
            continue;
        };
        arrows.push_str(&format!(
            "  <line class=\"transport\" x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"#555\" stroke-dasharray=\"3,2\"/>\n",
            x(o.0[0]), y(o.0[1]), x(t.0[0]), y(t.0[1])
        ));
        centers.push_str(&format!(
            "  <circle class=\"center\" data-owner=\"{id}\" cx=\"{:.4}\" cy=\"{:.4}\" r=\"4\" fill=\"black\"/>\n",
            x(o.0[0]), y(o.0[1])
        ));
        moved.push_str(&format!(
            "  <circle class=\"transported\" data-owner=\"{id}\" data-x=\"{}\" data-y=\"{}\" cx=\"{:.4}\" cy=\"{:.4}\" r=\"4\" fill=\"white\" stroke=\"black\"/>\n",
            t.0[0], t.0[1], x(t.0[0]), y(t.0[1])
        ));
    }
    let size_x = sides[0] * scale + 2.0 * PAD;
    let size_y = sides[1] * scale + 2.0 * PAD;
    Ok(format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size_x:.4}\" height=\"{size_y:.4}\" viewBox=\"0 0 {size_x:.4} {size_y:.4}\">\n\
         <g id=\"cells\">\n{cells}</g>\n<g id=\"transport\">\n{arrows}</g>\n<g id=\"centers\">\n{centers}</g>\n<g id=\"transported\">\n{moved}</g>\n</svg>\n"
    ))
}
