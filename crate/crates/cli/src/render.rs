//! Standalone SVG figures of a mesh and of its image.

use std::fmt::Write;

use pahomeo::{ConvexPolygon, Point2, PwaMap, Rational};

/// Digits after the decimal point in emitted coordinates.
pub const DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Domain,
    Image,
    SideBySide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub stroke_width: f64,
    pub palette: Vec<String>,
    pub highlight: String,
    /// Pixels per unit length.
    pub scale: Rational,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            stroke_width: 0.5,
            palette: ["#f4f1de", "#e0ecf4", "#e5f5e0", "#fdebd0"].iter().map(|s| s.to_string()).collect(),
            highlight: "#d62728".into(),
            scale: Rational::from_integer(512),
        }
    }
}

fn is_hex_color(s: &str) -> bool {
    s.strip_prefix('#').is_some_and(|h| matches!(h.len(), 3 | 6) && h.bytes().all(|b| b.is_ascii_hexdigit()))
}

impl RenderStyle {
    pub fn check(&self) -> Result<(), String> {
        if !self.scale.is_positive() {
            return Err(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.stroke_width.is_finite() && self.stroke_width >= 0.0) {
            return Err(format!("invalid stroke width {}", self.stroke_width));
        }
        if self.palette.is_empty() {
            return Err("palette is empty".into());
        }
        if let Some(bad) = self.palette.iter().chain([&self.highlight]).find(|c| !is_hex_color(c)) {
            return Err(format!("not a hex color: {bad:?}"));
        }
        Ok(())
    }
}

fn margin() -> Rational {
    Rational::from_integer(8)
}

struct Panel {
    polygons: Vec<ConvexPolygon>,
    lo: Point2,
    hi: Point2,
}

impl Panel {
    fn new(polygons: Vec<ConvexPolygon>) -> Panel {
        let mut it = polygons.iter().flat_map(|p| p.vertices());
        let first = it.next().cloned().unwrap_or_else(Point2::origin);
        let (mut lo, mut hi) = (first.clone(), first);
        for v in polygons.iter().flat_map(|p| p.vertices()) {
            lo = Point2::new(lo.x.clone().min(v.x.clone()), lo.y.clone().min(v.y.clone()));
            hi = Point2::new(hi.x.clone().max(v.x.clone()), hi.y.clone().max(v.y.clone()));
        }
        Panel { polygons, lo, hi }
    }

    fn width(&self, scale: &Rational) -> Rational {
        (&self.hi.x - &self.lo.x) * scale + margin() * Rational::from_integer(2)
    }

    fn height(&self, scale: &Rational) -> Rational {
        (&self.hi.y - &self.lo.y) * scale + margin() * Rational::from_integer(2)
    }

    fn write(&self, out: &mut String, offset: &Rational, style: &RenderStyle, marked: &[bool], class: &str) {
        let _ = writeln!(out, r#"<g class="{class}" transform="translate({},0)">"#, offset.to_decimal_string(DIGITS));
        for (i, poly) in self.polygons.iter().enumerate() {
            let points: Vec<String> = poly
                .vertices()
                .iter()
                .map(|v| {
                    let x = (&v.x - &self.lo.x) * &style.scale + margin();
                    let y = (&self.hi.y - &v.y) * &style.scale + margin();
                    format!("{},{}", x.to_decimal_string(DIGITS), y.to_decimal_string(DIGITS))
                })
                .collect();
            let fill = if marked.get(i).copied().unwrap_or(false) { &style.highlight } else { &style.palette[i % style.palette.len()] };
            let _ = writeln!(
                out,
                r##"<polygon points="{}" fill="{fill}" stroke="#222222" stroke-width="{}"/>"##,
                points.join(" "),
                style.stroke_width
            );
        }
        out.push_str("</g>\n");
    }
}

/// The figure for `f`; cells listed in `highlight` are filled with the
/// highlight color.
pub fn render_svg(f: &PwaMap, highlight: &[usize], mode: Mode, style: &RenderStyle) -> Result<String, String> {
    style.check()?;
    let mesh = f.mesh();
    let mut marked = vec![false; mesh.cell_count()];
    for &c in highlight {
        *marked.get_mut(c).ok_or_else(|| format!("cell {c} is not in the mesh"))? = true;
    }
    let domain = || Panel::new(mesh.polygons().to_vec());
    let image = || -> Result<Panel, String> {
        let polys = (0..mesh.cell_count()).map(|c| f.image_polygon(c)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
        Ok(Panel::new(polys))
    };
    let panels: Vec<(Panel, &str)> = match mode {
        Mode::Domain => vec![(domain(), "domain")],
        Mode::Image => vec![(image()?, "image")],
        Mode::SideBySide => vec![(domain(), "domain"), (image()?, "image")],
    };
    let scale = &style.scale;
    let width: Rational = panels.iter().map(|(p, _)| p.width(scale)).sum();
    let height = panels.iter().map(|(p, _)| p.height(scale)).max().unwrap_or_else(Rational::zero);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = width.to_decimal_string(DIGITS),
        h = height.to_decimal_string(DIGITS)
    );
    let mut offset = Rational::zero();
    for (panel, class) in &panels {
        panel.write(&mut out, &offset, style, &marked, class);
        offset += panel.width(scale);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
