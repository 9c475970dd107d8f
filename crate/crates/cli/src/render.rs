use std::fmt::Write as _;
use std::path::Path;

use fractembed::ifs::{BoxCover, Ifs};
use fractembed::numerics::{Scalar, Vector2};
use num_rational::BigRational;

use crate::error::{CliError, Result};

#[derive(Clone, Debug)]
pub struct SvgStyle {
    pub fill: String,
    pub stroke: String,
    /// Stroke width as a fraction of the larger viewBox side.
    pub stroke_frac: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { fill: "#1f4e79".into(), stroke: "#1f4e79".into(), stroke_frac: 0.002 }
    }
}

/// Exact `[x0, x1, y0, y1]` of the image of the exact hull under a word.
fn exact_rect(ifs: &Ifs, word: &[u8]) -> Option<[BigRational; 4]> {
    let h = ifs.exact_bbox()?;
    let m = ifs.compose_word(word);
    let mut xs = Vec::with_capacity(4);
    let mut ys = Vec::with_capacity(4);
    for (x, y) in [(&h[0], &h[2]), (&h[0], &h[3]), (&h[1], &h[2]), (&h[1], &h[3])] {
        let p = m.apply(&Vector2::new(Scalar::Exact(x.clone()), Scalar::Exact(y.clone())));
        xs.push(p.x.exact()?.clone());
        ys.push(p.y.exact()?.clone());
    }
    let lo = |v: &[BigRational]| v.iter().min().expect("four corners").clone();
    let hi = |v: &[BigRational]| v.iter().max().expect("four corners").clone();
    Some([lo(&xs), hi(&xs), lo(&ys), hi(&ys)])
}

/// One `<rect>` per box; the y axis points up. With `exact` given (and
/// exact), each rect also carries its exact corners in `data-exact`.
pub fn render_svg(cover: &BoxCover, style: &SvgStyle, exact: Option<&Ifs>) -> Result<String> {
    let bb = cover.bbox().ok_or(CliError::Core(fractembed::Error::EmptySet))?;
    let (x0, x1, y0, y1) = (bb.x.lo(), bb.x.hi(), bb.y.lo(), bb.y.hi());
    let side = (x1 - x0).max(y1 - y0);
    let pad = if side > 0.0 { 0.02 * side } else { 1.0 };
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="800">"#,
        x0 - pad,
        -y1 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    )
    .expect("string write");
    writeln!(
        s,
        r#"<g fill="{}" stroke="{}" stroke-width="{}">"#,
        style.fill,
        style.stroke,
        style.stroke_frac * (side + 2.0 * pad)
    )
    .expect("string write");
    for b in &cover.boxes {
        let r = b.rect;
        write!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" data-word="{}""#,
            r.x.lo(),
            -r.y.hi(),
            r.x.width(),
            r.y.width(),
            b.word
        )
        .expect("string write");
        if let Some(e) = exact.and_then(|f| exact_rect(f, b.word.as_slice())) {
            write!(s, r#" data-exact="{} {} {} {}""#, e[0], e[1], e[2], e[3]).expect("string write");
        }
        s.push_str("/>\n");
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

pub fn write_svg(cover: &BoxCover, path: &Path, style: &SvgStyle, exact: Option<&Ifs>) -> Result<usize> {
    let svg = render_svg(cover, style, exact)?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))?;
    Ok(cover.len())
}
