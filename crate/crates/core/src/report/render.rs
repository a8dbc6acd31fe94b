use std::fmt::Write;

use super::forest::{format_p, ForestDiamond, ForestPlotModel, ForestRow};
use crate::error::{Error, Result};

const RIGHT_W: usize = 33;
const MIN_PLOT_W: usize = 12;
const MAX_LABEL_W: usize = 24;

fn right_column(effect: f64, ci: (f64, f64), weight: Option<f64>) -> String {
    let w = weight.map_or(String::new(), |w| format!("{w:.1}%"));
    format!("{effect:>6.2} [{:>6.2}, {:>6.2}] {w:>7}", ci.0, ci.1)
}

fn fit_label(label: &str, width: usize) -> String {
    let n = label.chars().count();
    if n <= width {
        format!("{label:<width$}")
    } else {
        let mut s: String = label.chars().take(width - 1).collect();
        s.push('~');
        s
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    cols: usize,
}

impl Axis {
    fn col(&self, x: f64) -> usize {
        let t = (x - self.lo) / (self.hi - self.lo) * (self.cols - 1) as f64;
        t.round().clamp(0.0, (self.cols - 1) as f64) as usize
    }

    fn inside(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Interval cells with clipping arrows; returns whether anything was clipped.
    fn interval(&self, cells: &mut [char], ci: (f64, f64), fill: char) -> bool {
        let a = self.col(ci.0);
        let b = self.col(ci.1);
        for c in &mut cells[a..=b] {
            *c = fill;
        }
        let mut clipped = false;
        if ci.0 < self.lo {
            cells[0] = '\u{ab}';
            clipped = true;
        }
        if ci.1 > self.hi {
            cells[self.cols - 1] = '\u{bb}';
            clipped = true;
        }
        clipped
    }

    fn blank(&self) -> Vec<char> {
        let mut cells = vec![' '; self.cols];
        if self.inside(0.0) {
            cells[self.col(0.0)] = '|';
        }
        cells
    }
}

/// Fixed-width text forest plot. `width` counts characters and must be at
/// least 60.
pub fn render_forest_text(model: &ForestPlotModel, width: usize) -> Result<String> {
    if width < 60 {
        return Err(Error::input(format!("text forest plots need at least 60 columns, got {width}")));
    }
    let longest = model
        .rows()
        .map(|r| r.label.chars().count())
        .chain(model.diamonds().iter().map(|d| d.label.chars().count()))
        .chain(model.sections.iter().filter_map(|s| s.name.as_ref()).map(|n| n.chars().count()))
        .max()
        .unwrap_or(5)
        .max(5);
    let label_w = longest.min(MAX_LABEL_W).min(width - RIGHT_W - 2 - MIN_PLOT_W);
    let axis = Axis {
        lo: model.axis.0,
        hi: model.axis.1,
        cols: width - label_w - RIGHT_W - 2,
    };
    let pct = (model.ci_level * 100.0).round();
    let mut out = String::new();
    let mut any_clipped = false;

    let line = |out: &mut String, label: &str, cells: &[char], right: &str| {
        let plot: String = cells.iter().collect();
        let text = format!("{} {} {}", fit_label(label, label_w), plot, right);
        let _ = writeln!(out, "{}", text.trim_end());
    };
    let header_right = format!("{:>6} [{pct:.0}% CI]{:>7} {:>6}", "d", "", "Weight");
    line(&mut out, "Study", &vec![' '; axis.cols], &format!("{header_right:<RIGHT_W$}"));

    let draw_row = |out: &mut String, r: &ForestRow| -> bool {
        let mut cells = axis.blank();
        let clipped = axis.interval(&mut cells, r.ci, '-');
        if axis.inside(r.effect) {
            cells[axis.col(r.effect)] = '#';
        }
        let mut right = right_column(r.effect, r.ci, Some(r.weight_percent));
        if clipped {
            right.push_str(" *");
        }
        line(out, &r.label, &cells, &right);
        clipped
    };
    let draw_diamond = |out: &mut String, d: &ForestDiamond| -> bool {
        let mut cells = axis.blank();
        let clipped = axis.interval(&mut cells, d.ci, '=');
        if axis.inside(d.ci.0) {
            cells[axis.col(d.ci.0)] = '<';
        }
        if axis.inside(d.ci.1) {
            cells[axis.col(d.ci.1)] = '>';
        }
        if axis.inside(d.effect) {
            cells[axis.col(d.effect)] = '\u{25c6}';
        }
        let mut right = right_column(d.effect, d.ci, None);
        if clipped {
            right.push_str(" *");
        }
        line(out, &d.label, &cells, &right);
        clipped
    };

    for section in &model.sections {
        if let Some(name) = &section.name {
            let _ = writeln!(out, "{name}");
        }
        for r in &section.rows {
            any_clipped |= draw_row(&mut out, r);
        }
        if let Some(d) = &section.joint {
            any_clipped |= draw_diamond(&mut out, d);
        }
        if let Some(h) = &section.heterogeneity {
            let _ = writeln!(out, "  {}", h.render());
        }
    }
    any_clipped |= draw_diamond(&mut out, &model.joint);
    if let Some(pi) = model.prediction_interval {
        let mut cells = axis.blank();
        any_clipped |= axis.interval(&mut cells, pi, '.');
        line(&mut out, "Prediction interval", &cells, &format!("{:>6} [{:>6.2}, {:>6.2}]", "", pi.0, pi.1));
    }

    // axis line and tick labels
    let mut rule = vec!['-'; axis.cols];
    rule[0] = '+';
    rule[axis.cols - 1] = '+';
    if axis.inside(0.0) {
        rule[axis.col(0.0)] = '+';
    }
    line(&mut out, "", &rule, "");
    let mut ticks = vec![' '; axis.cols];
    let put = |ticks: &mut Vec<char>, at: usize, text: &str| {
        for (i, ch) in text.chars().enumerate() {
            if let Some(c) = ticks.get_mut(at + i) {
                *c = ch;
            }
        }
    };
    let lo_txt = format!("{:.2}", axis.lo);
    let hi_txt = format!("{:.2}", axis.hi);
    put(&mut ticks, 0, &lo_txt);
    put(&mut ticks, axis.cols.saturating_sub(hi_txt.chars().count()), &hi_txt);
    if axis.inside(0.0) {
        let z = axis.col(0.0);
        let free = ticks[z.saturating_sub(1)..(z + 2).min(axis.cols)].iter().all(|c| *c == ' ');
        if free {
            ticks[z] = '0';
        }
    }
    line(&mut out, "", &ticks, "");

    let _ = writeln!(out, "{}", model.heterogeneity.render());
    if let Some(b) = &model.between_groups {
        let _ = writeln!(out, "Test for subgroup differences: Q={:.2} (df={}), p={}", b.q, b.df, format_p(b.p));
    }
    if any_clipped {
        let _ = writeln!(
            out,
            "* interval extends beyond the axis [{:.2}, {:.2}] and is clipped",
            axis.lo, axis.hi
        );
    }
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) const SVG_WIDTH: f64 = 820.0;
pub(crate) const PLOT_LEFT: f64 = 230.0;
pub(crate) const PLOT_WIDTH: f64 = 340.0;
const ROW_H: f64 = 22.0;
const MAX_SQUARE: f64 = 14.0;

/// Horizontal SVG coordinate of an effect value, clamped to the plot area.
pub fn svg_x(model: &ForestPlotModel, x: f64) -> f64 {
    let (lo, hi) = model.axis;
    PLOT_LEFT + ((x - lo) / (hi - lo)).clamp(0.0, 1.0) * PLOT_WIDTH
}

/// Side length of a study's square: area proportional to its weight.
pub fn marker_side(model: &ForestPlotModel, weight_percent: f64) -> f64 {
    let max_w = model.rows().map(|r| r.weight_percent).fold(0.0, f64::max);
    if max_w <= 0.0 {
        return 0.0;
    }
    MAX_SQUARE * (weight_percent / max_w).sqrt()
}

/// Standalone SVG 1.1 forest plot.
pub fn render_forest_svg(model: &ForestPlotModel) -> String {
    let mut body = String::new();
    let mut y = 40.0;
    let mut any_clipped = false;
    let pct = (model.ci_level * 100.0).round();
    let text = |body: &mut String, x: f64, y: f64, anchor: &str, weight: &str, s: &str| {
        let _ = writeln!(
            body,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="{anchor}" font-weight="{weight}">{}</text>"#,
            y + 4.0,
            xml_escape(s)
        );
    };
    text(&mut body, 10.0, 20.0, "start", "bold", "Study");
    text(&mut body, 680.0, 20.0, "end", "bold", &format!("d [{pct:.0}% CI]"));
    text(&mut body, 800.0, 20.0, "end", "bold", "Weight");

    let clip_marks = |body: &mut String, ci: (f64, f64), y: f64| -> bool {
        let mut clipped = false;
        let (lo, hi) = model.axis;
        if ci.0 < lo {
            let x = PLOT_LEFT;
            let _ = writeln!(body, r#"<polygon class="clip" points="{:.2},{y:.2} {:.2},{:.2} {:.2},{:.2}" fill="black"/>"#, x, x + 6.0, y - 4.0, x + 6.0, y + 4.0);
            clipped = true;
        }
        if ci.1 > hi {
            let x = PLOT_LEFT + PLOT_WIDTH;
            let _ = writeln!(body, r#"<polygon class="clip" points="{:.2},{y:.2} {:.2},{:.2} {:.2},{:.2}" fill="black"/>"#, x, x - 6.0, y - 4.0, x - 6.0, y + 4.0);
            clipped = true;
        }
        clipped
    };
    let values = |ci: (f64, f64), effect: f64| format!("{effect:.2} [{:.2}, {:.2}]", ci.0, ci.1);

    let diamond = |body: &mut String, d: &ForestDiamond, y: f64| -> bool {
        let (a, m, b) = (svg_x(model, d.ci.0), svg_x(model, d.effect), svg_x(model, d.ci.1));
        let _ = writeln!(
            body,
            r#"<polygon class="diamond" points="{a:.2},{y:.2} {m:.2},{:.2} {b:.2},{y:.2} {m:.2},{:.2}" fill="black"/>"#,
            y - 7.0,
            y + 7.0
        );
        let clipped = clip_marks(body, d.ci, y);
        text(body, 10.0, y, "start", "bold", &d.label);
        let mut v = values(d.ci, d.effect);
        if clipped {
            v.push_str(" *");
        }
        text(body, 680.0, y, "end", "bold", &v);
        clipped
    };

    for section in &model.sections {
        if let Some(name) = &section.name {
            text(&mut body, 10.0, y, "start", "bold", name);
            y += ROW_H;
        }
        for r in &section.rows {
            let (a, b) = (svg_x(model, r.ci.0), svg_x(model, r.ci.1));
            let _ = writeln!(body, r#"<line x1="{a:.2}" y1="{y:.2}" x2="{b:.2}" y2="{y:.2}" stroke="black"/>"#);
            let (lo, hi) = model.axis;
            if r.effect >= lo && r.effect <= hi {
                let s = marker_side(model, r.weight_percent);
                let x = svg_x(model, r.effect);
                let _ = writeln!(
                    body,
                    r#"<rect class="study" x="{:.2}" y="{:.2}" width="{s:.2}" height="{s:.2}" fill="gray" stroke="black"/>"#,
                    x - s / 2.0,
                    y - s / 2.0
                );
            }
            let clipped = clip_marks(&mut body, r.ci, y);
            any_clipped |= clipped;
            text(&mut body, 10.0, y, "start", "normal", &r.label);
            let mut v = values(r.ci, r.effect);
            if clipped {
                v.push_str(" *");
            }
            text(&mut body, 680.0, y, "end", "normal", &v);
            text(&mut body, 800.0, y, "end", "normal", &format!("{:.1}%", r.weight_percent));
            y += ROW_H;
        }
        if let Some(d) = &section.joint {
            any_clipped |= diamond(&mut body, d, y);
            y += ROW_H;
        }
        if let Some(h) = &section.heterogeneity {
            text(&mut body, 10.0, y, "start", "normal", &h.render());
            y += ROW_H;
        }
    }
    any_clipped |= diamond(&mut body, &model.joint, y);
    y += ROW_H;
    if let Some(pi) = model.prediction_interval {
        let (a, b) = (svg_x(model, pi.0), svg_x(model, pi.1));
        let _ = writeln!(body, r#"<line x1="{a:.2}" y1="{y:.2}" x2="{b:.2}" y2="{y:.2}" stroke="black" stroke-dasharray="2,2"/>"#);
        any_clipped |= clip_marks(&mut body, pi, y);
        text(&mut body, 10.0, y, "start", "normal", "Prediction interval");
        text(&mut body, 680.0, y, "end", "normal", &format!("[{:.2}, {:.2}]", pi.0, pi.1));
        y += ROW_H;
    }

    // axis, ticks and zero reference line
    let (lo, hi) = model.axis;
    let axis_y = y;
    let _ = writeln!(
        body,
        r#"<line x1="{PLOT_LEFT:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="black"/>"#,
        PLOT_LEFT + PLOT_WIDTH
    );
    for v in [lo, 0.0, hi] {
        if v < lo || v > hi {
            continue;
        }
        let x = svg_x(model, v);
        let _ = writeln!(body, r#"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, axis_y + 4.0);
        text(&mut body, x, axis_y + 14.0, "middle", "normal", &format!("{v:.2}"));
    }
    if lo <= 0.0 && hi >= 0.0 {
        let x = svg_x(model, 0.0);
        let _ = writeln!(body, r#"<line x1="{x:.2}" y1="30.00" x2="{x:.2}" y2="{axis_y:.2}" stroke="gray" stroke-dasharray="4,3"/>"#);
    }
    y = axis_y + 36.0;
    text(&mut body, 10.0, y, "start", "normal", &model.heterogeneity.render());
    if let Some(b) = &model.between_groups {
        y += ROW_H;
        let s = format!("Test for subgroup differences: Q={:.2} (df={}), p={}", b.q, b.df, format_p(b.p));
        text(&mut body, 10.0, y, "start", "normal", &s);
    }
    if any_clipped {
        y += ROW_H;
        let s = format!("* interval extends beyond the axis [{lo:.2}, {hi:.2}] and is clipped");
        text(&mut body, 10.0, y, "start", "normal", &s);
    }
    let height = y + 16.0;
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {SVG_WIDTH:.0} {height:.0}\" font-family=\"monospace\" font-size=\"12\">\n\
<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::{random_effects, subgroup_meta, StudyEffect, Tau2Estimator};
    use crate::report::build_forest;

    fn model(sign: f64) -> ForestPlotModel {
        let s = vec![
            StudyEffect::new("S1", sign * 0.2, 0.04).unwrap(),
            StudyEffect::new("S2", sign * 0.5, 0.09).unwrap(),
            StudyEffect::new("S3", sign * 0.8, 0.04).unwrap(),
        ];
        build_forest(&random_effects(&s, Tau2Estimator::DerSimonianLaird, 0.95).unwrap())
    }

    #[test]
    fn text_width_and_determinism() {
        let m = model(1.0);
        assert!(render_forest_text(&m, 59).is_err());
        for width in [60, 80, 120] {
            let t = render_forest_text(&m, width).unwrap();
            assert_eq!(t, render_forest_text(&m, width).unwrap());
            for line in t.lines().filter(|l| l.contains('#')) {
                assert!(line.chars().count() <= width, "{line}");
            }
        }
    }

    #[test]
    fn mirrored_input_mirrors_markers() {
        let (a, b) = (model(1.0), model(-1.0));
        for (ra, rb) in a.rows().zip(b.rows()) {
            let xa = svg_x(&a, ra.effect) - PLOT_LEFT;
            let xb = svg_x(&b, rb.effect) - PLOT_LEFT;
            assert!((xa - (PLOT_WIDTH - xb)).abs() < 1e-9);
        }
    }

    #[test]
    fn marker_area_tracks_weight() {
        let m = model(1.0);
        let rows: Vec<_> = m.rows().collect();
        let (s1, s2) = (marker_side(&m, rows[0].weight_percent), marker_side(&m, rows[1].weight_percent));
        let ratio = (s2 * s2) / (s1 * s1);
        assert!((ratio - rows[1].weight_percent / rows[0].weight_percent).abs() < 1e-12);
    }

    #[test]
    fn clipping_is_annotated() {
        let m = model(1.0).with_axis(0.0, 0.6);
        let t = render_forest_text(&m, 80).unwrap();
        assert!(t.contains("clipped"));
        assert!(t.contains('\u{bb}'));
        let svg = render_forest_svg(&m);
        assert!(svg.contains("clipped"));
        // every study is still listed
        for r in m.rows() {
            assert!(t.contains(&r.label) && svg.contains(&r.label));
        }
    }

    #[test]
    fn subgroup_text_has_three_diamonds() {
        let s = vec![
            StudyEffect::new("S1", 0.2, 0.04).unwrap().with_subgroup("Java"),
            StudyEffect::new("S2", 0.5, 0.04).unwrap().with_subgroup("Java"),
            StudyEffect::new("S3", 0.8, 0.04).unwrap().with_subgroup("C++"),
        ];
        let m = build_forest(&subgroup_meta(&s, Tau2Estimator::Reml, 0.95).unwrap());
        let t = render_forest_text(&m, 90).unwrap();
        assert_eq!(t.matches('\u{25c6}').count(), 3);
        let svg = render_forest_svg(&m);
        assert_eq!(svg.matches(r#"class="diamond""#).count(), 3);
        assert!(t.contains("Test for subgroup differences"));
    }

    #[test]
    fn svg_escapes_labels() {
        let s = vec![StudyEffect::new("A & <B>", 0.3, 0.05).unwrap()];
        let m = build_forest(&random_effects(&s, Tau2Estimator::Reml, 0.95).unwrap());
        let svg = render_forest_svg(&m);
        assert!(svg.contains("A &amp; &lt;B&gt;"));
        assert!(svg.starts_with("<?xml"));
    }
}
