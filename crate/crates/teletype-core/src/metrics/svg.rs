//! Minimal static SVG output: bar charts and per-mode scatter panels.

/// Vertical bar chart. Labels render under every nth bar when crowded.
pub fn bar_chart(title: &str, series: &[(String, f64)]) -> String {
    let width = 720.0;
    let height = 360.0;
    let margin = 48.0;
    let plot_w = width - 2.0 * margin;
    let plot_h = height - 2.0 * margin;
    let max = series.iter().map(|(_, v)| *v).fold(0.0_f64, f64::max).max(1.0);
    let n = series.len().max(1) as f64;
    let step = plot_w / n;
    let bar_w = (step * 0.8).max(1.0);
    let label_every = (series.len() / 12).max(1);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2.0,
        title
    ));
    out.push_str(&format!(
        "<line x1=\"{margin}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        height - margin,
        width - margin
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{max:.0}</text>\n",
        margin - 4.0,
        margin + 4.0
    ));
    for (i, (label, value)) in series.iter().enumerate() {
        let h = plot_h * value / max;
        let x = margin + i as f64 * step + (step - bar_w) / 2.0;
        let y = height - margin - h;
        out.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" height=\"{h:.1}\" fill=\"#4878a8\"/>\n"
        ));
        if i % label_every == 0 {
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"middle\">{}</text>\n",
                x + bar_w / 2.0,
                height - margin + 12.0,
                label
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Side-by-side scatter panels, one per named series.
pub fn scatter_panels(title: &str, panels: &[(String, Vec<(f64, f64)>)]) -> String {
    let panel_w = 280.0;
    let panel_h = 280.0;
    let margin = 40.0;
    let width = margin + panels.len() as f64 * (panel_w + margin);
    let height = panel_h + 2.0 * margin + 20.0;

    let all_points = panels.iter().flat_map(|(_, pts)| pts.iter());
    let x_max = all_points
        .clone()
        .map(|(x, _)| *x)
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let y_abs = all_points
        .map(|(_, y)| y.abs())
        .fold(0.0_f64, f64::max)
        .max(1e-9);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2.0,
        title
    ));
    for (i, (name, points)) in panels.iter().enumerate() {
        let x0 = margin + i as f64 * (panel_w + margin);
        let y0 = margin + 10.0;
        let mid = y0 + panel_h / 2.0;
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{panel_w}\" height=\"{panel_h}\" fill=\"none\" stroke=\"#999\"/>\n"
        ));
        out.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{mid}\" x2=\"{}\" y2=\"{mid}\" stroke=\"#ccc\"/>\n",
            x0 + panel_w
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{name}</text>\n",
            x0 + panel_w / 2.0,
            y0 + panel_h + 16.0
        ));
        for (x, y) in points {
            let px = x0 + panel_w * (x / x_max).min(1.0);
            let py = mid - (panel_h / 2.0) * (y / y_abs).clamp(-1.0, 1.0);
            out.push_str(&format!(
                "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"2\" fill=\"#a84848\" fill-opacity=\"0.6\"/>\n"
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_svg() {
        let bars = bar_chart("counts", &[("a".into(), 3.0), ("b".into(), 1.0)]);
        assert!(bars.starts_with("<svg"));
        assert!(bars.ends_with("</svg>\n"));
        assert_eq!(bars.matches("<rect").count(), 2);

        let scatter = scatter_panels(
            "density",
            &[("nocheck".into(), vec![(1.0, 0.5), (2.0, -0.5)])],
        );
        assert!(scatter.contains("circle"));
        assert!(scatter.ends_with("</svg>\n"));
    }
}
