//! Minimal static SVG line plots and heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finite_range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn header(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text transform=\"translate(18 {}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        esc(title),
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 15.0,
        esc(xlabel),
        TOP + (H - TOP - BOTTOM) / 2.0,
        esc(ylabel)
    );
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64)) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>");
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x.0 + f * (x.1 - x.0);
        let px = LEFT + f * pw;
        let _ = writeln!(out, "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>", TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\">{}</text>", TOP + ph + 18.0, tick(xv));
        let yv = y.0 + f * (y.1 - y.0);
        let py = TOP + ph - f * ph;
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{py}\" x2=\"{LEFT}\" y2=\"{py}\" stroke=\"black\"/>", LEFT - 5.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", LEFT - 8.0, py + 4.0, tick(yv));
    }
}

/// Line plot of one or more series sharing the x values. Non-finite points break the line.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel);
    let xr = finite_range(x.iter().copied()).unwrap_or((0.0, 1.0));
    let yr = finite_range(series.iter().flat_map(|s| s.1.iter().copied())).unwrap_or((0.0, 1.0));
    axes(&mut out, xr, yr);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |v: f64| LEFT + (v - xr.0) / (xr.1 - xr.0) * pw;
    let py = |v: f64| TOP + ph - (v - yr.0) / (yr.1 - yr.0) * ph;
    for (n, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let mut path = String::new();
        let mut pen = false;
        for (xv, yv) in x.iter().zip(ys) {
            if !yv.is_finite() {
                pen = false;
                continue;
            }
            let _ = write!(path, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, px(*xv), py(*yv));
            pen = true;
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>", px(*xv), py(*yv));
        }
        let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>", path.trim_end());
        let ly = TOP + 14.0 + 16.0 * n as f64;
        let _ = writeln!(out, "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>", W - RIGHT + 8.0, W - RIGHT + 26.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", W - RIGHT + 30.0, ly + 4.0, esc(name));
    }
    out.push_str("</svg>\n");
    out
}

fn viridis(t: f64) -> String {
    // five-stop approximation
    const STOPS: [(f64, f64, f64); 5] = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let c = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Heatmap of `z[ix][iy]` on the grid `x` × `y`; failed points (NaN) are drawn grey.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64], z: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel);
    let edges = |v: &[f64]| -> Vec<f64> {
        if v.len() == 1 {
            let d = if v[0] == 0.0 { 0.5 } else { 0.5 * v[0].abs() };
            return vec![v[0] - d, v[0] + d];
        }
        let mut e = vec![v[0] - 0.5 * (v[1] - v[0])];
        e.extend(v.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        e.push(v[v.len() - 1] + 0.5 * (v[v.len() - 1] - v[v.len() - 2]));
        e
    };
    let (xe, ye) = (edges(x), edges(y));
    let xr = (xe[0], xe[xe.len() - 1]);
    let yr = (ye[0], ye[ye.len() - 1]);
    let zr = finite_range(z.iter().flatten().copied()).unwrap_or((0.0, 1.0));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |v: f64| LEFT + (v - xr.0) / (xr.1 - xr.0) * pw;
    let py = |v: f64| TOP + ph - (v - yr.0) / (yr.1 - yr.0) * ph;
    for i in 0..x.len() {
        for j in 0..y.len() {
            let v = z[i][j];
            let fill = if v.is_finite() { viridis((v - zr.0) / (zr.1 - zr.0)) } else { "#bbbbbb".into() };
            let (x0, x1) = (px(xe[i]), px(xe[i + 1]));
            let (y0, y1) = (py(ye[j + 1]), py(ye[j]));
            let _ = writeln!(
                out,
                "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"><title>{}, {}: {}</title></rect>",
                x1 - x0,
                y1 - y0,
                tick(x[i]),
                tick(y[j]),
                tick(v)
            );
        }
    }
    axes(&mut out, xr, yr);
    let bx = W - RIGHT + 20.0;
    for k in 0..50 {
        let f = k as f64 / 49.0;
        let _ = writeln!(out, "<rect x=\"{bx}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>", TOP + ph * (1.0 - f) - ph / 50.0, ph / 50.0 + 0.5, viridis(f));
    }
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", bx + 20.0, TOP + 8.0, tick(zr.1));
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", bx + 20.0, TOP + ph, tick(zr.0));
    out.push_str("</svg>\n");
    out
}
