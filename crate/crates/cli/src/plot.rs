//! Text rendering of loss curves for `--ascii-plot`.

const WIDTH: usize = 60;
const HEIGHT: usize = 12;

/// Plots each `(marker, values)` series over a shared y-axis. Long series are
/// resampled to the plot width by taking the mean of each column's bucket.
pub fn ascii_plot(title: &str, series: &[(char, &[f64])]) -> String {
    let len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if len == 0 || !lo.is_finite() {
        return format!("{title}: no data\n");
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cols = len.min(WIDTH);
    let mut grid = vec![vec![' '; cols]; HEIGHT];
    for (marker, values) in series {
        for (c, cell) in (0..cols).map(|c| (c, bucket_mean(values, c, cols, len))) {
            if let Some(v) = cell {
                let r = ((hi - v) / span * (HEIGHT - 1) as f64).round() as usize;
                grid[r.min(HEIGHT - 1)][c] = *marker;
            }
        }
    }
    let mut out = format!("{title}\n");
    for (r, row) in grid.iter().enumerate() {
        let label = match r {
            0 => format!("{hi:>9.4}"),
            _ if r == HEIGHT - 1 => format!("{lo:>9.4}"),
            _ => " ".repeat(9),
        };
        out.push_str(&label);
        out.push_str(" |");
        out.extend(row.iter());
        out.push('\n');
    }
    out.push_str(&" ".repeat(10));
    out.push('+');
    out.push_str(&"-".repeat(cols));
    out.push('\n');
    let legend: Vec<String> = series.iter().map(|(m, _)| m.to_string()).collect();
    out.push_str(&format!("{:>10} 1..{len}  [{}]\n", "", legend.join(" ")));
    out
}

fn bucket_mean(values: &[f64], col: usize, cols: usize, len: usize) -> Option<f64> {
    let a = col * len / cols;
    let b = ((col + 1) * len / cols).max(a + 1).min(values.len());
    let vals: Vec<f64> = values.get(a..b)?.iter().copied().filter(|v| v.is_finite()).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
