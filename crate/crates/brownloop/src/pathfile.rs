//! Plain-text path files: a header `d m`, then `m + 1` lines `t x_1 ... x_d`.
//! A record file is several such blocks back to back.

use brownloop_core::PiecewiseLinearPath;

use crate::error::{CliError, CliResult};

pub fn write_path(path: &PiecewiseLinearPath, out: &mut String) {
    use std::fmt::Write;
    let d = path.dim();
    writeln!(out, "{} {}", d, path.num_segments()).unwrap();
    for (k, t) in path.times().iter().enumerate() {
        write!(out, "{t:?}").unwrap();
        for x in path.knot(k) {
            write!(out, " {x:?}").unwrap();
        }
        out.push('\n');
    }
    debug_assert!(path.values().len() == d * path.times().len());
}

pub fn format_paths<'a>(paths: impl IntoIterator<Item = &'a PiecewiseLinearPath>) -> String {
    let mut s = String::new();
    for p in paths {
        write_path(p, &mut s);
    }
    s
}

/// Reads every block in `text`. Blank lines and `#` comments are skipped.
pub fn parse_paths(text: &str, file: &str) -> CliResult<Vec<PiecewiseLinearPath>> {
    let err = |line: usize, msg: String| CliError::Parse { file: file.into(), line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut out = Vec::new();
    while let Some((ln, header)) = lines.next() {
        let h: Vec<&str> = header.split_whitespace().collect();
        let parse_u = |s: &str| s.parse::<usize>().ok();
        let (d, m) = match h.as_slice() {
            [a, b] => match (parse_u(a), parse_u(b)) {
                (Some(d), Some(m)) if d > 0 && m > 0 => (d, m),
                _ => return Err(err(ln, format!("bad header `{header}`"))),
            },
            _ => return Err(err(ln, format!("expected header `d m`, found `{header}`"))),
        };
        let mut times = Vec::with_capacity(m + 1);
        let mut values = Vec::with_capacity(d * (m + 1));
        let mut last = ln;
        for _ in 0..=m {
            let (ln, row) = lines.next().ok_or_else(|| err(last, format!("expected {} knots", m + 1)))?;
            last = ln;
            let nums = row
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| err(ln, format!("bad number `{s}`"))))
                .collect::<CliResult<Vec<f64>>>()?;
            if nums.len() != d + 1 {
                return Err(err(ln, format!("expected {} columns, found {}", d + 1, nums.len())));
            }
            times.push(nums[0]);
            values.extend_from_slice(&nums[1..]);
        }
        out.push(PiecewiseLinearPath::new(d, times, values).map_err(|e| err(ln, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(err(1, "no path found".into()));
    }
    Ok(out)
}
