//! Grid specifications given on the command line.

use smse_core::Error;

/// Parses `a,b,c`, `a..b` (unit step), `a..b:step` or `a..b*ratio`.
/// Ranges include `b` when it lies on the grid.
pub fn parse_values(text: &str) -> Result<Vec<f64>, Error> {
    let text = text.trim();
    let bad = |why: &str| Error::Config(format!("bad value list `{text}`: {why}"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let values = match text.split_once("..") {
        None => text.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        Some((start, rest)) => {
            let start = number(start)?;
            if let Some((end, ratio)) = rest.split_once('*') {
                let (end, ratio) = (number(end)?, number(ratio)?);
                if !(ratio > 1.0) || !(start > 0.0) {
                    return Err(bad("geometric ranges need a positive start and a ratio above 1"));
                }
                let mut out = Vec::new();
                let mut i = 0;
                loop {
                    let v = start * ratio.powi(i);
                    if v > end * (1.0 + 1e-12) {
                        break;
                    }
                    out.push(v);
                    i += 1;
                }
                out
            } else {
                let (end, step) = match rest.split_once(':') {
                    Some((end, step)) => (number(end)?, number(step)?),
                    None => (number(rest)?, 1.0),
                };
                if !(step > 0.0) {
                    return Err(bad("step must be positive"));
                }
                let count = ((end - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Err(bad("range end lies below its start"));
                }
                (0..=count as u64).map(|i| start + i as f64 * step).collect()
            }
        }
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("needs at least one finite value"));
    }
    Ok(values)
}
