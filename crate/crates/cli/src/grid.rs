//! Field grids written as comma-separated values and `start:step:stop` ranges.

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A grid either as an explicit list or as a range expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Spec(String),
}

/// Grid points are rounded to this many decimals so that ranges do not
/// accumulate floating-point drift.
const DECIMALS: i32 = 9;

fn round(x: f64) -> f64 {
    let s = 10f64.powi(DECIMALS);
    (x * s).round() / s
}

fn number(s: &str) -> CliResult<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("not a number: {s:?}")))?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!("not finite: {s:?}")));
    }
    Ok(x)
}

/// Parse e.g. `"0:0.25:3,1.7:0.1:2.1,2.05"` into sorted, deduplicated points.
/// Range ends are inclusive.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(round(number(x)?)),
            [a, step, b] => {
                let (a, step, b) = (number(a)?, number(step)?, number(b)?);
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(CliError::Usage(format!(
                        "range {item:?} needs a positive step and start <= stop"
                    )));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| round(a + k as f64 * step)));
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "grid item {item:?} is neither a value nor start:step:stop"
                )))
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = parse_grid(crate::config::DEFAULT_GRID).unwrap();
        let expected = [
            0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.7, 1.75, 1.8, 1.9, 2.0, 2.1, 2.25, 2.5, 2.75,
            3.0,
        ];
        assert_eq!(g, expected);
    }

    #[test]
    fn single_points_and_errors() {
        assert_eq!(parse_grid("3").unwrap(), vec![3.0]);
        assert_eq!(parse_grid("2.5, 0.5,2.5").unwrap(), vec![0.5, 2.5]);
        assert!(parse_grid("1:0:2").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("1:2").is_err());
    }
}
