//! Numeric argument parsing: `2e7`-style counts, `lo:hi` bands and
//! `start:stop:count[:log]` grids.

use crate::error::CliError;

pub fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

/// Counts may be written as floats (`2e7`) as long as they are integral.
pub fn parse_count(s: &str) -> Result<usize, String> {
    let v = parse_f64(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as usize)
}

pub fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("`{s}`: expected lo:hi"));
    }
    let (lo, hi) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
    if !(hi > lo) {
        return Err(format!("`{s}`: need lo < hi"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / n;
                if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// `start:stop:count`, optionally with a trailing `:log`.
pub fn parse_range(s: &str) -> Result<Range, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        4 if parts[3] == "lin" => false,
        _ => return Err(format!("`{s}`: expected start:stop:count[:log]")),
    };
    let range = Range {
        start: parse_f64(parts[0])?,
        stop: parse_f64(parts[1])?,
        count: parse_count(parts[2])?,
        log,
    };
    if range.count == 0 {
        return Err(format!("`{s}`: count must be positive"));
    }
    if log && !(range.start > 0.0 && range.stop > 0.0) {
        return Err(format!("`{s}`: logarithmic grid needs positive bounds"));
    }
    Ok(range)
}

/// Grid with an overriding `--log` flag.
pub fn range_values(range: &Range, force_log: bool) -> Result<Vec<f64>, CliError> {
    let r = Range {
        log: range.log || force_log,
        ..range.clone()
    };
    if r.log && !(r.start > 0.0 && r.stop > 0.0) {
        return Err(CliError::usage("logarithmic grid needs positive bounds"));
    }
    Ok(r.values())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub range: Range,
}

/// `name:start:stop:count[:log]`.
pub fn parse_axis(s: &str) -> Result<Axis, String> {
    let (name, rest) = s.split_once(':').ok_or_else(|| format!("`{s}`: expected name:start:stop:count[:log]"))?;
    Ok(Axis {
        name: name.to_string(),
        range: parse_range(rest)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_float_notation() {
        assert_eq!(parse_count("2e7").unwrap(), 20_000_000);
        assert!(parse_count("2.5").is_err());
        assert!(parse_count("-1").is_err());
    }

    #[test]
    fn ranges() {
        let r = parse_range("1:100:3:log").unwrap();
        let v = r.values();
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(parse_range("0:1:5").unwrap().values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_range("0:1:3:log").is_err());
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn axes_and_bands() {
        let a = parse_axis("pressure:1e-6:1:7:log").unwrap();
        assert_eq!(a.name, "pressure");
        assert_eq!(a.range.count, 7);
        assert_eq!(parse_band("0.8e6:1.4e6").unwrap(), (0.8e6, 1.4e6));
        assert!(parse_band("2:1").is_err());
    }
}
