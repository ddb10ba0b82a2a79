//! Headerless numeric CSV samples, one observation per row.

use std::fs;
use std::path::Path;

use ndarray::Array2;

pub fn parse_sample(text: &str) -> Result<Array2<f64>, String> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (j, field) in line.split(',').enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format!("line {lineno}, column {}: not a number: '{}'", j + 1, field.trim()))?;
            if !v.is_finite() {
                return Err(format!("line {lineno}, column {}: non-finite value", j + 1));
            }
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(format!("line {lineno}: expected {w} columns, found {count}"));
            }
            _ => {}
        }
        rows += 1;
    }
    let width = width.ok_or("empty sample")?;
    Array2::from_shape_vec((rows, width), values).map_err(|e| e.to_string())
}

pub fn read_sample(path: &Path) -> Result<Array2<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_sample(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_rows() {
        let a = parse_sample("1,2\n3.5, -4e-1\n\n").unwrap();
        assert_eq!(a.shape(), &[2, 2]);
        assert_eq!(a[[1, 1]], -0.4);
    }

    #[test]
    fn reports_position() {
        assert_eq!(parse_sample("1,2\n3,x\n").unwrap_err(), "line 2, column 2: not a number: 'x'");
        assert_eq!(parse_sample("1,2\n3\n").unwrap_err(), "line 2: expected 2 columns, found 1");
        assert!(parse_sample("1,NaN").unwrap_err().contains("column 2"));
        assert!(parse_sample("\n").is_err());
    }
}
