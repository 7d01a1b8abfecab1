//! Weighted point sets as CSV: header `x1,...,xd,weight`, one point per row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => {
            parse_error(line, format!("expected {expected_len} fields, found {len}"))
        }
        _ => parse_error(line, e.to_string()),
    }
}

/// Parses a point set. Line numbers in errors count the header as line 1.
pub fn read_points<R: Read>(reader: R) -> Result<WeightedPointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let n = header.len();
    if n < 2 {
        return Err(parse_error(1, "header needs at least one coordinate column and a weight column"));
    }
    for (i, name) in header.iter().enumerate() {
        let expected = if i + 1 == n {
            "weight".to_string()
        } else {
            format!("x{}", i + 1)
        };
        if name != expected {
            return Err(parse_error(1, format!("column {} is `{name}`, expected `{expected}`", i + 1)));
        }
    }
    let dim = n - 1;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(line, format!("field {} `{field}` is not a number", j + 1)))?;
            if !v.is_finite() {
                return Err(parse_error(line, format!("field {} is not finite", j + 1)));
            }
            if j == dim {
                if !(v > 0.0) {
                    return Err(parse_error(line, format!("weight {v} must be positive")));
                }
                weights.push(v);
            } else {
                coords.push(v);
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    WeightedPointSet::from_parts(dim, coords, weights)
}

pub fn read_points_file(path: &Path) -> Result<WeightedPointSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_points(std::io::BufReader::new(file))
}

/// Writes the point set with shortest round-trip float formatting.
pub fn write_points<W: Write>(writer: W, points: &WeightedPointSet) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=points.dim()).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    wtr.write_record(&header).map_err(csv_error)?;
    for (p, w) in points.iter() {
        let row = p.iter().chain(std::iter::once(&w)).map(|v| v.to_string());
        wtr.write_record(row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn points_to_string(points: &WeightedPointSet) -> String {
    let mut buf = Vec::new();
    write_points(&mut buf, points).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = WeightedPointSet::from_parts(
            2,
            vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0],
            vec![1e-9, 12345.678901234567],
        )
        .unwrap();
        let text = points_to_string(&p);
        assert!(text.starts_with("x1,x2,weight\n"));
        assert_eq!(read_points(text.as_bytes()).unwrap(), p);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "x1,weight\n0,1\n1,abc\n";
        assert!(matches!(read_points(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let short = "x1,x2,weight\n0,1,1\n1,1\n";
        assert!(matches!(read_points(short.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let zero = "x1,weight\n0,0\n";
        assert!(matches!(read_points(zero.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let header = "a,weight\n0,1\n";
        assert!(matches!(read_points(header.as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert_eq!(read_points("x1,weight\n".as_bytes()), Err(Error::EmptyPointSet));
    }

    #[test]
    fn tolerates_spaces_and_comments() {
        let text = "x1, weight\n# comment\n 1.5 , 2\n";
        let p = read_points(text.as_bytes()).unwrap();
        assert_eq!(p.point(0), &[1.5]);
        assert_eq!(p.weight(0), 2.0);
    }
}
