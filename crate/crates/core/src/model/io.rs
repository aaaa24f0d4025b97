//! Plain-text parameter files.
//!
//! ```text
//! deepmstm-params 1
//! scalar f64
//! lstm.bias 1 32
//! 0e0 0e0 ...
//! ```
//!
//! Each array is a header line `name rank dims...` followed by one line of
//! values in shortest round-trip exponent form, so writing the same arrays
//! twice gives identical bytes.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensorcore::Tensor;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "deepmstm-params";

pub fn write_arrays<T: Scalar, W: Write>(mut out: W, arrays: &[(String, Tensor<T>)]) -> Result<()> {
    writeln!(out, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(out, "scalar {}", T::NAME)?;
    for (name, t) in arrays {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Contract(format!("array name {name:?} must be a single word")));
        }
        write!(out, "{name} {}", t.rank())?;
        for d in t.shape() {
            write!(out, " {d}")?;
        }
        writeln!(out)?;
        let mut first = true;
        for v in t.data() {
            if !first {
                write!(out, " ")?;
            }
            write!(out, "{v:e}")?;
            first = false;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_arrays<T: Scalar, R: BufRead>(input: R) -> Result<Vec<(String, Tensor<T>)>> {
    let bad = |msg: String| Error::Incompatible(msg);
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Incompatible(format!("parameter file ends before {what}")))
    };

    let header = next("the header")?;
    let expected = format!("{MAGIC} {FORMAT_VERSION}");
    if header.trim_end() != expected {
        return Err(bad(format!("expected header {expected:?}, found {:?}", header.trim_end())));
    }
    let scalar = next("the scalar line")?;
    let expected = format!("scalar {}", T::NAME);
    if scalar.trim_end() != expected {
        return Err(bad(format!("expected {expected:?}, found {:?}", scalar.trim_end())));
    }

    let mut arrays = Vec::new();
    loop {
        let head = match lines.next().transpose()? {
            Some(h) if h.trim().is_empty() => continue,
            Some(h) => h,
            None => break,
        };
        let mut parts = head.split_whitespace();
        let name = parts.next().unwrap_or_default().to_string();
        let rank: usize = parts
            .next()
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| bad(format!("array {name:?}: missing rank")))?;
        let shape: Vec<usize> = parts
            .map(|d| d.parse().map_err(|_| bad(format!("array {name:?}: bad dimension {d:?}"))))
            .collect::<Result<_>>()?;
        if shape.len() != rank {
            return Err(bad(format!("array {name:?}: rank {rank} with {} dimensions", shape.len())));
        }
        let body = lines
            .next()
            .transpose()?
            .ok_or_else(|| bad(format!("array {name:?}: missing values")))?;
        let data: Vec<T> = body
            .split_whitespace()
            .map(|v| v.parse::<T>().map_err(|_| bad(format!("array {name:?}: bad value {v:?}"))))
            .collect::<Result<_>>()?;
        let tensor =
            Tensor::new(shape, data).map_err(|e| bad(format!("array {name:?}: {e}")))?;
        arrays.push((name, tensor));
    }
    Ok(arrays)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<(String, Tensor<f64>)> {
        vec![
            ("a".into(), Tensor::new(vec![2, 2], vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0]).unwrap()),
            ("b".into(), Tensor::vector(vec![f64::MIN_POSITIVE])),
            ("empty".into(), Tensor::zeros(&[0, 3])),
        ]
    }

    #[test]
    fn round_trip_is_exact_and_stable() {
        let mut first = Vec::new();
        write_arrays(&mut first, &sample()).unwrap();
        let back: Vec<(String, Tensor<f64>)> = read_arrays(first.as_slice()).unwrap();
        assert_eq!(back, sample());
        let mut second = Vec::new();
        write_arrays(&mut second, &back).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn f32_round_trip() {
        let arrays = vec![("w".to_string(), Tensor::vector(vec![0.1f32, 3.4e38, -1e-40]))];
        let mut buf = Vec::new();
        write_arrays(&mut buf, &arrays).unwrap();
        assert_eq!(read_arrays::<f32, _>(buf.as_slice()).unwrap(), arrays);
    }

    #[test]
    fn rejects_wrong_header_or_scalar() {
        let mut buf = Vec::new();
        write_arrays(&mut buf, &sample()).unwrap();
        assert!(matches!(read_arrays::<f32, _>(buf.as_slice()), Err(Error::Incompatible(_))));
        let text = String::from_utf8(buf).unwrap().replacen("params 1", "params 9", 1);
        assert!(matches!(read_arrays::<f64, _>(text.as_bytes()), Err(Error::Incompatible(_))));
    }

    #[test]
    fn rejects_truncated_values() {
        let text = "deepmstm-params 1\nscalar f64\nw 1 3\n1e0 2e0\n";
        assert!(matches!(read_arrays::<f64, _>(text.as_bytes()), Err(Error::Incompatible(_))));
    }
}
