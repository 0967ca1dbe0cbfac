//! Plain-text matrix fixtures: a line holding `d`, then `d` rows of
//! whitespace-separated `re+imi` entries.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::{CMatrix, HermitianMatrix};
use crate::error::{Error, Result};

pub fn format_entry(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

pub fn parse_entry(tok: &str, line: usize) -> Result<Complex64> {
    let body = tok
        .strip_suffix('i')
        .ok_or_else(|| Error::parse(line, format!("entry {tok:?} lacks the trailing 'i'")))?;
    let bytes = body.as_bytes();
    // sign of the imaginary part: last '+'/'-' that is not leading and not an exponent sign
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| Error::parse(line, format!("entry {tok:?} has no imaginary part")))?;
    let re: f64 = body[..split].parse().map_err(|_| Error::parse(line, format!("bad real part in {tok:?}")))?;
    let im: f64 = body[split..].parse().map_err(|_| Error::parse(line, format!("bad imaginary part in {tok:?}")))?;
    Ok(Complex64::new(re, im))
}

pub fn write_matrix(m: &CMatrix) -> String {
    let d = m.nrows();
    let mut out = format!("{d}\n");
    for r in 0..d {
        for c in 0..d {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", format_entry(m[(r, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (l0, first) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let d: usize = first.trim().parse().map_err(|_| Error::parse(l0 + 1, "first line must be the dimension"))?;
    let mut m = CMatrix::zeros(d, d);
    for r in 0..d {
        let (ln, row) = lines.next().ok_or_else(|| Error::parse(l0 + 2 + r, format!("expected {d} rows")))?;
        let toks: Vec<&str> = row.split_whitespace().collect();
        if toks.len() != d {
            return Err(Error::parse(ln + 1, format!("expected {d} entries, found {}", toks.len())));
        }
        for (c, t) in toks.iter().enumerate() {
            m[(r, c)] = parse_entry(t, ln + 1)?;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln + 1, "trailing content after the last row"));
    }
    Ok(m)
}

impl HermitianMatrix {
    pub fn to_text(&self) -> String {
        write_matrix(self.as_matrix())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::new(parse_matrix(text)?)
    }
}

impl std::str::FromStr for HermitianMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_rank_k_state;
    use crate::seed;
    use proptest::prelude::*;

    #[test]
    fn entry_forms() {
        assert_eq!(format_entry(Complex64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(format_entry(Complex64::new(-1.0, 0.0)), "-1+0i");
        assert_eq!(parse_entry("1e-5+2.5E+3i", 1).unwrap(), Complex64::new(1e-5, 2500.0));
        assert_eq!(parse_entry("-3-4i", 1).unwrap(), Complex64::new(-3.0, -4.0));
        assert!(parse_entry("3", 1).is_err());
        assert!(parse_entry("3i", 1).is_err());
    }

    #[test]
    fn state_round_trip() {
        let mut rng = seed::rng_from(10);
        let rho = random_rank_k_state(5, 2, &mut rng).unwrap();
        let back = HermitianMatrix::from_text(&rho.matrix().to_text()).unwrap();
        assert_eq!(&back, rho.matrix());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_matrix("2\n1+0i 0+0i\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("x\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("1\n1+0i 2+0i\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_matrix("1\n1+0i\n5+0i\n"), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn general_round_trip(vals in proptest::collection::vec((any::<f64>(), any::<f64>()), 9)) {
            prop_assume!(vals.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
            let m = CMatrix::from_fn(3, 3, |r, c| Complex64::new(vals[3 * r + c].0, vals[3 * r + c].1));
            let back = parse_matrix(&write_matrix(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
