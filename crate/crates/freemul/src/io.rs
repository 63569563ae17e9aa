//! Reading inputs given inline or by path, and writing CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use freemul_core::{
    builtin_curve, moments_of, AlgebraicCurve, BuiltinCurve, DensityCurve, HalfSeries, LawSpec,
    MomentSequence, STransform,
};
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Text of an argument that is either inline JSON (starts with `{`) or a
/// path to a JSON file.
fn json_text(arg: &str) -> Result<(String, String)> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok((trimmed.to_string(), "inline argument".to_string()));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((text, path.display().to_string()))
}

fn parse_json<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let (text, what) = json_text(arg)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { what, source })
}

/// A law such as `{"kind":"Semicircle","variance":1}`, inline or from a file.
pub fn read_law(arg: &str) -> Result<LawSpec> {
    let law: LawSpec = parse_json(arg)?;
    law.validate()?;
    Ok(law)
}

/// A moment sequence `{"moments":[..]}`, inline or from a file. Any JSON
/// object with a `moments` array is accepted, including convolution output.
pub fn read_moments(arg: &str) -> Result<MomentSequence> {
    parse_json(arg)
}

/// A factor given either as a law (object with `kind`) or as raw moments
/// (object with `moments`), inline or from a file. Laws are expanded to
/// `order` moments.
pub fn read_factor(arg: &str, order: usize) -> Result<MomentSequence> {
    let (text, what) = json_text(arg)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| Error::Json { what: what.clone(), source })?;
    if value.get("kind").is_some() {
        let law: LawSpec =
            serde_json::from_value(value).map_err(|source| Error::Json { what, source })?;
        return Ok(moments_of(&law, order)?);
    }
    serde_json::from_value(value).map_err(|source| Error::Json { what, source })
}

/// A curve by built-in name, inline JSON `{"coeffs":[[..]]}` or file path.
pub fn read_curve(arg: &str) -> Result<AlgebraicCurve> {
    if let Ok(builtin) = arg.parse::<BuiltinCurve>() {
        return Ok(builtin.curve());
    }
    if !arg.trim_start().starts_with('{') && !Path::new(arg).exists() {
        return Ok(builtin_curve(arg)?);
    }
    parse_json(arg)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// One line, comma separated.
pub fn write_moments_csv(m: &MomentSequence, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{}", join(m.as_slice()))?;
    Ok(())
}

/// `x,density` with a header line.
pub fn write_density_csv(d: &DensityCurve, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "x,density")?;
    for (x, v) in d.grid.iter().zip(&d.values) {
        writeln!(out, "{x},{v}")?;
    }
    Ok(())
}

/// One eigenvalue per line.
pub fn write_eigenvalues_csv(values: &[f64], out: &mut dyn Write) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

/// `grade,primary,secondary` over the trusted window; grades are in units of
/// `√z`.
pub fn write_s_transform_csv(s: &STransform, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "grade,primary,secondary")?;
    let Some(primary) = s.primary() else {
        return Ok(());
    };
    let secondary = s.secondary().unwrap_or(primary);
    let window = |a: &HalfSeries| (a.min_grade(), a.trunc_grade());
    let (lo, hi) = window(primary);
    for g in lo..=hi {
        writeln!(out, "{g},{},{}", primary.coeff(g), secondary.coeff(g))?;
    }
    Ok(())
}

pub fn write_json<T: serde::Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|source| Error::Json {
        what: "output".to_string(),
        source,
    })?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_and_file_inputs() {
        assert_eq!(
            read_law(r#"{"kind":"FreePoisson","rate":2}"#).unwrap(),
            LawSpec::FreePoisson { rate: 2.0 }
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"moments":[0,1,0,4],"case_tag":"one_zero_mean"}"#).unwrap();
        let m = read_moments(path.to_str().unwrap()).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 1.0, 0.0, 4.0]);
        assert!(matches!(read_law("{not json"), Err(Error::Json { .. })));
        assert!(matches!(read_law("/no/such/file"), Err(Error::Read { .. })));
        assert!(read_law(r#"{"kind":"Semicircle","variance":-1}"#).is_err());
    }

    #[test]
    fn factors() {
        let m = read_factor(r#"{"kind":"Semicircle","variance":1}"#, 4).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 1.0, 0.0, 2.0]);
        let m = read_factor(r#"{"moments":[1,2]}"#, 4).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0]);
        assert!(read_factor(r#"{"kind":"Cauchy"}"#, 4).is_err());
        assert!(read_factor(r#"{"other":1}"#, 4).is_err());
    }

    #[test]
    fn curves() {
        assert_eq!(
            read_curve("semicircle_x_freepoisson").unwrap(),
            BuiltinCurve::SemicircleXFreepoisson.curve()
        );
        assert_eq!(read_curve(r#"{"coeffs":[[1],[0,-1]]}"#).unwrap().degree_g(), 1);
        assert!(read_curve("no_such_curve").is_err());
    }

    #[test]
    fn csv_shapes() {
        let mut out = Vec::new();
        write_moments_csv(&MomentSequence::new(vec![0.0, 1.0, 0.0, 2.0]).unwrap(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0,1,0,2\n");
        let d = DensityCurve {
            grid: vec![0.0, 0.5],
            values: vec![1.0, 0.25],
            epsilon: 1e-4,
        };
        let mut out = Vec::new();
        write_density_csv(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x,density\n0,1\n0.5,0.25\n");
    }
}
