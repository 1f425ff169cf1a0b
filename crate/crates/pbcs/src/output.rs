//! JSON and CSV writers. Every float is printed with 17 significant digits,
//! enough to round-trip any `f64`; non-finite values become `null`.

use std::io::{self, Write};
use std::path::Path;

use pbcs_core::first_order::SwitchingFunctionSamples;
use pbcs_core::search::CurvePoint;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::CliError;

fn write_float<W: ?Sized + Write>(w: &mut W, x: f64) -> io::Result<()> {
    if x.is_finite() {
        write!(w, "{x:.16e}")
    } else {
        w.write_all(b"null")
    }
}

/// Pretty JSON with fixed-precision floats.
pub struct ExactFormatter<'a>(PrettyFormatter<'a>);

impl Default for ExactFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

macro_rules! delegate {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.0.$name(w)
            }
        )*
    };
}

impl Formatter for ExactFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, x: f64) -> io::Result<()> {
        write_float(w, x)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, x: f32) -> io::Result<()> {
        write_float(w, f64::from(x))
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, begin_object_value, end_object_value);
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = (f64, f64)>) -> Result<(), CliError> {
    let io_err = |e| CliError::Io(path.display().to_string(), e);
    let mut out = io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    let body = || -> io::Result<()> {
        writeln!(out, "{header}")?;
        for (a, b) in rows {
            write_float(&mut out, a)?;
            out.write_all(b",")?;
            write_float(&mut out, b)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    body().map_err(io_err)
}

/// Columns `time,m`.
pub fn write_switching_csv(path: &Path, sw: &SwitchingFunctionSamples) -> Result<(), CliError> {
    write_csv(path, "time,m", sw.times.iter().copied().zip(sw.values.iter().copied()))
}

/// Columns `t,rate` with `rate = rho_t^(1/t)`.
pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<(), CliError> {
    write_csv(path, "t,rate", curve.iter().map(|p| (p.horizon, p.rate)))
}
