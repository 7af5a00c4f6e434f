//! JSON output with every float written to 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

// serde_json routes non-finite values to `write_null` before reaching here.
fn write_float<W: ?Sized + io::Write>(w: &mut W, value: f64) -> io::Result<()> {
    write!(w, "{value:.16e}")
}

struct Compact17;

impl Formatter for Compact17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write_float(w, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write_float(w, value as f64)
    }
}

struct Pretty17<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident : $ty:ty)*;)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl Formatter for Pretty17<'_> {
    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        begin_object_value;
        end_object_value;
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write_float(w, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write_float(w, value as f64)
    }
}

fn render<T: Serialize + ?Sized, F: Formatter>(value: &T, formatter: F) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, formatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Data(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Single-line document followed by a newline.
pub fn to_string_compact<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    render(value, Compact17)
}

/// Indented document followed by a newline.
pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    render(value, Pretty17(PrettyFormatter::with_indent(b"  ")))
}
