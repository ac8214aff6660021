//! CSV and JSON writers. Every float is printed as `{:.16e}`, which round-trips.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use exterior_heat::Field;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON with scientific floats.
pub struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Default for SciFormatter<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<S: Serialize>(value: &S) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> io::Result<()> {
    std::fs::write(path, to_json_string(value)?)
}

/// A CSV cell: floats go through [`float`], `None` is an empty cell.
pub enum Cell {
    Int(usize),
    Float(f64),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float(*v),
            Cell::Empty => String::new(),
        }
    }
}

pub struct CsvTable {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvTable {
    pub fn create<S: AsRef<str>>(path: &Path, header: &[S]) -> io::Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(header.iter().map(AsRef::as_ref))?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> io::Result<()> {
        self.writer.write_record(cells.iter().map(Cell::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

/// `x1..xd` for Cartesian grids, `s` for radial ones.
pub fn coordinate_names(coord_dim: usize, radial: bool) -> Vec<String> {
    if radial {
        vec!["s".into()]
    } else {
        (1..=coord_dim).map(|k| format!("x{k}")).collect()
    }
}

/// Header `node, <coords>, radius, extra...`.
pub fn node_header(field: &Field<f64>, extra: &[&str]) -> Vec<String> {
    let grid = field.grid();
    let radial = grid.backend() == exterior_heat::Backend::Radial;
    let mut h = vec!["node".to_string()];
    h.extend(coordinate_names(grid.coord_dim(), radial));
    h.push("radius".into());
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

pub fn node_cells(field: &Field<f64>, node: usize) -> Vec<Cell> {
    let grid = field.grid();
    let mut cells = vec![Cell::Int(node)];
    cells.extend(grid.coords(node).iter().map(|&c| Cell::Float(c)));
    cells.push(Cell::Float(grid.radius(node)));
    cells
}

/// One row per node: position followed by the value.
pub fn write_field(path: &Path, field: &Field<f64>, column: &str) -> io::Result<()> {
    let mut table = CsvTable::create(path, &node_header(field, &[column]))?;
    for (i, &v) in field.values().iter().enumerate() {
        let mut cells = node_cells(field, i);
        cells.push(Cell::Float(v));
        table.row(cells)?;
    }
    table.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_json() {
        let values = vec![0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.0];
        let text = to_json_string(&values).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn integers_stay_integers() {
        let text = to_json_string(&serde_json::json!({"n": 3, "x": 1.5})).unwrap();
        assert!(text.contains("\"n\": 3"));
        assert!(text.contains("\"x\": 1.5000000000000000e0"));
    }
}
