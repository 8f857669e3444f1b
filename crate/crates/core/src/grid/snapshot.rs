//! Raw field snapshots: a text header followed by a row-major payload.
//!
//! ```text
//! rashba-snapshot 1
//! name: spin_density
//! shape: 4 32 32
//! grid: lx1=6.283185307179586 lx2=6.283185307179586 nx1=32 nx2=32 pmax=6.0 np1=48 np2=48 dt=0.001
//! time: 0.25
//! encoding: csv
//! end
//! <payload>
//! ```
//!
//! The CSV payload has one line per innermost row, values comma-separated in
//! shortest round-trip form. The binary payload is little-endian `f64`. Both
//! encodings reproduce every bit of the stored values.

use std::io::{BufRead, Write};

use ndarray::{Array2, Array4, Axis};

use super::{GridSpec, SpinDensityField, WignerField};
use crate::error::{Error, Result};

const MAGIC: &str = "rashba-snapshot 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Csv,
    Binary,
}

impl Encoding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Encoding::Csv => "csv",
            Encoding::Binary => "binary",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Encoding::Csv),
            "binary" => Ok(Encoding::Binary),
            other => Err(Error::Format(format!("unknown encoding {other:?} (csv | binary)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub shape: Vec<usize>,
    pub grid: GridSpec,
    pub time: f64,
    pub data: Vec<f64>,
}

impl Snapshot {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, grid: GridSpec, time: f64, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Format(format!("field name {name:?} must be a non-empty word")));
        }
        let expected: usize = shape.iter().product();
        if shape.is_empty() || expected != data.len() {
            return Err(Error::Format(format!(
                "shape {shape:?} holds {expected} values, payload has {}",
                data.len()
            )));
        }
        Ok(Self { name, shape, grid, time, data })
    }

    /// Shape `[4, nx1, nx2]`.
    pub fn from_density(name: &str, n: &SpinDensityField, grid: GridSpec, time: f64) -> Result<Self> {
        let mut shape = vec![4];
        shape.extend_from_slice(n.shape());
        let data = n.comps().iter().flat_map(|c| c.iter().copied()).collect();
        Self::new(name, shape, grid, time, data)
    }

    /// Shape `[4, nx1, nx2, np1, np2]`.
    pub fn from_wigner(name: &str, w: &WignerField, grid: GridSpec, time: f64) -> Result<Self> {
        let mut shape = vec![4];
        shape.extend_from_slice(w.shape());
        let data = w.comps().iter().flat_map(|c| c.iter().copied()).collect();
        Self::new(name, shape, grid, time, data)
    }

    pub fn to_density(&self) -> Result<SpinDensityField> {
        let [4, n1, n2] = self.shape[..] else {
            return Err(Error::Format(format!("expected shape [4, nx1, nx2], found {:?}", self.shape)));
        };
        let all = ndarray::Array3::from_shape_vec((4, n1, n2), self.data.clone())
            .map_err(|e| Error::Format(e.to_string()))?;
        let comps: [Array2<f64>; 4] = std::array::from_fn(|k| all.index_axis(Axis(0), k).to_owned());
        SpinDensityField::from_components(comps)
    }

    pub fn to_wigner(&self) -> Result<WignerField> {
        let [4, n1, n2, m1, m2] = self.shape[..] else {
            return Err(Error::Format(format!("expected shape [4, nx1, nx2, np1, np2], found {:?}", self.shape)));
        };
        let all = ndarray::Array5::from_shape_vec((4, n1, n2, m1, m2), self.data.clone())
            .map_err(|e| Error::Format(e.to_string()))?;
        let comps: [Array4<f64>; 4] = std::array::from_fn(|k| all.index_axis(Axis(0), k).to_owned());
        WignerField::from_components(comps)
    }

    /// A plain 2D field, shape `[nx1, nx2]`.
    pub fn to_array2(&self) -> Result<Array2<f64>> {
        let [n1, n2] = self.shape[..] else {
            return Err(Error::Format(format!("expected shape [nx1, nx2], found {:?}", self.shape)));
        };
        Array2::from_shape_vec((n1, n2), self.data.clone()).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write<W: Write>(&self, mut out: W, encoding: Encoding) -> Result<()> {
        let g = &self.grid;
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "name: {}", self.name)?;
        let shape: Vec<String> = self.shape.iter().map(|s| s.to_string()).collect();
        writeln!(out, "shape: {}", shape.join(" "))?;
        writeln!(
            out,
            "grid: lx1={:?} lx2={:?} nx1={} nx2={} pmax={:?} np1={} np2={} dt={:?}",
            g.lx1, g.lx2, g.nx1, g.nx2, g.pmax, g.np1, g.np2, g.dt
        )?;
        writeln!(out, "time: {:?}", self.time)?;
        writeln!(out, "encoding: {}", encoding.as_str())?;
        writeln!(out, "end")?;
        match encoding {
            Encoding::Csv => {
                let row = *self.shape.last().expect("non-empty shape");
                let mut line = String::new();
                for chunk in self.data.chunks(row) {
                    line.clear();
                    for (i, v) in chunk.iter().enumerate() {
                        if i > 0 {
                            line.push(',');
                        }
                        line.push_str(&format!("{v:?}"));
                    }
                    writeln!(out, "{line}")?;
                }
            }
            Encoding::Binary => {
                let mut bytes = Vec::with_capacity(self.data.len() * 8);
                for v in &self.data {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
                out.write_all(&bytes)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = String::new();
        let mut next_line = |input: &mut R| -> Result<String> {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(Error::Format("unexpected end of header".into()));
            }
            Ok(line.trim_end_matches(['\n', '\r']).to_string())
        };
        if next_line(&mut input)? != MAGIC {
            return Err(Error::Format(format!("missing {MAGIC:?} header line")));
        }
        let mut name = None;
        let mut shape = None;
        let mut grid = None;
        let mut time = None;
        let mut encoding = None;
        loop {
            let l = next_line(&mut input)?;
            if l == "end" {
                break;
            }
            let (key, value) = l
                .split_once(": ")
                .ok_or_else(|| Error::Format(format!("malformed header line {l:?}")))?;
            match key {
                "name" => name = Some(value.to_string()),
                "shape" => {
                    shape = Some(
                        value
                            .split_whitespace()
                            .map(|s| s.parse::<usize>().map_err(|e| Error::Format(format!("shape: {e}"))))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "grid" => grid = Some(parse_grid(value)?),
                "time" => time = Some(parse_f64("time", value)?),
                "encoding" => encoding = Some(Encoding::parse(value)?),
                other => return Err(Error::Format(format!("unknown header key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Format(format!("header lacks {k:?}"));
        let shape = shape.ok_or_else(|| missing("shape"))?;
        let len: usize = shape.iter().product();
        let data = match encoding.ok_or_else(|| missing("encoding"))? {
            Encoding::Csv => {
                let mut text = String::new();
                input.read_to_string(&mut text)?;
                text.split(['\n', ','])
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_f64("payload", s))
                    .collect::<Result<Vec<_>>>()?
            }
            Encoding::Binary => {
                let mut bytes = Vec::with_capacity(len * 8);
                input.read_to_end(&mut bytes)?;
                if bytes.len() != len * 8 {
                    return Err(Error::Format(format!(
                        "binary payload has {} bytes, expected {}",
                        bytes.len(),
                        len * 8
                    )));
                }
                bytes
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect()
            }
        };
        Self::new(
            name.ok_or_else(|| missing("name"))?,
            shape,
            grid.ok_or_else(|| missing("grid"))?,
            time.ok_or_else(|| missing("time"))?,
            data,
        )
    }
}

fn parse_f64(what: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Format(format!("{what}: cannot parse {s:?}: {e}")))
}

fn parse_grid(value: &str) -> Result<GridSpec> {
    let mut g = GridSpec::default();
    for item in value.split_whitespace() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("malformed grid entry {item:?}")))?;
        let int = |v: &str| v.parse::<usize>().map_err(|e| Error::Format(format!("grid {k}: {e}")));
        match k {
            "lx1" => g.lx1 = parse_f64(k, v)?,
            "lx2" => g.lx2 = parse_f64(k, v)?,
            "pmax" => g.pmax = parse_f64(k, v)?,
            "dt" => g.dt = parse_f64(k, v)?,
            "nx1" => g.nx1 = int(v)?,
            "nx2" => g.nx2 = int(v)?,
            "np1" => g.np1 = int(v)?,
            "np2" => g.np2 = int(v)?,
            other => return Err(Error::Format(format!("unknown grid key {other:?}"))),
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn any_f64() -> impl Strategy<Value = f64> {
        prop_oneof![
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            Just(f64::MIN_POSITIVE),
            Just(-0.0),
            Just(5e-324),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            data in proptest::collection::vec(any_f64(), 12),
            time in any_f64(),
            binary in any::<bool>(),
        ) {
            let snap = Snapshot::new("field", vec![3, 4], GridSpec::default(), time, data).unwrap();
            let enc = if binary { Encoding::Binary } else { Encoding::Csv };
            let mut buf = vec![];
            snap.write(&mut buf, enc).unwrap();
            let back = Snapshot::read(&buf[..]).unwrap();
            prop_assert_eq!(back.time.to_bits(), snap.time.to_bits());
            prop_assert_eq!(back.shape, snap.shape);
            prop_assert_eq!(back.grid, snap.grid);
            for (a, b) in back.data.iter().zip(&snap.data) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Snapshot::new("a b", vec![1], GridSpec::default(), 0.0, vec![0.0]).is_err());
        assert!(Snapshot::new("a", vec![2], GridSpec::default(), 0.0, vec![0.0]).is_err());
        assert!(Snapshot::read(&b"not a snapshot\n"[..]).is_err());
        let truncated = format!("{MAGIC}\nname: x\nshape: 2\n");
        assert!(Snapshot::read(truncated.as_bytes()).is_err());
        let short = format!(
            "{MAGIC}\nname: x\nshape: 2\ngrid: nx1=8\ntime: 0.0\nencoding: binary\nend\n1234"
        );
        assert!(Snapshot::read(short.as_bytes()).is_err());
    }

    #[test]
    fn density_shape_round_trip() {
        let grid = crate::grid::Grid::new(GridSpec { nx1: 8, nx2: 10, np1: 8, np2: 8, ..GridSpec::default() }).unwrap();
        let n = SpinDensityField::from_fn(&grid, |x| [1.0 + x[0], x[1], -x[0], 0.5]);
        let snap = Snapshot::from_density("n", &n, *grid.spec(), 1.5).unwrap();
        assert_eq!(snap.shape, vec![4, 8, 10]);
        assert_eq!(snap.to_density().unwrap(), n);
        assert!(snap.to_wigner().is_err());
    }
}
