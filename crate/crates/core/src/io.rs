//! Checkpoint files: a `CLAYER1` header line followed by a JSON body.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Parameters, State};
use crate::spectral::{Grid, SpectralField};

pub const MAGIC: &str = "CLAYER1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_x: usize,
    pub l_x: f64,
    pub n_y: usize,
    pub y_extent: f64,
}

impl GridSpec {
    pub fn of(grid: &Grid<f64>) -> Self {
        GridSpec {
            n_x: grid.n_x(),
            l_x: grid.l_x(),
            n_y: grid.n_y(),
            y_extent: grid.y_extent(),
        }
    }
}

/// A state with the parameters and step count it was produced with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub params: Parameters<f64>,
    pub grid: GridSpec,
    pub step: usize,
    pub t: f64,
    pub u: Vec<Complex<f64>>,
    pub b1: Vec<Complex<f64>>,
    pub ut: Vec<Complex<f64>>,
    pub b1t: Vec<Complex<f64>>,
}

impl Checkpoint {
    pub fn from_state(state: &State<f64>, params: &Parameters<f64>, step: usize) -> Self {
        Checkpoint {
            params: *params,
            grid: GridSpec::of(state.grid()),
            step,
            t: state.t,
            u: state.u.coeffs().to_vec(),
            b1: state.b1.coeffs().to_vec(),
            ut: state.ut.coeffs().to_vec(),
            b1t: state.b1t.coeffs().to_vec(),
        }
    }

    pub fn to_state(&self) -> Result<State<f64>> {
        let g = &self.grid;
        let grid = Grid::with_y_extent(g.n_x, g.l_x, g.n_y, g.y_extent)?;
        let field = |c: &Vec<Complex<f64>>| SpectralField::from_coeffs(&grid, c.clone());
        let state = State {
            u: field(&self.u)?,
            b1: field(&self.b1)?,
            ut: field(&self.ut)?,
            b1t: field(&self.b1t)?,
            t: self.t,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        serde_json::to_writer(&mut w, self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut header = String::new();
        r.read_line(&mut header)?;
        if header.trim_end() != MAGIC {
            return Err(Error::Checkpoint(format!(
                "bad header {:?}, expected {MAGIC}",
                header.trim_end()
            )));
        }
        let cp: Checkpoint =
            serde_json::from_reader(r).map_err(|e| Error::Checkpoint(e.to_string()))?;
        cp.params.validate()?;
        let expected = cp.grid.n_x * cp.grid.n_y;
        for (name, v) in [
            ("u", &cp.u),
            ("b1", &cp.b1),
            ("ut", &cp.ut),
            ("b1t", &cp.b1t),
        ] {
            if v.len() != expected {
                return Err(Error::Checkpoint(format!(
                    "{name} has {} coefficients, expected {expected}",
                    v.len()
                )));
            }
        }
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = Grid::new(16, 2.0 * std::f64::consts::PI, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = random_state(&grid, &mut rng, 0.1, 1.0);
        s.t = 0.1 + 0.2;
        let cp = Checkpoint::from_state(&s, &Parameters::unit(), 7);
        let mut buf = Vec::new();
        cp.write_to(&mut buf).unwrap();
        assert!(buf.starts_with(b"CLAYER1\n"));
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        assert_eq!(back, cp);
        let st = back.to_state().unwrap();
        assert_eq!(st.u.coeffs(), s.u.coeffs());
        assert_eq!(st.t.to_bits(), s.t.to_bits());
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(matches!(
            Checkpoint::read_from(&b"CLAYER2\n{}"[..]),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(
            Checkpoint::read_from(&b"CLAYER1\n{\"step\": 1}"[..]),
            Err(Error::Checkpoint(_))
        ));
        let grid = Grid::new(8, 1.0, 5).unwrap();
        let mut cp = Checkpoint::from_state(&State::zeros(&grid), &Parameters::unit(), 0);
        cp.u.pop();
        let mut buf = Vec::new();
        cp.write_to(&mut buf).unwrap();
        assert!(Checkpoint::read_from(&buf[..]).is_err());
    }
}
