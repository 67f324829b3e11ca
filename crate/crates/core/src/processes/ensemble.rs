use std::io::{Read, Write};

use crate::dependence::SampleMatrix;
use crate::error::{FellerError, Result};

/// Header of the columnar binary path format.
pub const PATH_MAGIC: &[u8; 16] = b"FELLERDEP-PATHS1";

/// `n_paths` simulated skeletons from a common start, stored path-major as
/// `states[(path * m + k) * d + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    master_seed: u64,
    start: Vec<f64>,
    grid: Vec<f64>,
    n_paths: usize,
    states: Vec<f64>,
    /// Subordinator values `N_t` for subordinated processes.
    clock: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub(crate) fn from_parts(
        master_seed: u64,
        start: Vec<f64>,
        grid: Vec<f64>,
        n_paths: usize,
        states: Vec<f64>,
        clock: Option<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(states.len(), n_paths * grid.len() * start.len());
        Self {
            master_seed,
            start,
            grid,
            n_paths,
            states,
            clock,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    /// Path `k` uses random stream `k`.
    pub fn stream_index(&self, path: usize) -> u64 {
        path as u64
    }

    /// `X_{t_k}` on path `path`.
    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let (m, d) = (self.grid.len(), self.dim());
        let at = (path * m + k) * d;
        &self.states[at..at + d]
    }

    pub fn clock(&self, path: usize, k: usize) -> Option<f64> {
        self.clock.as_ref().map(|c| c[path * self.grid.len() + k])
    }

    pub fn has_clock(&self) -> bool {
        self.clock.is_some()
    }

    /// The `n × d` sample of `X_{t_k}`.
    pub fn snapshot(&self, k: usize) -> SampleMatrix {
        self.stacked(&[k])
    }

    /// The `n × (d · |ks|)` sample of `(X_{t_k})_{k ∈ ks}` concatenated.
    pub fn stacked(&self, ks: &[usize]) -> SampleMatrix {
        let d = self.dim();
        let mut data = Vec::with_capacity(self.n_paths * d * ks.len());
        for p in 0..self.n_paths {
            for &k in ks {
                data.extend_from_slice(self.state(p, k));
            }
        }
        SampleMatrix::new(data, d * ks.len()).expect("rows are complete by construction")
    }

    /// Rows `path_id,t,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        write!(w, "path_id,t")?;
        for i in 1..=d {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for p in 0..self.n_paths {
            for (k, t) in self.grid.iter().enumerate() {
                write!(w, "{p},{t}")?;
                for v in self.state(p, k) {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Magic, then little-endian `seed, n_paths, m, d, has_clock` as `u64`,
    /// the start and grid, then one column of `n_paths` values per
    /// `(time, coordinate)` and, if present, one clock column per time.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let (m, d) = (self.grid.len(), self.dim());
        w.write_all(PATH_MAGIC)?;
        for v in [
            self.master_seed,
            self.n_paths as u64,
            m as u64,
            d as u64,
            self.clock.is_some() as u64,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.start.iter().chain(&self.grid) {
            w.write_all(&v.to_le_bytes())?;
        }
        for k in 0..m {
            for i in 0..d {
                for p in 0..self.n_paths {
                    w.write_all(&self.state(p, k)[i].to_le_bytes())?;
                }
            }
        }
        if self.clock.is_some() {
            for k in 0..m {
                for p in 0..self.n_paths {
                    w.write_all(&self.clock(p, k).unwrap_or(0.0).to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 16];
        r.read_exact(&mut magic)?;
        if &magic != PATH_MAGIC {
            return Err(FellerError::Format("bad magic header".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let seed = next_u64(&mut r)?;
        let n = next_u64(&mut r)? as usize;
        let m = next_u64(&mut r)? as usize;
        let d = next_u64(&mut r)? as usize;
        let has_clock = match next_u64(&mut r)? {
            0 => false,
            1 => true,
            other => return Err(FellerError::Format(format!("clock flag {other}"))),
        };
        let mut floats = |count: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; count * 8];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect())
        };
        let start = floats(d)?;
        let grid = floats(m)?;
        let columns = floats(n * m * d)?;
        let mut states = vec![0.0; n * m * d];
        for k in 0..m {
            for i in 0..d {
                let col = &columns[(k * d + i) * n..(k * d + i + 1) * n];
                for (p, v) in col.iter().enumerate() {
                    states[(p * m + k) * d + i] = *v;
                }
            }
        }
        let clock = if has_clock {
            let cols = floats(n * m)?;
            let mut c = vec![0.0; n * m];
            for k in 0..m {
                for p in 0..n {
                    c[p * m + k] = cols[k * n + p];
                }
            }
            Some(c)
        } else {
            None
        };
        Ok(Self::from_parts(seed, start, grid, n, states, clock))
    }
}
